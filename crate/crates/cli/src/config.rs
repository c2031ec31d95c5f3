//! Run configurations. Every command is fully described by one of these, and
//! the echo written next to its outputs replays it exactly.

use std::path::{Path, PathBuf};

use dlsfem::analysis::MeshKind;
use dlsfem::elasticity::{Example1Solution, ManufacturedSolution, MaterialParams, PolynomialSolution};
use dlsfem::mesh::{generate_unit_square_triangular, generate_voronoi_polygonal, BoundaryRule, Mesh};
use dlsfem::solver::SolverOptions;
use dlsfem::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    MeshGen(MeshGenConfig),
    Solve(SolveConfig),
    Converge(ConvergeConfig),
    PatchStats(PatchStatsConfig),
}

impl RunConfig {
    pub fn threads(&self) -> usize {
        match self {
            RunConfig::MeshGen(c) => c.threads,
            RunConfig::Solve(c) => c.threads,
            RunConfig::Converge(c) => c.threads,
            RunConfig::PatchStats(c) => c.threads,
        }
    }

    pub fn read(path: &Path) -> Result<RunConfig> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// A generated unit-square mesh. For Voronoi meshes `n` is the number of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedMesh {
    pub kind: MeshKind,
    pub n: usize,
    pub neumann_rule: String,
}

impl GeneratedMesh {
    pub fn build(&self) -> Result<Mesh> {
        let raw = match self.kind {
            MeshKind::Tri => generate_unit_square_triangular(self.n)?,
            MeshKind::Voronoi { lloyd, seed } => generate_voronoi_polygonal(self.n, lloyd, seed)?,
        };
        raw.classify_with_rule(&BoundaryRule::parse(&self.neumann_rule)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshSource {
    File(PathBuf),
    Generate(GeneratedMesh),
}

impl MeshSource {
    pub fn load(&self) -> Result<Mesh> {
        match self {
            MeshSource::File(path) => Mesh::read_json(path),
            MeshSource::Generate(g) => g.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// Smooth trigonometric solution with traction data on `x = 1`.
    Example1,
    /// Polynomial displacement of the chosen degree.
    Polynomial,
}

impl Problem {
    pub fn solution(&self, degree: usize, params: MaterialParams) -> Result<Box<dyn ManufacturedSolution>> {
        Ok(match self {
            Problem::Example1 => Box::new(Example1Solution::new(params)),
            Problem::Polynomial => Box::new(PolynomialSolution::new(degree, params)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshGenConfig {
    pub mesh: GeneratedMesh,
    pub out: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub mesh: MeshSource,
    pub degree: usize,
    pub lambda: f64,
    pub mu: f64,
    pub problem: Problem,
    pub solver: SolverOptions,
    pub out_dir: PathBuf,
    pub dump_system: Option<PathBuf>,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeConfig {
    pub study: dlsfem::analysis::ConvergenceConfig,
    pub csv: PathBuf,
    pub json: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchStatsConfig {
    pub mesh: PathBuf,
    pub degree: usize,
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: usize,
}

/// `report.csv` becomes `report.config.json`.
pub fn echo_path(output: &Path) -> PathBuf {
    output.with_extension("config.json")
}
