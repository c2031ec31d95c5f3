//! `dlsfem`: mesh generation, solves, convergence studies and patch
//! diagnostics. Exit codes: 0 success, 2 invalid input, 3 numerical failure,
//! 4 I/O failure.

mod config;
mod vtk;

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlsfem::analysis::{convergence_study, dof_count, solve_problem, ConvergenceConfig, MeshKind};
use dlsfem::elasticity::MaterialParams;
use dlsfem::mesh::Mesh;
use dlsfem::patch::{build_all_patches, default_patch_size};
use dlsfem::reconstruct::{check_unisolvence, estimate_lambda};
use dlsfem::solver::{Preconditioner, SolverOptions};
use dlsfem::{Error, ErrorKind, Result};
use serde::Serialize;

use config::*;

#[derive(Parser)]
#[command(name = "dlsfem", version, about = "Discontinuous least-squares elasticity on patch-reconstruction spaces")]
struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "DLSFEM_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a unit-square mesh and write it as JSON.
    MeshGen {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem and write a summary, a VTK file and a config echo.
    Solve {
        /// Mesh JSON file; generated from --kind/--n when absent.
        #[arg(long, conflicts_with = "n")]
        mesh_file: Option<PathBuf>,
        #[command(flatten)]
        mesh: OptionalMeshArgs,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, value_enum, default_value_t = Problem::Example1)]
        problem: Problem,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Write the assembled matrix in coordinate format.
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// Convergence study of the smooth example over a mesh sequence.
    Converge {
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, value_enum, default_value_t = Kind::Tri)]
        mesh: Kind,
        /// Grid sizes for tri meshes, cell counts for Voronoi meshes.
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        lloyd: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        /// JSON mirror of the report; defaults to the CSV path with a .json extension.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Per-element patch diagnostics.
    PatchStats {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Samples per element for the stability constant estimate.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "patch_stats.csv")]
        out: PathBuf,
    },
    /// Re-run a command from its config echo.
    Replay {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Tri,
    Voronoi,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, value_enum, default_value_t = Kind::Tri)]
    kind: Kind,
    /// Grid size for tri meshes, seed count for Voronoi meshes.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    lloyd: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Boundary faces matching this rule get traction data: none, all, x==c or y==c.
    #[arg(long, default_value = "x==1")]
    neumann_rule: String,
}

#[derive(Args)]
struct OptionalMeshArgs {
    #[arg(long, value_enum, default_value_t = Kind::Tri)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 20)]
    lloyd: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "x==1")]
    neumann_rule: String,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = Pc::BlockIc0)]
    preconditioner: Pc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pc {
    Jacobi,
    BlockJacobi,
    BlockSgs,
    BlockIc0,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        let preconditioner = match self.preconditioner {
            Pc::Jacobi => Preconditioner::Jacobi,
            Pc::BlockJacobi => Preconditioner::BlockJacobi,
            Pc::BlockSgs => Preconditioner::BlockSgs,
            Pc::BlockIc0 => Preconditioner::BlockIc0,
        };
        SolverOptions { tol: self.tol, max_iter: self.max_iter, preconditioner }
    }
}

fn mesh_kind(kind: Kind, lloyd: usize, seed: u64) -> MeshKind {
    match kind {
        Kind::Tri => MeshKind::Tri,
        Kind::Voronoi => MeshKind::Voronoi { lloyd, seed },
    }
}

fn resolve_threads(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

fn build_config(command: Command, threads: usize) -> Result<RunConfig> {
    Ok(match command {
        Command::MeshGen { mesh, out } => RunConfig::MeshGen(MeshGenConfig {
            mesh: GeneratedMesh { kind: mesh_kind(mesh.kind, mesh.lloyd, mesh.seed), n: mesh.n, neumann_rule: mesh.neumann_rule },
            out,
            threads,
        }),
        Command::Solve { mesh_file, mesh, degree, lambda, mu, problem, solver, out_dir, dump_system } => {
            let source = match (mesh_file, mesh.n) {
                (Some(path), _) => MeshSource::File(path),
                (None, Some(n)) => MeshSource::Generate(GeneratedMesh {
                    kind: mesh_kind(mesh.kind, mesh.lloyd, mesh.seed),
                    n,
                    neumann_rule: mesh.neumann_rule,
                }),
                (None, None) => return Err(Error::InvalidArgument("solve needs --mesh-file or --n".into())),
            };
            RunConfig::Solve(SolveConfig {
                mesh: source,
                degree,
                lambda,
                mu,
                problem,
                solver: solver.options(),
                out_dir,
                dump_system,
                threads,
            })
        }
        Command::Converge { degree, lambda, mu, mesh, levels, lloyd, seed, solver, out, json } => {
            let json = json.unwrap_or_else(|| out.with_extension("json"));
            RunConfig::Converge(ConvergeConfig {
                study: ConvergenceConfig { degree, lambda, mu, mesh: mesh_kind(mesh, lloyd, seed), levels, solver: solver.options() },
                csv: out,
                json,
                threads,
            })
        }
        Command::PatchStats { mesh, degree, samples, seed, out } => {
            RunConfig::PatchStats(PatchStatsConfig { mesh, degree, samples, seed, out, threads })
        }
        Command::Replay { config } => RunConfig::read(&config)?,
    })
}

fn run(config: &RunConfig) -> Result<()> {
    match config {
        RunConfig::MeshGen(c) => mesh_gen(c),
        RunConfig::Solve(c) => solve(c),
        RunConfig::Converge(c) => converge(c),
        RunConfig::PatchStats(c) => patch_stats(c),
    }?;
    Ok(())
}

fn mesh_gen(c: &MeshGenConfig) -> Result<()> {
    let mesh = c.mesh.build()?;
    mesh.write_json(&c.out)?;
    RunConfig::MeshGen(c.clone()).write(&echo_path(&c.out))?;
    println!("wrote {} cells, {} faces to {}", mesh.num_cells(), mesh.num_faces(), c.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    cells: usize,
    dofs: usize,
    h_max: f64,
    degree: usize,
    iterations: usize,
    relative_residual: f64,
    method: String,
    errors: dlsfem::analysis::ErrorSummary,
}

fn solve(c: &SolveConfig) -> Result<()> {
    let params = MaterialParams::new(c.lambda, c.mu)?;
    c.solver.validate()?;
    let mesh = c.mesh.load()?;
    let exact = c.problem.solution(c.degree, params)?;
    let start = Instant::now();
    let out = solve_problem(&mesh, c.degree, exact.as_ref(), &c.solver)?;
    std::fs::create_dir_all(&c.out_dir)?;
    if let Some(path) = &c.dump_system {
        out.system.matrix.write_coordinate(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    }
    let summary = SolveSummary {
        cells: mesh.num_cells(),
        dofs: dof_count(&mesh),
        h_max: mesh.h_max(),
        degree: c.degree,
        iterations: out.report.iterations,
        relative_residual: out.report.relative_residual,
        method: out.report.method.clone(),
        errors: out.errors,
    };
    std::fs::write(c.out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    std::fs::write(c.out_dir.join("solution.vtk"), vtk::cell_data_vtk(&mesh, &out.solution))?;
    RunConfig::Solve(c.clone()).write(&c.out_dir.join("config.json"))?;
    println!(
        "{} cells, {} dofs: {} iterations, residual {:.2e}, J_h^1/2 {:.4e}, L2 sigma {:.4e}, L2 u {:.4e} ({:.2}s)",
        summary.cells,
        summary.dofs,
        summary.iterations,
        summary.relative_residual,
        summary.errors.jh_sqrt,
        summary.errors.l2_sigma,
        summary.errors.l2_u,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn converge(c: &ConvergeConfig) -> Result<()> {
    let report = convergence_study(&c.study)?;
    report.write_csv(&c.csv)?;
    report.write_json(&c.json)?;
    RunConfig::Converge(c.clone()).write(&echo_path(&c.csv))?;
    print!("{}", report.to_csv());
    Ok(())
}

/// Largest face-graph distance from the center to a patch member.
fn graph_radius(mesh: &Mesh, center: usize, members: &[usize]) -> usize {
    let mut depth = vec![usize::MAX; mesh.num_cells()];
    depth[center] = 0;
    let mut queue = VecDeque::from([center]);
    let mut remaining = members.len() - 1;
    let mut radius = 0;
    while let Some(k) = queue.pop_front() {
        if remaining == 0 {
            break;
        }
        for &j in mesh.neighbors(k) {
            if depth[j] == usize::MAX {
                depth[j] = depth[k] + 1;
                if members.contains(&j) {
                    remaining -= 1;
                    radius = depth[j];
                }
                queue.push_back(j);
            }
        }
    }
    radius
}

/// Cardinality, layers, graph radius, condition number and stability estimate.
type PatchRow = (usize, usize, usize, f64, Option<f64>);

fn patch_stats(c: &PatchStatsConfig) -> Result<()> {
    use rayon::prelude::*;
    let mesh = Mesh::read_json(&c.mesh)?;
    let patches = build_all_patches(&mesh, default_patch_size(c.degree)?)?;
    let rows: Vec<Result<PatchRow>> = patches
        .par_iter()
        .map(|p| {
            let check = check_unisolvence(p, c.degree);
            let lambda = match check.is_unisolvent() {
                true => Some(estimate_lambda(&mesh, p, c.degree, c.samples, c.seed)?),
                false => None,
            };
            Ok((p.len(), p.layers, graph_radius(&mesh, p.center, &p.members), check.condition, lambda))
        })
        .collect();
    let mut csv = String::from("element,cardinality,layers,graph_radius,condition,lambda\n");
    let (mut max_radius, mut max_cond, mut max_lambda, mut failures) = (0, 0.0f64, 0.0f64, 0);
    let mut card = (usize::MAX, 0);
    for (k, row) in rows.into_iter().enumerate() {
        let (len, layers, radius, cond, lambda) = row?;
        let lambda_text = lambda.map(|l| format!("{l:e}")).unwrap_or_default();
        let _ = writeln!(csv, "{k},{len},{layers},{radius},{cond:e},{lambda_text}");
        card = (card.0.min(len), card.1.max(len));
        max_radius = max_radius.max(radius);
        max_cond = max_cond.max(cond);
        match lambda {
            Some(l) => max_lambda = max_lambda.max(l),
            None => failures += 1,
        }
    }
    std::fs::write(&c.out, csv)?;
    RunConfig::PatchStats(c.clone()).write(&echo_path(&c.out))?;
    println!(
        "{} elements, degree {}: patch size {}..{}, max graph radius {}, max condition {:.3e}, max Lambda {:.3}, {} not unisolvent",
        mesh.num_cells(),
        c.degree,
        card.0,
        card.1,
        max_radius,
        max_cond,
        max_lambda,
        failures
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli.command, resolve_threads(cli.threads)).and_then(|config| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads())
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        run(&config)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
