//! JSON mesh files.
//!
//! ```json
//! {"vertices": [[x, y], ...],
//!  "cells": [[i0, i1, ...], ...],
//!  "boundary": {"neumann_rule": "x==1"}}
//! ```
//!
//! `boundary` may instead carry `{"neumann_faces": [[a, b], ...]}`, an
//! explicit list of Neumann edges given by their endpoint vertices. Boundary
//! faces not selected are Dirichlet.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundaryRule, FaceKind, Mesh};
use crate::{Point, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Rule { neumann_rule: String },
    Faces { neumann_faces: Vec<[usize; 2]> },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Faces { neumann_faces: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub boundary: BoundarySpec,
    /// Grid parameter of structured meshes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_h: Option<f64>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &Mesh) -> MeshFile {
        let boundary = match mesh.neumann_rule() {
            Some(rule) => BoundarySpec::Rule { neumann_rule: rule.to_string() },
            None => BoundarySpec::Faces {
                neumann_faces: mesh
                    .faces()
                    .iter()
                    .filter(|f| f.kind == FaceKind::Neumann)
                    .map(|f| f.vertices)
                    .collect(),
            },
        };
        MeshFile {
            vertices: mesh.vertices().to_vec(),
            cells: mesh.cells().to_vec(),
            boundary,
            nominal_h: mesh.nominal_h(),
        }
    }

    pub fn into_mesh(self) -> Result<Mesh> {
        let mut mesh = Mesh::from_polygons(self.vertices, self.cells)?;
        if let Some(h) = self.nominal_h {
            mesh = mesh.with_nominal_h(h);
        }
        match self.boundary {
            BoundarySpec::Rule { neumann_rule } => mesh.classify_with_rule(&BoundaryRule::parse(&neumann_rule)?),
            BoundarySpec::Faces { neumann_faces } => mesh.classify_with_faces(&neumann_faces),
        }
    }
}

impl Mesh {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeshFile::from_mesh(self))?)
    }

    pub fn from_json(text: &str) -> Result<Mesh> {
        serde_json::from_str::<MeshFile>(text)?.into_mesh()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Mesh> {
        Mesh::from_json(&std::fs::read_to_string(path)?)
    }
}
