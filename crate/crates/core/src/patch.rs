//! Element patches.
//!
//! The patch of element `K` starts as `{K}` and is grown by whole layers of
//! face neighbours until it holds at least the threshold number of
//! elements. The gathered candidates are then sorted by the distance of
//! their barycenters to the barycenter of `K` (ties broken by ascending
//! element id) and the nearest `threshold` are kept.

use rayon::prelude::*;

use crate::mesh::{distance, Mesh};
use crate::{Error, Point, Result};

/// Default patch cardinalities for degrees 1 through 5 in two dimensions.
pub const PATCH_SIZES_2D: [usize; 5] = [4, 8, 13, 19, 26];

/// Number of elements in a patch for polynomial degree `m`.
pub fn default_patch_size(m: usize) -> Result<usize> {
    if (1..=PATCH_SIZES_2D.len()).contains(&m) {
        Ok(PATCH_SIZES_2D[m - 1])
    } else {
        Err(Error::InvalidArgument(format!(
            "no default patch size for degree {m}; supported degrees are 1 to 5"
        )))
    }
}

/// Dimension of the bivariate polynomials of total degree `m`.
pub fn polynomial_dim(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementPatch {
    pub center: usize,
    /// Patch elements sorted by barycenter distance; `members[0] == center`.
    pub members: Vec<usize>,
    /// Collocation points (barycenters) of `members`, in the same order.
    pub points: Vec<Point>,
    pub threshold: usize,
    /// Number of neighbour layers added before the threshold was reached.
    pub layers: usize,
}

impl ElementPatch {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.members.contains(&element)
    }
}

/// Grows `{center}` by face-neighbour layers until it holds at least
/// `threshold` elements. Returns the candidates in insertion order and the
/// number of layers added.
pub fn grow_candidates(mesh: &Mesh, center: usize, threshold: usize) -> Result<(Vec<usize>, usize)> {
    if threshold == 0 {
        return Err(Error::InvalidArgument("patch threshold must be at least 1".into()));
    }
    if center >= mesh.num_cells() {
        return Err(Error::InvalidArgument(format!("element {center} out of range")));
    }
    let mut in_set = vec![false; mesh.num_cells()];
    in_set[center] = true;
    let mut members = vec![center];
    let mut frontier = vec![center];
    let mut layers = 0;
    while members.len() < threshold {
        let mut next = Vec::new();
        for &k in &frontier {
            for &nb in mesh.neighbors(k) {
                if !in_set[nb] {
                    in_set[nb] = true;
                    next.push(nb);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::PatchTooLarge {
                element: center,
                threshold,
                reachable: members.len(),
            });
        }
        members.extend_from_slice(&next);
        frontier = next;
        layers += 1;
    }
    Ok((members, layers))
}

pub fn build_patch(mesh: &Mesh, center: usize, threshold: usize) -> Result<ElementPatch> {
    let (mut candidates, layers) = grow_candidates(mesh, center, threshold)?;
    let origin = mesh.barycenter(center);
    let dist: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&k| (distance(mesh.barycenter(k), origin), k))
        .collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| dist[a].0.total_cmp(&dist[b].0).then(dist[a].1.cmp(&dist[b].1)));
    candidates = order.iter().take(threshold).map(|&i| candidates[i]).collect();
    let points = candidates.iter().map(|&k| mesh.barycenter(k)).collect();
    Ok(ElementPatch {
        center,
        members: candidates,
        points,
        threshold,
        layers,
    })
}

/// Patches of every element, indexed by element id.
pub fn build_all_patches(mesh: &Mesh, threshold: usize) -> Result<Vec<ElementPatch>> {
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|k| build_patch(mesh, k, threshold))
        .collect()
}
