//! Clipped Voronoi meshes of the unit square.
//!
//! Each cell is obtained by clipping the square against the bisector
//! half-planes of the other seeds. Seeds are visited in rings of a uniform
//! bucket grid, and clipping stops once no remaining seed can be closer than
//! twice the current cell radius, since such a bisector cannot cut the cell.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{distance, polygon_centroid, Mesh};
use crate::{Error, Point, Result};

const COINCIDENT_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-10;

/// Random seeds relaxed by `n_lloyd` centroid sweeps, then clipped to the
/// unit square. Deterministic for a fixed `rng_seed`.
pub fn generate_voronoi_polygonal(n_seeds: usize, n_lloyd: usize, rng_seed: u64) -> Result<Mesh> {
    if n_seeds < 4 {
        return Err(Error::InvalidArgument(format!(
            "a Voronoi mesh needs at least 4 seeds, got {n_seeds}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<Point> = (0..n_seeds).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    voronoi_mesh_from_seeds(&seeds, n_lloyd)
}

/// Builds the clipped Voronoi mesh of explicit seeds after `n_lloyd`
/// relaxation sweeps.
pub fn voronoi_mesh_from_seeds(seeds: &[Point], n_lloyd: usize) -> Result<Mesh> {
    let mut seeds = seeds.to_vec();
    let mut cells = clipped_voronoi_cells(&seeds)?;
    for _ in 0..n_lloyd {
        seeds = cells.iter().map(|poly| polygon_centroid(poly)).collect();
        cells = clipped_voronoi_cells(&seeds)?;
    }
    mesh_from_cells(&cells)
}

/// Voronoi cells of `seeds` clipped to `[0,1]²`, one counterclockwise
/// polygon per seed.
pub fn clipped_voronoi_cells(seeds: &[Point]) -> Result<Vec<Vec<Point>>> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument("need at least two seeds".into()));
    }
    for (i, s) in seeds.iter().enumerate() {
        if !(0.0..=1.0).contains(&s[0]) || !(0.0..=1.0).contains(&s[1]) {
            return Err(Error::InvalidArgument(format!(
                "seed {i} at ({}, {}) lies outside the unit square",
                s[0], s[1]
            )));
        }
    }
    let grid = SeedGrid::new(seeds);
    grid.check_coincident(seeds)?;
    Ok((0..seeds.len()).map(|i| grid.clip_cell(seeds, i)).collect())
}

struct SeedGrid {
    size: usize,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(seeds: &[Point]) -> Self {
        let size = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); size * size];
        for (i, &s) in seeds.iter().enumerate() {
            let (bx, by) = Self::bucket_of(size, s);
            buckets[by * size + bx].push(i);
        }
        SeedGrid { size, buckets }
    }

    fn bucket_of(size: usize, p: Point) -> (usize, usize) {
        let b = |v: f64| ((v * size as f64) as usize).min(size - 1);
        (b(p[0]), b(p[1]))
    }

    /// Seeds in buckets at Chebyshev distance exactly `ring` from `center`.
    fn ring(&self, center: (usize, usize), ring: usize, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = (center.0 as isize, center.1 as isize);
        let r = ring as isize;
        let n = self.size as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()) != r {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= n || y >= n {
                    continue;
                }
                out.extend_from_slice(&self.buckets[(y * n + x) as usize]);
            }
        }
    }

    fn check_coincident(&self, seeds: &[Point]) -> Result<()> {
        let mut near = Vec::new();
        for (i, &s) in seeds.iter().enumerate() {
            let center = Self::bucket_of(self.size, s);
            for ring in 0..=1 {
                self.ring(center, ring, &mut near);
                if let Some(&j) = near
                    .iter()
                    .find(|&&j| j > i && distance(s, seeds[j]) <= COINCIDENT_TOL)
                {
                    return Err(Error::DegenerateSeeds { first: i, second: j });
                }
            }
        }
        Ok(())
    }

    fn clip_cell(&self, seeds: &[Point], i: usize) -> Vec<Point> {
        let s = seeds[i];
        let mut poly = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let width = 1.0 / self.size as f64;
        let center = Self::bucket_of(self.size, s);
        let mut candidates = Vec::new();
        for ring in 0..=self.size {
            self.ring(center, ring, &mut candidates);
            for &j in &candidates {
                if j != i {
                    poly = clip_by_bisector(&poly, s, seeds[j]);
                }
            }
            let radius = poly.iter().map(|&p| distance(p, s)).fold(0.0, f64::max);
            // every seed beyond this ring is at least ring * width away
            if ring as f64 * width >= 2.0 * radius {
                break;
            }
        }
        poly
    }
}

/// Keeps the part of `poly` closer to `own` than to `other`.
fn clip_by_bisector(poly: &[Point], own: Point, other: Point) -> Vec<Point> {
    let dir = [other[0] - own[0], other[1] - own[1]];
    let mid = [0.5 * (own[0] + other[0]), 0.5 * (own[1] + other[1])];
    let side = |p: Point| (p[0] - mid[0]) * dir[0] + (p[1] - mid[1]) * dir[1];
    let tol = 1e-14 * (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();

    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let (sp, sq) = (side(p), side(q));
        if sp <= tol {
            out.push(p);
        }
        if (sp > tol && sq < -tol) || (sp < -tol && sq > tol) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    dedup_ring(&mut out, 1e-14);
    out
}

fn dedup_ring(ring: &mut Vec<Point>, tol: f64) {
    ring.dedup_by(|a, b| distance(*a, *b) <= tol);
    while ring.len() > 1 && distance(ring[0], ring[ring.len() - 1]) <= tol {
        ring.pop();
    }
}

fn snap_to_square(p: Point) -> Point {
    let snap = |v: f64| {
        if v.abs() <= 1e-13 {
            0.0
        } else if (v - 1.0).abs() <= 1e-13 {
            1.0
        } else {
            v
        }
    };
    [snap(p[0]), snap(p[1])]
}

/// Merges coincident polygon corners into shared vertices and builds the mesh.
fn mesh_from_cells(polys: &[Vec<Point>]) -> Result<Mesh> {
    let bucket = 1e-8;
    let key = |p: Point| ((p[0] / bucket).floor() as i64, (p[1] / bucket).floor() as i64);
    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::with_capacity(polys.len());

    for poly in polys {
        let mut cell: Vec<usize> = Vec::with_capacity(poly.len());
        for &raw in poly {
            let p = snap_to_square(raw);
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = lookup.get(&(kx + dx, ky + dy)) {
                        if let Some(&v) = ids.iter().find(|&&v| distance(vertices[v], p) <= MERGE_TOL) {
                            found = Some(v);
                            break 'search;
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push(p);
                lookup.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            cell.push(v);
        }
        cell.dedup();
        while cell.len() > 1 && cell[0] == cell[cell.len() - 1] {
            cell.pop();
        }
        cells.push(cell);
    }
    Mesh::from_polygons(vertices, cells)
}
