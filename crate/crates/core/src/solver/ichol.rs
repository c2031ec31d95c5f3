//! Block incomplete Cholesky factorization with zero fill.
//!
//! The factor `L` keeps exactly the lower block pattern of `A`; products
//! that would fall outside it are dropped. Diagonal blocks are stored as
//! their dense lower Cholesky factors. If a pivot block is not positive
//! definite, the factorization is retried on `A + α·blockdiag(A)` with
//! growing `α`.

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub(super) struct BlockIc0 {
    bs: usize,
    /// Block column indices of block row `i`, ascending, ending with `i`.
    cols: Vec<Vec<usize>>,
    /// Row-major `bs × bs` blocks matching `cols`.
    blocks: Vec<Vec<f64>>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub(super) shift: f64,
}

fn block_of(a: &CsrMatrix, bs: usize, bi: usize, bj: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..bs {
        let i = bi * bs + r;
        let (lo, hi) = (a.row_ptr()[i], a.row_ptr()[i + 1]);
        let row = &a.col_idx()[lo..hi];
        let start = row.partition_point(|&c| (c as usize) < bj * bs);
        for k in lo + start..hi {
            let c = a.col_idx()[k] as usize;
            if c >= (bj + 1) * bs {
                break;
            }
            out[r * bs + (c - bj * bs)] = a.values()[k];
        }
    }
}

/// `out −= x · yᵀ` for `bs × bs` blocks.
fn sub_mul_transpose(out: &mut [f64], x: &[f64], y: &[f64], bs: usize) {
    for r in 0..bs {
        for c in 0..bs {
            let mut s = 0.0;
            for k in 0..bs {
                s += x[r * bs + k] * y[c * bs + k];
            }
            out[r * bs + c] -= s;
        }
    }
}

/// In-place dense Cholesky of a `bs × bs` block; upper part is zeroed.
fn cholesky_in_place(a: &mut [f64], bs: usize) -> bool {
    for j in 0..bs {
        let mut d = a[j * bs + j];
        for k in 0..j {
            d -= a[j * bs + k] * a[j * bs + k];
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        a[j * bs + j] = d;
        for i in j + 1..bs {
            let mut s = a[i * bs + j];
            for k in 0..j {
                s -= a[i * bs + k] * a[j * bs + k];
            }
            a[i * bs + j] = s / d;
        }
        for c in j + 1..bs {
            a[j * bs + c] = 0.0;
        }
    }
    true
}

/// `x ← x · L⁻ᵀ` for lower-triangular `l`, i.e. solve `X Lᵀ = S` row by row.
fn right_solve_transpose(x: &mut [f64], l: &[f64], bs: usize) {
    for r in 0..bs {
        for c in 0..bs {
            let mut s = x[r * bs + c];
            for k in 0..c {
                s -= x[r * bs + k] * l[c * bs + k];
            }
            x[r * bs + c] = s / l[c * bs + c];
        }
    }
}

impl BlockIc0 {
    pub(super) fn new(a: &CsrMatrix, bs: usize) -> Result<Self> {
        let nb = a.nrows() / bs;
        let cols: Vec<Vec<usize>> = (0..nb)
            .map(|bi| {
                let mut c: Vec<usize> = (0..bs)
                    .flat_map(|r| {
                        let i = bi * bs + r;
                        a.col_idx()[a.row_ptr()[i]..a.row_ptr()[i + 1]].iter().map(|&c| c as usize / bs)
                    })
                    .filter(|&bj| bj <= bi)
                    .collect();
                c.sort_unstable();
                c.dedup();
                if c.last() != Some(&bi) {
                    c.push(bi);
                }
                c
            })
            .collect();
        let mut shift = 0.0;
        loop {
            if let Some(blocks) = Self::factor(a, bs, &cols, shift) {
                return Ok(BlockIc0 { bs, cols, blocks, shift });
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 4.0 };
            if shift > 10.0 {
                return Err(Error::Indefinite("incomplete Cholesky broke down for every diagonal shift".into()));
            }
        }
    }

    fn factor(a: &CsrMatrix, bs: usize, cols: &[Vec<usize>], shift: f64) -> Option<Vec<Vec<f64>>> {
        let bb = bs * bs;
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
        let mut tmp = vec![0.0; bb];
        for (i, ci) in cols.iter().enumerate() {
            let mut row = vec![0.0; ci.len() * bb];
            for (p, &k) in ci.iter().enumerate() {
                block_of(a, bs, i, k, &mut tmp);
                let target = &mut row[p * bb..(p + 1) * bb];
                target.copy_from_slice(&tmp);
                if k == i && shift > 0.0 {
                    for d in 0..bs {
                        target[d * bs + d] *= 1.0 + shift;
                    }
                }
            }
            let last = ci.len() - 1;
            for (p, &k) in ci[..last].iter().enumerate() {
                // subtract Σ_{j < k} L_ij L_kjᵀ over the common pattern
                let ck = &cols[k];
                let lk = &blocks[k];
                let (mut x, mut y) = (0, 0);
                while x < p && y + 1 < ck.len() {
                    match ci[x].cmp(&ck[y]) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            let (head, tail) = row.split_at_mut(p * bb);
                            sub_mul_transpose(&mut tail[..bb], &head[x * bb..(x + 1) * bb], &lk[y * bb..(y + 1) * bb], bs);
                            x += 1;
                            y += 1;
                        }
                    }
                }
                let diag_k = &lk[(ck.len() - 1) * bb..];
                right_solve_transpose(&mut row[p * bb..(p + 1) * bb], diag_k, bs);
            }
            let (off, diag) = row.split_at_mut(last * bb);
            for x in 0..last {
                let l = &off[x * bb..(x + 1) * bb];
                sub_mul_transpose(diag, l, l, bs);
            }
            if !cholesky_in_place(diag, bs) {
                return None;
            }
            blocks.push(row);
        }
        Some(blocks)
    }

    /// `z = (L Lᵀ)⁻¹ r`.
    pub(super) fn apply(&self, r: &[f64], z: &mut [f64]) {
        let bs = self.bs;
        let bb = bs * bs;
        z.copy_from_slice(r);
        for (i, ci) in self.cols.iter().enumerate() {
            let li = &self.blocks[i];
            let last = ci.len() - 1;
            let (done, rest) = z.split_at_mut(i * bs);
            let zi = &mut rest[..bs];
            for (p, &k) in ci[..last].iter().enumerate() {
                let blk = &li[p * bb..(p + 1) * bb];
                let zk = &done[k * bs..(k + 1) * bs];
                for rr in 0..bs {
                    let mut s = 0.0;
                    for c in 0..bs {
                        s += blk[rr * bs + c] * zk[c];
                    }
                    zi[rr] -= s;
                }
            }
            let d = &li[last * bb..];
            for rr in 0..bs {
                let mut s = zi[rr];
                for c in 0..rr {
                    s -= d[rr * bs + c] * zi[c];
                }
                zi[rr] = s / d[rr * bs + rr];
            }
        }
        for (i, ci) in self.cols.iter().enumerate().rev() {
            let li = &self.blocks[i];
            let last = ci.len() - 1;
            let d = &li[last * bb..];
            let (before, rest) = z.split_at_mut(i * bs);
            let zi = &mut rest[..bs];
            for rr in (0..bs).rev() {
                let mut s = zi[rr];
                for c in rr + 1..bs {
                    s -= d[c * bs + rr] * zi[c];
                }
                zi[rr] = s / d[rr * bs + rr];
            }
            for (p, &k) in ci[..last].iter().enumerate() {
                let blk = &li[p * bb..(p + 1) * bb];
                let zk = &mut before[k * bs..(k + 1) * bs];
                for c in 0..bs {
                    let mut s = 0.0;
                    for rr in 0..bs {
                        s += blk[rr * bs + c] * zi[rr];
                    }
                    zk[c] -= s;
                }
            }
        }
    }
}
