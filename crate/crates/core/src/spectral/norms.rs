//! Sup, Hoelder, Sobolev and L2 norms on grid data.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::Field;
use super::grid::Grid;
use super::ops::{self, Vector};
use crate::error::{Error, Result};
use crate::linalg;

/// Default offset shell radius, in grid cells, for Hoelder quotients.
pub const SHELL: usize = 4;

/// Highest spatial derivative order accepted by [`holder_norm`].
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormReport {
    pub c_tx: f64,
    pub c_tx_1: f64,
    pub holder: BTreeMap<String, f64>,
    pub l2: Vec<f64>,
}

/// Pointwise magnitude of a multi-component slice: absolute value for
/// scalars, Euclidean length for vectors, operator norm for symmetric tensors.
pub fn magnitude(comps: &[Vec<f64>]) -> Vec<f64> {
    let n = comps[0].len();
    match comps.len() {
        1 => comps[0].iter().map(|v| v.abs()).collect(),
        3 => (0..n)
            .map(|p| (comps[0][p].powi(2) + comps[1][p].powi(2) + comps[2][p].powi(2)).sqrt())
            .collect(),
        6 => (0..n)
            .map(|p| linalg::op_norm(&[comps[0][p], comps[1][p], comps[2][p], comps[3][p], comps[4][p], comps[5][p]]))
            .collect(),
        _ => (0..n).map(|p| comps.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt()).collect(),
    }
}

pub fn sup(comps: &[Vec<f64>]) -> f64 {
    magnitude(comps).into_iter().fold(0.0, f64::max)
}

/// Sup norm with the flat index of the maximiser.
pub fn sup_at(comps: &[Vec<f64>]) -> (f64, usize) {
    magnitude(comps)
        .into_iter()
        .enumerate()
        .fold((0.0, 0), |(m, i), (j, v)| if v > m { (v, j) } else { (m, i) })
}

pub fn sup_scalar(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_vec(v: &Vector) -> f64 {
    sup(&v[..])
}

/// `(int |f|^2 dx)^{1/2}` over the torus of volume `(2 pi)^3`.
pub fn l2(comps: &[Vec<f64>]) -> f64 {
    let n = comps[0].len() as f64;
    let s: f64 = comps.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum();
    ((2.0 * PI).powi(3) * s / n).sqrt()
}

/// Homogeneous Sobolev norm from spectra in the grid convention:
/// `(2 pi)^{3/2} (sum_{k != 0} |k|^{2s} |f_k|^2)^{1/2}`.
pub fn hdot(grid: &Grid, specs: &[&[Complex64]], s: f64) -> f64 {
    let mut acc = 0.0;
    grid.for_each_mode(|i, k, _| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let w = k2.powf(s);
            for sp in specs {
                acc += w * sp[i].norm_sqr();
            }
        }
    });
    (2.0 * PI).powf(1.5) * acc.sqrt()
}

fn offsets(grid: &Grid, shell: usize) -> Vec<([usize; 3], f64)> {
    let dims = grid.dims();
    let r = shell as i64;
    let mut out = Vec::new();
    let range = |a: usize| if dims[a] > 1 { -r..=r } else { 0..=0 };
    for dz in range(2) {
        for dy in range(1) {
            for dx in range(0) {
                let d = [dx, dy, dz];
                if dx * dx + dy * dy + dz * dz > r * r {
                    continue;
                }
                // Keep one of each +-d pair.
                let first = d.iter().find(|&&c| c != 0);
                match first {
                    Some(&c) if c > 0 => {}
                    _ => continue,
                }
                let dist = (0..3)
                    .map(|a| (d[a] as f64 * grid.spacing(a)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let shift = [0, 1, 2].map(|a| d[a].rem_euclid(dims[a] as i64) as usize);
                out.push((shift, dist));
            }
        }
    }
    out
}

/// Grid Hoelder seminorm `sup |f(x) - f(y)| / |x - y|^alpha` over pairs with
/// `0 < |x - y| <= shell` cells. Multi-component data uses the magnitude of
/// the difference.
pub fn holder_seminorm(grid: &Grid, comps: &[Vec<f64>], alpha: f64, shell: usize) -> f64 {
    let [nx, ny, nz] = grid.dims();
    let mut best: f64 = 0.0;
    let mut diff = vec![0.0; comps.len()];
    for (shift, dist) in offsets(grid, shell) {
        let w = dist.powf(-alpha);
        for iz in 0..nz {
            let jz = (iz + shift[2]) % nz;
            for iy in 0..ny {
                let jy = (iy + shift[1]) % ny;
                let row_a = (iz * ny + iy) * nx;
                let row_b = (jz * ny + jy) * nx;
                for ix in 0..nx {
                    let jx = (ix + shift[0]) % nx;
                    let (pa, pb) = (row_a + ix, row_b + jx);
                    for (c, d) in comps.iter().zip(diff.iter_mut()) {
                        *d = c[pb] - c[pa];
                    }
                    let m = magnitude_small(&diff);
                    if m * w > best {
                        best = m * w;
                    }
                }
            }
        }
    }
    best
}

fn magnitude_small(d: &[f64]) -> f64 {
    match d.len() {
        1 => d[0].abs(),
        6 => linalg::op_norm(&[d[0], d[1], d[2], d[3], d[4], d[5]]),
        _ => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// All spatial derivatives of order `order` of every component; returned as
/// one multi-component list per multi-index.
fn derivatives(grid: &Grid, comps: &[Vec<f64>], order: usize) -> Vec<Vec<Vec<f64>>> {
    if order == 0 {
        return vec![comps.to_vec()];
    }
    let mut multi: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..order {
        let mut next = Vec::new();
        for m in &multi {
            let start = m.last().copied().unwrap_or(0);
            for a in start..3 {
                let mut mm = m.clone();
                mm.push(a);
                next.push(mm);
            }
        }
        multi = next;
    }
    let dims = grid.dims();
    multi.retain(|m| m.iter().all(|&a| dims[a] > 1));
    let specs: Vec<Vec<Complex64>> = comps.iter().map(|c| grid.fft_real(c)).collect();
    multi
        .iter()
        .map(|m| {
            specs
                .iter()
                .map(|s| {
                    let mut d = s.clone();
                    grid.for_each_mode(|i, k, nq| {
                        let mut f = Complex64::new(1.0, 0.0);
                        for &a in m {
                            f *= Complex64::new(0.0, k[a]);
                        }
                        d[i] = if nq { Complex64::new(0.0, 0.0) } else { d[i] * f };
                    });
                    grid.ifft_real(d)
                })
                .collect()
        })
        .collect()
}

/// `[f]_{C^j} = max_{|beta| = j} sup |D^beta f|`.
pub fn integer_seminorm(grid: &Grid, comps: &[Vec<f64>], j: usize) -> f64 {
    derivatives(grid, comps, j).iter().map(|d| sup(d)).fold(0.0, f64::max)
}

/// Hoelder norm of order `s = N + alpha` on one slice, assembled as
/// `sum_{j <= N} [f]_{C^j} + [f]_{C^{N + alpha}}`.
pub fn holder_norm(grid: &Grid, comps: &[Vec<f64>], s: f64, shell: usize) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Config(format!("negative Hoelder order {s}")));
    }
    let n = s.floor() as usize;
    let alpha = s - n as f64;
    if n > MAX_ORDER || grid.dims().iter().all(|&d| d < 4) {
        return Err(Error::Resolution(format!("Hoelder order {s} too high for {grid:?}")));
    }
    let mut total = 0.0;
    for j in 0..=n {
        total += integer_seminorm(grid, comps, j);
    }
    if alpha > 0.0 {
        let top = derivatives(grid, comps, n)
            .iter()
            .map(|d| holder_seminorm(grid, d, alpha, shell))
            .fold(0.0, f64::max);
        total += top;
    }
    Ok(total)
}

/// Seminorm `[f]_{C^s}` alone (integer or fractional order).
pub fn holder_seminorm_order(grid: &Grid, comps: &[Vec<f64>], s: f64, shell: usize) -> Result<f64> {
    let n = s.floor() as usize;
    let alpha = s - n as f64;
    if n > MAX_ORDER {
        return Err(Error::Resolution(format!("Hoelder order {s} too high for {grid:?}")));
    }
    if alpha == 0.0 {
        return Ok(integer_seminorm(grid, comps, n));
    }
    Ok(derivatives(grid, comps, n)
        .iter()
        .map(|d| holder_seminorm(grid, d, alpha, shell))
        .fold(0.0, f64::max))
}

/// Norm report of a time-sampled field.
pub fn norm_report(grid: &Grid, f: &Field, orders: &[f64]) -> Result<NormReport> {
    let nt = f.times.len();
    let mut c_tx: f64 = 0.0;
    let mut spatial1: f64 = 0.0;
    let mut l2s = Vec::with_capacity(nt);
    for s in &f.slices {
        c_tx = c_tx.max(sup(s));
        l2s.push(l2(s));
    }
    // sup of d_t f plus the sups of each d_i f
    let mut grad_sups = [0.0f64; 3];
    for s in &f.slices {
        let d = derivatives(grid, s, 1);
        for (a, da) in d.iter().enumerate() {
            grad_sups[a] = grad_sups[a].max(sup(da));
        }
    }
    spatial1 += grad_sups.iter().sum::<f64>();
    let mut dt_sup: f64 = 0.0;
    if nt >= 2 {
        for i in 0..nt {
            let (a, b) = if i == 0 { (0, 1) } else if i == nt - 1 { (nt - 2, nt - 1) } else { (i - 1, i + 1) };
            let h = f.times[b] - f.times[a];
            let d: Vec<Vec<f64>> = f.slices[b]
                .iter()
                .zip(&f.slices[a])
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) / h).collect())
                .collect();
            dt_sup = dt_sup.max(sup(&d));
        }
    }
    let mut holder = BTreeMap::new();
    for &s in orders {
        let mut m: f64 = 0.0;
        for sl in &f.slices {
            m = m.max(holder_norm(grid, sl, s, SHELL)?);
        }
        holder.insert(format!("{s}"), m);
    }
    Ok(NormReport { c_tx, c_tx_1: c_tx + dt_sup + spatial1, holder, l2: l2s })
}

/// `sup_x |f - mean f|` helper used by the invariant checks.
pub fn sup_minus_mean(f: &[f64]) -> f64 {
    let m = ops::mean(f);
    f.iter().fold(0.0, |a, v| a.max((v - m).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_x3_norms() {
        let g = Grid::cubic(16).unwrap();
        let f: Vec<f64> = g.coords()[2].iter().map(|z| z.sin()).collect();
        let comps = vec![f];
        assert!((sup(&comps) - 1.0).abs() < 1e-15);
        assert!((integer_seminorm(&g, &comps, 1) - 1.0).abs() < 1e-14);
        assert!((holder_norm(&g, &comps, 0.0, SHELL).unwrap() - 1.0).abs() < 1e-15);
        assert!(holder_norm(&g, &comps, 4.5, SHELL).is_err());
    }

    #[test]
    fn l2_of_constant() {
        let c = vec![vec![1.0; 64]];
        assert!((l2(&c) - (2.0 * PI).powf(1.5)).abs() < 1e-12);
    }
}
