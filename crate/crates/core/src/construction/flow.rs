//! Flow maps `Phi_j = x + psi_j` transported by the mollified velocity and
//! anchored at `t = j l`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::spectral::ops::{self, zero_vector};
use crate::spectral::{norms, Grid, Vector};

/// Largest admissible `|u| k_max |h|` for one RK4 step.
pub const STEP_LIMIT: f64 = 2.5;

/// Velocity samples on consecutive indices `n0, n0 + 1, ...`, interpolated
/// in time by 4-point Lagrange stencils.
#[derive(Debug, Clone)]
pub struct VelocityTrack {
    pub dt: f64,
    pub n0: i64,
    samples: VecDeque<Vector>,
    sups: VecDeque<f64>,
}

impl VelocityTrack {
    pub fn new(dt: f64, n0: i64) -> VelocityTrack {
        VelocityTrack { dt, n0, samples: VecDeque::new(), sups: VecDeque::new() }
    }

    pub fn n_end(&self) -> i64 {
        self.n0 + self.samples.len() as i64
    }

    pub fn push(&mut self, u: Vector) {
        self.sups.push_back(norms::sup_vec(&u));
        self.samples.push_back(u);
    }

    /// Drop samples below `n`.
    pub fn trim_below(&mut self, n: i64) {
        while self.n0 < n && !self.samples.is_empty() {
            self.samples.pop_front();
            self.sups.pop_front();
            self.n0 += 1;
        }
    }

    pub fn sample(&self, n: i64) -> &Vector {
        let i = (n - self.n0).clamp(0, self.samples.len() as i64 - 1);
        &self.samples[i as usize]
    }

    pub fn sup(&self) -> f64 {
        self.sups.iter().fold(0.0, |m, v| m.max(*v))
    }

    /// `u(t)`; exact at samples, cubic in between, with the stencil shifted
    /// inside the stored range near its ends.
    pub fn at(&self, t: f64) -> Vector {
        let x = t / self.dt;
        let r = x.round();
        if (x - r).abs() < 1e-9 {
            return self.sample(r as i64).clone();
        }
        let len = self.samples.len() as i64;
        let base = x.floor() as i64 - 1;
        let base = base.clamp(self.n0, self.n0 + len - 4);
        let xs: Vec<f64> = (0..4).map(|i| (base + i) as f64).collect();
        let w: Vec<f64> = (0..4)
            .map(|i| {
                (0..4).filter(|&k| k != i).map(|k| (x - xs[k]) / (xs[i] - xs[k])).product::<f64>()
            })
            .collect();
        let mut out = zero_vector(self.samples[0][0].len());
        for i in 0..4 {
            ops::vec_axpy(&mut out, w[i], self.sample(base + i as i64));
        }
        out
    }
}

/// `-u - (u . grad) psi`.
fn rhs(grid: &Grid, u: &Vector, psi: &Vector) -> Vector {
    let g = ops::vector_gradient(grid, psi);
    let mut out = ops::advect(u, &g);
    for c in 0..3 {
        for (o, v) in out[c].iter_mut().zip(&u[c]) {
            *o = -*o - v;
        }
    }
    out
}

fn rk4(grid: &Grid, track: &VelocityTrack, t: f64, h: f64, psi: &Vector) -> Vector {
    let u0 = track.at(t);
    let um = track.at(t + 0.5 * h);
    let u1 = track.at(t + h);
    let k1 = rhs(grid, &u0, psi);
    let mut y = psi.clone();
    ops::vec_axpy(&mut y, 0.5 * h, &k1);
    let k2 = rhs(grid, &um, &y);
    let mut y = psi.clone();
    ops::vec_axpy(&mut y, 0.5 * h, &k2);
    let k3 = rhs(grid, &um, &y);
    let mut y = psi.clone();
    ops::vec_axpy(&mut y, h, &k3);
    let k4 = rhs(grid, &u1, &y);
    let mut out = psi.clone();
    ops::vec_axpy(&mut out, h / 6.0, &k1);
    ops::vec_axpy(&mut out, h / 3.0, &k2);
    ops::vec_axpy(&mut out, h / 3.0, &k3);
    ops::vec_axpy(&mut out, h / 6.0, &k4);
    out
}

fn kmax(grid: &Grid) -> f64 {
    (0..3).map(|a| (grid.dims()[a] / 2) as f64).fold(0.0, f64::max)
}

/// `psi_j = Phi_j - x` for the flow anchored at `anchor`, sampled on the
/// indices `lo..=hi`, by RK4 steps of `dt` outward from the anchor.
pub fn trace(grid: &Grid, track: &VelocityTrack, anchor: f64, lo: i64, hi: i64) -> Result<Vec<Vector>> {
    let dt = track.dt;
    let limit = track.sup() * kmax(grid) * dt;
    if limit > STEP_LIMIT {
        return Err(Error::Resolution(format!(
            "flow step too large: |u| k_max dt = {limit:.3} exceeds {STEP_LIMIT}"
        )));
    }
    let len = grid.len();
    let count = (hi - lo + 1).max(0) as usize;
    let mut out: Vec<Option<Vector>> = vec![None; count];
    let x = anchor / dt;
    let on_sample = (x - x.round()).abs() < 1e-9;
    let (first_up, first_down) = if on_sample {
        let n = x.round() as i64;
        (n, n)
    } else {
        (x.ceil() as i64, x.floor() as i64)
    };
    let store = |out: &mut Vec<Option<Vector>>, n: i64, v: &Vector| {
        if n >= lo && n <= hi {
            out[(n - lo) as usize] = Some(v.clone());
        }
    };
    // forward
    if hi >= first_up {
        let mut psi = zero_vector(len);
        let mut t = anchor;
        let mut n = first_up;
        let h0 = n as f64 * dt - t;
        if h0 > 0.0 {
            psi = rk4(grid, track, t, h0, &psi);
        }
        t = n as f64 * dt;
        store(&mut out, n, &psi);
        while n < hi {
            psi = rk4(grid, track, t, dt, &psi);
            n += 1;
            t = n as f64 * dt;
            store(&mut out, n, &psi);
        }
    }
    // backward
    if lo <= first_down {
        let mut psi = zero_vector(len);
        let mut n = first_down;
        let h0 = n as f64 * dt - anchor;
        if h0 < 0.0 {
            psi = rk4(grid, track, anchor, h0, &psi);
        }
        let mut t = n as f64 * dt;
        store(&mut out, n, &psi);
        while n > lo {
            psi = rk4(grid, track, t, -dt, &psi);
            n -= 1;
            t = n as f64 * dt;
            store(&mut out, n, &psi);
        }
    }
    Ok(out.into_iter().map(|v| v.unwrap_or_else(|| zero_vector(len))).collect())
}

/// Five-point time derivative of a stored trajectory at interior index `i`.
pub fn time_derivative(traj: &[Vector], i: usize, dt: f64) -> Vector {
    let mut out = zero_vector(traj[i][0].len());
    ops::vec_axpy(&mut out, 1.0 / (12.0 * dt), &traj[i - 2]);
    ops::vec_axpy(&mut out, -8.0 / (12.0 * dt), &traj[i - 1]);
    ops::vec_axpy(&mut out, 8.0 / (12.0 * dt), &traj[i + 1]);
    ops::vec_axpy(&mut out, -1.0 / (12.0 * dt), &traj[i + 2]);
    out
}

/// `d = d_t psi + u + (u . grad) psi`, the defect of the transport equation
/// for `Phi = x + psi`, given `grad psi`.
pub fn defect(dpsi: &Vector, u: &Vector, grad_psi: &[Vector; 3]) -> Vector {
    let mut d = ops::advect(u, grad_psi);
    for c in 0..3 {
        for p in 0..d[c].len() {
            d[c][p] += dpsi[c][p] + u[c][p];
        }
    }
    d
}

/// One flow map on the samples of its window.
#[derive(Debug, Clone)]
pub struct WindowFlow {
    pub j: i64,
    pub n_lo: i64,
    pub psi: Vec<Vector>,
    /// `grad psi` per sample, `grad[i][j] = d_j psi_i`.
    pub grad: Vec<[Vector; 3]>,
}

impl WindowFlow {
    /// `max |grad Phi - Id|` over the window (Frobenius, pointwise).
    pub fn max_deviation(&self) -> f64 {
        let mut best: f64 = 0.0;
        for g in &self.grad {
            let n = g[0][0].len();
            for p in 0..n {
                let s: f64 = (0..3).map(|i| (0..3).map(|j| g[i][j][p] * g[i][j][p]).sum::<f64>()).sum();
                best = best.max(s.sqrt());
            }
        }
        best
    }

    /// Range of the singular values of `grad Phi` over the window.
    pub fn gradient_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for g in &self.grad {
            for p in 0..g[0][0].len() {
                let m: [[f64; 3]; 3] =
                    std::array::from_fn(|i| std::array::from_fn(|j| g[i][j][p] + if i == j { 1.0 } else { 0.0 }));
                // Gram matrix m^T m
                let mut s = [0.0; 6];
                for (a, b, k) in [(0, 0, 0), (0, 1, 1), (0, 2, 2), (1, 1, 3), (1, 2, 4), (2, 2, 5)] {
                    s[k] = (0..3).map(|i| m[i][a] * m[i][b]).sum();
                }
                let e = crate::linalg::eigenvalues(&s);
                hi = hi.max(e[0].max(0.0).sqrt());
                lo = lo.min(e[2].max(0.0).sqrt());
            }
        }
        (lo, hi)
    }
}

/// All flow maps whose support `(l(j-1), l(j+1))` meets the samples of
/// `track`, each on the samples of its support.
pub fn flow_maps(grid: &Grid, track: &VelocityTrack, l: f64) -> Result<Vec<WindowFlow>> {
    let dt = track.dt;
    let (n_a, n_b) = (track.n0, track.n_end() - 1);
    let j_lo = ((n_a as f64 * dt) / l).floor() as i64;
    let j_hi = ((n_b as f64 * dt) / l).ceil() as i64;
    let mut out = Vec::new();
    for j in j_lo..=j_hi {
        let lo = (((j - 1) as f64 * l / dt).floor() as i64).max(n_a);
        let hi = (((j + 1) as f64 * l / dt).ceil() as i64).min(n_b);
        if lo > hi {
            continue;
        }
        let psi = trace(grid, track, j as f64 * l, lo, hi)?;
        let grad = psi.iter().map(|p| ops::vector_gradient(grid, p)).collect();
        out.push(WindowFlow { j, n_lo: lo, psi, grad });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_track(grid: &Grid, c: [f64; 3], dt: f64, n: i64) -> VelocityTrack {
        let mut tr = VelocityTrack::new(dt, 0);
        for _ in 0..n {
            tr.push(c.map(|v| vec![v; grid.len()]));
        }
        tr
    }

    #[test]
    fn zero_velocity_is_identity() {
        let g = Grid::cubic(8).unwrap();
        let tr = constant_track(&g, [0.0; 3], 0.01, 40);
        for w in flow_maps(&g, &tr, 0.1).unwrap() {
            assert_eq!(w.max_deviation(), 0.0);
            assert!(w.psi.iter().all(|p| norms::sup_vec(p) == 0.0));
        }
    }

    #[test]
    fn constant_velocity_shifts() {
        let g = Grid::cubic(8).unwrap();
        let c = [0.3, -0.2, 0.5];
        let dt = 0.01;
        let tr = constant_track(&g, c, dt, 40);
        for w in flow_maps(&g, &tr, 0.1).unwrap() {
            for (i, p) in w.psi.iter().enumerate() {
                let t = (w.n_lo + i as i64) as f64 * dt;
                for a in 0..3 {
                    let expect = -c[a] * (t - w.j as f64 * 0.1);
                    assert!(p[a].iter().all(|v| (v - expect).abs() < 1e-13));
                }
            }
        }
    }

    #[test]
    fn anchor_between_samples() {
        let g = Grid::cubic(8).unwrap();
        let c = [1.0, 0.0, 0.0];
        let tr = constant_track(&g, c, 0.01, 20);
        let psi = trace(&g, &tr, 0.055, 2, 9).unwrap();
        for (i, p) in psi.iter().enumerate() {
            let t = (2 + i) as f64 * 0.01;
            assert!((p[0][0] + (t - 0.055)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_large_steps() {
        let g = Grid::cubic(16).unwrap();
        let tr = constant_track(&g, [100.0, 0.0, 0.0], 0.01, 10);
        assert!(matches!(trace(&g, &tr, 0.0, 0, 5), Err(Error::Resolution(_))));
    }
}
