//! Streaming residual of the level equation.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::construction::schedule::Regime;
use crate::construction::state::LevelSlice;
use crate::error::{Error, Result};
use crate::spectral::ops::{self, Spec};
use crate::spectral::{norms, Grid, Vector};

/// Stencil half-width in samples: the doubled-step difference reaches
/// eight samples out.
pub const DELAY: usize = 8;

/// Residual statistics at one time sample.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ResidualPoint {
    pub n: i64,
    pub t: f64,
    /// `sup_x |equation residual|`.
    pub residual: f64,
    /// `|D_8(dt) - D_8(2 dt)|`: change of the eighth-order time difference
    /// when the step is doubled, an estimate of its error.
    pub fd_error: f64,
    pub div_r: f64,
    pub v_sup: f64,
    pub dt_v_sup: f64,
    pub grad_v_sup: f64,
    pub r_sup: f64,
    /// Flat index of the worst residual.
    pub worst: usize,
}

struct Entry {
    n: i64,
    slice: LevelSlice,
    z: Option<Vector>,
    ups: f64,
}

/// Evaluates
/// `d_t v + (-Lap)^m v [+ v/2] + div N + grad p - div R` with
/// `N = (v + z) (x) (v + z)` or `Upsilon v (x) v`, `DELAY` samples behind the
/// most recent one.
pub struct ResidualMeter<'g> {
    grid: &'g Grid,
    regime: Regime,
    m: f64,
    dt: f64,
    ring: VecDeque<Entry>,
}

fn sym_product(a: &Vector, b: &Vector, s: f64) -> [Vec<f64>; 6] {
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    pairs.map(|(i, j)| a[i].iter().zip(&b[j]).map(|(x, y)| s * x * y).collect())
}

impl<'g> ResidualMeter<'g> {
    pub fn new(grid: &'g Grid, regime: Regime, m: f64, dt: f64) -> ResidualMeter<'g> {
        ResidualMeter { grid, regime, m, dt, ring: VecDeque::with_capacity(2 * DELAY + 1) }
    }

    /// Feed sample `n`; `z` is the raw forcing (additive) and `ups` is
    /// `Upsilon(t_n)`. Samples must arrive consecutively.
    pub fn push(&mut self, n: i64, slice: LevelSlice, z: Option<Vector>, ups: f64) -> Result<Option<ResidualPoint>> {
        if let Some(last) = self.ring.back() {
            if last.n + 1 != n {
                self.ring.clear();
            }
        }
        if self.regime == Regime::Additive && z.is_none() {
            return Err(Error::State("additive residual needs z".into()));
        }
        self.ring.push_back(Entry { n, slice, z, ups });
        if self.ring.len() > 2 * DELAY + 1 {
            self.ring.pop_front();
        }
        if self.ring.len() < 2 * DELAY + 1 {
            return Ok(None);
        }
        Ok(Some(self.evaluate()))
    }

    fn evaluate(&self) -> ResidualPoint {
        let grid = self.grid;
        let len = grid.len();
        let c = &self.ring[DELAY];
        let at = |k: isize| &self.ring[(DELAY as isize + k) as usize].slice.v;
        let mut dv_h: Vector = ops::zero_vector(len);
        let mut dv_2h: Vector = ops::zero_vector(len);
        let d8 = |f: &dyn Fn(isize) -> f64, s: isize| {
            672.0 * (f(s) - f(-s)) - 168.0 * (f(2 * s) - f(-2 * s)) + 32.0 * (f(3 * s) - f(-3 * s))
                - 3.0 * (f(4 * s) - f(-4 * s))
        };
        for i in 0..3 {
            for p in 0..len {
                let f = |k: isize| at(k)[i][p];
                dv_h[i][p] = d8(&f, 1) / (840.0 * self.dt);
                dv_2h[i][p] = d8(&f, 2) / (1680.0 * self.dt);
            }
        }
        let fd_error = norms::sup_vec(&ops::vec_sub(&dv_h, &dv_2h));

        let v = &c.slice.v;
        let (u, scale) = match self.regime {
            Regime::Additive => (ops::vec_add(v, c.z.as_ref().unwrap()), 1.0),
            Regime::Multiplicative => (v.clone(), c.ups),
        };
        let n_full = sym_product(&u, &u, scale);
        let v_hat = ops::vector_spec(grid, v);
        let dv_hat = ops::vector_spec(grid, &dv_h);
        let n_hat = ops::tensor_spec(grid, &n_full);
        let r_hat = ops::tensor_spec(grid, &c.slice.r);
        let p_hat = grid.fft_real(&c.slice.p);
        let div_n = ops::div_tensor_spec(grid, &n_hat);
        let div_r = ops::div_tensor_spec(grid, &r_hat);
        let damping = if self.regime == Regime::Multiplicative { 0.5 } else { 0.0 };
        let mut res: [Spec; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len]);
        for i in 0..3 {
            let mut lv = v_hat[i].clone();
            ops::frac_lap_spec_inplace(grid, &mut lv, self.m);
            let gp = ops::deriv_spec(grid, &p_hat, i);
            for k in 0..len {
                res[i][k] = dv_hat[i][k] + lv[k] + damping * v_hat[i][k] + div_n[i][k] + gp[k] - div_r[i][k];
            }
        }
        let res = ops::vector_phys(grid, &res);
        let mag = norms::magnitude(&res[..]);
        let (residual, worst) = mag.iter().enumerate().fold((0.0, 0), |m, (i, v)| if *v > m.0 { (*v, i) } else { m });
        let div_r_phys = ops::vector_phys(grid, &div_r);
        let gv = ops::vector_gradient(grid, v);
        let mut grad_v_sup: f64 = 0.0;
        for p in 0..len {
            let s: f64 = (0..3).map(|a| (0..3).map(|b| gv[a][b][p].powi(2)).sum::<f64>()).sum();
            grad_v_sup = grad_v_sup.max(s.sqrt());
        }
        ResidualPoint {
            n: c.n,
            t: c.n as f64 * self.dt,
            residual,
            fd_error,
            div_r: norms::sup_vec(&div_r_phys),
            v_sup: norms::sup_vec(v),
            dt_v_sup: norms::sup_vec(&dv_h),
            grad_v_sup,
            r_sup: norms::sup(&c.slice.r[..]),
            worst,
        }
    }
}

/// Residual series of a whole level, fed in order.
pub fn residual_series(
    grid: &Grid,
    regime: Regime,
    m: f64,
    dt: f64,
    samples: impl IntoIterator<Item = (i64, LevelSlice, Option<Vector>, f64)>,
) -> Result<Vec<ResidualPoint>> {
    let mut meter = ResidualMeter::new(grid, regime, m, dt);
    let mut out = Vec::new();
    for (n, s, z, u) in samples {
        if let Some(p) = meter.push(n, s, z, u)? {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(Error::State(format!("residual needs at least {} consecutive samples", 2 * DELAY + 1)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::zero_tensor;

    #[test]
    fn zero_state_has_zero_residual() {
        let grid = Grid::cubic(8).unwrap();
        let len = grid.len();
        let zero = LevelSlice { v: ops::zero_vector(len), r: zero_tensor(len), p: vec![0.0; len] };
        let samples = (0..18).map(|n| (n, zero.clone(), Some(ops::zero_vector(len)), 1.0));
        let pts = residual_series(&grid, Regime::Additive, 0.3, 0.1, samples).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.residual == 0.0));
    }

    #[test]
    fn too_few_samples() {
        let grid = Grid::cubic(4).unwrap();
        let len = grid.len();
        let zero = LevelSlice { v: ops::zero_vector(len), r: zero_tensor(len), p: vec![0.0; len] };
        let samples = (0..16).map(|n| (n, zero.clone(), None, 1.0));
        assert!(residual_series(&grid, Regime::Multiplicative, 0.3, 0.1, samples).is_err());
    }
}
