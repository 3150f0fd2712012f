//! Level data `(v_q, R_q, pi_q)` sampled on the uniform time grid.

use crate::error::{Error, Result};
use crate::spectral::{Field, Flags, Grid, Rank, Scalar, Tensor, Vector};

use super::schedule::Regime;

/// One time slice of a level: velocity, trace-free stress and pressure
/// (`pi_q` for additive noise, `p_q` for multiplicative noise).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSlice {
    pub v: Vector,
    pub r: Tensor,
    pub p: Scalar,
}

/// A level held in memory on the sample indices `n_lo..=n_hi`, where sample
/// `n` sits at `t = n dt`. Negative indices carry the extension of the level
/// to `t < 0` needed by the one-sided mollifier of the next step.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub q: usize,
    pub regime: Regime,
    pub grid_n: usize,
    pub dt: f64,
    pub n_lo: i64,
    pub slices: Vec<LevelSlice>,
}

impl IterationState {
    pub fn n_hi(&self) -> i64 {
        self.n_lo + self.slices.len() as i64 - 1
    }

    pub fn slice(&self, n: i64) -> Result<&LevelSlice> {
        if n < self.n_lo || n > self.n_hi() {
            return Err(Error::State(format!(
                "sample {n} outside level {} range {}..={}",
                self.q,
                self.n_lo,
                self.n_hi()
            )));
        }
        Ok(&self.slices[(n - self.n_lo) as usize])
    }

    /// Sample `n` clamped into the stored range.
    pub fn slice_clamped(&self, n: i64) -> &LevelSlice {
        let n = n.clamp(self.n_lo, self.n_hi());
        &self.slices[(n - self.n_lo) as usize]
    }

    /// Export the samples with `t >= 0` as fields.
    pub fn to_fields(&self) -> Result<(Field, Field, Field)> {
        let start = (-self.n_lo).max(0) as usize;
        let times: Vec<f64> = (start..self.slices.len()).map(|i| (self.n_lo + i as i64) as f64 * self.dt).collect();
        let pick = |f: &dyn Fn(&LevelSlice) -> Vec<Vec<f64>>| -> Vec<Vec<Vec<f64>>> {
            self.slices[start..].iter().map(f).collect()
        };
        let v = Field::new(Rank::Vector, self.grid_n, times.clone(), pick(&|s| s.v.to_vec()))?
            .with_flags(Flags { mean_zero: true, div_free: true, trace_free: false });
        let r = Field::new(Rank::SymTensor, self.grid_n, times.clone(), pick(&|s| s.r.to_vec()))?
            .with_flags(Flags { mean_zero: false, div_free: false, trace_free: true });
        let p = Field::new(Rank::Scalar, self.grid_n, times, pick(&|s| vec![s.p.clone()]))?;
        Ok((v, r, p))
    }

    /// Divergence-free, mean-zero velocity and trace-free stress on every
    /// stored slice.
    pub fn check_invariants(&self, grid: &Grid) -> Result<()> {
        let (v, r, _) = self.to_fields()?;
        v.check_invariants(grid)?;
        r.check_invariants(grid)
    }
}
