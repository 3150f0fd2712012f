//! Geometric decay of the level increments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{norms, Grid, Vector};

use super::{CheckResult, Measured, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub gamma: f64,
    /// `sup_t |v_{q+1} - v_q|_{C^gamma}` for `q = 0, 1, ...`.
    pub increments: Vec<f64>,
    /// `increments[q + 1] / increments[q]`.
    pub ratios: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Estimate of the limit bound `|v|_{C^gamma} <= C_L`: the base norm plus
    /// the increment sum.
    pub c_l: f64,
}

/// Build the report from per-level increment norms; `base` is
/// `sup_t |v_0|_{C^gamma}`.
pub fn convergence_report(increments: &[f64], base: f64, gamma: f64) -> Result<ConvergenceReport> {
    if increments.len() < 2 {
        return Err(Error::Config(format!("convergence needs at least 3 levels, got {}", increments.len() + 1)));
    }
    let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = increments
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    Ok(ConvergenceReport { gamma, increments: increments.to_vec(), ratios, partial_sums, c_l: base + acc })
}

impl ConvergenceReport {
    pub fn check(&self) -> CheckResult {
        let holds = self.ratios.iter().all(|r| *r < 1.0);
        CheckResult::from_holds(
            &format!("increment decay ratio, gamma = {}", self.gamma),
            Measured::Series(self.ratios.clone()),
            1.0,
            Mode::Report,
            holds,
            None,
        )
        .with_note(format!("C_L estimate {:.6e}", self.c_l))
    }
}

/// Measured constant in `[f]_{C^gamma} <= C |f|_{C^0}^{1 - gamma} |f|_{C^1}^gamma`.
pub fn interpolation_constant(grid: &Grid, f: &Vector, gamma: f64, shell: usize) -> f64 {
    let c0 = norms::sup_vec(f);
    let c1 = norms::integer_seminorm(grid, &f[..], 1);
    let cg = norms::holder_seminorm(grid, &f[..], gamma, shell);
    if c0 == 0.0 || c1 == 0.0 {
        return 0.0;
    }
    cg / (c0.powf(1.0 - gamma) * c1.powf(gamma))
}

/// Whether a series never increases.
pub fn is_monotone_decreasing(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] <= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_ratio() {
        let r: f64 = 0.3;
        let inc: Vec<f64> = (0..5).map(|q| 2.0 * r.powi(q)).collect();
        let rep = convergence_report(&inc, 1.0, 0.01).unwrap();
        for x in &rep.ratios {
            assert!((x - r).abs() < 1e-14);
        }
        let expect = 1.0 + 2.0 * (1.0 - r.powi(5)) / (1.0 - r);
        assert!((rep.c_l - expect).abs() < 1e-12);
        assert!(is_monotone_decreasing(&rep.increments));
    }

    #[test]
    fn needs_three_levels() {
        assert!(convergence_report(&[1.0], 0.0, 0.1).is_err());
    }

    #[test]
    fn interpolation_on_single_mode() {
        let grid = Grid::cubic(16).unwrap();
        let [_, _, z] = grid.coords();
        let f = [z.iter().map(|v| v.sin()).collect(), vec![0.0; grid.len()], vec![0.0; grid.len()]];
        let c = interpolation_constant(&grid, &f, 0.5, 4);
        assert!(c > 0.1 && c < 2.0, "{c}");
    }
}
