//! Log-log slope fits: stationary-phase decay of the inverse divergence and
//! decay of stress terms in the frequency parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{norms, ops, Grid};

use super::{CheckResult, Measured, Mode};

/// Offset shell of the Hoelder estimator, in cells.
pub const SHELL: usize = 4;

/// Points per wavelength-unit on each axis of the phase grids.
pub const POINTS_PER_LAMBDA: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points or exact fits.
    pub stderr: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Config(format!("need matching series of at least 2 points, got {} and {}", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Config("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if lx.len() > 2 {
        let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Fit { slope, intercept, stderr })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// `a = 1`, `Phi = x`.
    Pure,
    /// `a = 1 + cos(x_2) / 2`, `Phi = x + 0.1 (sin x_2, 0, 0)`.
    Curved,
}

/// Grid Hoelder seminorm `[R(a cos(lambda zeta . Phi) e_2)]_{C^alpha}` with
/// `zeta = e_1`, on a planar grid of `8 lambda` points per axis.
pub fn stationary_phase_norm(phase: Phase, lambda: usize, alpha: f64) -> Result<f64> {
    let n = POINTS_PER_LAMBDA * lambda;
    let grid = Grid::new([n, n, 1])?;
    // Bandwidth along x_2: the Bessel expansion of the phase modulation
    // decays past 0.1 lambda + 8 harmonics, plus one from the amplitude.
    let band = match phase {
        Phase::Pure => 0,
        Phase::Curved => (0.1 * lambda as f64).ceil() as usize + 9,
    };
    if lambda.max(band) > n / 2 {
        return Err(Error::Resolution(format!("phase of frequency {lambda} aliases on {n} points")));
    }
    let [x1, x2, _] = grid.coords();
    let lam = lambda as f64;
    let f: Vec<f64> = (0..grid.len())
        .map(|p| match phase {
            Phase::Pure => (lam * x1[p]).cos(),
            Phase::Curved => (1.0 + 0.5 * x2[p].cos()) * (lam * (x1[p] + 0.1 * x2[p].sin())).cos(),
        })
        .collect();
    let v = [vec![0.0; grid.len()], f, vec![0.0; grid.len()]];
    let r = ops::inverse_divergence(&grid, &v);
    Ok(norms::holder_seminorm(&grid, &r[..], alpha, SHELL))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStudy {
    pub phase: Phase,
    pub alpha: f64,
    pub lambdas: Vec<usize>,
    pub norms: Vec<f64>,
    pub fit: Fit,
}

pub fn stationary_phase_study(phase: Phase, alpha: f64, lambdas: &[usize]) -> Result<PhaseStudy> {
    if lambdas.len() < 4 {
        return Err(Error::Config(format!("stationary-phase fit needs at least 4 frequencies, got {}", lambdas.len())));
    }
    let norms: Vec<f64> = lambdas.iter().map(|&l| stationary_phase_norm(phase, l, alpha)).collect::<Result<_>>()?;
    let xs: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
    let fit = loglog_fit(&xs, &norms)?;
    Ok(PhaseStudy { phase, alpha, lambdas: lambdas.to_vec(), norms, fit })
}

impl PhaseStudy {
    /// `|slope - (alpha - 1)| <= tol`.
    pub fn check(&self, tol: f64) -> CheckResult {
        let target = self.alpha - 1.0;
        let dev = (self.fit.slope - target).abs();
        CheckResult::at_most(
            &format!("stationary phase {:?} alpha = {}: |slope - (alpha - 1)|", self.phase, self.alpha),
            Measured::Scalar(dev),
            tol,
            Mode::Assert,
            None,
        )
        .with_note(format!("slope {:.4} +- {:.4}", self.fit.slope, self.fit.stderr))
    }
}

/// Slope of a stress-term norm against `a`; negative means decay.
pub fn term_decay(a_values: &[f64], norms: &[f64], name: &str) -> Result<CheckResult> {
    let fit = loglog_fit(a_values, norms)?;
    Ok(CheckResult::from_holds(name, Measured::Series(norms.to_vec()), 0.0, Mode::Report, fit.slope < 0.0, None)
        .with_note(format!("slope {:.4} +- {:.4}", fit.slope, fit.stderr)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.7)).collect();
        let f = loglog_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(loglog_fit(&[1.0], &[1.0]).is_err());
        assert!(loglog_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn needs_four_frequencies() {
        assert!(stationary_phase_study(Phase::Pure, 0.2, &[8, 16, 32]).is_err());
    }

    #[test]
    fn pure_wave_slope() {
        let s = stationary_phase_study(Phase::Pure, 0.3, &[4, 8, 16, 32]).unwrap();
        assert!(s.check(0.05).pass == crate::verify::Outcome::Pass, "{:?}", s);
    }
}
