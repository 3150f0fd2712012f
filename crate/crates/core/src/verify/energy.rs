//! Energy growth on the stopped event `{T_L >= T}`.
//!
//! Norms of the limit solution are not available on the grid; the check uses
//! the base profile and the increment bounds of the iteration instead:
//! `|u(T)| >= |v_0(T) + z(T)| - M_0(T)^{1/2} / 2` and
//! `|u_in| <= (1/sqrt 2 + 1/2) M_0(0)^{1/2}` (additive), with the `m_L` and
//! `Upsilon` factors in the multiplicative case. All comparisons are made on
//! logarithms since `M_0` overflows for the levels involved.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::construction::level::BaseProfile;
use crate::construction::schedule::{Condition, Regime};
use crate::error::{Error, Result};
use crate::noise::{m_l, NoiseKind, NoisePath, NoiseSpec};
use crate::spectral::{norms, ops, Grid};

use super::{CheckResult, Measured, Mode};

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Number of representations of each `n <= n_max` as a sum of three squares.
pub fn r3_counts(n_max: usize) -> Vec<u64> {
    let mut r1 = vec![0u64; n_max + 1];
    let mut k = 0usize;
    while k * k <= n_max {
        r1[k * k] += if k == 0 { 1 } else { 2 };
        k += 1;
    }
    let conv = |a: &[u64], b: &[u64]| -> Vec<u64> {
        let mut out = vec![0u64; n_max + 1];
        for (i, x) in a.iter().enumerate().filter(|(_, x)| **x > 0) {
            for (j, y) in b[..=n_max - i].iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let r2 = conv(&r1, &r1);
    conv(&r2, &r1)
}

/// `Tr(G G^*)` of the diagonal model on a grid of `grid_n` points, summed
/// over shells: `2 (2 pi)^3 amplitude^2 sum_{0 < n <= K^2} r_3(n) n^{-g_decay}`.
pub fn trace_closed_form(spec: &NoiseSpec, grid_n: usize) -> f64 {
    let kmax = grid_n / 4;
    let r3 = r3_counts(kmax * kmax);
    let s: f64 = r3.iter().enumerate().skip(1).map(|(n, c)| *c as f64 * (n as f64).powf(-spec.g_decay)).sum();
    2.0 * (2.0 * PI).powi(3) * spec.amplitude * spec.amplitude * s
}

/// The additive level conditions at horizon `t`. `|u_in|` enters through its
/// lower bound `(1/sqrt 2 - 1/2) L^2`.
pub fn additive_level_conditions(level: f64, t: f64, k: f64, trace: f64) -> Vec<Condition> {
    let g = (level * t).exp();
    let u_in = (FRAC_1_SQRT_2 - 0.5) * level * level;
    vec![
        Condition::lt("3/2 + 1/L < (1/sqrt 2 - 1/2) e^{LT}", 1.5 + 1.0 / level, (FRAC_1_SQRT_2 - 0.5) * g),
        Condition::le(
            "L^{1/4} (2 pi)^{3/2} + K (T Tr)^{1/2} <= (e^{LT} - K) |u_in| + L e^{LT}",
            level.powf(0.25) * (2.0 * PI).powf(1.5) + k * (t * trace).sqrt(),
            (g - k) * u_in + level * g,
        ),
    ]
}

/// The multiplicative level conditions, compared on logarithms.
pub fn multiplicative_level_conditions(level: f64, t: f64, k: f64) -> Vec<Condition> {
    vec![
        Condition::lt(
            "ln((1/sqrt 2 + 1/2) e^{2 sqrt L}) < ln((1/sqrt 2 - 1/2) e^{2 L T})",
            (FRAC_1_SQRT_2 + 0.5).ln() + 2.0 * level.sqrt(),
            (FRAC_1_SQRT_2 - 0.5).ln() + 2.0 * level * t,
        ),
        Condition::lt("[ln(K e^{T/2})]^2 < L", (k.ln() + 0.5 * t).powi(2), level),
    ]
}

/// Smallest `L` on a 1% geometric ladder from 2 satisfying every level
/// condition of the regime.
pub fn minimal_level(regime: Regime, t: f64, k: f64, trace: f64) -> Result<f64> {
    let mut level: f64 = 2.0;
    while level < 1e12 {
        let ok = match regime {
            Regime::Additive => additive_level_conditions(level, t, k, trace).iter().all(|c| c.holds),
            Regime::Multiplicative => multiplicative_level_conditions(level, t, k).iter().all(|c| c.holds),
        };
        if ok {
            return Ok(level);
        }
        level *= 1.01;
    }
    Err(Error::Config(format!("no level L satisfies the growth conditions at T = {t}, K = {k}")))
}

/// Logarithmic bounds entering the growth inequality on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    /// Lower bound of `ln |u(T)|_{L^2}`.
    pub ln_u_final: f64,
    /// Upper bound of `ln |u_in|_{L^2}`.
    pub ln_u_in: f64,
    pub t_l: f64,
}

/// Bounds from the base level and the forcing at `t`. The path must have
/// its stopping time computed and `t` must be a sample time.
pub fn base_level_bounds(grid: &Grid, path: &NoisePath, t: f64) -> Result<GrowthBounds> {
    let stop = path.stop.as_ref().ok_or_else(|| Error::State("stopping time not computed".into()))?;
    let n = (t / path.dt).round() as usize;
    if n > path.n_t || (n as f64 * path.dt - t).abs() > 1e-9 * path.dt.max(t) {
        return Err(Error::Config(format!("T = {t} is not a sample time of the path")));
    }
    let level = path.spec.level;
    let ln_m0 = |s: f64| match path.spec.kind {
        NoiseKind::Additive => 4.0 * level.ln() + 4.0 * level * s,
        NoiseKind::Multiplicative => 4.0 * level * s + 2.0 * level,
    };
    let (ln_u_final, ln_u_in) = match path.spec.kind {
        NoiseKind::Additive => {
            let base = BaseProfile::new(grid, Regime::Additive, level);
            let u = ops::vec_add(&base.slice(t, None).v, &path.z_phys(grid, n));
            let lower = norms::l2(&u[..]) - 0.5 * (0.5 * ln_m0(t)).exp();
            let upper = (FRAC_1_SQRT_2 + 0.5) * (0.5 * ln_m0(0.0)).exp();
            (if lower > 0.0 { lower.ln() } else { f64::NEG_INFINITY }, upper.ln())
        }
        NoiseKind::Multiplicative => {
            let ln_ml = m_l(level).ln();
            let b = path.b_stopped(n as i64);
            (
                b + ln_ml + 0.5 * ln_m0(t) + (FRAC_1_SQRT_2 - 0.5).ln(),
                ln_ml + 0.5 * ln_m0(0.0) + (FRAC_1_SQRT_2 + 0.5).ln(),
            )
        }
    };
    Ok(GrowthBounds { ln_u_final, ln_u_in, t_l: stop.t_l })
}

/// Additive: `|u(T)| > K |u_in| + K (T Tr)^{1/2}`; multiplicative:
/// `|u(T)| > K e^{T/2} |u_in|`. The measured value is the log margin
/// `ln lhs - ln rhs`, which must be positive. Report-only when `T_L < T`.
pub fn energy_growth_check(bounds: &GrowthBounds, trace: f64, k: f64, t: f64, regime: Regime) -> CheckResult {
    let ln_rhs = match regime {
        Regime::Additive => k.ln() + log_add(bounds.ln_u_in, 0.5 * (t * trace).ln()),
        Regime::Multiplicative => k.ln() + 0.5 * t + bounds.ln_u_in,
    };
    let margin = bounds.ln_u_final - ln_rhs;
    let (mode, note) = if bounds.t_l >= t {
        (Mode::Assert, String::new())
    } else {
        (Mode::Report, format!("T_L = {} < T", bounds.t_l))
    };
    let name = match regime {
        Regime::Additive => "energy growth: ln|u(T)| - ln(K|u_in| + K (T Tr)^1/2)",
        Regime::Multiplicative => "energy growth: ln|u(T)| - ln(K e^{T/2} |u_in|)",
    };
    CheckResult::from_holds(name, Measured::Scalar(margin), 0.0, mode, margin > 0.0, None).with_note(note)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ModeSet;

    #[test]
    fn r3_small_values() {
        // 1: (+-1,0,0) x3; 2: 12; 3: 8; 4: 6; 5: 24; 7: 0.
        let r = r3_counts(7);
        assert_eq!(r, vec![1, 6, 12, 8, 6, 24, 24, 0]);
    }

    #[test]
    fn trace_matches_series() {
        let spec = NoiseSpec {
            kind: NoiseKind::Additive,
            m: 0.3,
            sigma: 0.1,
            g_decay: 4.5,
            amplitude: 0.7,
            seed: 1,
            level: 2.0,
            delta: 0.02,
        };
        for n in [8, 16, 32] {
            let series = ModeSet::new(n, &spec).trace();
            let closed = trace_closed_form(&spec, n);
            assert!((series - closed).abs() <= 1e-12 * closed, "{n}: {series} vs {closed}");
        }
    }

    #[test]
    fn additive_conditions_at_small_horizon() {
        assert!(!additive_level_conditions(150.0, 0.01, 2.0, 1.0).iter().all(|c| c.holds));
        assert!(additive_level_conditions(250.0, 0.01, 2.0, 1.0).iter().all(|c| c.holds));
        let l = minimal_level(Regime::Additive, 0.01, 2.0, 1.0).unwrap();
        assert!(l > 190.0 && l < 210.0, "{l}");
    }

    #[test]
    fn multiplicative_conditions() {
        let l = minimal_level(Regime::Multiplicative, 0.01, 2.0, 0.0).unwrap();
        assert!(multiplicative_level_conditions(l, 0.01, 2.0).iter().all(|c| c.holds));
        assert!(l > 1e4 && l < 1.1e4, "{l}");
    }

    #[test]
    fn direction_of_the_check() {
        let b = GrowthBounds { ln_u_final: 10.0, ln_u_in: 2.0, t_l: 1.0 };
        assert_eq!(energy_growth_check(&b, 1.0, 2.0, 0.01, Regime::Additive).pass, crate::verify::Outcome::Pass);
        assert!(energy_growth_check(&b, 1.0, 1e10, 0.01, Regime::Additive).failed());
        assert!(energy_growth_check(&b, 1.0, 1e10, 0.01, Regime::Multiplicative).failed());
        let early = GrowthBounds { t_l: 0.001, ..b };
        assert_eq!(
            energy_growth_check(&early, 1.0, 1e10, 0.01, Regime::Additive).pass,
            crate::verify::Outcome::ReportOnly
        );
    }
}
