//! The three inductive bounds on a level.

use crate::construction::schedule::{Regime, RunMode, Schedule};

use super::residual::ResidualPoint;
use super::{CheckResult, Location, Measured, Mode};

/// Per-sample sizes of a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSizes {
    pub t: f64,
    pub v_sup: f64,
    /// `sup |v| + sup |d_t v| + sup |grad v|`.
    pub v_c1: f64,
    pub r_sup: f64,
}

impl From<&ResidualPoint> for LevelSizes {
    fn from(p: &ResidualPoint) -> LevelSizes {
        LevelSizes { t: p.t, v_sup: p.v_sup, v_c1: p.v_sup + p.dt_v_sup + p.grad_v_sup, r_sup: p.r_sup }
    }
}

fn mode_of(schedule: &Schedule) -> Mode {
    match schedule.mode {
        RunMode::Strict => Mode::Assert,
        RunMode::Exploratory => Mode::Report,
    }
}

/// Evaluate the sup, `C^1` and stress bounds of level `q` sample by sample.
/// Measured values are the ratios to the bounds, so the target is 1.
pub fn check_inductive(sizes: &[LevelSizes], schedule: &Schedule, q: usize) -> Vec<CheckResult> {
    let mode = mode_of(schedule);
    let m_l = match schedule.regime {
        Regime::Additive => 1.0,
        Regime::Multiplicative => schedule.m_l(),
    };
    let sum: f64 = (1..=q).map(|i| schedule.delta(i).sqrt()).sum();
    let mut out = Vec::new();
    let mut push = |name: &str, bound: &dyn Fn(f64) -> f64, value: &dyn Fn(&LevelSizes) -> f64| {
        let ratios: Vec<f64> = sizes.iter().map(|s| value(s) / bound(s.t)).collect();
        let worst = ratios
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |m, (i, r)| if *r > m.1 { (i, *r) } else { m })
            .0;
        let loc = sizes.get(worst).map(|s| Location { t: s.t, x: [f64::NAN; 3] });
        out.push(CheckResult::at_most(name, Measured::Series(ratios), 1.0, mode, loc));
    };
    push(
        &format!("level {q}: sup|v| / (m M0^1/2 (1 + sum delta^1/2))"),
        &|t| m_l * schedule.m0(t).sqrt() * (1.0 + sum),
        &|s| s.v_sup,
    );
    push(
        &format!("level {q}: |v|_C1 / (m^4 M0 delta^1/2 lambda)"),
        &|t| m_l.powi(4) * schedule.m0(t) * schedule.delta(q).sqrt() * schedule.lambda(q),
        &|s| s.v_c1,
    );
    push(
        &format!("level {q}: sup|R| / (c_R M0 delta_q+1)"),
        &|t| schedule.c_r * schedule.m0(t) * schedule.delta(q + 1),
        &|s| s.r_sup,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Outcome;

    fn schedule(mode: RunMode) -> Schedule {
        Schedule::new(2.0, 0.05, 2.0, 0.3, Regime::Additive, mode, 1e-3).unwrap()
    }

    #[test]
    fn zero_level_passes() {
        let s = schedule(RunMode::Strict);
        let sizes: Vec<LevelSizes> =
            (0..4).map(|i| LevelSizes { t: i as f64 * 0.1, v_sup: 0.0, v_c1: 0.0, r_sup: 0.0 }).collect();
        let checks = check_inductive(&sizes, &s, 0);
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(|c| c.pass == Outcome::Pass));
    }

    #[test]
    fn exploratory_reports() {
        let s = schedule(RunMode::Exploratory);
        let sizes = [LevelSizes { t: 0.0, v_sup: 1e9, v_c1: 1e9, r_sup: 1e9 }];
        let checks = check_inductive(&sizes, &s, 1);
        assert!(checks.iter().all(|c| c.pass == Outcome::ReportOnly));
        assert!(checks[2].measured.max() > 1.0);
    }

    #[test]
    fn strict_failure_has_location() {
        let s = schedule(RunMode::Strict);
        let sizes = [
            LevelSizes { t: 0.0, v_sup: 0.0, v_c1: 0.0, r_sup: 0.0 },
            LevelSizes { t: 0.25, v_sup: 0.0, v_c1: 0.0, r_sup: 1e6 },
        ];
        let c = &check_inductive(&sizes, &s, 0)[2];
        assert!(c.failed());
        assert_eq!(c.location.unwrap().t, 0.25);
    }
}
