//! Frequencies, amplitudes and the time weight `M_0` of the iteration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::beltrami::{WaveSystem, SCALE};
use crate::error::{Error, Result};
use crate::noise::m_l;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Strict,
    Exploratory,
}

/// A named inequality between two measured or derived numbers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl Condition {
    pub fn le(name: &str, value: f64, bound: f64) -> Condition {
        Condition { name: name.into(), value, bound, holds: value <= bound }
    }

    pub fn lt(name: &str, value: f64, bound: f64) -> Condition {
        Condition { name: name.into(), value, bound, holds: value < bound }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Schedule {
    /// Base frequency; integral in every grid-resolved run.
    pub a: f64,
    pub beta: f64,
    #[serde(rename = "L")]
    pub level: f64,
    pub m: f64,
    pub regime: Regime,
    pub mode: RunMode,
    pub c_r: f64,
}

/// `(1 + 2 (2 pi)^{3/2})`, the constant in the frequency conditions.
pub fn base_constant() -> f64 {
    1.0 + 2.0 * (2.0 * PI).powf(1.5)
}

impl Schedule {
    pub fn new(a: f64, beta: f64, level: f64, m: f64, regime: Regime, mode: RunMode, c_r: f64) -> Result<Schedule> {
        let mut bad = Vec::new();
        if !(a >= 2.0) {
            bad.push(format!("a = {a} must be at least 2"));
        }
        if !(beta > 0.0 && beta < 0.5) {
            bad.push(format!("beta = {beta} must lie in (0, 1/2)"));
        }
        if !(level > 1.0) {
            bad.push(format!("L = {level} must exceed 1"));
        }
        if !(m > 0.0 && m < 0.5) {
            bad.push(format!("m = {m} must lie in (0, 1/2)"));
        }
        if !(c_r > 0.0) {
            bad.push(format!("c_R = {c_r} must be positive"));
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad.join("; ")));
        }
        Ok(Schedule { a, beta, level, m, regime, mode, c_r })
    }

    /// `lambda_q = a^{2^q}`.
    pub fn lambda(&self, q: usize) -> f64 {
        self.a.powf(2f64.powi(q as i32))
    }

    /// `delta_q = lambda_q^{-2 beta}`.
    pub fn delta(&self, q: usize) -> f64 {
        self.lambda(q).powf(-2.0 * self.beta)
    }

    /// Mollification scale used when passing from level `q` to `q + 1`.
    pub fn mollifier_scale(&self, q: usize) -> f64 {
        self.lambda(q).powf(-1.5)
    }

    /// Frequency actually placed on the grid for level `q`: the multiple of
    /// the direction scale nearest to `lambda_q` (at least one scale), so
    /// that `lambda zeta` is integral for every direction.
    pub fn effective_lambda(&self, q: usize) -> Result<i64> {
        let lam = self.lambda(q);
        if !(lam < 1e9) {
            return Err(Error::Resolution(format!("lambda_{q} = {lam:e} cannot be placed on a grid")));
        }
        Ok(((lam / SCALE as f64).round() as i64).max(1) * SCALE)
    }

    pub fn m0(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Additive => self.level.powi(4) * (4.0 * self.level * t).exp(),
            Regime::Multiplicative => (4.0 * self.level * t + 2.0 * self.level).exp(),
        }
    }

    /// `ln M_0(t)`, used where `M_0` itself overflows.
    pub fn ln_m0(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Additive => 4.0 * self.level.ln() + 4.0 * self.level * t,
            Regime::Multiplicative => 4.0 * self.level * t + 2.0 * self.level,
        }
    }

    /// `M_0'(t) / M_0(t)`.
    pub fn m0_rate(&self) -> f64 {
        4.0 * self.level
    }

    pub fn m_l(&self) -> f64 {
        m_l(self.level)
    }

    /// Strict choice `c_R = min((2 sqrt 2 M)^{-4}, C*^2)`.
    pub fn strict_c_r(system: &WaveSystem, m: f64) -> f64 {
        let big_m = system.constant_m(WaveSystem::required_order(m));
        (2.0 * 2f64.sqrt() * big_m).powi(-4).min(system.c_star * system.c_star)
    }

    /// The frequency and level conditions of the base case for additive
    /// noise, plus the summability condition used by the convergence step.
    pub fn base_conditions(&self, c_s: f64) -> Vec<Condition> {
        let l = self.level;
        let k = base_constant();
        let tp = (2.0 * PI).powf(1.5);
        let mut out = vec![
            Condition::lt("a^{2 beta} > 1 + 2 (2 pi)^{3/2}", k, self.a.powf(2.0 * self.beta)),
            Condition::lt("sum delta_q^{1/2} < 1/2", self.delta_sum(), 0.5),
            Condition::lt("(1 + 2 (2 pi)^{3/2})^2 < a^{4 beta}", k * k, self.a.powf(4.0 * self.beta)),
            Condition::le("a^{4 beta} <= c_R L", self.a.powf(4.0 * self.beta), self.c_r * l),
        ];
        match self.regime {
            Regime::Additive => {
                let lhs = 2.0 * c_s / (2f64.sqrt() * l) + 20.0 / (tp * l.powf(0.75)) + 10.0 / l.powf(2.5);
                out.push(Condition::le("level condition on C_S and L", lhs, 1.0 - 4.0 / tp));
                out.push(Condition::lt("L > c_R^{-1} (1 + 2 (2 pi)^{3/2})^2", k * k / self.c_r, l));
            }
            Regime::Multiplicative => {
                out.push(Condition::lt("L > c_R^{-1} (1 + 2 (2 pi)^{3/2})^2", k * k / self.c_r, l));
            }
        }
        out
    }

    /// `sum_{q >= 1} delta_q^{1/2}`, summed until the terms are negligible.
    pub fn delta_sum(&self) -> f64 {
        let mut s = 0.0;
        for q in 1..64 {
            let d = self.delta(q).sqrt();
            s += d;
            if d < 1e-17 * s {
                break;
            }
        }
        s
    }

    /// Whether `delta_q^{1/2} lambda_q` increases over `0..=q_max`.
    pub fn growth_is_monotone(&self, q_max: usize) -> bool {
        (0..q_max).all(|q| {
            self.delta(q).sqrt() * self.lambda(q) < self.delta(q + 1).sqrt() * self.lambda(q + 1)
        })
    }

    /// Smallest integral `a` with `a^{4 beta} > (1 + 2 (2 pi)^{3/2})^2`. Past
    /// `2^53` the next integer is not representable, so the threshold is
    /// raised by a relative `1e-9` instead.
    pub fn minimal_strict_a(beta: f64) -> f64 {
        let k = base_constant();
        let x = (k * k).powf(1.0 / (4.0 * beta));
        if x < 2f64.powi(52) {
            x.floor() + 1.0
        } else {
            (x * (1.0 + 1e-9)).ceil()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(a: f64) -> Schedule {
        Schedule::new(a, 0.05, 2.0, 0.3, Regime::Additive, RunMode::Exploratory, 1e-3).unwrap()
    }

    #[test]
    fn frequencies_and_scales() {
        let s = sched(4.0);
        assert_eq!(s.lambda(0), 4.0);
        assert_eq!(s.lambda(1), 16.0);
        assert_eq!(s.lambda(2), 256.0);
        assert_eq!(s.mollifier_scale(0), 0.125);
        assert_eq!(s.effective_lambda(1).unwrap(), 15);
        assert_eq!(sched(2.0).effective_lambda(1).unwrap(), 5);
        assert!((s.delta(1) - 16f64.powf(-0.1)).abs() < 1e-15);
        assert_eq!(s.m0(0.0), 16.0);
        assert!(s.growth_is_monotone(3));
    }

    #[test]
    fn rejects_out_of_range() {
        let e = Schedule::new(4.0, 0.6, 2.0, 0.7, Regime::Additive, RunMode::Strict, 1.0).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("beta") && msg.contains("m = 0.7"));
    }

    #[test]
    fn strict_a_meets_frequency_condition() {
        let a = Schedule::minimal_strict_a(0.01);
        let k = base_constant();
        assert!(a.powf(0.04) > k * k);
    }
}
