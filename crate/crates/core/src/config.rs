//! Run configuration: a flat TOML file, validated as a whole before any
//! computation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beltrami::WaveSystem;
use crate::construction::schedule::{Regime, RunMode, Schedule};
use crate::construction::step::check_resolution;
use crate::error::{Error, Result};
use crate::noise::{NoiseKind, NoiseSpec};
use crate::spectral::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigRegime {
    Additive,
    Multiplicative,
    /// Additive construction driven by the zero path.
    Deterministic,
}

impl ConfigRegime {
    pub fn regime(self) -> Regime {
        match self {
            ConfigRegime::Multiplicative => Regime::Multiplicative,
            _ => Regime::Additive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub regime: ConfigRegime,
    /// Diffusion exponent.
    pub m: f64,
    /// Base frequency, an integer at least 2.
    pub a: f64,
    pub beta: f64,
    /// Stopping level.
    #[serde(rename = "L")]
    pub level: f64,
    pub sigma: f64,
    pub delta: f64,
    /// `g_k = amplitude |k|^{-g_decay}`.
    pub g_decay: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub grid_n: usize,
    pub n_t: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub q_max: usize,
    pub mode: RunMode,
    pub gamma_list: Vec<f64>,
    pub output_dir: PathBuf,
    /// Stress constant; exploratory runs derive it from `theta` when unset.
    pub c_r: Option<f64>,
    /// Fraction of the admissible radius used by the exploratory `c_R`.
    pub theta: f64,
    /// Sobolev constant of the stopping rule; the grid constant when unset.
    pub c_s: Option<f64>,
    /// Growth factor of the energy check.
    #[serde(rename = "K")]
    pub k: f64,
    /// Number of evenly spaced time slices written to the field dumps.
    pub dump_slices: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            regime: ConfigRegime::Additive,
            m: 0.3,
            a: 2.0,
            beta: 0.05,
            level: 2.0,
            sigma: 0.1,
            delta: 0.02,
            g_decay: 4.5,
            amplitude: 0.02,
            seed: 0,
            grid_n: 16,
            n_t: 64,
            horizon: 0.5,
            q_max: 1,
            mode: RunMode::Exploratory,
            gamma_list: vec![0.01, 0.02],
            output_dir: PathBuf::from("out"),
            c_r: None,
            theta: 0.8,
            c_s: None,
            k: 2.0,
            dump_slices: 5,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            kind: match self.regime {
                ConfigRegime::Multiplicative => NoiseKind::Multiplicative,
                _ => NoiseKind::Additive,
            },
            m: self.m,
            sigma: self.sigma,
            g_decay: self.g_decay,
            amplitude: if self.regime == ConfigRegime::Deterministic { 0.0 } else { self.amplitude },
            seed: self.seed,
            level: self.level,
            delta: self.delta,
        }
    }

    /// Schedule with a provisional `c_R` of 1 when none is configured.
    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.a, self.beta, self.level, self.m, self.regime.regime(), self.mode, self.c_r.unwrap_or(1.0))
    }

    /// Every violated constraint, one message each. Aliasing alone yields a
    /// resolution error; anything else a configuration error.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let open = |bad: &mut Vec<String>, name: &str, v: f64, lo: f64, hi: f64, range: &str| {
            if !(v > lo && v < hi) {
                bad.push(format!("{name} = {v} violates {name} in {range}"));
            }
        };
        open(&mut bad, "m", self.m, 0.0, 0.5, "(0, 1/2)");
        open(&mut bad, "beta", self.beta, 0.0, 0.5, "(0, 1/2)");
        open(&mut bad, "delta", self.delta, 0.0, 1.0 / 24.0, "(0, 1/24)");
        if !(self.level > 1.0) {
            bad.push(format!("L = {} violates L > 1", self.level));
        }
        if !(self.sigma > 0.0) {
            bad.push(format!("sigma = {} violates sigma > 0", self.sigma));
        }
        if !(self.a >= 2.0 && self.a.fract() == 0.0) {
            bad.push(format!("a = {} must be an integer of at least 2", self.a));
        }
        if self.regime == ConfigRegime::Additive && !(self.g_decay > 4.0 - self.m + 2.0 * self.sigma) {
            bad.push(format!(
                "g_decay = {} violates g_decay > 4 - m + 2 sigma = {} (finite trace)",
                self.g_decay,
                4.0 - self.m + 2.0 * self.sigma
            ));
        }
        if !(self.amplitude >= 0.0) {
            bad.push(format!("amplitude = {} must be non-negative", self.amplitude));
        }
        if !(self.grid_n >= 8 && self.grid_n.is_power_of_two()) {
            bad.push(format!("grid_n = {} must be a power of two of at least 8", self.grid_n));
        }
        if self.n_t < 16 {
            bad.push(format!("n_t = {} must be at least 16", self.n_t));
        }
        if !(self.horizon > 0.0 && self.horizon <= self.level) {
            bad.push(format!("T = {} must lie in (0, L]", self.horizon));
        }
        if !(1..=3).contains(&self.q_max) {
            bad.push(format!("q_max = {} must lie in 1..=3", self.q_max));
        }
        for g in &self.gamma_list {
            if !(*g > 0.0 && *g < self.beta) {
                bad.push(format!("gamma = {g} violates 0 < gamma < beta = {}", self.beta));
            }
        }
        if let Some(c) = self.c_r {
            if !(c > 0.0) {
                bad.push(format!("c_r = {c} must be positive"));
            }
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            bad.push(format!("theta = {} must lie in (0, 1)", self.theta));
        }
        if let Some(c) = self.c_s {
            if !(c > 0.0) {
                bad.push(format!("c_s = {c} must be positive"));
            }
        }
        if !(self.k > 0.0) {
            bad.push(format!("K = {} must be positive", self.k));
        }
        if self.mode == RunMode::Strict && self.a.is_finite() {
            let need = Schedule::minimal_strict_a(self.beta.clamp(1e-6, 0.5));
            if self.a < need && self.beta > 0.0 && self.beta < 0.5 {
                bad.push(format!("strict mode needs a^(4 beta) > (1 + 2 (2 pi)^(3/2))^2, i.e. a >= {need:e}"));
            }
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad.join("; ")));
        }
        if self.mode == RunMode::Exploratory {
            self.check_aliasing()?;
        }
        Ok(())
    }

    /// Waves of the last level must be resolved on the grid.
    pub fn check_aliasing(&self) -> Result<()> {
        let grid = Grid::cubic(self.grid_n)?;
        let system = WaveSystem::new()?;
        let lam = self.schedule()?.effective_lambda(self.q_max)?;
        check_resolution(&grid, &system, lam)
    }
}

/// Read and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_echoes_defaults() {
        let cfg = RunConfig::from_toml("regime = \"additive\"\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn m_out_of_range() {
        let e = RunConfig::from_toml("m = 0.6\n").unwrap_err().to_string();
        assert!(e.contains("m in (0, 1/2)"), "{e}");
    }

    #[test]
    fn delta_out_of_range() {
        let e = RunConfig::from_toml("delta = 0.05\n").unwrap_err().to_string();
        assert!(e.contains("delta in (0, 1/24)"), "{e}");
    }

    #[test]
    fn every_violation_listed() {
        let e = RunConfig::from_toml("m = 0.6\nbeta = 0.7\ngrid_n = 12\n").unwrap_err().to_string();
        assert!(e.contains("m = 0.6") && e.contains("beta = 0.7") && e.contains("grid_n = 12"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(RunConfig::from_toml("colour = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn aliasing_is_a_resolution_error() {
        assert!(matches!(RunConfig::from_toml("a = 4\ngrid_n = 32\n"), Err(Error::Resolution(_))));
        assert!(RunConfig::from_toml("a = 4\ngrid_n = 64\n").is_ok());
    }
}
