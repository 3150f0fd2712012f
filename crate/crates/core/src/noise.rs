//! Random forcing: a diagonal trace-class Wiener process with its
//! Ornstein-Uhlenbeck convolution, a scalar Brownian motion with
//! `Upsilon = e^B`, and the level-`L` stopping times.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::mollify::TimeMollifier;
use crate::spectral::{norms, ops, Grid, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Diffusion exponent; the OU decay rate of mode `k` is `|k|^{2m}`.
    pub m: f64,
    pub sigma: f64,
    /// `g_k = amplitude |k|^{-g_decay}`.
    pub g_decay: f64,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(rename = "L")]
    pub level: f64,
    pub delta: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.sigma > 0.0) {
            bad.push(format!("sigma = {} must be positive", self.sigma));
        }
        if !(self.level > 1.0) {
            bad.push(format!("L = {} must exceed 1", self.level));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 / 24.0) {
            bad.push(format!("delta = {} must lie in (0, 1/24)", self.delta));
        }
        if !(self.m > 0.0 && self.m <= 1.0) {
            bad.push(format!("m = {} must lie in (0, 1]", self.m));
        }
        if self.kind == NoiseKind::Additive {
            let bound = 4.0 - self.m + 2.0 * self.sigma;
            if !(self.g_decay > bound) {
                bad.push(format!(
                    "g_decay = {} must exceed 4 - m + 2 sigma = {bound} for a finite trace",
                    self.g_decay
                ));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Exponent of the temporal Hoelder quotients.
    pub fn time_exponent(&self) -> f64 {
        0.5 - 2.0 * self.delta
    }
}

/// Noise modes `0 < |k| <= n/4`, one representative per `+-k` pair.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub modes: Vec<[i64; 3]>,
    pub g: Vec<f64>,
    pub rate: Vec<f64>,
}

impl ModeSet {
    pub fn new(grid_n: usize, spec: &NoiseSpec) -> ModeSet {
        let kmax = (grid_n / 4) as i64;
        let mut modes = Vec::new();
        for kz in 0..=kmax {
            for ky in -kmax..=kmax {
                for kx in -kmax..=kmax {
                    let k = [kx, ky, kz];
                    let k2 = kx * kx + ky * ky + kz * kz;
                    if k2 == 0 || k2 > kmax * kmax {
                        continue;
                    }
                    let upper = kz > 0 || (kz == 0 && (ky > 0 || (ky == 0 && kx > 0)));
                    if upper {
                        modes.push(k);
                    }
                }
            }
        }
        let g = modes
            .iter()
            .map(|k| spec.amplitude * (knorm(k)).powf(-spec.g_decay))
            .collect();
        let rate = modes.iter().map(|k| knorm(k).powf(2.0 * spec.m)).collect();
        ModeSet { modes, g, rate }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `Tr(G G^*)` of the projected noise on `L^2(T^3)`: two solenoidal
    /// directions per wave vector, both signs of `k`.
    pub fn trace(&self) -> f64 {
        (2.0 * PI).powi(3) * 4.0 * self.g.iter().map(|g| g * g).sum::<f64>()
    }
}

fn knorm(k: &[i64; 3]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

/// Project a complex amplitude onto the plane orthogonal to `k`.
pub fn project(k: &[i64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let kf = k.map(|x| x as f64);
    let k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
    let kv = v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2];
    [0, 1, 2].map(|i| v[i] - kv * (kf[i] / k2))
}

fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(s * a, s * b)
}

/// One exact OU step of a single projected mode. Returns the Brownian
/// increment and the new amplitude; `E |dW_i|^2 = g^2 dt` before projection.
pub fn ou_step(
    z: [Complex64; 3],
    k: &[i64; 3],
    g: f64,
    rate: f64,
    dt: f64,
    rng_w: &mut impl Rng,
    rng_x: &mut impl Rng,
) -> ([Complex64; 3], [Complex64; 3]) {
    let raw_w: [Complex64; 3] = std::array::from_fn(|_| complex_normal(rng_w, g * g * dt));
    let raw_x: [Complex64; 3] = std::array::from_fn(|_| complex_normal(rng_x, 1.0));
    let dw = project(k, raw_w);
    let xi = project(k, raw_x);
    let (decay, c1, c2) = ou_coefficients(g, rate, dt);
    let znew = [0, 1, 2].map(|i| decay * z[i] + c1 * dw[i] + c2 * xi[i]);
    (dw, znew)
}

/// `(e^{-rate dt}, c1, c2)` with `eta = c1 dW + c2 xi` distributed as
/// `int_0^dt e^{-rate (dt - s)} dW(s)` jointly with `dW`.
pub fn ou_coefficients(g: f64, rate: f64, dt: f64) -> (f64, f64, f64) {
    let decay = (-rate * dt).exp();
    let (c1, var_eta) = if rate * dt > 1e-12 {
        ((1.0 - decay) / (rate * dt), g * g * (1.0 - (-2.0 * rate * dt).exp()) / (2.0 * rate))
    } else {
        (1.0, g * g * dt)
    };
    let c2 = (var_eta - c1 * c1 * g * g * dt).max(0.0).sqrt();
    (decay, c1, c2)
}

/// Why and when the stopping time fired.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StoppingTime {
    pub t_l: f64,
    /// First sample index at which a threshold is reached.
    pub index: Option<usize>,
    pub reason: String,
    /// True when the run horizon ended before both `L` and any crossing.
    pub censored: bool,
}

impl StoppingTime {
    /// Last usable sample index when stopped paths are frozen.
    pub fn frozen_index(&self, n: usize) -> usize {
        match self.index {
            Some(c) => n.min(c.saturating_sub(1)),
            None => n,
        }
    }
}

/// Sampled forcing on the uniform grid `t_n = n dt`, `n = 0..=n_t`.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub spec: NoiseSpec,
    pub grid_n: usize,
    pub dt: f64,
    pub n_t: usize,
    pub modes: ModeSet,
    /// Additive: projected Wiener coefficients per time and mode.
    pub brownian_modes: Vec<Vec<[Complex64; 3]>>,
    /// Additive: OU coefficients per time and mode (empty until computed).
    pub z_modes: Vec<Vec<[Complex64; 3]>>,
    /// Multiplicative: scalar Brownian path.
    pub brownian: Vec<f64>,
    pub stop: Option<StoppingTime>,
}

impl NoisePath {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_t).map(|n| n as f64 * self.dt).collect()
    }

    /// Draw the Brownian part on `n_t` steps of size `dt`.
    pub fn sample_brownian(spec: &NoiseSpec, grid_n: usize, dt: f64, n_t: usize) -> Result<NoisePath> {
        spec.validate()?;
        if !(dt > 0.0) || n_t == 0 {
            return Err(Error::Config(format!("time grid dt = {dt}, n_t = {n_t} is not usable")));
        }
        let modes = ModeSet::new(grid_n, spec);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut path = NoisePath {
            spec: spec.clone(),
            grid_n,
            dt,
            n_t,
            modes,
            brownian_modes: Vec::new(),
            z_modes: Vec::new(),
            brownian: Vec::new(),
            stop: None,
        };
        match spec.kind {
            NoiseKind::Additive => {
                let zero = [Complex64::new(0.0, 0.0); 3];
                let mut cur = vec![zero; path.modes.len()];
                path.brownian_modes.push(cur.clone());
                for _ in 0..n_t {
                    for (i, k) in path.modes.modes.iter().enumerate() {
                        let g = path.modes.g[i];
                        let raw: [Complex64; 3] = std::array::from_fn(|_| complex_normal(&mut rng, g * g * dt));
                        let dw = project(k, raw);
                        for c in 0..3 {
                            cur[i][c] += dw[c];
                        }
                    }
                    path.brownian_modes.push(cur.clone());
                }
            }
            NoiseKind::Multiplicative => {
                let mut b = 0.0;
                path.brownian.push(0.0);
                let s = dt.sqrt() * spec.amplitude;
                for _ in 0..n_t {
                    let x: f64 = rng.sample(StandardNormal);
                    b += s * x;
                    path.brownian.push(b);
                }
            }
        }
        Ok(path)
    }

    /// Additive path with the OU field computed.
    pub fn additive(spec: &NoiseSpec, grid_n: usize, dt: f64, n_t: usize) -> Result<NoisePath> {
        let mut p = NoisePath::sample_brownian(spec, grid_n, dt, n_t)?;
        p.ou_process()?;
        Ok(p)
    }

    /// Exact per-mode OU recursion driven by the stored Wiener increments.
    pub fn ou_process(&mut self) -> Result<()> {
        if self.spec.kind != NoiseKind::Additive {
            return Err(Error::Type("OU field requested for a multiplicative path".into()));
        }
        if self.brownian_modes.len() != self.n_t + 1 {
            return Err(Error::State("Brownian part missing".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(1);
        let zero = [Complex64::new(0.0, 0.0); 3];
        let mut z = vec![zero; self.modes.len()];
        self.z_modes = Vec::with_capacity(self.n_t + 1);
        self.z_modes.push(z.clone());
        let dt = self.dt;
        for n in 0..self.n_t {
            for (i, k) in self.modes.modes.iter().enumerate() {
                let (g, rate) = (self.modes.g[i], self.modes.rate[i]);
                let dw: [Complex64; 3] =
                    std::array::from_fn(|c| self.brownian_modes[n + 1][i][c] - self.brownian_modes[n][i][c]);
                let raw_x: [Complex64; 3] = std::array::from_fn(|_| complex_normal(&mut rng, 1.0));
                let xi = project(k, raw_x);
                let (decay, c1, c2) = ou_coefficients(g, rate, dt);
                for c in 0..3 {
                    z[i][c] = decay * z[i][c] + c1 * dw[c] + c2 * xi[c];
                }
            }
            self.z_modes.push(z.clone());
        }
        Ok(())
    }

    /// All-zero path (no forcing) of the given kind.
    pub fn zero(spec: &NoiseSpec, grid_n: usize, dt: f64, n_t: usize) -> Result<NoisePath> {
        let mut s = spec.clone();
        s.amplitude = 0.0;
        let mut p = NoisePath::sample_brownian(&s, grid_n, dt, n_t)?;
        if p.spec.kind == NoiseKind::Additive {
            p.ou_process()?;
        }
        Ok(p)
    }

    /// Spectrum of `z` at sample `n` on `grid` (three components).
    pub fn z_spec(&self, grid: &Grid, n: usize) -> [Vec<Complex64>; 3] {
        let mut s: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); grid.len()]);
        if self.z_modes.is_empty() {
            return s;
        }
        let coeffs = &self.z_modes[n];
        for (i, k) in self.modes.modes.iter().enumerate() {
            if let Some(idx) = grid.mode_index(*k) {
                let nidx = grid.neg_index(idx);
                for c in 0..3 {
                    s[c][idx] = coeffs[i][c];
                    s[c][nidx] = coeffs[i][c].conj();
                }
            }
        }
        s
    }

    /// Physical `z` at sample `n`.
    pub fn z_phys(&self, grid: &Grid, n: usize) -> Vector {
        let s = self.z_spec(grid, n);
        ops::vector_phys(grid, &s)
    }

    /// Physical `z` at sample `n` of the path stopped at `T_L`; negative
    /// indices give zero.
    pub fn z_stopped(&self, grid: &Grid, n: i64) -> Vector {
        if n <= 0 || self.z_modes.is_empty() {
            return ops::zero_vector(grid.len());
        }
        let n = self.stopped_index(n as usize);
        self.z_phys(grid, n)
    }

    fn stopped_index(&self, n: usize) -> usize {
        let n = n.min(self.n_t);
        match &self.stop {
            Some(s) => s.frozen_index(n),
            None => n,
        }
    }

    /// Homogeneous Sobolev norm of `z(t_n)` in the grid convention.
    pub fn z_hdot(&self, n: usize, s: f64) -> f64 {
        if self.z_modes.is_empty() {
            return 0.0;
        }
        let mut acc = 0.0;
        for (i, k) in self.modes.modes.iter().enumerate() {
            let w = knorm(k).powf(2.0 * s);
            for c in 0..3 {
                acc += 2.0 * w * self.z_modes[n][i][c].norm_sqr();
            }
        }
        (2.0 * PI).powf(1.5) * acc.sqrt()
    }

    fn z_hdot_diff(&self, a: usize, b: usize, s: f64) -> f64 {
        let mut acc = 0.0;
        for (i, k) in self.modes.modes.iter().enumerate() {
            let w = knorm(k).powf(2.0 * s);
            for c in 0..3 {
                acc += 2.0 * w * (self.z_modes[a][i][c] - self.z_modes[b][i][c]).norm_sqr();
            }
        }
        (2.0 * PI).powf(1.5) * acc.sqrt()
    }

    /// First grid time at which a level-`L` threshold is reached. `c_s` is
    /// the Sobolev constant (unused for multiplicative paths).
    pub fn stopping_time(&self, c_s: f64) -> Result<StoppingTime> {
        let level = self.spec.level;
        let alpha = self.spec.time_exponent();
        let (q4, q2) = (level.powf(0.25), level.sqrt());
        let times = self.times();
        let mut hold: f64 = 0.0;
        let check = |n: usize, first: f64, hold: f64| -> Option<StoppingTime> {
            let reason = if first >= q4 {
                Some("size")
            } else if hold >= q2 {
                Some("time regularity")
            } else {
                None
            };
            reason.map(|r| StoppingTime {
                t_l: times[n].min(level),
                index: Some(n),
                reason: r.into(),
                censored: false,
            })
        };
        match self.spec.kind {
            NoiseKind::Additive => {
                if self.z_modes.len() != self.n_t + 1 {
                    return Err(Error::State("OU field missing".into()));
                }
                let s_hi = (5.0 + self.spec.sigma) / 2.0;
                let s_lo = (3.0 + self.spec.sigma) / 2.0;
                for n in 0..=self.n_t {
                    if times[n] >= level {
                        break;
                    }
                    for m in 0..n {
                        let q = self.z_hdot_diff(n, m, s_lo) / (times[n] - times[m]).powf(alpha);
                        hold = hold.max(c_s * q);
                    }
                    if let Some(s) = check(n, c_s * self.z_hdot(n, s_hi), hold) {
                        return Ok(s);
                    }
                }
            }
            NoiseKind::Multiplicative => {
                if self.brownian.len() != self.n_t + 1 {
                    return Err(Error::State("Brownian path missing".into()));
                }
                let b = &self.brownian;
                for n in 0..=self.n_t {
                    if times[n] >= level {
                        break;
                    }
                    for m in 0..n {
                        hold = hold.max((b[n] - b[m]).abs() / (times[n] - times[m]).powf(alpha));
                    }
                    if let Some(s) = check(n, b[n].abs(), hold) {
                        return Ok(s);
                    }
                }
            }
        }
        Ok(StoppingTime {
            t_l: level,
            index: None,
            reason: "horizon".into(),
            censored: times[self.n_t] < level,
        })
    }

    /// Compute and store the stopping time.
    pub fn stop_at_level(&mut self, c_s: f64) -> Result<&StoppingTime> {
        let s = self.stopping_time(c_s)?;
        self.stop = Some(s);
        Ok(self.stop.as_ref().unwrap())
    }

    /// Stopped `B(t_n)`, zero for `n <= 0`.
    pub fn b_stopped(&self, n: i64) -> f64 {
        if n <= 0 || self.brownian.is_empty() {
            return 0.0;
        }
        self.brownian[self.stopped_index(n as usize)]
    }

    /// `Upsilon = e^B` of the stopped path at every sample.
    pub fn upsilon(&self) -> Vec<f64> {
        (0..=self.n_t as i64).map(|n| self.b_stopped(n).exp()).collect()
    }

    /// One-sided temporal mollification of `Upsilon` and its derivative at
    /// sample `n`; samples before zero use `Upsilon = 1`.
    pub fn upsilon_mollified(&self, tm: &TimeMollifier, n: i64) -> (f64, f64) {
        tm.apply_series(n, |k| self.b_stopped(k).exp())
    }
}

/// Grid Sobolev constant with `|f|_inf <= C_S |f|_{H^{(3+sigma)/2}}` for
/// mean-zero fields on `grid`, by Cauchy-Schwarz over the non-Nyquist modes.
pub fn sobolev_constant(grid: &Grid, sigma: f64) -> f64 {
    let mut acc = 0.0;
    grid.for_each_mode(|_, k, nq| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 && !nq {
            acc += k2.powf(-(3.0 + sigma) / 2.0);
        }
    });
    acc.sqrt() / (2.0 * PI).powf(1.5)
}

/// Largest ratio `|f|_inf / |f|_{H^{(3+sigma)/2}}` over a probe family: the
/// extremal sum, single modes and `count` random spectra.
pub fn measured_sobolev_constant(grid: &Grid, sigma: f64, count: usize, seed: u64) -> f64 {
    let s = (3.0 + sigma) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut probe = |spec: Vec<Complex64>| {
        let f = grid.ifft_real(spec.clone());
        let h = norms::hdot(grid, &[&spec], s);
        if h > 0.0 {
            best = best.max(norms::sup_scalar(&f) / h);
        }
    };
    let mut ext = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut single = vec![Complex64::new(0.0, 0.0); grid.len()];
    grid.for_each_mode(|i, k, nq| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 && !nq {
            ext[i] = Complex64::new(k2.powf(-(3.0 + sigma) / 2.0), 0.0);
            if k2 == 1.0 && k[0] == 1.0 {
                single[i] = Complex64::new(1.0, 0.0);
                single[grid.neg_index(i)] = Complex64::new(1.0, 0.0);
            }
        }
    });
    probe(ext);
    probe(single);
    for _ in 0..count {
        let mut sp = vec![Complex64::new(0.0, 0.0); grid.len()];
        grid.for_each_mode(|i, k, nq| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let j = grid.neg_index(i);
            if k2 > 0.0 && !nq && i < j {
                let c = complex_normal(&mut rng, 1.0) * k2.powf(-(3.0 + sigma) / 2.0);
                sp[i] = c;
                sp[j] = c.conj();
            }
        });
        probe(sp);
    }
    best
}

/// Measured noise bounds on `[0, T_L]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseBounds {
    pub sup: f64,
    pub grad_sup: f64,
    pub time_holder: f64,
    /// Multiplicative: `[Upsilon]_{C^alpha} + |Upsilon| + |Upsilon^{-1}|`.
    pub upsilon_bound: f64,
    pub limit_quarter: f64,
    pub limit_half: f64,
    pub m_l_squared: f64,
}

impl NoiseBounds {
    pub fn holds(&self, kind: NoiseKind) -> bool {
        match kind {
            NoiseKind::Additive => {
                self.sup <= self.limit_quarter
                    && self.grad_sup <= self.limit_quarter
                    && self.time_holder <= self.limit_half
            }
            NoiseKind::Multiplicative => {
                self.sup <= self.limit_quarter
                    && self.time_holder <= self.limit_half
                    && self.upsilon_bound <= self.m_l_squared
            }
        }
    }
}

/// `m_L = sqrt 3 L^{1/4} e^{L^{1/4} / 2}`.
pub fn m_l(level: f64) -> f64 {
    3f64.sqrt() * level.powf(0.25) * (0.5 * level.powf(0.25)).exp()
}

/// `ln m_L`, finite where `m_L` overflows.
pub fn ln_m_l(level: f64) -> f64 {
    0.5 * 3f64.ln() + 0.25 * level.ln() + 0.5 * level.powf(0.25)
}

/// Evaluate the pathwise bounds on the samples up to the stopping time.
pub fn measure_bounds(path: &NoisePath, grid: &Grid) -> Result<NoiseBounds> {
    let stop = path.stop.as_ref().ok_or_else(|| Error::State("stopping time not computed".into()))?;
    let last = match stop.index {
        Some(c) => c.saturating_sub(1),
        None => path.n_t,
    };
    let times = path.times();
    let last = (0..=last).rev().find(|&n| times[n] <= stop.t_l).unwrap_or(0);
    let alpha = path.spec.time_exponent();
    let level = path.spec.level;
    let mut b = NoiseBounds {
        sup: 0.0,
        grad_sup: 0.0,
        time_holder: 0.0,
        upsilon_bound: 0.0,
        limit_quarter: level.powf(0.25),
        limit_half: level.sqrt(),
        m_l_squared: m_l(level).powi(2),
    };
    match path.spec.kind {
        NoiseKind::Additive => {
            let slices: Vec<Vector> = (0..=last).map(|n| path.z_phys(grid, n)).collect();
            for (n, z) in slices.iter().enumerate() {
                b.sup = b.sup.max(norms::sup_vec(z));
                let g = ops::vector_gradient(grid, z);
                let frob: Vec<f64> = (0..grid.len())
                    .map(|p| {
                        let mut s = 0.0;
                        for gi in &g {
                            for c in gi {
                                s += c[p] * c[p];
                            }
                        }
                        s.sqrt()
                    })
                    .collect();
                b.grad_sup = b.grad_sup.max(norms::sup_scalar(&frob));
                for m in 0..n {
                    let d = ops::vec_sub(z, &slices[m]);
                    b.time_holder = b.time_holder.max(norms::sup_vec(&d) / (times[n] - times[m]).powf(alpha));
                }
            }
        }
        NoiseKind::Multiplicative => {
            let bb = &path.brownian;
            for n in 0..=last {
                b.sup = b.sup.max(bb[n].abs());
                for m in 0..n {
                    let h = (times[n] - times[m]).powf(alpha);
                    b.time_holder = b.time_holder.max((bb[n] - bb[m]).abs() / h);
                }
            }
            // [Upsilon]_{C^alpha} on [0, t] plus the pointwise terms at t.
            let mut semi: f64 = 0.0;
            for n in 0..=last {
                for m in 0..n {
                    let h = (times[n] - times[m]).powf(alpha);
                    semi = semi.max((bb[n].exp() - bb[m].exp()).abs() / h);
                }
                let u = bb[n].exp();
                b.upsilon_bound = b.upsilon_bound.max(semi + u + 1.0 / u);
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: NoiseKind) -> NoiseSpec {
        NoiseSpec { kind, m: 0.3, sigma: 0.1, g_decay: 4.5, amplitude: 1.0, seed: 7, level: 2.0, delta: 0.02 }
    }

    #[test]
    fn validation_rejects_boundary_decay() {
        let mut s = spec(NoiseKind::Additive);
        s.g_decay = 4.0 - s.m + 2.0 * s.sigma;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        s.g_decay += 1e-9;
        assert!(s.validate().is_ok());
        s.delta = 0.05;
        assert!(s.validate().is_err());
    }

    #[test]
    fn z_starts_at_zero_and_is_solenoidal() {
        let g = Grid::cubic(8).unwrap();
        let p = NoisePath::additive(&spec(NoiseKind::Additive), 8, 0.01, 5).unwrap();
        assert!(p.z_phys(&g, 0).iter().all(|c| c.iter().all(|v| *v == 0.0)));
        let z = p.z_phys(&g, 5);
        let div = ops::divergence(&g, &z);
        assert!(norms::sup_scalar(&div) < 1e-12 * norms::sup_vec(&z).max(1e-300));
        assert!(norms::sup_vec(&z) > 0.0);
    }

    #[test]
    fn zero_noise_stops_at_horizon() {
        let p = NoisePath::zero(&spec(NoiseKind::Additive), 8, 0.01, 10).unwrap();
        let s = p.stopping_time(1.0).unwrap();
        assert_eq!(s.t_l, 2.0);
        assert!(s.censored);
        let q = NoisePath::zero(&spec(NoiseKind::Multiplicative), 8, 0.01, 10).unwrap();
        assert!(q.upsilon().iter().all(|u| *u == 1.0));
    }

    #[test]
    fn sobolev_constant_is_attained_by_extremal_probe() {
        let g = Grid::cubic(8).unwrap();
        let c = sobolev_constant(&g, 0.1);
        let m = measured_sobolev_constant(&g, 0.1, 20, 1);
        assert!((m - c).abs() < 1e-12 * c);
    }
}
