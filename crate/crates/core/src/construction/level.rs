//! Level data as seen by the step: the explicit base level, stored levels,
//! and their space-time mollification.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::rc::Rc;

use crate::beltrami::WaveSystem;
use crate::error::{Error, Result};
use crate::noise::{NoiseKind, NoisePath};
use crate::spectral::mollify::{SpaceMollifier, TimeMollifier};
use crate::spectral::ops::{self, traceless_product_acc, zero_tensor, zero_vector, zeros};
use crate::spectral::{Grid, Scalar, Tensor, Vector};

use super::schedule::{Regime, Schedule};
use super::state::{IterationState, LevelSlice};

/// Physical samples keyed by time index; the smallest key is evicted first.
#[derive(Debug)]
pub struct SampleCache<T> {
    cap: usize,
    map: BTreeMap<i64, Rc<T>>,
}

impl<T> SampleCache<T> {
    pub fn new(cap: usize) -> SampleCache<T> {
        SampleCache { cap: cap.max(1), map: BTreeMap::new() }
    }

    pub fn get_or(&mut self, n: i64, make: impl FnOnce() -> T) -> Rc<T> {
        if let Some(v) = self.map.get(&n) {
            return v.clone();
        }
        let v = Rc::new(make());
        if self.map.len() >= self.cap {
            let first = *self.map.keys().next().unwrap();
            self.map.remove(&first);
        }
        self.map.insert(n, v.clone());
        v
    }

    pub fn set_capacity(&mut self, cap: usize) {
        self.cap = cap.max(1);
        while self.map.len() > self.cap {
            let first = *self.map.keys().next().unwrap();
            self.map.remove(&first);
        }
    }
}

/// Base-level shear `v_0 = A(t) sin(x_3) e_1` with its stress and pressure.
#[derive(Debug, Clone)]
pub struct BaseProfile {
    pub regime: Regime,
    pub level: f64,
    sin3: Scalar,
    cos3: Scalar,
}

impl BaseProfile {
    pub fn new(grid: &Grid, regime: Regime, level: f64) -> BaseProfile {
        let [nx, ny, nz] = grid.dims();
        let mut sin3 = Vec::with_capacity(grid.len());
        let mut cos3 = Vec::with_capacity(grid.len());
        for iz in 0..nz {
            let x3 = grid.coord(2, iz);
            for _ in 0..nx * ny {
                sin3.push(x3.sin());
                cos3.push(x3.cos());
            }
        }
        BaseProfile { regime, level, sin3, cos3 }
    }

    /// Shear amplitude; also used for `t < 0`.
    pub fn amplitude(&self, t: f64) -> f64 {
        let l = self.level;
        let c = (2.0 * PI).powf(-1.5);
        match self.regime {
            Regime::Additive => c * l * l * (2.0 * l * t).exp(),
            Regime::Multiplicative => c * crate::noise::m_l(l) * (2.0 * l * t + l).exp(),
        }
    }

    /// Factor of the cosine stress `A C` in `R_0`.
    pub fn stress_factor(&self) -> f64 {
        match self.regime {
            Regime::Additive => 2.0 * self.level + 1.0,
            Regime::Multiplicative => 2.0 * self.level + 1.5,
        }
    }

    pub fn sin3(&self) -> &[f64] {
        &self.sin3
    }

    fn shear(&self, amp: f64) -> Vector {
        let n = self.sin3.len();
        [self.sin3.iter().map(|s| amp * s).collect(), zeros(n), zeros(n)]
    }

    /// Add `coef * C`, `C = -cos(x_3)(e_1 (x) e_3 + e_3 (x) e_1)`.
    fn add_cosine(&self, r: &mut Tensor, coef: f64) {
        for (o, c) in r[2].iter_mut().zip(&self.cos3) {
            *o -= coef * c;
        }
    }

    /// Add `coef * s^2 (e_1 (x) e_1 - Id / 3)`.
    fn add_shear_product(&self, r: &mut Tensor, coef: f64) {
        for (p, s) in self.sin3.iter().enumerate() {
            let v = coef * s * s;
            r[0][p] += 2.0 * v / 3.0;
            r[3][p] -= v / 3.0;
            r[5][p] -= v / 3.0;
        }
    }

    /// Noise-driven part of `R_0`: `v_0 (x) z + z (x) v_0 + z (x) z`, trace
    /// free, for shear amplitude `amp`.
    fn add_noise_stress(&self, r: &mut Tensor, coef: f64, amp: f64, z: &Vector) {
        let v = self.shear(amp);
        traceless_product_acc(r, 2.0 * coef, &v, z);
        traceless_product_acc(r, coef, z, z);
    }

    /// `-(2 v_0 . z + |z|^2) / 3`.
    fn noise_pressure(&self, amp: f64, z: &Vector) -> Scalar {
        (0..self.sin3.len())
            .map(|p| {
                let zz = z[0][p] * z[0][p] + z[1][p] * z[1][p] + z[2][p] * z[2][p];
                -(2.0 * amp * self.sin3[p] * z[0][p] + zz) / 3.0
            })
            .collect()
    }

    /// `(v_0, R_0, pi_0)` at time `t` with forcing `z` (additive only).
    pub fn slice(&self, t: f64, z: Option<&Vector>) -> LevelSlice {
        let n = self.sin3.len();
        let amp = self.amplitude(t);
        let mut r = zero_tensor(n);
        self.add_cosine(&mut r, self.stress_factor() * amp);
        let mut p = zeros(n);
        if let (Regime::Additive, Some(z)) = (self.regime, z) {
            self.add_noise_stress(&mut r, 1.0, amp, z);
            p = self.noise_pressure(amp, z);
        }
        LevelSlice { v: self.shear(amp), r, p }
    }
}

/// Space-time mollified level at one sample, with the quantities the step
/// consumes.
#[derive(Debug, Clone)]
pub struct Mollified {
    pub n: i64,
    pub t: f64,
    pub v: Vector,
    /// `z_l`; zero for multiplicative noise.
    pub z: Vector,
    /// Advecting velocity `v_l + z_l` or `Upsilon_l v_l`.
    pub u: Vector,
    pub r: Tensor,
    pub dr: Tensor,
    /// `pi_l` (additive) or `p_l` (multiplicative).
    pub p: Scalar,
    /// First commutator stress.
    pub com1: Tensor,
    pub ups: f64,
    pub dups: f64,
}

enum Data<'a> {
    Base(BaseProfile),
    Stored(&'a IterationState),
}

/// A level `q` together with the forcing it was built against.
pub struct LevelSource<'a> {
    pub q: usize,
    pub regime: Regime,
    pub grid: &'a Grid,
    pub dt: f64,
    noise: &'a NoisePath,
    data: Data<'a>,
    zcache: RefCell<SampleCache<Vector>>,
}

impl<'a> LevelSource<'a> {
    fn check_noise(grid: &Grid, regime: Regime, noise: &NoisePath, dt: f64) -> Result<()> {
        let kind = match regime {
            Regime::Additive => NoiseKind::Additive,
            Regime::Multiplicative => NoiseKind::Multiplicative,
        };
        if noise.spec.kind != kind {
            return Err(Error::Type(format!("{:?} regime given a {:?} noise path", regime, noise.spec.kind)));
        }
        if noise.grid_n != grid.n() {
            return Err(Error::State(format!("noise on {}^3, level on {}^3", noise.grid_n, grid.n())));
        }
        if (noise.dt - dt).abs() > 1e-12 * dt {
            return Err(Error::State(format!("noise dt {} differs from level dt {dt}", noise.dt)));
        }
        if kind == NoiseKind::Additive && noise.z_modes.len() != noise.n_t + 1 {
            return Err(Error::State("additive regime needs the OU field".into()));
        }
        Ok(())
    }

    /// The base level `q = 0`. Additive runs need a path with `z`; pass a
    /// zero-amplitude path for the deterministic case.
    pub fn base(grid: &'a Grid, schedule: &Schedule, noise: Option<&'a NoisePath>, dt: f64) -> Result<LevelSource<'a>> {
        let noise = noise.ok_or_else(|| Error::State("base level requires a noise path".into()))?;
        LevelSource::check_noise(grid, schedule.regime, noise, dt)?;
        Ok(LevelSource {
            q: 0,
            regime: schedule.regime,
            grid,
            dt,
            noise,
            data: Data::Base(BaseProfile::new(grid, schedule.regime, schedule.level)),
            zcache: RefCell::new(SampleCache::new(96)),
        })
    }

    pub fn stored(grid: &'a Grid, state: &'a IterationState, noise: &'a NoisePath) -> Result<LevelSource<'a>> {
        LevelSource::check_noise(grid, state.regime, noise, state.dt)?;
        if state.grid_n != grid.n() {
            return Err(Error::State("stored level on a different grid".into()));
        }
        Ok(LevelSource {
            q: state.q,
            regime: state.regime,
            grid,
            dt: state.dt,
            noise,
            data: Data::Stored(state),
            zcache: RefCell::new(SampleCache::new(96)),
        })
    }

    /// Number of `z` samples kept in memory.
    pub fn set_cache_capacity(&self, cap: usize) {
        self.zcache.borrow_mut().set_capacity(cap);
    }

    pub fn noise(&self) -> &NoisePath {
        self.noise
    }

    pub fn base_profile(&self) -> Option<&BaseProfile> {
        match &self.data {
            Data::Base(b) => Some(b),
            Data::Stored(_) => None,
        }
    }

    /// Stopped `z(t_n)`; zero for `n <= 0` and for multiplicative noise.
    pub fn z(&self, n: i64) -> Rc<Vector> {
        let grid = self.grid;
        let noise = self.noise;
        let regime = self.regime;
        self.zcache.borrow_mut().get_or(n, || match regime {
            Regime::Additive => noise.z_stopped(grid, n),
            Regime::Multiplicative => zero_vector(grid.len()),
        })
    }

    fn z_vanishes(&self, n: i64) -> bool {
        n <= 0 || self.regime == Regime::Multiplicative || self.noise.spec.amplitude == 0.0
    }

    /// `Upsilon(t_n)`; one for additive noise.
    pub fn upsilon(&self, n: i64) -> f64 {
        match self.regime {
            Regime::Additive => 1.0,
            Regime::Multiplicative => self.noise.b_stopped(n).exp(),
        }
    }

    /// Level samples `(v_q, R_q, pi_q)` at index `n`.
    pub fn slice(&self, n: i64) -> LevelSlice {
        match &self.data {
            Data::Base(b) => {
                let z = (self.regime == Regime::Additive).then(|| self.z(n));
                b.slice(n as f64 * self.dt, z.as_deref())
            }
            Data::Stored(s) => s.slice_clamped(n).clone(),
        }
    }

    fn stored_v(&self, m: i64) -> &Vector {
        match &self.data {
            Data::Stored(s) => &s.slice_clamped(m).v,
            Data::Base(_) => unreachable!(),
        }
    }

    /// Time-mollified velocity and forcing (before space mollification).
    fn time_velocity(&self, tm: &TimeMollifier, n: i64) -> (Vector, Vector) {
        let len = self.grid.len();
        let t = n as f64 * self.dt;
        let mut v = zero_vector(len);
        let mut z = zero_vector(len);
        match &self.data {
            Data::Base(b) => {
                let (amp, _) = tm.apply_profile(t, |s| b.amplitude(s));
                v = b.shear(amp);
            }
            Data::Stored(_) => {
                for (k, w) in tm.weights.iter().enumerate() {
                    ops::vec_axpy(&mut v, *w, self.stored_v(n - k as i64));
                }
            }
        }
        if self.regime == Regime::Additive {
            for (k, w) in tm.weights.iter().enumerate() {
                let m = n - k as i64;
                if !self.z_vanishes(m) {
                    ops::vec_axpy(&mut z, *w, &self.z(m));
                }
            }
        }
        (v, z)
    }

    fn upsilon_mollified(&self, tm: &TimeMollifier, n: i64) -> (f64, f64) {
        match self.regime {
            Regime::Additive => (1.0, 0.0),
            Regime::Multiplicative => tm.apply_series(n, |m| self.upsilon(m)),
        }
    }

    /// Advecting velocity at sample `n`.
    pub fn advecting_velocity(&self, tm: &TimeMollifier, sm: &SpaceMollifier, n: i64) -> Vector {
        let (v, z) = self.time_velocity(tm, n);
        let v = sm.apply_vector(self.grid, &v);
        match self.regime {
            Regime::Additive => ops::vec_add(&v, &sm.apply_vector(self.grid, &z)),
            Regime::Multiplicative => {
                let (ups, _) = self.upsilon_mollified(tm, n);
                v.map(|c| c.into_iter().map(|x| ups * x).collect())
            }
        }
    }

    /// Full mollified bundle at sample `n`.
    pub fn mollify(&self, tm: &TimeMollifier, sm: &SpaceMollifier, n: i64) -> Mollified {
        let grid = self.grid;
        let len = grid.len();
        let t = n as f64 * self.dt;
        let (v, z) = self.time_velocity(tm, n);
        let (ups, dups) = self.upsilon_mollified(tm, n);
        let mut r = zero_tensor(len);
        let mut dr = zero_tensor(len);
        let mut p = zeros(len);
        // Mollified trace-free nonlinearity and its trace part |u|^2.
        let mut big_p = zero_tensor(len);
        let mut u2 = zeros(len);
        match &self.data {
            Data::Base(b) => {
                let (amp, damp) = tm.apply_profile(t, |s| b.amplitude(s));
                b.add_cosine(&mut r, b.stress_factor() * amp);
                b.add_cosine(&mut dr, b.stress_factor() * damp);
                match self.regime {
                    Regime::Additive => {
                        let (amp2, _) = tm.apply_profile(t, |s| b.amplitude(s).powi(2));
                        b.add_shear_product(&mut big_p, amp2);
                        for (k, (w, dw)) in tm.weights.iter().zip(&tm.dweights).enumerate() {
                            let m = n - k as i64;
                            if self.z_vanishes(m) {
                                continue;
                            }
                            let zm = self.z(m);
                            let am = b.amplitude(m as f64 * self.dt);
                            b.add_noise_stress(&mut r, *w, am, &zm);
                            b.add_noise_stress(&mut dr, *dw, am, &zm);
                            b.add_noise_stress(&mut big_p, *w, am, &zm);
                            ops::axpy(&mut p, *w, &b.noise_pressure(am, &zm));
                        }
                        for (i, s) in b.sin3.iter().enumerate() {
                            u2[i] = amp2 * s * s - 3.0 * p[i];
                        }
                    }
                    Regime::Multiplicative => {
                        let (c, _) = tm.apply_series(n, |m| self.upsilon(m) * b.amplitude(m as f64 * self.dt).powi(2));
                        b.add_shear_product(&mut big_p, c);
                        for (i, s) in b.sin3.iter().enumerate() {
                            u2[i] = c * s * s;
                        }
                    }
                }
            }
            Data::Stored(state) => {
                for (k, (w, dw)) in tm.weights.iter().zip(&tm.dweights).enumerate() {
                    let m = n - k as i64;
                    let s = state.slice_clamped(m);
                    ops::ten_axpy(&mut r, *w, &s.r);
                    ops::ten_axpy(&mut dr, *dw, &s.r);
                    ops::axpy(&mut p, *w, &s.p);
                    let (um, weight) = match self.regime {
                        Regime::Additive => (ops::vec_add(&s.v, &self.z(m)), *w),
                        Regime::Multiplicative => (s.v.clone(), *w * self.upsilon(m)),
                    };
                    traceless_product_acc(&mut big_p, weight, &um, &um);
                    ops::axpy(&mut u2, weight, &ops::dot(&um, &um));
                }
            }
        }

        let v = sm.apply_vector(grid, &v);
        let z = sm.apply_vector(grid, &z);
        let r = sm.apply_tensor(grid, &r);
        let dr = sm.apply_tensor(grid, &dr);
        let big_p = sm.apply_tensor(grid, &big_p);
        let mut rest = sm.apply_many(grid, &[&p, &u2]).into_iter();
        let (p, u2) = (rest.next().unwrap(), rest.next().unwrap());

        let (u, nu) = match self.regime {
            Regime::Additive => (ops::vec_add(&v, &z), 1.0),
            Regime::Multiplicative => (v.clone().map(|c| c.into_iter().map(|x| ups * x).collect()), ups),
        };
        // com1 = nu v~ (x) v~ - moll P, with v~ the nonlinear velocity.
        let nl = match self.regime {
            Regime::Additive => &u,
            Regime::Multiplicative => &v,
        };
        let mut com1 = big_p;
        for c in com1.iter_mut() {
            for x in c.iter_mut() {
                *x = -*x;
            }
        }
        traceless_product_acc(&mut com1, nu, nl, nl);
        let nl2 = ops::dot(nl, nl);
        let p: Scalar = (0..len).map(|i| p[i] - (nu * nl2[i] - u2[i]) / 3.0).collect();
        Mollified { n, t, v, z, u, r, dr, p, com1, ups, dups }
    }
}

/// Exploratory `c_R`: chosen so that the base stress stays at the fraction
/// `theta` of the admissible radius, using the stopping-time bound
/// `|z| <= L^{1/4}` for the forcing terms. `times` should cover the
/// mollification history before zero.
pub fn exploratory_c_r(schedule: &Schedule, system: &WaveSystem, times: &[f64], theta: f64) -> f64 {
    let grid_free = |t: f64| -> f64 {
        let l = schedule.level;
        let c = (2.0 * PI).powf(-1.5);
        let m0 = schedule.m0(t);
        match schedule.regime {
            Regime::Additive => {
                let amp = c * l * l * (2.0 * l * t).exp();
                let forcing = if t > 0.0 { 8.0 / 3.0 * amp * l.powf(0.25) + 2.0 / 3.0 * l.sqrt() } else { 0.0 };
                ((2.0 * l + 1.0) * amp + forcing) / m0
            }
            Regime::Multiplicative => {
                let amp = c * crate::noise::m_l(l) * (2.0 * l * t + l).exp();
                (2.0 * l + 1.5) * amp / m0
            }
        }
    };
    let rho = times.iter().map(|&t| grid_free(t)).fold(0.0, f64::max);
    let root = rho / (theta * system.c_star * schedule.delta(1));
    root * root
}
