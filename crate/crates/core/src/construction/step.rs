//! One iteration `(v_q, R_q, pi_q) -> (v_{q+1}, R_{q+1}, pi_{q+1})`,
//! streamed over the output samples.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::WaveSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, Sym3, SYM};
use crate::spectral::mollify::{SpaceMollifier, TimeMollifier};
use crate::spectral::ops::{self, traceless_product_acc, zero_tensor, zero_vector, zeros, Spec};
use crate::spectral::{norms, Grid, Scalar, Tensor, Vector};

use super::cutoff::Cutoffs;
use super::flow::{self, VelocityTrack};
use super::level::{LevelSource, Mollified};
use super::schedule::{Regime, Schedule};
use super::state::{IterationState, LevelSlice};

/// Offset shell of the Hoelder estimator for increments.
pub const HOLDER_SHELL: usize = 4;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Stress terms in reporting order.
pub const TERMS: [&str; 7] = ["line", "tran", "osc", "nash", "corr", "com1", "com2"];

/// Per-sample measurements of a step.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct StepDiag {
    pub n: i64,
    pub t: f64,
    /// `sup_x |R_term|` in the order of [`TERMS`].
    pub terms: Vec<f64>,
    /// `c_R M_0(t) delta_{q+2}`, the size the terms are compared with.
    pub target: f64,
    /// `sup |X_D|`: transport-defect terms dropped from `R_tran` and `R_corr`.
    pub defect: f64,
    /// Relative error of the point-wise amplitude identity.
    pub identity_err: f64,
    /// `sup |R_l|_op / (c_R^{1/2} delta_{q+1} M_0)`, to be kept below `C*`.
    pub domain_ratio: f64,
    /// `w_p + w_c` against the curl form, relative to `sup |w|`.
    pub curl_err: f64,
    /// `sup |div w| / (lambda sup |w|)`.
    pub div_err: f64,
    pub mean_err: f64,
    /// `max |grad Phi_j - Id|` over the active windows.
    pub flow_dev: f64,
    /// `sup |v_{q+1} - v_q| / M_0^{1/2}`.
    pub increment: f64,
    pub w_p: f64,
    pub w_c: f64,
    pub r_sup: f64,
    /// `|v_{q+1} - v_q|_{C^gamma}` for each requested `gamma`.
    #[serde(default)]
    pub increment_holder: Vec<f64>,
}

/// One output sample of a step.
#[derive(Debug, Clone)]
pub struct StepSlice {
    pub n: i64,
    pub t: f64,
    pub level: LevelSlice,
    pub w_p: Vector,
    pub w_c: Vector,
    /// Raw forcing at `t`: `z(t)` (additive) and `Upsilon(t)`.
    pub z: Vector,
    pub ups: f64,
    pub diag: StepDiag,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StepSummary {
    pub q: usize,
    pub lambda_eff: i64,
    pub lambda: f64,
    pub l: f64,
    pub c_r: f64,
    pub n_lo: i64,
    pub n_hi: i64,
    /// Maxima over samples of each stress term, raw and relative to the target.
    pub term_max: Vec<f64>,
    pub term_ratio: Vec<f64>,
    pub defect_max: f64,
    pub identity_err: f64,
    pub domain_ratio: f64,
    pub curl_err: f64,
    pub div_err: f64,
    pub mean_err: f64,
    pub flow_dev: f64,
    pub increment_ratio: f64,
    pub increment_bound: f64,
    pub w_p_max: f64,
    pub w_c_max: f64,
    /// Whether the space mollifier reduced to the identity.
    pub space_identity: bool,
    pub gammas: Vec<f64>,
    /// `sup_t |v_{q+1} - v_q|_{C^gamma}` per entry of `gammas`.
    pub increment_holder: Vec<f64>,
}

impl StepSummary {
    fn absorb(&mut self, d: &StepDiag) {
        for (i, v) in d.terms.iter().enumerate() {
            self.term_max[i] = self.term_max[i].max(*v);
            self.term_ratio[i] = self.term_ratio[i].max(v / d.target);
        }
        self.defect_max = self.defect_max.max(d.defect);
        self.identity_err = self.identity_err.max(d.identity_err);
        self.domain_ratio = self.domain_ratio.max(d.domain_ratio);
        self.curl_err = self.curl_err.max(d.curl_err);
        self.div_err = self.div_err.max(d.div_err);
        self.mean_err = self.mean_err.max(d.mean_err);
        self.flow_dev = self.flow_dev.max(d.flow_dev);
        self.increment_ratio = self.increment_ratio.max(d.increment);
        self.w_p_max = self.w_p_max.max(d.w_p);
        self.w_c_max = self.w_c_max.max(d.w_c);
        for (m, v) in self.increment_holder.iter_mut().zip(&d.increment_holder) {
            *m = m.max(*v);
        }
    }
}

/// Check that the waves of frequency `lambda_eff` are resolved: every
/// component of `lambda zeta` must be at most a quarter of the grid size.
pub fn check_resolution(grid: &Grid, system: &WaveSystem, lambda_eff: i64) -> Result<()> {
    let mut worst = 0;
    for f in &system.families {
        for d in &f.directions {
            let k = d
                .wave_vector(lambda_eff)
                .ok_or_else(|| Error::Resolution(format!("lambda = {lambda_eff} incompatible with {:?}", d.int_dir)))?;
            worst = worst.max(k.iter().map(|v| v.abs()).max().unwrap());
        }
    }
    if 4 * worst as usize > grid.n() {
        return Err(Error::Resolution(format!(
            "waves with |k_i| = {worst} need grid_n >= {}, have {}",
            4 * worst,
            grid.n()
        )));
    }
    Ok(())
}

/// Trajectories of one flow map on consecutive indices.
struct Trajectory {
    j: i64,
    n0: i64,
    psi: Vec<Vector>,
}

/// Spectral derivatives of the mollified stress.
struct StressDerivs {
    /// `d_a R_c` at `[c * 3 + a]`.
    grad: Vec<Vec<f64>>,
    /// `d_a d_b R_c` at `[c * 6 + SYM[a][b]]`.
    hess: Vec<Vec<f64>>,
    /// `d_a d_t R_c` at `[c * 3 + a]`.
    grad_t: Vec<Vec<f64>>,
}

fn stress_derivs(grid: &Grid, r: &Tensor, dr: &Tensor) -> StressDerivs {
    let rs = ops::tensor_spec(grid, r);
    let drs = ops::tensor_spec(grid, dr);
    let mut g_specs: Vec<Spec> = Vec::with_capacity(18);
    let mut h_specs: Vec<Spec> = Vec::with_capacity(36);
    let mut gt_specs: Vec<Spec> = Vec::with_capacity(18);
    for c in 0..6 {
        for a in 0..3 {
            g_specs.push(ops::deriv_spec(grid, &rs[c], a));
            gt_specs.push(ops::deriv_spec(grid, &drs[c], a));
        }
        let mut hc: Vec<Option<Spec>> = vec![None; 6];
        for a in 0..3 {
            for b in a..3 {
                hc[SYM[a][b]] = Some(ops::deriv2_spec(grid, &rs[c], a, b));
            }
        }
        h_specs.extend(hc.into_iter().map(|s| s.unwrap()));
    }
    let phys = |s: &[Spec]| -> Vec<Vec<f64>> {
        let refs: Vec<&[Complex64]> = s.iter().map(|v| v.as_slice()).collect();
        grid.ifft_many(&refs)
    };
    StressDerivs { grad: phys(&g_specs), hess: phys(&h_specs), grad_t: phys(&gt_specs) }
}

/// Per-window data at one sample.
struct WindowData {
    j: i64,
    chi: f64,
    dchi: f64,
    psi: Vector,
    grad_psi: [Vector; 3],
    defect: Vector,
    grad_defect: [Vector; 3],
}

/// Pair functional with doubled off-diagonals so that `<F, X>` is a plain
/// dot product of packed entries.
fn packed(f: &Sym3) -> [f64; 6] {
    [f[0], 2.0 * f[1], 2.0 * f[2], f[3], 2.0 * f[4], f[5]]
}

/// Output of the point-wise kernel at one sample.
struct KernelOut {
    w_p: Vector,
    w_c_sum: Vector,
    x_tran: Vector,
    x_corr: Vector,
    x_d: Vector,
    osc: Vector,
    pi_osc: Scalar,
    identity_err: f64,
    domain_ratio: f64,
}

/// The step engine for one level.
pub struct Step<'s, 'a> {
    pub source: &'s LevelSource<'a>,
    pub schedule: &'s Schedule,
    pub system: &'s WaveSystem,
    grid: &'a Grid,
    q: usize,
    lambda_eff: i64,
    lam: f64,
    l: f64,
    dt: f64,
    tm: TimeMollifier,
    sm: SpaceMollifier,
    cutoffs: Cutoffs,
    coords: [Vec<f64>; 3],
    funcs: [[[f64; 6]; 6]; 2],
    c_id: [[f64; 6]; 2],
    /// When false the perturbation is omitted and only the mollified level
    /// and its commutators are assembled.
    pub perturb: bool,
    /// Hoelder exponents at which increments are measured.
    pub gammas: Vec<f64>,
}

impl<'s, 'a> Step<'s, 'a> {
    pub fn new(source: &'s LevelSource<'a>, schedule: &'s Schedule, system: &'s WaveSystem) -> Result<Step<'s, 'a>> {
        let grid = source.grid;
        let q = source.q;
        let lambda_eff = schedule.effective_lambda(q + 1)?;
        check_resolution(grid, system, lambda_eff)?;
        let l = schedule.mollifier_scale(q);
        let dt = source.dt;
        let funcs = [0, 1].map(|f| {
            let fam = system.family(f);
            std::array::from_fn(|p| packed(&fam.solver.functionals[p]))
        });
        let c_id = [0, 1].map(|f| system.family(f).solver.c_identity);
        let [nx, ny, nz] = grid.dims();
        let mut coords: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    coords[0].push(grid.coord(0, ix));
                    coords[1].push(grid.coord(1, iy));
                    coords[2].push(grid.coord(2, iz));
                }
            }
        }
        Ok(Step {
            source,
            schedule,
            system,
            grid,
            q,
            lambda_eff,
            lam: lambda_eff as f64,
            l,
            dt,
            tm: TimeMollifier::new(l, dt),
            sm: SpaceMollifier::new(grid, l),
            cutoffs: Cutoffs::new(l),
            coords,
            funcs,
            c_id,
            perturb: true,
            gammas: Vec::new(),
        })
    }

    pub fn mollifier_len(&self) -> usize {
        self.tm.len()
    }

    /// Samples of level `q` needed before `lo` by a step producing `lo..`.
    pub fn history(&self) -> i64 {
        2 * self.tm.len() as i64 + 8 + (self.l / self.dt).ceil() as i64
    }

    fn kappa(&self, t: f64) -> f64 {
        self.schedule.c_r.sqrt() * self.schedule.delta(self.q + 1) * self.schedule.m0(t)
    }

    fn segment_of(&self, n: i64) -> i64 {
        self.cutoffs.segment(n as f64 * self.dt)
    }

    /// First and last sample index of segment `s`.
    fn segment_range(&self, s: i64) -> (i64, i64) {
        let guess = (s as f64 * self.l / self.dt).floor() as i64;
        let mut a = guess - 2;
        while self.segment_of(a) < s {
            a += 1;
        }
        let mut b = a;
        while self.segment_of(b + 1) == s {
            b += 1;
        }
        (a, b)
    }

    /// Run the step on output samples `lo..=hi`, handing each to `sink`.
    pub fn run(&self, lo: i64, hi: i64, sink: &mut dyn FnMut(StepSlice) -> Result<()>) -> Result<StepSummary> {
        let grid = self.grid;
        let mut summary = StepSummary {
            q: self.q,
            lambda_eff: self.lambda_eff,
            lambda: self.schedule.lambda(self.q + 1),
            l: self.l,
            c_r: self.schedule.c_r,
            n_lo: lo,
            n_hi: hi,
            term_max: vec![0.0; TERMS.len()],
            term_ratio: vec![0.0; TERMS.len()],
            defect_max: 0.0,
            identity_err: 0.0,
            domain_ratio: 0.0,
            curl_err: 0.0,
            div_err: 0.0,
            mean_err: 0.0,
            flow_dev: 0.0,
            increment_ratio: 0.0,
            increment_bound: match self.schedule.regime {
                Regime::Additive => 1.0,
                Regime::Multiplicative => self.schedule.m_l(),
            } * self.schedule.delta(self.q + 1).sqrt(),
            w_p_max: 0.0,
            w_c_max: 0.0,
            space_identity: self.sm.identity,
            gammas: self.gammas.clone(),
            increment_holder: vec![0.0; self.gammas.len()],
        };
        if hi < lo {
            return Ok(summary);
        }
        let seg_len = (self.l / self.dt).ceil() as usize + 2;
        self.source.set_cache_capacity(self.tm.len() + seg_len + 16);
        let mut track: Option<VelocityTrack> = None;
        for s in self.segment_of(lo)..=self.segment_of(hi) {
            let (a, b) = self.segment_range(s);
            let (out_a, out_b) = (a.max(lo), b.min(hi));
            if out_a > out_b {
                continue;
            }
            // Advecting velocity on the segment with room for the stencils.
            let (u_lo, u_hi) = (a - 4, b + 4);
            let tr = track.get_or_insert_with(|| VelocityTrack::new(self.dt, u_lo));
            if tr.n_end() <= u_lo || tr.n0 > u_lo {
                *tr = VelocityTrack::new(self.dt, u_lo);
            }
            tr.trim_below(u_lo);
            while tr.n_end() <= u_hi {
                let n = tr.n_end();
                tr.push(self.source.advecting_velocity(&self.tm, &self.sm, n));
            }
            let tr = &*tr;
            // Flow maps of the two windows that can be active here.
            let mut trajs = Vec::new();
            for j in [s, s + 1] {
                let needed = self.perturb && (out_a..=out_b).any(|n| self.cutoffs.active(n as f64 * self.dt).iter().any(|c| c.j == j));
                if needed {
                    let psi = flow::trace(grid, tr, j as f64 * self.l, a - 2, b + 2)?;
                    trajs.push(Trajectory { j, n0: a - 2, psi });
                }
            }
            for n in out_a..=out_b {
                let slice = self.sample(n, tr, &trajs)?;
                summary.absorb(&slice.diag);
                sink(slice)?;
            }
        }
        Ok(summary)
    }

    /// All computations at output sample `n`.
    fn sample(&self, n: i64, track: &VelocityTrack, trajs: &[Trajectory]) -> Result<StepSlice> {
        let grid = self.grid;
        let len = grid.len();
        let t = n as f64 * self.dt;
        let mo = self.source.mollify(&self.tm, &self.sm, n);
        debug_assert!(norms::sup_vec(&ops::vec_sub(&mo.u, track.sample(n))) <= 1e-12 * (1.0 + norms::sup_vec(&mo.u)));
        let derivs = stress_derivs(grid, &mo.r, &mo.dr);
        let gu = ops::vector_gradient(grid, &mo.u);
        let mut windows = Vec::new();
        let mut flow_dev: f64 = 0.0;
        let active = if self.perturb { self.cutoffs.active(t) } else { Vec::new() };
        for c in active {
            let tr = trajs
                .iter()
                .find(|tr| tr.j == c.j)
                .ok_or_else(|| Error::State(format!("flow map {} missing at sample {n}", c.j)))?;
            let i = (n - tr.n0) as usize;
            let psi = tr.psi[i].clone();
            let grad_psi = ops::vector_gradient(grid, &psi);
            let dpsi = flow::time_derivative(&tr.psi, i, self.dt);
            let defect = flow::defect(&dpsi, &mo.u, &grad_psi);
            let grad_defect = ops::vector_gradient(grid, &defect);
            for p in 0..len {
                let s: f64 = (0..3).map(|a| (0..3).map(|b| grad_psi[a][b][p].powi(2)).sum::<f64>()).sum();
                flow_dev = flow_dev.max(s.sqrt());
            }
            windows.push(WindowData { j: c.j, chi: c.value, dchi: c.derivative, psi, grad_psi, defect, grad_defect });
        }
        let k = self.kernel(&mo, &derivs, &gu, &windows)?;
        self.assemble(n, t, mo, k, flow_dev)
    }

    fn kernel(&self, mo: &Mollified, d: &StressDerivs, gu: &[Vector; 3], windows: &[WindowData]) -> Result<KernelOut> {
        let len = self.grid.len();
        let t = mo.t;
        let lam = self.lam;
        let kappa = self.kappa(t);
        let rate = self.schedule.m0_rate();
        let kamp = kappa.sqrt();
        let (bar, dbar) = match self.source.regime {
            Regime::Additive => (1.0, 0.0),
            Regime::Multiplicative => (mo.ups.powf(-0.5), -0.5 * mo.ups.powf(-1.5) * mo.dups),
        };
        let mut out = KernelOut {
            w_p: zero_vector(len),
            w_c_sum: zero_vector(len),
            x_tran: zero_vector(len),
            x_corr: zero_vector(len),
            x_d: zero_vector(len),
            osc: zero_vector(len),
            pi_osc: zeros(len),
            identity_err: 0.0,
            domain_ratio: 0.0,
        };
        struct Entry {
            a: f64,
            ga: [f64; 3],
            e: Complex64,
            b: [Complex64; 3],
            grad_phase: [f64; 3],
        }
        let mut entries: Vec<Entry> = Vec::with_capacity(12);
        for x in 0..len {
            let r: [f64; 6] = std::array::from_fn(|c| mo.r[c][x]);
            let ratio = linalg::op_norm(&r) / kappa;
            out.domain_ratio = out.domain_ratio.max(ratio);
            if ratio > self.system.c_star {
                return Err(Error::Domain(format!(
                    "|R_l|_op / (c_R^1/2 delta M_0) = {ratio:.4} exceeds C* = {:.4} at t = {t}, x = ({:.4}, {:.4}, {:.4})",
                    self.system.c_star, self.coords[0][x], self.coords[1][x], self.coords[2][x]
                )));
            }
            let rt: [f64; 6] = std::array::from_fn(|c| mo.dr[c][x]);
            let u = [mo.u[0][x], mo.u[1][x], mo.u[2][x]];
            let gux: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| gu[i][j][x]));
            let pos = [self.coords[0][x], self.coords[1][x], self.coords[2][x]];
            entries.clear();
            let mut recon = [0.0; 6];
            let mut wp = [0.0; 3];
            let mut wc = [0.0; 3];
            let mut xt = [0.0; 3];
            let mut xc = [0.0; 3];
            let mut xd = [0.0; 3];
            let mut osc = [0.0; 3];
            let mut a2sum = 0.0;
            for w in windows {
                let fam = self.system.family(w.j.rem_euclid(2) as usize);
                let fi = w.j.rem_euclid(2) as usize;
                let psi = [w.psi[0][x], w.psi[1][x], w.psi[2][x]];
                let gpsi: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| w.grad_psi[i][j][x]));
                let dfx = [w.defect[0][x], w.defect[1][x], w.defect[2][x]];
                let gdx: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| w.grad_defect[i][j][x]));
                let kchi = kamp * w.chi;
                let kchi_t = kamp * (0.5 * rate * w.chi + w.dchi);
                for p in 0..6 {
                    let f = &self.funcs[fi][p];
                    let dot6 = |v: &dyn Fn(usize) -> f64| -> f64 { (0..6).map(|c| f[c] * v(c)).sum() };
                    let rho = dot6(&|c| r[c]);
                    let rho_t = dot6(&|c| rt[c]);
                    let g_rho: [f64; 3] = std::array::from_fn(|a| dot6(&|c| d.grad[c * 3 + a][x]));
                    let g_rho_t: [f64; 3] = std::array::from_fn(|a| dot6(&|c| d.grad_t[c * 3 + a][x]));
                    let h_rho: [f64; 6] = std::array::from_fn(|s| dot6(&|c| d.hess[c * 6 + s][x]));
                    let c0 = self.c_id[fi][p] - rho / kappa;
                    if !(c0 > 0.0) {
                        return Err(Error::Domain(format!("pair coefficient {c0} not positive at t = {t}")));
                    }
                    let c_t = (-rho_t + rate * rho) / kappa;
                    let gc: [f64; 3] = g_rho.map(|v| -v / kappa);
                    let gc_t: [f64; 3] = std::array::from_fn(|a| (-g_rho_t[a] + rate * g_rho[a]) / kappa);
                    let gam = c0.sqrt();
                    let gam_t = c_t / (2.0 * gam);
                    let g_gam: [f64; 3] = gc.map(|v| v / (2.0 * gam));
                    let g3 = 4.0 * gam * gam * gam;
                    let h_gam = |a: usize, b: usize| -h_rho[SYM[a][b]] / kappa / (2.0 * gam) - gc[a] * gc[b] / g3;
                    let g_gam_t: [f64; 3] = std::array::from_fn(|a| gc_t[a] / (2.0 * gam) - c_t * gc[a] / g3);
                    // unbarred amplitude
                    let a = kchi * gam;
                    let ga: [f64; 3] = g_gam.map(|v| kchi * v);
                    // barred amplitude and its derivatives
                    let ab = bar * a;
                    let ab_t = dbar * a + bar * (kchi_t * gam + kchi * gam_t);
                    let gab: [f64; 3] = ga.map(|v| bar * v);
                    let gab_t: [f64; 3] =
                        std::array::from_fn(|i| dbar * ga[i] + bar * (kchi_t * g_gam[i] + kchi * g_gam_t[i]));
                    let hab = |i: usize, j: usize| bar * kchi * h_gam(i, j);
                    let dab = ab_t + u[0] * gab[0] + u[1] * gab[1] + u[2] * gab[2];
                    let dgab: [f64; 3] = std::array::from_fn(|i| gab_t[i] + (0..3).map(|c| u[c] * hab(c, i)).sum::<f64>());

                    let dir = fam.pair(p);
                    let zeta = dir.zeta;
                    let kv = dir.wave_vector(self.lambda_eff).unwrap();
                    let g: [f64; 3] = std::array::from_fn(|j| (0..3).map(|i| zeta[i] * gpsi[i][j]).sum());
                    let dg: [f64; 3] = std::array::from_fn(|j| -(0..3).map(|i| gux[i][j] * (zeta[i] + g[i])).sum::<f64>());
                    let phase = (0..3).map(|i| kv[i] as f64 * pos[i] + lam * zeta[i] * psi[i]).sum::<f64>();
                    let (sn, cs) = phase.sin_cos();
                    let e = Complex64::new(cs, sn);
                    let bz = dir.b_zeta;
                    let wv: [Complex64; 3] = bz.map(|b| b * e);
                    // corrector vector C = grad(abar) / lambda + i abar g
                    let cvec: [Complex64; 3] = std::array::from_fn(|i| Complex64::new(gab[i] / lam, ab * g[i]));
                    let cw = linalg::ccross(cvec, wv);
                    let dcvec: [Complex64; 3] =
                        std::array::from_fn(|i| Complex64::new(dgab[i] / lam, dab * g[i] + ab * dg[i]));
                    let dcw = linalg::ccross(dcvec, wv);
                    let zd = lam * (zeta[0] * dfx[0] + zeta[1] * dfx[1] + zeta[2] * dfx[2]);
                    let gzd: [f64; 3] = std::array::from_fn(|j| (0..3).map(|i| zeta[i] * gdx[i][j]).sum());
                    let extra = linalg::ccross(gzd.map(|v| I * ab * v), wv);
                    for i in 0..3 {
                        wp[i] += 2.0 * (ab * wv[i]).re;
                        wc[i] += 2.0 * cw[i].re;
                        xt[i] += 2.0 * (dab * wv[i]).re;
                        xc[i] += 2.0 * dcw[i].re;
                        xd[i] += 2.0 * (I * zd * (ab * wv[i] + cw[i]) + extra[i]).re;
                    }
                    // oscillation: zeta (zeta . grad a) part and reconstruction
                    let zga = zeta[0] * ga[0] + zeta[1] * ga[1] + zeta[2] * ga[2];
                    for i in 0..3 {
                        osc[i] += 2.0 * a * zeta[i] * zga;
                    }
                    let weight = match self.source.regime {
                        Regime::Additive => a * a,
                        Regime::Multiplicative => mo.ups * ab * ab,
                    };
                    let pc = dir.projector_complement();
                    for c in 0..6 {
                        recon[c] += weight * pc[c];
                    }
                    a2sum += a * a;
                    entries.push(Entry { a, ga, e, b: bz, grad_phase: std::array::from_fn(|i| zeta[i] + g[i]) });
                }
            }
            // U = sum 2 Re(a E B) with the unbarred amplitude.
            let mut uu = [0.0; 3];
            for en in &entries {
                for i in 0..3 {
                    uu[i] += 2.0 * (en.a * en.e * en.b[i]).re;
                }
            }
            for en in &entries {
                let gs: [Complex64; 3] =
                    std::array::from_fn(|i| en.e * Complex64::new(en.ga[i], lam * en.a * en.grad_phase[i]));
                let u_gs = gs[0] * uu[0] + gs[1] * uu[1] + gs[2] * uu[2];
                let b_gs = en.b[0] * gs[0] + en.b[1] * gs[1] + en.b[2] * gs[2];
                let u_b = en.b[0] * uu[0] + en.b[1] * uu[1] + en.b[2] * uu[2];
                for i in 0..3 {
                    osc[i] += 2.0 * (en.b[i] * u_gs + uu[i] * b_gs - u_b * gs[i]).re;
                }
            }
            let target: [f64; 6] = std::array::from_fn(|c| kappa * linalg::IDENTITY[c] - r[c]);
            let diff: [f64; 6] = std::array::from_fn(|c| recon[c] - target[c]);
            out.identity_err = out.identity_err.max(linalg::op_norm(&diff) / kappa);
            for i in 0..3 {
                out.w_p[i][x] = wp[i];
                out.w_c_sum[i][x] = wc[i];
                out.x_tran[i][x] = xt[i];
                out.x_corr[i][x] = xc[i];
                out.x_d[i][x] = xd[i];
                out.osc[i][x] = osc[i];
            }
            out.pi_osc[x] = 0.5 * (uu[0] * uu[0] + uu[1] * uu[1] + uu[2] * uu[2]) - a2sum;
        }
        Ok(out)
    }

    fn inverse_divergence(&self, v: &Vector) -> Tensor {
        ops::inverse_divergence(self.grid, v)
    }

    fn assemble(&self, n: i64, t: f64, mo: Mollified, k: KernelOut, flow_dev: f64) -> Result<StepSlice> {
        let grid = self.grid;
        let len = grid.len();
        let lam = self.lam;
        let regime = self.source.regime;
        let nu = match regime {
            Regime::Additive => 1.0,
            Regime::Multiplicative => mo.ups,
        };
        // w = curl(w_p) / lambda
        let mut w_hat = ops::curl_spec(grid, &ops::vector_spec(grid, &k.w_p));
        for c in w_hat.iter_mut() {
            for v in c.iter_mut() {
                *v /= lam;
            }
        }
        let w = ops::vector_phys(grid, &w_hat);
        let w_sup = norms::sup_vec(&w);
        let scale = if w_sup > 0.0 { w_sup } else { 1.0 };
        let two_way = ops::vec_add(&k.w_p, &k.w_c_sum);
        let curl_err = norms::sup_vec(&ops::vec_sub(&w, &two_way)) / scale;
        let div_w = grid.ifft_real(ops::divergence_spec(grid, &w_hat));
        let div_err = norms::sup_scalar(&div_w) / (lam * scale);
        let mean_err = (0..3).map(|c| ops::mean(&w[c]).abs()).fold(0.0, f64::max) / scale;
        let w_c = ops::vec_sub(&w, &k.w_p);
        let v1 = ops::vec_add(&mo.v, &w);

        // R_line
        let mut line_hat = w_hat.clone();
        for c in line_hat.iter_mut() {
            ops::frac_lap_spec_inplace(grid, c, self.schedule.m);
        }
        match regime {
            Regime::Additive => {
                let gz = ops::vector_gradient(grid, &mo.z);
                let wz = ops::vector_spec(grid, &ops::advect(&w, &gz));
                for c in 0..3 {
                    for (a, b) in line_hat[c].iter_mut().zip(&wz[c]) {
                        *a += b;
                    }
                }
            }
            Regime::Multiplicative => {
                for c in 0..3 {
                    for (a, b) in line_hat[c].iter_mut().zip(&w_hat[c]) {
                        *a += 0.5 * b;
                    }
                }
            }
        }
        let r_line = ops::tensor_phys(grid, &ops::inverse_divergence_spec(grid, &line_hat));
        let r_tran = self.inverse_divergence(&k.x_tran);
        let r_osc = self.inverse_divergence(&k.osc);
        let gv = ops::vector_gradient(grid, &mo.v);
        let mut nash_src = ops::advect(&w, &gv);
        for c in nash_src.iter_mut() {
            for v in c.iter_mut() {
                *v *= nu;
            }
        }
        let r_nash = self.inverse_divergence(&nash_src);
        let mut r_corr = self.inverse_divergence(&k.x_corr);
        traceless_product_acc(&mut r_corr, nu, &w_c, &w_c);
        traceless_product_acc(&mut r_corr, 2.0 * nu, &w_c, &k.w_p);
        let pi_corr: Scalar = (0..len)
            .map(|p| {
                let wcwc: f64 = (0..3).map(|c| w_c[c][p] * w_c[c][p]).sum();
                let wpwc: f64 = (0..3).map(|c| k.w_p[c][p] * w_c[c][p]).sum();
                nu * (wcwc + 2.0 * wpwc) / 3.0
            })
            .collect();
        let z_raw = self.source.z(n);
        let ups_raw = self.source.upsilon(n);
        let mut r_com2 = zero_tensor(len);
        let pi_com2: Scalar = match regime {
            Regime::Additive => {
                let dz = ops::vec_sub(&z_raw, &mo.z);
                traceless_product_acc(&mut r_com2, 2.0, &v1, &dz);
                traceless_product_acc(&mut r_com2, 1.0, &z_raw, &z_raw);
                traceless_product_acc(&mut r_com2, -1.0, &mo.z, &mo.z);
                (0..len)
                    .map(|p| {
                        let mut s = 0.0;
                        for c in 0..3 {
                            s += 2.0 * v1[c][p] * dz[c][p] + z_raw[c][p] * z_raw[c][p] - mo.z[c][p] * mo.z[c][p];
                        }
                        s / 3.0
                    })
                    .collect()
            }
            Regime::Multiplicative => {
                let f = ups_raw - mo.ups;
                traceless_product_acc(&mut r_com2, f, &v1, &v1);
                ops::dot(&v1, &v1).into_iter().map(|s| f * s / 3.0).collect()
            }
        };
        let terms: [&Tensor; 7] = [&r_line, &r_tran, &r_osc, &r_nash, &r_corr, &mo.com1, &r_com2];
        let term_sups: Vec<f64> = terms.iter().map(|t| norms::sup(&t[..])).collect();
        let mut r1 = zero_tensor(len);
        for t in terms {
            ops::ten_axpy(&mut r1, 1.0, t);
        }
        if !self.perturb {
            ops::ten_axpy(&mut r1, 1.0, &mo.r);
        }
        let p1: Scalar = (0..len).map(|p| mo.p[p] - k.pi_osc[p] - pi_corr[p] - pi_com2[p]).collect();

        let prev = self.source.slice(n);
        let m0 = self.schedule.m0(t);
        let dv = ops::vec_sub(&v1, &prev.v);
        let dv_sup = norms::sup_vec(&dv);
        let increment = dv_sup / m0.sqrt();
        let increment_holder =
            self.gammas.iter().map(|g| dv_sup + norms::holder_seminorm(grid, &dv[..], *g, HOLDER_SHELL)).collect();
        let diag = StepDiag {
            n,
            t,
            terms: term_sups,
            target: self.schedule.c_r * m0 * self.schedule.delta(self.q + 2),
            defect: norms::sup_vec(&k.x_d),
            identity_err: k.identity_err,
            domain_ratio: k.domain_ratio,
            curl_err,
            div_err,
            mean_err,
            flow_dev,
            increment,
            w_p: norms::sup_vec(&k.w_p),
            w_c: norms::sup_vec(&w_c),
            r_sup: norms::sup(&r1[..]),
            increment_holder,
        };
        Ok(StepSlice {
            n,
            t,
            level: LevelSlice { v: v1, r: r1, p: p1 },
            w_p: k.w_p,
            w_c,
            z: (*z_raw).clone(),
            ups: ups_raw,
            diag,
        })
    }
}

/// Index ranges `lo_q` for levels `1..=q_max` so that each step has the
/// history its mollifier and flow maps need; the last level starts at
/// `last_lo`.
pub fn level_starts(schedule: &Schedule, dt: f64, q_max: usize, last_lo: i64) -> Vec<i64> {
    let mut lo = vec![0i64; q_max + 1];
    lo[q_max] = last_lo;
    for q in (0..q_max).rev() {
        let l = schedule.mollifier_scale(q);
        let len = (l / dt).ceil() as i64 + 1;
        lo[q] = lo[q + 1] - 2 * len - 8 - (l / dt).ceil() as i64;
    }
    lo
}

/// Run `q_max` steps from the base level. Intermediate levels are held in
/// memory; the last one is streamed into `sink`.
pub fn run_levels(
    base: &LevelSource<'_>,
    schedule: &Schedule,
    system: &WaveSystem,
    q_max: usize,
    n_hi: i64,
    last_lo: i64,
    gammas: &[f64],
    sink: &mut dyn FnMut(StepSlice) -> Result<()>,
) -> Result<Vec<StepSummary>> {
    if q_max == 0 {
        return Err(Error::Config("q_max must be at least 1".into()));
    }
    let starts = level_starts(schedule, base.dt, q_max, last_lo);
    let mut summaries = Vec::new();
    let mut stored: Option<IterationState> = None;
    for q in 0..q_max {
        let holder;
        let src: &LevelSource<'_> = match &stored {
            None => base,
            Some(state) => {
                holder = LevelSource::stored(base.grid, state, base.noise())?;
                &holder
            }
        };
        let mut step = Step::new(src, schedule, system)?;
        step.gammas = gammas.to_vec();
        let (lo, hi) = (starts[q + 1], n_hi);
        if q + 1 == q_max {
            summaries.push(step.run(lo, hi, sink)?);
        } else {
            let mut slices = Vec::new();
            let summary = step.run(lo, hi, &mut |s: StepSlice| {
                slices.push(s.level);
                Ok(())
            })?;
            summaries.push(summary);
            let next = IterationState {
                q: q + 1,
                regime: schedule.regime,
                grid_n: base.grid.n(),
                dt: base.dt,
                n_lo: lo,
                slices,
            };
            drop(step);
            stored = Some(next);
        }
    }
    Ok(summaries)
}
