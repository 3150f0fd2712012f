//! The eleven acceptance criteria, run in order by a single test. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the
//! per-criterion lines.

mod common;

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{band_limited, band_limited_vector, bytes, max_abs, max_abs_diff};
use wildns::beltrami::{beltrami_wave, distance_to_identity, random_ball_point, random_boundary_point, WaveSystem};
use wildns::config::{ConfigRegime, RunConfig};
use wildns::construction::level::LevelSource;
use wildns::construction::micro::strict_micro_step;
use wildns::construction::schedule::Regime;
use wildns::construction::step::{run_levels, Step, StepSummary};
use wildns::driver::{noise_path, resolve_schedule, run_build, run_verify};
use wildns::linalg::{self, Sym3};
use wildns::noise::{
    measure_bounds, ou_step, sobolev_constant, NoiseKind, NoisePath, NoiseSpec,
};
use wildns::spectral::{ops, Grid};
use wildns::verify::energy::{base_level_bounds, energy_growth_check, minimal_level, trace_closed_form};
use wildns::verify::report::content_hash;
use wildns::verify::residual::residual_series;
use wildns::verify::scaling::{loglog_fit, stationary_phase_study, Phase};
use wildns::Result;

type Outcome = Result<(bool, String)>;

fn config(regime: ConfigRegime, grid_n: usize, a: f64, n_t: usize, horizon: f64) -> RunConfig {
    RunConfig { regime, grid_n, a, n_t, horizon, gamma_list: Vec::new(), dump_slices: 2, ..RunConfig::default() }
}

fn operator_suite() -> Outcome {
    let grid = Grid::cubic(32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let v = band_limited_vector(&grid, &mut rng, 8.0);
    let f = band_limited(&grid, &mut rng, 8.0);
    let scale = max_abs(&v[..]);

    let r = ops::inverse_divergence(&grid, &v);
    let div_r = ops::div_tensor(&grid, &r);
    let centred: Vec<Vec<f64>> = v.iter().map(|c| {
        let m = ops::mean(c);
        c.iter().map(|x| x - m).collect()
    }).collect();
    let e_div = max_abs_diff(&div_r[..], &centred) / scale;
    let tr: Vec<f64> = (0..grid.len()).map(|p| r[0][p] + r[3][p] + r[5][p]).collect();
    let e_tr = max_abs(std::slice::from_ref(&tr)) / max_abs(&r[..]);

    let pv = ops::leray(&grid, &v);
    let e_idem = max_abs_diff(&ops::leray(&grid, &pv)[..], &pv[..]) / scale;
    let e_sol = max_abs(std::slice::from_ref(&ops::divergence(&grid, &pv))) / scale;
    let grad = ops::gradient(&grid, &f);
    let e_grad = max_abs(&ops::leray(&grid, &grad)[..]) / max_abs(&grad[..]);

    let l1 = ops::frac_lap(&grid, &ops::frac_lap(&grid, &f, 0.3)?, 0.4)?;
    let l2 = ops::frac_lap(&grid, &f, 0.7)?;
    let e_semi = max_abs_diff(&[l1], &[l2.clone()]) / max_abs(&[l2]);

    let worst = [e_div, e_tr, e_idem, e_sol, e_grad, e_semi].into_iter().fold(0.0, f64::max);
    Ok((
        worst <= 1e-10,
        format!(
            "div R = id - mean {e_div:.1e}, tr R {e_tr:.1e}, PP - P {e_idem:.1e}, div P {e_sol:.1e}, P grad {e_grad:.1e}, semigroup {e_semi:.1e}"
        ),
    ))
}

fn beltrami_suite() -> Outcome {
    let system = WaveSystem::new()?;
    let grid = Grid::cubic(32)?;
    let lambda = 5;
    let mut e_alg: f64 = 0.0;
    let mut e_curl: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut w = ops::zero_vector(grid.len());
    let mut expected: Sym3 = [0.0; 6];
    for fam in &system.families {
        for (d, dir) in fam.directions.iter().enumerate() {
            let b = dir.b_zeta;
            let z = dir.zeta;
            let norm2: f64 = b.iter().map(|c| c.norm_sqr()).sum();
            e_alg = e_alg.max((norm2 - 1.0).abs());
            let bz: Complex64 = (0..3).map(|i| b[i] * z[i]).sum();
            e_alg = e_alg.max(bz.norm());
            let izb = linalg::ccross([Complex64::new(0.0, 1.0) * z[0], Complex64::new(0.0, 1.0) * z[1], Complex64::new(0.0, 1.0) * z[2]], b);
            for i in 0..3 {
                e_alg = e_alg.max((izb[i] - b[i]).norm());
            }
            let partner = &fam.directions[d ^ 1];
            for i in 0..3 {
                e_alg = e_alg.max((partner.b_zeta[i] - b[i].conj()).norm());
            }
            let pc = dir.projector_complement();
            for i in 0..3 {
                for j in i..3 {
                    let s = b[i] * partner.b_zeta[j] + partner.b_zeta[i] * b[j];
                    e_alg = e_alg.max((s.re - linalg::entry(&pc, i, j)).abs()).max(s.im.abs());
                }
            }

            let (re, im) = beltrami_wave(dir, lambda, &grid)?;
            let c = ops::curl(&grid, &re);
            let lre: Vec<Vec<f64>> = re.iter().map(|x| x.iter().map(|v| lambda as f64 * v).collect()).collect();
            e_curl = e_curl.max(max_abs_diff(&c[..], &lre));
            // Real superposition with a_{-zeta} = conj(a_zeta), one pair at a time.
            if d % 2 == 0 {
                let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                for i in 0..3 {
                    for p in 0..grid.len() {
                        w[i][p] += 2.0 * (a.re * re[i][p] - a.im * im[i][p]);
                    }
                }
                expected = linalg::add(&expected, &linalg::scale(&pc, a.norm_sqr()));
            }
        }
    }
    let mut mean: Sym3 = [0.0; 6];
    for i in 0..3 {
        for j in i..3 {
            mean[linalg::SYM[i][j]] = (0..grid.len()).map(|p| w[i][p] * w[j][p]).sum::<f64>() / grid.len() as f64;
        }
    }
    let e_avg = (0..6).map(|k| (mean[k] - expected[k]).abs()).fold(0.0, f64::max);
    Ok((
        e_alg <= 1e-14 && e_curl <= 1e-12 && e_avg <= 1e-10,
        format!("algebraic {e_alg:.1e}, curl W - lambda W {e_curl:.1e}, mean W(x)W {e_avg:.1e}"),
    ))
}

fn geometric_lemma() -> Outcome {
    let system = WaveSystem::new()?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut e_rec: f64 = 0.0;
    let mut min_gamma = f64::INFINITY;
    for _ in 0..1000 {
        let r = random_ball_point(&mut rng, system.c_star);
        for (f, fam) in system.families.iter().enumerate() {
            let g = system.gamma_coefficients(&r, f)?;
            let mut rec: Sym3 = [0.0; 6];
            for (d, dir) in fam.directions.iter().enumerate() {
                let gz = g[d / 2];
                min_gamma = min_gamma.min(gz);
                rec = linalg::add(&rec, &linalg::scale(&dir.projector_complement(), 0.5 * gz * gz));
            }
            e_rec = e_rec.max((0..6).map(|k| (rec[k] - r[k]).abs()).fold(0.0, f64::max));
        }
    }
    let mut rejected = 0;
    for _ in 0..100 {
        let r = random_boundary_point(&mut rng, 1.05 * system.c_star);
        if distance_to_identity(&r) > system.c_star && system.gamma_coefficients(&r, 0).is_err() {
            rejected += 1;
        }
    }
    Ok((
        e_rec <= 1e-12 && min_gamma > 0.0 && rejected == 100,
        format!("C* = {:.5}, reconstruction {e_rec:.1e}, min gamma {min_gamma:.3}, rejected {rejected}/100", system.c_star),
    ))
}

/// First step on `[0, hi]` at 16^3, a = 2.
fn first_step(regime: ConfigRegime, hi: i64) -> Result<StepSummary> {
    let cfg = config(regime, 16, 2.0, 64, 0.5);
    let system = WaveSystem::new()?;
    let schedule = resolve_schedule(&cfg, &system)?;
    let grid = Grid::cubic(cfg.grid_n)?;
    let mut path = noise_path(&cfg, cfg.dt())?;
    path.stop_at_level(sobolev_constant(&grid, cfg.sigma))?;
    let source = LevelSource::base(&grid, &schedule, Some(&path), cfg.dt())?;
    let step = Step::new(&source, &schedule, &system)?;
    step.run(0, hi, &mut |_| Ok(()))
}

fn pointwise_identities(steps: &[(ConfigRegime, StepSummary)]) -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for (regime, s) in steps {
        ok &= s.identity_err <= 1e-10 && s.domain_ratio <= 1.0 && s.div_err <= 1e-10;
        msg.push(format!(
            "{regime:?}: identity {:.1e}, domain {:.2e}, div {:.1e}",
            s.identity_err, s.domain_ratio, s.div_err
        ));
    }
    Ok((ok, msg.join("; ")))
}

fn base_residual() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for regime in [ConfigRegime::Additive, ConfigRegime::Multiplicative] {
        let mut dts = Vec::new();
        let mut res = Vec::new();
        let mut div_r: f64 = 0.0;
        for n_t in [16usize, 32, 64] {
            let cfg = config(regime, 16, 2.0, n_t, 0.5);
            let system = WaveSystem::new()?;
            let schedule = resolve_schedule(&cfg, &system)?;
            let grid = Grid::cubic(16)?;
            let mut path = noise_path(&cfg, cfg.dt())?;
            path.stop_at_level(sobolev_constant(&grid, cfg.sigma))?;
            let source = LevelSource::base(&grid, &schedule, Some(&path), cfg.dt())?;
            let samples = (0..=n_t as i64).map(|n| {
                let z = (regime != ConfigRegime::Multiplicative).then(|| (*source.z(n)).clone());
                (n, source.slice(n), z, source.upsilon(n))
            });
            let pts = residual_series(&grid, regime.regime(), cfg.m, cfg.dt(), samples)?;
            // Compared at t = T / 2, the only time all three grids share
            // with the full stencil.
            let mid = pts.iter().find(|p| p.n == n_t as i64 / 2).expect("midpoint sample");
            res.push(mid.residual);
            div_r = div_r.max(mid.div_r);
            dts.push(cfg.dt());
        }
        let order = loglog_fit(&dts, &res)?.slope;
        let finest = res[2] / div_r;
        ok &= order >= 1.0 && finest <= 1e-3;
        let shown: Vec<String> = res.iter().map(|r| format!("{r:.2e}")).collect();
        msg.push(format!("{regime:?}: residuals [{}], order {order:.2}, finest residual / |div R_0| {finest:.1e}", shown.join(", ")));
    }
    Ok((ok, msg.join("; ")))
}

fn step_consistency() -> Outcome {
    let cfg = config(ConfigRegime::Additive, 64, 4.0, 32, 0.125);
    let b = run_build(&cfg, None)?;
    let s = &b.summaries[0];
    let defect: std::collections::BTreeMap<i64, f64> = b.diags.iter().map(|d| (d.n, d.defect)).collect();
    let worst = b
        .residuals
        .iter()
        .map(|p| p.residual / (defect[&p.n] + p.fd_error))
        .fold(0.0, f64::max);
    let residual_ok = b.products_resolved && !b.residuals.is_empty() && worst <= 1.0;

    let mut hashes = Vec::new();
    for seed in [0u64, 1, 2] {
        let c = RunConfig { seed, ..cfg.clone() };
        let system = WaveSystem::new()?;
        let schedule = resolve_schedule(&c, &system)?;
        let grid = Grid::cubic(c.grid_n)?;
        let mut path = noise_path(&c, c.dt())?;
        path.stop_at_level(sobolev_constant(&grid, c.sigma))?;
        let source = LevelSource::base(&grid, &schedule, Some(&path), c.dt())?;
        let mut h = String::new();
        run_levels(&source, &schedule, &system, 1, 0, 0, &[], &mut |sl| {
            if sl.n == 0 {
                let mut all = bytes(&sl.level.v[..]);
                all.extend(bytes(&sl.level.r[..]));
                h = content_hash(&all);
            }
            Ok(())
        })?;
        hashes.push(h);
    }
    let same = !hashes[0].is_empty() && hashes.iter().all(|h| *h == hashes[0]);
    Ok((
        residual_ok && s.div_err <= 1e-10 && same,
        format!(
            "{} residual samples, max residual / (X_D + fd) {worst:.3}, div {:.1e}, t = 0 slices identical over 3 seeds: {same}",
            b.residuals.len(),
            s.div_err
        ),
    ))
}

fn stationary_phase() -> Outcome {
    let mut ok = true;
    let mut msg = Vec::new();
    for alpha in [0.2, 0.3] {
        let s = stationary_phase_study(Phase::Curved, alpha, &[8, 16, 32, 64])?;
        ok &= !s.check(0.15).failed();
        msg.push(format!("alpha {alpha}: slope {:.3} vs {:.2}", s.fit.slope, alpha - 1.0));
    }
    Ok((ok, msg.join("; ")))
}

fn increments(steps: &[(ConfigRegime, StepSummary)]) -> Outcome {
    let system = WaveSystem::new()?;
    let mut ok = true;
    let mut msg: Vec<String> = steps
        .iter()
        .map(|(r, s)| format!("{r:?} ladder increment / bound {:.3e} (report)", s.increment_ratio))
        .collect();
    for regime in [Regime::Additive, Regime::Multiplicative] {
        let m = strict_micro_step(regime, 0.01, 0.3, 0.5, &system)?;
        ok &= m.checks.iter().all(|c| !c.failed());
        msg.push(format!("{regime:?} strict a = {:.2e}: increment / bound {:.2e}", m.a, m.increment / m.bound));
    }
    Ok((ok, msg.join("; ")))
}

fn spec(kind: NoiseKind, amplitude: f64, seed: u64, level: f64) -> NoiseSpec {
    NoiseSpec { kind, m: 0.3, sigma: 0.1, g_decay: 4.5, amplitude, seed, level, delta: 0.02 }
}

fn noise_suite() -> Outcome {
    let grid = Grid::cubic(8)?;
    let c_s = sobolev_constant(&grid, 0.1);
    let add = NoisePath::additive(&spec(NoiseKind::Additive, 1.0, 4, 2.0), 8, 0.5 / 32.0, 32)?;
    let zero_start = max_abs(&add.z_phys(&grid, 0)[..]) == 0.0;

    // Single-mode OU at dt = 1 / rate; the stationary variance per transverse
    // direction is g^2 / (2 rate).
    let k = [1i64, 2, 0];
    let (g, m) = (0.7, 0.3);
    let rate = ((k[0] * k[0] + k[1] * k[1]) as f64).powf(m);
    let dt = 1.0 / rate;
    let mut rw = ChaCha8Rng::seed_from_u64(21);
    let mut rx = ChaCha8Rng::seed_from_u64(22);
    let mut z = [Complex64::new(0.0, 0.0); 3];
    let mut acc = 0.0;
    let steps = 100_000;
    for i in 0..steps + 50 {
        z = ou_step(z, &k, g, rate, dt, &mut rw, &mut rx).1;
        if i >= 50 {
            acc += z.iter().map(|c| c.norm_sqr()).sum::<f64>() / 2.0;
        }
    }
    let var_ratio = acc / steps as f64 / (g * g / (2.0 * rate));

    let mut t_l_ok = true;
    for kind in [NoiseKind::Additive, NoiseKind::Multiplicative] {
        let mut p = NoisePath::zero(&spec(kind, 1.0, 0, 2.0), 8, 2.0 / 32.0, 32)?;
        t_l_ok &= p.stop_at_level(c_s)?.t_l == 2.0;
    }

    let mut held = 0;
    let mut stopped = 0;
    let mut mean_t_l = 0.0;
    for seed in 0..100u64 {
        for kind in [NoiseKind::Additive, NoiseKind::Multiplicative] {
            let s = spec(kind, 0.3, seed, 2.0);
            let mut p = match kind {
                NoiseKind::Additive => NoisePath::additive(&s, 8, 0.5 / 32.0, 32)?,
                NoiseKind::Multiplicative => NoisePath::sample_brownian(&s, 8, 0.5 / 32.0, 32)?,
            };
            let stop = p.stop_at_level(c_s)?;
            if stop.index.is_some() {
                stopped += 1;
            }
            mean_t_l += stop.t_l.min(0.5) / 200.0;
            if measure_bounds(&p, &grid)?.holds(kind) {
                held += 1;
            }
        }
    }
    Ok((
        zero_start && (var_ratio - 1.0).abs() <= 0.03 && t_l_ok && held == 200,
        format!(
            "z(0) = 0: {zero_start}, OU variance ratio {var_ratio:.4}, T_L = L without noise: {t_l_ok}, bounds held {held}/200 ({stopped} stopped before T = 0.5, mean min(T_L, T) {mean_t_l:.3})"
        ),
    ))
}

fn energy_growth() -> Outcome {
    let (t, k, n_t) = (0.01, 2.0, 16usize);
    let grid = Grid::cubic(8)?;
    let c_s = sobolev_constant(&grid, 0.1);
    let mut ok = true;
    let mut msg = Vec::new();
    for kind in [NoiseKind::Additive, NoiseKind::Multiplicative] {
        let (regime, trace) = match kind {
            NoiseKind::Additive => (Regime::Additive, trace_closed_form(&spec(kind, 0.02, 0, 2.0), 8)),
            NoiseKind::Multiplicative => (Regime::Multiplicative, 0.0),
        };
        let level = (1.1 * minimal_level(regime, t, k, trace)?).ceil();
        let mut evaluated = 0;
        let mut worst = f64::INFINITY;
        for seed in 0..10 {
            let s = spec(kind, 0.02, seed, level);
            let mut p = match kind {
                NoiseKind::Additive => NoisePath::additive(&s, 8, t / n_t as f64, n_t)?,
                NoiseKind::Multiplicative => NoisePath::sample_brownian(&s, 8, t / n_t as f64, n_t)?,
            };
            p.stop_at_level(c_s)?;
            let c = energy_growth_check(&base_level_bounds(&grid, &p, t)?, trace, k, t, regime);
            if c.mode == wildns::verify::Mode::Assert {
                evaluated += 1;
                worst = worst.min(c.measured.max());
                ok &= !c.failed();
            }
        }
        ok &= evaluated > 0;
        msg.push(format!("{kind:?} L = {level:.0}: {evaluated}/10 evaluated, min log margin {worst:.3}"));
    }
    Ok((ok, msg.join("; ")))
}

fn report_determinism() -> Outcome {
    let cfg = RunConfig { n_t: 32, horizon: 0.25, ..RunConfig::default() };
    let run = || -> Result<(String, Vec<String>)> {
        let b = run_build(&cfg, None)?;
        let r = run_verify(&b)?;
        Ok((r.hash()?, b.dump_hashes.values().cloned().collect()))
    };
    let (h1, d1) = run()?;
    let (h2, d2) = run()?;
    Ok((h1 == h2 && d1 == d2, format!("report {}..., dumps equal: {}", &h1[..12], d1 == d2)))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |i: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        let secs = t0.elapsed().as_secs_f64();
        let (tag, detail) = match &out {
            Ok((true, d)) => ("PASS", d.clone()),
            Ok((false, d)) => ("FAIL", d.clone()),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        println!("[{tag}] {i:>2} {name} ({secs:.1} s): {detail}");
        results.push((i, name, out, secs));
    };

    record(1, "operator suite", &mut operator_suite);
    record(2, "Beltrami identities", &mut beltrami_suite);
    record(3, "geometric lemma", &mut geometric_lemma);
    let steps: Vec<(ConfigRegime, StepSummary)> = [ConfigRegime::Additive, ConfigRegime::Multiplicative]
        .into_iter()
        .filter_map(|r| first_step(r, 8).ok().map(|s| (r, s)))
        .collect();
    record(4, "pointwise step identities", &mut || {
        if steps.len() != 2 {
            return Ok((false, "first step failed to run".into()));
        }
        pointwise_identities(&steps)
    });
    record(5, "base-level residual", &mut base_residual);
    record(6, "step consistency at 64^3", &mut step_consistency);
    record(7, "stationary phase", &mut stationary_phase);
    record(8, "increment bounds", &mut || increments(&steps));
    record(9, "noise suite", &mut noise_suite);
    record(10, "energy growth", &mut energy_growth);
    record(11, "report determinism", &mut report_determinism);

    let failed: Vec<String> = results
        .iter()
        .filter(|r| !matches!(r.2, Ok((true, _))))
        .map(|r| format!("{} {}", r.0, r.1))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
