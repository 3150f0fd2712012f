mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{band_limited, band_limited_vector, max_abs, max_abs_diff};
use wildns::beltrami::{random_ball_point, WaveSystem};
use wildns::config::RunConfig;
use wildns::linalg;
use wildns::noise::{NoiseKind, NoisePath, NoiseSpec};
use wildns::spectral::{ops, Grid};
use wildns::verify::convergence::convergence_report;
use wildns::verify::energy::r3_counts;
use wildns::verify::report::content_hash;
use wildns::verify::scaling::loglog_fit;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn inverse_divergence_right_inverse(seed in any::<u64>()) {
        let grid = Grid::cubic(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = band_limited_vector(&grid, &mut rng, 3.0);
        let div = ops::div_tensor(&grid, &ops::inverse_divergence(&grid, &v));
        let centred: Vec<Vec<f64>> = v.iter().map(|c| {
            let m = ops::mean(c);
            c.iter().map(|x| x - m).collect()
        }).collect();
        prop_assert!(max_abs_diff(&div[..], &centred) <= 1e-12 * max_abs(&v[..]).max(1e-300));
    }

    #[test]
    fn leray_is_idempotent_and_kills_gradients(seed in any::<u64>()) {
        let grid = Grid::cubic(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = band_limited_vector(&grid, &mut rng, 3.0);
        let pv = ops::leray(&grid, &v);
        prop_assert!(max_abs_diff(&ops::leray(&grid, &pv)[..], &pv[..]) <= 1e-13);
        let g = ops::gradient(&grid, &band_limited(&grid, &mut rng, 3.0));
        prop_assert!(max_abs(&ops::leray(&grid, &g)[..]) <= 1e-12);
    }

    #[test]
    fn traceless_product_is_trace_free(a in prop::array::uniform3(-10.0f64..10.0), b in prop::array::uniform3(-10.0f64..10.0)) {
        let av = a.map(|x| vec![x]);
        let bv = b.map(|x| vec![x]);
        let t = ops::traceless_product(&av, &bv);
        prop_assert!((t[0][0] + t[3][0] + t[5][0]).abs() <= 1e-12);
    }

    #[test]
    fn geometric_coefficients_reconstruct(seed in any::<u64>(), family in 0usize..2) {
        let system = WaveSystem::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_ball_point(&mut rng, system.c_star);
        let g = system.gamma_coefficients(&r, family).unwrap();
        let fam = system.family(family);
        let mut rec = [0.0; 6];
        for (p, gp) in g.iter().enumerate() {
            prop_assert!(*gp > 0.0);
            rec = linalg::add(&rec, &linalg::scale(&fam.pair(p).projector_complement(), gp * gp));
        }
        for k in 0..6 {
            prop_assert!((rec[k] - r[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn loglog_fit_recovers_power_laws(p in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs = [2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(p)).collect();
        let fit = loglog_fit(&xs, &ys).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-10);
    }

    #[test]
    fn convergence_ratio_of_geometric_series(r in 0.01f64..0.99, levels in 3usize..8) {
        let inc: Vec<f64> = (0..levels).map(|q| r.powi(q as i32)).collect();
        let rep = convergence_report(&inc, 0.0, 0.01).unwrap();
        prop_assert!(rep.ratios.iter().all(|x| (x - r).abs() <= 1e-12));
        prop_assert!(!rep.check().failed());
    }

    #[test]
    fn content_hash_separates_inputs(a in prop::collection::vec(any::<u8>(), 0..64), b in prop::collection::vec(any::<u8>(), 0..64)) {
        prop_assert_eq!(content_hash(&a) == content_hash(&b), a == b);
    }

    #[test]
    fn diffusion_exponent_outside_range_rejected(m in prop_oneof![-2.0f64..=0.0, 0.5f64..3.0]) {
        let cfg = RunConfig { m, ..RunConfig::default() };
        prop_assert!(cfg.validate().is_err());
    }

    #[test]
    fn stopped_paths_start_at_zero(seed in any::<u64>(), add in any::<bool>()) {
        let kind = if add { NoiseKind::Additive } else { NoiseKind::Multiplicative };
        let spec = NoiseSpec { kind, m: 0.3, sigma: 0.1, g_decay: 4.5, amplitude: 1.0, seed, level: 2.0, delta: 0.02 };
        let grid = Grid::cubic(8).unwrap();
        let p = if add { NoisePath::additive(&spec, 8, 0.05, 8).unwrap() } else { NoisePath::sample_brownian(&spec, 8, 0.05, 8).unwrap() };
        prop_assert_eq!(max_abs(&p.z_phys(&grid, 0)[..]), 0.0);
        prop_assert_eq!(p.b_stopped(0), 0.0);
    }
}

#[test]
fn r3_counts_lattice_points() {
    let n_max = 40;
    let r = r3_counts(n_max);
    let mut brute = vec![0u64; n_max + 1];
    for x in -7i64..=7 {
        for y in -7i64..=7 {
            for z in -7i64..=7 {
                let n = (x * x + y * y + z * z) as usize;
                if n <= n_max {
                    brute[n] += 1;
                }
            }
        }
    }
    assert_eq!(r, brute);
}
