//! Space and time mollifiers built from `exp(-1 / (1 - r^2))`.

use num_complex::Complex64;

use super::grid::Grid;
use super::ops::{Spec, Tensor, Vector};

/// Unnormalised bump on `(-1, 1)`.
pub fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`bump`].
pub fn bump_prime(r: f64) -> f64 {
    if r.abs() < 1.0 {
        let d = 1.0 - r * r;
        bump(r) * (-2.0 * r / (d * d))
    } else {
        0.0
    }
}

/// Spatial mollifier stored as its (real) Fourier multiplier.
#[derive(Debug, Clone)]
pub struct SpaceMollifier {
    pub l: f64,
    /// Set when `l` does not reach the nearest grid neighbour; the mollifier
    /// is then the identity.
    pub identity: bool,
    multiplier: Vec<f64>,
}

impl SpaceMollifier {
    pub fn new(grid: &Grid, l: f64) -> SpaceMollifier {
        let dims = grid.dims();
        let hmin = (0..3).filter(|&a| dims[a] > 1).map(|a| grid.spacing(a)).fold(f64::INFINITY, f64::min);
        if !(l > hmin) {
            return SpaceMollifier { l, identity: true, multiplier: vec![1.0; grid.len()] };
        }
        let [nx, ny, nz] = dims;
        let mut kernel = vec![0.0; grid.len()];
        let mut idx = 0;
        let dist = |i: usize, n: usize, a: usize| (i.min(n - i) as f64) * grid.spacing(a);
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let r = (dist(ix, nx, 0).powi(2) + dist(iy, ny, 1).powi(2) + dist(iz, nz, 2).powi(2)).sqrt();
                    kernel[idx] = bump(r / l);
                    idx += 1;
                }
            }
        }
        let total: f64 = kernel.iter().sum();
        for v in kernel.iter_mut() {
            *v /= total;
        }
        let spec = grid.fft_real(&kernel);
        let nn = grid.len() as f64;
        let multiplier = spec.iter().map(|c| c.re * nn).collect();
        SpaceMollifier { l, identity: false, multiplier }
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn apply_spec(&self, s: &mut [Complex64]) {
        if self.identity {
            return;
        }
        for (c, m) in s.iter_mut().zip(&self.multiplier) {
            *c *= *m;
        }
    }

    pub fn apply(&self, grid: &Grid, f: &[f64]) -> Vec<f64> {
        if self.identity {
            return f.to_vec();
        }
        let mut s = grid.fft_real(f);
        self.apply_spec(&mut s);
        grid.ifft_real(s)
    }

    /// Mollify several components with paired transforms.
    pub fn apply_many(&self, grid: &Grid, fs: &[&[f64]]) -> Vec<Vec<f64>> {
        if self.identity {
            return fs.iter().map(|f| f.to_vec()).collect();
        }
        let mut specs: Vec<Spec> = grid.fft_many(fs);
        for s in specs.iter_mut() {
            self.apply_spec(s);
        }
        let refs: Vec<&[Complex64]> = specs.iter().map(|s| s.as_slice()).collect();
        grid.ifft_many(&refs)
    }

    pub fn apply_vector(&self, grid: &Grid, v: &Vector) -> Vector {
        let mut out = self.apply_many(grid, &[&v[0], &v[1], &v[2]]).into_iter();
        std::array::from_fn(|_| out.next().unwrap())
    }

    pub fn apply_tensor(&self, grid: &Grid, t: &Tensor) -> Tensor {
        let refs: Vec<&[f64]> = t.iter().map(|c| c.as_slice()).collect();
        let mut out = self.apply_many(grid, &refs).into_iter();
        std::array::from_fn(|_| out.next().unwrap())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (8 points).
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Panels per unit of the bump support used by the quadratures below.
const PANELS: usize = 64;

/// Composite Gauss-Legendre rule for `int_a^b f`.
fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// One-sided temporal mollifier `phi_l` supported in `[0, l]`.
///
/// Sampled series are read as their piecewise-linear interpolants, so
/// `(f * phi_l)(t_n) = sum_k weights[k] f(t_{n-k})` and the exact time
/// derivative of the smooth convolution is `sum_k dweights[k] f(t_{n-k})`.
#[derive(Debug, Clone)]
pub struct TimeMollifier {
    pub l: f64,
    pub dt: f64,
    pub weights: Vec<f64>,
    pub dweights: Vec<f64>,
    norm: f64,
}

impl TimeMollifier {
    pub fn new(l: f64, dt: f64) -> TimeMollifier {
        assert!(l > 0.0 && dt > 0.0, "mollifier needs l > 0 and dt > 0");
        let norm = integrate(-1.0, 1.0, 2 * PANELS, bump);
        let kmax = (l / dt).ceil() as usize;
        let mut tm = TimeMollifier { l, dt, weights: Vec::new(), dweights: Vec::new(), norm };
        let per = (PANELS / kmax.max(1)).max(4);
        for k in 0..=kmax {
            // hat centred at k dt, restricted to [0, l]
            let c = k as f64 * dt;
            let hat = |s: f64| (1.0 - ((s - c) / dt).abs()).max(0.0);
            let (lo, hi) = ((c - dt).max(0.0), c.min(l));
            let (lo2, hi2) = (c.max(0.0), (c + dt).min(l));
            let w = integrate(lo, hi, per, |s| tm.phi(s) * hat(s)) + integrate(lo2, hi2, per, |s| tm.phi(s) * hat(s));
            let d = integrate(lo, hi, per, |s| tm.dphi(s) * hat(s)) + integrate(lo2, hi2, per, |s| tm.dphi(s) * hat(s));
            tm.weights.push(w);
            tm.dweights.push(d);
        }
        tm
    }

    /// `phi_l(s) = (2 / l) bump(2 s / l - 1) / Z`.
    pub fn phi(&self, s: f64) -> f64 {
        2.0 / self.l * bump(2.0 * s / self.l - 1.0) / self.norm
    }

    pub fn dphi(&self, s: f64) -> f64 {
        4.0 / (self.l * self.l) * bump_prime(2.0 * s / self.l - 1.0) / self.norm
    }

    /// Number of past samples used (the stencil covers `n - len + 1 ..= n`).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Convolve a sampled scalar series given as a closure over slice
    /// indices; returns the value and the time derivative.
    pub fn apply_series(&self, n: i64, f: impl Fn(i64) -> f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (k, (w, dw)) in self.weights.iter().zip(&self.dweights).enumerate() {
            let x = f(n - k as i64);
            v += w * x;
            d += dw * x;
        }
        (v, d)
    }

    /// Convolve a smooth profile known at every time; returns
    /// `((f * phi_l)(t), (f * phi_l)'(t))`.
    pub fn apply_profile(&self, t: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
        let v = integrate(0.0, self.l, PANELS, |s| self.phi(s) * f(t - s));
        let d = integrate(0.0, self.l, PANELS, |s| self.dphi(s) * f(t - s));
        (v, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_have_unit_mass() {
        let tm = TimeMollifier::new(0.125, 1.0 / 256.0);
        assert_eq!(tm.len(), 33);
        assert!((tm.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(tm.dweights.iter().sum::<f64>().abs() < 1e-10);
        // A short kernel still has unit mass.
        let short = TimeMollifier::new(1e-3, 1e-2);
        assert_eq!(short.len(), 2);
        assert!((short.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn series_matches_profile_on_linear_data() {
        // Linear interpolation is exact for linear data.
        let tm = TimeMollifier::new(0.1, 0.01);
        let f = |t: f64| 2.0 + 3.0 * t;
        let (v, d) = tm.apply_series(50, |k| f(k as f64 * 0.01));
        let (pv, pd) = tm.apply_profile(0.5, f);
        assert!((v - pv).abs() < 1e-12 && (d - pd).abs() < 1e-10);
        assert!((d - 3.0).abs() < 1e-10);
    }

    #[test]
    fn space_identity_below_spacing() {
        let g = Grid::cubic(8).unwrap();
        assert!(SpaceMollifier::new(&g, 0.1).identity);
        let m = SpaceMollifier::new(&g, 1.5);
        assert!(!m.identity);
        assert!((m.multiplier()[0] - 1.0).abs() < 1e-14);
    }
}
