//! Fourier-multiplier operators on single time slices.
//!
//! Vector slices are `[Vec<f64>; 3]`, symmetric tensors are `[Vec<f64>; 6]`
//! in the packed order of [`crate::linalg::SYM`]. Odd multipliers (`i k`)
//! vanish on Nyquist planes so real fields stay real.

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::linalg::SYM;

pub type Scalar = Vec<f64>;
pub type Vector = [Vec<f64>; 3];
pub type Tensor = [Vec<f64>; 6];
pub type Spec = Vec<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn zeros(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

pub fn zero_vector(n: usize) -> Vector {
    [zeros(n), zeros(n), zeros(n)]
}

pub fn zero_tensor(n: usize) -> Tensor {
    [zeros(n), zeros(n), zeros(n), zeros(n), zeros(n), zeros(n)]
}

pub fn mean(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

pub fn vec_axpy(y: &mut Vector, s: f64, x: &Vector) {
    for c in 0..3 {
        axpy(&mut y[c], s, &x[c]);
    }
}

pub fn ten_axpy(y: &mut Tensor, s: f64, x: &Tensor) {
    for c in 0..6 {
        axpy(&mut y[c], s, &x[c]);
    }
}

pub fn vec_sub(a: &Vector, b: &Vector) -> Vector {
    let mut r = a.clone();
    vec_axpy(&mut r, -1.0, b);
    r
}

pub fn vec_add(a: &Vector, b: &Vector) -> Vector {
    let mut r = a.clone();
    vec_axpy(&mut r, 1.0, b);
    r
}

fn odd_mult(grid: &Grid, s: &[Complex64], axis: usize) -> Spec {
    let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
    grid.for_each_mode(|i, k, nq| {
        if !nq {
            out[i] = I * k[axis] * s[i];
        }
    });
    out
}

/// Spectral partial derivative along `axis`.
pub fn deriv_spec(grid: &Grid, s: &[Complex64], axis: usize) -> Spec {
    odd_mult(grid, s, axis)
}

/// Spectral second derivative `d_a d_b`; the Nyquist planes are dropped as in
/// the composition of two first derivatives.
pub fn deriv2_spec(grid: &Grid, s: &[Complex64], a: usize, b: usize) -> Spec {
    let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
    grid.for_each_mode(|i, k, nq| {
        if !nq {
            out[i] = -k[a] * k[b] * s[i];
        }
    });
    out
}

pub fn gradient_spec(grid: &Grid, s: &[Complex64]) -> [Spec; 3] {
    [0, 1, 2].map(|a| odd_mult(grid, s, a))
}

pub fn gradient(grid: &Grid, f: &[f64]) -> Vector {
    let s = grid.fft_real(f);
    let [gx, gy, gz] = gradient_spec(grid, &s);
    let mut out = grid.ifft_many(&[&gx, &gy, &gz]);
    let c = out.pop().unwrap();
    let b = out.pop().unwrap();
    let a = out.pop().unwrap();
    [a, b, c]
}

/// Gradients of several scalars with paired transforms.
pub fn gradients(grid: &Grid, fs: &[&[f64]]) -> Vec<Vector> {
    let specs = grid.fft_many(fs);
    let mut ders: Vec<Spec> = Vec::with_capacity(3 * fs.len());
    for s in &specs {
        for a in 0..3 {
            ders.push(odd_mult(grid, s, a));
        }
    }
    let refs: Vec<&[Complex64]> = ders.iter().map(|v| v.as_slice()).collect();
    let mut phys = grid.ifft_many(&refs).into_iter();
    (0..fs.len())
        .map(|_| [phys.next().unwrap(), phys.next().unwrap(), phys.next().unwrap()])
        .collect()
}

pub fn vector_spec(grid: &Grid, v: &Vector) -> [Spec; 3] {
    let (a, b) = grid.fft_real2(&v[0], &v[1]);
    let c = grid.fft_real(&v[2]);
    [a, b, c]
}

pub fn vector_phys(grid: &Grid, s: &[Spec; 3]) -> Vector {
    let (a, b) = grid.ifft_real2(&s[0], &s[1]);
    let c = grid.ifft_real(s[2].clone());
    [a, b, c]
}

pub fn tensor_spec(grid: &Grid, t: &Tensor) -> [Spec; 6] {
    let (a, b) = grid.fft_real2(&t[0], &t[1]);
    let (c, d) = grid.fft_real2(&t[2], &t[3]);
    let (e, f) = grid.fft_real2(&t[4], &t[5]);
    [a, b, c, d, e, f]
}

pub fn tensor_phys(grid: &Grid, s: &[Spec; 6]) -> Tensor {
    let (a, b) = grid.ifft_real2(&s[0], &s[1]);
    let (c, d) = grid.ifft_real2(&s[2], &s[3]);
    let (e, f) = grid.ifft_real2(&s[4], &s[5]);
    [a, b, c, d, e, f]
}

pub fn divergence_spec(grid: &Grid, v: &[Spec; 3]) -> Spec {
    let mut out = vec![Complex64::new(0.0, 0.0); v[0].len()];
    grid.for_each_mode(|i, k, nq| {
        if !nq {
            out[i] = I * (k[0] * v[0][i] + k[1] * v[1][i] + k[2] * v[2][i]);
        }
    });
    out
}

pub fn divergence(grid: &Grid, v: &Vector) -> Scalar {
    let s = vector_spec(grid, v);
    grid.ifft_real(divergence_spec(grid, &s))
}

/// Row-wise divergence `(div T)_i = d_j T_ij` of a symmetric tensor.
pub fn div_tensor_spec(grid: &Grid, t: &[Spec; 6]) -> [Spec; 3] {
    let n = t[0].len();
    let mut out = [
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
    ];
    grid.for_each_mode(|idx, k, nq| {
        if !nq {
            for (i, o) in out.iter_mut().enumerate() {
                o[idx] = I * (k[0] * t[SYM[i][0]][idx] + k[1] * t[SYM[i][1]][idx] + k[2] * t[SYM[i][2]][idx]);
            }
        }
    });
    out
}

pub fn div_tensor(grid: &Grid, t: &Tensor) -> Vector {
    let s = tensor_spec(grid, t);
    vector_phys(grid, &div_tensor_spec(grid, &s))
}

pub fn curl_spec(grid: &Grid, v: &[Spec; 3]) -> [Spec; 3] {
    let n = v[0].len();
    let mut out = [
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
        vec![Complex64::new(0.0, 0.0); n],
    ];
    grid.for_each_mode(|i, k, nq| {
        if !nq {
            out[0][i] = I * (k[1] * v[2][i] - k[2] * v[1][i]);
            out[1][i] = I * (k[2] * v[0][i] - k[0] * v[2][i]);
            out[2][i] = I * (k[0] * v[1][i] - k[1] * v[0][i]);
        }
    });
    out
}

pub fn curl(grid: &Grid, v: &Vector) -> Vector {
    let s = vector_spec(grid, v);
    vector_phys(grid, &curl_spec(grid, &s))
}

pub fn laplacian(grid: &Grid, f: &[f64]) -> Scalar {
    let mut s = grid.fft_real(f);
    grid.for_each_mode(|i, k, _| {
        s[i] *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    });
    grid.ifft_real(s)
}

fn check_frac(m: f64) -> Result<()> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::Config(format!("fractional power m = {m} outside (0, 1]")));
    }
    Ok(())
}

/// Multiply by `|k|^{2m}`; the zero mode goes to zero.
pub fn frac_lap_spec_inplace(grid: &Grid, s: &mut [Complex64], m: f64) {
    grid.for_each_mode(|i, k, _| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        s[i] *= if k2 == 0.0 { 0.0 } else { k2.powf(m) };
    });
}

pub fn frac_lap(grid: &Grid, f: &[f64], m: f64) -> Result<Scalar> {
    check_frac(m)?;
    let mut s = grid.fft_real(f);
    frac_lap_spec_inplace(grid, &mut s, m);
    Ok(grid.ifft_real(s))
}

pub fn frac_lap_vec(grid: &Grid, v: &Vector, m: f64) -> Result<Vector> {
    check_frac(m)?;
    let mut s = vector_spec(grid, v);
    for c in s.iter_mut() {
        frac_lap_spec_inplace(grid, c, m);
    }
    Ok(vector_phys(grid, &s))
}

pub fn leray_spec_inplace(grid: &Grid, v: &mut [Spec; 3]) {
    grid.for_each_mode(|i, k, _| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 > 0.0 {
            let kv = (k[0] * v[0][i] + k[1] * v[1][i] + k[2] * v[2][i]) / k2;
            for a in 0..3 {
                v[a][i] -= k[a] * kv;
            }
        }
    });
}

pub fn leray(grid: &Grid, v: &Vector) -> Vector {
    let mut s = vector_spec(grid, v);
    leray_spec_inplace(grid, &mut s);
    vector_phys(grid, &s)
}

/// The inverse divergence as a Fourier multiplier.
///
/// With `u = Delta^{-1} v` (zero mode dropped) the operator is
/// `d_k u_l + d_l u_k - (1/2)(delta_kl + d_k d_l Delta^{-1}) div u`, which
/// per mode reads
/// `-i (k_k v_l + k_l v_k)/|k|^2 + (i/2)(delta_kl + k_k k_l/|k|^2)(k.v)/|k|^2`.
pub fn inverse_divergence_spec(grid: &Grid, v: &[Spec; 3]) -> [Spec; 6] {
    let n = v[0].len();
    let mut out: [Spec; 6] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
    grid.for_each_mode(|idx, k, nq| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if nq || k2 == 0.0 {
            return;
        }
        let inv = 1.0 / k2;
        let vv = [v[0][idx], v[1][idx], v[2][idx]];
        let kv = k[0] * vv[0] + k[1] * vv[1] + k[2] * vv[2];
        for a in 0..3 {
            for b in a..3 {
                let delta = if a == b { 1.0 } else { 0.0 };
                let val = -I * (k[a] * vv[b] + k[b] * vv[a]) * inv
                    + 0.5 * I * (delta + k[a] * k[b] * inv) * kv * inv;
                out[SYM[a][b]][idx] = val;
            }
        }
    });
    out
}

pub fn inverse_divergence(grid: &Grid, v: &Vector) -> Tensor {
    let s = vector_spec(grid, v);
    tensor_phys(grid, &inverse_divergence_spec(grid, &s))
}

/// `sym(a (x) b) - (a.b/3) Id`, pointwise.
pub fn traceless_product(a: &Vector, b: &Vector) -> Tensor {
    let n = a[0].len();
    let mut t = zero_tensor(n);
    for p in 0..n {
        let av = [a[0][p], a[1][p], a[2][p]];
        let bv = [b[0][p], b[1][p], b[2][p]];
        let d = (av[0] * bv[0] + av[1] * bv[1] + av[2] * bv[2]) / 3.0;
        for i in 0..3 {
            for j in i..3 {
                let mut v = 0.5 * (av[i] * bv[j] + av[j] * bv[i]);
                if i == j {
                    v -= d;
                }
                t[SYM[i][j]][p] = v;
            }
        }
    }
    t
}

/// Accumulate `s * (sym(a (x) b) - a.b/3 Id)` into `t`.
pub fn traceless_product_acc(t: &mut Tensor, s: f64, a: &Vector, b: &Vector) {
    let n = a[0].len();
    for p in 0..n {
        let av = [a[0][p], a[1][p], a[2][p]];
        let bv = [b[0][p], b[1][p], b[2][p]];
        let d = (av[0] * bv[0] + av[1] * bv[1] + av[2] * bv[2]) / 3.0;
        for i in 0..3 {
            for j in i..3 {
                let mut v = 0.5 * (av[i] * bv[j] + av[j] * bv[i]);
                if i == j {
                    v -= d;
                }
                t[SYM[i][j]][p] += s * v;
            }
        }
    }
}

pub fn dot(a: &Vector, b: &Vector) -> Scalar {
    (0..a[0].len()).map(|p| a[0][p] * b[0][p] + a[1][p] * b[1][p] + a[2][p] * b[2][p]).collect()
}

/// `(a . grad) b` given the gradient table `gb[i][j] = d_j b_i`.
pub fn advect(a: &Vector, gb: &[Vector; 3]) -> Vector {
    let n = a[0].len();
    let mut out = zero_vector(n);
    for i in 0..3 {
        for p in 0..n {
            out[i][p] = a[0][p] * gb[i][0][p] + a[1][p] * gb[i][1][p] + a[2][p] * gb[i][2][p];
        }
    }
    out
}

/// Gradient table `[d_j v_i]` of a vector field.
pub fn vector_gradient(grid: &Grid, v: &Vector) -> [Vector; 3] {
    let mut g = gradients(grid, &[&v[0], &v[1], &v[2]]).into_iter();
    [g.next().unwrap(), g.next().unwrap(), g.next().unwrap()]
}

/// Product of two band-limited scalars by the 3/2 rule: both spectra are
/// zero padded to `3n/2` points per axis, multiplied in physical space and
/// truncated back. Exact for inputs without Nyquist content.
pub fn dealiased_product(grid: &Grid, f: &[f64], g: &[f64]) -> Result<Scalar> {
    let dims = grid.dims();
    let big = dims.map(|n| if n == 1 { 1 } else { 3 * n / 2 });
    let planner_dims = big;
    let fine = PaddedGrid::new(planner_dims)?;
    let (fs, gs) = grid.fft_real2(f, g);
    let fp = fine.pad(grid, &fs);
    let gp = fine.pad(grid, &gs);
    let mut prod: Vec<Complex64> = fp.iter().zip(&gp).map(|(a, b)| Complex64::new(a.re * b.re, 0.0)).collect();
    fine.forward(&mut prod);
    let back = fine.truncate(grid, &prod);
    Ok(grid.ifft_real(back))
}

/// Helper grid of arbitrary (not necessarily power-of-two) size used only
/// for zero padding.
struct PaddedGrid {
    dims: [usize; 3],
    fwd: [std::sync::Arc<dyn rustfft::Fft<f64>>; 3],
    inv: [std::sync::Arc<dyn rustfft::Fft<f64>>; 3],
}

impl PaddedGrid {
    fn new(dims: [usize; 3]) -> Result<PaddedGrid> {
        let mut planner = rustfft::FftPlanner::<f64>::new();
        Ok(PaddedGrid {
            dims,
            fwd: [0, 1, 2].map(|a| planner.plan_fft_forward(dims[a])),
            inv: [0, 1, 2].map(|a| planner.plan_fft_inverse(dims[a])),
        })
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn index_of(&self, k: [f64; 3]) -> usize {
        let ii = [0, 1, 2].map(|a| (k[a] as i64).rem_euclid(self.dims[a] as i64) as usize);
        (ii[2] * self.dims[1] + ii[1]) * self.dims[0] + ii[0]
    }

    /// Physical samples of the band-limited interpolant on the fine grid.
    fn pad(&self, grid: &Grid, s: &[Complex64]) -> Vec<Complex64> {
        let mut big = vec![Complex64::new(0.0, 0.0); self.len()];
        grid.for_each_mode(|i, k, nq| {
            if !nq {
                big[self.index_of(k)] = s[i];
            }
        });
        self.apply(&mut big, &self.inv);
        big
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.fwd);
        let s = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn truncate(&self, grid: &Grid, s: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        grid.for_each_mode(|i, k, nq| {
            if !nq {
                out[i] = s[self.index_of(k)];
            }
        });
        out
    }

    fn apply(&self, data: &mut [Complex64], plans: &[std::sync::Arc<dyn rustfft::Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.dims;
        let strides = [1, nx, nx * ny];
        for axis in 0..3 {
            let n = self.dims[axis];
            if n == 1 {
                continue;
            }
            let stride = strides[axis];
            let plan = &plans[axis];
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            let total = nx * ny * nz;
            for start in 0..total {
                if (start / stride) % n != 0 {
                    continue;
                }
                for i in 0..n {
                    line[i] = data[start + i * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for i in 0..n {
                    data[start + i * stride] = line[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_x3(grid: &Grid) -> Vec<f64> {
        grid.coords()[2].iter().map(|z| z.sin()).collect()
    }

    #[test]
    fn gradient_of_sin_x3() {
        let g = Grid::cubic(8).unwrap();
        let grad = gradient(&g, &sin_x3(&g));
        let c = g.coords();
        for p in 0..g.len() {
            assert!(grad[0][p].abs() < 1e-14 && grad[1][p].abs() < 1e-14);
            assert!((grad[2][p] - c[2][p].cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn quarter_power_on_mode_two() {
        let g = Grid::cubic(8).unwrap();
        let f: Vec<f64> = g.coords()[0].iter().map(|x| (2.0 * x).cos()).collect();
        let h = frac_lap(&g, &f, 0.25).unwrap();
        for p in 0..g.len() {
            assert!((h[p] - 2f64.sqrt() * f[p]).abs() < 1e-13);
        }
        assert!(frac_lap(&g, &f, 1.5).is_err());
    }

    #[test]
    fn leray_single_mode() {
        // Mode k = (1,0,0) with amplitude (1,1,0) projects to (0,1,0).
        let g = Grid::cubic(8).unwrap();
        let c = g.coords();
        let v: Vector = [c[0].iter().map(|x| x.cos()).collect(), c[0].iter().map(|x| x.cos()).collect(), zeros(g.len())];
        let p = leray(&g, &v);
        for i in 0..g.len() {
            assert!(p[0][i].abs() < 1e-14);
            assert!((p[1][i] - c[0][i].cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn traceless_product_of_e1() {
        let one = vec![1.0];
        let zero = vec![0.0];
        let e1: Vector = [one.clone(), zero.clone(), zero.clone()];
        let t = traceless_product(&e1, &e1);
        let expect = [2.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0, -1.0 / 3.0];
        for c in 0..6 {
            assert!((t[c][0] - expect[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn dealiased_product_matches_exact() {
        let g = Grid::cubic(8).unwrap();
        let c = g.coords();
        let f: Vec<f64> = (0..g.len()).map(|p| (3.0 * c[0][p]).cos()).collect();
        let h: Vec<f64> = (0..g.len()).map(|p| (2.0 * c[0][p]).cos() + (c[1][p]).sin()).collect();
        let prod = dealiased_product(&g, &f, &h).unwrap();
        // cos3x cos2x = (cos5x + cosx)/2; cos 5x is not representable on 8 points
        // and is removed rather than aliased onto cos 3x.
        for p in 0..g.len() {
            let exact = 0.5 * c[0][p].cos() + (3.0 * c[0][p]).cos() * c[1][p].sin();
            assert!((prod[p] - exact).abs() < 1e-13, "{} {}", prod[p], exact);
        }
    }
}
