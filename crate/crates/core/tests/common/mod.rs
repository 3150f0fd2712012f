#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

use wildns::spectral::{Grid, Vector};

/// Random real field with modes `|k|_inf <= kmax` and no Nyquist content.
pub fn band_limited(grid: &Grid, rng: &mut impl Rng, kmax: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut s = grid.fft_real(&raw);
    grid.for_each_mode(|i, k, nq| {
        if nq || k.iter().any(|c| c.abs() > kmax) {
            s[i] = Complex64::new(0.0, 0.0);
        }
    });
    grid.ifft_real(s)
}

pub fn band_limited_vector(grid: &Grid, rng: &mut impl Rng, kmax: f64) -> Vector {
    std::array::from_fn(|_| band_limited(grid, rng, kmax))
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[Vec<f64>]) -> f64 {
    a.iter().flat_map(|x| x.iter().map(|v| v.abs())).fold(0.0, f64::max)
}

/// Little-endian bytes of the given component arrays.
pub fn bytes(comps: &[Vec<f64>]) -> Vec<u8> {
    comps.iter().flat_map(|c| c.iter().flat_map(|v| v.to_le_bytes())).collect()
}
