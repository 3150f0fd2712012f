use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-pi, pi)^3`.
///
/// Point `(ix, iy, iz)` sits at `x_i = -pi + i * 2 pi / n_i` and is stored at
/// flat index `(iz * ny + iy) * nx + ix`. Spectral arrays use the same layout
/// with the usual FFT ordering of wavenumbers. The forward transform carries
/// the `1/N` factor, so coefficient `k` is the discrete average of
/// `f(x_j) e^{-i k (x_j - x_0)}`.
#[derive(Clone)]
pub struct Grid {
    dims: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    wave: [Vec<f64>; 3],
    nyq: [Vec<bool>; 3],
    neg: Vec<u32>,
}

/// Tiled out-of-place transpose of a row-major `rows x cols` matrix.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}x{}x{})", self.dims[0], self.dims[1], self.dims[2])
    }
}

impl Grid {
    /// Cubic grid with `n` points per axis.
    pub fn cubic(n: usize) -> Result<Grid> {
        Grid::new([n, n, n])
    }

    /// Grid with independent power-of-two resolutions per axis. An axis of
    /// size one carries only the zero wavenumber, which is how the scaling
    /// studies embed two-dimensional fields.
    pub fn new(dims: [usize; 3]) -> Result<Grid> {
        for &n in &dims {
            if n == 0 || !n.is_power_of_two() {
                return Err(Error::Config(format!("grid size {n} is not a power of two")));
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let fwd = [0, 1, 2].map(|a| planner.plan_fft_forward(dims[a]));
        let inv = [0, 1, 2].map(|a| planner.plan_fft_inverse(dims[a]));
        let wave = [0, 1, 2].map(|a| {
            let n = dims[a];
            (0..n)
                .map(|i| if i <= n / 2 && !(n > 1 && i == n / 2) { i as f64 } else { i as f64 - n as f64 })
                .collect::<Vec<f64>>()
        });
        let nyq = [0, 1, 2].map(|a| {
            let n = dims[a];
            (0..n).map(|i| n > 1 && i == n / 2).collect::<Vec<bool>>()
        });
        let [nx, ny, nz] = dims;
        let mut neg = Vec::with_capacity(nx * ny * nz);
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let jx = (nx - ix) % nx;
                    let jy = (ny - iy) % ny;
                    let jz = (nz - iz) % nz;
                    neg.push(((jz * ny + jy) * nx + jx) as u32);
                }
            }
        }
        Ok(Grid { dims, fwd, inv, wave, nyq, neg })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Resolution along the first axis (the per-axis size of cubic grids).
    pub fn n(&self) -> usize {
        self.dims[0]
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.dims[axis] as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -PI + i as f64 * self.spacing(axis)
    }

    /// Physical coordinates of every grid point, axis by axis.
    pub fn coords(&self) -> [Vec<f64>; 3] {
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for o in out.iter_mut() {
            o.reserve(self.len());
        }
        let [nx, ny, nz] = self.dims;
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    out[0].push(self.coord(0, ix));
                    out[1].push(self.coord(1, iy));
                    out[2].push(self.coord(2, iz));
                }
            }
        }
        out
    }

    /// Wavenumbers along one axis in storage order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wave[axis]
    }

    /// Visit every mode with its wave vector and whether any component sits
    /// on a Nyquist plane.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3], bool)) {
        let [nx, ny, nz] = self.dims;
        let mut idx = 0;
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    let k = [self.wave[0][ix], self.wave[1][iy], self.wave[2][iz]];
                    let nq = self.nyq[0][ix] || self.nyq[1][iy] || self.nyq[2][iz];
                    f(idx, k, nq);
                    idx += 1;
                }
            }
        }
    }

    /// Index of the mode `-k`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.neg[idx] as usize
    }

    /// Flat index of a wave vector, if it is representable.
    pub fn mode_index(&self, k: [i64; 3]) -> Option<usize> {
        let mut ii = [0usize; 3];
        for a in 0..3 {
            let n = self.dims[a] as i64;
            if 2 * k[a].abs() >= n && !(n == 1 && k[a] == 0) {
                return None;
            }
            ii[a] = k[a].rem_euclid(n) as usize;
        }
        Some((ii[2] * self.dims[1] + ii[1]) * self.dims[0] + ii[0])
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        assert_eq!(data.len(), self.len());
        let [nx, ny, nz] = self.dims;
        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        if nx > 1 {
            plans[0].process_with_scratch(data, &mut scratch);
        }
        if ny == 1 && nz == 1 {
            return;
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny.max(1) * nz.max(1)];
        if ny > 1 {
            // Each z-plane is an (ny x nx) matrix; transpose so y is contiguous.
            for iz in 0..nz {
                let plane = &mut data[iz * nx * ny..(iz + 1) * nx * ny];
                let tmp = &mut buf[..nx * ny];
                transpose(plane, tmp, ny, nx);
                plans[1].process_with_scratch(tmp, &mut scratch);
                transpose(tmp, plane, nx, ny);
            }
        }
        if nz > 1 {
            let m = nx * ny;
            transpose(data, &mut buf, nz, m);
            plans[2].process_with_scratch(&mut buf, &mut scratch);
            transpose(&buf, data, m, nz);
        }
    }

    /// In-place forward transform, normalised by `1/N`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
        let s = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// In-place inverse transform (no normalisation).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
    }

    pub fn fft_real(&self, f: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut c);
        c
    }

    /// Transform of two real fields with a single complex FFT.
    pub fn fft_real2(&self, f: &[f64], g: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut c: Vec<Complex64> = f.iter().zip(g).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward(&mut c);
        let b: Vec<Complex64> = (0..c.len())
            .map(|i| {
                let cn = c[self.neg[i] as usize].conj();
                Complex64::new(0.0, -0.5) * (c[i] - cn)
            })
            .collect();
        // c_k = a_k + i b_k
        let i = Complex64::new(0.0, 1.0);
        for (ck, bk) in c.iter_mut().zip(&b) {
            *ck -= i * bk;
        }
        (c, b)
    }

    /// Real part of the inverse transform. The spectrum is assumed Hermitian.
    pub fn ifft_real(&self, mut s: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut s);
        s.into_iter().map(|c| c.re).collect()
    }

    /// Inverse transform of two Hermitian spectra with one complex FFT.
    pub fn ifft_real2(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut c: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut c);
        let im = c.iter().map(|v| v.im).collect();
        (c.into_iter().map(|v| v.re).collect(), im)
    }

    /// Transform a list of real fields, pairing them two at a time.
    pub fn fft_many(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(fields.len());
        let mut i = 0;
        while i < fields.len() {
            if i + 1 < fields.len() {
                let (a, b) = self.fft_real2(fields[i], fields[i + 1]);
                out.push(a);
                out.push(b);
                i += 2;
            } else {
                out.push(self.fft_real(fields[i]));
                i += 1;
            }
        }
        out
    }

    /// Inverse of [`Grid::fft_many`].
    pub fn ifft_many(&self, specs: &[&[Complex64]]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(specs.len());
        let mut i = 0;
        while i < specs.len() {
            if i + 1 < specs.len() {
                let (a, b) = self.ifft_real2(specs[i], specs[i + 1]);
                out.push(a);
                out.push(b);
                i += 2;
            } else {
                out.push(self.ifft_real(specs[i].to_vec()));
                i += 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(Grid::cubic(12), Err(Error::Config(_))));
        assert!(Grid::new([8, 1, 8]).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::cubic(8).unwrap();
        assert_eq!(g.wavenumbers(0), &[0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(g.mode_index([1, 0, 0]), Some(1));
        assert_eq!(g.mode_index([0, 0, -1]), Some(7 * 64));
        assert_eq!(g.mode_index([4, 0, 0]), None);
        let i = g.mode_index([1, -2, 3]).unwrap();
        assert_eq!(g.neg_index(i), g.mode_index([-1, 2, -3]).unwrap());
    }
}
