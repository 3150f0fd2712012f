//! Time-sampled fields and the binary dump format.
//!
//! Dump layout (little endian): magic `WNSF`, version `u32`, rank `u8`,
//! grid size `u32`, slice count `u32`, the sample times as `f64`, then the
//! values as `f64` ordered by (time, component, z, y, x). Symmetric tensors
//! store their six packed components.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use super::grid::Grid;
use super::ops;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WNSF";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    SymTensor,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
            Rank::SymTensor => 6,
        }
    }

    fn code(self) -> u8 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::SymTensor => 2,
        }
    }

    fn from_code(c: u8) -> Result<Rank> {
        match c {
            0 => Ok(Rank::Scalar),
            1 => Ok(Rank::Vector),
            2 => Ok(Rank::SymTensor),
            _ => Err(Error::Format(format!("unknown rank code {c}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    pub mean_zero: bool,
    pub div_free: bool,
    pub trace_free: bool,
}

/// Periodic field sampled at a list of times. `slices[t][c]` holds the
/// values of component `c` at time `times[t]`.
#[derive(Debug, Clone)]
pub struct Field {
    pub rank: Rank,
    pub grid_n: usize,
    pub times: Vec<f64>,
    pub slices: Vec<Vec<Vec<f64>>>,
    pub flags: Flags,
    spectral: Option<Vec<Vec<Vec<Complex64>>>>,
}

impl Field {
    pub fn new(rank: Rank, grid_n: usize, times: Vec<f64>, slices: Vec<Vec<Vec<f64>>>) -> Result<Field> {
        if times.len() != slices.len() {
            return Err(Error::Type(format!("{} times but {} slices", times.len(), slices.len())));
        }
        let npts = grid_n.pow(3);
        for s in &slices {
            if s.len() != rank.components() || s.iter().any(|c| c.len() != npts) {
                return Err(Error::Type(format!("slice shape does not match {rank:?} on {grid_n}^3")));
            }
        }
        Ok(Field { rank, grid_n, times, slices, flags: Flags::default(), spectral: None })
    }

    pub fn with_flags(mut self, flags: Flags) -> Field {
        self.flags = flags;
        self
    }

    pub fn spectrum(&self) -> Option<&Vec<Vec<Vec<Complex64>>>> {
        self.spectral.as_ref()
    }

    /// Populate the spectral cache.
    pub fn to_spectral(mut self, grid: &Grid) -> Result<Field> {
        self.check_grid(grid)?;
        let spec = self
            .slices
            .iter()
            .map(|s| {
                let refs: Vec<&[f64]> = s.iter().map(|c| c.as_slice()).collect();
                grid.fft_many(&refs)
            })
            .collect();
        self.spectral = Some(spec);
        Ok(self)
    }

    /// Rebuild physical values from a spectrum.
    pub fn from_spectrum(
        rank: Rank,
        grid: &Grid,
        times: Vec<f64>,
        spec: Vec<Vec<Vec<Complex64>>>,
    ) -> Result<Field> {
        let slices = spec
            .iter()
            .map(|s| {
                let refs: Vec<&[Complex64]> = s.iter().map(|c| c.as_slice()).collect();
                grid.ifft_many(&refs)
            })
            .collect();
        let mut f = Field::new(rank, grid.n(), times, slices)?;
        f.spectral = Some(spec);
        Ok(f)
    }

    pub fn to_physical(&self, grid: &Grid) -> Result<Field> {
        match &self.spectral {
            Some(s) => Field::from_spectrum(self.rank, grid, self.times.clone(), s.clone()),
            None => Ok(self.clone()),
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dims() != [self.grid_n; 3] {
            return Err(Error::Type(format!("field on {}^3 used with {grid:?}", self.grid_n)));
        }
        Ok(())
    }

    /// Verify the flagged invariants on every slice.
    pub fn check_invariants(&self, grid: &Grid) -> Result<()> {
        self.check_grid(grid)?;
        for (t, s) in self.slices.iter().enumerate() {
            let scale = s.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            if self.flags.mean_zero {
                for c in s {
                    if ops::mean(c).abs() > 1e-13 * scale {
                        return Err(Error::State(format!("slice {t}: nonzero mean")));
                    }
                }
            }
            if self.flags.div_free && self.rank == Rank::Vector {
                let v: ops::Vector = [s[0].clone(), s[1].clone(), s[2].clone()];
                let sp = ops::vector_spec(grid, &v);
                let mut worst: f64 = 0.0;
                let mut norm: f64 = 0.0;
                grid.for_each_mode(|i, k, _| {
                    let kv = k[0] * sp[0][i] + k[1] * sp[1][i] + k[2] * sp[2][i];
                    worst = worst.max(kv.norm());
                    norm = norm.max((sp[0][i].norm_sqr() + sp[1][i].norm_sqr() + sp[2][i].norm_sqr()).sqrt());
                });
                if worst > 1e-10 * norm.max(f64::MIN_POSITIVE) {
                    return Err(Error::State(format!("slice {t}: divergence {worst:e}")));
                }
            }
            if self.rank == Rank::SymTensor && self.flags.trace_free {
                for p in 0..s[0].len() {
                    if (s[0][p] + s[3][p] + s[5][p]).abs() > 1e-10 * scale {
                        return Err(Error::State(format!("slice {t}: trace at point {p}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u8(self.rank.code())?;
        w.write_u32::<LittleEndian>(self.grid_n as u32)?;
        w.write_u32::<LittleEndian>(self.times.len() as u32)?;
        for &t in &self.times {
            w.write_f64::<LittleEndian>(t)?;
        }
        for s in &self.slices {
            for c in s {
                for &v in c {
                    w.write_f64::<LittleEndian>(v)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Field> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let rank = Rank::from_code(r.read_u8()?)?;
        let n = r.read_u32::<LittleEndian>()? as usize;
        let nt = r.read_u32::<LittleEndian>()? as usize;
        let mut times = Vec::with_capacity(nt);
        for _ in 0..nt {
            times.push(r.read_f64::<LittleEndian>()?);
        }
        let npts = n.pow(3);
        let mut slices = Vec::with_capacity(nt);
        for _ in 0..nt {
            let mut s = Vec::with_capacity(rank.components());
            for _ in 0..rank.components() {
                let mut c = vec![0.0; npts];
                r.read_f64_into::<LittleEndian>(&mut c)?;
                s.push(c);
            }
            slices.push(s);
        }
        Field::new(rank, n, times, slices)
    }
}

/// Incremental writer for slice-by-slice dumps when the slice count is known
/// up front.
pub struct DumpWriter<W: Write> {
    inner: W,
    rank: Rank,
    remaining: usize,
}

impl<W: Write> DumpWriter<W> {
    pub fn new(mut inner: W, rank: Rank, grid_n: usize, times: &[f64]) -> Result<DumpWriter<W>> {
        inner.write_all(MAGIC)?;
        inner.write_u32::<LittleEndian>(VERSION)?;
        inner.write_u8(rank.code())?;
        inner.write_u32::<LittleEndian>(grid_n as u32)?;
        inner.write_u32::<LittleEndian>(times.len() as u32)?;
        for &t in times {
            inner.write_f64::<LittleEndian>(t)?;
        }
        Ok(DumpWriter { inner, rank, remaining: times.len() })
    }

    pub fn push(&mut self, comps: &[Vec<f64>]) -> Result<()> {
        if self.remaining == 0 || comps.len() != self.rank.components() {
            return Err(Error::State("dump slice count or rank mismatch".into()));
        }
        for c in comps {
            for &v in c {
                self.inner.write_f64::<LittleEndian>(v)?;
            }
        }
        self.remaining -= 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.remaining != 0 {
            return Err(Error::State(format!("{} slices missing from dump", self.remaining)));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_roundtrip() {
        let g = Grid::cubic(4).unwrap();
        let vals: Vec<f64> = (0..64).map(|i| i as f64 * 0.5).collect();
        let f = Field::new(Rank::Scalar, 4, vec![0.0, 0.25], vec![vec![vals.clone()], vec![vals]]).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"WNSF");
        assert_eq!(buf.len(), 4 + 4 + 1 + 4 + 4 + 16 + 2 * 64 * 8);
        let back = Field::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.slices, f.slices);
        assert_eq!(back.times, f.times);
        let _ = g;
    }
}
