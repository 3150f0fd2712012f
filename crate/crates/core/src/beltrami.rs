//! Beltrami waves on two disjoint direction families and the linear
//! decomposition of symmetric matrices near the identity.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Sym3};
use crate::spectral::{Grid, Vector};

/// Integer representatives `n` of the directions `n / 5`, one per +- pair.
pub const FAMILY_0: [[i64; 3]; 6] = [[3, 4, 0], [3, -4, 0], [0, 3, 4], [0, 3, -4], [4, 0, 3], [-4, 0, 3]];
pub const FAMILY_1: [[i64; 3]; 6] = [[4, 3, 0], [4, -3, 0], [0, 4, 3], [0, 4, -3], [3, 0, 4], [-3, 0, 4]];
pub const SCALE: i64 = 5;

/// Boundary samples used by the order-0 check on the admissible ball.
pub const BALL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveDirection {
    /// Integer numerator of the direction; `zeta = int_dir / scale`.
    pub int_dir: [i64; 3],
    pub scale: i64,
    pub zeta: [f64; 3],
    pub a_zeta: [f64; 3],
    /// `a_zeta = a_num / a_den`.
    pub a_num: [i64; 3],
    pub a_den: i64,
    pub b_zeta: [Complex64; 3],
    pub family: usize,
    /// Smallest integer `lambda` with `lambda * zeta` integral.
    pub lambda_scale: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn isqrt_exact(v: i64) -> Option<i64> {
    let r = (v as f64).sqrt().round() as i64;
    (r * r == v).then_some(r)
}

impl WaveDirection {
    /// Direction `int_dir / scale`; `a_from` is the representative whose
    /// `A` vector is shared by the pair (so that `A_{-zeta} = A_zeta`).
    fn new(int_dir: [i64; 3], scale: i64, a_from: [i64; 3], family: usize) -> Result<WaveDirection> {
        let n2: i64 = int_dir.iter().map(|v| v * v).sum();
        if n2 != scale * scale {
            return Err(Error::Config(format!("direction {int_dir:?}/{scale} is not a unit vector")));
        }
        let zeta = int_dir.map(|v| v as f64 / scale as f64);
        // First coordinate axis not parallel to zeta.
        let axis = (0..3)
            .find(|&a| {
                let mut e = [0i64; 3];
                e[a] = 1;
                int_cross(a_from, e) != [0, 0, 0]
            })
            .unwrap();
        let mut e = [0i64; 3];
        e[axis] = 1;
        let c = int_cross(a_from, e);
        let g = c.iter().fold(0, |g, &v| gcd(g, v));
        let c = c.map(|v| v / g);
        let c2: i64 = c.iter().map(|v| v * v).sum();
        let a_zeta_raw = c.map(|v| v as f64);
        let norm = (c2 as f64).sqrt();
        let a_zeta = a_zeta_raw.map(|v| v / norm);
        let (a_num, a_den) = match isqrt_exact(c2) {
            Some(d) => (c, d),
            None => (c, 0),
        };
        let b_zeta = b_vector(zeta, a_zeta);
        let lambda_scale = {
            let g = int_dir.iter().fold(scale, |g, &v| gcd(g, v));
            scale / g
        };
        Ok(WaveDirection { int_dir, scale, zeta, a_zeta, a_num, a_den, b_zeta, family, lambda_scale })
    }

    /// Integer wave vector `lambda * zeta`, if it exists.
    pub fn wave_vector(&self, lambda: i64) -> Option<[i64; 3]> {
        if lambda % self.lambda_scale != 0 {
            return None;
        }
        Some(self.int_dir.map(|v| v * lambda / self.scale))
    }

    /// `Id - zeta (x) zeta`.
    pub fn projector_complement(&self) -> Sym3 {
        let zz = linalg::outer(self.zeta, self.zeta);
        let mut r = linalg::IDENTITY;
        for i in 0..6 {
            r[i] -= zz[i];
        }
        r
    }
}

/// `(A + i zeta x A) / sqrt 2`.
pub fn b_vector(zeta: [f64; 3], a: [f64; 3]) -> [Complex64; 3] {
    let zc = linalg::cross(zeta, a);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [0, 1, 2].map(|i| Complex64::new(a[i] * s, zc[i] * s))
}

fn int_cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Linear map from a symmetric matrix to the six pair coefficients
/// `c_p = gamma_p^2` with `R = sum_p c_p (Id - zeta_p (x) zeta_p)`.
#[derive(Debug, Clone)]
pub struct GeometricSolver {
    pub basis: [Sym3; 6],
    pub inverse: [[f64; 6]; 6],
    /// Matrices `A_p` with `c_p(R) = <A_p, R>` (Frobenius).
    pub functionals: [Sym3; 6],
    pub c_identity: [f64; 6],
    pub condition: f64,
}

impl GeometricSolver {
    fn new(pairs: &[WaveDirection], family: usize) -> Result<GeometricSolver> {
        let basis: [Sym3; 6] = std::array::from_fn(|p| pairs[p].projector_complement());
        let mut mat = [[0.0; 6]; 6];
        for (p, b) in basis.iter().enumerate() {
            for i in 0..6 {
                mat[i][p] = b[i];
            }
        }
        let inverse = linalg::invert6(&mat).ok_or_else(|| {
            Error::Config(format!(
                "family {family}: projector complements do not span Sym(3) (direction {:?})",
                pairs[5].int_dir
            ))
        })?;
        let functionals: [Sym3; 6] = std::array::from_fn(|p| {
            let r = inverse[p];
            [r[0], r[1] / 2.0, r[2] / 2.0, r[3], r[4] / 2.0, r[5]]
        });
        let c_identity: [f64; 6] = std::array::from_fn(|p| linalg::frob_dot(&functionals[p], &linalg::IDENTITY));
        for (p, c) in c_identity.iter().enumerate() {
            if *c <= 0.0 {
                return Err(Error::Config(format!(
                    "family {family}: coefficient of direction {:?} at Id is {c}",
                    pairs[p].int_dir
                )));
            }
        }
        let condition = linalg::norm1_6(&mat) * linalg::norm1_6(&inverse);
        Ok(GeometricSolver { basis, inverse, functionals, c_identity, condition })
    }

    /// Pair coefficients `c_p(R)` without any domain check.
    pub fn coefficients(&self, r: &Sym3) -> [f64; 6] {
        std::array::from_fn(|p| linalg::frob_dot(&self.functionals[p], r))
    }

    /// `sum_p c_p (Id - zeta_p zeta_p)`.
    pub fn reconstruct(&self, c: &[f64; 6]) -> Sym3 {
        let mut r = [0.0; 6];
        for p in 0..6 {
            for i in 0..6 {
                r[i] += c[p] * self.basis[p][i];
            }
        }
        r
    }

    /// Largest radius (in operator norm about Id) on which every coefficient
    /// stays positive. Exact since the coefficients are linear.
    pub fn positivity_radius(&self) -> f64 {
        (0..6)
            .map(|p| self.c_identity[p] / linalg::nuclear_norm(&self.functionals[p]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct Family {
    pub index: usize,
    /// Directions ordered as `+zeta_0, -zeta_0, +zeta_1, ...`.
    pub directions: Vec<WaveDirection>,
    pub solver: GeometricSolver,
}

impl Family {
    fn new(index: usize, reps: &[[i64; 3]; 6]) -> Result<Family> {
        let mut directions = Vec::with_capacity(12);
        for r in reps {
            directions.push(WaveDirection::new(*r, SCALE, *r, index)?);
            directions.push(WaveDirection::new(r.map(|v| -v), SCALE, *r, index)?);
        }
        let pairs: Vec<WaveDirection> = directions.iter().step_by(2).cloned().collect();
        let solver = GeometricSolver::new(&pairs, index)?;
        Ok(Family { index, directions, solver })
    }

    /// Representative of pair `p`.
    pub fn pair(&self, p: usize) -> &WaveDirection {
        &self.directions[2 * p]
    }
}

#[derive(Debug, Clone)]
pub struct WaveSystem {
    pub families: [Family; 2],
    /// Radius of the admissible ball `B_{C*}(Id)`.
    pub c_star: f64,
}

impl WaveSystem {
    pub fn new() -> Result<WaveSystem> {
        WaveSystem::from_families(&FAMILY_0, &FAMILY_1)
    }

    pub fn from_families(f0: &[[i64; 3]; 6], f1: &[[i64; 3]; 6]) -> Result<WaveSystem> {
        let families = [Family::new(0, f0)?, Family::new(1, f1)?];
        for d in &families[0].directions {
            if families[1].directions.iter().any(|e| e.int_dir == d.int_dir) {
                return Err(Error::Config(format!("direction {:?} appears in both families", d.int_dir)));
            }
        }
        let c_star = 0.5 * families[0].solver.positivity_radius().min(families[1].solver.positivity_radius());
        Ok(WaveSystem { families, c_star })
    }

    pub fn family(&self, j: usize) -> &Family {
        &self.families[j % 2]
    }

    /// Per-pair coefficients `gamma_p` (shared by `+-zeta_p`) for `r` in the
    /// admissible ball.
    pub fn gamma_coefficients(&self, r: &Sym3, family: usize) -> Result<[f64; 6]> {
        let d = distance_to_identity(r);
        if d > self.c_star {
            return Err(Error::Domain(format!("|R - Id| = {d} exceeds C* = {}", self.c_star)));
        }
        let c = self.family(family).solver.coefficients(r);
        Ok(c.map(|v| v.sqrt()))
    }

    /// Shrink the admissible ball (used by the monotonicity checks on M).
    pub fn with_c_star(mut self, c_star: f64) -> WaveSystem {
        self.c_star = c_star;
        self
    }

    /// Closed-form bound on `sum_{zeta in Lambda_j} ||gamma_zeta||_{C^order}`
    /// over the ball, maximised over both families. Derivatives are measured
    /// as multilinear maps on `(Sym(3), |.|_op)`.
    pub fn constant_m(&self, order: usize) -> f64 {
        self.families
            .iter()
            .map(|f| {
                let mut total = 0.0;
                for p in 0..6 {
                    let nuc = linalg::nuclear_norm(&f.solver.functionals[p]);
                    let c0 = f.solver.c_identity[p];
                    let cmin = c0 - self.c_star * nuc;
                    let mut s = (c0 + self.c_star * nuc).sqrt();
                    let mut dfact = 1.0; // (2n - 3)!!
                    for n in 1..=order {
                        if n >= 2 {
                            dfact *= (2 * n - 3) as f64;
                        }
                        s += dfact / 2f64.powi(n as i32) * cmin.powf(0.5 - n as f64) * nuc.powi(n as i32);
                    }
                    total += 2.0 * s;
                }
                total
            })
            .fold(0.0, f64::max)
    }

    /// Order-0 value of the bound measured by sampling the ball boundary:
    /// `max_j sum_zeta sup gamma_zeta`.
    pub fn sampled_m0(&self, rng: &mut impl Rng, samples: usize) -> f64 {
        let pts: Vec<Sym3> = (0..samples).map(|_| random_boundary_point(rng, self.c_star)).collect();
        self.families
            .iter()
            .map(|f| {
                (0..6)
                    .map(|p| {
                        let best = pts
                            .iter()
                            .map(|r| linalg::frob_dot(&f.solver.functionals[p], r).max(0.0).sqrt())
                            .fold(0.0, f64::max);
                        2.0 * best
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Derivative order required by the construction for diffusion exponent `m`.
    pub fn required_order(m: f64) -> usize {
        ((1.0 / (2.0 * m)).ceil() as usize + 1).max(10)
    }

    /// `min |zeta + zeta'|` over directions of the same or adjacent families
    /// with `zeta + zeta' != 0`.
    pub fn min_angle(&self) -> f64 {
        let all: Vec<&WaveDirection> = self.families.iter().flat_map(|f| f.directions.iter()).collect();
        let mut best = f64::INFINITY;
        for a in &all {
            for b in &all {
                let s = [0, 1, 2].map(|i| a.int_dir[i] * b.scale + b.int_dir[i] * a.scale);
                if s == [0, 0, 0] {
                    continue;
                }
                let v = [0, 1, 2].map(|i| a.zeta[i] + b.zeta[i]);
                best = best.min(linalg::norm3(v));
            }
        }
        best
    }

    pub fn to_json(&self, m: f64) -> WaveSystemJson {
        let order = WaveSystem::required_order(m);
        let m_table = (0..=order).map(|n| (n.to_string(), self.constant_m(n))).collect();
        WaveSystemJson {
            families: self
                .families
                .iter()
                .map(|f| {
                    f.directions
                        .iter()
                        .map(|d| DirectionJson { dir: d.int_dir, scale: d.scale, a_num: d.a_num, a_den: d.a_den })
                        .collect()
                })
                .collect(),
            c_star: self.c_star,
            condition: [self.families[0].solver.condition, self.families[1].solver.condition],
            c_lambda: self.min_angle(),
            m_table,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DirectionJson {
    pub dir: [i64; 3],
    pub scale: i64,
    pub a_num: [i64; 3],
    /// Zero when the normalisation of `a_num` is irrational.
    pub a_den: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WaveSystemJson {
    pub families: Vec<Vec<DirectionJson>>,
    pub c_star: f64,
    pub condition: [f64; 2],
    pub c_lambda: f64,
    pub m_table: BTreeMap<String, f64>,
}

/// `|R - Id|` in operator norm.
pub fn distance_to_identity(r: &Sym3) -> f64 {
    let mut d = *r;
    d[0] -= 1.0;
    d[3] -= 1.0;
    d[5] -= 1.0;
    linalg::op_norm(&d)
}

/// Random orthogonal matrix via Gram-Schmidt on Gaussian columns.
pub fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    use rand_distr::StandardNormal;
    loop {
        let mut q = [[0.0; 3]; 3];
        for col in q.iter_mut() {
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
        let mut ok = true;
        for i in 0..3 {
            for j in 0..i {
                let d = linalg::dot3(q[i], q[j]);
                for k in 0..3 {
                    q[i][k] -= d * q[j][k];
                }
            }
            let n = linalg::norm3(q[i]);
            if n < 1e-8 {
                ok = false;
                break;
            }
            for k in 0..3 {
                q[i][k] /= n;
            }
        }
        if ok {
            return q;
        }
    }
}

/// `Id + rho Q diag(s) Q^T` with random rotation `Q` and random signs `s`,
/// a point on the boundary of the operator-norm ball of radius `rho`.
pub fn random_boundary_point(rng: &mut impl Rng, rho: f64) -> Sym3 {
    let q = random_rotation(rng);
    let s: [f64; 3] = std::array::from_fn(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 });
    let mut r = linalg::IDENTITY;
    for k in 0..3 {
        let o = linalg::outer(q[k], q[k]);
        for i in 0..6 {
            r[i] += rho * s[k] * o[i];
        }
    }
    r
}

/// Random point strictly inside the ball of radius `rho`.
pub fn random_ball_point(rng: &mut impl Rng, rho: f64) -> Sym3 {
    let q = random_rotation(rng);
    let mut r = linalg::IDENTITY;
    for k in 0..3 {
        let e: f64 = rng.gen_range(-1.0..1.0) * rho * 0.999;
        let o = linalg::outer(q[k], q[k]);
        for i in 0..6 {
            r[i] += e * o[i];
        }
    }
    r
}

/// Real and imaginary parts of `W = B_zeta e^{i lambda zeta . x}` on `grid`.
pub fn beltrami_wave(dir: &WaveDirection, lambda: i64, grid: &Grid) -> Result<(Vector, Vector)> {
    let k = dir.wave_vector(lambda).ok_or_else(|| {
        Error::Domain(format!("lambda = {lambda} is not a multiple of {} for {:?}", dir.lambda_scale, dir.int_dir))
    })?;
    let dims = grid.dims();
    for a in 0..3 {
        if 2 * k[a].abs() >= dims[a] as i64 {
            return Err(Error::Resolution(format!("wave vector {k:?} aliases on {grid:?}")));
        }
    }
    let x = grid.coords();
    let n = grid.len();
    let mut re: Vector = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut im: Vector = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for p in 0..n {
        let ph = k[0] as f64 * x[0][p] + k[1] as f64 * x[1][p] + k[2] as f64 * x[2][p];
        let e = Complex64::from_polar(1.0, ph);
        for i in 0..3 {
            let w = dir.b_zeta[i] * e;
            re[i][p] = w.re;
            im[i][p] = w.im;
        }
    }
    Ok((re, im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn b_for_vertical_direction() {
        let d = WaveDirection::new([0, 0, 5], 5, [0, 0, 5], 0).unwrap();
        assert_eq!(d.a_zeta, [0.0, 1.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = b_vector([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
        assert_eq!(b, [Complex64::new(s, 0.0), Complex64::new(0.0, s), Complex64::new(0.0, 0.0)]);
        let i = Complex64::new(0.0, 1.0);
        let c = linalg::ccross([0.0, 0.0, 1.0].map(|v| Complex64::new(v, 0.0)), b);
        for k in 0..3 {
            assert!((i * c[k] - b[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_coefficients_are_quarter() {
        let ws = WaveSystem::new().unwrap();
        for f in &ws.families {
            for c in f.solver.c_identity {
                assert!((c - 0.25).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn a_vectors_are_rational() {
        let ws = WaveSystem::new().unwrap();
        for f in &ws.families {
            for d in &f.directions {
                assert!(d.a_den > 0);
                assert_eq!(d.lambda_scale, 5);
            }
        }
    }

    #[test]
    fn c_star_matches_sampling() {
        let ws = WaveSystem::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let radius = 2.0 * ws.c_star;
        let f = &ws.families[0].solver;
        let mut min_c = f64::INFINITY;
        for _ in 0..BALL_SAMPLES {
            let r = random_boundary_point(&mut rng, radius);
            for c in f.coefficients(&r) {
                min_c = min_c.min(c);
            }
        }
        // The boundary of the positivity ball touches zero.
        assert!(min_c > -1e-12 && min_c < 1e-2);
    }
}
