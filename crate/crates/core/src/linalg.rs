//! Small dense helpers: symmetric 3x3 matrices stored as six coordinates
//! `(xx, xy, xz, yy, yz, zz)` and a 6x6 Gauss-Jordan inverse.

use num_complex::Complex64;

pub type Sym3 = [f64; 6];

/// Position of entry `(i, j)` in the packed symmetric layout.
pub const SYM: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

pub const IDENTITY: Sym3 = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];

pub fn outer(a: [f64; 3], b: [f64; 3]) -> Sym3 {
    [
        a[0] * b[0],
        0.5 * (a[0] * b[1] + a[1] * b[0]),
        0.5 * (a[0] * b[2] + a[2] * b[0]),
        a[1] * b[1],
        0.5 * (a[1] * b[2] + a[2] * b[1]),
        a[2] * b[2],
    ]
}

pub fn trace(m: &Sym3) -> f64 {
    m[0] + m[3] + m[5]
}

pub fn add(a: &Sym3, b: &Sym3) -> Sym3 {
    let mut r = *a;
    for i in 0..6 {
        r[i] += b[i];
    }
    r
}

pub fn scale(a: &Sym3, s: f64) -> Sym3 {
    let mut r = *a;
    for v in r.iter_mut() {
        *v *= s;
    }
    r
}

pub fn entry(m: &Sym3, i: usize, j: usize) -> f64 {
    m[SYM[i][j]]
}

pub fn mat_vec(m: &Sym3, v: [f64; 3]) -> [f64; 3] {
    let mut r = [0.0; 3];
    for (i, ri) in r.iter_mut().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            *ri += m[SYM[i][j]] * vj;
        }
    }
    r
}

/// Frobenius inner product.
pub fn frob_dot(a: &Sym3, b: &Sym3) -> f64 {
    a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
}

/// Eigenvalues in descending order (closed-form trigonometric solution).
pub fn eigenvalues(m: &Sym3) -> [f64; 3] {
    let (a00, a01, a02, a11, a12, a22) = (m[0], m[1], m[2], m[3], m[4], m[5]);
    let p1 = a01 * a01 + a02 * a02 + a12 * a12;
    let q = (a00 + a11 + a22) / 3.0;
    let scale = a00.abs().max(a11.abs()).max(a22.abs()).max(p1.sqrt());
    if p1 <= 1e-30 * scale * scale || scale == 0.0 {
        let mut e = [a00, a11, a22];
        e.sort_by(|x, y| y.partial_cmp(x).unwrap());
        return e;
    }
    let p2 = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = [(a00 - q) / p, a01 / p, a02 / p, (a11 - q) / p, a12 / p, (a22 - q) / p];
    let det = b[0] * (b[3] * b[5] - b[4] * b[4]) - b[1] * (b[1] * b[5] - b[4] * b[2])
        + b[2] * (b[1] * b[4] - b[3] * b[2]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// Operator (spectral) norm of a symmetric matrix.
pub fn op_norm(m: &Sym3) -> f64 {
    let e = eigenvalues(m);
    e[0].abs().max(e[2].abs())
}

/// Trace norm (sum of absolute eigenvalues), dual to the operator norm.
pub fn nuclear_norm(m: &Sym3) -> f64 {
    eigenvalues(m).iter().map(|e| e.abs()).sum()
}

/// Orthonormal eigenvector for a simple eigenvalue `e` of `m`.
pub fn eigenvector(m: &Sym3, e: f64) -> [f64; 3] {
    let rows = [
        [m[0] - e, m[1], m[2]],
        [m[1], m[3] - e, m[4]],
        [m[2], m[4], m[5] - e],
    ];
    let mut best = [0.0; 3];
    let mut best_n = -1.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let c = cross(rows[i], rows[j]);
            let n = norm3(c);
            if n > best_n {
                best_n = n;
                best = c;
            }
        }
    }
    if best_n <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    [best[0] / best_n, best[1] / best_n, best[2] / best_n]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn ccross(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Inverse of a dense 6x6 matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` when a pivot falls below `1e-13` of the column scale.
pub fn invert6(a: &[[f64; 6]; 6]) -> Option<[[f64; 6]; 6]> {
    let mut m = *a;
    let mut inv = [[0.0; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    for col in 0..6 {
        let piv = (col..6)
            .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
            .unwrap();
        if m[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for k in 0..6 {
            m[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..6 {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for k in 0..6 {
                        m[r][k] -= f * m[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Induced 1-norm of a 6x6 matrix (max column sum).
pub fn norm1_6(a: &[[f64; 6]; 6]) -> f64 {
    (0..6)
        .map(|c| (0..6).map(|r| a[r][c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal_and_rotated() {
        let e = eigenvalues(&[3.0, 0.0, 0.0, -1.0, 0.0, 2.0]);
        assert_eq!(e, [3.0, 2.0, -1.0]);
        // [[2,1,0],[1,2,0],[0,0,5]] has eigenvalues 5, 3, 1.
        let e = eigenvalues(&[2.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        assert!((e[0] - 5.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14 && (e[2] - 1.0).abs() < 1e-14);
        let v = eigenvector(&[2.0, 1.0, 0.0, 2.0, 0.0, 5.0], 3.0);
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-14 && v[2].abs() < 1e-14);
    }

    #[test]
    fn invert6_roundtrip() {
        let mut a = [[0.0; 6]; 6];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 2.0 } else { 0.0 };
            }
        }
        let inv = invert6(&a).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let s: f64 = (0..6).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
        assert!(invert6(&[[1.0; 6]; 6]).is_none());
    }
}
