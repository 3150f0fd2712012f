//! Temporal partition of unity `sum_j chi_j^2 = 1` on windows of length `l`.

/// `e^{-1/x}` for `x > 0`.
fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn psi_prime(x: f64) -> f64 {
    if x > 0.0 {
        psi(x) / (x * x)
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
fn step(x: f64) -> f64 {
    let (a, b) = (psi(x), psi(1.0 - x));
    a / (a + b)
}

fn step_prime(x: f64) -> f64 {
    let (a, b) = (psi(x), psi(1.0 - x));
    let (da, db) = (psi_prime(x), -psi_prime(1.0 - x));
    let s = a + b;
    if s == 0.0 {
        return 0.0;
    }
    (da * s - a * (da + db)) / (s * s)
}

/// Raw bump: support `(-1, 1)`, equal to one on `[-1/4, 1/4]`.
pub fn raw_bump(s: f64) -> f64 {
    step((1.0 - s.abs()) / 0.75)
}

pub fn raw_bump_prime(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    -s.signum() / 0.75 * step_prime((1.0 - s.abs()) / 0.75)
}

/// Cutoffs `chi_j(t) = chi(t / l - j)`, jointly normalised.
#[derive(Debug, Clone, Copy)]
pub struct Cutoffs {
    pub l: f64,
}

/// One nonzero cutoff at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveCutoff {
    pub j: i64,
    pub value: f64,
    pub derivative: f64,
}

impl Cutoffs {
    pub fn new(l: f64) -> Cutoffs {
        Cutoffs { l }
    }

    /// Index of the window whose plateau side contains `t`: `t` lies in
    /// `[j l, (j + 1) l)`.
    pub fn segment(&self, t: f64) -> i64 {
        (t / self.l + 1e-12).floor() as i64
    }

    /// The (at most two) nonzero cutoffs at `t` with their time derivatives.
    pub fn active(&self, t: f64) -> Vec<ActiveCutoff> {
        let j0 = self.segment(t);
        let s = t / self.l;
        let cand = [j0 - 1, j0, j0 + 1];
        let raw: Vec<(i64, f64, f64)> = cand
            .iter()
            .map(|&j| (j, raw_bump(s - j as f64), raw_bump_prime(s - j as f64) / self.l))
            .collect();
        let q: f64 = raw.iter().map(|r| r.1 * r.1).sum();
        let dq: f64 = raw.iter().map(|r| 2.0 * r.1 * r.2).sum();
        let inv = q.sqrt().recip();
        raw.into_iter()
            .filter(|r| r.1 > 0.0)
            .map(|(j, v, d)| ActiveCutoff {
                j,
                value: v * inv,
                derivative: d * inv - 0.5 * v * inv * dq / q,
            })
            .collect()
    }

    /// `chi_j(t)`.
    pub fn value(&self, j: i64, t: f64) -> f64 {
        self.active(t).into_iter().find(|c| c.j == j).map_or(0.0, |c| c.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plateau_at_anchor() {
        let c = Cutoffs::new(0.125);
        for j in 0..8 {
            let act = c.active(j as f64 * 0.125);
            assert_eq!(act.len(), 1);
            assert_eq!(act[0].j, j);
            assert_eq!(act[0].value, 1.0);
        }
    }

    #[test]
    fn squares_sum_to_one() {
        let c = Cutoffs::new(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let t: f64 = rng.gen_range(0.0..3.0);
            let act = c.active(t);
            assert!(act.len() <= 2);
            let s: f64 = act.iter().map(|a| a.value * a.value).sum();
            assert!((s - 1.0).abs() < 1e-12);
            for a in &act {
                assert!(t > 0.3 * (a.j - 1) as f64 && t < 0.3 * (a.j + 1) as f64);
            }
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let c = Cutoffs::new(0.2);
        let h = 1e-6;
        for &t in &[0.03, 0.11, 0.17, 0.26] {
            for a in c.active(t) {
                let fd = (c.value(a.j, t + h) - c.value(a.j, t - h)) / (2.0 * h);
                assert!((fd - a.derivative).abs() < 1e-5 * (1.0 + fd.abs()), "{t} {fd} {}", a.derivative);
            }
        }
    }
}
