//! Gauss-Jacobi rules, Chebyshev interpolation and scalar searches used by
//! the quadrature oracles.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Gauss rule on `[-1, 1]` for the weight `(1 - t)^a (1 + t)^b`.
#[derive(Debug, Clone)]
pub struct JacobiRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

/// Golub-Welsch construction of the `n`-point Gauss-Jacobi rule.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<JacobiRule> {
    if n == 0 || !(a > -1.0 && b > -1.0) {
        return Err(Error::param(format!(
            "Gauss-Jacobi rule needs n > 0 and exponents above -1, got n={n}, a={a}, b={b}"
        )));
    }
    let s = a + b;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (b - a) / (s + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let beta = if m == 1.0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + s).powi(2) * (3.0 + s))
            } else {
                let t = 2.0 * m + s;
                4.0 * m * (m + a) * (m + b) * (m + s) / (t * t * (t + 1.0) * (t - 1.0))
            };
            jm[(k, k + 1)] = beta.sqrt();
            jm[(k + 1, k)] = beta.sqrt();
        }
    }
    let eig = SymmetricEigen::new(jm);
    let ln_mu0 = (s + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(s + 2.0);
    let mu0 = ln_mu0.exp();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(JacobiRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        a,
        b,
    })
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<JacobiRule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Memoised Gauss-Jacobi rules of one size.
#[derive(Debug)]
pub struct RuleCache {
    n: usize,
    rules: HashMap<(u64, u64), JacobiRule>,
}

impl RuleCache {
    pub fn new(n: usize) -> Self {
        RuleCache {
            n,
            rules: HashMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn rule(&mut self, a: f64, b: f64) -> Result<&JacobiRule> {
        let key = (a.to_bits(), b.to_bits());
        if !self.rules.contains_key(&key) {
            let rule = gauss_jacobi(self.n, a, b)?;
            self.rules.insert(key, rule);
        }
        Ok(&self.rules[&key])
    }

    /// `int_x0^x1 f(x) (x - x0)^e0 (x1 - x)^e1 dx`; zero for an empty interval.
    pub fn integrate(
        &mut self,
        x0: f64,
        x1: f64,
        e0: f64,
        e1: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        if x1 <= x0 {
            return Ok(0.0);
        }
        let half = 0.5 * (x1 - x0);
        let rule = self.rule(e1, e0)?;
        let sum: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w * f(x0 + half * (1.0 + t)))
            .sum();
        Ok(half.powf(1.0 + e0 + e1) * sum)
    }
}

/// Chebyshev interpolant on `[lo, hi]` through the first-kind points.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// The `n` interpolation points in ascending order.
    pub fn points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .rev()
            .map(|k| {
                let t = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * t
            })
            .collect()
    }

    /// Interpolant through `values` sampled at [`Chebyshev::points`].
    pub fn from_values(lo: f64, hi: f64, values: &[f64]) -> Self {
        let n = values.len();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = (0..n)
                    .map(|k| {
                        // values are ascending, so point k sits at cos index n-1-k
                        let idx = (n - 1 - k) as f64;
                        let angle = std::f64::consts::PI * j as f64 * (idx + 0.5) / n as f64;
                        values[k] * angle.cos()
                    })
                    .sum();
                let c = 2.0 * s / n as f64;
                if j == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Chebyshev { lo, hi, coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(1)];
        if n >= 2 {
            // d[j-1] = d[j+1] + 2 j c[j]
            for j in (1..n).rev() {
                let next = if j + 1 < n { d[j + 1] } else { 0.0 };
                d[j - 1] = next + 2.0 * j as f64 * self.coeffs[j];
            }
            d[0] *= 0.5;
            d[n - 1] = 0.0;
        }
        let scale = 2.0 / (self.hi - self.lo);
        Chebyshev {
            lo: self.lo,
            hi: self.hi,
            coeffs: d.into_iter().map(|c| c * scale).collect(),
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimum of `f` on `[lo, hi]`.
pub fn golden_min(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

pub fn golden_max(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(&|x| -f(x), lo, hi, tol);
    (x, -v)
}

/// Uniform scan with `n` points (ends included). Returns the best index,
/// the grid and the values.
pub fn scan_min(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (usize, Vec<f64>, Vec<f64>) {
    let grid: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for k in 1..n {
        if vals[k] < vals[best] {
            best = k;
        }
    }
    (best, grid, vals)
}

/// Scan followed by golden-section refinement around the best grid point.
pub fn scan_golden_min(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> (f64, f64) {
    let (k, grid, vals) = scan_min(f, lo, hi, n);
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(n - 1)];
    let (x, v) = golden_min(f, a, b, tol);
    if v <= vals[k] {
        (x, v)
    } else {
        (grid[k], vals[k])
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the interval
/// cannot shrink further. `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = f(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
