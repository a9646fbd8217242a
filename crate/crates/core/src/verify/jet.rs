//! Taylor jets at a regular point and their value densities on a ball.

use std::f64::consts::PI;

use rand::Rng;

use super::density::ValueDensity;
use super::quad::{bisect, gauss_legendre, golden_max, golden_min, JacobiRule};
use crate::error::{Error, Result};

/// Names of the cubic monomials, in the order of [`QuadraticJet::eps`].
pub const CUBIC_TERMS: [&str; 10] = ["xxx", "xxy", "xxz", "xyy", "xyz", "xzz", "yyy", "yyz", "yzz", "zzz"];

/// `u = alpha (x + beta x^2 + gamma0 xy + gamma1 xz + delta0 y^2 + delta1 yz
/// + delta2 z^2 + cubic terms)`. Lower dimensions evaluate with `z = 0` (2D)
/// or `y = z = 0` (1D), so the 2D jet reads
/// `alpha (x + beta x^2 + gamma xy + delta y^2 + ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticJet {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: [f64; 2],
    pub delta: [f64; 3],
    pub eps: [f64; 10],
}

impl QuadraticJet {
    pub fn new_1d(alpha: f64, beta: f64) -> Self {
        QuadraticJet {
            alpha,
            beta,
            gamma: [0.0; 2],
            delta: [0.0; 3],
            eps: [0.0; 10],
        }
    }

    pub fn new_2d(alpha: f64, beta: f64, delta: f64) -> Self {
        QuadraticJet {
            delta: [delta, 0.0, 0.0],
            ..QuadraticJet::new_1d(alpha, beta)
        }
    }

    pub fn new_3d(alpha: f64, beta: f64, delta0: f64, delta2: f64) -> Self {
        QuadraticJet {
            delta: [delta0, 0.0, delta2],
            ..QuadraticJet::new_1d(alpha, beta)
        }
    }

    pub fn with_gamma(mut self, gamma: [f64; 2]) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_eps(mut self, eps: [f64; 10]) -> Self {
        self.eps = eps;
        self
    }

    /// Replaces the cubic coefficients by uniform draws from `[-scale, scale]`.
    pub fn with_random_eps(mut self, rng: &mut impl Rng, scale: f64) -> Self {
        for e in self.eps.iter_mut() {
            *e = rng.gen_range(-scale..=scale);
        }
        self
    }

    pub fn value(&self, x: f64, y: f64, z: f64) -> f64 {
        let [g0, g1] = self.gamma;
        let [d0, d1, d2] = self.delta;
        let e = &self.eps;
        let quad = self.beta * x * x + g0 * x * y + g1 * x * z + d0 * y * y + d1 * y * z + d2 * z * z;
        let cubic = e[0] * x * x * x
            + e[1] * x * x * y
            + e[2] * x * x * z
            + e[3] * x * y * y
            + e[4] * x * y * z
            + e[5] * x * z * z
            + e[6] * y * y * y
            + e[7] * y * y * z
            + e[8] * y * z * z
            + e[9] * z * z * z;
        self.alpha * (x + quad + cubic)
    }

    pub fn dx(&self, x: f64, y: f64, z: f64) -> f64 {
        let [g0, g1] = self.gamma;
        let e = &self.eps;
        let d = 1.0
            + 2.0 * self.beta * x
            + g0 * y
            + g1 * z
            + 3.0 * e[0] * x * x
            + 2.0 * e[1] * x * y
            + 2.0 * e[2] * x * z
            + e[3] * y * y
            + e[4] * y * z
            + e[5] * z * z;
        self.alpha * d
    }

    /// Checks `alpha > 0` and `u_x > 0` on a sample grid of the ball.
    pub fn check_regular(&self, dim: usize, rho: f64) -> Result<()> {
        if !(1..=3).contains(&dim) {
            return Err(Error::param(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::param(format!("radius must be positive, got {rho}")));
        }
        let n: i32 = 20;
        let axis = |k: i32| rho * k as f64 / n as f64;
        let span = |on: bool| if on { -n..=n } else { 0..=0 };
        for i in -n..=n {
            for j in span(dim >= 2) {
                for k in span(dim >= 3) {
                    let (x, y, z) = (axis(i), axis(j), axis(k));
                    if x * x + y * y + z * z > rho * rho * (1.0 + 1e-12) {
                        continue;
                    }
                    if self.dx(x, y, z) <= 0.0 {
                        return Err(Error::param(format!(
                            "jet is not increasing in x on the radius {rho} window"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Solves `u(x, y, z) = w` for `x` in `[lo, hi]`, where `u` increases.
    fn solve_x(&self, w: f64, y: f64, z: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut x = (w / self.alpha).clamp(lo, hi);
        for _ in 0..100 {
            let f = self.value(x, y, z) - w;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let mut next = x - f / self.dx(x, y, z);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Node counts used at one refinement level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Resolution {
    pub cheb: usize,
    pub inner: usize,
    pub angles: usize,
}

impl Resolution {
    pub fn level(k: u32) -> Self {
        Resolution {
            cheb: 24 << k,
            inner: 16 << k,
            angles: 16 << k,
        }
    }
}

const GOLD_TOL: f64 = 1e-13;

/// Depth of the transversal point `t` inside the set of points whose chord
/// through the ball crosses the level `w`: positive inside, negative outside.
fn depth(jet: &QuadraticJet, rho: f64, w: f64, y: f64, z: f64) -> f64 {
    let s = (rho * rho - y * y - z * z).max(0.0).sqrt();
    (w - jet.value(-s, y, z)).min(jet.value(s, y, z) - w)
}

/// Extremes of the jet on the sphere, reached on the near (`x < 0`) and far
/// (`x > 0`) caps.
fn value_range(jet: &QuadraticJet, dim: usize, rho: f64) -> (f64, f64) {
    let cap = |sign: f64, y: f64, z: f64| {
        let s = (rho * rho - y * y - z * z).max(0.0).sqrt();
        jet.value(sign * s, y, z)
    };
    match dim {
        1 => (jet.value(-rho, 0.0, 0.0), jet.value(rho, 0.0, 0.0)),
        2 => {
            let lo = golden_min(&|y| cap(-1.0, y, 0.0), -rho, rho, GOLD_TOL * rho).1;
            let hi = golden_max(&|y| cap(1.0, y, 0.0), -rho, rho, GOLD_TOL * rho).1;
            (lo, hi)
        }
        _ => {
            let inner = |sign: f64, y: f64| {
                let r = (rho * rho - y * y).max(0.0).sqrt();
                let f = |z: f64| -sign * cap(sign, y, z);
                -sign * golden_min(&f, -r, r, GOLD_TOL * rho).1
            };
            let lo = golden_min(&|y| inner(-1.0, y), -rho, rho, GOLD_TOL * rho).1;
            let hi = golden_max(&|y| inner(1.0, y), -rho, rho, GOLD_TOL * rho).1;
            (lo, hi)
        }
    }
}

fn gl_sum(rule: &JacobiRule, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    half * rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, wt)| wt * f(a + half * (1.0 + t)))
        .sum::<f64>()
}

/// Value density of `jet` on the ball of radius `rho`, by the coarea
/// formula: `V(w)` integrates `1 / u_x` over the transversal shadow of the
/// level set `u = w`.
pub(crate) fn jet_density(jet: &QuadraticJet, dim: usize, rho: f64, res: Resolution) -> Result<ValueDensity> {
    jet.check_regular(dim, rho)?;
    let (lo, hi) = value_range(jet, dim, rho);
    let e = 0.5 * (dim as f64 - 1.0);
    let rule = gauss_legendre(res.inner)?;
    match dim {
        1 => ValueDensity::from_density(lo, hi, e, res.cheb, |w| {
            let x = jet.solve_x(w, 0.0, 0.0, -rho, rho);
            Ok(1.0 / jet.dx(x, 0.0, 0.0))
        }),
        2 => ValueDensity::from_density(lo, hi, e, res.cheb, |w| {
            let f = |y: f64| depth(jet, rho, w, y, 0.0);
            let (yc, fc) = golden_max(&f, -rho, rho, GOLD_TOL * rho);
            if fc <= 0.0 {
                return Err(Error::Accuracy(format!("empty level set at value {w}")));
            }
            let y1 = bisect(&f, -rho, yc);
            let y2 = bisect(&f, yc, rho);
            Ok(gl_sum(&rule, y1, y2, |y| {
                let s = (rho * rho - y * y).max(0.0).sqrt();
                1.0 / jet.dx(jet.solve_x(w, y, 0.0, -s, s), y, 0.0)
            }))
        }),
        _ => ValueDensity::from_density(lo, hi, e, res.cheb, |w| {
            let best_z = |y: f64| {
                let r = (rho * rho - y * y).max(0.0).sqrt();
                golden_max(&|z| depth(jet, rho, w, y, z), -r, r, GOLD_TOL * rho)
            };
            let (yc, fc) = golden_max(&|y| best_z(y).1, -rho, rho, GOLD_TOL * rho);
            let zc = best_z(yc).0;
            if fc <= 0.0 {
                return Err(Error::Accuracy(format!("empty level set at value {w}")));
            }
            let m = res.angles;
            let mut total = 0.0;
            for k in 0..m {
                let phi = 2.0 * PI * k as f64 / m as f64;
                let (cy, cz) = (phi.cos(), phi.sin());
                let proj = yc * cy + zc * cz;
                let edge = -proj + (proj * proj + rho * rho - yc * yc - zc * zc).max(0.0).sqrt();
                let radial = |r: f64| depth(jet, rho, w, yc + r * cy, zc + r * cz);
                let rmax = bisect(&radial, 0.0, edge);
                total += gl_sum(&rule, 0.0, rmax, |r| {
                    let (y, z) = (yc + r * cy, zc + r * cz);
                    let s = (rho * rho - y * y - z * z).max(0.0).sqrt();
                    r / jet.dx(jet.solve_x(w, y, z, -s, s), y, z)
                });
            }
            Ok(total * 2.0 * PI / m as f64)
        }),
    }
}
