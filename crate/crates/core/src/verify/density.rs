//! Value densities and the order-p energy built on them.
//!
//! A value density `V(w)` on `[lo, hi]` is stored as
//! `V(w) = A(w) ((w - lo)(hi - w))^e` with `A` a Chebyshev interpolant. For
//! a smooth function on a d-dimensional ball the exponent is `(d - 1) / 2`
//! and `A` is analytic, so a modest interpolant is accurate to rounding.

use std::cell::RefCell;

use rayon::prelude::*;

use super::quad::{bisect, golden_max, golden_min, scan_golden_min, scan_min, Chebyshev, RuleCache};
use crate::error::{Error, Result};

const SCAN: usize = 257;

#[derive(Debug, Clone)]
pub struct ValueDensity {
    lo: f64,
    hi: f64,
    e: f64,
    a: Chebyshev,
    da: Chebyshev,
}

impl ValueDensity {
    /// Samples `v` at `n` Chebyshev points of `[lo, hi]`.
    pub fn from_density(
        lo: f64,
        hi: f64,
        e: f64,
        n: usize,
        v: impl Fn(f64) -> Result<f64> + Sync,
    ) -> Result<Self> {
        if !(hi > lo) || e < 0.0 {
            return Err(Error::param(format!("bad density support [{lo}, {hi}] or exponent {e}")));
        }
        let pts = Chebyshev::points(lo, hi, n);
        let vals = pts
            .par_iter()
            .map(|&w| Ok(v(w)? / ((w - lo) * (hi - w)).powf(e)))
            .collect::<Result<Vec<f64>>>()?;
        let a = Chebyshev::from_values(lo, hi, &vals);
        let da = a.derivative();
        Ok(ValueDensity { lo, hi, e, a, da })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn q(&self, w: f64) -> f64 {
        (w - self.lo) * (self.hi - w)
    }

    pub fn density(&self, w: f64) -> f64 {
        if w < self.lo || w > self.hi {
            return 0.0;
        }
        let q = self.q(w);
        if self.e == 0.0 {
            self.a.eval(w)
        } else {
            self.a.eval(w) * q.max(0.0).powf(self.e)
        }
    }

    /// `V'(w) / q(w)^(e - 1)` for `e > 0`, `V'(w)` for `e = 0`; same sign as `V'`.
    fn slope_factor(&self, w: f64) -> f64 {
        if self.e == 0.0 {
            self.da.eval(w)
        } else {
            let dq = self.lo + self.hi - 2.0 * w;
            self.da.eval(w) * self.q(w) + self.e * self.a.eval(w) * dq
        }
    }

    /// Total mass `int V`.
    pub fn mass(&self, rules: &mut RuleCache) -> Result<f64> {
        let (lo, hi, e) = (self.lo, self.hi, self.e);
        rules.integrate(lo, hi, e, e, |w| self.a.eval(w))
    }

    /// `E(mu) = int V(w) |w - mu|^p dw` for `mu` in the support.
    pub fn energy(&self, mu: f64, p: f64, rules: &mut RuleCache) -> Result<f64> {
        let (lo, hi, e) = (self.lo, self.hi, self.e);
        let below = rules.integrate(lo, mu, e, p, |w| self.a.eval(w) * (hi - w).powf(e))?;
        let above = rules.integrate(mu, hi, p, e, |w| self.a.eval(w) * (w - lo).powf(e))?;
        Ok(below + above)
    }

    /// `dE/dmu`, from integrating by parts: the boundary values of `V` plus
    /// `int V'(w) |w - mu|^p dw`.
    pub fn energy_slope(&self, mu: f64, p: f64, rules: &mut RuleCache) -> Result<f64> {
        let (lo, hi) = (self.lo, self.hi);
        let (e1, rest) = if self.e == 0.0 {
            (0.0, 0.0)
        } else {
            (self.e - 1.0, self.e - 1.0)
        };
        let below = rules.integrate(lo, mu, e1, p, |w| self.slope_factor(w) * (hi - w).powf(rest))?;
        let above = rules.integrate(mu, hi, p, e1, |w| self.slope_factor(w) * (w - lo).powf(rest))?;
        let mut slope = below + above;
        if self.e == 0.0 {
            slope += self.a.eval(lo) * (mu - lo).powf(p) - self.a.eval(hi) * (hi - mu).powf(p);
        }
        Ok(slope)
    }

    /// Minimiser of `sgn(p) E(mu)`: a scan over the support followed by a
    /// root search on the slope, falling back to golden section where the
    /// slope shows no sign change.
    pub fn pmean(&self, p: f64, rules: &mut RuleCache) -> Result<f64> {
        if !(p > -1.0 && p != 0.0 && p.is_finite()) {
            return Err(Error::param(format!("order p must satisfy p > -1, p != 0, got {p}")));
        }
        let sign = p.signum();
        let (lo, hi) = (self.lo, self.hi);
        let grid: Vec<f64> = (0..SCAN).map(|k| lo + (hi - lo) * k as f64 / (SCAN - 1) as f64).collect();
        let vals = grid
            .iter()
            .map(|&m| Ok(sign * self.energy(m, p, rules)?))
            .collect::<Result<Vec<f64>>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Accuracy("non-finite energy".into()));
        }
        let best = (0..SCAN).fold(0, |b, k| if vals[k] < vals[b] { k } else { b });
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(SCAN - 1)];
        let ga = sign * self.energy_slope(a, p, rules)?;
        let gb = sign * self.energy_slope(b, p, rules)?;
        if ga < 0.0 && gb > 0.0 {
            return self.slope_root(a, b, p, sign, rules);
        }
        let cache = RefCell::new(RuleCache::new(rules.size()));
        let objective = |mu: f64| sign * self.energy(mu, p, &mut cache.borrow_mut()).unwrap_or(f64::INFINITY);
        Ok(golden_min(&objective, a, b, 1e-13 * (hi - lo)).0)
    }

    fn slope_root(&self, mut a: f64, mut b: f64, p: f64, sign: f64, c: &mut RuleCache) -> Result<f64> {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if sign * self.energy_slope(m, p, c)? < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Maximiser of `V`. With `e = 0` an endpoint can win, in which case it
    /// is returned exactly.
    pub fn mode(&self) -> f64 {
        let (lo, hi) = (self.lo, self.hi);
        let neg = |w: f64| -self.density(w);
        let (k, grid, vals) = scan_min(&neg, lo, hi, SCAN);
        if self.e == 0.0 && (k == 0 || k == SCAN - 1) {
            let end = grid[k];
            // an interior bump next to the end may still beat it
            let inner = if k == 0 { grid[1] } else { grid[SCAN - 2] };
            let s = self.slope_factor(end);
            let uphill_into_end = if k == 0 { s <= 0.0 } else { s >= 0.0 };
            if uphill_into_end {
                return end;
            }
            let (x, v) = golden_max(&|w| self.density(w), end.min(inner), end.max(inner), 1e-13 * (hi - lo));
            return if v > -vals[k] { x } else { end };
        }
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(SCAN - 1)];
        let (sa, sb) = (self.slope_factor(a), self.slope_factor(b));
        if sa > 0.0 && sb < 0.0 {
            return bisect(&|w| -self.slope_factor(w), a, b);
        }
        scan_golden_min(&neg, a, b, 65, 1e-13 * (hi - lo)).0
    }
}
