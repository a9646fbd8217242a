//! Order-p means of a curved step on the unit disc.
//!
//! The test function is `u = alpha (x + delta y^2) + h [x + delta y^2 + theta > 0]`.
//! Its level lines are the parabolas `x + delta y^2 = c`, so the value
//! density in the level parameter `c` is the length `2 y*(c)` of the level
//! line inside the disc. For `p < 0` the mean picks one side of the jump;
//! the side switches at a threshold `theta*` whose small-jump limit is
//! `-delta / (p + 2)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::quad::{golden_min, RuleCache};
use crate::error::{Error, Result};

const RHO: f64 = 1.0;
const NODES: usize = 64;
const MU_SCAN: usize = 129;
const THETA_SCAN: usize = 73;
const THETA_MAX: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepExperimentRecord {
    pub p: f64,
    pub alpha: f64,
    pub delta: f64,
    pub h: f64,
    pub theta_over_delta: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Copy)]
struct Step {
    p: f64,
    alpha: f64,
    delta: f64,
    h: f64,
}

impl Step {
    /// `y*(c)^2 / (rho^2 - c^2)`, from `(c - delta Y)^2 + Y = rho^2`.
    fn shape(&self, c: f64) -> f64 {
        let d = self.delta;
        let s = (1.0 - 4.0 * d * c + 4.0 * d * d * RHO * RHO).sqrt();
        let y2 = (2.0 * RHO * RHO - 4.0 * c * (c - d * RHO * RHO) / (s + 1.0)) / (s + 1.0);
        1.0 / (1.0 - 2.0 * d * c + d * d * y2)
    }

    /// `int_a^b y*(c) |c - x|^p dc` over a piece of `[-rho, rho]`.
    fn piece(&self, a: f64, b: f64, x: f64, rules: &mut RuleCache) -> Result<f64> {
        let p = self.p;
        // y* = (c + rho)^(1/2) (rho - c)^(1/2) sqrt(shape); the square roots
        // at the disc edge go into the quadrature weight.
        let ea = if a <= -RHO { 0.5 } else { 0.0 };
        let eb = if b >= RHO { 0.5 } else { 0.0 };
        let g = |c: f64| {
            let mut v = self.shape(c).sqrt();
            if ea == 0.0 {
                v *= (c + RHO).sqrt();
            }
            if eb == 0.0 {
                v *= (RHO - c).sqrt();
            }
            v
        };
        if x > a && x < b {
            let left = rules.integrate(a, x, ea, p, |c| g(c) * (b - c).powf(eb))?;
            let right = rules.integrate(x, b, p, eb, |c| g(c) * (c - a).powf(ea))?;
            return Ok(left + right);
        }
        let near = |gap: f64| gap < b - a;
        if x >= b && eb == 0.0 && x <= RHO && near(x - b) {
            // extend to the (virtual) crossing and subtract the overhang
            let whole = rules.integrate(a, x, ea, p, |c| {
                let v = self.shape(c).sqrt() * (RHO - c).sqrt();
                if ea == 0.0 {
                    v * (c + RHO).sqrt()
                } else {
                    v
                }
            })?;
            let over = rules.integrate(b, x, 0.0, p, |c| {
                self.shape(c).sqrt() * ((RHO - c) * (c + RHO)).sqrt()
            })?;
            return Ok(whole - over);
        }
        if x <= a && ea == 0.0 && x >= -RHO && near(a - x) {
            let whole = rules.integrate(x, b, p, eb, |c| {
                let v = self.shape(c).sqrt() * (c + RHO).sqrt();
                if eb == 0.0 {
                    v * (RHO - c).sqrt()
                } else {
                    v
                }
            })?;
            let over = rules.integrate(x, a, p, 0.0, |c| {
                self.shape(c).sqrt() * ((RHO - c) * (c + RHO)).sqrt()
            })?;
            return Ok(whole - over);
        }
        rules.integrate(a, b, ea, eb, |c| g(c) * (c - x).abs().powf(p))
    }

    /// `sgn(p) / alpha^p` times the order-p energy at `mu`.
    fn energy(&self, theta: f64, mu: f64, rules: &mut RuleCache) -> Result<f64> {
        let lower = self.piece(-RHO, -theta, mu / self.alpha, rules)?;
        let upper = self.piece(-theta, RHO, (mu - self.h) / self.alpha, rules)?;
        Ok(self.p.signum() * (lower + upper))
    }

    /// Best energy and its location for `mu` in `[lo, hi]`.
    fn branch_min(&self, theta: f64, lo: f64, hi: f64, n: usize) -> Result<(f64, f64)> {
        let mut rules = RuleCache::new(n);
        let grid: Vec<f64> = (0..MU_SCAN)
            .map(|k| lo + (hi - lo) * k as f64 / (MU_SCAN - 1) as f64)
            .collect();
        let vals = grid
            .iter()
            .map(|&m| self.energy(theta, m, &mut rules))
            .collect::<Result<Vec<f64>>>()?;
        let k = (0..MU_SCAN).fold(0, |b, k| if vals[k] < vals[b] { k } else { b });
        let (a, b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(MU_SCAN - 1)]);
        let cell = std::cell::RefCell::new(rules);
        let f = |m: f64| {
            self.energy(theta, m, &mut cell.borrow_mut())
                .unwrap_or(f64::INFINITY)
        };
        let (x, v) = golden_min(&f, a, b, 1e-12 * (hi - lo));
        Ok(if v <= vals[k] { (x, v) } else { (grid[k], vals[k]) })
    }

    /// Energy gap between the lower-branch and upper-branch minima. The
    /// global mean lies on the upper branch where this is positive.
    fn gap(&self, theta: f64, n: usize) -> Result<f64> {
        let split = -self.alpha * theta;
        let low = self.branch_min(theta, -self.alpha * RHO, split, n)?;
        let up = self.branch_min(theta, split + self.h, self.alpha * RHO + self.h, n)?;
        Ok(low.1 - up.1)
    }

    fn mean(&self, theta: f64) -> Result<f64> {
        let split = -self.alpha * theta;
        let low = self.branch_min(theta, -self.alpha * RHO, split, NODES)?;
        let up = self.branch_min(theta, split + self.h, self.alpha * RHO + self.h, NODES)?;
        Ok(if low.1 <= up.1 { low.0 } else { up.0 })
    }
}

fn validate(p: f64, alpha: f64, delta: f64, h: f64) -> Result<Step> {
    if !(p > -1.0 && p < 0.0) {
        return Err(Error::param(format!("step experiment needs -1 < p < 0, got {p}")));
    }
    if !(alpha > 0.0 && alpha.is_finite() && h > 0.0 && h.is_finite()) {
        return Err(Error::param("step experiment needs alpha > 0 and h > 0"));
    }
    if !(delta.abs() <= 0.25) {
        return Err(Error::param(format!("|delta| must be at most 0.25, got {delta}")));
    }
    Ok(Step { p, alpha, delta, h })
}

/// Order-p mean of the step function on the unit disc.
pub fn step_pmean(p: f64, alpha: f64, delta: f64, h: f64, theta: f64) -> Result<f64> {
    let s = validate(p, alpha, delta, h)?;
    if !(theta.abs() < RHO) {
        return Err(Error::param(format!("theta must lie in (-1, 1), got {theta}")));
    }
    s.mean(theta)
}

/// Locates the threshold `theta*` where the mean jumps between the two
/// sides of the step and reports `theta* / delta`.
pub fn step_experiment(p: f64, alpha: f64, delta: f64, h: f64) -> Result<StepExperimentRecord> {
    let s = validate(p, alpha, delta, h)?;
    if delta.abs() < 1e-6 {
        return Err(Error::Experiment(
            "flat interface: theta/delta is undefined for delta = 0".into(),
        ));
    }
    let thetas: Vec<f64> = (0..THETA_SCAN)
        .map(|k| -THETA_MAX + 2.0 * THETA_MAX * k as f64 / (THETA_SCAN - 1) as f64)
        .collect();
    let gaps = thetas
        .iter()
        .map(|&t| s.gap(t, NODES))
        .collect::<Result<Vec<f64>>>()?;
    let k = (0..THETA_SCAN - 1)
        .find(|&k| gaps[k] < 0.0 && gaps[k + 1] >= 0.0)
        .ok_or_else(|| Error::Experiment(format!("no jump of the mean for theta in [-{THETA_MAX}, {THETA_MAX}]")))?;
    let (mut a, mut b) = (thetas[k], thetas[k + 1]);
    while b - a > 1e-11 {
        let m = 0.5 * (a + b);
        if s.gap(m, NODES)? < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let theta = 0.5 * (a + b);
    let coarse = s.gap(theta, NODES)?;
    let fine = s.gap(theta, 2 * NODES)?;
    let scale = s.branch_min(theta, -alpha * RHO, -alpha * theta, NODES)?.1.abs();
    if (coarse - fine).abs() > super::REFINE_TOL * scale {
        return Err(Error::Accuracy(format!(
            "step energies disagree between node counts ({coarse} vs {fine})"
        )));
    }
    Ok(StepExperimentRecord {
        p,
        alpha,
        delta,
        h,
        theta_over_delta: theta / delta,
        predicted: -1.0 / (p + 2.0),
    })
}

/// Random `(p, alpha, delta)` with `p` in `[-0.99, -0.1]`, `alpha` in
/// `[0.03, 0.15]` and `delta` in `[-0.2, 0.2]`, skipping `|delta| < 0.02`
/// where `theta* / delta` is ill-conditioned.
pub fn sample_step_tuples(seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = rng.gen_range(-0.99..=-0.1);
            let alpha = rng.gen_range(0.03..=0.15);
            let delta = loop {
                let d: f64 = rng.gen_range(-0.2..=0.2);
                if d.abs() >= 0.02 {
                    break d;
                }
            };
            (p, alpha, delta)
        })
        .collect()
}

/// Runs [`step_experiment`] for every tuple with jump height `h`, in parallel.
pub fn step_sweep(tuples: &[(f64, f64, f64)], h: f64) -> Result<Vec<StepExperimentRecord>> {
    tuples
        .par_iter()
        .map(|&(p, a, d)| step_experiment(p, a, d, h))
        .collect()
}

pub fn write_step_csv(rows: &[StepExperimentRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "p,alpha,delta,h,theta_over_delta,predicted")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.p, r.alpha, r.delta, r.h, r.theta_over_delta, r.predicted
        )?;
    }
    Ok(())
}
