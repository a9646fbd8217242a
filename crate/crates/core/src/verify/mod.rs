//! Quadrature oracles for the small-window behaviour of order-p means and
//! modes.
//!
//! Everything here works on analytic test functions (Taylor jets, a toy
//! density, a curved step) with Gauss-Jacobi quadrature and scalar searches
//! only. Nothing calls the PDE solvers or the histogram-based M-smoother,
//! so agreement between the two sides is evidence rather than tautology.
//!
//! Each filter result is reported as the rescaled increment
//! `kappa = mu / (alpha rho^2)` and compared with the closed-form limit.

mod density;
mod jet;
pub mod quad;
mod step;

use std::io::Write;

use rayon::prelude::*;

pub use density::ValueDensity;
pub use jet::{QuadraticJet, CUBIC_TERMS};
pub use step::{
    sample_step_tuples, step_experiment, step_pmean, step_sweep, write_step_csv, StepExperimentRecord,
};

use crate::error::{Error, Result};
use jet::{jet_density, Resolution};
use quad::RuleCache;

/// Radii of the default consistency sweep.
pub const DEFAULT_RADII: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// Agreement required between two successive refinement levels.
pub const REFINE_TOL: f64 = 1e-8;

const MAX_LEVEL: u32 = 4;

/// Statistic whose small-window limit is checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    PMean(f64),
    Mode,
}

impl Target {
    /// Label used in reports: the value of `p`, or `mode`.
    pub fn label(&self) -> String {
        match self {
            Target::PMean(p) => format!("{p}"),
            Target::Mode => "mode".to_string(),
        }
    }
}

/// Closed-form limit of `mu / (alpha rho^2)`. The 1D mode has none (its
/// limit is the shock filter, which moves by `rho` rather than `rho^2`).
pub fn predicted_kappa(jet: &QuadraticJet, dim: usize, target: Target) -> Option<f64> {
    let b = jet.beta;
    let [d0, _, d2] = jet.delta;
    match (dim, target) {
        (1, Target::PMean(p)) => Some((p - 1.0) * b / (p + 1.0)),
        (1, Target::Mode) => None,
        (2, Target::PMean(p)) => Some(((p - 1.0) * b + d0) / (p + 2.0)),
        (2, Target::Mode) => Some(d0 - 2.0 * b),
        (3, Target::PMean(p)) => Some(((p - 1.0) * b + d0 + d2) / (p + 3.0)),
        (3, Target::Mode) => Some(0.5 * (d0 + d2 - 2.0 * b)),
        _ => None,
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > -1.0 && p != 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("order p must satisfy p > -1, p != 0, got {p}")))
    }
}

/// Refines the density until two successive levels agree; `stat` returns
/// the location and a scale-free companion value for the comparison.
fn refine(
    jet: &QuadraticJet,
    dim: usize,
    rho: f64,
    stat: impl Fn(&ValueDensity, &mut RuleCache) -> Result<(f64, f64)>,
) -> Result<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for level in 0..=MAX_LEVEL {
        let res = Resolution::level(level);
        let dens = jet_density(jet, dim, rho, res)?;
        let mut rules = RuleCache::new(res.cheb + 16);
        let (loc, aux) = stat(&dens, &mut rules)?;
        let (lo, hi) = dens.support();
        if let Some((pl, pa)) = prev {
            let loc_ok = (loc - pl).abs() <= REFINE_TOL * (hi - lo);
            let aux_ok = (aux - pa).abs() <= REFINE_TOL * aux.abs().max(pa.abs());
            if loc_ok && aux_ok {
                return Ok(loc);
            }
        }
        prev = Some((loc, aux));
    }
    Err(Error::Accuracy(format!(
        "window statistic did not settle to {REFINE_TOL} (dim {dim}, radius {rho})"
    )))
}

/// Order-p mean of `jet` over the ball of radius `rho`.
pub fn window_pmean_quadrature(jet: &QuadraticJet, dim: usize, rho: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    refine(jet, dim, rho, |d, rules| {
        let mu = d.pmean(p, rules)?;
        Ok((mu, d.energy(mu, p, rules)?))
    })
}

/// Mode (maximiser of the value density) of `jet` over the ball.
pub fn window_mode_quadrature(jet: &QuadraticJet, dim: usize, rho: f64) -> Result<f64> {
    refine(jet, dim, rho, |d, _| {
        let m = d.mode();
        Ok((m, d.density(m)))
    })
}

/// `mu / (alpha rho^2)` for the given statistic.
pub fn observed_kappa(jet: &QuadraticJet, dim: usize, rho: f64, target: Target) -> Result<f64> {
    let mu = match target {
        Target::PMean(p) => window_pmean_quadrature(jet, dim, rho, p)?,
        Target::Mode => window_mode_quadrature(jet, dim, rho)?,
    };
    Ok(mu / (jet.alpha * rho * rho))
}

/// Whether the 1D window mode of a strictly convex or concave increasing
/// jet sits at the window end with the smaller slope, exactly.
pub fn endpoint_rule_holds(jet: &QuadraticJet, rho: f64) -> Result<bool> {
    let mode = window_mode_quadrature(jet, 1, rho)?;
    let (left, right) = (jet.value(-rho, 0.0, 0.0), jet.value(rho, 0.0, 0.0));
    let flatter_left = jet.dx(-rho, 0.0, 0.0) < jet.dx(rho, 0.0, 0.0);
    Ok(mode == if flatter_left { left } else { right })
}

/// One row of a consistency sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRecord {
    pub dim: usize,
    pub target: Target,
    /// Index of the jet in the input list.
    pub jet: usize,
    pub rho: f64,
    pub kappa_obs: f64,
    /// `NaN` where no closed form exists.
    pub kappa_pred: f64,
    pub rel_err: f64,
    /// Least-squares slope of `log |kappa_obs - kappa_pred|` against
    /// `log rho` over the radii of this jet and target.
    pub fitted_order: Option<f64>,
}

/// Least-squares slope of `log err` against `log rho`; needs three points
/// with nonzero error.
pub fn fitted_order(rhos: &[f64], errs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rhos
        .iter()
        .zip(errs)
        .filter(|(r, e)| **r > 0.0 && e.abs() > 0.0 && e.is_finite())
        .map(|(r, e)| (r.ln(), e.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Observed against predicted `kappa` for every jet, target and radius.
/// Rows come out in input order: jets, then targets, then radii.
pub fn consistency_report(
    targets: &[Target],
    radii: &[f64],
    jets: &[QuadraticJet],
    dim: usize,
) -> Result<Vec<ConsistencyRecord>> {
    for t in targets {
        if let Target::PMean(p) = t {
            check_p(*p)?;
        }
    }
    let tasks: Vec<(usize, Target, f64)> = (0..jets.len())
        .flat_map(|j| targets.iter().flat_map(move |&t| radii.iter().map(move |&r| (j, t, r))))
        .collect();
    let mut rows = tasks
        .par_iter()
        .map(|&(j, target, rho)| {
            let jet = &jets[j];
            let kappa_obs = observed_kappa(jet, dim, rho, target)?;
            let kappa_pred = predicted_kappa(jet, dim, target).unwrap_or(f64::NAN);
            Ok(ConsistencyRecord {
                dim,
                target,
                jet: j,
                rho,
                kappa_obs,
                kappa_pred,
                rel_err: (kappa_obs - kappa_pred).abs() / kappa_pred.abs(),
                fitted_order: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for group in rows.chunks_mut(radii.len().max(1)) {
        let rhos: Vec<f64> = group.iter().map(|r| r.rho).collect();
        let errs: Vec<f64> = group.iter().map(|r| r.kappa_obs - r.kappa_pred).collect();
        let order = fitted_order(&rhos, &errs);
        for r in group.iter_mut() {
            r.fitted_order = order;
        }
    }
    Ok(rows)
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes consistency rows as CSV.
pub fn write_consistency_csv(rows: &[ConsistencyRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "dim,p,rho,kappa_obs,kappa_pred,rel_err,fitted_order")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.dim,
            r.target.label(),
            r.rho,
            num(r.kappa_obs),
            num(r.kappa_pred),
            num(r.rel_err),
            r.fitted_order.map_or("nan".to_string(), num)
        )?;
    }
    Ok(())
}

/// One row of the toy-density comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyRow {
    pub p: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub abs_err: f64,
}

/// Small-`m` approximation of the order-p mean of the density
/// `1 - lambda (z - m)^2` on `[-1, 1]`.
pub fn toy_closed_form(lambda: f64, m: f64, p: f64) -> f64 {
    2.0 * lambda * m / ((p + 1.0) - (p - 1.0) * lambda)
}

/// Limit of [`toy_closed_form`] as `p -> 0`.
pub fn toy_limit_p0(lambda: f64, m: f64) -> f64 {
    2.0 * lambda * m / (1.0 + lambda)
}

fn toy_density(lambda: f64, m: f64) -> Result<ValueDensity> {
    if !(lambda > 0.0 && lambda <= (1.0 + m.abs()).powi(-2) && m.is_finite()) {
        return Err(Error::param(format!(
            "toy density needs 0 < lambda <= (1 + |m|)^-2, got lambda={lambda}, m={m}"
        )));
    }
    ValueDensity::from_density(-1.0, 1.0, 0.0, 8, |z| Ok(1.0 - lambda * (z - m).powi(2)))
}

/// Order-p mean of the toy density by quadrature.
pub fn toy_pmean(lambda: f64, m: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    toy_density(lambda, m)?.pmean(p, &mut RuleCache::new(64))
}

/// Energy `int (1 - lambda (z - m)^2) |z - mu|^p dz` of the toy density by
/// quadrature.
pub fn toy_energy(lambda: f64, m: f64, p: f64, mu: f64) -> Result<f64> {
    toy_density(lambda, m)?.energy(mu, p, &mut RuleCache::new(64))
}

/// Numeric against closed-form toy means for each `p`.
pub fn toy_pmean_check(lambda: f64, m: f64, ps: &[f64]) -> Result<Vec<ToyRow>> {
    ps.iter()
        .map(|&p| {
            let numeric = toy_pmean(lambda, m, p)?;
            let closed_form = toy_closed_form(lambda, m, p);
            Ok(ToyRow {
                p,
                numeric,
                closed_form,
                abs_err: (numeric - closed_form).abs(),
            })
        })
        .collect()
}
