//! Explicit splitting scheme for the 2D M-smoother PDEs
//!
//! ```text
//! u_t = (2 - p) curv(u) |grad u| + (p - 1) Laplacian(u)
//! ```
//!
//! (more generally `u_t = a u_xixi + b u_etaeta`). One time step runs four
//! fractional steps in a fixed order: axial diffusion, diagonal diffusion,
//! axial curvature motion, diagonal curvature motion. Diffusion uses the
//! nine-point stencil for forward diffusion and the Osher-Rudin minmod
//! construction for backward diffusion; curvature motion uses a limited
//! curvature times a Rouy-Tourin upwind gradient. Under the step bound of
//! [`stability_limit`] every fractional step is a local convex combination,
//! so the evolution obeys a discrete maximum-minimum principle.

mod stencil;

pub use stencil::{
    backward_laplacian_minmod, curvature, laplacian_blend, minmod3, upwind_gradmag, Part, Sense,
};

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::grid::Field;
use stencil::{curvature_at, laplacian_part_at, minmod_part_at, upwind_part_at};

/// Diagonal weight that balances the axial and diagonal stencil sizes.
pub const DEFAULT_NU: f64 = SQRT_2 - 1.0;

/// Curvature regulariser added to `|grad u|^2`.
pub const DEFAULT_EPS: f64 = 1e-10;

/// Fraction of the stability limit used when no time step is given.
pub const AUTO_STEP_FACTOR: f64 = 0.9;

/// Relative slack when comparing a step size against its limit.
const LIMIT_SLACK: f64 = 1e-12;

/// The evolution `u_t = xi * u_xixi + eta * u_etaeta`, written for the
/// scheme as `eta * Laplacian + (xi - eta) * curv |grad u|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flow {
    /// Limit of the order-p mean filter: `xi = 1`, `eta = p - 1`.
    OrderP(f64),
    /// Arbitrary gauge-coordinate coefficients.
    Gauge { xi: f64, eta: f64 },
}

impl Flow {
    /// Temporally rescaled midrange limit (`p -> infinity`): `u_t = u_etaeta`.
    pub fn midrange() -> Self {
        Flow::Gauge { xi: 0.0, eta: 1.0 }
    }

    /// Coefficient of the Laplacian, `p - 1`.
    pub fn diffusion(&self) -> f64 {
        match *self {
            Flow::OrderP(p) => p - 1.0,
            Flow::Gauge { eta, .. } => eta,
        }
    }

    /// Coefficient of `curv(u) |grad u|`, `2 - p`.
    pub fn curvature(&self) -> f64 {
        match *self {
            Flow::OrderP(p) => 2.0 - p,
            Flow::Gauge { xi, eta } => xi - eta,
        }
    }
}

/// Parameters of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub flow: Flow,
    /// Diagonal weight in `[0, 1]`.
    pub nu: f64,
    /// Time step; `None` selects `AUTO_STEP_FACTOR` times the limit.
    pub tau: Option<f64>,
    /// Stop time.
    pub t_stop: f64,
    pub eps: f64,
    /// Curvature limit; `None` means `2 / h`.
    pub curvature_cap: Option<f64>,
    /// Run even if `tau` exceeds the stability limit.
    pub allow_unstable: bool,
}

impl EvolutionParams {
    pub fn new(flow: Flow, t_stop: f64) -> Self {
        EvolutionParams {
            flow,
            nu: DEFAULT_NU,
            tau: None,
            t_stop,
            eps: DEFAULT_EPS,
            curvature_cap: None,
            allow_unstable: false,
        }
    }

    pub fn order_p(p: f64, t_stop: f64) -> Self {
        EvolutionParams::new(Flow::OrderP(p), t_stop)
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(Error::param(format!("nu must lie in [0, 1], got {}", self.nu)));
        }
        if !(self.eps > 0.0 && finite(self.eps)) {
            return Err(Error::param(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.t_stop >= 0.0 && finite(self.t_stop)) {
            return Err(Error::param(format!(
                "stop time must be nonnegative, got {}",
                self.t_stop
            )));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && finite(tau)) {
                return Err(Error::param(format!("tau must be positive, got {tau}")));
            }
        }
        if let Some(cap) = self.curvature_cap {
            if !(cap > 0.0) {
                return Err(Error::param(format!("curvature cap must be positive, got {cap}")));
            }
        }
        if !finite(self.flow.diffusion()) || !finite(self.flow.curvature()) {
            return Err(Error::param("flow coefficients must be finite"));
        }
        Ok(())
    }

    fn cap(&self, h: f64) -> f64 {
        self.curvature_cap.unwrap_or(2.0 / h)
    }
}

/// Step-size limits of the four fractional steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBudget {
    /// Axial diffusion.
    pub tau1: f64,
    /// Diagonal diffusion.
    pub tau2: f64,
    /// Axial curvature motion.
    pub tau3: f64,
    /// Diagonal curvature motion.
    pub tau4: f64,
}

impl StepBudget {
    /// Limits for an arbitrary flow. A fractional step whose operator
    /// vanishes has limit infinity.
    pub fn for_flow(flow: &Flow, nu: f64, h: f64) -> Self {
        let h2 = h * h;
        let limit = |den: f64| if den == 0.0 { f64::INFINITY } else { h2 / den };
        let (d, c) = (flow.diffusion().abs(), flow.curvature().abs());
        StepBudget {
            tau1: limit(4.0 * (1.0 - nu) * d),
            tau2: limit(2.0 * nu * d),
            tau3: limit(2.0 * SQRT_2 * (1.0 - nu) * c),
            tau4: limit(2.0 * nu * c),
        }
    }

    pub fn effective(&self) -> f64 {
        self.tau1.min(self.tau2).min(self.tau3).min(self.tau4)
    }

    fn diffusion(&self, part: Part) -> f64 {
        match part {
            Part::Axial => self.tau1,
            Part::Diagonal => self.tau2,
        }
    }

    fn curvature(&self, part: Part) -> f64 {
        match part {
            Part::Axial => self.tau3,
            Part::Diagonal => self.tau4,
        }
    }
}

/// Fractional step limits for the order-p flow.
pub fn stability_limit(p: f64, nu: f64, h: f64) -> StepBudget {
    StepBudget::for_flow(&Flow::OrderP(p), nu, h)
}

fn check_tau(tau: f64, limit: f64, allow_unstable: bool) -> Result<()> {
    if !allow_unstable && tau > limit * (1.0 + LIMIT_SLACK) {
        return Err(Error::Unstable { tau, limit });
    }
    Ok(())
}

/// Diffusion fractional step: `u + tau * w * (p - 1) * D(u)` with `D` the
/// axial or diagonal Laplacian for forward diffusion and the corresponding
/// minmod operator for backward diffusion.
pub fn diffusion_half_step(u: &Field, params: &EvolutionParams, tau: f64, part: Part) -> Result<Field> {
    u.require_2d("diffusion_half_step")?;
    params.validate()?;
    let coeff = params.flow.diffusion();
    let w = part.weight(params.nu);
    if coeff == 0.0 || w == 0.0 {
        return Ok(u.clone());
    }
    let budget = StepBudget::for_flow(&params.flow, params.nu, u.h());
    check_tau(tau, budget.diffusion(part), params.allow_unstable)?;
    let scale = tau * w * coeff;
    let out = if coeff > 0.0 {
        u.par_map2(|i, j| u.at2(i, j) + scale * laplacian_part_at(u, part, i, j))
    } else {
        u.par_map2(|i, j| u.at2(i, j) + scale * minmod_part_at(u, part, i, j))
    };
    u.with_values(out)
}

/// Curvature-motion fractional step: `u + tau * w * (2 - p) * curv * |grad u|`
/// with the upwind sense chosen per pixel by the sign of the speed.
pub fn mcm_half_step(u: &Field, params: &EvolutionParams, tau: f64, part: Part) -> Result<Field> {
    u.require_2d("mcm_half_step")?;
    params.validate()?;
    let coeff = params.flow.curvature();
    let w = part.weight(params.nu);
    if coeff == 0.0 || w == 0.0 {
        return Ok(u.clone());
    }
    let budget = StepBudget::for_flow(&params.flow, params.nu, u.h());
    check_tau(tau, budget.curvature(part), params.allow_unstable)?;
    let (eps, cap) = (params.eps, params.cap(u.h()));
    let scale = tau * w;
    let out = u.par_map2(|i, j| {
        let speed = coeff * curvature_at(u, eps, cap, i, j);
        let sense = if speed >= 0.0 {
            Sense::Dilation
        } else {
            Sense::Erosion
        };
        u.at2(i, j) + scale * speed * upwind_part_at(u, part, sense, i, j)
    });
    u.with_values(out)
}

/// Identifies the fractional step reported to an observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    AxialDiffusion,
    DiagonalDiffusion,
    AxialCurvature,
    DiagonalCurvature,
}

/// The time step that [`evolve`] will use.
pub fn resolve_tau(params: &EvolutionParams, h: f64) -> Result<f64> {
    params.validate()?;
    let limit = StepBudget::for_flow(&params.flow, params.nu, h).effective();
    match params.tau {
        Some(tau) => {
            check_tau(tau, limit, params.allow_unstable)?;
            Ok(tau)
        }
        None if limit.is_finite() => Ok(AUTO_STEP_FACTOR * limit),
        // Nothing evolves; any step works.
        None => Ok(params.t_stop.max(1.0)),
    }
}

/// One full splitting cycle of size `tau`.
fn cycle(
    u: Field,
    params: &EvolutionParams,
    tau: f64,
    observer: &mut dyn FnMut(Stage, &Field),
) -> Result<Field> {
    let u = diffusion_half_step(&u, params, tau, Part::Axial)?;
    observer(Stage::AxialDiffusion, &u);
    let u = diffusion_half_step(&u, params, tau, Part::Diagonal)?;
    observer(Stage::DiagonalDiffusion, &u);
    let u = mcm_half_step(&u, params, tau, Part::Axial)?;
    observer(Stage::AxialCurvature, &u);
    let u = mcm_half_step(&u, params, tau, Part::Diagonal)?;
    observer(Stage::DiagonalCurvature, &u);
    Ok(u)
}

/// Runs the scheme from time `t0` to `t1`: `ceil((t1 - t0) / tau)` cycles,
/// the last one shortened to end exactly at `t1`.
fn advance(
    mut u: Field,
    params: &EvolutionParams,
    tau: f64,
    span: f64,
    observer: &mut dyn FnMut(Stage, &Field),
) -> Result<Field> {
    if span <= 0.0 {
        return Ok(u);
    }
    let n = ((span / tau) - 1e-9).ceil().max(1.0) as usize;
    for k in 0..n {
        let step = if k + 1 == n {
            (span - (n - 1) as f64 * tau).min(tau)
        } else {
            tau
        };
        u = cycle(u, params, step, observer)?;
    }
    Ok(u)
}

/// Evolves `u0` to time `params.t_stop`.
pub fn evolve(u0: &Field, params: &EvolutionParams) -> Result<Field> {
    evolve_observed(u0, params, |_, _| {})
}

/// [`evolve`] with a callback after every fractional step.
pub fn evolve_observed(
    u0: &Field,
    params: &EvolutionParams,
    mut observer: impl FnMut(Stage, &Field),
) -> Result<Field> {
    u0.require_2d("evolve")?;
    let tau = resolve_tau(params, u0.h())?;
    advance(u0.clone(), params, tau, params.t_stop, &mut observer)
}

/// Evolves `u0` and returns the state at each requested time (sorted
/// ascending, each at most `t_stop`), followed by the state at `t_stop`.
pub fn evolve_snapshots(
    u0: &Field,
    params: &EvolutionParams,
    times: &[f64],
) -> Result<Vec<(f64, Field)>> {
    u0.require_2d("evolve")?;
    let tau = resolve_tau(params, u0.h())?;
    let mut targets: Vec<f64> = times.to_vec();
    if targets.iter().any(|t| !(t.is_finite() && *t >= 0.0 && *t <= params.t_stop)) {
        return Err(Error::param(format!(
            "snapshot times must lie in [0, {}]",
            params.t_stop
        )));
    }
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    if targets.last() != Some(&params.t_stop) {
        targets.push(params.t_stop);
    }
    let mut out = Vec::with_capacity(targets.len());
    let (mut u, mut t) = (u0.clone(), 0.0);
    for target in targets {
        u = advance(u, params, tau, target - t, &mut |_, _| {})?;
        t = target;
        out.push((t, u.clone()));
    }
    Ok(out)
}
