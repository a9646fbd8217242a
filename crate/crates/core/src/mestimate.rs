//! Order-p means and modes of sampled value distributions, and the windowed
//! M-smoothers built from them.
//!
//! Window values are turned into a piecewise-constant density (a histogram
//! whose bins are read as uniform mass over their width). Order-p means are
//! minimisers of `sgn(p) * integral density(z) |mu - z|^p dz`, evaluated bin
//! by bin in closed form so that negative `p > -1` stays finite even when
//! `mu` lies inside a bin.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Candidates of the coarse scan that precedes golden-section refinement.
pub const SCAN_POINTS: usize = 257;

/// Refinement stops once the bracket is this fraction of the support width.
pub const SEARCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    /// Box window `[x - r, x + r]` on 1D signals.
    Interval,
    /// Disc on 2D images.
    Disc,
    /// Ball on 3D volumes.
    Ball,
}

impl WindowShape {
    pub fn dim(self) -> usize {
        match self {
            WindowShape::Interval => 1,
            WindowShape::Disc => 2,
            WindowShape::Ball => 3,
        }
    }

    pub fn for_dim(dim: usize) -> Option<Self> {
        match dim {
            1 => Some(WindowShape::Interval),
            2 => Some(WindowShape::Disc),
            3 => Some(WindowShape::Ball),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub shape: WindowShape,
    pub radius: f64,
}

impl WindowSpec {
    pub fn new(shape: WindowShape, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param(format!("window radius must be positive, got {radius}")));
        }
        Ok(WindowSpec { shape, radius })
    }

    /// Integer offsets of all grid points within distance `radius` of the
    /// centre, for grid spacing `h`. The centre comes first.
    pub fn offsets(&self, h: f64) -> Vec<[isize; 3]> {
        let r = self.radius / h;
        let r2 = r * r * (1.0 + 1e-9);
        let reach = r.floor() as isize;
        let dim = self.shape.dim();
        let span = |axis: usize| if axis < dim { -reach..=reach } else { 0..=0 };
        let mut out = vec![[0, 0, 0]];
        for k in span(2) {
            for j in span(1) {
                for i in span(0) {
                    let d2 = (i * i + j * j + k * k) as f64;
                    if d2 <= r2 && (i, j, k) != (0, 0, 0) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if self.shape.dim() != f.ndim() {
            return Err(Error::Usage(format!(
                "{:?} window does not fit a {}D field",
                self.shape,
                f.ndim()
            )));
        }
        Ok(())
    }
}

/// Samples of `f` inside the window centred at `center`, reflected at the
/// boundary.
pub fn collect_window(f: &Field, center: &[usize], w: &WindowSpec) -> Result<Vec<f64>> {
    w.check_field(f)?;
    if center.len() != f.ndim() || center.iter().zip(f.dims()).any(|(&c, &n)| c >= n) {
        return Err(Error::Usage(format!("centre {center:?} outside field {:?}", f.dims())));
    }
    if w.radius < f.h() {
        log::warn!(
            "window radius {} below grid spacing {}; window is the centre only",
            w.radius,
            f.h()
        );
    }
    let mut c = [0isize; 3];
    for (dst, &src) in c.iter_mut().zip(center) {
        *dst = src as isize;
    }
    Ok(w
        .offsets(f.h())
        .iter()
        .map(|o| f.at([c[0] + o[0], c[1] + o[1], c[2] + o[2]]))
        .collect())
}

/// Piecewise-constant value density: `masses[k]` spread uniformly over
/// `[edges[k], edges[k + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    edges: Vec<f64>,
    masses: Vec<f64>,
}

impl Density1D {
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || edges.len() != masses.len() + 1 {
            return Err(Error::param(format!(
                "need one more edge than bins, got {} edges for {} bins",
                edges.len(),
                masses.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("bin edges must be finite and strictly increasing"));
        }
        if masses.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(Error::param("bin masses must be finite and nonnegative"));
        }
        if masses.iter().sum::<f64>() <= 0.0 {
            return Err(Error::param("total mass must be positive"));
        }
        Ok(Density1D { edges, masses })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.edges[k] + self.edges[k + 1])
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mean of the density (bin centres weighted by mass).
    pub fn mean(&self) -> f64 {
        let weighted: f64 = (0..self.bins()).map(|k| self.masses[k] * self.center(k)).sum();
        weighted / self.total_mass()
    }

    /// The same density moved by `c` along the value axis.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Density1D::new(
            self.edges.iter().map(|e| e + c).collect(),
            self.masses.clone(),
        )
    }

    /// `integral density(z) |mu - z|^p dz`, exact per bin.
    pub fn power_moment(&self, mu: f64, p: f64) -> f64 {
        let q = p + 1.0;
        let mut total = 0.0;
        for (k, &m) in self.masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (a, b) = (self.edges[k], self.edges[k + 1]);
            let integral = if mu <= a {
                (b - mu).powf(q) - (a - mu).powf(q)
            } else if mu >= b {
                (mu - a).powf(q) - (mu - b).powf(q)
            } else {
                (mu - a).powf(q) + (b - mu).powf(q)
            };
            total += m / (b - a) * integral / q;
        }
        total
    }
}

/// Default histogram size for `n` window samples.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(16, 256)
}

/// Uniform-width histogram of `samples`. Bin centres sit at
/// `min + k * (max - min) / (bins - 1)`, so the support is `[min, max]`
/// widened by half a bin on each side and the extreme samples are bin
/// centres.
pub fn estimate_density(samples: &[f64], bins: usize) -> Result<Density1D> {
    if samples.is_empty() {
        return Err(Error::param("density estimation needs at least one sample"));
    }
    if bins == 0 {
        return Err(Error::param("bin count must be positive"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::param("samples must be finite"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = samples.len() as f64;
    if hi == lo {
        let half = 0.5e-9 * lo.abs().max(1.0);
        return Density1D::new(vec![lo - half, lo + half], vec![n]);
    }
    if bins == 1 {
        return Density1D::new(vec![lo, hi], vec![n]);
    }
    let width = (hi - lo) / (bins - 1) as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (k as f64 - 0.5) * width).collect();
    let mut masses = vec![0.0; bins];
    for &s in samples {
        let k = (((s - edges[0]) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        masses[k] += 1.0;
    }
    Density1D::new(edges, masses)
}

fn check_order(p: f64) -> Result<()> {
    if !(p > -1.0) || p == 0.0 || !p.is_finite() {
        return Err(Error::param(format!(
            "order-p mean requires p > -1 and p != 0, got {p}"
        )));
    }
    Ok(())
}

/// Minimises `objective` on `[lo, hi]`: a scan over `SCAN_POINTS`
/// candidates, then golden-section search inside the bracket around the
/// best candidate.
fn scan_golden(lo: f64, hi: f64, objective: impl Fn(f64) -> f64) -> f64 {
    let n = SCAN_POINTS - 1;
    let at = |k: usize| lo + (hi - lo) * k as f64 / n as f64;
    let (mut best_k, mut best_v) = (0, f64::INFINITY);
    for k in 0..=n {
        let v = objective(at(k));
        if v < best_v {
            best_k = k;
            best_v = v;
        }
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(n));
    let tol = SEARCH_TOL * (hi - lo);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let refined = 0.5 * (a + b);
    if objective(refined) <= best_v {
        refined
    } else {
        at(best_k)
    }
}

/// Order-p mean of a density, `p > -1`, `p != 0`.
pub fn pmean(d: &Density1D, p: f64) -> Result<f64> {
    check_order(p)?;
    let sign = p.signum();
    let (lo, hi) = d.support();
    Ok(scan_golden(lo, hi, |mu| sign * d.power_moment(mu, p)))
}

/// Centre of the heaviest bin. Ties go to the bin closest to the middle of
/// the support, then to the lower bin.
pub fn mode(d: &Density1D) -> f64 {
    let (lo, hi) = d.support();
    let mid = 0.5 * (lo + hi);
    let mut best = 0;
    for k in 1..d.bins() {
        let (mk, mb) = (d.masses[k], d.masses[best]);
        if mk > mb || (mk == mb && (d.center(k) - mid).abs() < (d.center(best) - mid).abs()) {
            best = k;
        }
    }
    d.center(best)
}

/// Statistic computed from each window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregate {
    OrderP(f64),
    Mode,
}

impl Aggregate {
    fn validate(&self) -> Result<()> {
        match *self {
            Aggregate::OrderP(p) => check_order(p),
            Aggregate::Mode => Ok(()),
        }
    }

    fn apply(&self, d: &Density1D) -> Result<f64> {
        match *self {
            Aggregate::OrderP(p) => pmean(d, p),
            Aggregate::Mode => Ok(mode(d)),
        }
    }
}

/// One pass of the M-smoother: every sample is replaced by the order-p mean
/// or mode of its window. `bins = None` picks [`default_bins`] from the
/// window size.
pub fn msmooth_step(
    f: &Field,
    w: &WindowSpec,
    filter: Aggregate,
    bins: Option<usize>,
) -> Result<Field> {
    w.check_field(f)?;
    filter.validate()?;
    if w.radius < f.h() {
        log::warn!("window radius {} below grid spacing {}", w.radius, f.h());
    }
    let offsets = w.offsets(f.h());
    let bins = bins.unwrap_or_else(|| default_bins(offsets.len()));
    let (nx, ny) = (f.nx(), f.ny());
    let out: Vec<f64> = (0..f.len())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(offsets.len()),
            |buf, idx| {
                let c = [
                    (idx % nx) as isize,
                    ((idx / nx) % ny) as isize,
                    (idx / (nx * ny)) as isize,
                ];
                buf.clear();
                buf.extend(offsets.iter().map(|o| f.at([c[0] + o[0], c[1] + o[1], c[2] + o[2]])));
                let lo = buf.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo == hi {
                    return Ok(lo);
                }
                let d = estimate_density(buf, bins)?;
                Ok(filter.apply(&d)?.clamp(lo, hi))
            },
        )
        .collect::<Result<_>>()?;
    f.with_values(out)
}

/// `iters` passes of [`msmooth_step`].
pub fn msmooth(
    f: &Field,
    w: &WindowSpec,
    filter: Aggregate,
    bins: Option<usize>,
    iters: usize,
) -> Result<Field> {
    let mut u = f.clone();
    for _ in 0..iters {
        u = msmooth_step(&u, w, filter, bins)?;
    }
    Ok(u)
}
