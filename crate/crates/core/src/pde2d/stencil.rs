//! Spatial discretisations used by the splitting scheme.
//!
//! Every operator comes as an axial part (neighbours along `x` and `y`) and
//! a diagonal part (neighbours along `(1, 1)` and `(1, -1)`); the blended
//! operators weight them with `1 - nu` and `nu`.

use std::f64::consts::SQRT_2;

use crate::error::Result;
use crate::grid::{central_at, fwd, Direction, Field};

/// Axial or diagonal half of a blended operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Axial,
    Diagonal,
}

impl Part {
    /// Blending weight of this part for diagonal weight `nu`.
    pub fn weight(self, nu: f64) -> f64 {
        match self {
            Part::Axial => 1.0 - nu,
            Part::Diagonal => nu,
        }
    }

    fn directions(self) -> [Direction; 2] {
        match self {
            Part::Axial => [Direction::X, Direction::Y],
            Part::Diagonal => [Direction::D, Direction::E],
        }
    }
}

/// Morphological sense of the upwind gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `u_t = |grad u|`
    Dilation,
    /// `u_t = -|grad u|`
    Erosion,
}

/// Argument of minimal modulus when `a b >= 0` and `a c >= 0`, else 0.
/// Equal moduli resolve to the earliest argument.
#[inline]
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a * b >= 0.0 && a * c >= 0.0 {
        let mut m = a;
        if b.abs() < m.abs() {
            m = b;
        }
        if c.abs() < m.abs() {
            m = c;
        }
        m
    } else {
        0.0
    }
}

/// Five-point (axial) or diagonal Laplacian at one pixel.
#[inline]
pub(crate) fn laplacian_part_at(u: &Field, part: Part, i: isize, j: isize) -> f64 {
    let h2 = u.h() * u.h();
    let c = u.at2(i, j);
    match part {
        Part::Axial => {
            (u.at2(i + 1, j) + u.at2(i - 1, j) + u.at2(i, j + 1) + u.at2(i, j - 1) - 4.0 * c) / h2
        }
        Part::Diagonal => {
            (u.at2(i + 1, j + 1) + u.at2(i - 1, j - 1) + u.at2(i + 1, j - 1) + u.at2(i - 1, j + 1)
                - 4.0 * c)
                / (2.0 * h2)
        }
    }
}

/// Minmod flux difference approximating `sgn(|grad u|) * Laplacian` along the
/// two directions of `part`. Vanishes wherever the one-sided slopes change
/// sign.
#[inline]
pub(crate) fn minmod_part_at(u: &Field, part: Part, i: isize, j: isize) -> f64 {
    let mut acc = 0.0;
    for dir in part.directions() {
        let (di, dj) = dir.step();
        let s = |k: isize| fwd(u, dir, i + k * di, j + k * dj);
        let (next, here, prev, prev2) = (s(1), s(0), s(-1), s(-2));
        acc += minmod3(next, here, prev) - minmod3(here, prev, prev2);
    }
    acc / (part_length(part) * u.h())
}

#[inline]
fn part_length(part: Part) -> f64 {
    match part {
        Part::Axial => 1.0,
        Part::Diagonal => SQRT_2,
    }
}

/// Rouy-Tourin upwind gradient magnitude along the two directions of `part`.
#[inline]
pub(crate) fn upwind_part_at(u: &Field, part: Part, sense: Sense, i: isize, j: isize) -> f64 {
    let [a, b] = part.directions().map(|dir| {
        let (di, dj) = dir.step();
        let here = fwd(u, dir, i, j);
        let back = fwd(u, dir, i - di, j - dj);
        match sense {
            Sense::Dilation => (-back).max(here).max(0.0),
            Sense::Erosion => (-here).max(back).max(0.0),
        }
    });
    // hypot: squaring tiny slopes would underflow and break monotonicity
    a.hypot(b)
}

/// Regularised isophote curvature, limited to `[-cap, cap]`.
#[inline]
pub(crate) fn curvature_at(u: &Field, eps: f64, cap: f64, i: isize, j: isize) -> f64 {
    let d = central_at(u, i, j);
    let num = d.ux * d.ux * d.uyy - 2.0 * d.ux * d.uy * d.uxy + d.uy * d.uy * d.uxx;
    let g2 = d.ux * d.ux + d.uy * d.uy + eps;
    let den = g2 * g2.sqrt();
    (num / den).clamp(-cap, cap)
}

/// Nine-point Laplacian: `(1 - nu)` times the five-point stencil plus `nu`
/// times the diagonal one. The stencil weights sum to zero.
pub fn laplacian_blend(u: &Field, nu: f64) -> Result<Field> {
    u.require_2d("laplacian_blend")?;
    let out = u.par_map2(|i, j| {
        (1.0 - nu) * laplacian_part_at(u, Part::Axial, i, j)
            + nu * laplacian_part_at(u, Part::Diagonal, i, j)
    });
    u.with_values(out)
}

/// Osher-Rudin minmod approximation of `sgn(|grad u|) * Laplacian`, blended
/// with its diagonal counterpart.
pub fn backward_laplacian_minmod(u: &Field, nu: f64) -> Result<Field> {
    u.require_2d("backward_laplacian_minmod")?;
    let out = u.par_map2(|i, j| {
        (1.0 - nu) * minmod_part_at(u, Part::Axial, i, j)
            + nu * minmod_part_at(u, Part::Diagonal, i, j)
    });
    u.with_values(out)
}

/// Central-difference isophote curvature with `eps` added to `|grad u|^2`,
/// clamped to `[-cap, cap]`.
pub fn curvature(u: &Field, eps: f64, cap: f64) -> Result<Field> {
    u.require_2d("curvature")?;
    let out = u.par_map2(|i, j| curvature_at(u, eps, cap, i, j));
    u.with_values(out)
}

/// Blended upwind gradient magnitude for dilation or erosion.
pub fn upwind_gradmag(u: &Field, nu: f64, sense: Sense) -> Result<Field> {
    u.require_2d("upwind_gradmag")?;
    let out = u.par_map2(|i, j| {
        (1.0 - nu) * upwind_part_at(u, Part::Axial, sense, i, j)
            + nu * upwind_part_at(u, Part::Diagonal, sense, i, j)
    });
    u.with_values(out)
}
