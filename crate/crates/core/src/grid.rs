//! Rectilinear scalar fields with mirrored (homogeneous Neumann) boundaries
//! and the finite-difference primitives built on them.
//!
//! Samples are stored row-major with the first axis (`x`, index `i`) running
//! fastest. Reads outside the grid reflect about the boundary without
//! repeating the edge sample twice: index `-k` reads `k - 1` and index
//! `n - 1 + k` reads `n - k`.

use rayon::prelude::*;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Number of mirrored layers every stencil may rely on.
pub const MIRROR_DEPTH: isize = 2;

/// Smallest extent accepted along any present axis.
pub const MIN_EXTENT: usize = 2;

/// A 1D, 2D or 3D grid of real samples with uniform spacing `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    dims: Vec<usize>,
    h: f64,
    values: Vec<f64>,
}

/// Reflects an arbitrary index into `0..n`.
///
/// Matches the two-layer mirror rule and keeps reflecting for larger
/// offsets, which windowed filters with radii beyond the mirror depth need.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if i >= 0 && (i as usize) < n {
        return i as usize;
    }
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

impl Field {
    pub fn new(dims: &[usize], h: f64, values: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::param(format!(
                "field must have 1 to 3 axes, got {}",
                dims.len()
            )));
        }
        if let Some(&n) = dims.iter().find(|&&n| n < MIN_EXTENT) {
            return Err(Error::param(format!(
                "every axis needs at least {MIN_EXTENT} samples, got {n}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be positive, got {h}")));
        }
        let len: usize = dims.iter().product();
        if values.len() != len {
            return Err(Error::param(format!(
                "expected {len} samples for dims {dims:?}, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("field samples must be finite"));
        }
        Ok(Field {
            dims: dims.to_vec(),
            h,
            values,
        })
    }

    pub fn from_fn_1d(n: usize, h: f64, f: impl Fn(usize) -> f64) -> Result<Self> {
        Field::new(&[n], h, (0..n).map(f).collect())
    }

    pub fn from_fn_2d(nx: usize, ny: usize, h: f64, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Field::new(&[nx, ny], h, values)
    }

    pub fn from_fn_3d(
        nx: usize,
        ny: usize,
        nz: usize,
        h: f64,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(f(i, j, k));
                }
            }
        }
        Field::new(&[nx, ny, nz], h, values)
    }

    pub fn constant(dims: &[usize], h: f64, value: f64) -> Result<Self> {
        Field::new(dims, h, vec![value; dims.iter().product()])
    }

    /// Builds a field with the same geometry from new samples. Callers
    /// guarantee the length; finiteness is still checked.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(values.len(), self.values.len());
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Experiment(
                "operation produced a non-finite sample".into(),
            ));
        }
        Ok(Field {
            dims: self.dims.clone(),
            h: self.h,
            values,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn ny(&self) -> usize {
        self.dims.get(1).copied().unwrap_or(1)
    }

    pub fn nz(&self) -> usize {
        self.dims.get(2).copied().unwrap_or(1)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Linear offset of an in-range index tuple.
    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        match idx.len() {
            1 => idx[0],
            2 => idx[1] * self.dims[0] + idx[0],
            _ => (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0],
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.offset(idx)]
    }

    /// Reads a sample, reflecting indices that lie at most two layers
    /// outside the grid.
    pub fn mirror_get(&self, index: &[isize]) -> Result<f64> {
        if index.len() != self.ndim() {
            return Err(Error::Usage(format!(
                "index has {} components for a {}D field",
                index.len(),
                self.ndim()
            )));
        }
        let mut idx = [0usize; 3];
        for (axis, (&i, &n)) in index.iter().zip(&self.dims).enumerate() {
            if i < -MIRROR_DEPTH || i > n as isize - 1 + MIRROR_DEPTH {
                return Err(Error::OutOfBounds {
                    axis,
                    index: i,
                    extent: n,
                });
            }
            idx[axis] = reflect(i, n);
        }
        Ok(self.get(&idx[..self.ndim()]))
    }

    /// Mirrored 1D read. Offsets are bounded by the stencils that call it.
    #[inline]
    pub(crate) fn at1(&self, i: isize) -> f64 {
        self.values[reflect(i, self.dims[0])]
    }

    /// Mirrored 2D read.
    #[inline]
    pub(crate) fn at2(&self, i: isize, j: isize) -> f64 {
        let nx = self.dims[0];
        self.values[reflect(j, self.dims[1]) * nx + reflect(i, nx)]
    }

    /// Mirrored read for any dimensionality, with unused trailing
    /// components ignored.
    #[inline]
    pub(crate) fn at(&self, idx: [isize; 3]) -> f64 {
        match self.dims.len() {
            1 => self.at1(idx[0]),
            2 => self.at2(idx[0], idx[1]),
            _ => {
                let (nx, ny) = (self.dims[0], self.dims[1]);
                let k = reflect(idx[2], self.dims[2]);
                let j = reflect(idx[1], ny);
                let i = reflect(idx[0], nx);
                self.values[(k * ny + j) * nx + i]
            }
        }
    }

    /// Evaluates `f(i, j)` at every pixel of a 2D field, row-parallel.
    pub(crate) fn par_map2(&self, f: impl Fn(isize, isize) -> f64 + Sync) -> Vec<f64> {
        let nx = self.nx();
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(i as isize, j as isize);
            }
        });
        out
    }

    pub(crate) fn require_2d(&self, what: &str) -> Result<()> {
        if self.ndim() != 2 {
            return Err(Error::Usage(format!(
                "{what} needs a 2D field, got {}D",
                self.ndim()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_1d(&self, what: &str) -> Result<()> {
        if self.ndim() != 1 {
            return Err(Error::Usage(format!(
                "{what} needs a 1D field, got {}D",
                self.ndim()
            )));
        }
        Ok(())
    }
}

/// Direction of a forward difference on a 2D grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `(1, 0)`
    X,
    /// `(0, 1)`
    Y,
    /// Main diagonal `(1, 1)`.
    D,
    /// Anti-diagonal `(1, -1)`.
    E,
}

impl Direction {
    pub fn step(self) -> (isize, isize) {
        match self {
            Direction::X => (1, 0),
            Direction::Y => (0, 1),
            Direction::D => (1, 1),
            Direction::E => (1, -1),
        }
    }

    /// Length of one step in units of `h`.
    pub fn length(self) -> f64 {
        match self {
            Direction::X | Direction::Y => 1.0,
            Direction::D | Direction::E => SQRT_2,
        }
    }
}

/// Forward difference `(u(x + s) - u(x)) / |s|` at integer pixel `(i, j)`,
/// with mirrored reads.
#[inline]
pub(crate) fn fwd(u: &Field, dir: Direction, i: isize, j: isize) -> f64 {
    let (di, dj) = dir.step();
    (u.at2(i + di, j + dj) - u.at2(i, j)) / (dir.length() * u.h())
}

/// The forward-difference field `u^x`, `u^y`, `u^d` or `u^e`.
pub fn forward_diff(f: &Field, direction: Direction) -> Result<Field> {
    f.require_2d("forward_diff")?;
    let out = f.par_map2(|i, j| fwd(f, direction, i, j));
    f.with_values(out)
}

/// First and second central derivatives at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralDerivs {
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
}

#[inline]
pub(crate) fn central_at(u: &Field, i: isize, j: isize) -> CentralDerivs {
    let h = u.h();
    let c = u.at2(i, j);
    let xp = u.at2(i + 1, j);
    let xm = u.at2(i - 1, j);
    let yp = u.at2(i, j + 1);
    let ym = u.at2(i, j - 1);
    CentralDerivs {
        ux: (xp - xm) / (2.0 * h),
        uy: (yp - ym) / (2.0 * h),
        uxx: (xp - 2.0 * c + xm) / (h * h),
        uyy: (yp - 2.0 * c + ym) / (h * h),
        uxy: (u.at2(i + 1, j + 1) - u.at2(i + 1, j - 1) - u.at2(i - 1, j + 1)
            + u.at2(i - 1, j - 1))
            / (4.0 * h * h),
    }
}

/// Second-order central differences at `at`, using mirrored reads.
pub fn central_derivs(f: &Field, at: (isize, isize)) -> Result<CentralDerivs> {
    f.require_2d("central_derivs")?;
    for (axis, (&i, &n)) in [at.0, at.1].iter().zip(f.dims()).enumerate() {
        if i < -1 || i > n as isize {
            return Err(Error::OutOfBounds {
                axis,
                index: i,
                extent: n,
            });
        }
    }
    Ok(central_at(f, at.0, at.1))
}
