//! 1D limits of the order-p filters: the linear evolution
//! `u_t = (p - 1) u_xx` and the shock filter `u_t = -sgn(u_xx) |u_x|`
//! that replaces the mode filter.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::pde2d::minmod3;

/// Fraction of the stability limit used when no time step is given.
pub const AUTO_STEP_FACTOR: f64 = 0.9;

const LIMIT_SLACK: f64 = 1e-12;

/// Largest stable step of [`linear_step_1d`]; infinite for `p = 1`.
pub fn linear_limit(p: f64, h: f64) -> f64 {
    let d = (p - 1.0).abs();
    if d == 0.0 {
        f64::INFINITY
    } else {
        h * h / (2.0 * d)
    }
}

fn check(tau: f64, limit: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param(format!("tau must be positive, got {tau}")));
    }
    if tau > limit * (1.0 + LIMIT_SLACK) {
        return Err(Error::Unstable { tau, limit });
    }
    Ok(())
}

fn slope(u: &Field, i: isize) -> f64 {
    (u.at1(i + 1) - u.at1(i)) / u.h()
}

/// One explicit step of `u_t = (p - 1) u_xx`. Forward diffusion (`p > 1`)
/// uses the three-point Laplacian, backward diffusion (`p < 1`) the minmod
/// flux difference, which is zero at discrete extrema.
pub fn linear_step_1d(u: &Field, p: f64, tau: f64) -> Result<Field> {
    u.require_1d("linear_step_1d")?;
    if !p.is_finite() {
        return Err(Error::param(format!("p must be finite, got {p}")));
    }
    check(tau, linear_limit(p, u.h()))?;
    let coeff = p - 1.0;
    if coeff == 0.0 {
        return Ok(u.clone());
    }
    let h = u.h();
    let n = u.len() as isize;
    let values = (0..n)
        .map(|i| {
            let d2 = if coeff > 0.0 {
                (u.at1(i + 1) - 2.0 * u.at1(i) + u.at1(i - 1)) / (h * h)
            } else {
                let (s1, s0, sm1, sm2) = (slope(u, i + 1), slope(u, i), slope(u, i - 1), slope(u, i - 2));
                (minmod3(s1, s0, sm1) - minmod3(s0, sm1, sm2)) / h
            };
            u.at1(i) + tau * coeff * d2
        })
        .collect();
    u.with_values(values)
}

/// Parameters of the shock filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Shock1DParams {
    /// Time step, at most `h`.
    pub tau: f64,
    pub t_stop: f64,
    /// Second differences with `|u_xx| <= theta2` count as zero; `None`
    /// means `1e-12` times the value range.
    pub theta2: Option<f64>,
}

impl Shock1DParams {
    pub fn new(tau: f64, t_stop: f64) -> Self {
        Shock1DParams {
            tau,
            t_stop,
            theta2: None,
        }
    }

    fn threshold(&self, u: &Field) -> Result<f64> {
        match self.theta2 {
            Some(t) if t >= 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(Error::param(format!("theta2 must be nonnegative, got {t}"))),
            None => Ok(1e-12 * (u.max() - u.min())),
        }
    }
}

/// One step of the shock filter with step size `tau`: dilation where the
/// signal is concave, erosion where it is convex, stationary at inflections.
pub fn shock_step_1d_with(u: &Field, tau: f64, theta2: f64) -> Result<Field> {
    u.require_1d("shock_step_1d")?;
    check(tau, u.h())?;
    let h = u.h();
    let n = u.len() as isize;
    let values = (0..n)
        .map(|i| {
            let c = u.at1(i);
            let d2 = u.at1(i + 1) - 2.0 * c + u.at1(i - 1);
            let (fwd, bwd) = (slope(u, i), slope(u, i - 1));
            if d2.abs() <= theta2 * h * h {
                c
            } else if d2 < 0.0 {
                c + tau * (-bwd).max(fwd).max(0.0)
            } else {
                c - tau * (-fwd).max(bwd).max(0.0)
            }
        })
        .collect();
    u.with_values(values)
}

/// One shock filter step using `s.tau` and the threshold of `s`.
pub fn shock_step_1d(u: &Field, s: &Shock1DParams) -> Result<Field> {
    let theta2 = s.threshold(u)?;
    shock_step_1d_with(u, s.tau, theta2)
}

fn steps(t_stop: f64, tau: f64) -> Result<Vec<f64>> {
    if !(t_stop >= 0.0 && t_stop.is_finite()) {
        return Err(Error::param(format!("stop time must be nonnegative, got {t_stop}")));
    }
    if t_stop == 0.0 {
        return Ok(Vec::new());
    }
    let n = ((t_stop / tau) - 1e-9).ceil().max(1.0) as usize;
    let mut out = vec![tau; n];
    out[n - 1] = (t_stop - (n - 1) as f64 * tau).min(tau);
    Ok(out)
}

/// Evolves `u_t = (p - 1) u_xx` to `t_stop`. Without a step size the
/// evolution uses `AUTO_STEP_FACTOR` times the limit.
pub fn linear_evolve_1d(u0: &Field, p: f64, tau: Option<f64>, t_stop: f64) -> Result<Field> {
    u0.require_1d("linear_evolve_1d")?;
    let limit = linear_limit(p, u0.h());
    let tau = match tau {
        Some(t) => t,
        None if limit.is_finite() => AUTO_STEP_FACTOR * limit,
        None => t_stop.max(1.0),
    };
    let mut u = u0.clone();
    for step in steps(t_stop, tau)? {
        u = linear_step_1d(&u, p, step)?;
    }
    Ok(u)
}

/// Runs the shock filter to `s.t_stop`. The threshold is fixed from the
/// initial signal.
pub fn shock_evolve_1d(u0: &Field, s: &Shock1DParams) -> Result<Field> {
    u0.require_1d("shock_evolve_1d")?;
    check(s.tau, u0.h())?;
    let theta2 = s.threshold(u0)?;
    let mut u = u0.clone();
    for step in steps(s.t_stop, s.tau)? {
        u = shock_step_1d_with(&u, step, theta2)?;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: Vec<f64>) -> Field {
        Field::new(&[v.len()], 1.0, v).unwrap()
    }

    #[test]
    fn median_is_identity() {
        let u = line(vec![1.0, 5.0, 2.0, 8.0]);
        assert_eq!(linear_step_1d(&u, 1.0, 10.0).unwrap(), u);
    }

    #[test]
    fn forward_step_on_parabola() {
        let u = Field::from_fn_1d(10, 1.0, |i| (i * i) as f64).unwrap();
        let v = linear_step_1d(&u, 2.0, 0.25).unwrap();
        for i in 1..9 {
            assert!((v.get(&[i]) - u.get(&[i]) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_step_freezes_peak() {
        let u = line(vec![0.0, 0.0, 1.0, 4.0, 1.0, 0.0, 0.0]);
        let v = linear_step_1d(&u, -1.0, 0.25).unwrap();
        assert_eq!(v.get(&[3]), 4.0);
        assert!(v.max() <= 4.0 && v.min() >= 0.0);
    }

    #[test]
    fn linear_limits_are_enforced() {
        let u = line(vec![0.0, 1.0, 3.0]);
        assert!((linear_limit(3.0, 1.0) - 0.25).abs() < 1e-15);
        assert!(matches!(linear_step_1d(&u, 3.0, 0.3), Err(Error::Unstable { .. })));
        assert!(matches!(linear_step_1d(&u, -1.0, 0.3), Err(Error::Unstable { .. })));
        assert!(linear_step_1d(&u, -1.0, 0.25).is_ok());
        let plane = Field::constant(&[3, 3], 1.0, 0.0).unwrap();
        assert!(matches!(linear_step_1d(&plane, 2.0, 0.1), Err(Error::Usage(_))));
    }

    #[test]
    fn forward_diffusion_conserves_sum() {
        let u = line(vec![3.0, 9.0, 1.0, 4.0, 4.0, 1.0, 9.0, 3.0]);
        let v = linear_evolve_1d(&u, 2.5, None, 7.0).unwrap();
        assert!((v.sum() - u.sum()).abs() < 1e-10);
    }

    #[test]
    fn shock_leaves_ramps() {
        let u = Field::from_fn_1d(12, 1.0, |i| 2.0 * i as f64).unwrap();
        let v = shock_step_1d(&u, &Shock1DParams::new(1.0, 1.0)).unwrap();
        // Mirroring folds the ramp at both ends; the interior is untouched.
        for i in 1..11 {
            assert_eq!(v.get(&[i]), u.get(&[i]));
        }
    }

    #[test]
    fn shock_sharpens_smoothed_step() {
        let u = Field::from_fn_1d(60, 1.0, |i| 10.0 + 80.0 / (1.0 + (-(i as f64 - 29.5) / 3.0).exp())).unwrap();
        let v = shock_evolve_1d(&u, &Shock1DParams::new(0.5, 200.0)).unwrap();
        let (lo, hi) = (u.min(), u.max());
        for i in 0..60 {
            let x = v.get(&[i]);
            let target = if i < 30 { lo } else { hi };
            assert!((x - target).abs() < 1e-6 * (hi - lo), "sample {i}: {x}");
        }
    }

    #[test]
    fn shock_keeps_rounded_peak() {
        let u = line((0..21).map(|i| 20.0 / (1.0 + ((i as f64 - 10.0) / 4.0).powi(2))).collect());
        let s = Shock1DParams::new(0.5, 3.0);
        let v = shock_evolve_1d(&u, &s).unwrap();
        assert_eq!(v.get(&[10]), 20.0);
        // Samples next to the peak are dilated towards it.
        assert!(v.get(&[9]) > u.get(&[9]));
        assert!(v.max() <= u.max() && v.min() >= u.min());
    }

    #[test]
    fn shock_is_odd() {
        let vals = vec![0.0, 1.0, 4.0, 2.0, 7.0, 7.5, 3.0, -1.0, 0.5, 6.0];
        let u = line(vals.clone());
        let m = line(vals.iter().map(|v| -v).collect());
        let s = Shock1DParams::new(0.7, 5.0);
        let a = shock_evolve_1d(&u, &s).unwrap();
        let b = shock_evolve_1d(&m, &s).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn shock_rejects_large_steps() {
        let u = line(vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            shock_step_1d(&u, &Shock1DParams::new(1.5, 3.0)),
            Err(Error::Unstable { .. })
        ));
        let bad = Shock1DParams {
            theta2: Some(-1.0),
            ..Shock1DParams::new(0.5, 1.0)
        };
        assert!(shock_step_1d(&u, &bad).is_err());
    }
}
