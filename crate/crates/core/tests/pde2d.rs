use std::f64::consts::{PI, SQRT_2};

use msmooth::pde2d::{
    backward_laplacian_minmod, diffusion_half_step, evolve, evolve_observed, mcm_half_step, stability_limit, upwind_gradmag, EvolutionParams, Flow,
    Part, Sense, StepBudget,
};
use msmooth::{Error, Field};
use proptest::prelude::*;

fn field_strategy(n: usize) -> impl Strategy<Value = Field> {
    prop::collection::vec(0.0f64..255.0, n * n).prop_map(move |v| Field::new(&[n, n], 1.0, v).unwrap())
}

fn bounded_after_every_step(f: &Field, params: &EvolutionParams) -> Result<(), TestCaseError> {
    let (lo, hi) = (f.min(), f.max());
    let mut worst = None;
    evolve_observed(f, params, |stage, u| {
        if worst.is_none() && (u.min() < lo || u.max() > hi) {
            worst = Some((stage, u.min(), u.max()));
        }
    })
    .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(worst.is_none(), "left [{lo}, {hi}]: {worst:?}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn max_min_principle_holds_after_each_fractional_step(
        f in field_strategy(12),
        p in prop::sample::select(vec![-2.0, -1.0, 0.5, 1.0, 2.0, 3.0]),
        nu in prop::sample::select(vec![0.0, SQRT_2 - 1.0, 0.5, 1.0]),
        frac in 0.1f64..=1.0,
    ) {
        let tau = frac * stability_limit(p, nu, 1.0).effective();
        let params = EvolutionParams::order_p(p, 12.0 * tau).with_tau(tau).with_nu(nu);
        bounded_after_every_step(&f, &params)?;
    }

    #[test]
    fn gauge_flows_obey_the_max_min_principle(
        f in field_strategy(10),
        xi in 0.0f64..2.0,
        eta in -2.0f64..2.0,
    ) {
        let params = EvolutionParams::new(Flow::Gauge { xi, eta }, 3.0);
        bounded_after_every_step(&f, &params)?;
    }

    #[test]
    fn minmod_term_vanishes_at_axial_extrema(f in field_strategy(9)) {
        let axial = backward_laplacian_minmod(&f, 0.0).unwrap();
        let diagonal = backward_laplacian_minmod(&f, 1.0).unwrap();
        for j in 1..8 {
            for i in 1..8 {
                let c = f.get(&[i, j]);
                let ax = [f.get(&[i + 1, j]), f.get(&[i - 1, j]), f.get(&[i, j + 1]), f.get(&[i, j - 1])];
                if ax.iter().all(|&v| v < c) || ax.iter().all(|&v| v > c) {
                    prop_assert_eq!(axial.get(&[i, j]), 0.0);
                }
                let dg = [
                    f.get(&[i + 1, j + 1]),
                    f.get(&[i - 1, j - 1]),
                    f.get(&[i + 1, j - 1]),
                    f.get(&[i - 1, j + 1]),
                ];
                if dg.iter().all(|&v| v < c) || dg.iter().all(|&v| v > c) {
                    prop_assert_eq!(diagonal.get(&[i, j]), 0.0);
                }
            }
        }
    }

    #[test]
    fn fractional_steps_respect_their_own_limits(
        f in field_strategy(8),
        p in prop::sample::select(vec![-2.0, 0.0, 0.5, 3.0]),
    ) {
        let nu = SQRT_2 - 1.0;
        let params = EvolutionParams::order_p(p, 1.0).with_nu(nu);
        let b = StepBudget::for_flow(&Flow::OrderP(p), nu, 1.0);
        for (part, tau) in [(Part::Axial, b.tau1), (Part::Diagonal, b.tau2)] {
            let u = diffusion_half_step(&f, &params, tau, part).unwrap();
            prop_assert!(u.min() >= f.min() && u.max() <= f.max());
        }
        for (part, tau) in [(Part::Axial, b.tau3), (Part::Diagonal, b.tau4)] {
            let u = mcm_half_step(&f, &params, tau, part).unwrap();
            prop_assert!(u.min() >= f.min() && u.max() <= f.max());
        }
    }
}

#[test]
fn gabor_limit() {
    let tau = stability_limit(-2.0, SQRT_2 - 1.0, 1.0).effective();
    assert!((tau - 0.1422).abs() < 1e-3, "{tau}");
    // the limit scales with h^2
    let tau2 = stability_limit(-2.0, SQRT_2 - 1.0, 2.0).effective();
    assert!((tau2 / tau - 4.0).abs() < 1e-12);
}

#[test]
fn step_above_limit_is_rejected() {
    let f = Field::constant(&[6, 6], 1.0, 1.0).unwrap();
    let tau = 1.01 * stability_limit(2.0, SQRT_2 - 1.0, 1.0).effective();
    let params = EvolutionParams::order_p(2.0, 1.0).with_tau(tau);
    assert!(matches!(evolve(&f, &params), Err(Error::Unstable { .. })));
    let mut loose = params.clone();
    loose.allow_unstable = true;
    assert!(evolve(&f, &loose).is_ok());
}

fn disc(n: usize, r: f64) -> Field {
    let c = (n as f64 - 1.0) / 2.0;
    Field::from_fn_2d(n, n, 1.0, |i, j| {
        let d = ((i as f64 - c).powi(2) + (j as f64 - c).powi(2)).sqrt();
        if d <= r {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}

fn area_radius(u: &Field) -> f64 {
    (u.values().iter().filter(|&&v| v > 0.5).count() as f64 / PI).sqrt()
}

#[test]
fn curvature_motion_shrinks_a_disc_like_a_circle() {
    let u0 = disc(48, 16.0);
    let t = 60.0;
    let u = evolve(&u0, &EvolutionParams::order_p(1.0, t)).unwrap();
    let exact = (16.0f64.powi(2) - 2.0 * t).sqrt();
    let r = area_radius(&u);
    assert!((r - exact).abs() / exact < 0.05, "{r} vs {exact}");
}

#[test]
fn upwind_gradient_is_accurate_for_tiny_slopes() {
    // slopes of order 1e-162 square to subnormals
    let mut v = vec![0.0; 36];
    v[2 * 6 + 3] = 3e-162;
    v[3 * 6 + 2] = 4e-162;
    let f = Field::new(&[6, 6], 1.0, v).unwrap();
    let g = upwind_gradmag(&f, 0.0, Sense::Dilation).unwrap().get(&[2, 2]);
    assert!((g / 5e-162 - 1.0).abs() < 1e-12, "{g}");
}

#[test]
fn diagonal_weight_improves_isotropy_of_diffusion() {
    // heat flow from a point: compare axis and diagonal values at equal radius
    let n = 41;
    let mut f = Field::constant(&[n, n], 1.0, 0.0).unwrap().into_values();
    f[20 * n + 20] = 1000.0;
    let f = Field::new(&[n, n], 1.0, f).unwrap();
    let mismatch = |nu: f64| {
        let u = evolve(&f, &EvolutionParams::order_p(2.0, 10.0).with_nu(nu)).unwrap();
        // (27, 27) sits at radius 7 sqrt(2) ~ 9.90; interpolate along the axis
        let r = 7.0 * SQRT_2;
        let (k, w) = (r.floor() as usize, r.fract());
        let axis = (1.0 - w) * u.get(&[20 + k, 20]) + w * u.get(&[21 + k, 20]);
        (u.get(&[27, 27]) - axis).abs()
    };
    let best = mismatch(SQRT_2 - 1.0);
    assert!(best < mismatch(0.0) && best < mismatch(1.0));
}
