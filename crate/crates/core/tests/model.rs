mod common;

use std::f64::consts::PI;

use common::{cos2, simpson};
use evolim::model::{
    growth_rate, hamiltonian, hamiltonian_eps, log_mass, resource_response, GrowthFunction,
    LogDensityState, MutationKernel, ResourceModel, TraitGrid,
};
use evolim::Error;
use proptest::prelude::*;

fn gaussian_model() -> ResourceModel {
    ResourceModel::new(vec![GrowthFunction::gaussian(2.0, 0.0, 1.0)]).unwrap()
}

#[test]
fn empty_population_leaves_resources_at_one() {
    let g = TraitGrid::new(-5.0, 5.0, 101).unwrap();
    let m = ResourceModel::new(vec![
        GrowthFunction::gaussian(2.0, -1.0, 1.0),
        GrowthFunction::gaussian(1.0, 1.0, 0.5),
    ])
    .unwrap();
    let r = resource_response(&vec![0.0; 101], &g, &m).unwrap();
    assert_eq!(r.as_slice(), &[1.0, 1.0]);
}

#[test]
fn unit_load_halves_the_resource() {
    let g = TraitGrid::new(-6.0, 6.0, 601).unwrap();
    let m = gaussian_model();
    let u: Vec<f64> = g.nodes().iter().map(|x| 1.0 / (1.0 + x * x)).collect();
    // rescale with an independent quadrature of eta * u on the same nodes
    let w = g.trapezoid_weights();
    let load: f64 = (0..g.len())
        .map(|j| w[j] * 2.0 * (-g.node(j).powi(2)).exp() * u[j])
        .sum();
    let u: Vec<f64> = u.iter().map(|v| v / load).collect();
    let r = resource_response(&u, &g, &m).unwrap();
    assert!((r[0] - 0.5).abs() < 1e-14);
}

#[test]
fn gaussian_response_matches_closed_form() {
    let g = TraitGrid::new(-8.0, 8.0, 1601).unwrap();
    let u: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
    let r = resource_response(&u, &g, &gaussian_model()).unwrap();
    let oracle = 1.0 / (1.0 + simpson(|x| 2.0 * (-2.0 * x * x).exp(), -8.0, 8.0, 20000));
    assert!((oracle - 1.0 / (1.0 + (2.0 * PI).sqrt())).abs() < 1e-12);
    assert!((r[0] - oracle).abs() < 1e-8, "{} vs {oracle}", r[0]);
}

#[test]
fn non_finite_density_is_rejected() {
    let g = TraitGrid::new(-1.0, 1.0, 5).unwrap();
    let u = [0.0, 1.0, f64::NAN, 1.0, 0.0];
    assert!(matches!(
        resource_response(&u, &g, &gaussian_model()),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn growth_rate_examples() {
    let m = gaussian_model();
    assert_eq!(growth_rate(&[0.0], &m, 0.3).unwrap(), -1.0);
    let x = 0.7;
    let i = 1.0 / m.eta(0, x);
    assert!(growth_rate(&[i], &m, x).unwrap().abs() < 1e-15);

    let m2 = ResourceModel::new(vec![
        GrowthFunction::gaussian(2.0, 0.0, 1.0),
        GrowthFunction::gaussian(0.5, 0.0, 3.0),
    ])
    .unwrap();
    assert_eq!(growth_rate(&[0.25, 1.0], &m2, 0.0).unwrap(), 0.0);
}

#[test]
fn hamiltonian_at_zero_and_symmetry() {
    let k = MutationKernel::cos2(1.0, 201).unwrap();
    assert_eq!(hamiltonian(&k, 0.0).unwrap(), 0.0);
    for p in [0.5, 1.0, 2.0] {
        let (a, b) = (hamiltonian(&k, p).unwrap(), hamiltonian(&k, -p).unwrap());
        assert!((a - b).abs() < 1e-12, "p = {p}: {a} vs {b}");
    }
}

#[test]
fn cos2_hamiltonian_matches_closed_form() {
    let k = MutationKernel::cos2(1.0, 201).unwrap();
    // int cos^2(pi z / 2) e^z dz over [-1, 1] = sinh(1) pi^2 / (1 + pi^2)
    let exact = 1f64.sinh() * PI * PI / (1.0 + PI * PI) - 1.0;
    let quad = simpson(|z| cos2(z) * z.exp_m1(), -1.0, 1.0, 5000);
    assert!((exact - quad).abs() < 1e-12);
    let h = hamiltonian(&k, 1.0).unwrap();
    assert!((h - exact).abs() < 1e-9, "{h} vs {exact}");
}

#[test]
fn hamiltonian_guard_raises_range_error() {
    let k = MutationKernel::cos2(1.0, 201).unwrap();
    assert!(matches!(hamiltonian(&k, 501.0), Err(Error::Range { .. })));
    assert!(hamiltonian(&k, 499.0).is_ok());
}

#[test]
fn h_eps_of_constant_phi_is_zero() {
    let g = TraitGrid::new(-5.0, 5.0, 501).unwrap();
    let s = LogDensityState::new(g, vec![-3.7; 501], 0.1, 0.0).unwrap();
    let k = MutationKernel::cos2(1.0, 201).unwrap();
    for j in [0, 17, 250, 500] {
        assert_eq!(hamiltonian_eps(&s, &k, j).unwrap(), 0.0);
    }
}

#[test]
fn h_eps_of_linear_phi_is_h() {
    let g = TraitGrid::new(-10.0, 10.0, 801).unwrap();
    let k = MutationKernel::cos2(1.0, 201).unwrap();
    for p in [-2.0, -0.3, 1.0, 2.5] {
        let phi: Vec<f64> = g.nodes().iter().map(|x| p * x).collect();
        for eps in [0.2, 0.05] {
            let s = LogDensityState::new(g.clone(), phi.clone(), eps, 0.0).unwrap();
            let h = hamiltonian(&k, p).unwrap();
            // interior, near-boundary (extrapolated) and end nodes
            for j in [0, 3, 400, 797, 800] {
                let he = hamiltonian_eps(&s, &k, j).unwrap();
                assert!((he - h).abs() < 1e-9, "p {p} eps {eps} j {j}: {he} vs {h}");
            }
        }
    }
}

#[test]
fn h_eps_matches_direct_quadrature() {
    // eps z_q falls on grid nodes, so only the kernel quadrature differs
    let eps = 0.05;
    let g = TraitGrid::new(-5.0, 5.0, 20001).unwrap();
    let phi_fn = |x: f64| -(1.0 + x * x).sqrt();
    let phi: Vec<f64> = g.nodes().iter().map(|&x| phi_fn(x)).collect();
    let s = LogDensityState::new(g.clone(), phi, eps, 0.0).unwrap();
    let k = MutationKernel::cos2(1.0, 201).unwrap();
    let j = g.index_of(0.5).unwrap();
    let he = hamiltonian_eps(&s, &k, j).unwrap();
    let x = 0.5;
    let oracle = simpson(
        |z| cos2(z) * ((phi_fn(x + eps * z) - phi_fn(x)) / eps).exp_m1(),
        -1.0,
        1.0,
        1000,
    );
    assert!((he - oracle).abs() < 1e-8, "{he} vs {oracle}");
}

#[test]
fn log_mass_of_constant_phi() {
    let g = TraitGrid::new(-3.0, 7.0, 1001).unwrap();
    let s = LogDensityState::new(g, vec![-2.0; 1001], 0.1, 0.0).unwrap();
    let lm = log_mass(&s).unwrap();
    assert!((lm - (10f64.ln() - 20.0)).abs() < 1e-12);
}

#[test]
fn log_mass_of_tent_matches_closed_form() {
    let eps = 0.1;
    let g = TraitGrid::new(-10.0, 10.0, 100_001).unwrap();
    let phi: Vec<f64> = g.nodes().iter().map(|x| -x.abs()).collect();
    let s = LogDensityState::new(g, phi, eps, 0.0).unwrap();
    let exact = (2.0 * eps * (1.0 - (-10.0 / eps).exp())).ln();
    assert!((log_mass(&s).unwrap() - exact).abs() < 1e-6);
}

#[test]
fn log_mass_never_overflows() {
    let g = TraitGrid::new(-1.0, 1.0, 11).unwrap();
    let s = LogDensityState::new(g, vec![400.0; 11], 1e-3, 0.0).unwrap();
    let lm = log_mass(&s).unwrap();
    assert!((lm - (2f64.ln() + 4e5)).abs() < 1e-9 * 4e5);
}

/// Symmetric nonnegative kernel table on `[-r, r]` vanishing at the ends.
fn symmetric_table() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (0.2f64..2.0, prop::collection::vec(0.0f64..1.0, 3..12)).prop_filter_map(
        "kernel needs mass",
        |(r, half)| {
            if half.iter().sum::<f64>() <= 1e-3 {
                return None;
            }
            let m = half.len();
            let n = 2 * m + 3;
            let z: Vec<f64> = (0..n)
                .map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64)
                .collect();
            let mut k = vec![0.0; n];
            for (q, v) in half.iter().enumerate() {
                k[q + 1] = *v;
                k[n - 2 - q] = *v;
            }
            k[m + 1] = half.iter().copied().fold(0.0, f64::max);
            Some((z, k))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_nonnegative_and_convex(
        (z, k) in symmetric_table(),
        ps in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let kernel = MutationKernel::from_table(&z, &k, 101).unwrap();
        for &p in &ps {
            prop_assert!(hamiltonian(&kernel, p).unwrap() >= -1e-12);
        }
        let (a, b) = (ps[0], ps[1]);
        let mid = hamiltonian(&kernel, 0.5 * (a + b)).unwrap();
        let avg = 0.5 * (hamiltonian(&kernel, a).unwrap() + hamiltonian(&kernel, b).unwrap());
        prop_assert!(mid <= avg + 1e-10);
    }

    #[test]
    fn resource_response_is_antitone(
        base in prop::collection::vec(0.0f64..2.0, 41),
        extra in prop::collection::vec(0.0f64..1.0, 41),
    ) {
        let g = TraitGrid::new(-4.0, 4.0, 41).unwrap();
        let m = ResourceModel::new(vec![
            GrowthFunction::gaussian(2.0, -1.0, 1.0),
            GrowthFunction::gaussian(1.5, 1.0, 0.7),
        ]).unwrap();
        let bigger: Vec<f64> = base.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let r1 = resource_response(&base, &g, &m).unwrap();
        let r2 = resource_response(&bigger, &g, &m).unwrap();
        for i in 0..2 {
            prop_assert!(r1[i] >= r2[i]);
            prop_assert!(r2[i] > 0.0 && r1[i] <= 1.0);
        }
    }

    #[test]
    fn log_mass_depends_on_phi_over_eps(
        phi in prop::collection::vec(-30.0f64..5.0, 21),
        eps in 0.01f64..1.0,
    ) {
        let g = TraitGrid::new(-2.0, 2.0, 21).unwrap();
        let a = LogDensityState::new(g.clone(), phi.clone(), eps, 0.0).unwrap();
        let doubled: Vec<f64> = phi.iter().map(|p| 2.0 * p).collect();
        let b = LogDensityState::new(g, doubled, 2.0 * eps, 0.0).unwrap();
        let (la, lb) = (log_mass(&a).unwrap(), log_mass(&b).unwrap());
        prop_assert!((la - lb).abs() <= 1e-12 * la.abs().max(1.0));
    }

    #[test]
    fn h_eps_tends_to_h_on_linear_profiles(p in -3.0f64..3.0, eps in 0.01f64..0.5) {
        let g = TraitGrid::new(-5.0, 5.0, 201).unwrap();
        let k = MutationKernel::bump(1.0, 101).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|x| p * x).collect();
        let s = LogDensityState::new(g, phi, eps, 0.0).unwrap();
        let h = hamiltonian(&k, p).unwrap();
        prop_assert!((hamiltonian_eps(&s, &k, 100).unwrap() - h).abs() < 1e-9 * h.abs().max(1.0));
    }
}
