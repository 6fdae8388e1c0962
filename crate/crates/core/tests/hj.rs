mod common;

use evolim::hj::{
    godunov_hamiltonian, limit_step, numerical_hamiltonian, psi_solve, solve_limit, zero_set,
    FluxScheme, LimitClosure, LimitRunConfig, LimitSolver,
};
use evolim::model::{
    GrowthFunction, LogDensityState, MutationKernel, ResourceModel, ResourceVector, TraitGrid,
};
use evolim::pde::InitialProfile;
use proptest::prelude::*;

fn kernel() -> MutationKernel {
    MutationKernel::cos2(1.0, 201).unwrap()
}

fn small(n: usize, t_end: f64) -> LimitRunConfig {
    LimitRunConfig {
        grid: TraitGrid::new(-10.0, 10.0, n).unwrap(),
        t_end,
        output_interval: 0.1,
        ..LimitRunConfig::default_scenario()
    }
}

fn flat_model() -> ResourceModel {
    ResourceModel::new(vec![GrowthFunction::Constant { value: 1.0 }]).unwrap()
}

fn state(grid: &TraitGrid, phi: Vec<f64>) -> LogDensityState {
    LogDensityState::new(grid.clone(), phi, 0.0, 0.0).unwrap()
}

#[test]
fn zero_set_is_the_band_around_the_maximum() {
    let g = TraitGrid::new(-2.0, 2.0, 401).unwrap();
    let phi: Vec<f64> = g.nodes().iter().map(|x| -(x - 0.5).abs()).collect();
    let z = zero_set(&state(&g, phi), 0.1);
    let xs: Vec<f64> = z.indices().iter().map(|&j| g.node(j)).collect();
    assert!((xs[0] - 0.4).abs() < 1e-9 && (xs[xs.len() - 1] - 0.6).abs() < 1e-9);
    assert_eq!(z.components().len(), 1);

    let below = state(&g, vec![-0.5; 401]);
    assert!(zero_set(&below, 0.1).is_empty());
}

#[test]
fn fluxes_are_consistent() {
    let k = kernel();
    for p in [-2.0, -0.3, 0.0, 0.8, 1.5] {
        let h = k.hamiltonian(p).unwrap();
        assert_eq!(godunov_hamiltonian(p, p, &k).unwrap(), h);
        assert_eq!(numerical_hamiltonian(p, p, &k, 4.0).unwrap(), h);
    }
    // a smooth maximum costs nothing, a kink takes the larger side
    assert_eq!(godunov_hamiltonian(0.5, -0.5, &k).unwrap(), 0.0);
    let (a, b) = (k.hamiltonian(-0.2).unwrap(), k.hamiltonian(0.7).unwrap());
    assert_eq!(godunov_hamiltonian(-0.2, 0.7, &k).unwrap(), a.max(b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fluxes_are_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0, d in 0.0f64..0.5) {
        let k = kernel();
        let lambda = k.max_slope(-3.5, 3.5).unwrap();
        for scheme in [FluxScheme::Godunov, FluxScheme::LaxFriedrichs] {
            let f = |m: f64, p: f64| scheme.flux(m, p, &k, lambda).unwrap();
            prop_assert!(f(a + d, b) <= f(a, b) + 1e-12);
            prop_assert!(f(a, b + d) >= f(a, b) - 1e-12);
        }
    }

    #[test]
    fn frozen_steps_preserve_order(
        bumps in prop::collection::vec(0.0f64..0.3, 201),
        center in -1.0f64..1.0,
    ) {
        let cfg = LimitRunConfig {
            closure: LimitClosure::Frozen(ResourceVector::new(vec![0.5]).unwrap()),
            clamp: false,
            ..small(201, 1.0)
        };
        let g = cfg.grid.clone();
        let lower: Vec<f64> = g.nodes().iter().map(|x| -1.0 - (1.0 + (x - center).powi(2)).sqrt()).collect();
        let upper: Vec<f64> = lower.iter().zip(&bumps).map(|(a, b)| a + b).collect();
        let solver = LimitSolver::new(cfg).unwrap();
        let (su, ..) = solver.advance(&state(&g, upper.clone()), &[0.5], None).unwrap();
        let (dt, _) = solver.stable_step(&upper).unwrap();
        let (sl, ..) = solver.advance(&state(&g, lower), &[0.5], Some(dt)).unwrap();
        prop_assert!(sl.phi().iter().zip(su.phi()).all(|(x, y)| *y >= *x - 1e-12));
    }
}

#[test]
fn linear_data_is_transported_exactly() {
    // eta = 1 and I = 1/2 frozen: d phi / dt = H(p) - 1/2 for phi = p x
    let p = 0.3;
    let cfg = LimitRunConfig {
        model: flat_model(),
        closure: LimitClosure::Frozen(ResourceVector::new(vec![0.5]).unwrap()),
        clamp: false,
        ..small(401, 1.0)
    };
    let g = cfg.grid.clone();
    let phi: Vec<f64> = g.nodes().iter().map(|x| p * x - 5.0).collect();
    let solver = LimitSolver::new(cfg).unwrap();
    let mut s = state(&g, phi.clone());
    for _ in 0..20 {
        s = solver.advance(&s, &[0.5], None).unwrap().0;
    }
    let rate = kernel().hamiltonian(p).unwrap() - 0.5;
    for (a, b) in s.phi().iter().zip(&phi) {
        assert!((a - b - s.t() * rate).abs() < 1e-12);
    }
}

#[test]
fn fixed_steps_above_the_cfl_bound_are_rejected() {
    let cfg = small(401, 1.0);
    let solver = LimitSolver::new(cfg.clone()).unwrap();
    let s = solver.initial_state().unwrap();
    let (dt, _) = solver.stable_step(s.phi()).unwrap();
    let bad = LimitRunConfig {
        dt: Some(2.0 * dt),
        ..cfg
    };
    let e = limit_step(&s, &bad).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn empty_zero_set_means_no_consumption() {
    let cfg = small(401, 1.0);
    let g = cfg.grid.clone();
    let solver = LimitSolver::new(cfg).unwrap();
    let c = solver.closure(&state(&g, vec![-1.0; 401]), None).unwrap();
    assert!(c.omega.is_empty());
    assert_eq!(c.resources.as_slice(), &[1.0]);
    assert!(c.measure().is_empty());
}

#[test]
fn limit_run_keeps_the_constraint_and_certificates() {
    let cfg = small(401, 2.0);
    let trace = solve_limit(&cfg).unwrap();
    let solver = LimitSolver::new(cfg.clone()).unwrap();
    for s in &trace.snapshots {
        let max = s.max_phi();
        assert!(max <= 0.0);
        assert!(max >= -solver.band(s), "{} at t = {}", max, s.t());
    }
    assert_eq!(trace.certificates.len(), trace.times.len());
    assert!(trace.certificates.iter().all(|c| c.passed()));
    assert_eq!(trace.activation_time, Some(0.0));
    // single resource: the atom sits at the peak of eta with I = 1/2
    let i = trace.resources.last().unwrap()[0];
    assert!((i - 0.5).abs() < 1e-6, "{i}");
    let mu = trace.measures.last().unwrap().merged(0.2);
    assert_eq!(mu.len(), 1);
    assert!(mu.atoms()[0].x.abs() < 0.1);
}

#[test]
fn lax_friedrichs_is_selectable_and_stays_close() {
    let god = solve_limit(&small(401, 1.0)).unwrap();
    let lf = solve_limit(&LimitRunConfig {
        flux: FluxScheme::LaxFriedrichs,
        ..small(401, 1.0)
    })
    .unwrap();
    let a = god.final_state().unwrap().phi();
    let b = lf.final_state().unwrap().phi();
    let window = god.grid.central_window(0.8);
    let gap = window.map(|j| (a[j] - b[j]).abs()).fold(0.0, f64::max);
    assert!(gap < 0.2, "{gap}");
}

#[test]
fn psi_starts_at_the_initial_profile() {
    let cfg = small(401, 1.0);
    let trace = solve_limit(&cfg).unwrap();
    let psi = psi_solve(&cfg, &trace).unwrap();
    let phi0 = LimitSolver::new(cfg).unwrap().initial_state().unwrap();
    assert_eq!(psi.psi[0], phi0.phi());
    assert_eq!(psi.times, trace.times);
    assert!(psi.integrals[0].iter().all(|&j| j == 0.0));
    // J is the running integral of I
    let j_end = psi.integrals.last().unwrap()[0];
    let direct: f64 = trace.steps.iter().map(|s| s.dt * s.resources[0]).sum();
    assert!((j_end - direct).abs() < 1e-12);
}

#[test]
fn psi_with_flat_growth_is_plain_hj() {
    // eta' = 0, so psi follows the same transport as phi shifted by J
    let cfg = LimitRunConfig {
        model: flat_model(),
        closure: LimitClosure::Frozen(ResourceVector::new(vec![0.5]).unwrap()),
        clamp: false,
        ..small(401, 1.0)
    };
    let trace = solve_limit(&cfg).unwrap();
    let psi = psi_solve(&cfg, &trace).unwrap();
    for (rebuilt, s) in psi.phi.iter().zip(&trace.snapshots) {
        assert!(common::max_abs_diff(rebuilt.phi(), s.phi()) < 1e-12);
    }
}

#[test]
fn psi_reconstruction_tracks_phi() {
    let cfg = small(801, 1.0);
    let trace = solve_limit(&cfg).unwrap();
    let psi = psi_solve(&cfg, &trace).unwrap();
    let window = cfg.grid.central_window(0.8);
    let gap = psi
        .phi
        .iter()
        .zip(&trace.snapshots)
        .map(|(a, b)| {
            window
                .clone()
                .map(|j| (a.phi()[j] - b.phi()[j]).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(gap < 0.05, "{gap}");
}

#[test]
fn psi_rejects_a_foreign_trace() {
    let trace = solve_limit(&small(201, 0.2)).unwrap();
    let e = psi_solve(&small(401, 0.2), &trace).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn an_unviable_start_jumps_to_the_peak() {
    // eta(1.5) < 1: the first zero set cannot sustain mass, so I = 1 until
    // the maximum of phi reaches the viable region
    let cfg = LimitRunConfig {
        initial: InitialProfile::Well { center: 1.5 },
        zero_band: Some(0.05),
        ..small(401, 3.0)
    };
    let model = ResourceModel::new(vec![GrowthFunction::gaussian(2.0, 0.0, 1.0)]).unwrap();
    assert!(model.eta(0, 1.5) < 1.0);
    let trace = solve_limit(&cfg).unwrap();
    assert_eq!(trace.resources[0].as_slice(), &[1.0]);
    assert!(!trace.jumps.is_empty());
    let jump = &trace.jumps[0];
    assert!(jump.t > 0.1 && jump.before[0] == 1.0 && jump.after[0] < 0.9);
    let i = trace.resources.last().unwrap()[0];
    assert!((i - 0.5).abs() < 0.05, "{i}");
}
