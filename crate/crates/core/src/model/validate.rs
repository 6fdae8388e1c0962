//! Sampled checks of the structural hypotheses on the growth functions.
//!
//! The decay and positivity requirements are hard failures. The root-count
//! bound and the invertibility of `(eta_i(x_j))` are hypotheses about the
//! continuum model, so violations found on the grid are reported as warnings.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::grid::TraitGrid;
use crate::model::resources::ResourceModel;

#[derive(Debug, Clone)]
pub struct StructuralOptions {
    /// Bound on the number of sign changes of `sum_i I_i eta_i - 1`.
    pub max_roots: usize,
    /// Envelope tolerance at the grid ends.
    pub boundary_tol: f64,
    pub samples: usize,
    /// Largest accepted condition number of `(eta_i(x_j))_{i,j <= k}`.
    pub condition_limit: f64,
    pub seed: u64,
}

impl StructuralOptions {
    pub fn for_model(model: &ResourceModel) -> Self {
        Self {
            max_roots: 2 * model.k(),
            boundary_tol: 1e-6,
            samples: 256,
            condition_limit: 1e10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StructuralReport {
    pub envelope_at_ends: (f64, f64),
    pub min_eta: f64,
    pub max_sign_changes: usize,
    pub root_violations: usize,
    pub worst_condition: f64,
    pub singular_tuples: usize,
    pub tuples_checked: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn check_structure(
    model: &ResourceModel,
    grid: &TraitGrid,
    opts: &StructuralOptions,
) -> StructuralReport {
    let mut report = StructuralReport::default();
    let table = model.tabulate(grid);
    let k = model.k();
    let n = grid.len();

    let left = model.envelope(grid.x_min());
    let right = model.envelope(grid.x_max());
    report.envelope_at_ends = (left, right);
    if !(left < opts.boundary_tol && right < opts.boundary_tol) {
        report.errors.push(format!(
            "growth envelope does not decay at the grid ends: {left:.3e}, {right:.3e} (tolerance {:.1e})",
            opts.boundary_tol
        ));
    }

    report.min_eta = (0..n)
        .flat_map(|j| table.at(j).to_vec())
        .fold(f64::INFINITY, f64::min);
    if !(report.min_eta > 0.0) {
        report.errors.push(format!(
            "growth functions must be positive on the grid (min {:.3e})",
            report.min_eta
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.samples {
        let resources: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let changes = sign_changes(&table.growth_field(&resources));
        report.max_sign_changes = report.max_sign_changes.max(changes);
        if changes > opts.max_roots {
            report.root_violations += 1;
        }
    }
    if report.root_violations > 0 {
        report.warnings.push(format!(
            "{} of {} sampled resource vectors give more than {} roots of the growth rate (max {})",
            report.root_violations, opts.samples, opts.max_roots, report.max_sign_changes
        ));
    }

    // Only nodes where sum_i eta_i >= 1 can ever carry mass.
    let viable: Vec<usize> = (0..n)
        .filter(|&j| table.at(j).iter().sum::<f64>() >= 1.0)
        .collect();
    if viable.is_empty() {
        report
            .warnings
            .push("no trait can grow at maximal resources (sum_i eta_i < 1 everywhere)".into());
    } else if viable.len() >= k {
        for _ in 0..opts.samples {
            let picks = sample(&mut rng, viable.len(), k);
            let mut m = DMatrix::<f64>::zeros(k, k);
            for (c, p) in picks.iter().enumerate() {
                let j = viable[p];
                for i in 0..k {
                    m[(i, c)] = table.eta(i, j);
                }
            }
            let sv = m.singular_values();
            let smax = sv.max();
            let smin = sv.min();
            let cond = if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            };
            report.tuples_checked += 1;
            report.worst_condition = report.worst_condition.max(cond);
            if !(cond <= opts.condition_limit) {
                report.singular_tuples += 1;
            }
        }
        if report.singular_tuples > 0 {
            report.warnings.push(format!(
                "invertibility: {} of {} sampled node tuples give a (near) singular eta matrix (worst condition {:.3e})",
                report.singular_tuples, report.tuples_checked, report.worst_condition
            ));
        }
    }
    report
}

fn sign_changes(values: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::resources::GrowthFunction;

    #[test]
    fn counts_sign_changes() {
        assert_eq!(sign_changes(&[-1.0, 0.0, 1.0, 2.0, -1.0]), 2);
        assert_eq!(sign_changes(&[-1.0, -2.0]), 0);
    }

    #[test]
    fn gaussian_model_passes() {
        let g = TraitGrid::new(-10.0, 10.0, 401).unwrap();
        let m = ResourceModel::single_gaussian(2.0, 0.0, 1.0).unwrap();
        let r = check_structure(&m, &g, &StructuralOptions::for_model(&m));
        assert!(r.passed(), "{:?}", r.errors);
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }

    #[test]
    fn constant_growth_fails_decay() {
        let g = TraitGrid::new(-10.0, 10.0, 401).unwrap();
        let m = ResourceModel::new(vec![GrowthFunction::Constant { value: 2.0 }]).unwrap();
        let r = check_structure(&m, &g, &StructuralOptions::for_model(&m));
        assert!(!r.passed());
    }

    #[test]
    fn duplicated_resources_warn() {
        let g = TraitGrid::new(-10.0, 10.0, 401).unwrap();
        let f = GrowthFunction::gaussian(2.0, 0.0, 1.0);
        let m = ResourceModel::new(vec![f.clone(), f]).unwrap();
        let r = check_structure(&m, &g, &StructuralOptions::for_model(&m));
        assert!(r.passed());
        assert!(r.singular_tuples > 0);
        assert!(r.warnings.iter().any(|w| w.contains("invertibility")));
    }
}
