use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metastable::feasible::FeasibleSet;
use crate::metastable::measure::DiscreteMeasure;
use crate::model::{EtaTable, ResourceModel, ResourceVector, TraitGrid};

/// Default tolerance of the equilibrium certificate.
pub const DEFAULT_CERT_TOL: f64 = 1e-6;

/// Result of checking Prop.-1-type conditions for a measure on `omega`:
/// growth `<= 0` on `omega` and `= 0` on the support.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub measure: DiscreteMeasure,
    /// Node indices of the atoms of `measure`.
    pub support: Vec<usize>,
    pub resources: ResourceVector,
    /// `max_{omega} (sum_i I_i eta_i - 1)`; `-inf` for an empty `omega`.
    pub max_violation_on_omega: f64,
    /// Same maximum restricted to `omega \ supp mu`.
    pub max_violation_off_support: f64,
    /// `max_{supp mu} |sum_i I_i eta_i - 1|`; zero for the null measure.
    pub max_residual_on_support: f64,
    pub entropy_value: f64,
    /// Atoms not uniquely determined: more atoms than resources, or an
    /// ill-conditioned `eta` matrix on the support.
    pub degenerate: bool,
    pub cert_tol: f64,
}

impl EquilibriumCertificate {
    pub fn passed(&self) -> bool {
        self.max_violation_on_omega <= self.cert_tol
            && self.max_residual_on_support <= self.cert_tol
    }
}

/// Growth functions tabulated on a grid, the common input of the
/// metastable solvers.
#[derive(Debug, Clone)]
pub struct Landscape {
    grid: TraitGrid,
    model: ResourceModel,
    table: EtaTable,
}

impl Landscape {
    pub fn new(grid: TraitGrid, model: ResourceModel) -> Self {
        let table = model.tabulate(&grid);
        Self { grid, model, table }
    }

    pub fn grid(&self) -> &TraitGrid {
        &self.grid
    }

    pub fn model(&self) -> &ResourceModel {
        &self.model
    }

    pub fn table(&self) -> &EtaTable {
        &self.table
    }

    pub fn k(&self) -> usize {
        self.table.k()
    }

    /// `y_i = sum_s eta_i(x_s) w_s`.
    pub fn loads(&self, weights: &[(usize, f64)]) -> Vec<f64> {
        let mut y = vec![0.0; self.k()];
        for &(j, w) in weights {
            for (yi, e) in y.iter_mut().zip(self.table.at(j)) {
                *yi += e * w;
            }
        }
        y
    }

    pub fn resources(&self, weights: &[(usize, f64)]) -> ResourceVector {
        ResourceVector::from_loads(&self.loads(weights))
    }

    /// `L = sum w - sum_i log(1 + y_i)`.
    pub fn entropy_nodes(&self, weights: &[(usize, f64)]) -> f64 {
        let mass: f64 = weights.iter().map(|(_, w)| w).sum();
        mass - self.loads(weights).iter().map(|y| y.ln_1p()).sum::<f64>()
    }

    pub(crate) fn support_nodes(&self, mu: &DiscreteMeasure) -> Result<Vec<(usize, f64)>> {
        mu.atoms()
            .iter()
            .map(|a| {
                self.grid
                    .index_of(a.x)
                    .map(|j| (j, a.weight))
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("atom at {} is not a grid node", a.x))
                    })
            })
            .collect()
    }

    /// Evaluates both parts of the equilibrium condition on the grid.
    pub fn certify(
        &self,
        mu: &DiscreteMeasure,
        omega: &FeasibleSet,
        cert_tol: f64,
    ) -> Result<EquilibriumCertificate> {
        if omega.grid_len() != self.grid.len() {
            return Err(Error::InvalidInput(
                "feasible set and grid sizes differ".into(),
            ));
        }
        let nodes = self.support_nodes(mu)?;
        if let Some(&(j, _)) = nodes.iter().find(|(j, _)| !omega.contains(*j)) {
            return Err(Error::InvalidInput(format!(
                "atom at x = {} lies outside omega",
                self.grid.node(j)
            )));
        }
        let resources = self.resources(&nodes);
        let mut on_omega = f64::NEG_INFINITY;
        let mut off_support = f64::NEG_INFINITY;
        for &j in omega.indices() {
            let g = self.table.growth(&resources, j);
            on_omega = on_omega.max(g);
            if !nodes.iter().any(|&(s, _)| s == j) {
                off_support = off_support.max(g);
            }
        }
        let residual = nodes
            .iter()
            .map(|&(j, _)| self.table.growth(&resources, j).abs())
            .fold(0.0, f64::max);
        Ok(EquilibriumCertificate {
            measure: mu.clone(),
            support: nodes.iter().map(|&(j, _)| j).collect(),
            entropy_value: self.entropy_nodes(&nodes),
            degenerate: self.is_degenerate(&nodes, &resources),
            resources,
            max_violation_on_omega: on_omega,
            max_violation_off_support: off_support,
            max_residual_on_support: residual,
            cert_tol,
        })
    }

    fn is_degenerate(&self, nodes: &[(usize, f64)], resources: &[f64]) -> bool {
        let m = nodes.len();
        if m == 0 {
            return false;
        }
        if m > self.k() {
            return true;
        }
        let h = self.restricted_hessian(nodes, resources);
        let eig = h.symmetric_eigenvalues();
        let max = eig.iter().copied().fold(0.0, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        !(min > 1e-12 * max)
    }

    /// `H_ab = sum_i I_i^2 eta_i(x_a) eta_i(x_b)`, the Hessian of the entropy
    /// in the node weights.
    pub(crate) fn restricted_hessian(
        &self,
        nodes: &[(usize, f64)],
        resources: &[f64],
    ) -> DMatrix<f64> {
        let m = nodes.len();
        DMatrix::from_fn(m, m, |a, b| {
            let ea = self.table.at(nodes[a].0);
            let eb = self.table.at(nodes[b].0);
            (0..self.k())
                .map(|i| resources[i] * resources[i] * ea[i] * eb[i])
                .sum()
        })
    }
}

/// `bar I_i(mu) = 1 / (1 + int eta_i d mu)`.
pub fn bar_resources(mu: &DiscreteMeasure, model: &ResourceModel) -> ResourceVector {
    let loads: Vec<f64> = (0..model.k())
        .map(|i| {
            mu.atoms()
                .iter()
                .map(|a| a.weight * model.eta(i, a.x))
                .sum()
        })
        .collect();
    ResourceVector::from_loads(&loads)
}

/// `L(nu) = -sum_i log(1 + int eta_i d nu) + int d nu`.
pub fn entropy(mu: &DiscreteMeasure, model: &ResourceModel) -> f64 {
    let mass = mu.total_mass();
    let logs: f64 = (0..model.k())
        .map(|i| {
            mu.atoms()
                .iter()
                .map(|a| a.weight * model.eta(i, a.x))
                .sum::<f64>()
                .ln_1p()
        })
        .sum();
    mass - logs
}

/// Largest total mass compatible with `L(nu) <= level`, from the coercivity
/// bound `L(nu) >= m - sum_i log(1 + eta_max_i m)`.
pub fn mass_bound(level: f64, eta_max: &[f64]) -> f64 {
    let lower = |m: f64| m - eta_max.iter().map(|e| (e * m).ln_1p()).sum::<f64>();
    let mut hi = 1.0;
    while lower(hi) <= level {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    // lower() is convex with lower(0) = 0, so the crossing above the
    // minimizer is unique.
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lower(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
