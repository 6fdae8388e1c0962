use crate::error::{Error, Result};
use crate::metastable::feasible::FeasibleSet;
use crate::metastable::landscape::{EquilibriumCertificate, Landscape, DEFAULT_CERT_TOL};
use crate::metastable::measure::{DiscreteMeasure, DEFAULT_PRUNE_TOL};

/// Nonnegative weights on the nodes of `omega` (aligned with `omega.indices()`).
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaField {
    omega: FeasibleSet,
    weights: Vec<f64>,
}

impl OmegaField {
    pub fn new(omega: FeasibleSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != omega.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for a {}-node feasible set",
                weights.len(),
                omega.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "field weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { omega, weights })
    }

    /// Total mass `mass`, spread evenly over `omega`.
    pub fn uniform(omega: FeasibleSet, mass: f64) -> Self {
        let w = if omega.is_empty() {
            0.0
        } else {
            mass / omega.len() as f64
        };
        let weights = vec![w; omega.len()];
        Self { omega, weights }
    }

    pub fn omega(&self) -> &FeasibleSet {
        &self.omega
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(node, weight)` pairs with positive weight.
    pub fn nodes(&self) -> Vec<(usize, f64)> {
        self.omega
            .indices()
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&j, &w)| (j, w))
            .collect()
    }

    pub fn to_measure(&self, land: &Landscape, prune_tol: f64) -> DiscreteMeasure {
        DiscreteMeasure::from_nodes(land.grid(), &self.nodes(), prune_tol)
    }
}

/// Entropy of a node field.
pub fn entropy_field(field: &OmegaField, land: &Landscape) -> f64 {
    land.entropy_nodes(&field.nodes())
}

/// Growth `sum_i bar I_i(nu) eta_i - 1` at each node of `omega`.
pub(crate) fn growth_on_omega(field: &OmegaField, land: &Landscape) -> Vec<f64> {
    let resources = land.resources(&field.nodes());
    field
        .omega
        .indices()
        .iter()
        .map(|&j| land.table().growth(&resources, j))
        .collect()
}

fn multiplicative_update(field: &OmegaField, growth: &[f64], dt: f64) -> OmegaField {
    let weights = field
        .weights
        .iter()
        .zip(growth)
        .map(|(w, g)| if *w > 0.0 { w * (dt * g).exp() } else { 0.0 })
        .collect();
    OmegaField {
        omega: field.omega.clone(),
        weights,
    }
}

/// One exponential step `nu <- nu exp(dt (sum_i bar I_i(nu) eta_i - 1))` of
/// the replicator flow; positivity is preserved for every `dt`.
pub fn replicator_step(field: &OmegaField, land: &Landscape, dt: f64) -> Result<OmegaField> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let g = growth_on_omega(field, land);
    Ok(multiplicative_update(field, &g, dt))
}

#[derive(Debug, Clone)]
pub struct ReplicatorOptions {
    pub cert_tol: f64,
    pub prune_tol: f64,
    pub dt_initial: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    pub max_time: f64,
    /// Keep the entropy after every accepted step.
    pub record_entropy: bool,
}

impl Default for ReplicatorOptions {
    fn default() -> Self {
        Self {
            cert_tol: DEFAULT_CERT_TOL,
            prune_tol: DEFAULT_PRUNE_TOL,
            dt_initial: 0.5,
            dt_max: 64.0,
            max_steps: 5_000_000,
            max_time: 1e9,
            record_entropy: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplicatorRun {
    pub field: OmegaField,
    pub certificate: EquilibriumCertificate,
    pub time: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Entropy at t = 0 and after each accepted step, when recorded.
    pub entropy: Vec<f64>,
}

/// Integrates the replicator flow with the exponential update until the
/// growth on `{nu > prune_tol}` is below `cert_tol`.
///
/// A step is accepted only if the entropy does not increase (up to rounding);
/// rejected steps halve `dt`, accepted ones let it grow by 25 %.
pub fn integrate_replicator(
    initial: OmegaField,
    land: &Landscape,
    opts: &ReplicatorOptions,
) -> Result<ReplicatorRun> {
    let mut field = initial;
    let mut dt = opts.dt_initial;
    let mut time = 0.0;
    let mut steps = 0;
    let mut rejected = 0;
    let mut level = entropy_field(&field, land);
    let mut history = Vec::new();
    if opts.record_entropy {
        history.push(level);
    }

    let finish = |field: OmegaField, time, steps, rejected, entropy| -> Result<ReplicatorRun> {
        let mu = field.to_measure(land, opts.prune_tol);
        let certificate = land.certify(&mu, field.omega(), opts.cert_tol)?;
        Ok(ReplicatorRun {
            field,
            certificate,
            time,
            steps,
            rejected_steps: rejected,
            entropy,
        })
    };

    loop {
        let growth = growth_on_omega(&field, land);
        let mut residual: f64 = 0.0;
        let mut pruned_mass = 0.0;
        let mut violation = f64::NEG_INFINITY;
        for (w, g) in field.weights.iter().zip(&growth) {
            violation = violation.max(*g);
            if *w > opts.prune_tol {
                residual = residual.max(g.abs());
            } else {
                pruned_mass += w;
            }
        }
        if residual < opts.cert_tol
            && violation <= opts.cert_tol
            && pruned_mass < 0.1 * opts.cert_tol
        {
            return finish(field, time, steps, rejected, history);
        }
        if steps >= opts.max_steps || time >= opts.max_time || dt < 1e-14 {
            let best = finish(field, time, steps, rejected, Vec::new())?.certificate;
            return Err(Error::NonConvergence {
                iterations: steps,
                residual,
                at_time: None,
                best: Some(Box::new(best)),
            });
        }

        let candidate = multiplicative_update(&field, &growth, dt);
        let next_level = entropy_field(&candidate, land);
        if next_level <= level + 1e-14 * level.abs().max(1.0) {
            field = candidate;
            level = next_level;
            time += dt;
            steps += 1;
            if opts.record_entropy {
                history.push(level);
            }
            dt = (dt * 1.25).min(opts.dt_max);
        } else {
            rejected += 1;
            dt *= 0.5;
        }
    }
}
