use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::metastable::feasible::FeasibleSet;
use crate::metastable::landscape::{
    mass_bound, EquilibriumCertificate, Landscape, DEFAULT_CERT_TOL,
};
use crate::metastable::measure::{DiscreteMeasure, DEFAULT_PRUNE_TOL};
use crate::metastable::replicator::{entropy_field, growth_on_omega, OmegaField};

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub cert_tol: f64,
    pub prune_tol: f64,
    /// Budget for Newton iterations of the polishing phase.
    pub max_iters: usize,
    /// Mirror-descent iterations used to locate the support.
    pub mirror_iters: usize,
    /// Mass of the uniform starting point of the mirror descent.
    pub initial_mass: f64,
    /// Previous minimizer; when set, its atoms (snapped to the nearest node of
    /// `omega`) seed the polishing phase and mirror descent is skipped.
    pub warm_start: Option<DiscreteMeasure>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            cert_tol: DEFAULT_CERT_TOL,
            prune_tol: DEFAULT_PRUNE_TOL,
            max_iters: 10_000,
            mirror_iters: 200,
            initial_mass: 1.0,
            warm_start: None,
        }
    }
}

/// Minimizes `L(nu) = int dnu - sum_i log(1 + int eta_i dnu)` over nonnegative
/// measures carried by the nodes of `omega`, and certifies the result.
///
/// Mirror descent (multiplicative weights) first finds the region carrying
/// the mass; the minimizer is then polished by column generation: a
/// projected Newton solve on the current support, after which the node of
/// `omega` with the largest growth enters, until the growth is nonpositive
/// on `omega`. An empty `omega` yields the null measure and `I = 1`.
pub fn minimize_entropy(
    land: &Landscape,
    omega: &FeasibleSet,
    opts: &MinimizeOptions,
) -> Result<EquilibriumCertificate> {
    if omega.grid_len() != land.grid().len() {
        return Err(Error::InvalidInput(
            "feasible set and grid sizes differ".into(),
        ));
    }
    if !(opts.cert_tol > 0.0) || !(opts.prune_tol >= 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    if omega.is_empty() {
        return land.certify(&DiscreteMeasure::empty(), omega, opts.cert_tol);
    }

    let mut nodes = match &opts.warm_start {
        Some(mu) if !mu.is_empty() => snap_to_omega(land, omega, mu),
        _ => mirror_candidates(land, omega, opts)?,
    };
    let start_level = land.entropy_nodes(&nodes).max(0.0);
    let eta_max: Vec<f64> = (0..land.k())
        .map(|i| {
            omega
                .indices()
                .iter()
                .map(|&j| land.table().eta(i, j))
                .fold(0.0, f64::max)
        })
        .collect();
    let bound = mass_bound(start_level, &eta_max);

    let inner_tol = 1e-2 * opts.cert_tol;
    let mut iters = 0;
    loop {
        restricted_solve(land, &mut nodes, inner_tol, &mut iters, opts.max_iters)?;
        nodes.retain(|&(_, w)| w > 0.0);

        let resources = land.resources(&nodes);
        let (j_star, g_star) = omega
            .indices()
            .iter()
            .map(|&j| (j, land.table().growth(&resources, j)))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, c| {
                if c.1 > acc.1 {
                    c
                } else {
                    acc
                }
            });
        if g_star <= inner_tol || nodes.iter().any(|&(j, _)| j == j_star) {
            break;
        }
        nodes.push((j_star, 0.0));
        iters += 1;
        if iters >= opts.max_iters {
            break;
        }
    }

    let mu = DiscreteMeasure::from_nodes(land.grid(), &nodes, opts.prune_tol);
    let cert = land.certify(&mu, omega, opts.cert_tol)?;
    if mu.total_mass() > bound * (1.0 + 1e-9) + 1e-12 || !cert.passed() {
        return Err(Error::NonConvergence {
            iterations: iters,
            residual: cert
                .max_violation_on_omega
                .max(cert.max_residual_on_support),
            at_time: None,
            best: Some(Box::new(cert)),
        });
    }
    Ok(cert)
}

fn snap_to_omega(land: &Landscape, omega: &FeasibleSet, mu: &DiscreteMeasure) -> Vec<(usize, f64)> {
    let idx = omega.indices();
    let mut nodes: Vec<(usize, f64)> = Vec::new();
    for a in mu.atoms() {
        let j = land.grid().nearest_index(a.x);
        let pos = idx.partition_point(|&i| i < j);
        let snapped = match (pos.checked_sub(1).map(|p| idx[p]), idx.get(pos).copied()) {
            (Some(lo), Some(hi)) => {
                if j - lo <= hi - j {
                    lo
                } else {
                    hi
                }
            }
            (Some(lo), None) => lo,
            (None, Some(hi)) => hi,
            (None, None) => continue,
        };
        match nodes.iter_mut().find(|(s, _)| *s == snapped) {
            Some(entry) => entry.1 += a.weight,
            None => nodes.push((snapped, a.weight)),
        }
    }
    nodes
}

/// Multiplicative-weights descent from uniform mass, then one candidate per
/// local maximum of the weights carrying the mass of its ascent basin.
fn mirror_candidates(
    land: &Landscape,
    omega: &FeasibleSet,
    opts: &MinimizeOptions,
) -> Result<Vec<(usize, f64)>> {
    let mut field = OmegaField::uniform(omega.clone(), opts.initial_mass);
    let mut level = entropy_field(&field, land);
    let mut step = 1.0;
    for _ in 0..opts.mirror_iters {
        let g = growth_on_omega(&field, land);
        let mut accepted = false;
        for _ in 0..60 {
            let w: Vec<f64> = field
                .weights()
                .iter()
                .zip(&g)
                .map(|(w, g)| w * (step * g).exp())
                .collect();
            let cand = OmegaField::new(omega.clone(), w)?;
            let l = entropy_field(&cand, land);
            if l <= level {
                field = cand;
                level = l;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let w = field.weights();
    let idx = omega.indices();
    let total: f64 = w.iter().sum();
    let mut out: Vec<(usize, f64)> = Vec::new();
    let mut pos = 0;
    for comp in omega.components() {
        let len = comp.len();
        let local = &w[pos..pos + len];
        let mut basin = vec![0.0; len];
        for s in 0..len {
            let mut p = s;
            loop {
                let left = (p > 0 && local[p - 1] > local[p]).then(|| p - 1);
                let right = (p + 1 < len && local[p + 1] > local[p]).then(|| p + 1);
                p = match (left, right) {
                    (Some(l), Some(r)) => {
                        if local[l] >= local[r] {
                            l
                        } else {
                            r
                        }
                    }
                    (Some(l), None) => l,
                    (None, Some(r)) => r,
                    (None, None) => break,
                };
            }
            basin[p] += local[s];
        }
        for (s, &m) in basin.iter().enumerate() {
            if m > 1e-8 * total {
                out.push((idx[pos + s], m));
            }
        }
        pos += len;
    }
    Ok(out)
}

/// Projected Newton on the weights of `nodes` until the KKT residual drops
/// below `tol` (or no further decrease is representable).
fn restricted_solve(
    land: &Landscape,
    nodes: &mut [(usize, f64)],
    tol: f64,
    iters: &mut usize,
    max_iters: usize,
) -> Result<()> {
    if nodes.is_empty() {
        return Ok(());
    }
    loop {
        let resources = land.resources(nodes);
        let grad: Vec<f64> = nodes
            .iter()
            .map(|&(j, _)| -land.table().growth(&resources, j))
            .collect();
        let kkt = nodes
            .iter()
            .zip(&grad)
            .map(|(&(_, w), &g)| if w > 0.0 { g.abs() } else { (-g).max(0.0) })
            .fold(0.0, f64::max);
        if kkt <= tol {
            return Ok(());
        }
        if *iters >= max_iters {
            return Err(Error::NonConvergence {
                iterations: *iters,
                residual: kkt,
                at_time: None,
                best: None,
            });
        }
        *iters += 1;

        // Nodes pinned at the bound: small weight and pushed outwards.
        let eps_act = kkt.min(1e-3);
        let free: Vec<usize> = (0..nodes.len())
            .filter(|&a| !(nodes[a].1 <= eps_act && grad[a] > 0.0))
            .collect();
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        if !free.is_empty() {
            let sub: Vec<(usize, f64)> = free.iter().map(|&a| nodes[a]).collect();
            let mut h = land.restricted_hessian(&sub, &resources);
            let reg = 1e-10 * h.trace().max(1e-300);
            for a in 0..free.len() {
                h[(a, a)] += reg;
            }
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&a| -grad[a]));
            if let Some(chol) = h.cholesky() {
                let sol = chol.solve(&rhs);
                for (f, &a) in free.iter().enumerate() {
                    d[a] = sol[f];
                }
            }
        }
        let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
        let cap = 10.0 * (1.0 + mass);
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax > cap {
            for v in &mut d {
                *v *= cap / dmax;
            }
        }

        let level = land.entropy_nodes(nodes);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..80 {
            let trial: Vec<(usize, f64)> = nodes
                .iter()
                .zip(&d)
                .map(|(&(j, w), dv)| (j, (w + t * dv).max(0.0)))
                .collect();
            let decrease: f64 = trial
                .iter()
                .zip(nodes.iter())
                .zip(&grad)
                .map(|((n, o), g)| g * (n.1 - o.1))
                .sum();
            if land.entropy_nodes(&trial) <= level + 1e-4 * decrease && decrease < 0.0 {
                nodes.copy_from_slice(&trial);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return Ok(());
        }
    }
}
