use std::ops::Range;

use crate::error::{Error, Result};
use crate::metastable::{Atom, DiscreteMeasure};
use crate::model::quadrature::log_weighted_sum_exp;
use crate::model::LogDensityState;

/// Maxima of `phi` below `-DEFAULT_DIRAC_THRESHOLD` are not atoms.
pub const DEFAULT_DIRAC_THRESHOLD: f64 = 1.0;

/// Ascent basin of one located atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Basin {
    /// Node of the maximum (left node of a flat top).
    pub peak: usize,
    /// Nodes attributed to the atom; contiguous.
    pub nodes: Range<usize>,
    pub mass: f64,
}

/// Steepest-ascent target of every node; plateaus resolve to their left end.
fn ascent_targets(phi: &[f64]) -> Vec<usize> {
    let n = phi.len();
    let step = |j: usize| -> usize {
        let left = (j > 0 && phi[j - 1] > phi[j]).then(|| j - 1);
        let right = (j + 1 < n && phi[j + 1] > phi[j]).then(|| j + 1);
        match (left, right) {
            (Some(l), Some(r)) => {
                if phi[l] >= phi[r] {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => {
                // flat tops collapse onto their leftmost node
                if j > 0 && phi[j - 1] == phi[j] {
                    j - 1
                } else {
                    j
                }
            }
        }
    };
    let mut target: Vec<usize> = (0..n).map(step).collect();
    for j in 0..n {
        let mut p = j;
        while target[p] != p {
            p = target[p];
        }
        target[j] = p;
    }
    target
}

/// Watershed basins of the maxima of `phi` that reach `-threshold`; the
/// basins of lower maxima are merged into the nearest retained peak, so the
/// basin masses add up to the total mass.
pub fn dirac_basins(state: &LogDensityState, threshold: f64) -> Result<Vec<Basin>> {
    if state.is_limit() {
        return Err(Error::InvalidInput(
            "dirac_locate needs a state with eps > 0".into(),
        ));
    }
    let phi = state.phi();
    let n = phi.len();
    let target = ascent_targets(phi);
    let mut peaks: Vec<usize> = (0..n).filter(|&j| target[j] == j).collect();
    peaks.retain(|&p| phi[p] >= -threshold);
    if peaks.is_empty() {
        return Ok(Vec::new());
    }
    // Owner of each node: its own peak if retained, else the nearest retained peak.
    let owner: Vec<usize> = (0..n)
        .map(|j| {
            let t = target[j];
            if peaks.binary_search(&t).is_ok() {
                t
            } else {
                *peaks
                    .iter()
                    .min_by(|a, b| a.abs_diff(t).cmp(&b.abs_diff(t)))
                    .expect("nonempty")
            }
        })
        .collect();

    let w = state.grid().trapezoid_weights();
    let eps = state.eps();
    let mut basins = Vec::with_capacity(peaks.len());
    let mut start = 0;
    for j in 1..=n {
        if j == n || owner[j] != owner[start] {
            let exps: Vec<f64> = phi[start..j].iter().map(|p| p / eps).collect();
            let mass = log_weighted_sum_exp(&w[start..j], &exps).exp();
            match basins.last_mut() {
                // a node run can split when nearest-peak ownership interleaves
                Some(Basin {
                    peak,
                    nodes,
                    mass: m,
                }) if *peak == owner[start] => {
                    nodes.end = j;
                    *m += mass;
                }
                _ => basins.push(Basin {
                    peak: owner[start],
                    nodes: start..j,
                    mass,
                }),
            }
            start = j;
        }
    }
    Ok(basins)
}

/// Atoms at the retained maxima of `phi`, each weighted by the `u` mass of
/// its basin.
pub fn dirac_locate(state: &LogDensityState, threshold: f64) -> Result<DiscreteMeasure> {
    let basins = dirac_basins(state, threshold)?;
    DiscreteMeasure::new(
        basins
            .iter()
            .map(|b| Atom {
                x: state.grid().node(b.peak),
                weight: b.mass,
            })
            .collect(),
    )
}

/// `int` over `[c - h, c + h]` (clipped to the nodes in `range`) of the
/// piecewise-linear interpolant of `u`.
fn window_mass(x: &[f64], u: &[f64], range: &Range<usize>, c: f64, h: f64) -> f64 {
    let (a, b) = (c - h, c + h);
    let mut total = 0.0;
    for j in range.start..range.end.saturating_sub(1) {
        let (x0, x1) = (x[j], x[j + 1]);
        let lo = x0.max(a);
        let hi = x1.min(b);
        if hi <= lo {
            continue;
        }
        let at = |t: f64| u[j] + (u[j + 1] - u[j]) * (t - x0) / (x1 - x0);
        total += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    total
}

/// Half-width of the smallest window centred at `center` that holds
/// `fraction` of the `u` mass of the nodes in `range` (interpolated linearly).
pub fn concentration_width(
    state: &LogDensityState,
    center: f64,
    range: Range<usize>,
    fraction: f64,
) -> Result<f64> {
    if state.is_limit() {
        return Err(Error::InvalidInput(
            "concentration width needs a state with eps > 0".into(),
        ));
    }
    if !(fraction > 0.0 && fraction < 1.0) || range.len() < 2 || range.end > state.grid().len() {
        return Err(Error::InvalidInput(
            "fraction must lie in (0, 1) and the range must hold two nodes".into(),
        ));
    }
    let phi = &state.phi()[range.clone()];
    let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut u = vec![0.0; state.grid().len()];
    for j in range.clone() {
        u[j] = ((state.phi()[j] - top) / state.eps()).exp();
    }
    let x = state.grid().nodes();
    let total = window_mass(&x, &u, &range, center, f64::INFINITY);
    let goal = fraction * total;
    let mut lo = 0.0;
    let mut hi = (center - x[range.start])
        .abs()
        .max((x[range.end - 1] - center).abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if window_mass(&x, &u, &range, center, mid) >= goal {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_mass, TraitGrid};

    #[test]
    fn single_peak_carries_all_mass() {
        let g = TraitGrid::new(-5.0, 5.0, 1001).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|x| -(x - 0.3) * (x - 0.3)).collect();
        let s = LogDensityState::new(g, phi, 0.1, 0.0).unwrap();
        let mu = dirac_locate(&s, DEFAULT_DIRAC_THRESHOLD).unwrap();
        assert_eq!(mu.len(), 1);
        assert!((mu.atoms()[0].x - 0.3).abs() < 1e-12);
        let m = log_mass(&s).unwrap().exp();
        assert!((mu.total_mass() - m).abs() < 1e-10 * m);
    }

    #[test]
    fn low_maxima_merge_into_the_nearest_peak() {
        let g = TraitGrid::new(-5.0, 5.0, 1001).unwrap();
        let phi: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| (-x * x).max(-3.0 - (x - 3.0) * (x - 3.0)))
            .collect();
        let s = LogDensityState::new(g, phi, 0.2, 0.0).unwrap();
        let basins = dirac_basins(&s, 1.0).unwrap();
        assert_eq!(basins.len(), 1);
        assert_eq!(basins[0].nodes, 0..1001);
    }
}
