use std::fmt;

use crate::error::{Error, Result};
use crate::model::TraitGrid;

/// Default weight below which atoms are dropped.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub weight: f64,
}

/// Finite nonnegative measure `sum_l alpha_l delta_{x_l}` with strictly
/// increasing locations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms
            .iter()
            .any(|a| !a.x.is_finite() || !a.weight.is_finite() || a.weight < 0.0)
        {
            return Err(Error::InvalidInput(
                "atoms need finite locations and nonnegative finite weights".into(),
            ));
        }
        if atoms.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(Error::InvalidInput(
                "atom locations must be strictly increasing".into(),
            ));
        }
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(x: f64, weight: f64) -> Result<Self> {
        Self::new(vec![Atom { x, weight }])
    }

    /// Measure carried by grid nodes; entries at or below `prune_tol` are dropped.
    pub fn from_nodes(grid: &TraitGrid, weights: &[(usize, f64)], prune_tol: f64) -> Self {
        let mut w: Vec<(usize, f64)> = weights
            .iter()
            .copied()
            .filter(|&(_, a)| a > prune_tol)
            .collect();
        w.sort_by_key(|&(j, _)| j);
        let mut atoms: Vec<Atom> = Vec::with_capacity(w.len());
        let mut last = None;
        for (j, a) in w {
            if last == Some(j) {
                atoms.last_mut().expect("previous atom").weight += a;
            } else {
                atoms.push(Atom {
                    x: grid.node(j),
                    weight: a,
                });
            }
            last = Some(j);
        }
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .copied()
                .filter(|a| a.weight > tol)
                .collect(),
        }
    }

    /// Merges chains of atoms closer than `radius` into one atom at their
    /// mass-weighted centroid. The result may sit off-grid.
    pub fn merged(&self, radius: f64) -> Self {
        let mut out: Vec<Atom> = Vec::new();
        let mut cluster: Vec<Atom> = Vec::new();
        let flush = |cluster: &mut Vec<Atom>, out: &mut Vec<Atom>| {
            if cluster.is_empty() {
                return;
            }
            let w: f64 = cluster.iter().map(|a| a.weight).sum();
            let x = if w > 0.0 {
                cluster.iter().map(|a| a.weight * a.x).sum::<f64>() / w
            } else {
                cluster[0].x
            };
            out.push(Atom { x, weight: w });
            cluster.clear();
        };
        for a in &self.atoms {
            if let Some(prev) = cluster.last() {
                if a.x - prev.x > radius {
                    flush(&mut cluster, &mut out);
                }
            }
            cluster.push(*a);
        }
        flush(&mut cluster, &mut out);
        Self { atoms: out }
    }
}

impl fmt::Display for DiscreteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "0");
        }
        for (l, a) in self.atoms.iter().enumerate() {
            if l > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:.6} delta({:.6})", a.weight, a.x)?;
        }
        Ok(())
    }
}
