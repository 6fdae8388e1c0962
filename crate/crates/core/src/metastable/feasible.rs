use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::TraitGrid;

/// Closed subset `omega` of the trait axis, stored as sorted grid indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSet {
    n: usize,
    indices: Vec<usize>,
}

impl FeasibleSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            indices: Vec::new(),
        }
    }

    pub fn all(n: usize) -> Self {
        Self {
            n,
            indices: (0..n).collect(),
        }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            n: mask.len(),
            indices: mask
                .iter()
                .enumerate()
                .filter_map(|(j, &m)| m.then_some(j))
                .collect(),
        }
    }

    pub fn from_indices(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.last().is_some_and(|&j| j >= n) {
            return Err(Error::InvalidInput(format!(
                "feasible index outside a {n}-node grid"
            )));
        }
        Ok(Self { n, indices })
    }

    /// Nodes with `a <= x <= b` (to rounding).
    pub fn interval(grid: &TraitGrid, a: f64, b: f64) -> Self {
        let tol = 1e-9 * grid.dx();
        Self {
            n: grid.len(),
            indices: (0..grid.len())
                .filter(|&j| {
                    let x = grid.node(j);
                    x >= a - tol && x <= b + tol
                })
                .collect(),
        }
    }

    pub fn grid_len(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &j in &self.indices {
            m[j] = true;
        }
        m
    }

    /// Maximal runs of consecutive indices.
    pub fn components(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut iter = self.indices.iter().copied();
        let Some(first) = iter.next() else {
            return out;
        };
        let (mut start, mut prev) = (first, first);
        for j in iter {
            if j != prev + 1 {
                out.push(start..prev + 1);
                start = j;
            }
            prev = j;
        }
        out.push(start..prev + 1);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_split_on_gaps() {
        let s = FeasibleSet::from_indices(10, vec![1, 2, 3, 6, 7, 9]).unwrap();
        assert_eq!(s.components(), vec![1..4, 6..8, 9..10]);
        assert!(s.contains(6));
        assert!(!s.contains(5));
        assert!(FeasibleSet::empty(4).components().is_empty());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(FeasibleSet::from_indices(3, vec![0, 3]).is_err());
    }
}
