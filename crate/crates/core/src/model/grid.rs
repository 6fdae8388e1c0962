use crate::error::{Error, Result};

/// Uniform discretization of the trait axis.
///
/// Nodes are `x_min + j * dx` for `j = 0..n`, with `dx = (x_max - x_min) / (n - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitGrid {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl TraitGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 3 nodes, got {n}"
            )));
        }
        if x_max <= x_min {
            return Err(Error::InvalidInput(format!(
                "grid bounds out of order: [{x_min}, {x_max}]"
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Ok(Self {
            x_min,
            x_max,
            n,
            dx,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Node `j`. Evaluated as a convex combination of the bounds so that the
    /// end nodes are exact and symmetric grids have exactly mirrored nodes.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        let m = (self.n - 1) as f64;
        let j = j as f64;
        (self.x_min * (m - j) + self.x_max * j) / m
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node at `x`, if `x` sits on a node (to `1e-9 * dx`).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.x_min) / self.dx;
        let j = s.round();
        if j < 0.0 || j > (self.n - 1) as f64 {
            return None;
        }
        if (s - j).abs() <= 1e-9 {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.dx).round();
        s.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Trapezoid quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    /// Index range of the central `fraction` of the grid (the comparison window).
    pub fn central_window(&self, fraction: f64) -> std::ops::Range<usize> {
        let fraction = fraction.clamp(0.0, 1.0);
        let half = self.length() * fraction * 0.5;
        let mid = 0.5 * (self.x_min + self.x_max);
        let lo = ((mid - half - self.x_min) / self.dx - 1e-9).ceil().max(0.0) as usize;
        let hi = ((mid + half - self.x_min) / self.dx + 1e-9).floor() as usize;
        lo..(hi.min(self.n - 1) + 1)
    }

    /// Same grid, up to rounding in the bounds.
    pub fn matches(&self, other: &TraitGrid) -> bool {
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.dx.max(1.0)
            && (self.x_max - other.x_max).abs() <= 1e-12 * self.dx.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_exact_multiples() {
        let g = TraitGrid::new(-10.0, 10.0, 1601).unwrap();
        assert_eq!(g.dx(), 0.0125);
        assert_eq!(g.node(800), 0.0);
        assert_eq!(g.node(0), -10.0);
        assert_eq!(g.node(1600), 10.0);
        assert_eq!(g.index_of(0.5), Some(840));
        assert_eq!(g.index_of(0.50001), None);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TraitGrid::new(0.0, 1.0, 2).is_err());
        assert!(TraitGrid::new(1.0, 1.0, 10).is_err());
        assert!(TraitGrid::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn central_window_covers_eighty_percent() {
        let g = TraitGrid::new(-10.0, 10.0, 1601).unwrap();
        let w = g.central_window(0.8);
        assert_eq!(g.node(w.start), -8.0);
        assert_eq!(g.node(w.end - 1), 8.0);
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = TraitGrid::new(-1.0, 3.0, 11).unwrap();
        let w = g.trapezoid_weights();
        let s: f64 = g
            .nodes()
            .iter()
            .zip(&w)
            .map(|(x, w)| (2.0 * x + 1.0) * w)
            .sum();
        assert!((s - 12.0).abs() < 1e-12);
    }
}
