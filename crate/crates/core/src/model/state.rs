use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::grid::TraitGrid;
use crate::model::kernel::{MutationKernel, EXPONENT_GUARD};
use crate::model::quadrature::log_weighted_sum_exp;

/// Log-density `phi = eps * log(u)` sampled on a grid.
///
/// `eps == 0` marks a limit object (the Hamilton-Jacobi solution), for which
/// no density is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDensityState {
    grid: TraitGrid,
    phi: Vec<f64>,
    eps: f64,
    t: f64,
}

impl LogDensityState {
    pub fn new(grid: TraitGrid, phi: Vec<f64>, eps: f64, t: f64) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "phi has {} samples for a {}-node grid",
                phi.len(),
                grid.len()
            )));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
        }
        if let Some(j) = phi.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "phi is not finite at node {j}"
            )));
        }
        Ok(Self { grid, phi, eps, t })
    }

    pub fn grid(&self) -> &TraitGrid {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn is_limit(&self) -> bool {
        self.eps == 0.0
    }

    pub fn into_phi(self) -> Vec<f64> {
        self.phi
    }

    pub fn max_phi(&self) -> f64 {
        self.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Density `u = exp(phi / eps)`; underflows to zero far from the maxima.
    pub fn density(&self) -> Result<Vec<f64>> {
        self.require_eps()?;
        Ok(self.phi.iter().map(|p| (p / self.eps).exp()).collect())
    }

    fn require_eps(&self) -> Result<()> {
        if self.is_limit() {
            return Err(Error::InvalidInput(
                "operation needs eps > 0, got a limit state".into(),
            ));
        }
        Ok(())
    }

    /// Discrete Lipschitz seminorm `max |phi_{j+1} - phi_j| / dx`.
    pub fn lipschitz(&self) -> f64 {
        lipschitz_seminorm(&self.phi, self.grid.dx())
    }

    /// Discrete semiconvexity `min (phi_{j+1} - 2 phi_j + phi_{j-1}) / dx^2`.
    pub fn semiconvexity(&self) -> f64 {
        min_second_difference(&self.phi, self.grid.dx())
    }
}

pub fn lipschitz_seminorm(phi: &[f64], dx: f64) -> f64 {
    phi.windows(2)
        .map(|w| (w[1] - w[0]).abs() / dx)
        .fold(0.0, f64::max)
}

pub fn min_second_difference(phi: &[f64], dx: f64) -> f64 {
    phi.windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (dx * dx))
        .fold(f64::INFINITY, f64::min)
}

/// `log int exp(phi / eps) dx` by trapezoid quadrature in log space.
pub fn log_mass(state: &LogDensityState) -> Result<f64> {
    state.require_eps()?;
    let exponents: Vec<f64> = state.phi.iter().map(|p| p / state.eps).collect();
    Ok(log_weighted_sum_exp(
        &state.grid.trapezoid_weights(),
        &exponents,
    ))
}

/// Kernel quadrature nodes expressed as fractional grid offsets `eps z_q / dx`.
#[derive(Debug, Clone)]
pub struct ScaledStencil {
    eps: f64,
    base: Vec<isize>,
    frac: Vec<f64>,
    weights: Vec<f64>,
}

impl ScaledStencil {
    pub fn new(kernel: &MutationKernel, eps: f64, dx: f64) -> Self {
        let mut base = Vec::new();
        let mut frac = Vec::new();
        let mut weights = Vec::new();
        for (&z, &w) in kernel.nodes().iter().zip(kernel.weights()) {
            if w == 0.0 {
                continue;
            }
            let s = eps * z / dx;
            let b = s.floor();
            base.push(b as isize);
            frac.push(s - b);
            weights.push(w);
        }
        Self {
            eps,
            base,
            frac,
            weights,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `H_eps(phi)` at node `j`.
    pub fn evaluate(&self, phi: &[f64], j: usize) -> Result<f64> {
        let n = phi.len() as isize;
        let pj = phi[j];
        let mut sum = 0.0;
        for ((&b, &f), &w) in self.base.iter().zip(&self.frac).zip(&self.weights) {
            let i0 = j as isize + b;
            let shifted = if i0 >= 0 && i0 + 1 < n {
                let i0 = i0 as usize;
                phi[i0] + f * (phi[i0 + 1] - phi[i0])
            } else if i0 < 0 {
                // Linear extrapolation with the left boundary slope.
                let pos = i0 as f64 + f;
                phi[0] + pos * (phi[1] - phi[0])
            } else {
                let last = (n - 1) as usize;
                let pos = (i0 - (n - 1)) as f64 + f;
                phi[last] + pos * (phi[last] - phi[last - 1])
            };
            let arg = (shifted - pj) / self.eps;
            if !(arg.abs() <= EXPONENT_GUARD) {
                return Err(Error::Range {
                    value: arg,
                    guard: EXPONENT_GUARD,
                    context: "H_eps increment (phi(x + eps z) - phi(x)) / eps",
                });
            }
            sum += w * arg.exp_m1();
        }
        Ok(sum)
    }

    /// `H_eps(phi)` at every node, data-parallel over nodes.
    pub fn evaluate_field(&self, phi: &[f64]) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Ok(vec![0.0; phi.len()]);
        }
        (0..phi.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|j| self.evaluate(phi, j))
            .collect()
    }
}

/// `H_eps(phi)(x_j) = int K(z) (exp((phi(x_j + eps z) - phi(x_j)) / eps) - 1) dz`,
/// with off-grid values of `phi` linearly interpolated (and linearly
/// extrapolated with the one-sided boundary slope outside the grid).
pub fn hamiltonian_eps(state: &LogDensityState, kernel: &MutationKernel, j: usize) -> Result<f64> {
    state.require_eps()?;
    if j >= state.grid.len() {
        return Err(Error::InvalidInput(format!(
            "node {j} outside a {}-node grid",
            state.grid.len()
        )));
    }
    ScaledStencil::new(kernel, state.eps, state.grid.dx()).evaluate(&state.phi, j)
}
