//! Domain types shared by every solver: the trait grid, the mutation kernel
//! and its Hamiltonians, the growth functions and resources, and log-space
//! quadrature.

mod grid;
mod kernel;
pub mod quadrature;
mod resources;
mod state;
pub mod validate;

pub use grid::TraitGrid;
pub use kernel::{MutationKernel, DEFAULT_KERNEL_NODES, EXPONENT_GUARD};
pub use resources::{
    growth_rate, resource_response, resource_response_log, EtaTable, GrowthFunction, ResourceModel,
    ResourceVector, TabulatedFunction,
};
pub use state::{
    hamiltonian_eps, lipschitz_seminorm, log_mass, min_second_difference, LogDensityState,
    ScaledStencil,
};

use crate::error::Result;

/// `H(p) = int K(z) (exp(p z) - 1) dz`, the limit Hamiltonian.
pub fn hamiltonian(kernel: &MutationKernel, p: f64) -> Result<f64> {
    kernel.hamiltonian(p)
}
