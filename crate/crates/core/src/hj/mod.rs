//! Limit dynamics: the Hamilton-Jacobi equation
//! `d phi / dt = sum_i I_i eta_i - 1 + H(d phi / dx)` under the constraint
//! `max phi = 0`, with `I` taken from the metastable measure of the zero set,
//! and the `psi` form used to cross-check it.

mod limit;
mod psi;
mod scheme;

pub use limit::{
    limit_step, solve_limit, LimitClosure, LimitRunConfig, LimitSolver, LimitStepRecord,
    LimitTrace, ResourceJump, StepClosure,
};
pub use psi::{psi_solve, psi_solve_steps, PsiTrace};
pub use scheme::{godunov_hamiltonian, numerical_hamiltonian, zero_set, FluxScheme};
