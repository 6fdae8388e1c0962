//! Direct solver for the small-mutation equation written for the
//! log-density `phi = eps log u`:
//!
//! `d phi / dt = sum_i I_i eta_i - 1 + H_eps(phi)`,
//!
//! with the resources recomputed from `exp(phi / eps)` at every stage. The
//! density itself is never stored; it only appears inside log-space sums.

mod audit;
mod profile;
mod solver;

pub use audit::{audit, AuditCheck, AuditConstants, AuditObservation, AuditReport};
pub use profile::{initial_profile, InitialProfile, DEFAULT_PROFILE_BARRIER};
pub(crate) use solver::output_times;
pub use solver::{
    run, step, EpsRunConfig, EpsSolver, EpsTrace, ResourceClosure, Rhs, RunStatus, StepExtremes,
    StepReport,
};
