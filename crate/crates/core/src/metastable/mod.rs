//! Metastable measures: minimizers of the entropy
//! `L(nu) = int dnu - sum_i log(1 + int eta_i dnu)` over measures carried by a
//! closed set `omega`, their equilibrium certificates, and the replicator
//! flow that decreases `L`.

mod feasible;
mod landscape;
mod measure;
mod minimize;
mod replicator;

pub use feasible::FeasibleSet;
pub use landscape::{
    bar_resources, entropy, mass_bound, EquilibriumCertificate, Landscape, DEFAULT_CERT_TOL,
};
pub use measure::{Atom, DiscreteMeasure, DEFAULT_PRUNE_TOL};
pub use minimize::{minimize_entropy, MinimizeOptions};
pub use replicator::{
    entropy_field, integrate_replicator, replicator_step, OmegaField, ReplicatorOptions,
    ReplicatorRun,
};
