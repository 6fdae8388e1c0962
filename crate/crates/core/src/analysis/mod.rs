//! Post-processing: Dirac locations and concentration of `u_eps`, the
//! comparison of `eps` runs with the limit run, and time regularity of the
//! limit resources.

mod continuity;
mod dirac;
mod sweep;

pub use continuity::{lebesgue_right_continuity, PiecewiseConstant};
pub use dirac::{concentration_width, dirac_basins, dirac_locate, Basin, DEFAULT_DIRAC_THRESHOLD};
pub use sweep::{compare_runs, fit_order, SweepReport, SweepRow, CONCENTRATION_FRACTION};
