use crate::error::{Error, Result};
use crate::model::{LogDensityState, TraitGrid};

/// `phi0` must stay below `-DEFAULT_PROFILE_BARRIER` at both ends of the grid.
pub const DEFAULT_PROFILE_BARRIER: f64 = 5.0;

/// Named initial log-density profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// `1 - sqrt(1 + (x - center)^2)`.
    Well { center: f64 },
    /// Pointwise max of two wells at `center -/+ offset`.
    DoubleWell { center: f64, offset: f64 },
    /// Tabulated values, linearly interpolated and shifted so that `max = 0`.
    Custom { x: Vec<f64>, phi: Vec<f64> },
}

impl InitialProfile {
    pub fn name(&self) -> &'static str {
        match self {
            InitialProfile::Well { .. } => "well",
            InitialProfile::DoubleWell { .. } => "double_well",
            InitialProfile::Custom { .. } => "custom",
        }
    }
}

fn well(x: f64, c: f64) -> f64 {
    let d = x - c;
    // 1 - sqrt(1 + d^2) without cancellation near the bottom
    -d * d / (1.0 + (1.0 + d * d).sqrt())
}

/// Samples `profile` on `grid` as a state at `t = 0`.
///
/// The result has `max phi0 = 0`; the end values must lie below
/// `-DEFAULT_PROFILE_BARRIER`, otherwise the truncation of the trait axis is
/// too tight for the profile and a configuration error is returned.
pub fn initial_profile(
    profile: &InitialProfile,
    grid: &TraitGrid,
    eps: f64,
) -> Result<LogDensityState> {
    let nodes = grid.nodes();
    let phi: Vec<f64> = match profile {
        InitialProfile::Well { center } => {
            if !center.is_finite() {
                return Err(Error::Config("well center must be finite".into()));
            }
            nodes.iter().map(|&x| well(x, *center)).collect()
        }
        InitialProfile::DoubleWell { center, offset } => {
            if !center.is_finite() || !(*offset > 0.0) || !offset.is_finite() {
                return Err(Error::Config(
                    "double well needs a finite center and a positive offset".into(),
                ));
            }
            nodes
                .iter()
                .map(|&x| well(x, center - offset).max(well(x, center + offset)))
                .collect()
        }
        InitialProfile::Custom { x, phi } => interpolate_table(x, phi, &nodes)?,
    };
    let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let phi: Vec<f64> = phi.iter().map(|p| p - top).collect();

    let ends = phi[0].max(phi[phi.len() - 1]);
    if ends > -DEFAULT_PROFILE_BARRIER {
        return Err(Error::Config(format!(
            "{} profile reaches {ends:.3} at the grid ends; it must stay below -{DEFAULT_PROFILE_BARRIER}",
            profile.name()
        )));
    }
    LogDensityState::new(grid.clone(), phi, eps, 0.0).map_err(|e| Error::Config(e.to_string()))
}

fn interpolate_table(x: &[f64], phi: &[f64], nodes: &[f64]) -> Result<Vec<f64>> {
    if x.len() != phi.len() || x.len() < 2 {
        return Err(Error::Config(
            "custom profile needs matching x and phi columns with at least two rows".into(),
        ));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) || phi.iter().any(|p| !p.is_finite()) {
        return Err(Error::Config(
            "custom profile needs increasing x and finite phi".into(),
        ));
    }
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let slack = 1e-9 * (hi - lo);
    if nodes[0] < lo - slack || nodes[nodes.len() - 1] > hi + slack {
        return Err(Error::Config(format!(
            "custom profile covers [{lo}, {hi}], which does not contain the grid"
        )));
    }
    Ok(nodes
        .iter()
        .map(|&t| {
            let s = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
            let f = ((t - x[s - 1]) / (x[s] - x[s - 1])).clamp(0.0, 1.0);
            phi[s - 1] + f * (phi[s] - phi[s - 1])
        })
        .collect())
}
