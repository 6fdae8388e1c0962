use std::ops::Range;

use crate::analysis::dirac::{concentration_width, dirac_basins, DEFAULT_DIRAC_THRESHOLD};
use crate::error::{Error, Result};
use crate::hj::LimitTrace;
use crate::pde::EpsTrace;

/// Fraction of the mass used for concentration widths.
pub const CONCENTRATION_FRACTION: f64 = 0.99;

/// Comparison of one `eps` run with the limit run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    /// `max` over the window and the output times of `|phi_eps - phi|`.
    pub sup_norm_gap: f64,
    /// `int_0^T sum_i |I_i^eps - I_i| dt` (trapezoid over the output times).
    pub i_gap_l1: f64,
    pub mass_min: f64,
    pub mass_max: f64,
    /// Largest 99 % half-width of `u_eps(T)` around the final limit atoms.
    pub concentration_width: f64,
    pub final_resources: Vec<f64>,
}

/// Rows ordered by strictly decreasing `eps`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn push(&mut self, row: SweepRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.eps < last.eps) {
                return Err(Error::InvalidInput(format!(
                    "eps values must decrease strictly ({} after {})",
                    row.eps, last.eps
                )));
            }
        }
        if !row.sup_norm_gap.is_finite() || !row.i_gap_l1.is_finite() {
            return Err(Error::InvalidInput("sweep gaps must be finite".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn eps_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eps).collect()
    }

    /// Log-log slope of `metric` against `eps`.
    pub fn order(&self, metric: impl Fn(&SweepRow) -> f64) -> Result<f64> {
        fit_order(
            &self.eps_values(),
            &self.rows.iter().map(metric).collect::<Vec<_>>(),
        )
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_order(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two matching points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "order fits need positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("x values must not all coincide".into()));
    }
    Ok(sxy / sxx)
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

/// Compares an `eps` run with the limit run on the nodes in `window`.
/// Both runs must share the grid, the output times and the snapshots.
pub fn compare_runs(eps: &EpsTrace, limit: &LimitTrace, window: Range<usize>) -> Result<SweepRow> {
    if !eps.grid.matches(&limit.grid) {
        return Err(Error::InvalidInput("runs use different grids".into()));
    }
    if eps.times.len() != limit.times.len()
        || eps
            .times
            .iter()
            .zip(&limit.times)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::InvalidInput(
            "runs have different output times".into(),
        ));
    }
    if eps.snapshots.len() != eps.times.len() || limit.snapshots.len() != limit.times.len() {
        return Err(Error::InvalidInput(
            "both runs need a snapshot at every output time".into(),
        ));
    }
    if window.is_empty() || window.end > eps.grid.len() {
        return Err(Error::InvalidInput(
            "comparison window outside the grid".into(),
        ));
    }

    let sup_norm_gap = eps
        .snapshots
        .iter()
        .zip(&limit.snapshots)
        .map(|(a, b)| {
            window
                .clone()
                .map(|j| (a.phi()[j] - b.phi()[j]).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let deviation: Vec<f64> = eps
        .resources
        .iter()
        .zip(&limit.resources)
        .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum())
        .collect();
    let i_gap_l1 = trapezoid(&eps.times, &deviation);

    let final_eps = eps.snapshots.last().expect("nonempty");
    let basins = dirac_basins(final_eps, DEFAULT_DIRAC_THRESHOLD)?;
    let mut width: f64 = 0.0;
    for atom in limit.measures.last().expect("nonempty").atoms() {
        let j = eps.grid.nearest_index(atom.x);
        let range = basins
            .iter()
            .find(|b| b.nodes.contains(&j))
            .map(|b| b.nodes.clone())
            .unwrap_or(0..eps.grid.len());
        width = width.max(concentration_width(
            final_eps,
            atom.x,
            range,
            CONCENTRATION_FRACTION,
        )?);
    }

    Ok(SweepRow {
        eps: eps.eps,
        sup_norm_gap,
        i_gap_l1,
        mass_min: eps.mass.iter().copied().fold(f64::INFINITY, f64::min),
        mass_max: eps.mass.iter().copied().fold(0.0, f64::max),
        concentration_width: width,
        final_resources: eps.resources.last().expect("nonempty").to_vec(),
    })
}
