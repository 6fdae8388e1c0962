//! Deterministic artifact writers. Floats are printed with 17 significant
//! digits so every file reads back bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hj::LimitTrace;
use crate::metastable::{DiscreteMeasure, EquilibriumCertificate};
use crate::model::{LogDensityState, ResourceVector};
use crate::pde::EpsTrace;

/// `v` with 17 significant digits; infinities and NaN in TOML spelling.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", items.join(", "))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn resource_headers(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("I_{i}")).collect()
}

/// One row of the time-series file.
pub struct SeriesRow<'a> {
    pub t: f64,
    pub resources: &'a [f64],
    pub mass: f64,
    pub sup_phi: f64,
    pub lipschitz: f64,
    pub semiconvexity: f64,
}

/// `t, I_1..I_k, mass, sup_phi, lipschitz, semiconvexity`.
pub fn write_series<'a>(
    path: &Path,
    k: usize,
    rows: impl Iterator<Item = SeriesRow<'a>>,
) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(resource_headers(k));
    header.extend(["mass", "sup_phi", "lipschitz", "semiconvexity"].map(String::from));
    write_csv(
        path,
        &header,
        rows.map(|r| {
            let mut v = vec![r.t];
            v.extend_from_slice(r.resources);
            v.extend([r.mass, r.sup_phi, r.lipschitz, r.semiconvexity]);
            v
        }),
    )
}

pub fn eps_series(path: &Path, trace: &EpsTrace) -> Result<()> {
    write_series(
        path,
        trace.k(),
        (0..trace.times.len()).map(|n| SeriesRow {
            t: trace.times[n],
            resources: trace.resources[n].as_slice(),
            mass: trace.mass[n],
            sup_phi: trace.sup_phi[n],
            lipschitz: trace.lipschitz[n],
            semiconvexity: trace.semiconvexity[n],
        }),
    )
}

/// For the limit run `mass` is the total mass of the metastable measure.
pub fn limit_series(path: &Path, trace: &LimitTrace) -> Result<()> {
    let k = trace.resources.first().map_or(0, |r| r.len());
    write_series(
        path,
        k,
        (0..trace.times.len()).map(|n| {
            let s = &trace.snapshots[n];
            SeriesRow {
                t: trace.times[n],
                resources: trace.resources[n].as_slice(),
                mass: trace.measures[n].total_mass(),
                sup_phi: s.max_phi(),
                lipschitz: s.lipschitz(),
                semiconvexity: s.semiconvexity(),
            }
        }),
    )
}

/// `x, phi` plus optional extra named columns.
pub fn write_snapshot(
    path: &Path,
    state: &LogDensityState,
    extra: &[(&str, &[f64])],
) -> Result<()> {
    let x = state.grid().nodes();
    let phi = state.phi();
    let mut header = vec!["x".to_string(), "phi".to_string()];
    header.extend(extra.iter().map(|(n, _)| n.to_string()));
    write_csv(
        path,
        &header,
        (0..x.len()).map(|j| {
            let mut row = vec![x[j], phi[j]];
            row.extend(extra.iter().map(|(_, c)| c[j]));
            row
        }),
    )
}

/// Output indices that get a snapshot: every `every`-th one and the last.
pub fn snapshot_frames(count: usize, every: usize) -> Vec<usize> {
    (0..count)
        .filter(|&n| n % every.max(1) == 0 || n + 1 == count)
        .collect()
}

pub fn snapshot_name(frame: usize) -> String {
    format!("snapshot_{frame:05}.csv")
}

/// Snapshots of an `eps` run, optionally with the density column.
pub fn eps_snapshots(dir: &Path, trace: &EpsTrace, every: usize, density: bool) -> Result<()> {
    for n in snapshot_frames(trace.snapshots.len(), every) {
        let s = &trace.snapshots[n];
        let path = dir.join(snapshot_name(n));
        if density {
            let u = s.density()?;
            write_snapshot(&path, s, &[("u", &u)])?;
        } else {
            write_snapshot(&path, s, &[])?;
        }
    }
    Ok(())
}

pub fn limit_snapshots(dir: &Path, trace: &LimitTrace, every: usize) -> Result<()> {
    for n in snapshot_frames(trace.snapshots.len(), every) {
        write_snapshot(&dir.join(snapshot_name(n)), &trace.snapshots[n], &[])?;
    }
    Ok(())
}

fn measure_toml(out: &mut String, mu: &DiscreteMeasure) {
    let _ = writeln!(out, "total_mass = {}", fmt_f64(mu.total_mass()));
    let _ = writeln!(
        out,
        "atoms_x = {}",
        fmt_list(&mu.atoms().iter().map(|a| a.x).collect::<Vec<_>>())
    );
    let _ = writeln!(
        out,
        "atoms_weight = {}",
        fmt_list(&mu.atoms().iter().map(|a| a.weight).collect::<Vec<_>>())
    );
}

fn certificate_toml(out: &mut String, header: &str, c: &EquilibriumCertificate) {
    let _ = writeln!(out, "[{header}]");
    let _ = writeln!(out, "passed = {}", c.passed());
    let _ = writeln!(
        out,
        "max_violation_on_omega = {}",
        fmt_f64(c.max_violation_on_omega)
    );
    let _ = writeln!(
        out,
        "max_violation_off_support = {}",
        fmt_f64(c.max_violation_off_support)
    );
    let _ = writeln!(
        out,
        "max_residual_on_support = {}",
        fmt_f64(c.max_residual_on_support)
    );
    let _ = writeln!(out, "entropy = {}", fmt_f64(c.entropy_value));
    let _ = writeln!(out, "degenerate = {}", c.degenerate);
    let _ = writeln!(out, "cert_tol = {}", fmt_f64(c.cert_tol));
}

/// Time-stamped metastable measures, certificates and resource jumps.
pub fn limit_measures(path: &Path, trace: &LimitTrace) -> Result<()> {
    let mut out = String::new();
    match trace.activation_time {
        Some(t) => {
            let _ = writeln!(out, "activation_time = {}\n", fmt_f64(t));
        }
        None => out.push_str("# the constraint never activated\n\n"),
    }
    for n in 0..trace.times.len() {
        out.push_str("[[measure]]\n");
        let _ = writeln!(out, "t = {}", fmt_f64(trace.times[n]));
        let _ = writeln!(
            out,
            "resources = {}",
            fmt_list(trace.resources[n].as_slice())
        );
        measure_toml(&mut out, &trace.measures[n]);
        if let Some(c) = trace.certificates.get(n) {
            certificate_toml(&mut out, "measure.certificate", c);
        }
        out.push('\n');
    }
    for j in &trace.jumps {
        out.push_str("[[jump]]\n");
        let _ = writeln!(out, "t = {}", fmt_f64(j.t));
        let _ = writeln!(out, "before = {}", fmt_list(&j.before));
        let _ = writeln!(out, "after = {}\n", fmt_list(&j.after));
    }
    write_file(path, &out)
}

/// Atoms located in the snapshots of an `eps` run.
pub fn eps_measures(path: &Path, trace: &EpsTrace, frames: &[usize], threshold: f64) -> Result<()> {
    let mut out = String::new();
    for &n in frames {
        let mu = crate::analysis::dirac_locate(&trace.snapshots[n], threshold)?;
        out.push_str("[[measure]]\n");
        let _ = writeln!(out, "t = {}", fmt_f64(trace.times[n]));
        let _ = writeln!(
            out,
            "resources = {}",
            fmt_list(trace.resources[n].as_slice())
        );
        measure_toml(&mut out, &mu);
        out.push('\n');
    }
    write_file(path, &out)
}

/// Columns of the sweep report; `I_i` are the final resources of each run.
pub fn sweep_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "eps",
        "sup_norm_gap",
        "i_gap_l1",
        "mass_min",
        "mass_max",
        "concentration_width",
    ]
    .map(String::from)
    .to_vec();
    h.extend(resource_headers(k));
    h
}

pub fn write_sweep_report(path: &Path, report: &crate::analysis::SweepReport) -> Result<()> {
    let k = report.rows.first().map_or(0, |r| r.final_resources.len());
    write_csv(
        path,
        &sweep_header(k),
        report.rows.iter().map(|r| {
            let mut v = vec![
                r.eps,
                r.sup_norm_gap,
                r.i_gap_l1,
                r.mass_min,
                r.mass_max,
                r.concentration_width,
            ];
            v.extend_from_slice(&r.final_resources);
            v
        }),
    )
}

/// `[result]` entries of a manifest.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub status: String,
    pub steps: usize,
    pub final_time: f64,
    pub final_resources: Vec<f64>,
    pub extra: Vec<(String, f64)>,
}

impl RunOutcome {
    pub fn new(
        status: &str,
        steps: usize,
        final_time: f64,
        resources: Option<&ResourceVector>,
    ) -> Self {
        Self {
            status: status.into(),
            steps,
            final_time,
            final_resources: resources.map(|r| r.to_vec()).unwrap_or_default(),
            extra: Vec::new(),
        }
    }
}

/// Resolved configuration, code version and outcome of one run.
pub fn write_manifest(
    path: &Path,
    command: &str,
    kind: &str,
    scenario: &super::ScenarioFile,
    outcome: &RunOutcome,
) -> Result<()> {
    let mut table = toml::Table::new();
    table.insert(
        "scenario".into(),
        toml::Value::try_from(scenario)
            .map_err(|e| Error::Config(format!("cannot serialize the scenario: {e}")))?,
    );
    let scenario = toml::to_string(&table)
        .map_err(|e| Error::Config(format!("cannot serialize the scenario: {e}")))?;
    let mut out = String::new();
    out.push_str("[evolim]\n");
    let _ = writeln!(out, "version = \"{}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = \"{command}\"");
    let _ = writeln!(out, "kind = \"{kind}\"\n");
    out.push_str("[result]\n");
    let _ = writeln!(out, "status = \"{}\"", outcome.status);
    let _ = writeln!(out, "steps = {}", outcome.steps);
    let _ = writeln!(out, "final_time = {}", fmt_f64(outcome.final_time));
    let _ = writeln!(
        out,
        "final_resources = {}",
        fmt_list(&outcome.final_resources)
    );
    for (k, v) in &outcome.extra {
        let _ = writeln!(out, "{k} = {}", fmt_f64(*v));
    }
    out.push_str("\n# resolved scenario\n");
    out.push_str(&scenario);
    write_file(path, &out)
}
