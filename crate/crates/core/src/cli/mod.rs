//! Scenario driver behind the `evolim` binary: parses scenario files, runs
//! the solvers and writes plot-ready artifacts.
//!
//! Every run directory holds `series.csv`, `snapshot_NNNNN.csv` files,
//! `measures.toml` and `manifest.toml`. Outputs depend only on the scenario
//! and the seed, never on the thread count or the output path.

mod artifacts;
mod scenario;

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{compare_runs, SweepReport, SweepRow};
use crate::error::{Error, Result};
use crate::hj::{psi_solve, solve_limit, LimitTrace};
use crate::model::validate::{check_structure, StructuralOptions};
use crate::pde::{run, EpsTrace, RunStatus};

pub use artifacts::{fmt_f64, snapshot_frames, snapshot_name, sweep_header};
pub use scenario::{
    read_columns, FluxKind, GridSpec, InitialSpec, KernelSpec, OutputSpec, ResourceSpec, Scenario,
    ScenarioFile, SolverKind, SolverSpec, ToleranceSpec,
};

/// Fraction of the grid, around its centre, used to compare `phi` fields.
pub const COMPARISON_WINDOW: f64 = 0.8;

/// Command-line overrides of a scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// What a successful command produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub kind: &'static str,
    pub out_dir: PathBuf,
    pub final_resources: Vec<f64>,
}

fn load(path: &Path, opts: &RunOptions) -> Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = opts.seed {
        s.file.seed = seed;
    }
    Ok(s)
}

fn out_dir(s: &Scenario, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| s.file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(s.name()))
}

/// Schema and structural checks of a scenario, without running a solver.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub passed: bool,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub envelope_at_ends: (f64, f64),
    pub max_sign_changes: usize,
    pub worst_condition: f64,
    pub singular_tuples: usize,
    pub tuples_checked: usize,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn structural_report(s: &Scenario) -> ValidationReport {
    let mut opts = StructuralOptions::for_model(&s.model);
    opts.seed = s.file.seed;
    let r = check_structure(&s.model, &s.grid, &opts);
    ValidationReport {
        scenario: s.name().to_string(),
        passed: r.passed(),
        errors: r.errors,
        warnings: r.warnings,
        envelope_at_ends: r.envelope_at_ends,
        max_sign_changes: r.max_sign_changes,
        worst_condition: r.worst_condition,
        singular_tuples: r.singular_tuples,
        tuples_checked: r.tuples_checked,
    }
}

/// Parses and checks `path`. Schema errors are returned as errors; failed
/// model checks are reported in the (non-passing) report.
pub fn validate_scenario(path: impl AsRef<Path>, opts: &RunOptions) -> Result<ValidationReport> {
    let s = load(path.as_ref(), opts)?;
    Ok(structural_report(&s))
}

fn require_structure(s: &Scenario) -> Result<()> {
    let report = structural_report(s);
    for w in &report.warnings {
        log::warn!("{}: {w}", s.name());
    }
    if report.passed {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{}: model checks failed: {}",
            s.name(),
            report.errors.join("; ")
        )))
    }
}

/// Runs the solver selected in the scenario.
pub fn run_scenario(path: impl AsRef<Path>, opts: &RunOptions) -> Result<RunSummary> {
    let s = load(path.as_ref(), opts)?;
    execute(&s, s.kind(), "run", opts)
}

/// Runs an `eps` sweep with the scenario's `eps` list, whatever its solver kind.
pub fn sweep(path: impl AsRef<Path>, opts: &RunOptions) -> Result<RunSummary> {
    let s = load(path.as_ref(), opts)?;
    s.check_solvers_for(SolverKind::Sweep)?;
    execute(&s, SolverKind::Sweep, "sweep", opts)
}

/// Runs `kind` for an already loaded scenario and writes its artifacts.
pub fn execute(
    s: &Scenario,
    kind: SolverKind,
    command: &str,
    opts: &RunOptions,
) -> Result<RunSummary> {
    require_structure(s)?;
    let dir = out_dir(s, opts);
    info!("{}: {} run into {}", s.name(), kind.name(), dir.display());
    let final_resources = match kind {
        SolverKind::Eps => run_eps_list(s, &dir, command)?,
        SolverKind::Limit => {
            let trace = solve_limit(&s.limit_config())?;
            write_limit(s, &dir, command, "limit", &trace, Vec::new())?;
            final_of_limit(&trace)
        }
        SolverKind::Psi => run_psi(s, &dir, command)?,
        SolverKind::Sweep => run_sweep(s, &dir, command)?,
    };
    Ok(RunSummary {
        scenario: s.name().to_string(),
        kind: kind.name(),
        out_dir: dir,
        final_resources,
    })
}

fn final_of_limit(trace: &LimitTrace) -> Vec<f64> {
    trace
        .resources
        .last()
        .map(|r| r.to_vec())
        .unwrap_or_default()
}

fn eps_dir_name(eps: f64) -> String {
    format!("eps_{eps}")
}

/// Writes the artifacts of one `eps` run; a blown-up run keeps its partial
/// series and is reported as an error afterwards.
fn write_eps(s: &Scenario, dir: &Path, command: &str, trace: &EpsTrace) -> Result<()> {
    artifacts::create_dir(dir)?;
    artifacts::eps_series(&dir.join("series.csv"), trace)?;
    let out = &s.file.output;
    artifacts::eps_snapshots(dir, trace, out.snapshot_every, out.density)?;
    let frames = snapshot_frames(trace.snapshots.len(), out.snapshot_every);
    artifacts::eps_measures(
        &dir.join("measures.toml"),
        trace,
        &frames,
        s.file.tolerances.dirac_threshold,
    )?;
    let status = match trace.status {
        RunStatus::Completed => "completed",
        RunStatus::BlownUp { .. } => "blown_up",
    };
    let mut outcome = artifacts::RunOutcome::new(
        status,
        trace.extremes.steps,
        trace.times.last().copied().unwrap_or(0.0),
        trace.resources.last(),
    );
    outcome.extra = vec![
        ("eps".into(), trace.eps),
        ("max_mass".into(), trace.extremes.max_mass),
        ("max_sup_phi".into(), trace.extremes.max_sup_phi),
        ("max_lipschitz".into(), trace.extremes.max_lipschitz),
        ("min_semiconvexity".into(), trace.extremes.min_semiconvexity),
        ("min_h_eps".into(), trace.extremes.min_h_eps),
        ("min_dt".into(), trace.extremes.min_dt),
    ];
    artifacts::write_manifest(
        &dir.join("manifest.toml"),
        command,
        "eps",
        &s.file,
        &outcome,
    )
}

fn blow_up_error(trace: &EpsTrace) -> Option<Error> {
    match &trace.status {
        RunStatus::Completed => None,
        RunStatus::BlownUp { t, reason } => Some(Error::BlowUp {
            t: *t,
            reason: format!("eps = {}: {reason}", trace.eps),
        }),
    }
}

fn run_eps_traces(s: &Scenario) -> Result<Vec<EpsTrace>> {
    s.eps
        .par_iter()
        .map(|&eps| {
            info!("{}: eps = {eps}", s.name());
            run(&s.eps_config(eps))
        })
        .collect()
}

fn run_eps_list(s: &Scenario, dir: &Path, command: &str) -> Result<Vec<f64>> {
    let traces = run_eps_traces(s)?;
    let single = traces.len() == 1;
    for trace in &traces {
        let d = if single {
            dir.to_path_buf()
        } else {
            dir.join(eps_dir_name(trace.eps))
        };
        write_eps(s, &d, command, trace)?;
    }
    if let Some(e) = traces.iter().find_map(blow_up_error) {
        return Err(e);
    }
    let last = traces.last().expect("nonempty eps list");
    Ok(last
        .resources
        .last()
        .map(|r| r.to_vec())
        .unwrap_or_default())
}

fn write_limit(
    s: &Scenario,
    dir: &Path,
    command: &str,
    kind: &str,
    trace: &LimitTrace,
    extra: Vec<(String, f64)>,
) -> Result<()> {
    artifacts::create_dir(dir)?;
    artifacts::limit_series(&dir.join("series.csv"), trace)?;
    artifacts::limit_snapshots(dir, trace, s.file.output.snapshot_every)?;
    artifacts::limit_measures(&dir.join("measures.toml"), trace)?;
    let mut outcome = artifacts::RunOutcome::new(
        "completed",
        trace.steps.len(),
        trace.times.last().copied().unwrap_or(0.0),
        trace.resources.last(),
    );
    outcome.extra = extra;
    outcome
        .extra
        .push(("jumps".into(), trace.jumps.len() as f64));
    if let Some(t) = trace.activation_time {
        outcome.extra.push(("activation_time".into(), t));
    }
    artifacts::write_manifest(&dir.join("manifest.toml"), command, kind, &s.file, &outcome)
}

/// Limit run, `psi` replay of its resource history, and the gap between the
/// reconstructed and the direct `phi` on the comparison window.
fn run_psi(s: &Scenario, dir: &Path, command: &str) -> Result<Vec<f64>> {
    let cfg = s.limit_config();
    let trace = solve_limit(&cfg)?;
    let psi = psi_solve(&cfg, &trace)?;
    let window = s.grid.central_window(COMPARISON_WINDOW);
    let gaps: Vec<f64> = psi
        .phi
        .iter()
        .zip(&trace.snapshots)
        .map(|(a, b)| {
            window
                .clone()
                .map(|j| (a.phi()[j] - b.phi()[j]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);

    write_limit(
        s,
        dir,
        command,
        "psi",
        &trace,
        vec![("psi_max_gap".into(), max_gap)],
    )?;
    let pdir = dir.join("psi");
    artifacts::create_dir(&pdir)?;
    for n in snapshot_frames(psi.phi.len(), s.file.output.snapshot_every) {
        artifacts::write_snapshot(
            &pdir.join(snapshot_name(n)),
            &psi.phi[n],
            &[("psi", &psi.psi[n])],
        )?;
    }
    let k = s.model.k();
    let mut header = vec!["t".to_string(), "sup_gap".to_string()];
    header.extend((1..=k).map(|i| format!("J_{i}")));
    let mut text = header.join(",") + "\n";
    for n in 0..psi.times.len() {
        let mut row = vec![fmt_f64(psi.times[n]), fmt_f64(gaps[n])];
        row.extend(psi.integrals[n].iter().map(|v| fmt_f64(*v)));
        text += &(row.join(",") + "\n");
    }
    artifacts::write_file(&pdir.join("psi_check.csv"), &text)?;
    Ok(final_of_limit(&trace))
}

fn run_sweep(s: &Scenario, dir: &Path, command: &str) -> Result<Vec<f64>> {
    let (traces, limit) = rayon::join(|| run_eps_traces(s), || solve_limit(&s.limit_config()));
    let traces = traces?;
    let limit = limit?;
    for trace in &traces {
        write_eps(s, &dir.join(eps_dir_name(trace.eps)), command, trace)?;
    }
    write_limit(s, &dir.join("limit"), command, "limit", &limit, Vec::new())?;
    if let Some(e) = traces.iter().find_map(blow_up_error) {
        return Err(e);
    }
    let window = s.grid.central_window(COMPARISON_WINDOW);
    let mut report = SweepReport::default();
    for trace in &traces {
        report.push(compare_runs(trace, &limit, window.clone())?)?;
    }
    artifacts::write_sweep_report(&dir.join("sweep_report.csv"), &report)?;
    let outcome = artifacts::RunOutcome::new(
        "completed",
        traces.iter().map(|t| t.extremes.steps).sum::<usize>() + limit.steps.len(),
        limit.times.last().copied().unwrap_or(0.0),
        limit.resources.last(),
    );
    artifacts::write_manifest(
        &dir.join("manifest.toml"),
        command,
        "sweep",
        &s.file,
        &outcome,
    )?;
    Ok(final_of_limit(&limit))
}

/// Sweep report read back from a sweep directory, with fitted orders.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub report: SweepReport,
    /// `(metric, order)`; metrics that cannot be fitted are left out.
    pub orders: Vec<(&'static str, f64)>,
}

impl SweepSummary {
    pub fn render(&self) -> String {
        let k = self
            .report
            .rows
            .first()
            .map_or(0, |r| r.final_resources.len());
        let mut out = sweep_header(k).join("\t") + "\n";
        for r in &self.report.rows {
            let mut v = vec![
                r.eps,
                r.sup_norm_gap,
                r.i_gap_l1,
                r.mass_min,
                r.mass_max,
                r.concentration_width,
            ];
            v.extend_from_slice(&r.final_resources);
            out += &(v
                .iter()
                .map(|x| format!("{x:.6e}"))
                .collect::<Vec<_>>()
                .join("\t")
                + "\n");
        }
        for (m, o) in &self.orders {
            out += &format!("order({m}) = {o:.4}\n");
        }
        out
    }
}

/// Reads `sweep_report.csv` from `dir` and fits `log metric ~ order log eps`.
pub fn report(dir: impl AsRef<Path>) -> Result<SweepSummary> {
    let path = dir.as_ref().join("sweep_report.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::io(&path, e.into()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::io(&path, e.into()))?
        .clone();
    let k = headers.iter().filter(|h| h.starts_with("I_")).count();
    if headers.iter().collect::<Vec<_>>() != sweep_header(k) {
        return Err(Error::InvalidInput(format!(
            "{}: unexpected columns",
            path.display()
        )));
    }
    let cols = read_columns(&path, &headers.iter().collect::<Vec<_>>())?;
    let mut report = SweepReport::default();
    for n in 0..cols[0].len() {
        report.push(SweepRow {
            eps: cols[0][n],
            sup_norm_gap: cols[1][n],
            i_gap_l1: cols[2][n],
            mass_min: cols[3][n],
            mass_max: cols[4][n],
            concentration_width: cols[5][n],
            final_resources: (0..k).map(|i| cols[6 + i][n]).collect(),
        })?;
    }
    type Metric = (&'static str, fn(&SweepRow) -> f64);
    let metrics: [Metric; 3] = [
        ("sup_norm_gap", |r| r.sup_norm_gap),
        ("i_gap_l1", |r| r.i_gap_l1),
        ("concentration_width", |r| r.concentration_width),
    ];
    let orders = metrics
        .iter()
        .filter_map(|(name, f)| report.order(f).ok().map(|o| (*name, o)))
        .collect();
    Ok(SweepSummary { report, orders })
}
