//! Scenario files: a TOML document describing the model, the initial
//! profile, the solver and the outputs. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::DEFAULT_DIRAC_THRESHOLD;
use crate::error::{Error, Result};
use crate::hj::{FluxScheme, LimitClosure, LimitRunConfig, LimitSolver};
use crate::metastable::DEFAULT_CERT_TOL;
use crate::model::{
    GrowthFunction, MutationKernel, ResourceModel, TabulatedFunction, TraitGrid,
    DEFAULT_KERNEL_NODES,
};
use crate::pde::{EpsRunConfig, EpsSolver, InitialProfile, ResourceClosure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    /// Seed of the sampled structural checks.
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub kernel: KernelSpec,
    pub resources: Vec<ResourceSpec>,
    pub initial: InitialSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

fn default_kernel_nodes() -> usize {
    DEFAULT_KERNEL_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Cos2 {
        radius: f64,
        #[serde(default = "default_kernel_nodes")]
        nodes: usize,
    },
    Bump {
        radius: f64,
        #[serde(default = "default_kernel_nodes")]
        nodes: usize,
    },
    /// CSV with columns `z, k`.
    Table {
        path: PathBuf,
        #[serde(default = "default_kernel_nodes")]
        nodes: usize,
    },
    /// No mutation.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResourceSpec {
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Constant {
        value: f64,
    },
    /// CSV with columns `x, eta`.
    Table {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Well {
        center: f64,
    },
    DoubleWell {
        center: f64,
        offset: f64,
    },
    /// CSV with columns `x, phi` (extra columns are ignored), e.g. a snapshot.
    Custom {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Eps,
    Limit,
    Psi,
    Sweep,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Eps => "eps",
            SolverKind::Limit => "limit",
            SolverKind::Psi => "psi",
            SolverKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    #[default]
    Godunov,
    LaxFriedrichs,
}

impl From<FluxKind> for FluxScheme {
    fn from(f: FluxKind) -> Self {
        match f {
            FluxKind::Godunov => FluxScheme::Godunov,
            FluxKind::LaxFriedrichs => FluxScheme::LaxFriedrichs,
        }
    }
}

fn default_output_interval() -> f64 {
    0.05
}

fn default_cfl() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverKind,
    #[serde(default)]
    pub eps: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "default_output_interval")]
    pub output_interval: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub flux: FluxKind,
}

fn default_cert_tol() -> f64 {
    DEFAULT_CERT_TOL
}
fn default_jump_threshold() -> f64 {
    0.02
}
fn default_barrier() -> f64 {
    20.0
}
fn default_dirac_threshold() -> f64 {
    DEFAULT_DIRAC_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default = "default_cert_tol")]
    pub cert_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_band: Option<f64>,
    #[serde(default = "default_jump_threshold")]
    pub jump_threshold: f64,
    /// Boundary barrier of the `eps` solver, in units of `eps`.
    #[serde(default = "default_barrier")]
    pub barrier: f64,
    /// Maxima of `phi_eps` below `-dirac_threshold` are not reported as atoms.
    #[serde(default = "default_dirac_threshold")]
    pub dirac_threshold: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            cert_tol: default_cert_tol(),
            zero_band: None,
            jump_threshold: default_jump_threshold(),
            barrier: default_barrier(),
            dirac_threshold: default_dirac_threshold(),
        }
    }
}

fn default_snapshot_every() -> usize {
    10
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory; `--out` takes precedence. Not part of the manifest.
    #[serde(default, skip_serializing)]
    pub dir: Option<PathBuf>,
    /// Write a snapshot every this many output times (the last one always).
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Add the density `u = exp(phi / eps)` to `eps` snapshots.
    #[serde(default = "default_true")]
    pub density: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            snapshot_every: default_snapshot_every(),
            density: true,
        }
    }
}

/// A parsed scenario with its model objects built and checked.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    /// Directory against which table paths are resolved.
    pub base_dir: PathBuf,
    pub grid: TraitGrid,
    pub kernel: MutationKernel,
    pub model: ResourceModel,
    pub initial: InitialProfile,
    /// `eps` values in decreasing order.
    pub eps: Vec<f64>,
}

fn config_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// Reads the named numeric columns of a CSV file with a header row.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| config_err(path, e))?;
    let headers = reader.headers().map_err(|e| config_err(path, e))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| config_err(path, format!("missing column '{n}'")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| config_err(path, e))?;
        for (c, &i) in idx.iter().enumerate() {
            let field = record.get(i).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                config_err(path, format!("row {}: '{field}' is not a number", row + 1))
            })?;
            if !v.is_finite() {
                return Err(config_err(
                    path,
                    format!("row {}: non-finite value", row + 1),
                ));
            }
            cols[c].push(v);
        }
    }
    Ok(cols)
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be finite, got {v}")))
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {v}")))
    }
}

impl Scenario {
    /// Parses a scenario document; `base_dir` anchors relative table paths.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario schema: {e}")))?;
        Self::from_file(file, base_dir)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_file(file: ScenarioFile, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let base_dir = base_dir.into();
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let as_config = |e: Error| match e {
            Error::InvalidInput(m) => Error::Config(m),
            other => other,
        };

        if file.name.trim().is_empty() {
            return Err(Error::Config("scenario name must not be empty".into()));
        }
        let g = &file.grid;
        finite(g.x_min, "grid.x_min")?;
        finite(g.x_max, "grid.x_max")?;
        let grid = TraitGrid::new(g.x_min, g.x_max, g.n).map_err(as_config)?;

        let kernel = match &file.kernel {
            KernelSpec::Cos2 { radius, nodes } => MutationKernel::cos2(*radius, *nodes),
            KernelSpec::Bump { radius, nodes } => MutationKernel::bump(*radius, *nodes),
            KernelSpec::Table { path, nodes } => {
                let cols = read_columns(&resolve(path), &["z", "k"])?;
                MutationKernel::from_table(&cols[0], &cols[1], *nodes)
            }
            KernelSpec::None => Ok(MutationKernel::disabled()),
        }
        .map_err(as_config)?;

        if file.resources.is_empty() {
            return Err(Error::Config("at least one resource is required".into()));
        }
        let eta = file
            .resources
            .iter()
            .map(|r| {
                Ok(match r {
                    ResourceSpec::Gaussian {
                        amplitude,
                        center,
                        width,
                    } => {
                        positive(*amplitude, "resource amplitude")?;
                        finite(*center, "resource center")?;
                        positive(*width, "resource width")?;
                        GrowthFunction::gaussian(*amplitude, *center, *width)
                    }
                    ResourceSpec::Constant { value } => {
                        positive(*value, "constant resource value")?;
                        GrowthFunction::Constant { value: *value }
                    }
                    ResourceSpec::Table { path } => {
                        let cols = read_columns(&resolve(path), &["x", "eta"])?;
                        let mut cols = cols.into_iter();
                        let (x, v) = (cols.next().unwrap(), cols.next().unwrap());
                        GrowthFunction::Table(TabulatedFunction::new(x, v).map_err(as_config)?)
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = ResourceModel::new(eta).map_err(as_config)?;

        let initial = match &file.initial {
            InitialSpec::Well { center } => InitialProfile::Well { center: *center },
            InitialSpec::DoubleWell { center, offset } => InitialProfile::DoubleWell {
                center: *center,
                offset: *offset,
            },
            InitialSpec::Custom { path } => {
                let mut cols = read_columns(&resolve(path), &["x", "phi"])?.into_iter();
                InitialProfile::Custom {
                    x: cols.next().unwrap(),
                    phi: cols.next().unwrap(),
                }
            }
        };

        let s = &file.solver;
        positive(s.t_end, "solver.t_end")?;
        positive(s.output_interval, "solver.output_interval")?;
        positive(s.cfl, "solver.cfl")?;
        if let Some(dt) = s.dt {
            positive(dt, "solver.dt")?;
        }
        for &e in &s.eps {
            positive(e, "solver.eps")?;
        }
        let mut eps = s.eps.clone();
        eps.sort_by(|a, b| b.total_cmp(a));
        if eps.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("solver.eps values must be distinct".into()));
        }
        match s.kind {
            SolverKind::Eps if eps.is_empty() => {
                return Err(Error::Config("an eps run needs solver.eps".into()))
            }
            SolverKind::Sweep if eps.len() < 2 => {
                return Err(Error::Config(
                    "a sweep needs at least two solver.eps values".into(),
                ))
            }
            _ => {}
        }

        let t = &file.tolerances;
        positive(t.cert_tol, "tolerances.cert_tol")?;
        positive(t.jump_threshold, "tolerances.jump_threshold")?;
        positive(t.barrier, "tolerances.barrier")?;
        positive(t.dirac_threshold, "tolerances.dirac_threshold")?;
        if let Some(b) = t.zero_band {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerances.zero_band must be >= 0, got {b}"
                )));
            }
        }
        if file.output.snapshot_every == 0 {
            return Err(Error::Config(
                "output.snapshot_every must be at least 1".into(),
            ));
        }

        let scenario = Self {
            file,
            base_dir,
            grid,
            kernel,
            model,
            initial,
            eps,
        };
        scenario.check_solvers()?;
        Ok(scenario)
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn kind(&self) -> SolverKind {
        self.file.solver.kind
    }

    /// Whether `kind` runs the `eps` solver, the limit solver, or both.
    fn uses(kind: SolverKind) -> (bool, bool) {
        match kind {
            SolverKind::Eps => (true, false),
            SolverKind::Limit | SolverKind::Psi => (false, true),
            SolverKind::Sweep => (true, true),
        }
    }

    /// Builds every solver `kind` needs and checks its initial state, so a
    /// bad configuration fails before anything is written.
    pub fn check_solvers_for(&self, kind: SolverKind) -> Result<()> {
        let (eps_runs, limit_run) = Self::uses(kind);
        if kind == SolverKind::Sweep && self.eps.len() < 2 {
            return Err(Error::Config(
                "a sweep needs at least two solver.eps values".into(),
            ));
        }
        if eps_runs {
            if self.eps.is_empty() {
                return Err(Error::Config("no solver.eps values given".into()));
            }
            for &e in &self.eps {
                EpsSolver::new(self.eps_config(e))?.initial_state()?;
            }
        }
        if limit_run {
            LimitSolver::new(self.limit_config())?.initial_state()?;
        }
        Ok(())
    }

    fn check_solvers(&self) -> Result<()> {
        self.check_solvers_for(self.kind())
    }

    pub fn eps_config(&self, eps: f64) -> EpsRunConfig {
        let s = &self.file.solver;
        EpsRunConfig {
            eps,
            t_end: s.t_end,
            dt: s.dt,
            cfl: s.cfl,
            grid: self.grid.clone(),
            kernel: self.kernel.clone(),
            model: self.model.clone(),
            initial: self.initial.clone(),
            output_interval: s.output_interval,
            audit_every: 1,
            closure: ResourceClosure::Quasistatic,
            barrier: self.file.tolerances.barrier,
            keep_snapshots: true,
        }
    }

    pub fn limit_config(&self) -> LimitRunConfig {
        let s = &self.file.solver;
        let t = &self.file.tolerances;
        LimitRunConfig {
            grid: self.grid.clone(),
            kernel: self.kernel.clone(),
            model: self.model.clone(),
            initial: self.initial.clone(),
            t_end: s.t_end,
            dt: s.dt,
            cfl: s.cfl,
            output_interval: s.output_interval,
            zero_band: t.zero_band,
            flux: s.flux.into(),
            lf_lambda: None,
            clamp: true,
            cert_tol: t.cert_tol,
            closure: LimitClosure::Constrained,
            jump_threshold: t.jump_threshold,
            keep_snapshots: true,
        }
    }
}
