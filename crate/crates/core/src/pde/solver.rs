use crate::error::{Error, Result};
use crate::model::quadrature::log_weighted_sum_exp;
use crate::model::{
    lipschitz_seminorm, min_second_difference, resource_response_log, EtaTable, GrowthFunction,
    LogDensityState, MutationKernel, ResourceModel, ResourceVector, ScaledStencil, TraitGrid,
    DEFAULT_KERNEL_NODES,
};
use crate::pde::profile::{initial_profile, InitialProfile};

/// How the resources are obtained at each stage.
#[derive(Debug, Clone, PartialEq)]
pub enum ResourceClosure {
    /// `I_i = 1 / (1 + int eta_i u)`, recomputed from the current state.
    Quasistatic,
    /// Held fixed; used for comparison tests.
    Frozen(ResourceVector),
}

#[derive(Debug, Clone)]
pub struct EpsRunConfig {
    pub eps: f64,
    pub t_end: f64,
    /// Fixed step; `None` picks a stable step from the current state.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub grid: TraitGrid,
    pub kernel: MutationKernel,
    pub model: ResourceModel,
    pub initial: InitialProfile,
    /// Series and snapshots are recorded at multiples of this interval (and at `t_end`).
    pub output_interval: f64,
    /// Step extremes are sampled every `audit_every` steps.
    pub audit_every: usize,
    pub closure: ResourceClosure,
    /// `phi / eps` must stay below `-barrier` near the ends initially and
    /// below `-barrier / 2` during the run.
    pub barrier: f64,
    pub keep_snapshots: bool,
}

impl EpsRunConfig {
    /// Single resource `eta = 2 exp(-x^2)`, cos^2 kernel of radius 1, a well
    /// at 0, on `[-10, 10]` with 1601 nodes up to `t = 5`.
    pub fn default_scenario(eps: f64) -> Self {
        Self {
            eps,
            t_end: 5.0,
            dt: None,
            cfl: 0.5,
            grid: TraitGrid::new(-10.0, 10.0, 1601).expect("valid grid"),
            kernel: MutationKernel::cos2(1.0, DEFAULT_KERNEL_NODES).expect("valid kernel"),
            model: ResourceModel::new(vec![GrowthFunction::gaussian(2.0, 0.0, 1.0)])
                .expect("valid model"),
            initial: InitialProfile::Well { center: 0.0 },
            output_interval: 0.05,
            audit_every: 1,
            closure: ResourceClosure::Quasistatic,
            barrier: 20.0,
            keep_snapshots: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.eps, "eps")?;
        positive(self.t_end, "t_end")?;
        positive(self.cfl, "cfl")?;
        positive(self.output_interval, "output_interval")?;
        positive(self.barrier, "barrier")?;
        if let Some(dt) = self.dt {
            positive(dt, "dt")?;
        }
        if self.audit_every == 0 {
            return Err(Error::Config("audit_every must be at least 1".into()));
        }
        if let ResourceClosure::Frozen(r) = &self.closure {
            if r.len() != self.model.k() {
                return Err(Error::Config(format!(
                    "{} frozen resources for a {}-resource model",
                    r.len(),
                    self.model.k()
                )));
            }
        }
        Ok(())
    }

    /// Output times `0, h, 2h, ..` up to `t_end`, which is always included.
    pub fn output_times(&self) -> Vec<f64> {
        output_times(self.t_end, self.output_interval)
    }
}

pub(crate) fn output_times(t_end: f64, interval: f64) -> Vec<f64> {
    let count = (t_end / interval + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * interval).collect();
    let last = *times.last().expect("nonempty");
    if t_end - last > 1e-9 * t_end.max(1.0) {
        times.push(t_end);
    } else {
        *times.last_mut().expect("nonempty") = t_end;
    }
    times
}

/// Right-hand side of the log-density equation at one state.
#[derive(Debug, Clone)]
pub struct Rhs {
    /// `sum_i I_i eta_i - 1 + H_eps(phi)` per node.
    pub value: Vec<f64>,
    pub resources: ResourceVector,
    pub min_h_eps: f64,
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub dt: f64,
    /// Resources at the start of the step.
    pub resources: ResourceVector,
    pub min_h_eps: f64,
    /// `max |d phi / dt|` over both stages.
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    BlownUp { t: f64, reason: String },
}

/// Extremes over every sampled step, including `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepExtremes {
    pub steps: usize,
    pub max_mass: f64,
    pub max_sup_phi: f64,
    pub max_lipschitz: f64,
    pub min_semiconvexity: f64,
    pub min_h_eps: f64,
    pub max_rate: f64,
    pub min_dt: f64,
    pub max_dt: f64,
}

impl StepExtremes {
    fn new() -> Self {
        Self {
            steps: 0,
            max_mass: 0.0,
            max_sup_phi: f64::NEG_INFINITY,
            max_lipschitz: 0.0,
            min_semiconvexity: f64::INFINITY,
            min_h_eps: f64::INFINITY,
            max_rate: 0.0,
            min_dt: f64::INFINITY,
            max_dt: 0.0,
        }
    }

    fn observe_state(&mut self, phi: &[f64], dx: f64, mass: f64) {
        self.max_mass = self.max_mass.max(mass);
        self.max_sup_phi = self
            .max_sup_phi
            .max(phi.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        self.max_lipschitz = self.max_lipschitz.max(lipschitz_seminorm(phi, dx));
        self.min_semiconvexity = self.min_semiconvexity.min(min_second_difference(phi, dx));
    }
}

/// Recorded run of the `eps` equation.
#[derive(Debug, Clone)]
pub struct EpsTrace {
    pub eps: f64,
    pub grid: TraitGrid,
    pub times: Vec<f64>,
    pub resources: Vec<ResourceVector>,
    pub mass: Vec<f64>,
    pub sup_phi: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub semiconvexity: Vec<f64>,
    /// States at the output times (empty unless snapshots are kept).
    pub snapshots: Vec<LogDensityState>,
    pub extremes: StepExtremes,
    /// Largest `sum_i eta_i` on the grid.
    pub eta_bar: f64,
    pub status: RunStatus,
}

impl EpsTrace {
    pub fn k(&self) -> usize {
        self.resources.first().map_or(0, |r| r.len())
    }

    /// `I_i` at the output times.
    pub fn resource_series(&self, i: usize) -> Vec<f64> {
        self.resources.iter().map(|r| r[i]).collect()
    }

    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn final_state(&self) -> Option<&LogDensityState> {
        self.snapshots.last()
    }

    /// Turns a blown-up run into an error, dropping the partial trace.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            RunStatus::Completed => Ok(self),
            RunStatus::BlownUp { t, reason } => Err(Error::BlowUp { t, reason }),
        }
    }
}

/// Explicit solver for `d phi / dt = sum_i I_i eta_i - 1 + H_eps(phi)`.
#[derive(Debug, Clone)]
pub struct EpsSolver {
    cfg: EpsRunConfig,
    stencil: ScaledStencil,
    table: EtaTable,
    weights: Vec<f64>,
    eta_bar: f64,
    /// Nodes `< lo_band` or `>= hi_band` lie within `2 rho eps` of an end.
    lo_band: usize,
    hi_band: usize,
}

impl EpsSolver {
    pub fn new(cfg: EpsRunConfig) -> Result<Self> {
        cfg.validate()?;
        let stencil = ScaledStencil::new(&cfg.kernel, cfg.eps, cfg.grid.dx());
        let table = cfg.model.tabulate(&cfg.grid);
        let weights = cfg.grid.trapezoid_weights();
        let eta_bar = table.envelope_max();
        let n = cfg.grid.len();
        let reach = 2.0 * cfg.kernel.radius() * cfg.eps;
        let cells = ((reach / cfg.grid.dx()).floor() as usize).min(n / 2);
        Ok(Self {
            stencil,
            table,
            weights,
            eta_bar,
            lo_band: cells + 1,
            hi_band: n - cells - 1,
            cfg,
        })
    }

    pub fn config(&self) -> &EpsRunConfig {
        &self.cfg
    }

    pub fn initial_state(&self) -> Result<LogDensityState> {
        let s = initial_profile(&self.cfg.initial, &self.cfg.grid, self.cfg.eps)?;
        let edge = self.boundary_max(s.phi()) / self.cfg.eps;
        if edge > -self.cfg.barrier {
            return Err(Error::Config(format!(
                "initial phi / eps reaches {edge:.3} near the grid ends; the barrier requires <= -{}",
                self.cfg.barrier
            )));
        }
        Ok(s)
    }

    fn boundary_max(&self, phi: &[f64]) -> f64 {
        phi[..self.lo_band]
            .iter()
            .chain(&phi[self.hi_band..])
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Resources of the current field.
    pub fn resources(&self, phi: &[f64]) -> ResourceVector {
        match &self.cfg.closure {
            ResourceClosure::Quasistatic => {
                resource_response_log(phi, self.cfg.eps, &self.weights, &self.table)
            }
            ResourceClosure::Frozen(r) => r.clone(),
        }
    }

    /// `int exp(phi / eps) dx`.
    pub fn mass(&self, phi: &[f64]) -> f64 {
        let e: Vec<f64> = phi.iter().map(|p| p / self.cfg.eps).collect();
        log_weighted_sum_exp(&self.weights, &e).exp()
    }

    pub fn rhs(&self, phi: &[f64]) -> Result<Rhs> {
        let resources = self.resources(phi);
        let h = self.stencil.evaluate_field(phi)?;
        let min_h_eps = h.iter().copied().fold(f64::INFINITY, f64::min);
        let value = h
            .iter()
            .enumerate()
            .map(|(j, hj)| self.table.growth(&resources, j) + hj)
            .collect();
        Ok(Rhs {
            value,
            resources,
            min_h_eps,
        })
    }

    /// `cfl * min(1 / (eta_bar + 1 + max|H'|), eps / (1 + max H + eta_bar))`
    /// over the slopes `[-Lip, Lip]` of the current field. The second bound
    /// is the `1/eps` stiffness of the nonlocal term and of the resource
    /// feedback.
    pub fn stable_dt(&self, phi: &[f64]) -> Result<f64> {
        let lip = lipschitz_seminorm(phi, self.cfg.grid.dx());
        let k = &self.cfg.kernel;
        let slope = k.max_slope(-lip, lip)?;
        let hmax = k.hamiltonian(lip)?.max(k.hamiltonian(-lip)?);
        let transport = 1.0 / (self.eta_bar + 1.0 + slope);
        let stiff = self.cfg.eps / (1.0 + hmax + self.eta_bar);
        Ok(self.cfg.cfl * transport.min(stiff))
    }

    /// One Heun step; resources are recomputed from the stage state at both stages.
    pub fn step(&self, state: &LogDensityState, dt: f64) -> Result<(LogDensityState, StepReport)> {
        let t = state.t();
        let blow = |e: Error| match e {
            Error::Range { .. } => Error::BlowUp {
                t,
                reason: e.to_string(),
            },
            other => other,
        };
        let phi = state.phi();
        let k1 = self.rhs(phi).map_err(blow)?;
        let stage: Vec<f64> = phi.iter().zip(&k1.value).map(|(p, r)| p + dt * r).collect();
        let k2 = self.rhs(&stage).map_err(blow)?;
        let next: Vec<f64> = phi
            .iter()
            .zip(k1.value.iter().zip(&k2.value))
            .map(|(p, (a, b))| p + 0.5 * dt * (a + b))
            .collect();
        if let Some(j) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                t: t + dt,
                reason: format!("phi became non-finite at x = {}", self.cfg.grid.node(j)),
            });
        }
        let max_rate = k1
            .value
            .iter()
            .chain(&k2.value)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let report = StepReport {
            dt,
            resources: k1.resources,
            min_h_eps: k1.min_h_eps.min(k2.min_h_eps),
            max_rate,
        };
        let next = LogDensityState::new(self.cfg.grid.clone(), next, self.cfg.eps, t + dt)?;
        Ok((next, report))
    }

    pub fn run(&self) -> Result<EpsTrace> {
        let mut state = self.initial_state()?;
        let dx = self.cfg.grid.dx();
        let times = self.cfg.output_times();
        let mut trace = EpsTrace {
            eps: self.cfg.eps,
            grid: self.cfg.grid.clone(),
            times: Vec::with_capacity(times.len()),
            resources: Vec::with_capacity(times.len()),
            mass: Vec::with_capacity(times.len()),
            sup_phi: Vec::with_capacity(times.len()),
            lipschitz: Vec::with_capacity(times.len()),
            semiconvexity: Vec::with_capacity(times.len()),
            snapshots: Vec::new(),
            extremes: StepExtremes::new(),
            eta_bar: self.eta_bar,
            status: RunStatus::Completed,
        };
        let initial_mass = self.mass(state.phi());
        trace.extremes.observe_state(state.phi(), dx, initial_mass);
        self.record(&mut trace, &state);

        let mut steps = 0usize;
        for &target in &times[1..] {
            while state.t() < target {
                let result = self
                    .cfg
                    .dt
                    .map(Ok)
                    .unwrap_or_else(|| self.stable_dt(state.phi()))
                    .map_err(|e| Error::BlowUp {
                        t: state.t(),
                        reason: e.to_string(),
                    })
                    .and_then(|dt| {
                        let land = state.t() + dt >= target - 1e-12 * target.max(1.0);
                        let dt = if land { target - state.t() } else { dt };
                        self.step(&state, dt).map(|(s, r)| (s, r, land))
                    });
                let (mut next, report, land) = match result {
                    Ok(v) => v,
                    Err(Error::BlowUp { t, reason }) => {
                        trace.status = RunStatus::BlownUp { t, reason };
                        return Ok(trace);
                    }
                    Err(e) => return Err(e),
                };
                if land {
                    let phi = next.phi().to_vec();
                    next = LogDensityState::new(self.cfg.grid.clone(), phi, self.cfg.eps, target)?;
                }
                steps += 1;

                let edge = self.boundary_max(next.phi()) / self.cfg.eps;
                if edge > -0.5 * self.cfg.barrier {
                    trace.status = RunStatus::BlownUp {
                        t: next.t(),
                        reason: format!(
                            "phi / eps = {edge:.3} near the grid ends exceeds -{}",
                            0.5 * self.cfg.barrier
                        ),
                    };
                    return Ok(trace);
                }

                let ex = &mut trace.extremes;
                ex.steps = steps;
                ex.min_dt = ex.min_dt.min(report.dt);
                ex.max_dt = ex.max_dt.max(report.dt);
                ex.min_h_eps = ex.min_h_eps.min(report.min_h_eps);
                ex.max_rate = ex.max_rate.max(report.max_rate);
                if steps.is_multiple_of(self.cfg.audit_every) || land {
                    let m = self.mass(next.phi());
                    if !m.is_finite() {
                        trace.status = RunStatus::BlownUp {
                            t: next.t(),
                            reason: "total mass overflowed".into(),
                        };
                        return Ok(trace);
                    }
                    ex.observe_state(next.phi(), dx, m);
                }
                state = next;
            }
            self.record(&mut trace, &state);
        }
        Ok(trace)
    }

    fn record(&self, trace: &mut EpsTrace, state: &LogDensityState) {
        let phi = state.phi();
        trace.times.push(state.t());
        trace.resources.push(self.resources(phi));
        trace.mass.push(self.mass(phi));
        trace.sup_phi.push(state.max_phi());
        trace.lipschitz.push(state.lipschitz());
        trace.semiconvexity.push(state.semiconvexity());
        if self.cfg.keep_snapshots {
            trace.snapshots.push(state.clone());
        }
    }
}

/// One Heun step of `state` with the configured (or a stable) step.
pub fn step(state: &LogDensityState, config: &EpsRunConfig) -> Result<LogDensityState> {
    if !state.grid().matches(&config.grid) || state.eps() != config.eps {
        return Err(Error::InvalidInput(
            "state grid or eps differs from the configuration".into(),
        ));
    }
    let solver = EpsSolver::new(config.clone())?;
    let dt = match config.dt {
        Some(dt) => dt,
        None => solver.stable_dt(state.phi())?,
    };
    solver.step(state, dt).map(|(s, _)| s)
}

/// Integrates the configured run to `t_end`. A blow-up ends the run early
/// with `RunStatus::BlownUp` and the trace recorded so far.
pub fn run(config: &EpsRunConfig) -> Result<EpsTrace> {
    EpsSolver::new(config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_times_include_t_end() {
        assert_eq!(output_times(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(output_times(1.0, 0.3).last(), Some(&1.0));
        assert_eq!(output_times(1.0, 0.3).len(), 5);
        assert_eq!(output_times(0.3, 0.1).len(), 4);
    }

    #[test]
    fn short_run_lands_on_output_times() {
        let mut cfg = EpsRunConfig::default_scenario(0.2);
        cfg.grid = TraitGrid::new(-10.0, 10.0, 201).unwrap();
        cfg.t_end = 0.1;
        cfg.output_interval = 0.05;
        let trace = run(&cfg).unwrap();
        assert!(trace.completed());
        assert_eq!(trace.times, vec![0.0, 0.05, 0.1]);
        assert_eq!(trace.snapshots.len(), 3);
    }
}
