use crate::error::{Error, Result};
use crate::hj::scheme::{flux_update, one_sided, slope_bound, zero_set, FluxScheme};
use crate::metastable::{
    minimize_entropy, DiscreteMeasure, EquilibriumCertificate, FeasibleSet, Landscape,
    MinimizeOptions, DEFAULT_CERT_TOL,
};
use crate::model::{
    GrowthFunction, LogDensityState, MutationKernel, ResourceModel, ResourceVector, TraitGrid,
    DEFAULT_KERNEL_NODES,
};
use crate::pde::{initial_profile, output_times, InitialProfile};

/// Resource closure of the limit equation.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitClosure {
    /// Resources of the metastable measure of the zero set.
    Constrained,
    /// Fixed resources; the zero set and measure are not computed.
    Frozen(ResourceVector),
}

#[derive(Debug, Clone)]
pub struct LimitRunConfig {
    pub grid: TraitGrid,
    pub kernel: MutationKernel,
    pub model: ResourceModel,
    pub initial: InitialProfile,
    pub t_end: f64,
    /// Fixed step; must satisfy the CFL bound. `None` uses the bound itself.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub output_interval: f64,
    /// Zero-set band `b`; `None` means `10 dx Lip(phi)` of the current field.
    pub zero_band: Option<f64>,
    pub flux: FluxScheme,
    /// Viscosity coefficient (and CFL speed); `None` means `max |H'|` over
    /// the current slopes.
    pub lf_lambda: Option<f64>,
    /// Clamp `phi <= 0` after every step.
    pub clamp: bool,
    pub cert_tol: f64,
    pub closure: LimitClosure,
    /// Steps with `max_i |Delta I_i|` above this are recorded as jumps.
    pub jump_threshold: f64,
    pub keep_snapshots: bool,
}

impl LimitRunConfig {
    /// Limit counterpart of [`crate::pde::EpsRunConfig::default_scenario`].
    pub fn default_scenario() -> Self {
        Self {
            grid: TraitGrid::new(-10.0, 10.0, 1601).expect("valid grid"),
            kernel: MutationKernel::cos2(1.0, DEFAULT_KERNEL_NODES).expect("valid kernel"),
            model: ResourceModel::new(vec![GrowthFunction::gaussian(2.0, 0.0, 1.0)])
                .expect("valid model"),
            initial: InitialProfile::Well { center: 0.0 },
            t_end: 5.0,
            dt: None,
            cfl: 0.5,
            output_interval: 0.05,
            zero_band: None,
            flux: FluxScheme::default(),
            lf_lambda: None,
            clamp: true,
            cert_tol: DEFAULT_CERT_TOL,
            closure: LimitClosure::Constrained,
            jump_threshold: 0.02,
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
        positive(self.t_end, "t_end")?;
        positive(self.cfl, "cfl")?;
        positive(self.output_interval, "output_interval")?;
        positive(self.cert_tol, "cert_tol")?;
        positive(self.jump_threshold, "jump_threshold")?;
        if let Some(dt) = self.dt {
            positive(dt, "dt")?;
        }
        if let Some(b) = self.zero_band {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::Config(format!("zero_band must be >= 0, got {b}")));
            }
        }
        if let Some(l) = self.lf_lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Config(format!("lf_lambda must be >= 0, got {l}")));
            }
        }
        if let LimitClosure::Frozen(r) = &self.closure {
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
}

/// Closure evaluated at one state.
#[derive(Debug, Clone)]
pub struct StepClosure {
    pub omega: FeasibleSet,
    pub band: f64,
    /// `None` for a frozen closure.
    pub certificate: Option<EquilibriumCertificate>,
    pub resources: ResourceVector,
}

impl StepClosure {
    pub fn measure(&self) -> DiscreteMeasure {
        self.certificate
            .as_ref()
            .map(|c| c.measure.clone())
            .unwrap_or_default()
    }
}

/// Data of one time step, enough to replay the resource history.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitStepRecord {
    pub t: f64,
    pub dt: f64,
    pub lambda: f64,
    /// Resources used on `[t, t + dt)`.
    pub resources: Vec<f64>,
}

/// A step across which some `I_i` changed by more than the jump threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceJump {
    pub t: f64,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LimitTrace {
    pub grid: TraitGrid,
    pub times: Vec<f64>,
    pub resources: Vec<ResourceVector>,
    pub measures: Vec<DiscreteMeasure>,
    /// Certificates of the emitted measures (empty for a frozen closure).
    pub certificates: Vec<EquilibriumCertificate>,
    pub snapshots: Vec<LogDensityState>,
    /// `psi = phi - sum_i (int_0^t I_i) eta_i` at the output times.
    pub psi_snapshots: Vec<Vec<f64>>,
    pub steps: Vec<LimitStepRecord>,
    pub jumps: Vec<ResourceJump>,
    /// First time the zero set was nonempty; before it `mu = 0` and `I = 1`.
    pub activation_time: Option<f64>,
}

impl LimitTrace {
    pub fn resource_series(&self, i: usize) -> Vec<f64> {
        self.resources.iter().map(|r| r[i]).collect()
    }

    pub fn final_state(&self) -> Option<&LogDensityState> {
        self.snapshots.last()
    }
}

/// Explicit solver of the constrained limit equation.
#[derive(Debug, Clone)]
pub struct LimitSolver {
    cfg: LimitRunConfig,
    land: Landscape,
    eta_bar: f64,
}

impl LimitSolver {
    pub fn new(cfg: LimitRunConfig) -> Result<Self> {
        cfg.validate()?;
        let land = Landscape::new(cfg.grid.clone(), cfg.model.clone());
        let eta_bar = land.table().envelope_max();
        Ok(Self { cfg, land, eta_bar })
    }

    pub fn config(&self) -> &LimitRunConfig {
        &self.cfg
    }

    pub fn landscape(&self) -> &Landscape {
        &self.land
    }

    pub fn initial_state(&self) -> Result<LogDensityState> {
        initial_profile(&self.cfg.initial, &self.cfg.grid, 0.0)
    }

    pub fn band(&self, state: &LogDensityState) -> f64 {
        self.cfg
            .zero_band
            .unwrap_or_else(|| 10.0 * self.cfg.grid.dx() * state.lipschitz())
    }

    /// Zero set, metastable measure and resources of `state`.
    pub fn closure(
        &self,
        state: &LogDensityState,
        warm: Option<&DiscreteMeasure>,
    ) -> Result<StepClosure> {
        let band = self.band(state);
        match &self.cfg.closure {
            LimitClosure::Frozen(r) => Ok(StepClosure {
                omega: FeasibleSet::empty(self.cfg.grid.len()),
                band,
                certificate: None,
                resources: r.clone(),
            }),
            LimitClosure::Constrained => {
                let omega = zero_set(state, band);
                let opts = MinimizeOptions {
                    cert_tol: self.cfg.cert_tol,
                    warm_start: warm.cloned(),
                    ..MinimizeOptions::default()
                };
                let cert = minimize_entropy(&self.land, &omega, &opts)
                    .map_err(|e| e.at_time(state.t()))?;
                Ok(StepClosure {
                    omega,
                    band,
                    resources: cert.resources.clone(),
                    certificate: Some(cert),
                })
            }
        }
    }

    /// Largest stable step and the viscosity coefficient for `phi`.
    pub fn stable_step(&self, phi: &[f64]) -> Result<(f64, f64)> {
        let dx = self.cfg.grid.dx();
        let bound = slope_bound(&one_sided(phi, dx), &self.cfg.kernel)?;
        let lambda = match self.cfg.lf_lambda {
            Some(l) if l < bound => {
                return Err(Error::Config(format!(
                    "lf_lambda = {l} is below the monotonicity bound {bound}"
                )))
            }
            Some(l) => l,
            None => bound,
        };
        Ok((self.cfg.cfl / (lambda / dx + self.eta_bar + 1.0), lambda))
    }

    /// Transport step with given resources; `dt <= 0` means the stable step.
    /// Returns the new state and the `(dt, lambda)` used.
    pub fn advance(
        &self,
        state: &LogDensityState,
        resources: &[f64],
        dt: Option<f64>,
    ) -> Result<(LogDensityState, f64, f64)> {
        let (dt_max, lambda) = self.stable_step(state.phi())?;
        let dt = match dt {
            Some(dt) if dt > dt_max * (1.0 + 1e-12) => {
                return Err(Error::Config(format!(
                    "dt = {dt} violates the CFL bound {dt_max}"
                )))
            }
            Some(dt) => dt,
            None => dt_max,
        };
        let dx = self.cfg.grid.dx();
        let slopes = one_sided(state.phi(), dx);
        let table = self.land.table();
        let mut phi = flux_update(
            self.cfg.flux,
            state.phi(),
            &slopes,
            |j| table.growth(resources, j),
            &self.cfg.kernel,
            lambda,
            dt,
        )
        .map_err(|e| Error::BlowUp {
            t: state.t(),
            reason: e.to_string(),
        })?;
        if self.cfg.clamp {
            for p in &mut phi {
                *p = p.min(0.0);
            }
        }
        if phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::BlowUp {
                t: state.t() + dt,
                reason: "phi became non-finite".into(),
            });
        }
        let next = LogDensityState::new(self.cfg.grid.clone(), phi, 0.0, state.t() + dt)?;
        Ok((next, dt, lambda))
    }

    pub fn run(&self) -> Result<LimitTrace> {
        let times = output_times(self.cfg.t_end, self.cfg.output_interval);
        let k = self.cfg.model.k();
        let mut trace = LimitTrace {
            grid: self.cfg.grid.clone(),
            times: Vec::with_capacity(times.len()),
            resources: Vec::with_capacity(times.len()),
            measures: Vec::with_capacity(times.len()),
            certificates: Vec::new(),
            snapshots: Vec::new(),
            psi_snapshots: Vec::new(),
            steps: Vec::new(),
            jumps: Vec::new(),
            activation_time: None,
        };
        let mut state = self.initial_state()?;
        let mut integrals = vec![0.0; k];
        let mut warm: Option<DiscreteMeasure> = None;
        let mut previous: Option<Vec<f64>> = None;
        let mut next_out = 0;

        loop {
            let closure = self.closure(&state, warm.as_ref())?;
            if trace.activation_time.is_none() && !closure.omega.is_empty() {
                trace.activation_time = Some(state.t());
            }
            let r = closure.resources.to_vec();
            if let Some(prev) = &previous {
                let delta = prev
                    .iter()
                    .zip(&r)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if delta > self.cfg.jump_threshold {
                    trace.jumps.push(ResourceJump {
                        t: state.t(),
                        before: prev.clone(),
                        after: r.clone(),
                    });
                }
            }

            let at_output = next_out < times.len() && state.t() >= times[next_out];
            if at_output {
                trace.times.push(state.t());
                trace.resources.push(closure.resources.clone());
                trace.measures.push(closure.measure());
                if let Some(c) = &closure.certificate {
                    trace.certificates.push(c.clone());
                }
                if self.cfg.keep_snapshots {
                    let psi = state
                        .phi()
                        .iter()
                        .enumerate()
                        .map(|(j, p)| {
                            p - (0..k)
                                .map(|i| integrals[i] * self.land.table().eta(i, j))
                                .sum::<f64>()
                        })
                        .collect();
                    trace.psi_snapshots.push(psi);
                    trace.snapshots.push(state.clone());
                }
                next_out += 1;
                if next_out == times.len() {
                    break;
                }
            }

            let target = times[next_out];
            let (dt_max, _) = self.stable_step(state.phi())?;
            let dt = self.cfg.dt.unwrap_or(dt_max);
            let land = state.t() + dt >= target - 1e-12 * target.max(1.0);
            let dt = if land { target - state.t() } else { dt };
            let (mut next, dt, lambda) = self.advance(&state, &r, Some(dt))?;
            if land {
                next = LogDensityState::new(self.cfg.grid.clone(), next.into_phi(), 0.0, target)?;
            }
            trace.steps.push(LimitStepRecord {
                t: state.t(),
                dt,
                lambda,
                resources: r.clone(),
            });
            for (acc, v) in integrals.iter_mut().zip(&r) {
                *acc += dt * v;
            }
            warm = closure.certificate.map(|c| c.measure);
            previous = Some(r);
            state = next;
        }
        Ok(trace)
    }
}

/// One step of the limit equation: closure of `state` first, then transport.
pub fn limit_step(
    state: &LogDensityState,
    config: &LimitRunConfig,
) -> Result<(LogDensityState, ResourceVector, DiscreteMeasure)> {
    if !state.grid().matches(&config.grid) {
        return Err(Error::InvalidInput(
            "state grid differs from the configuration".into(),
        ));
    }
    let solver = LimitSolver::new(config.clone())?;
    let closure = solver.closure(state, None)?;
    let (next, _, _) = solver.advance(state, &closure.resources, config.dt)?;
    let mu = closure.measure();
    Ok((next, closure.resources, mu))
}

/// Runs the limit equation to `t_end`.
pub fn solve_limit(config: &LimitRunConfig) -> Result<LimitTrace> {
    LimitSolver::new(config.clone())?.run()
}
