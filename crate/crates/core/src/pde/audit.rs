use crate::pde::solver::EpsTrace;

/// Constants of the a-priori bounds checked by [`audit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConstants {
    /// `int u <= mass`.
    pub mass: f64,
    /// `|d phi / dt| <= eta_bar + rate`.
    pub rate: f64,
    /// `max |D phi| <= lipschitz`.
    pub lipschitz: f64,
    /// `min D^2 phi >= -semiconvexity`.
    pub semiconvexity: f64,
    /// `H_eps(phi) >= -h_eps * eps`.
    pub h_eps: f64,
}

impl AuditConstants {
    /// Smallest constants satisfied by `trace`, inflated by `margin`.
    pub fn fit(trace: &EpsTrace, margin: f64) -> Self {
        let o = AuditObservation::of(trace);
        Self {
            mass: margin * o.mass,
            rate: margin * o.rate_excess.max(0.0),
            lipschitz: margin * o.lipschitz,
            semiconvexity: margin * o.semiconvexity_deficit.max(0.0),
            h_eps: margin * o.h_eps_scaled.max(0.0),
        }
    }
}

/// Extremes of a trace in the normalization of [`AuditConstants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditObservation {
    pub mass: f64,
    pub rate_excess: f64,
    pub lipschitz: f64,
    pub semiconvexity_deficit: f64,
    /// `-min H_eps / eps`.
    pub h_eps_scaled: f64,
}

impl AuditObservation {
    pub fn of(trace: &EpsTrace) -> Self {
        let ex = &trace.extremes;
        Self {
            mass: ex.max_mass,
            rate_excess: ex.max_rate - trace.eta_bar,
            lipschitz: ex.max_lipschitz,
            semiconvexity_deficit: -ex.min_semiconvexity,
            h_eps_scaled: if ex.min_h_eps.is_finite() {
                -ex.min_h_eps / trace.eps
            } else {
                0.0
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the a-priori bounds over every recorded step of `trace`.
/// A run that blew up fails the `completed` check.
pub fn audit(trace: &EpsTrace, c: &AuditConstants) -> AuditReport {
    let o = AuditObservation::of(trace);
    let le = |name, observed: f64, bound: f64| AuditCheck {
        name,
        observed,
        bound,
        passed: observed <= bound,
    };
    let ex = &trace.extremes;
    AuditReport {
        checks: vec![
            AuditCheck {
                name: "completed",
                observed: if trace.completed() { 1.0 } else { 0.0 },
                bound: 1.0,
                passed: trace.completed(),
            },
            le("mass", o.mass, c.mass),
            le("rate", ex.max_rate, trace.eta_bar + c.rate),
            le("lipschitz", o.lipschitz, c.lipschitz),
            AuditCheck {
                name: "semiconvexity",
                observed: ex.min_semiconvexity,
                bound: -c.semiconvexity,
                passed: ex.min_semiconvexity >= -c.semiconvexity,
            },
            AuditCheck {
                name: "h_eps",
                observed: ex.min_h_eps,
                bound: -c.h_eps * trace.eps,
                passed: ex.min_h_eps >= -c.h_eps * trace.eps,
            },
        ],
    }
}
