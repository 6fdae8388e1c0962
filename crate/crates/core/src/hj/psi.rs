use crate::error::{Error, Result};
use crate::hj::limit::{LimitRunConfig, LimitStepRecord, LimitTrace};
use crate::model::LogDensityState;
use crate::pde::initial_profile;

/// Solution of the `psi` form and the `phi` reconstructed from it.
#[derive(Debug, Clone)]
pub struct PsiTrace {
    pub times: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    /// `phi = psi + sum_i J_i eta_i` (not clamped).
    pub phi: Vec<LogDensityState>,
    /// `J_i(t) = int_0^t I_i` at the output times.
    pub integrals: Vec<Vec<f64>>,
}

/// Integrates `d psi / dt = H(d psi / dx + sum_i J_i eta_i') - 1` along the
/// recorded steps of a limit run, with `J_i = int_0^t I_i`, and rebuilds
/// `phi = psi + sum_i J_i eta_i` at the trace's output times.
pub fn psi_solve(config: &LimitRunConfig, trace: &LimitTrace) -> Result<PsiTrace> {
    if !trace.grid.matches(&config.grid) {
        return Err(Error::Config(
            "limit trace and configuration use different grids".into(),
        ));
    }
    psi_solve_steps(config, &trace.steps, &trace.times)
}

/// As [`psi_solve`], from bare step records; outputs at `times`, which must
/// be step boundaries.
pub fn psi_solve_steps(
    config: &LimitRunConfig,
    steps: &[LimitStepRecord],
    times: &[f64],
) -> Result<PsiTrace> {
    let k = config.model.k();
    if steps.iter().any(|s| s.resources.len() != k) {
        return Err(Error::Config(format!(
            "resource records do not have {k} components"
        )));
    }
    let grid = &config.grid;
    let dx = grid.dx();
    let n = grid.len();
    let table = config.model.tabulate(grid);
    let phi0 = initial_profile(&config.initial, grid, 0.0)?;

    let mut psi = phi0.phi().to_vec();
    let mut t = 0.0;
    let mut integrals = vec![0.0; k];
    let mut out = PsiTrace {
        times: Vec::new(),
        psi: Vec::new(),
        phi: Vec::new(),
        integrals: Vec::new(),
    };
    let mut next_out = 0;
    let tol = |t: f64| 1e-9 * t.abs().max(1.0);
    let record = |t: f64, psi: &[f64], integrals: &[f64], out: &mut PsiTrace| -> Result<()> {
        let phi: Vec<f64> = (0..n)
            .map(|j| psi[j] + (0..k).map(|i| integrals[i] * table.eta(i, j)).sum::<f64>())
            .collect();
        out.times.push(t);
        out.psi.push(psi.to_vec());
        out.integrals.push(integrals.to_vec());
        out.phi
            .push(LogDensityState::new(grid.clone(), phi, 0.0, t)?);
        Ok(())
    };

    let mut s = 0;
    loop {
        while next_out < times.len() && (times[next_out] - t).abs() <= tol(t) {
            record(times[next_out], &psi, &integrals, &mut out)?;
            next_out += 1;
        }
        if next_out == times.len() {
            break;
        }
        let Some(step) = steps.get(s) else {
            return Err(Error::Config(format!(
                "step records end at t = {t} before the output time {}",
                times[next_out]
            )));
        };
        if (step.t - t).abs() > tol(t) {
            return Err(Error::Config(format!(
                "step record starts at {} but the replay is at {t}",
                step.t
            )));
        }

        // Flux arguments d psi + sum_i J_i eta_i' with exact eta_i'.
        let shift: Vec<f64> = (0..n)
            .map(|j| {
                table
                    .derivative_at(j)
                    .iter()
                    .zip(&integrals)
                    .map(|(d, a)| d * a)
                    .sum()
            })
            .collect();
        let diff: Vec<f64> = psi.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        let slopes: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let m = if j == 0 { diff[0] } else { diff[j - 1] };
                let p = if j == n - 1 { diff[n - 2] } else { diff[j] };
                (m + shift[j], p + shift[j])
            })
            .collect();
        let (lo, hi) = slopes.iter().fold((0.0f64, 0.0f64), |(lo, hi), &(a, b)| {
            (lo.min(a).min(b), hi.max(a).max(b))
        });
        let lambda = step.lambda.max(config.kernel.max_slope(lo, hi)?);
        // Keep the recorded step unless the shifted slopes need more viscosity.
        let dt_cap = config.cfl / (lambda / dx + 1.0);
        let substeps = ((step.dt / dt_cap) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = step.dt / substeps as f64;
        for _ in 0..substeps {
            let diff: Vec<f64> = psi.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
            let mut next = Vec::with_capacity(n);
            for j in 0..n {
                let m = if j == 0 { diff[0] } else { diff[j - 1] };
                let p = if j == n - 1 { diff[n - 2] } else { diff[j] };
                let flux = config
                    .flux
                    .flux(m + shift[j], p + shift[j], &config.kernel, lambda)?;
                next.push(psi[j] + h * (flux - 1.0));
            }
            psi = next;
            for (a, r) in integrals.iter_mut().zip(&step.resources) {
                *a += h * r;
            }
        }
        t += step.dt;
        s += 1;
    }
    Ok(out)
}
