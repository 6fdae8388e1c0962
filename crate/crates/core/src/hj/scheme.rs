use crate::error::Result;
use crate::metastable::FeasibleSet;
use crate::model::{LogDensityState, MutationKernel};

/// Numerical zero set `{phi >= -band}` of a limit state.
pub fn zero_set(state: &LogDensityState, band: f64) -> FeasibleSet {
    FeasibleSet::from_mask(&state.phi().iter().map(|&p| p >= -band).collect::<Vec<_>>())
}

/// Lax-Friedrichs flux `H((p- + p+)/2) + (lambda/2)(p+ - p-)` for the
/// update `phi + dt * flux` of `d phi / dt = H(d phi / dx)`.
///
/// The viscosity term enters with a plus sign because `H` sits on the right
/// of the equation. The flux is nonincreasing in `p-` and nondecreasing in
/// `p+` (hence the update is monotone under the CFL bound) whenever
/// `lambda >= max |H'|` between the two slopes.
pub fn numerical_hamiltonian(
    p_minus: f64,
    p_plus: f64,
    kernel: &MutationKernel,
    lambda: f64,
) -> Result<f64> {
    Ok(kernel.hamiltonian(0.5 * (p_minus + p_plus))? + 0.5 * lambda * (p_plus - p_minus))
}

/// Godunov flux of the convex `H`: `max H` over `[p-, p+]` when `p- <= p+`,
/// `min H` over `[p+, p-]` otherwise. `H` is minimal at `p = 0` (centered
/// kernel), so no viscosity coefficient is needed.
pub fn godunov_hamiltonian(p_minus: f64, p_plus: f64, kernel: &MutationKernel) -> Result<f64> {
    let (a, b) = (kernel.hamiltonian(p_minus)?, kernel.hamiltonian(p_plus)?);
    Ok(if p_minus <= p_plus {
        a.max(b)
    } else if p_plus <= 0.0 && 0.0 <= p_minus {
        0.0
    } else {
        a.min(b)
    })
}

/// Numerical flux used by the limit solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxScheme {
    /// [`godunov_hamiltonian`]: exact at smooth maxima of `phi`.
    #[default]
    Godunov,
    /// [`numerical_hamiltonian`] with the global coefficient `lambda`.
    LaxFriedrichs,
}

impl FluxScheme {
    pub fn flux(
        self,
        p_minus: f64,
        p_plus: f64,
        kernel: &MutationKernel,
        lambda: f64,
    ) -> Result<f64> {
        match self {
            FluxScheme::Godunov => godunov_hamiltonian(p_minus, p_plus, kernel),
            FluxScheme::LaxFriedrichs => numerical_hamiltonian(p_minus, p_plus, kernel, lambda),
        }
    }
}

/// One-sided differences `(p-_j, p+_j)` with ghost values from linear
/// extrapolation, so `p-_0 = p+_0` and `p+_{n-1} = p-_{n-1}`.
pub(crate) fn one_sided(phi: &[f64], dx: f64) -> Vec<(f64, f64)> {
    let n = phi.len();
    let d: Vec<f64> = phi.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
    (0..n)
        .map(|j| {
            let minus = if j == 0 { d[0] } else { d[j - 1] };
            let plus = if j == n - 1 { d[n - 2] } else { d[j] };
            (minus, plus)
        })
        .collect()
}

/// `max |H'|` over the range spanned by the slopes.
pub(crate) fn slope_bound(slopes: &[(f64, f64)], kernel: &MutationKernel) -> Result<f64> {
    let (lo, hi) = slopes.iter().fold((0.0f64, 0.0f64), |(lo, hi), &(a, b)| {
        (lo.min(a).min(b), hi.max(a).max(b))
    });
    kernel.max_slope(lo, hi)
}

/// `phi + dt (growth + flux)` at every node.
pub(crate) fn flux_update(
    scheme: FluxScheme,
    phi: &[f64],
    slopes: &[(f64, f64)],
    growth: impl Fn(usize) -> f64,
    kernel: &MutationKernel,
    lambda: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    phi.iter()
        .zip(slopes)
        .enumerate()
        .map(|(j, (&p, &(m, q)))| Ok(p + dt * (growth(j) + scheme.flux(m, q, kernel, lambda)?)))
        .collect()
}
