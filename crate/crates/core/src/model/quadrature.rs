//! Log-space trapezoid quadrature.
//!
//! Integrals of `exp(phi / eps)` overflow long before the solvers lose
//! accuracy, so every such integral is evaluated as a log-sum-exp over
//! `log(w_j) + phi_j / eps`.

/// `log(sum(exp(xs)))` with the max shift. Returns `-inf` for an empty slice
/// or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// `log(sum_j w_j * exp(a_j))` for nonnegative weights; zero weights are skipped.
pub fn log_weighted_sum_exp(weights: &[f64], exponents: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), exponents.len());
    let mut m = f64::NEG_INFINITY;
    for (&w, &a) in weights.iter().zip(exponents) {
        if w > 0.0 && a > m {
            m = a;
        }
    }
    if !m.is_finite() {
        return m;
    }
    let s: f64 = weights
        .iter()
        .zip(exponents)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &a)| w * (a - m).exp())
        .sum();
    m + s.ln()
}

/// `1 / (1 + exp(s))` without overflow.
#[inline]
pub fn logistic_complement(s: f64) -> f64 {
    if s > 0.0 {
        let e = (-s).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + s.exp())
    }
}
