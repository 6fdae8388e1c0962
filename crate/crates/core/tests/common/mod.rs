//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Composite Simpson rule with `2 m` panels on `[a, b]`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// The normalized cos^2 kernel on `[-1, 1]`; it has unit mass exactly.
pub fn cos2(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        let c = (0.5 * std::f64::consts::PI * z).cos();
        c * c
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
