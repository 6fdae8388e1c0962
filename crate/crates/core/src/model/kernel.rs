use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest admissible exponent argument in `exp(p z)` and `exp(dphi / eps)`.
pub const EXPONENT_GUARD: f64 = 500.0;

/// Default number of kernel quadrature nodes.
pub const DEFAULT_KERNEL_NODES: usize = 201;

const MIN_KERNEL_NODES: usize = 65;

/// Mutation kernel `K`, tabulated on a uniform symmetric node set over
/// `[-radius, radius]` with trapezoid weights.
///
/// After construction the tabulation is symmetric, nonnegative, vanishes at
/// both ends and has unit discrete mass, so the discrete first moment is zero
/// up to rounding. The disabled kernel (`K = 0`) switches mutation off.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationKernel {
    radius: f64,
    nodes: Vec<f64>,
    density: Vec<f64>,
    /// `w_q * K(z_q)`; a probability vector unless the kernel is disabled.
    weights: Vec<f64>,
}

impl MutationKernel {
    /// Normalized `cos^2(pi z / (2 radius))` bump.
    pub fn cos2(radius: f64, nodes: usize) -> Result<Self> {
        Self::from_fn(radius, nodes, |z| {
            let c = (0.5 * PI * z / radius).cos();
            c * c
        })
    }

    /// Normalized smooth bump `exp(-1 / (1 - (z/radius)^2))`.
    pub fn bump(radius: f64, nodes: usize) -> Result<Self> {
        Self::from_fn(radius, nodes, |z| {
            let r = z / radius;
            let d = 1.0 - r * r;
            if d <= 0.0 {
                0.0
            } else {
                (-1.0 / d).exp()
            }
        })
    }

    /// Kernel from a user table `(z, K(z))`, linearly resampled onto the
    /// quadrature nodes. The table must cover `[-radius, radius]` with
    /// `radius = max |z|`, be nonnegative and (nearly) vanish at the ends.
    pub fn from_table(z: &[f64], density: &[f64], nodes: usize) -> Result<Self> {
        if z.len() != density.len() || z.len() < 3 {
            return Err(Error::InvalidInput(
                "kernel table needs at least 3 (z, K) pairs of equal length".into(),
            ));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "kernel table abscissae must be strictly increasing".into(),
            ));
        }
        if density.iter().any(|&k| !(k >= 0.0) || !k.is_finite()) {
            return Err(Error::InvalidInput(
                "kernel table values must be finite and nonnegative".into(),
            ));
        }
        let radius = z[0].abs().max(z[z.len() - 1].abs());
        let peak = density.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::InvalidInput(
                "kernel table is identically zero".into(),
            ));
        }
        let ends = density[0].max(density[density.len() - 1]);
        if ends > 1e-8 * peak {
            return Err(Error::InvalidInput(
                "kernel table must vanish at the support ends".into(),
            ));
        }
        let interp = |x: f64| -> f64 {
            if x <= z[0] || x >= z[z.len() - 1] {
                return 0.0;
            }
            let k = z.partition_point(|&zi| zi <= x) - 1;
            let f = (x - z[k]) / (z[k + 1] - z[k]);
            density[k] * (1.0 - f) + density[k + 1] * f
        };
        Self::from_fn(radius, nodes, interp)
    }

    /// The zero kernel: no mutation, `H = H_eps = 0`.
    pub fn disabled() -> Self {
        Self {
            radius: 0.0,
            nodes: vec![0.0],
            density: vec![0.0],
            weights: vec![0.0],
        }
    }

    fn from_fn(radius: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "kernel support radius must be positive, got {radius}"
            )));
        }
        if nodes < MIN_KERNEL_NODES || nodes.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "kernel needs an odd node count >= {MIN_KERNEL_NODES}, got {nodes}"
            )));
        }
        let c = (nodes - 1) / 2;
        let h = radius / c as f64;
        // Exactly antisymmetric nodes: z_{m-1-q} = -z_q.
        let z: Vec<f64> = (0..nodes).map(|q| (q as f64 - c as f64) * h).collect();
        let mut k: Vec<f64> = z.iter().map(|&zq| f(zq)).collect();
        if k.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "kernel density must be finite and nonnegative".into(),
            ));
        }
        for q in 0..c {
            let s = 0.5 * (k[q] + k[nodes - 1 - q]);
            k[q] = s;
            k[nodes - 1 - q] = s;
        }
        k[0] = 0.0;
        k[nodes - 1] = 0.0;
        // Interior trapezoid weights are all h (the end weights multiply zero).
        let mass: f64 = k.iter().map(|v| v * h).sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidInput("kernel has zero mass".into()));
        }
        let density: Vec<f64> = k.iter().map(|v| v / mass).collect();
        let weights: Vec<f64> = density.iter().map(|v| v * h).collect();
        Ok(Self {
            radius,
            nodes: z,
            density,
            weights,
        })
    }

    pub fn is_disabled(&self) -> bool {
        self.radius == 0.0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Quadrature nodes `z_q`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Normalized density values `K(z_q)`.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Products `w_q K(z_q)` of quadrature weight and density.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, z)| w * z)
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, z)| w * z * z)
            .sum()
    }

    fn guard(&self, p: f64) -> Result<()> {
        let arg = p.abs() * self.radius;
        if !p.is_finite() || arg > EXPONENT_GUARD {
            return Err(Error::Range {
                value: arg,
                guard: EXPONENT_GUARD,
                context: "hamiltonian |p| * radius",
            });
        }
        Ok(())
    }

    /// `H(p) = int K(z) (exp(p z) - 1) dz`.
    pub fn hamiltonian(&self, p: f64) -> Result<f64> {
        self.guard(p)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, z)| w * (p * z).exp_m1())
            .sum())
    }

    /// `H'(p) = int z K(z) exp(p z) dz`.
    pub fn hamiltonian_derivative(&self, p: f64) -> Result<f64> {
        self.guard(p)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, z)| w * z * (p * z).exp())
            .sum())
    }

    /// `max |H'(p)|` over `[p_lo, p_hi]`. `H'` is nondecreasing, so the
    /// maximum sits at one of the ends.
    pub fn max_slope(&self, p_lo: f64, p_hi: f64) -> Result<f64> {
        let a = self.hamiltonian_derivative(p_lo)?.abs();
        let b = self.hamiltonian_derivative(p_hi)?.abs();
        Ok(a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_normalizes_and_centers() {
        for k in [
            MutationKernel::cos2(1.0, 201).unwrap(),
            MutationKernel::bump(0.7, 65).unwrap(),
        ] {
            assert!((k.mass() - 1.0).abs() < 1e-12);
            assert!(k.first_moment().abs() < 1e-12);
            assert_eq!(k.density()[0], 0.0);
            assert_eq!(*k.density().last().unwrap(), 0.0);
        }
    }

    #[test]
    fn cos2_second_moment_matches_closed_form() {
        // int z^2 cos^2(pi z / 2) dz over [-1, 1] = 1/3 - 2/pi^2.
        let k = MutationKernel::cos2(1.0, 2001).unwrap();
        let exact = 1.0 / 3.0 - 2.0 / (PI * PI);
        assert!((k.second_moment() - exact).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_vanishes_at_zero() {
        let k = MutationKernel::cos2(1.0, 201).unwrap();
        assert_eq!(k.hamiltonian(0.0).unwrap(), 0.0);
        assert_eq!(MutationKernel::disabled().hamiltonian(3.0).unwrap(), 0.0);
    }

    #[test]
    fn guard_rejects_large_arguments() {
        let k = MutationKernel::cos2(2.0, 201).unwrap();
        assert!(k.hamiltonian(249.0).is_ok());
        assert!(matches!(k.hamiltonian(251.0), Err(Error::Range { .. })));
        assert!(k.hamiltonian(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_tables_and_counts() {
        assert!(MutationKernel::cos2(1.0, 64).is_err());
        assert!(MutationKernel::cos2(1.0, 33).is_err());
        assert!(MutationKernel::cos2(0.0, 101).is_err());
        let z = [-1.0, 0.0, 1.0];
        assert!(MutationKernel::from_table(&z, &[0.0, -1.0, 0.0], 101).is_err());
        assert!(MutationKernel::from_table(&z, &[0.5, 1.0, 0.0], 101).is_err());
        assert!(MutationKernel::from_table(&z, &[0.0, 1.0, 0.0], 101).is_ok());
    }

    #[test]
    fn table_kernel_is_symmetrized() {
        let z = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let k = MutationKernel::from_table(&z, &[0.0, 3.0, 1.0, 0.0, 0.0], 101).unwrap();
        assert!(k.first_moment().abs() < 1e-12);
        let d = k.density();
        for q in 0..d.len() {
            assert_eq!(d[q], d[d.len() - 1 - q]);
        }
    }
}
