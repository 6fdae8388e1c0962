use std::ops::Deref;

use crate::error::{Error, Result};
use crate::model::grid::TraitGrid;
use crate::model::quadrature::{log_weighted_sum_exp, logistic_complement};

/// One growth function `eta_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthFunction {
    /// `amplitude * exp(-(x - center)^2 / width^2)`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Constant rate; never decays, so it only passes validation on purpose-built tests.
    Constant { value: f64 },
    /// Piecewise-linear table; derivatives come from centered differences of
    /// the table, themselves linearly interpolated.
    Table(TabulatedFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    x: Vec<f64>,
    values: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl TabulatedFunction {
    pub fn new(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.len() != values.len() || x.len() < 3 {
            return Err(Error::InvalidInput(
                "tabulated growth function needs at least 3 points".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "tabulated growth abscissae must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "tabulated growth values must be finite".into(),
            ));
        }
        let first = centered_differences(&x, &values);
        let second = centered_differences(&x, &first);
        Ok(Self {
            x,
            values,
            first,
            second,
        })
    }

    fn interp(&self, table: &[f64], x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return table[0];
        }
        if x >= self.x[n - 1] {
            return table[n - 1];
        }
        let k = self.x.partition_point(|&xi| xi <= x) - 1;
        let f = (x - self.x[k]) / (self.x[k + 1] - self.x[k]);
        table[k] * (1.0 - f) + table[k + 1] * f
    }
}

fn centered_differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let (a, b) = match j {
                0 => (0, 1),
                j if j == n - 1 => (n - 2, n - 1),
                j => (j - 1, j + 1),
            };
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

impl GrowthFunction {
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        GrowthFunction::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            GrowthFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let r = (x - center) / width;
                amplitude * (-r * r).exp()
            }
            GrowthFunction::Constant { value } => *value,
            GrowthFunction::Table(t) => t.interp(&t.values, x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            GrowthFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let r = (x - center) / width;
                -2.0 * r / width * amplitude * (-r * r).exp()
            }
            GrowthFunction::Constant { .. } => 0.0,
            GrowthFunction::Table(t) => t.interp(&t.first, x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            GrowthFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let r = (x - center) / width;
                (4.0 * r * r - 2.0) / (width * width) * amplitude * (-r * r).exp()
            }
            GrowthFunction::Constant { .. } => 0.0,
            GrowthFunction::Table(t) => t.interp(&t.second, x),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            GrowthFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "gaussian amplitude must be positive, got {amplitude}"
                    )));
                }
                if !(width.is_finite() && *width > 0.0) || !center.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "gaussian needs finite center and positive width, got ({center}, {width})"
                    )));
                }
            }
            GrowthFunction::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "constant growth must be positive, got {value}"
                    )));
                }
            }
            GrowthFunction::Table(_) => {}
        }
        Ok(())
    }
}

/// The `k` growth functions `eta_1..eta_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceModel {
    eta: Vec<GrowthFunction>,
}

impl ResourceModel {
    pub fn new(eta: Vec<GrowthFunction>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::InvalidInput(
                "at least one resource is required".into(),
            ));
        }
        for f in &eta {
            f.check()?;
        }
        Ok(Self { eta })
    }

    /// Single Gaussian resource, the default chemostat.
    pub fn single_gaussian(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Self::new(vec![GrowthFunction::gaussian(amplitude, center, width)])
    }

    pub fn k(&self) -> usize {
        self.eta.len()
    }

    pub fn functions(&self) -> &[GrowthFunction] {
        &self.eta
    }

    pub fn eta(&self, i: usize, x: f64) -> f64 {
        self.eta[i].value(x)
    }

    pub fn eta_prime(&self, i: usize, x: f64) -> f64 {
        self.eta[i].derivative(x)
    }

    /// `sum_i |eta_i| + |eta_i'| + |eta_i''|`, the tightest admissible envelope.
    pub fn envelope(&self, x: f64) -> f64 {
        self.eta
            .iter()
            .map(|f| f.value(x).abs() + f.derivative(x).abs() + f.second_derivative(x).abs())
            .sum()
    }

    /// Tabulates every `eta_i` and `eta_i'` on the grid.
    pub fn tabulate(&self, grid: &TraitGrid) -> EtaTable {
        let k = self.k();
        let n = grid.len();
        let mut values = Vec::with_capacity(k * n);
        let mut derivatives = Vec::with_capacity(k * n);
        let mut envelope = Vec::with_capacity(n);
        for j in 0..n {
            let x = grid.node(j);
            for f in &self.eta {
                values.push(f.value(x));
                derivatives.push(f.derivative(x));
            }
            envelope.push(self.envelope(x));
        }
        EtaTable {
            k,
            n,
            values,
            derivatives,
            envelope,
        }
    }
}

/// Growth functions sampled on a grid, node-major (`values[j * k + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct EtaTable {
    k: usize,
    n: usize,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    envelope: Vec<f64>,
}

impl EtaTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `(eta_1(x_j), .., eta_k(x_j))`.
    #[inline]
    pub fn at(&self, j: usize) -> &[f64] {
        &self.values[j * self.k..(j + 1) * self.k]
    }

    #[inline]
    pub fn eta(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.k + i]
    }

    #[inline]
    pub fn derivative_at(&self, j: usize) -> &[f64] {
        &self.derivatives[j * self.k..(j + 1) * self.k]
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn envelope_max(&self) -> f64 {
        self.envelope.iter().copied().fold(0.0, f64::max)
    }

    /// `sum_i I_i eta_i(x_j) - 1`.
    #[inline]
    pub fn growth(&self, resources: &[f64], j: usize) -> f64 {
        self.at(j)
            .iter()
            .zip(resources)
            .map(|(e, r)| e * r)
            .sum::<f64>()
            - 1.0
    }

    /// Growth at every node.
    pub fn growth_field(&self, resources: &[f64]) -> Vec<f64> {
        (0..self.n).map(|j| self.growth(resources, j)).collect()
    }
}

/// Resource concentrations `I_1..I_k`, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceVector(Vec<f64>);

impl ResourceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty resource vector".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "resource concentration {v} outside (0, 1]"
            )));
        }
        Ok(Self(values))
    }

    /// Resources of the empty population.
    pub fn ones(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub(crate) fn from_loads(loads: &[f64]) -> Self {
        Self(loads.iter().map(|y| 1.0 / (1.0 + y)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs_diff(&self, other: &ResourceVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Deref for ResourceVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `I_i = 1 / (1 + int eta_i u dx)` with trapezoid quadrature.
pub fn resource_response(
    u: &[f64],
    grid: &TraitGrid,
    model: &ResourceModel,
) -> Result<ResourceVector> {
    if u.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "density has {} samples for a {}-node grid",
            u.len(),
            grid.len()
        )));
    }
    if let Some(v) = u.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "density must be finite and nonnegative, found {v}"
        )));
    }
    let w = grid.trapezoid_weights();
    let loads: Vec<f64> = (0..model.k())
        .map(|i| {
            (0..grid.len())
                .map(|j| w[j] * model.eta(i, grid.node(j)) * u[j])
                .sum()
        })
        .collect();
    Ok(ResourceVector::from_loads(&loads))
}

/// Resources of `u = exp(phi / eps)`, evaluated in log space.
pub fn resource_response_log(
    phi: &[f64],
    eps: f64,
    weights: &[f64],
    table: &EtaTable,
) -> ResourceVector {
    let exponents: Vec<f64> = phi.iter().map(|p| p / eps).collect();
    let mut wi = vec![0.0; phi.len()];
    let values = (0..table.k())
        .map(|i| {
            for (j, w) in wi.iter_mut().enumerate() {
                *w = weights[j] * table.eta(i, j);
            }
            logistic_complement(log_weighted_sum_exp(&wi, &exponents))
        })
        .collect();
    ResourceVector(values)
}

/// `sum_i I_i eta_i(x) - 1`. Accepts any resource values, including zeros.
pub fn growth_rate(resources: &[f64], model: &ResourceModel, x: f64) -> Result<f64> {
    if resources.len() != model.k() {
        return Err(Error::InvalidInput(format!(
            "{} resource values for a {}-resource model",
            resources.len(),
            model.k()
        )));
    }
    if resources.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("resource values must be finite".into()));
    }
    Ok(resources
        .iter()
        .enumerate()
        .map(|(i, r)| r * model.eta(i, x))
        .sum::<f64>()
        - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let f = GrowthFunction::gaussian(2.0, 0.3, 1.5);
        let h = 1e-5;
        for x in [-2.0, 0.0, 0.7, 3.1] {
            let d1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let d2 = (f.derivative(x + h) - f.derivative(x - h)) / (2.0 * h);
            assert!((d1 - f.derivative(x)).abs() < 1e-8);
            assert!((d2 - f.second_derivative(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn resource_vector_bounds() {
        assert!(ResourceVector::new(vec![0.5, 1.0]).is_ok());
        assert!(ResourceVector::new(vec![0.0]).is_err());
        assert!(ResourceVector::new(vec![1.2]).is_err());
    }

    #[test]
    fn response_rejects_bad_density() {
        let g = TraitGrid::new(-1.0, 1.0, 5).unwrap();
        let m = ResourceModel::single_gaussian(2.0, 0.0, 1.0).unwrap();
        assert!(resource_response(&[0.0, 1.0, f64::NAN, 0.0, 0.0], &g, &m).is_err());
        assert!(resource_response(&[0.0, -1.0, 0.0, 0.0, 0.0], &g, &m).is_err());
        assert!(resource_response(&[0.0; 4], &g, &m).is_err());
    }

    #[test]
    fn log_space_response_matches_direct() {
        let g = TraitGrid::new(-4.0, 4.0, 401).unwrap();
        let m = ResourceModel::new(vec![
            GrowthFunction::gaussian(2.0, 1.0, 1.0),
            GrowthFunction::gaussian(1.5, -1.0, 0.8),
        ])
        .unwrap();
        let eps = 0.3;
        let phi: Vec<f64> = g.nodes().iter().map(|x| -x * x / 2.0 + 0.1).collect();
        let u: Vec<f64> = phi.iter().map(|p| (p / eps).exp()).collect();
        let direct = resource_response(&u, &g, &m).unwrap();
        let logged = resource_response_log(&phi, eps, &g.trapezoid_weights(), &m.tabulate(&g));
        assert!(direct.max_abs_diff(&logged) < 1e-14);
    }

    #[test]
    fn table_function_interpolates() {
        let t = TabulatedFunction::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0, 9.0]).unwrap();
        let f = GrowthFunction::Table(t);
        assert_eq!(f.value(1.5), 2.5);
        assert_eq!(f.value(-1.0), 0.0);
        assert_eq!(f.derivative(1.0), 2.0);
    }
}
