use crate::error::{Error, Result};
use crate::hj::LimitStepRecord;

/// Right-continuous piecewise-constant function: `values[n]` on
/// `[starts[n], starts[n + 1])`, the last value up to `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    starts: Vec<f64>,
    values: Vec<f64>,
    end: f64,
}

impl PiecewiseConstant {
    pub fn new(starts: Vec<f64>, values: Vec<f64>, end: f64) -> Result<Self> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(Error::InvalidInput(
                "need matching, nonempty breakpoints and values".into(),
            ));
        }
        if starts.windows(2).any(|w| !(w[1] > w[0])) || !(end > starts[starts.len() - 1]) {
            return Err(Error::InvalidInput(
                "breakpoints must increase and end after the last one".into(),
            ));
        }
        Ok(Self {
            starts,
            values,
            end,
        })
    }

    /// Component `i` of the resources used by a limit run's steps.
    pub fn from_steps(steps: &[LimitStepRecord], i: usize) -> Result<Self> {
        let last = steps
            .last()
            .ok_or_else(|| Error::InvalidInput("no steps recorded".into()))?;
        Self::new(
            steps.iter().map(|s| s.t).collect(),
            steps.iter().map(|s| s.resources[i]).collect(),
            last.t + last.dt,
        )
    }

    pub fn start(&self) -> f64 {
        self.starts[0]
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.starts.partition_point(|&s| s <= t);
        self.values[n.saturating_sub(1)]
    }

    /// `int_a^b |f - level|`, exact.
    pub fn abs_deviation(&self, a: f64, b: f64, level: f64) -> f64 {
        let mut total = 0.0;
        for (n, (&s, &v)) in self.starts.iter().zip(&self.values).enumerate() {
            let e = self.starts.get(n + 1).copied().unwrap_or(self.end);
            let lo = s.max(a);
            let hi = e.min(b);
            if hi > lo {
                total += (hi - lo) * (v - level).abs();
            }
        }
        total
    }
}

/// `(1/s) int_t^{t+s} |I(theta) - I(t)| dtheta` for each `s`.
pub fn lebesgue_right_continuity(
    series: &PiecewiseConstant,
    t: f64,
    s_values: &[f64],
) -> Result<Vec<f64>> {
    if t < series.start() || t >= series.end() {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [{}, {})",
            series.start(),
            series.end()
        )));
    }
    let level = series.eval(t);
    s_values
        .iter()
        .map(|&s| {
            if !(s > 0.0) || t + s > series.end() * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "window length {s} must be positive and stay inside the series"
                )));
            }
            Ok(series.abs_deviation(t, t + s, level) / s)
        })
        .collect()
}
