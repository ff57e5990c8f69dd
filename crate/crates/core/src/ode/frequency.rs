use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear table of `(t, ω)` knots with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct FrequencyTable {
    knots: Vec<(f64, f64)>,
}

impl FrequencyTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidTable("at least two knots are required".into()));
        }
        if knots.iter().any(|(t, w)| !t.is_finite() || !w.is_finite()) {
            return Err(Error::InvalidTable("non-finite knot".into()));
        }
        if let Some(pair) = knots.windows(2).find(|p| p[1].0 <= p[0].0) {
            return Err(Error::InvalidTable(format!(
                "knot times must be strictly increasing ({} then {})",
                pair[0].0, pair[1].0
            )));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        // index of the first knot strictly after t, clamped so [i-1, i] brackets t
        let i = self
            .knots
            .partition_point(|&(tk, _)| tk <= t)
            .clamp(1, self.knots.len() - 1);
        let (t0, w0) = self.knots[i - 1];
        let (t1, w1) = self.knots[i];
        let s = (t - t0) / (t1 - t0);
        Ok(w0 + s * (w1 - w0))
    }
}

impl TryFrom<Vec<(f64, f64)>> for FrequencyTable {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(knots)
    }
}

impl From<FrequencyTable> for Vec<(f64, f64)> {
    fn from(table: FrequencyTable) -> Self {
        table.knots
    }
}

/// Declarative description of the angular frequency ω(t).
///
/// Only ω² enters the equations of motion, so negative values are accepted
/// as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencySpec {
    Constant {
        omega: f64,
    },
    /// ω(t) = a + b·sin(c·t)
    Sinusoidal {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Coefficients in increasing powers of t.
    Polynomial {
        coeffs: Vec<f64>,
    },
    Tabulated {
        table: FrequencyTable,
    },
}

impl FrequencySpec {
    pub fn constant(omega: f64) -> Self {
        FrequencySpec::Constant { omega }
    }

    pub fn sinusoidal(a: f64, b: f64, c: f64) -> Self {
        FrequencySpec::Sinusoidal { a, b, c }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        FrequencySpec::Polynomial { coeffs }
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        Ok(FrequencySpec::Tabulated {
            table: FrequencyTable::new(knots)?,
        })
    }

    /// ω(t). Fails only for a tabulated spec queried outside its knots.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            FrequencySpec::Constant { omega } => Ok(*omega),
            FrequencySpec::Sinusoidal { a, b, c } => Ok(a + b * (c * t).sin()),
            FrequencySpec::Polynomial { coeffs } => Ok(coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)),
            FrequencySpec::Tabulated { table } => table.eval(t),
        }
    }

    pub fn omega_squared(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|w| w * w)
    }
}

/// ω(t) for the given spec.
pub fn eval_frequency(spec: &FrequencySpec, t: f64) -> Result<f64> {
    spec.eval(t)
}
