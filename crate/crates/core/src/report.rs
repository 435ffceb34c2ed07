use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one numerically verified identity.
///
/// `passed` is always `residual < tolerance`; a NaN residual never passes.
/// Informational reports (printed variants, discrepancy measurements) carry
/// the same fields but are not counted by suite summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    #[serde(with = "nullable_f64")]
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub grid_size: usize,
    #[serde(default)]
    pub informational: bool,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub notes: String,
}

impl IdentityReport {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, grid_size: usize) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            passed: residual < tolerance,
            grid_size,
            informational: false,
            params: Value::Null,
            notes: String::new(),
        }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn with_note(mut self, note: impl AsRef<str>) -> Self {
        if note.as_ref().is_empty() {
            return self;
        }
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(note.as_ref());
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    /// Re-judge against a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.residual < tolerance;
        self
    }
}

/// Quadrature Gram matrix next to its closed-form expectation.
///
/// `entries[m][n]` is row `m`, column `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramTable {
    pub entries: Vec<Vec<Complex64>>,
    pub expected: Vec<Vec<Complex64>>,
}

impl GramTable {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Largest `|G[m][n]|` with `m != n`.
    /// `max(1, max |expected[n][n]|)`.
    pub fn expected_scale(&self) -> f64 {
        (0..self.size()).map(|n| self.expected[n][n].norm()).fold(1.0, f64::max)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.fold(|m, n, g, _| (m != n).then(|| g.norm()))
    }

    /// Largest `|G[n][n] - expected[n][n]|`.
    pub fn max_diagonal_abs_error(&self) -> f64 {
        self.fold(|m, n, g, e| (m == n).then(|| (g - e).norm()))
    }

    /// Largest `|G[n][n] / expected[n][n] - 1|`.
    pub fn max_diagonal_rel_error(&self) -> f64 {
        self.fold(|m, n, g, e| (m == n).then(|| (g - e).norm() / e.norm()))
    }

    /// Elementwise `|G - expected|`.
    pub fn residuals(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .zip(&self.expected)
            .map(|(row, erow)| row.iter().zip(erow).map(|(g, e)| (g - e).norm()).collect())
            .collect()
    }

    fn fold(&self, pick: impl Fn(usize, usize, Complex64, Complex64) -> Option<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, (row, erow)) in self.entries.iter().zip(&self.expected).enumerate() {
            for (n, (&g, &e)) in row.iter().zip(erow).enumerate() {
                if let Some(v) = pick(m, n, g, e) {
                    if v.is_nan() {
                        return f64::NAN;
                    }
                    worst = worst.max(v);
                }
            }
        }
        worst
    }
}

/// JSON has no NaN; non-finite residuals travel as `null`.
mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
