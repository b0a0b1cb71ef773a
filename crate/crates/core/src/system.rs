use crate::error::{Error, Result};

/// Square matrix of class-level interaction probabilities, row = source class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl ProbMatrix {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim.checked_mul(dim) != Some(values.len()) {
            return Err(Error::Dimension(format!(
                "{} entries for a {dim}x{dim} matrix",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!("probability {v} outside [0, 1]")));
        }
        Ok(ProbMatrix { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("matrix rows are not square".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Self::new(dim, vec![value; dim * dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.dim + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.dim..(row + 1) * self.dim]
    }
}

/// A remembered relational structure: class-level relation matrix `eta` plus
/// class prevalence `zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSystem {
    name: String,
    eta: ProbMatrix,
    zeta: Vec<f64>,
    class_names: Option<Vec<String>>,
}

pub const ZETA_TOLERANCE: f64 = 1e-9;

impl StoredSystem {
    pub fn new(name: impl Into<String>, eta: ProbMatrix, zeta: Vec<f64>) -> Result<Self> {
        let m = eta.dim();
        if m == 0 {
            return Err(Error::Config("a stored system needs at least one class".into()));
        }
        if zeta.len() != m {
            return Err(Error::Dimension(format!(
                "zeta has {} entries for {m} classes",
                zeta.len()
            )));
        }
        if zeta.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::Argument("zeta entries must lie in [0, 1]".into()));
        }
        let total: f64 = zeta.iter().sum();
        if (total - 1.0).abs() > ZETA_TOLERANCE {
            return Err(Error::Argument(format!("zeta sums to {total}, not 1")));
        }
        Ok(StoredSystem {
            name: name.into(),
            eta,
            zeta,
            class_names: None,
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_classes() {
            return Err(Error::Dimension(format!(
                "{} class names for {} classes",
                names.len(),
                self.n_classes()
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eta(&self) -> &ProbMatrix {
        &self.eta
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.eta.dim()
    }

    /// Rows of `eta` holding an entry within `1e-4` of 0 or 1. Such systems
    /// are accepted but tend to produce near-degenerate predictions.
    pub fn extreme_rows(&self) -> Vec<usize> {
        (0..self.n_classes())
            .filter(|&r| {
                self.eta
                    .row(r)
                    .iter()
                    .any(|&v| !(1e-4..=1.0 - 1e-4).contains(&v))
            })
            .collect()
    }
}
