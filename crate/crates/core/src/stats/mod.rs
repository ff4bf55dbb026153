//! Numerical core: least squares, the random-intercept mixed model,
//! Student-t tail probabilities and variance-inflation pruning.

mod lmm;
mod ols;
mod tdist;
mod vif;

use serde::{Deserialize, Serialize};

use crate::json::{f17, f17_opt};

pub use lmm::{lmm, lmm_fixed_ratio, RandomInterceptProblem, LOG_RATIO_BOUNDS};
pub use ols::ols;
pub use tdist::{ln_gamma, regularized_beta, t_sf};
pub use vif::{vif, vif_prune, VIF_PROTECTED};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FitError {
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("{rows} rows cannot identify {params} parameters")]
    Underdetermined { rows: usize, params: usize },
    #[error("variance-ratio search did not converge")]
    NonConvergence,
    #[error("mixed model needs at least two groups, got {0}")]
    InsufficientGroups(usize),
    #[error("{0}")]
    InvalidInput(String),
}

impl FitError {
    /// Stable name recorded in results stores.
    pub fn name(&self) -> &'static str {
        match self {
            FitError::RankDeficient => "RankDeficient",
            FitError::Underdetermined { .. } => "Underdetermined",
            FitError::NonConvergence => "NonConvergence",
            FitError::InsufficientGroups(_) => "InsufficientGroups",
            FitError::InvalidInput(_) => "InvalidInput",
        }
    }
}

/// Column-major design matrix with per-row group labels.
///
/// The first column is always the intercept, named `const`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    groups: Vec<usize>,
    n_groups: usize,
}

impl DesignMatrix {
    /// `groups` holds a label per row; labels are renumbered densely in order of appearance.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        groups: Vec<usize>,
    ) -> Result<DesignMatrix, FitError> {
        let invalid = |m: String| Err(FitError::InvalidInput(m));
        if names.len() != columns.len() {
            return invalid("names and columns differ in length".into());
        }
        if names.first().map(String::as_str) != Some("const") {
            return invalid("first column must be `const`".into());
        }
        let n = groups.len();
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return invalid(format!("column `{name}` has {} rows, expected {n}", col.len()));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return invalid(format!("column `{name}` has non-finite values"));
            }
            if names.iter().filter(|other| *other == name).count() > 1 {
                return invalid(format!("column `{name}` appears twice"));
            }
        }
        let mut relabel = std::collections::HashMap::new();
        let groups: Vec<usize> = groups
            .into_iter()
            .map(|g| {
                let next = relabel.len();
                *relabel.entry(g).or_insert(next)
            })
            .collect();
        Ok(DesignMatrix { names, columns, groups, n_groups: relabel.len() })
    }

    /// Convenience constructor that prepends the intercept.
    pub fn with_intercept(
        named: Vec<(String, Vec<f64>)>,
        groups: Vec<usize>,
    ) -> Result<DesignMatrix, FitError> {
        let n = groups.len();
        let mut names = vec!["const".to_string()];
        let mut columns = vec![vec![1.0; n]];
        for (name, col) in named {
            names.push(name);
            columns.push(col);
        }
        DesignMatrix::new(names, columns, groups)
    }

    pub fn n_rows(&self) -> usize {
        self.groups.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn without_column(&self, index: usize) -> DesignMatrix {
        assert!(index > 0, "cannot drop the intercept");
        let mut out = self.clone();
        out.names.remove(index);
        out.columns.remove(index);
        out
    }

    fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_rows(), self.n_cols(), |i, j| self.columns[j][i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    #[serde(with = "f17")]
    pub estimate: f64,
    #[serde(with = "f17")]
    pub std_error: f64,
    #[serde(with = "f17")]
    pub t_value: f64,
    #[serde(with = "f17")]
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    #[serde(with = "f17")]
    pub residual: f64,
    #[serde(with = "f17")]
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `ols`, `reml` or `ml`.
    pub method: String,
    pub n_obs: usize,
    pub n_params: usize,
    pub n_groups: usize,
    #[serde(with = "f17")]
    pub df: f64,
    #[serde(with = "f17")]
    pub rss: f64,
    #[serde(with = "f17_opt")]
    pub log_likelihood: Option<f64>,
    /// Optimised log(σ²_u / σ²_ε).
    #[serde(with = "f17_opt")]
    pub log_ratio: Option<f64>,
    pub evaluations: usize,
    /// The variance ratio sits at an end of the search interval.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    pub dropped: Vec<String>,
    pub variance: Option<VarianceComponents>,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit results serialize")
    }
}

/// Wald t-test against zero with `df` degrees of freedom.
///
/// Degrees of freedom are `n − p` for both OLS and mixed fits; this is the
/// single place to swap in another approximation.
pub(crate) fn wald(name: &str, estimate: f64, std_error: f64, df: f64) -> Coefficient {
    let (t_value, p_value) = if std_error > 0.0 {
        let t = estimate / std_error;
        (t, t_sf(t, df))
    } else if estimate == 0.0 {
        (0.0, 1.0)
    } else {
        (estimate.signum() * f64::INFINITY, 0.0)
    };
    Coefficient { name: name.to_string(), estimate, std_error, t_value, p_value }
}
