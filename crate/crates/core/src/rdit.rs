//! The RDiT regression for one universe and dependent variable.
//!
//! The model is
//! `y = β₀ + β₁·time + β₂·intervention + β₃·time_after + Σ γ·covariate + u_project + ε`
//! where `time` is the signed period index, `intervention` marks post periods
//! and `time_after` counts post periods. The inferential outcome is the
//! (significance, sign) pair of each of the three time coefficients.

use serde::{Deserialize, Serialize};

use crate::data::EventDataset;
use crate::json::f17;
use crate::pipeline::{build_panel, ModelParams, PanelError, PanelFrame, PanelParams};
use crate::spec::{DecisionValue, MultiverseSpec, SpecError, UniverseSpec};
use crate::stats::{lmm, vif_prune, DesignMatrix, FitResult, VIF_PROTECTED};

/// The three coefficients that carry the hypothesis, in reporting order.
pub const TIME_COEFFICIENTS: [&str; 3] = ["time", "intervention", "time_after"];

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum RditError {
    #[error("alpha must lie in (0, 0.5], got {0}")]
    InvalidAlpha(f64),
    #[error("no dependent variables requested")]
    NoDependentVariables,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

pub fn check_alpha(alpha: f64) -> Result<(), RditError> {
    if alpha > 0.0 && alpha <= 0.5 {
        Ok(())
    } else {
        Err(RditError::InvalidAlpha(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientOutcome {
    pub name: String,
    pub significant: bool,
    pub sign: Sign,
    #[serde(with = "f17")]
    pub estimate: f64,
    #[serde(with = "f17")]
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum FitStatus {
    Fitted,
    FitFailure { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOutcome {
    pub dv: String,
    #[serde(with = "f17")]
    pub alpha: f64,
    pub status: FitStatus,
    /// One entry per time coefficient when fitted; empty on failure.
    pub coefficients: Vec<CoefficientOutcome>,
}

impl HypothesisOutcome {
    pub fn failure(dv: &str, alpha: f64, reason: &str) -> HypothesisOutcome {
        HypothesisOutcome {
            dv: dv.to_string(),
            alpha,
            status: FitStatus::FitFailure { reason: reason.to_string() },
            coefficients: Vec::new(),
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.status == FitStatus::Fitted
    }
}

/// Builds the grouped design `[const, time, intervention, time_after, covariates…]`.
pub fn design_matrix(panel: &PanelFrame) -> Result<(DesignMatrix, Vec<f64>), crate::stats::FitError> {
    let rows = &panel.rows;
    let mut named = vec![
        ("time".to_string(), rows.iter().map(|r| r.period as f64).collect()),
        ("intervention".to_string(), rows.iter().map(|r| r.intervention()).collect()),
        ("time_after".to_string(), rows.iter().map(|r| r.time_after()).collect()),
    ];
    for (k, name) in panel.covariate_names.iter().enumerate() {
        named.push((name.clone(), rows.iter().map(|r| r.covariates[k]).collect()));
    }
    let groups = rows.iter().map(|r| r.project).collect();
    let y = rows.iter().map(|r| r.dv).collect();
    Ok((DesignMatrix::with_intercept(named, groups)?, y))
}

/// Fits one panel. Fit errors are absorbed into the outcome status.
pub fn fit_universe_dv(
    panel: &PanelFrame,
    model: &ModelParams,
    alpha: f64,
) -> (HypothesisOutcome, Option<FitResult>) {
    let fail = |reason: &str| (HypothesisOutcome::failure(&panel.dv_name, alpha, reason), None);
    let (design, y) = match design_matrix(panel) {
        Ok(d) => d,
        Err(e) => return fail(e.name()),
    };
    let (design, dropped) = vif_prune(&design, model.vif_threshold, &VIF_PROTECTED);
    let mut fit = match lmm(&design, &y, model.reml) {
        Ok(f) => f,
        Err(e) => return fail(e.name()),
    };
    fit.dropped = dropped;
    let coefficients = TIME_COEFFICIENTS
        .iter()
        .map(|name| {
            let c = fit.coefficient(name).expect("time columns are never pruned");
            CoefficientOutcome {
                name: c.name.clone(),
                significant: c.p_value < alpha,
                sign: Sign::of(c.estimate),
                estimate: c.estimate,
                p_value: c.p_value,
            }
        })
        .collect();
    let outcome = HypothesisOutcome {
        dv: panel.dv_name.clone(),
        alpha,
        status: FitStatus::Fitted,
        coefficients,
    };
    (outcome, Some(fit))
}

/// Outcome for a panel that could not be built.
pub fn panel_failure(dv: &str, alpha: f64, error: &PanelError) -> HypothesisOutcome {
    let reason = match error {
        PanelError::DegeneratePanel => "DegeneratePanel",
        PanelError::UnknownDependentVariable(_) => "UnknownDependentVariable",
    };
    HypothesisOutcome::failure(dv, alpha, reason)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniverseResult {
    pub id: u64,
    pub assignment: Vec<(String, DecisionValue)>,
    /// One per requested dependent variable, in request order.
    pub outcomes: Vec<HypothesisOutcome>,
    pub fits: Vec<Option<FitResult>>,
}

/// Runs every requested dependent variable through one universe.
pub fn run_universe(
    dataset: &EventDataset,
    spec: &MultiverseSpec,
    u: &UniverseSpec,
    dvs: &[String],
    alpha: f64,
) -> Result<UniverseResult, RditError> {
    check_alpha(alpha)?;
    if dvs.is_empty() {
        return Err(RditError::NoDependentVariables);
    }
    if let Some(dv) = dvs.iter().find(|d| dataset.schema.dv_index(d).is_none()) {
        return Err(PanelError::UnknownDependentVariable(dv.clone()).into());
    }
    let panel_params = PanelParams::from_universe(spec, u)?;
    let model = ModelParams::from_universe(spec, u)?;
    let mut outcomes = Vec::with_capacity(dvs.len());
    let mut fits = Vec::with_capacity(dvs.len());
    for dv in dvs {
        let (outcome, fit) = match build_panel(dataset, dv, &panel_params) {
            Ok(panel) => fit_universe_dv(&panel, &model, alpha),
            Err(e) => (panel_failure(dv, alpha, &e), None),
        };
        outcomes.push(outcome);
        fits.push(fit);
    }
    Ok(UniverseResult { id: u.id, assignment: u.assignment.clone(), outcomes, fits })
}
