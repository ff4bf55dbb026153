//! Turns an event dataset into a per-universe panel (project × period).
//!
//! For a project with intervention time `t₀` and exclusion window
//! `(before, after)`, events in the closed span `[t₀ − before, t₀ + after]`
//! are discarded. Periods tile outward from the window edges:
//! post period `i` is `[t₀ + after + (i−1)L, t₀ + after + iL)` and
//! pre period `−i` is `(t₀ − before − iL, t₀ − before − (i−1)L]`.
//!
//! Scaling is applied per event before averaging, with a `+1` offset so zero
//! counts stay finite (`ln(1 + v)`, `log10(1 + v)`). Covariates are averaged
//! but never scaled. Rounding is round-half-to-even at the requested number of
//! decimal digits. Empty cells produce no row.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::EventDataset;
use crate::spec::{DecisionKind, DecisionValue, MultiverseSpec, SpecError, UniverseSpec};

#[derive(Debug, thiserror::Error)]
pub enum PanelError {
    #[error("unknown dependent variable `{0}`")]
    UnknownDependentVariable(String),
    #[error("panel has no rows")]
    DegeneratePanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    Original,
    Ln,
    Log10,
}

impl Scaling {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Scaling::Original => v,
            Scaling::Ln => v.ln_1p(),
            Scaling::Log10 => v.ln_1p() / std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Mean,
    Median,
}

impl Averaging {
    /// Aggregates a non-empty cell. Reorders `values` for the median.
    pub fn apply(self, values: &mut [f64]) -> f64 {
        debug_assert!(!values.is_empty());
        match self {
            Averaging::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Averaging::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

/// Rounds to `digits` decimals, ties to even. Values too large to carry that
/// many decimals are returned unchanged.
pub fn round_digits(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    let scaled = x * scale;
    if !scaled.is_finite() || scaled.abs() >= 2f64.powi(52) {
        return x;
    }
    scaled.round_ties_even() / scale
}

/// The six data-processing decisions of one universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelParams {
    pub n_periods: u32,
    pub period_length: f64,
    pub days_before: f64,
    pub days_after: f64,
    pub scaling: Scaling,
    pub averaging: Averaging,
    /// `None` leaves values unrounded.
    pub digits: Option<u32>,
}

/// The two model decisions of one universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub vif_threshold: f64,
    pub reml: bool,
}

fn value_of<'a>(
    spec: &MultiverseSpec,
    u: &'a UniverseSpec,
    kind: DecisionKind,
) -> Result<&'a DecisionValue, SpecError> {
    let (index, _) = spec.decision_of_kind(kind)?;
    Ok(&u.assignment[index].1)
}

fn shape_error(kind: DecisionKind, v: &DecisionValue) -> SpecError {
    SpecError::InvalidDecision { id: kind.to_string(), reason: format!("unexpected value `{v}`") }
}

impl PanelParams {
    pub fn from_universe(spec: &MultiverseSpec, u: &UniverseSpec) -> Result<PanelParams, SpecError> {
        use DecisionKind as K;
        let n_periods = match value_of(spec, u, K::Count)? {
            DecisionValue::Int(v) => *v as u32,
            v => return Err(shape_error(K::Count, v)),
        };
        let period_length = value_of(spec, u, K::DurationDays)?
            .as_f64()
            .ok_or_else(|| shape_error(K::DurationDays, value_of(spec, u, K::DurationDays).unwrap()))?;
        let (days_before, days_after) = match value_of(spec, u, K::ExclusionWindow)? {
            DecisionValue::Pair(a, b) => (*a, *b),
            v => return Err(shape_error(K::ExclusionWindow, v)),
        };
        let scaling = match value_of(spec, u, K::Scaling)?.as_symbol() {
            Some("original") => Scaling::Original,
            Some("ln") => Scaling::Ln,
            Some("log10") => Scaling::Log10,
            _ => return Err(shape_error(K::Scaling, value_of(spec, u, K::Scaling)?)),
        };
        let averaging = match value_of(spec, u, K::Averaging)?.as_symbol() {
            Some("mean") => Averaging::Mean,
            Some("median") => Averaging::Median,
            _ => return Err(shape_error(K::Averaging, value_of(spec, u, K::Averaging)?)),
        };
        let digits = match value_of(spec, u, K::Rounding)? {
            DecisionValue::Int(d) => Some(*d as u32),
            DecisionValue::Symbol(s) if s == "unmodified" => None,
            v => return Err(shape_error(K::Rounding, v)),
        };
        Ok(PanelParams { n_periods, period_length, days_before, days_after, scaling, averaging, digits })
    }

    /// Canonical text identifying this projection; equal params give equal keys.
    pub fn key(&self) -> String {
        format!(
            "P={};L={:?};ex=({:?},{:?});scale={:?};avg={:?};digits={:?}",
            self.n_periods,
            self.period_length,
            self.days_before,
            self.days_after,
            self.scaling,
            self.averaging,
            self.digits
        )
    }

    /// Total studied timeframe in days.
    pub fn timeframe_days(&self) -> f64 {
        self.n_periods as f64 * self.period_length
    }

    /// Period index of an event, or `None` if it is excluded or outside the studied window.
    pub fn classify(&self, timestamp: f64, intervention: f64) -> Option<i32> {
        let half = (self.n_periods / 2) as i64;
        let lower_edge = intervention - self.days_before;
        let upper_edge = intervention + self.days_after;
        let len = self.period_length;
        if timestamp >= lower_edge && timestamp <= upper_edge {
            return None;
        }
        if timestamp > upper_edge {
            let mut i = ((timestamp - upper_edge) / len).floor() as i64 + 1;
            // settle float rounding against the exact interval bounds
            while i > 1 && timestamp < upper_edge + (i - 1) as f64 * len {
                i -= 1;
            }
            while timestamp >= upper_edge + i as f64 * len {
                i += 1;
            }
            (i <= half).then_some(i as i32)
        } else {
            let mut i = ((lower_edge - timestamp) / len).floor() as i64 + 1;
            while i > 1 && timestamp > lower_edge - (i - 1) as f64 * len {
                i -= 1;
            }
            while timestamp <= lower_edge - i as f64 * len {
                i += 1;
            }
            (i <= half).then_some(-(i as i32))
        }
    }
}

impl ModelParams {
    pub fn from_universe(spec: &MultiverseSpec, u: &UniverseSpec) -> Result<ModelParams, SpecError> {
        let vif = value_of(spec, u, DecisionKind::VifThreshold)?;
        let vif_threshold = vif.as_f64().ok_or_else(|| shape_error(DecisionKind::VifThreshold, vif))?;
        let reml = match value_of(spec, u, DecisionKind::FittingFlag)?.as_symbol() {
            Some("true") => true,
            Some("false") => false,
            _ => {
                return Err(shape_error(
                    DecisionKind::FittingFlag,
                    value_of(spec, u, DecisionKind::FittingFlag)?,
                ))
            }
        };
        Ok(ModelParams { vif_threshold, reml })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    /// Index into the dataset's project list.
    pub project: usize,
    pub period: i32,
    pub dv: f64,
    pub covariates: Vec<f64>,
}

impl PanelRow {
    pub fn intervention(&self) -> f64 {
        if self.period > 0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn time_after(&self) -> f64 {
        self.period.max(0) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelFrame {
    pub dv_name: String,
    pub project_ids: Vec<String>,
    pub covariate_names: Vec<String>,
    pub params: PanelParams,
    /// Ordered by project, then period.
    pub rows: Vec<PanelRow>,
}

impl PanelFrame {
    /// Delimited text: project_id, period, intervention, time_after, dv, covariates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("project_id,period,intervention,time_after,");
        out.push_str(&self.dv_name);
        for c in &self.covariate_names {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{:?}",
                self.project_ids[r.project],
                r.period,
                r.intervention(),
                r.time_after(),
                r.dv
            );
            for c in &r.covariates {
                let _ = write!(out, ",{c:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the panel for one dependent variable.
pub fn build_panel(
    dataset: &EventDataset,
    dv_name: &str,
    params: &PanelParams,
) -> Result<PanelFrame, PanelError> {
    let dv = dataset
        .schema
        .dv_index(dv_name)
        .ok_or_else(|| PanelError::UnknownDependentVariable(dv_name.to_string()))?;
    let half = (params.n_periods / 2) as usize;
    let n_cov = dataset.schema.covariates.len();
    let round = |x: f64| params.digits.map_or(x, |d| round_digits(x, d));

    let mut rows = Vec::new();
    // cell buffers indexed by slot: pre periods -half..-1 then post 1..half
    let mut cells: Vec<(Vec<f64>, Vec<Vec<f64>>)> =
        (0..2 * half).map(|_| (Vec::new(), vec![Vec::new(); n_cov])).collect();
    for (pi, project) in dataset.projects.iter().enumerate() {
        for (values, covs) in cells.iter_mut() {
            values.clear();
            covs.iter_mut().for_each(Vec::clear);
        }
        for event in &project.events {
            let Some(period) = params.classify(event.timestamp, project.intervention) else {
                continue;
            };
            let slot = if period < 0 {
                (period + half as i32) as usize
            } else {
                half + period as usize - 1
            };
            let (values, covs) = &mut cells[slot];
            values.push(params.scaling.apply(event.dv[dv]));
            for (buf, &x) in covs.iter_mut().zip(&event.covariates) {
                buf.push(x);
            }
        }
        for (slot, (values, covs)) in cells.iter_mut().enumerate() {
            if values.is_empty() {
                continue;
            }
            let period =
                if slot < half { slot as i32 - half as i32 } else { (slot - half) as i32 + 1 };
            let dv_value = round(params.averaging.apply(values));
            let covariates = covs.iter_mut().map(|c| round(params.averaging.apply(c))).collect();
            rows.push(PanelRow { project: pi, period, dv: dv_value, covariates });
        }
    }
    if rows.is_empty() {
        return Err(PanelError::DegeneratePanel);
    }
    Ok(PanelFrame {
        dv_name: dv_name.to_string(),
        project_ids: dataset.projects.iter().map(|p| p.id.clone()).collect(),
        covariate_names: dataset.schema.covariates.clone(),
        params: *params,
        rows,
    })
}
