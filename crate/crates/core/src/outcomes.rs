//! Comparing universe outcomes with the baseline study and bucketing them.
//!
//! Baseline file format (TOML):
//!
//! ```toml
//! # optional, best to worst; defaults to the order shown
//! severity = ["full-replication", "unconfirmed-results", "opposite-results", "model-fit-failure"]
//!
//! [dv.general_comments]
//! time = "ns"            # "ns", "sig+" or "sig-"
//! intervention = "sig-"
//! time_after = "ns"
//! ```
//!
//! The order of `[dv.*]` tables is the dependent-variable order of a run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::rdit::{HypothesisOutcome, Sign, TIME_COEFFICIENTS};

/// Baseline matching the default synthetic generator.
pub const BASELINE_SYNTHETIC: &str = include_str!("../specs/baseline_synthetic.toml");

#[derive(Debug, thiserror::Error)]
pub enum OutcomeError {
    #[error("dependent variable `{0}` is missing from the baseline")]
    BaselineMissing(String),
    #[error("no outcome for baseline dependent variable `{0}`")]
    OutcomeMissing(String),
    #[error("invalid baseline: {0}")]
    InvalidBaseline(String),
    #[error("cannot read baseline: {0}")]
    Io(#[from] std::io::Error),
}

/// Significance and direction of one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefState {
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "sig+")]
    Positive,
    #[serde(rename = "sig-")]
    Negative,
}

impl CoefState {
    pub const ALL: [CoefState; 3] = [CoefState::NotSignificant, CoefState::Positive, CoefState::Negative];

    pub fn new(significant: bool, sign: Sign) -> CoefState {
        match (significant, sign) {
            (true, Sign::Positive) => CoefState::Positive,
            (true, Sign::Negative) => CoefState::Negative,
            // a zero estimate has p = 1, so this only guards hand-built outcomes
            _ => CoefState::NotSignificant,
        }
    }

    pub fn is_significant(self) -> bool {
        self != CoefState::NotSignificant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CoefClass {
    Match,
    Unconfirmed,
    Opposite,
}

/// Classifies one universe coefficient against the baseline one.
pub fn classify(baseline: CoefState, universe: CoefState) -> CoefClass {
    if baseline == universe {
        CoefClass::Match
    } else if baseline.is_significant() && !universe.is_significant() {
        CoefClass::Unconfirmed
    } else {
        CoefClass::Opposite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeBucket {
    FullReplication,
    UnconfirmedResults,
    OppositeResults,
    ModelFitFailure,
}

impl OutcomeBucket {
    /// Declaration order; also the default severity order, best first.
    pub const ALL: [OutcomeBucket; 4] = [
        OutcomeBucket::FullReplication,
        OutcomeBucket::UnconfirmedResults,
        OutcomeBucket::OppositeResults,
        OutcomeBucket::ModelFitFailure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeBucket::FullReplication => "full-replication",
            OutcomeBucket::UnconfirmedResults => "unconfirmed-results",
            OutcomeBucket::OppositeResults => "opposite-results",
            OutcomeBucket::ModelFitFailure => "model-fit-failure",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OutcomeBucket::FullReplication => "Full Replication",
            OutcomeBucket::UnconfirmedResults => "Unconfirmed Results",
            OutcomeBucket::OppositeResults => "Opposite Results",
            OutcomeBucket::ModelFitFailure => "Model Fit Failure",
        }
    }
}

impl fmt::Display for OutcomeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Total order over buckets, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityOrder(Vec<OutcomeBucket>);

impl Default for SeverityOrder {
    fn default() -> Self {
        SeverityOrder(OutcomeBucket::ALL.to_vec())
    }
}

impl SeverityOrder {
    pub fn new(order: Vec<OutcomeBucket>) -> Result<SeverityOrder, OutcomeError> {
        let mut sorted = order.clone();
        sorted.sort();
        if sorted != OutcomeBucket::ALL {
            return Err(OutcomeError::InvalidBaseline(
                "severity must list each bucket exactly once".into(),
            ));
        }
        Ok(SeverityOrder(order))
    }

    pub fn buckets(&self) -> &[OutcomeBucket] {
        &self.0
    }

    /// 0 for the best bucket.
    pub fn rank(&self, b: OutcomeBucket) -> usize {
        self.0.iter().position(|&x| x == b).expect("order covers every bucket")
    }

    /// The worse of the two.
    pub fn lower(&self, a: OutcomeBucket, b: OutcomeBucket) -> OutcomeBucket {
        if self.rank(a) >= self.rank(b) {
            a
        } else {
            b
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    /// Per dependent variable, the states of `time`, `intervention`, `time_after`.
    pub dvs: IndexMap<String, [CoefState; 3]>,
    pub order: SeverityOrder,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineFile {
    severity: Option<Vec<OutcomeBucket>>,
    dv: IndexMap<String, BaselineTriple>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineTriple {
    time: CoefState,
    intervention: CoefState,
    time_after: CoefState,
}

impl Baseline {
    pub fn parse(text: &str) -> Result<Baseline, OutcomeError> {
        let file: BaselineFile =
            toml::from_str(text).map_err(|e| OutcomeError::InvalidBaseline(e.message().to_string()))?;
        if file.dv.is_empty() {
            return Err(OutcomeError::InvalidBaseline("no [dv.*] tables".into()));
        }
        let order = match file.severity {
            Some(o) => SeverityOrder::new(o)?,
            None => SeverityOrder::default(),
        };
        let dvs = file
            .dv
            .into_iter()
            .map(|(name, t)| (name, [t.time, t.intervention, t.time_after]))
            .collect();
        Ok(Baseline { dvs, order })
    }

    pub fn load(path: &Path) -> Result<Baseline, OutcomeError> {
        Baseline::parse(&std::fs::read_to_string(path)?)
    }

    /// Baseline that treats the given fitted outcomes as the reference study.
    pub fn from_outcomes(outcomes: &[HypothesisOutcome]) -> Option<Baseline> {
        let mut dvs = IndexMap::new();
        for h in outcomes {
            if !h.is_fitted() {
                return None;
            }
            dvs.insert(h.dv.clone(), universe_states(h)?);
        }
        Some(Baseline { dvs, order: SeverityOrder::default() })
    }

    pub fn dv_names(&self) -> Vec<String> {
        self.dvs.keys().cloned().collect()
    }

    pub fn triple(&self, dv: &str) -> Result<&[CoefState; 3], OutcomeError> {
        self.dvs.get(dv).ok_or_else(|| OutcomeError::BaselineMissing(dv.to_string()))
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::from("severity = [");
        let names: Vec<String> = self.order.buckets().iter().map(|b| format!("\"{b}\"")).collect();
        out.push_str(&names.join(", "));
        out.push_str("]\n");
        let state = |s: CoefState| match s {
            CoefState::NotSignificant => "ns",
            CoefState::Positive => "sig+",
            CoefState::Negative => "sig-",
        };
        for (name, t) in &self.dvs {
            out.push_str(&format!(
                "\n[dv.{name}]\ntime = \"{}\"\nintervention = \"{}\"\ntime_after = \"{}\"\n",
                state(t[0]),
                state(t[1]),
                state(t[2])
            ));
        }
        out
    }
}

fn universe_states(h: &HypothesisOutcome) -> Option<[CoefState; 3]> {
    let mut out = [CoefState::NotSignificant; 3];
    for (slot, name) in out.iter_mut().zip(TIME_COEFFICIENTS) {
        let c = h.coefficients.iter().find(|c| c.name == name)?;
        *slot = CoefState::new(c.significant, c.sign);
    }
    Some(out)
}

/// Per-coefficient classes, or `None` when the fit failed.
pub fn classify_hypothesis(h: &HypothesisOutcome, baseline: &[CoefState; 3]) -> Option<[CoefClass; 3]> {
    let states = if h.is_fitted() { universe_states(h)? } else { return None };
    Some([
        classify(baseline[0], states[0]),
        classify(baseline[1], states[1]),
        classify(baseline[2], states[2]),
    ])
}

/// Bucket for one set of per-coefficient classes.
pub fn bucket_from_classes(classes: &[CoefClass; 3]) -> OutcomeBucket {
    if classes.iter().all(|&c| c == CoefClass::Match) {
        OutcomeBucket::FullReplication
    } else if classes.contains(&CoefClass::Opposite) {
        OutcomeBucket::OppositeResults
    } else {
        OutcomeBucket::UnconfirmedResults
    }
}

pub fn bucket_hypothesis(h: &HypothesisOutcome, baseline: &[CoefState; 3]) -> OutcomeBucket {
    classify_hypothesis(h, baseline).map_or(OutcomeBucket::ModelFitFailure, |c| bucket_from_classes(&c))
}

/// Buckets of one universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseBuckets {
    /// Keyed by dependent variable.
    pub dvs: BTreeMap<String, OutcomeBucket>,
    pub study: OutcomeBucket,
    pub match_count: usize,
}

/// Combines per-dv buckets into the study bucket: the lowest under `order`.
pub fn study_bucket(buckets: impl IntoIterator<Item = OutcomeBucket>, order: &SeverityOrder) -> OutcomeBucket {
    buckets
        .into_iter()
        .reduce(|a, b| order.lower(a, b))
        .unwrap_or(OutcomeBucket::ModelFitFailure)
}

/// Buckets every baseline dependent variable of a universe.
pub fn bucket_universe(
    outcomes: &[HypothesisOutcome],
    baseline: &Baseline,
) -> Result<UniverseBuckets, OutcomeError> {
    for h in outcomes {
        baseline.triple(&h.dv)?;
    }
    let mut dvs = BTreeMap::new();
    let mut match_count = 0;
    for (name, triple) in &baseline.dvs {
        let h = outcomes
            .iter()
            .find(|h| &h.dv == name)
            .ok_or_else(|| OutcomeError::OutcomeMissing(name.clone()))?;
        if let Some(classes) = classify_hypothesis(h, triple) {
            match_count += classes.iter().filter(|&&c| c == CoefClass::Match).count();
        }
        dvs.insert(name.clone(), bucket_hypothesis(h, triple));
    }
    let study = study_bucket(baseline.dvs.keys().map(|k| dvs[k]), &baseline.order);
    Ok(UniverseBuckets { dvs, study, match_count })
}

/// Number of coefficients classified MATCH across all dependent variables.
pub fn match_count(outcomes: &[HypothesisOutcome], baseline: &Baseline) -> Result<usize, OutcomeError> {
    bucket_universe(outcomes, baseline).map(|b| b.match_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdit::{CoefficientOutcome, FitStatus};

    fn outcome(dv: &str, states: [CoefState; 3]) -> HypothesisOutcome {
        let coefficients = TIME_COEFFICIENTS
            .iter()
            .zip(states)
            .map(|(name, s)| {
                let (significant, sign, estimate) = match s {
                    CoefState::NotSignificant => (false, Sign::Positive, 0.1),
                    CoefState::Positive => (true, Sign::Positive, 1.0),
                    CoefState::Negative => (true, Sign::Negative, -1.0),
                };
                CoefficientOutcome {
                    name: name.to_string(),
                    significant,
                    sign,
                    estimate,
                    p_value: if significant { 0.001 } else { 0.5 },
                }
            })
            .collect();
        HypothesisOutcome { dv: dv.into(), alpha: 0.05, status: FitStatus::Fitted, coefficients }
    }

    use CoefState::{Negative as Neg, NotSignificant as Ns, Positive as Pos};

    #[test]
    fn worked_examples() {
        let b = [Neg, Neg, Ns];
        assert_eq!(bucket_hypothesis(&outcome("x", b), &b), OutcomeBucket::FullReplication);
        assert_eq!(bucket_hypothesis(&outcome("x", [Neg, Ns, Ns]), &b), OutcomeBucket::UnconfirmedResults);
        assert_eq!(
            bucket_hypothesis(&outcome("x", [Ns, Pos, Ns]), &[Ns, Ns, Ns]),
            OutcomeBucket::OppositeResults
        );
        let failed = HypothesisOutcome::failure("x", 0.05, "RankDeficient");
        assert_eq!(bucket_hypothesis(&failed, &b), OutcomeBucket::ModelFitFailure);
    }

    #[test]
    fn reversed_sign_is_opposite() {
        assert_eq!(classify(Pos, Neg), CoefClass::Opposite);
        assert_eq!(classify(Ns, Neg), CoefClass::Opposite);
        assert_eq!(classify(Neg, Ns), CoefClass::Unconfirmed);
    }

    #[test]
    fn study_takes_the_lowest() {
        use OutcomeBucket::*;
        let order = SeverityOrder::default();
        assert_eq!(study_bucket([FullReplication; 4], &order), FullReplication);
        assert_eq!(
            study_bucket([FullReplication, ModelFitFailure, FullReplication, FullReplication], &order),
            ModelFitFailure
        );
        assert_eq!(
            study_bucket([UnconfirmedResults, OppositeResults, FullReplication, FullReplication], &order),
            OppositeResults
        );
        let swapped = SeverityOrder::new(vec![
            FullReplication,
            OppositeResults,
            UnconfirmedResults,
            ModelFitFailure,
        ])
        .unwrap();
        assert_eq!(study_bucket([UnconfirmedResults, OppositeResults], &swapped), UnconfirmedResults);
    }

    #[test]
    fn severity_must_be_a_permutation() {
        assert!(SeverityOrder::new(vec![OutcomeBucket::FullReplication; 4]).is_err());
        assert!(SeverityOrder::new(OutcomeBucket::ALL[..3].to_vec()).is_err());
    }

    #[test]
    fn match_counts() {
        let names = ["a", "b", "c", "d"];
        let triple = [Neg, Neg, Ns];
        let baseline = Baseline { dvs: names.iter().map(|n| (n.to_string(), triple)).collect(), order: SeverityOrder::default() };
        let all: Vec<_> = names.iter().map(|n| outcome(n, triple)).collect();
        assert_eq!(match_count(&all, &baseline).unwrap(), 12);
        let none: Vec<_> = names.iter().map(|n| HypothesisOutcome::failure(n, 0.05, "RankDeficient")).collect();
        assert_eq!(match_count(&none, &baseline).unwrap(), 0);
        let mut one = none.clone();
        one[2] = outcome("c", triple);
        assert_eq!(match_count(&one, &baseline).unwrap(), 3);
    }

    #[test]
    fn missing_dv_errors() {
        let baseline = Baseline { dvs: [("a".to_string(), [Ns; 3])].into_iter().collect(), order: SeverityOrder::default() };
        assert!(matches!(
            bucket_universe(&[outcome("a", [Ns; 3]), outcome("z", [Ns; 3])], &baseline),
            Err(OutcomeError::BaselineMissing(d)) if d == "z"
        ));
        assert!(matches!(bucket_universe(&[], &baseline), Err(OutcomeError::OutcomeMissing(_))));
    }

    #[test]
    fn baseline_file_round_trip() {
        let text = "[dv.general_comments]\ntime = \"ns\"\nintervention = \"sig-\"\ntime_after = \"sig+\"\n\n[dv.commits]\ntime = \"ns\"\nintervention = \"ns\"\ntime_after = \"ns\"\n";
        let b = Baseline::parse(text).unwrap();
        assert_eq!(b.dv_names(), vec!["general_comments", "commits"]);
        assert_eq!(b.dvs["general_comments"], [Ns, Neg, Pos]);
        assert_eq!(Baseline::parse(&b.to_toml()).unwrap(), b);
        assert!(Baseline::parse("[dv.x]\ntime = \"maybe\"\nintervention = \"ns\"\ntime_after = \"ns\"\n").is_err());
        assert!(Baseline::parse("severity = []\n[dv.x]\ntime = \"ns\"\nintervention = \"ns\"\ntime_after = \"ns\"\n").is_err());
    }

    #[test]
    fn reflexive() {
        for a in CoefState::ALL {
            for b in CoefState::ALL {
                for c in CoefState::ALL {
                    let h = outcome("x", [a, b, c]);
                    let base = Baseline::from_outcomes(std::slice::from_ref(&h)).unwrap();
                    assert_eq!(bucket_hypothesis(&h, &base.dvs["x"]), OutcomeBucket::FullReplication);
                }
            }
        }
    }
}
