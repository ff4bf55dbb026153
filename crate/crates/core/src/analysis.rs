//! Cross-universe analyses over a results store: the specification curve,
//! change stability per decision, and outcomes by studied timeframe.
//!
//! All three are pure functions of the store (plus an optional filter), so
//! the same store always gives byte-identical output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::json::{f17, f17_opt, F17};
use crate::outcomes::OutcomeBucket;
use crate::store::{ResultsStore, StoreHeader, StoreRecord};

/// Definition string recorded with every change-stability result.
pub const FLIP_RATE_DEFINITION: &str = "ordered pairs of universes that differ only in this decision \
and have different buckets, divided by all such ordered pairs";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("no universes to analyse")]
    EmptyResults,
    #[error("unknown decision `{0}`")]
    UnknownDecision(String),
    #[error("decision `{decision}` has no value `{value}`")]
    UnknownValue { decision: String, value: String },
    #[error("malformed pin `{0}`; expected decision=value[,value…]")]
    MalformedPin(String),
    #[error("no decision of kind `{0}` in the store")]
    MissingKind(&'static str),
    #[error("value `{value}` of `{decision}` is not a number")]
    NotNumeric { decision: String, value: String },
}

/// Restricts which universes an analysis sees.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    /// Decision id to the allowed display values; absent decisions allow everything.
    pub pins: BTreeMap<String, BTreeSet<String>>,
    pub include_fit_failures: bool,
}

impl Filter {
    pub fn all() -> Filter {
        Filter { pins: BTreeMap::new(), include_fit_failures: true }
    }

    /// Adds a `decision=v1,v2` pin.
    pub fn pin(&mut self, text: &str) -> Result<(), AnalysisError> {
        let (decision, values) =
            text.split_once('=').ok_or_else(|| AnalysisError::MalformedPin(text.to_string()))?;
        let values: BTreeSet<String> = split_values(values).into_iter().collect();
        if decision.is_empty() || values.is_empty() {
            return Err(AnalysisError::MalformedPin(text.to_string()));
        }
        self.pins.entry(decision.to_string()).or_default().extend(values);
        Ok(())
    }

    /// Rejects pins that name unknown decisions or values.
    pub fn validate(&self, header: &StoreHeader) -> Result<(), AnalysisError> {
        for (decision, values) in &self.pins {
            let d = header
                .decisions
                .iter()
                .find(|d| &d.id == decision)
                .ok_or_else(|| AnalysisError::UnknownDecision(decision.clone()))?;
            if let Some(v) = values.iter().find(|v| !d.values.contains(v)) {
                return Err(AnalysisError::UnknownValue { decision: decision.clone(), value: v.clone() });
            }
        }
        Ok(())
    }

    pub fn admits(&self, record: &StoreRecord) -> bool {
        if !self.include_fit_failures && record.study == OutcomeBucket::ModelFitFailure {
            return false;
        }
        self.pins
            .iter()
            .all(|(d, allowed)| record.assignment.get(d).is_some_and(|v| allowed.contains(v)))
    }

    pub fn apply<'a>(&self, store: &'a ResultsStore) -> Vec<&'a StoreRecord> {
        store.records.iter().filter(|r| self.admits(r)).collect()
    }
}

// Splits on commas outside parentheses, so pair values like `(3.5,3.5)` stay whole.
fn split_values(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(ch);
    }
    out.push(current);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecCurvePoint {
    pub rank: usize,
    pub id: u64,
    pub match_count: usize,
    pub study: OutcomeBucket,
    pub dvs: BTreeMap<String, OutcomeBucket>,
    pub assignment: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecCurve {
    pub max_match_count: usize,
    pub universes: Vec<SpecCurvePoint>,
}

/// Universes ordered by ascending match count, ties by universe id.
pub fn spec_curve(header: &StoreHeader, records: &[&StoreRecord]) -> Result<SpecCurve, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyResults);
    }
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.match_count, r.id));
    let universes = sorted
        .into_iter()
        .enumerate()
        .map(|(rank, r)| SpecCurvePoint {
            rank,
            id: r.id,
            match_count: r.match_count,
            study: r.study,
            dvs: r.dvs.iter().map(|d| (d.outcome.dv.clone(), d.bucket)).collect(),
            assignment: r.assignment.clone(),
        })
        .collect();
    Ok(SpecCurve { max_match_count: 3 * header.dvs.len(), universes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStability {
    pub decision: String,
    pub groups: usize,
    /// Number of distinct study buckets in a group to the number of such groups.
    pub histogram: BTreeMap<usize, usize>,
    pub ordered_pairs: u64,
    pub differing_pairs: u64,
    #[serde(with = "f17_opt")]
    pub flip_rate: Option<f64>,
    /// Share of universes with at least one single-decision alternative in a different bucket.
    #[serde(with = "f17_opt")]
    pub universe_change_rate: Option<f64>,
    /// Flip rate of each dependent variable's own bucket.
    pub dv_flip_rates: BTreeMap<String, Option<F17>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeStability {
    pub definition: String,
    pub decisions: Vec<DecisionStability>,
}

struct PairCount {
    pairs: u64,
    differing: u64,
}

fn pair_counts<T: Ord>(buckets: &[T]) -> PairCount {
    let mut tally: BTreeMap<&T, u64> = BTreeMap::new();
    for b in buckets {
        *tally.entry(b).or_default() += 1;
    }
    let k = buckets.len() as u64;
    let same: u64 = tally.values().map(|c| c * (c - 1)).sum();
    PairCount { pairs: k * (k - 1), differing: k * (k - 1) - same }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// For each decision, groups universes that agree on every other decision.
pub fn change_stability(header: &StoreHeader, records: &[&StoreRecord]) -> Result<ChangeStability, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyResults);
    }
    let mut decisions = Vec::with_capacity(header.decisions.len());
    for decision in &header.decisions {
        let mut groups: BTreeMap<Vec<&str>, Vec<&StoreRecord>> = BTreeMap::new();
        for r in records {
            let key: Vec<&str> = header
                .decisions
                .iter()
                .filter(|d| d.id != decision.id)
                .map(|d| r.assignment.get(&d.id).map_or("", String::as_str))
                .collect();
            groups.entry(key).or_default().push(r);
        }
        let mut histogram = BTreeMap::new();
        let (mut pairs, mut differing, mut changed) = (0u64, 0u64, 0u64);
        let mut dv_pairs: BTreeMap<&str, (u64, u64)> =
            header.dvs.iter().map(|d| (d.as_str(), (0, 0))).collect();
        for members in groups.values() {
            let study: Vec<OutcomeBucket> = members.iter().map(|r| r.study).collect();
            let distinct: BTreeSet<_> = study.iter().collect();
            *histogram.entry(distinct.len()).or_insert(0) += 1;
            let counts = pair_counts(&study);
            pairs += counts.pairs;
            differing += counts.differing;
            if distinct.len() > 1 {
                // every member has at least one neighbour in another bucket
                changed += members.len() as u64;
            }
            for (dv, (p, d)) in dv_pairs.iter_mut() {
                let buckets: Vec<Option<OutcomeBucket>> = members.iter().map(|r| r.bucket_of(dv)).collect();
                let c = pair_counts(&buckets);
                *p += c.pairs;
                *d += c.differing;
            }
        }
        decisions.push(DecisionStability {
            decision: decision.id.clone(),
            groups: groups.len(),
            histogram,
            ordered_pairs: pairs,
            differing_pairs: differing,
            flip_rate: ratio(differing, pairs),
            universe_change_rate: ratio(changed, records.len() as u64),
            dv_flip_rates: dv_pairs
                .into_iter()
                .map(|(dv, (p, d))| (dv.to_string(), ratio(d, p).map(F17)))
                .collect(),
        });
    }
    Ok(ChangeStability { definition: FLIP_RATE_DEFINITION.to_string(), decisions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketShares {
    pub total: usize,
    pub counts: BTreeMap<OutcomeBucket, usize>,
    pub proportions: BTreeMap<OutcomeBucket, F17>,
}

impl BucketShares {
    fn from_buckets(buckets: impl IntoIterator<Item = OutcomeBucket>) -> BucketShares {
        let mut counts: BTreeMap<OutcomeBucket, usize> = OutcomeBucket::ALL.iter().map(|&b| (b, 0)).collect();
        let mut total = 0;
        for b in buckets {
            *counts.get_mut(&b).expect("all buckets present") += 1;
            total += 1;
        }
        let proportions = counts.iter().map(|(&b, &c)| (b, F17(c as f64 / total as f64))).collect();
        BucketShares { total, counts, proportions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeframePoint {
    #[serde(with = "f17")]
    pub days: f64,
    pub study: BucketShares,
    pub dvs: BTreeMap<String, BucketShares>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCurve {
    pub periods_decision: String,
    pub length_decision: String,
    pub timeframes: Vec<TimeframePoint>,
}

fn numeric(decision: &str, value: &str) -> Result<f64, AnalysisError> {
    value.parse::<f64>().map_err(|_| AnalysisError::NotNumeric {
        decision: decision.to_string(),
        value: value.to_string(),
    })
}

/// Bucket shares per total studied timeframe (periods × period length, in days).
pub fn time_curve(header: &StoreHeader, records: &[&StoreRecord]) -> Result<TimeCurve, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyResults);
    }
    let periods = header.decision_of_kind("count").ok_or(AnalysisError::MissingKind("count"))?;
    let length = header.decision_of_kind("duration-days").ok_or(AnalysisError::MissingKind("duration-days"))?;
    // keyed by the bit pattern so equal products group exactly
    let mut groups: BTreeMap<u64, (f64, Vec<&StoreRecord>)> = BTreeMap::new();
    for r in records {
        let get = |d: &str| r.assignment.get(d).map_or("", String::as_str).to_string();
        let days = numeric(&periods.id, &get(&periods.id))? * numeric(&length.id, &get(&length.id))?;
        groups.entry(days.to_bits()).or_insert_with(|| (days, Vec::new())).1.push(r);
    }
    let mut timeframes: Vec<TimeframePoint> = groups
        .into_values()
        .map(|(days, members)| TimeframePoint {
            days,
            study: BucketShares::from_buckets(members.iter().map(|r| r.study)),
            dvs: header
                .dvs
                .iter()
                .map(|dv| {
                    let buckets = members.iter().filter_map(|r| r.bucket_of(dv));
                    (dv.clone(), BucketShares::from_buckets(buckets))
                })
                .collect(),
        })
        .collect();
    timeframes.sort_by(|a, b| a.days.total_cmp(&b.days));
    Ok(TimeCurve { periods_decision: periods.id.clone(), length_decision: length.id.clone(), timeframes })
}

/// Study-level and per-dv bucket counts over the filtered universes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overview {
    pub universes: usize,
    pub fit_attempts: usize,
    pub study: BucketShares,
    pub dvs: BTreeMap<String, BucketShares>,
}

pub fn overview(header: &StoreHeader, records: &[&StoreRecord]) -> Result<Overview, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyResults);
    }
    Ok(Overview {
        universes: records.len(),
        fit_attempts: records.iter().map(|r| r.fit_attempts()).sum(),
        study: BucketShares::from_buckets(records.iter().map(|r| r.study)),
        dvs: header
            .dvs
            .iter()
            .map(|dv| (dv.clone(), BucketShares::from_buckets(records.iter().filter_map(|r| r.bucket_of(dv)))))
            .collect(),
    })
}

/// Everything `analyze` writes, keyed by the filter that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub filter: Filter,
    pub overview: Overview,
    pub spec_curve: SpecCurve,
    pub change_stability: ChangeStability,
    pub time_curve: TimeCurve,
}

impl AnalysisBundle {
    pub fn to_json(&self) -> String {
        to_pretty_json(self)
    }

    pub fn from_json(text: &str) -> Result<AnalysisBundle, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("analysis output serializes");
    s.push('\n');
    s
}

pub fn analyze(store: &ResultsStore, filter: &Filter) -> Result<AnalysisBundle, AnalysisError> {
    filter.validate(&store.header)?;
    let records = filter.apply(store);
    let header = &store.header;
    Ok(AnalysisBundle {
        filter: filter.clone(),
        overview: overview(header, &records)?,
        spec_curve: spec_curve(header, &records)?,
        change_stability: change_stability(header, &records)?,
        time_curve: time_curve(header, &records)?,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:?}"))
}

impl SpecCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,universe,match_count,study");
        if let Some(first) = self.universes.first() {
            for d in first.dvs.keys() {
                let _ = write!(out, ",{d}");
            }
            for d in first.assignment.keys() {
                let _ = write!(out, ",{d}");
            }
        }
        out.push('\n');
        for p in &self.universes {
            let _ = write!(out, "{},{},{},{}", p.rank, p.id, p.match_count, p.study);
            for b in p.dvs.values() {
                let _ = write!(out, ",{b}");
            }
            for v in p.assignment.values() {
                let _ = write!(out, ",\"{v}\"");
            }
            out.push('\n');
        }
        out
    }
}

impl ChangeStability {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("decision,groups,distinct_1,distinct_2,distinct_3,distinct_4,flip_rate,universe_change_rate\n");
        for d in &self.decisions {
            let h = |k: usize| d.histogram.get(&k).copied().unwrap_or(0);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                d.decision,
                d.groups,
                h(1),
                h(2),
                h(3),
                h(4),
                fmt_opt(d.flip_rate),
                fmt_opt(d.universe_change_rate)
            );
        }
        out
    }
}

fn shares_csv_header() -> String {
    OutcomeBucket::ALL.iter().map(|b| format!(",{b}")).collect()
}

fn shares_csv_row(s: &BucketShares) -> String {
    let mut out = format!("{}", s.total);
    for b in OutcomeBucket::ALL {
        let _ = write!(out, ",{}", s.counts[&b]);
    }
    out
}

impl TimeCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!("days,scope,total{}\n", shares_csv_header());
        for t in &self.timeframes {
            let _ = writeln!(out, "{:?},study,{}", t.days, shares_csv_row(&t.study));
            for (dv, s) in &t.dvs {
                let _ = writeln!(out, "{:?},{dv},{}", t.days, shares_csv_row(s));
            }
        }
        out
    }
}

impl Overview {
    /// Counts and percentages per bucket, study level then each dependent variable.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,total");
        for b in OutcomeBucket::ALL {
            let _ = write!(out, ",{b},{b}_pct");
        }
        out.push('\n');
        let row = |out: &mut String, scope: &str, s: &BucketShares| {
            let _ = write!(out, "{scope},{}", s.total);
            for b in OutcomeBucket::ALL {
                let _ = write!(out, ",{},{:.2}", s.counts[&b], 100.0 * s.proportions[&b].0);
            }
            out.push('\n');
        };
        row(&mut out, "study", &self.study);
        for (dv, s) in &self.dvs {
            row(&mut out, dv, s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcomes::SeverityOrder;
    use crate::rdit::HypothesisOutcome;
    use crate::store::{DvRecord, StoreDecision, STORE_FORMAT};
    use OutcomeBucket::*;

    pub(crate) fn header(decisions: &[(&str, &str, &[&str])]) -> StoreHeader {
        StoreHeader {
            format: STORE_FORMAT.into(),
            engine_version: "test".into(),
            spec_digest: String::new(),
            dataset_digest: String::new(),
            baseline_digest: String::new(),
            alpha: 0.05,
            dvs: vec!["y".into()],
            severity: SeverityOrder::default(),
            decisions: decisions
                .iter()
                .map(|(id, kind, values)| StoreDecision {
                    id: id.to_string(),
                    kind: kind.to_string(),
                    values: values.iter().map(|v| v.to_string()).collect(),
                })
                .collect(),
            universes: 0,
        }
    }

    fn record(id: u64, assignment: &[(&str, &str)], study: OutcomeBucket, match_count: usize) -> StoreRecord {
        let mut parts: Vec<String> = assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.sort();
        StoreRecord {
            id,
            digest: parts.join(";"),
            assignment: assignment.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            study,
            match_count,
            dvs: vec![DvRecord { outcome: HypothesisOutcome::failure("y", 0.05, "x"), bucket: study, fit: None }],
        }
    }

    fn store(header: StoreHeader, records: Vec<StoreRecord>) -> ResultsStore {
        ResultsStore { header, records }
    }

    #[test]
    fn spec_curve_order() {
        let h = header(&[("a", "count", &["2"])]);
        let s = store(
            h.clone(),
            vec![
                record(0, &[("a", "2")], FullReplication, 12),
                record(1, &[("a", "2")], ModelFitFailure, 0),
                record(2, &[("a", "2")], OppositeResults, 6),
                record(3, &[("a", "2")], OppositeResults, 6),
            ],
        );
        let curve = spec_curve(&h, &Filter::all().apply(&s)).unwrap();
        let ids: Vec<u64> = curve.universes.iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 0]);
        assert!(matches!(spec_curve(&h, &[]), Err(AnalysisError::EmptyResults)));
    }

    #[test]
    fn stable_decision_has_zero_flip_rate() {
        let h = header(&[("a", "count", &["2", "4"]), ("b", "duration-days", &["7", "30"])]);
        let s = store(
            h.clone(),
            vec![
                record(0, &[("a", "2"), ("b", "7")], FullReplication, 3),
                record(1, &[("a", "2"), ("b", "30")], FullReplication, 3),
                record(2, &[("a", "4"), ("b", "7")], FullReplication, 3),
                record(3, &[("a", "4"), ("b", "30")], FullReplication, 3),
            ],
        );
        let cs = change_stability(&h, &Filter::all().apply(&s)).unwrap();
        for d in &cs.decisions {
            assert_eq!(d.flip_rate, Some(0.0));
            assert_eq!(d.histogram, BTreeMap::from([(1, 2)]));
        }
    }

    #[test]
    fn distinct_count_in_a_group() {
        let h = header(&[("a", "count", &["2", "4", "6", "8"])]);
        let s = store(
            h.clone(),
            vec![
                record(0, &[("a", "2")], FullReplication, 3),
                record(1, &[("a", "4")], FullReplication, 3),
                record(2, &[("a", "6")], OppositeResults, 0),
                record(3, &[("a", "8")], ModelFitFailure, 0),
            ],
        );
        let cs = change_stability(&h, &Filter::all().apply(&s)).unwrap();
        assert_eq!(cs.decisions[0].histogram, BTreeMap::from([(3, 1)]));
        // 12 ordered pairs, 2 of them inside the Full pair
        assert_eq!(cs.decisions[0].flip_rate, Some(10.0 / 12.0));
        assert_eq!(cs.decisions[0].universe_change_rate, Some(1.0));
    }

    #[test]
    fn time_curve_keys_by_product() {
        let h = header(&[("p", "count", &["12", "4"]), ("l", "duration-days", &["7", "21"])]);
        let s = store(
            h.clone(),
            vec![
                record(0, &[("p", "12"), ("l", "7")], FullReplication, 3),
                record(1, &[("p", "12"), ("l", "21")], ModelFitFailure, 0),
                record(2, &[("p", "4"), ("l", "7")], ModelFitFailure, 0),
                record(3, &[("p", "4"), ("l", "21")], OppositeResults, 0),
            ],
        );
        let tc = time_curve(&h, &Filter::all().apply(&s)).unwrap();
        let days: Vec<f64> = tc.timeframes.iter().map(|t| t.days).collect();
        assert_eq!(days, vec![28.0, 84.0, 252.0]);
        assert_eq!(tc.timeframes[0].study.proportions[&ModelFitFailure].0, 1.0);
        assert_eq!(tc.timeframes[1].study.total, 2);
        for t in &tc.timeframes {
            let sum: f64 = t.study.proportions.values().map(|p| p.0).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filters() {
        let h = header(&[("a", "count", &["2", "4"]), ("w", "exclusion-window", &["(3.5,3.5)", "(0.0,7.0)"])]);
        let s = store(
            h.clone(),
            vec![
                record(0, &[("a", "2"), ("w", "(3.5,3.5)")], FullReplication, 3),
                record(1, &[("a", "2"), ("w", "(0.0,7.0)")], ModelFitFailure, 0),
                record(2, &[("a", "4"), ("w", "(3.5,3.5)")], OppositeResults, 0),
            ],
        );
        let mut f = Filter::all();
        f.pin("w=(3.5,3.5)").unwrap();
        assert_eq!(f.apply(&s).iter().map(|r| r.id).collect::<Vec<_>>(), vec![0, 2]);
        let mut g = Filter { include_fit_failures: false, ..Filter::default() };
        g.pin("a=2,4").unwrap();
        assert_eq!(g.apply(&s).len(), 2);
        assert!(Filter::all().pin("nonsense").is_err());
        let mut bad = Filter::all();
        bad.pin("a=3").unwrap();
        assert!(matches!(bad.validate(&h), Err(AnalysisError::UnknownValue { .. })));
        let mut empty = Filter::all();
        empty.pin("a=4").unwrap();
        empty.pin("w=(0.0,7.0)").unwrap();
        assert!(matches!(analyze(&s, &empty), Err(AnalysisError::EmptyResults)));
    }

    #[test]
    fn overview_percentages_sum_to_100() {
        let h = header(&[("p", "count", &["12"]), ("l", "duration-days", &["7"])]);
        let s = store(
            h.clone(),
            (0..7).map(|i| record(i, &[("p", "12"), ("l", "7")], OutcomeBucket::ALL[i as usize % 4], 0)).collect(),
        );
        let bundle = analyze(&s, &Filter::all()).unwrap();
        let csv = bundle.overview.to_csv();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let pct: f64 = (0..4).map(|k| row[3 + 2 * k].parse::<f64>().unwrap()).sum();
        assert!((pct - 100.0).abs() <= 0.02);
    }
}
