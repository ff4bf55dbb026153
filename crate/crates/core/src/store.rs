//! The results store: newline-delimited JSON, one header line followed by one
//! record per universe in ascending universe id.
//!
//! Every float is written with 17 significant digits, so a store parsed and
//! written again is byte-identical. Wall-times live in a sidecar file, never
//! in the store.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::json::f17;
use crate::outcomes::{OutcomeBucket, SeverityOrder};
use crate::rdit::HypothesisOutcome;
use crate::spec::{universe_digest, DecisionValue, MultiverseSpec};
use crate::stats::FitResult;

pub const STORE_FORMAT: &str = "forkgarden-results/1";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("store is empty")]
    Empty,
    #[error("line {line}: universe {id} is out of order or duplicated")]
    Order { line: usize, id: u64 },
    #[error("line {line}: assignment digest does not match the assignment")]
    Digest { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreDecision {
    pub id: String,
    pub kind: String,
    /// Display forms, in declaration order.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format: String,
    pub engine_version: String,
    pub spec_digest: String,
    pub dataset_digest: String,
    pub baseline_digest: String,
    #[serde(with = "f17")]
    pub alpha: f64,
    pub dvs: Vec<String>,
    pub severity: SeverityOrder,
    pub decisions: Vec<StoreDecision>,
    /// Universes in the expanded spec.
    pub universes: u64,
}

impl StoreHeader {
    pub fn decisions_of(spec: &MultiverseSpec) -> Vec<StoreDecision> {
        spec.decisions()
            .iter()
            .map(|d| StoreDecision {
                id: d.id.clone(),
                kind: d.kind.as_str().to_string(),
                values: d.values.iter().map(ToString::to_string).collect(),
            })
            .collect()
    }

    /// The decision with the given kind name, if declared.
    pub fn decision_of_kind(&self, kind: &str) -> Option<&StoreDecision> {
        self.decisions.iter().find(|d| d.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvRecord {
    pub outcome: HypothesisOutcome,
    pub bucket: OutcomeBucket,
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub id: u64,
    /// `decision=value` pairs sorted by decision id.
    pub digest: String,
    /// Decision id to display value, in declaration order.
    pub assignment: IndexMap<String, String>,
    pub study: OutcomeBucket,
    pub match_count: usize,
    pub dvs: Vec<DvRecord>,
}

impl StoreRecord {
    pub fn digest_of(assignment: &[(String, DecisionValue)]) -> String {
        universe_digest(assignment)
    }

    pub fn bucket_of(&self, dv: &str) -> Option<OutcomeBucket> {
        self.dvs.iter().find(|d| d.outcome.dv == dv).map(|d| d.bucket)
    }

    pub fn fit_attempts(&self) -> usize {
        self.dvs.len()
    }

    fn digest_matches(&self) -> bool {
        let mut parts: Vec<String> = self.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.sort();
        parts.join(";") == self.digest
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsStore {
    pub header: StoreHeader,
    pub records: Vec<StoreRecord>,
}

pub fn header_line(header: &StoreHeader) -> String {
    serde_json::to_string(header).expect("header serializes")
}

pub fn record_line(record: &StoreRecord) -> String {
    serde_json::to_string(record).expect("record serializes")
}

impl ResultsStore {
    pub fn to_ndjson(&self) -> String {
        let mut out = header_line(&self.header);
        out.push('\n');
        for r in &self.records {
            out.push_str(&record_line(r));
            out.push('\n');
        }
        out
    }

    /// Parses a store, checking record order and assignment digests.
    pub fn parse(text: &str) -> Result<ResultsStore, StoreError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(StoreError::Empty)?;
        let header: StoreHeader = serde_json::from_str(first)
            .map_err(|e| StoreError::Parse { line: 1, message: e.to_string() })?;
        if header.format != STORE_FORMAT {
            return Err(StoreError::Parse {
                line: 1,
                message: format!("unsupported format `{}`", header.format),
            });
        }
        let mut records: Vec<StoreRecord> = Vec::new();
        for (i, line) in lines {
            let record: StoreRecord = serde_json::from_str(line)
                .map_err(|e| StoreError::Parse { line: i + 1, message: e.to_string() })?;
            if records.last().is_some_and(|prev| prev.id >= record.id) {
                return Err(StoreError::Order { line: i + 1, id: record.id });
            }
            if !record.digest_matches() {
                return Err(StoreError::Digest { line: i + 1 });
            }
            records.push(record);
        }
        Ok(ResultsStore { header, records })
    }

    pub fn load(path: &Path) -> Result<ResultsStore, StoreError> {
        ResultsStore::parse(&std::fs::read_to_string(path)?)
    }

    pub fn fit_attempts(&self) -> usize {
        self.records.iter().map(StoreRecord::fit_attempts).sum()
    }

    /// Study-level bucket counts, in the header's severity order.
    pub fn bucket_counts(&self) -> BTreeMap<OutcomeBucket, usize> {
        let mut counts: BTreeMap<OutcomeBucket, usize> = OutcomeBucket::ALL.iter().map(|&b| (b, 0)).collect();
        for r in &self.records {
            *counts.get_mut(&r.study).expect("all buckets present") += 1;
        }
        counts
    }
}

/// Per-universe wall-times, one `id<TAB>seconds` line each, sorted by id.
pub fn timing_sidecar(times: &BTreeMap<u64, f64>) -> String {
    let mut out = String::from("universe\tseconds\n");
    for (id, secs) in times {
        let _ = writeln!(out, "{id}\t{secs:.6}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcomes::SeverityOrder;
    use crate::rdit::HypothesisOutcome;

    fn sample() -> ResultsStore {
        let header = StoreHeader {
            format: STORE_FORMAT.into(),
            engine_version: ENGINE_VERSION.into(),
            spec_digest: "s".into(),
            dataset_digest: "d".into(),
            baseline_digest: "b".into(),
            alpha: 0.05,
            dvs: vec!["y".into()],
            severity: SeverityOrder::default(),
            decisions: vec![StoreDecision { id: "a".into(), kind: "count".into(), values: vec!["2".into(), "4".into()] }],
            universes: 2,
        };
        let record = |id: u64, v: &str| StoreRecord {
            id,
            digest: format!("a={v}"),
            assignment: [("a".to_string(), v.to_string())].into_iter().collect(),
            study: OutcomeBucket::ModelFitFailure,
            match_count: 0,
            dvs: vec![DvRecord {
                outcome: HypothesisOutcome::failure("y", 0.05, "RankDeficient"),
                bucket: OutcomeBucket::ModelFitFailure,
                fit: None,
            }],
        };
        ResultsStore { header, records: vec![record(0, "2"), record(1, "4")] }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = sample().to_ndjson();
        let back = ResultsStore::parse(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.to_ndjson(), text);
        assert!(text.contains("\"alpha\":5.0000000000000003e-2"));
    }

    #[test]
    fn rejects_bad_stores() {
        assert!(matches!(ResultsStore::parse(""), Err(StoreError::Empty)));
        let text = sample().to_ndjson();
        let lines: Vec<&str> = text.lines().collect();
        let swapped = format!("{}\n{}\n{}\n", lines[0], lines[2], lines[1]);
        assert!(matches!(ResultsStore::parse(&swapped), Err(StoreError::Order { line: 3, id: 0 })));
        let tampered = text.replace("\"digest\":\"a=4\"", "\"digest\":\"a=5\"");
        assert!(matches!(ResultsStore::parse(&tampered), Err(StoreError::Digest { line: 3 })));
        let broken = format!("{}\n{{not json\n", lines[0]);
        assert!(matches!(ResultsStore::parse(&broken), Err(StoreError::Parse { line: 2, .. })));
    }
}
