use std::collections::BTreeMap;

use proptest::prelude::*;

use forkgarden::analysis::{change_stability, Filter};
use forkgarden::data::{ingest, synthesize, SynthConfig};
use forkgarden::json::format_f17;
use forkgarden::outcomes::{study_bucket, OutcomeBucket, SeverityOrder};
use forkgarden::pipeline::{Averaging, PanelParams, Scaling};
use forkgarden::rdit::HypothesisOutcome;
use forkgarden::spec::{Constraint, DecisionKind, DecisionPoint, DecisionValue, MultiverseSpec};
use forkgarden::store::{DvRecord, ResultsStore, StoreDecision, StoreHeader, StoreRecord, STORE_FORMAT};

/// Radices of 1..=4 decisions, each with 1..=3 values.
fn radices() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=4)
}

fn count_spec(radices: &[usize], forbid: &[Vec<(usize, usize)>]) -> MultiverseSpec {
    let decisions = radices
        .iter()
        .enumerate()
        .map(|(d, &r)| {
            DecisionPoint::new(
                format!("d{d}"),
                DecisionKind::Count,
                (0..r).map(|v| DecisionValue::Int(2 * (v as i64 + 1))).collect(),
            )
        })
        .collect();
    let constraints = forbid
        .iter()
        .map(|pairs| Constraint {
            forbidden: pairs.iter().map(|&(d, v)| (format!("d{d}"), DecisionValue::Int(2 * (v as i64 + 1)))).collect(),
        })
        .collect();
    MultiverseSpec::new(decisions, constraints).unwrap()
}

fn all_indices(radices: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &r in radices {
        out = out.into_iter().flat_map(|p| (0..r).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

fn bucket() -> impl Strategy<Value = OutcomeBucket> {
    prop::sample::select(OutcomeBucket::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_matches_brute_force(
        radices in radices(),
        raw in prop::collection::vec(prop::collection::vec((0usize..4, 0usize..3), 1..=2), 0..=3),
    ) {
        // keep only constraints that name existing, distinct decisions and values
        let forbid: Vec<Vec<(usize, usize)>> = raw
            .into_iter()
            .map(|c| {
                let mut pairs: Vec<(usize, usize)> =
                    c.into_iter().filter(|&(d, v)| d < radices.len() && v < radices[d]).collect();
                pairs.sort();
                pairs.dedup_by_key(|p| p.0);
                pairs
            })
            .filter(|c| !c.is_empty())
            .collect();
        let spec = count_spec(&radices, &forbid);
        let expected: Vec<(u64, Vec<usize>)> = all_indices(&radices)
            .into_iter()
            .enumerate()
            .filter(|(_, idx)| !forbid.iter().any(|c| c.iter().all(|&(d, v)| idx[d] == v)))
            .map(|(id, idx)| (id as u64, idx))
            .collect();
        let got: Vec<(u64, Vec<usize>)> =
            spec.expand().unwrap().into_iter().map(|u| (u.id, u.indices)).collect();
        prop_assert_eq!(&got, &expected);
        prop_assert_eq!(spec.universe_count().unwrap(), expected.len() as u64);
        for (id, _) in &expected {
            prop_assert_eq!(spec.universe(*id).unwrap().id, *id);
        }
    }

    #[test]
    fn tiling_matches_interval_scan(
        half in 1u32..=6,
        len in prop::sample::select(vec![1.0, 7.0, 15.0, 30.0, 0.5]),
        before in prop::sample::select(vec![0.0, 3.5, 7.0, 15.0]),
        after in prop::sample::select(vec![0.0, 3.5, 7.0, 15.0]),
        intervention in -50.0f64..50.0,
        offsets in prop::collection::vec(-200.0f64..200.0, 1..40),
        edges in prop::collection::vec(-8i32..=8, 0..10),
    ) {
        let p = PanelParams {
            n_periods: 2 * half,
            period_length: len,
            days_before: before,
            days_after: after,
            scaling: Scaling::Original,
            averaging: Averaging::Mean,
            digits: None,
        };
        let lower = intervention - before;
        let upper = intervention + after;
        let oracle = |t: f64| -> Option<i32> {
            if t >= lower && t <= upper {
                return None;
            }
            for i in 1..=half as i32 {
                if upper + (i - 1) as f64 * len <= t && t < upper + i as f64 * len {
                    return Some(i);
                }
                if lower - i as f64 * len < t && t <= lower - (i - 1) as f64 * len {
                    return Some(-i);
                }
            }
            None
        };
        let boundaries = edges.iter().flat_map(|&k| [upper + k as f64 * len, lower - k as f64 * len]);
        for t in offsets.iter().map(|o| intervention + o).chain(boundaries) {
            prop_assert_eq!(p.classify(t, intervention), oracle(t), "t = {}", t);
        }
    }

    #[test]
    fn dataset_text_round_trips(seed in 0u64..1000, projects in 1usize..6) {
        let data = synthesize(&SynthConfig { n_projects: projects, seed, ..SynthConfig::default() }).unwrap();
        let text = data.to_text();
        let (back, report) = ingest(&text).unwrap();
        prop_assert!(report.rejected.is_empty());
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.digest(), data.digest());
    }

    #[test]
    fn study_bucket_is_order_minimum(
        perm in Just(OutcomeBucket::ALL.to_vec()).prop_shuffle(),
        dvs in prop::collection::vec(bucket(), 1..6),
        extra in bucket(),
    ) {
        let order = SeverityOrder::new(perm.clone()).unwrap();
        let study = study_bucket(dvs.iter().copied(), &order);
        let rank = |b: OutcomeBucket| perm.iter().position(|&x| x == b).unwrap();
        prop_assert!(dvs.contains(&study));
        prop_assert!(dvs.iter().all(|&b| rank(b) <= rank(study)));
        // one more dependent variable can only keep or worsen the study bucket
        let more = study_bucket(dvs.iter().copied().chain([extra]), &order);
        prop_assert!(rank(more) >= rank(study));
    }

    #[test]
    fn f17_round_trips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        let text = format_f17(x);
        if x.is_finite() {
            prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
        } else {
            prop_assert_eq!(text, "null");
        }
    }

    #[test]
    fn change_stability_matches_pair_scan(
        radices in prop::collection::vec(1usize..=3, 2..=3),
        buckets in prop::collection::vec(bucket(), 27),
        keep in prop::collection::vec(any::<bool>(), 27),
    ) {
        let indices = all_indices(&radices);
        let header = StoreHeader {
            format: STORE_FORMAT.into(),
            engine_version: "test".into(),
            spec_digest: String::new(),
            dataset_digest: String::new(),
            baseline_digest: String::new(),
            alpha: 0.05,
            dvs: vec!["y".into()],
            severity: SeverityOrder::default(),
            decisions: radices
                .iter()
                .enumerate()
                .map(|(d, &r)| StoreDecision {
                    id: format!("d{d}"),
                    kind: "count".into(),
                    values: (0..r).map(|v| v.to_string()).collect(),
                })
                .collect(),
            universes: indices.len() as u64,
        };
        // dropping universes mimics constraints and filters
        let records: Vec<StoreRecord> = indices
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i] || *i == 0)
            .map(|(i, idx)| {
                let assignment: indexmap::IndexMap<String, String> =
                    idx.iter().enumerate().map(|(d, v)| (format!("d{d}"), v.to_string())).collect();
                let mut parts: Vec<String> = assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
                parts.sort();
                StoreRecord {
                    id: i as u64,
                    digest: parts.join(";"),
                    assignment,
                    study: buckets[i],
                    match_count: 0,
                    dvs: vec![DvRecord {
                        outcome: HypothesisOutcome::failure("y", 0.05, "test"),
                        bucket: buckets[i],
                        fit: None,
                    }],
                }
            })
            .collect();
        let store = ResultsStore { header, records };
        let kept = Filter::all().apply(&store);
        let cs = change_stability(&store.header, &kept).unwrap();
        for (d, stab) in cs.decisions.iter().enumerate() {
            let differs_only_in_d = |a: &StoreRecord, b: &StoreRecord| {
                a.assignment.values().zip(b.assignment.values()).enumerate().all(|(k, (x, y))| (k == d) != (x == y))
            };
            let mut pairs = 0u64;
            let mut differing = 0u64;
            for a in &kept {
                for b in &kept {
                    if differs_only_in_d(a, b) {
                        pairs += 1;
                        differing += (a.study != b.study) as u64;
                    }
                }
            }
            prop_assert_eq!(stab.ordered_pairs, pairs);
            prop_assert_eq!(stab.differing_pairs, differing);
            // every kept universe lies in exactly one group
            let mut groups: BTreeMap<Vec<&String>, usize> = BTreeMap::new();
            for r in &kept {
                let rest: Vec<&String> =
                    r.assignment.values().enumerate().filter(|(k, _)| *k != d).map(|(_, v)| v).collect();
                *groups.entry(rest).or_default() += 1;
            }
            prop_assert_eq!(stab.groups, groups.len());
            prop_assert_eq!(stab.histogram.values().sum::<usize>(), groups.len());
        }
    }
}
