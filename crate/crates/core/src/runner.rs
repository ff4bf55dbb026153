//! Executes a whole multiverse into a results store.
//!
//! Universes sharing a data projection (the same [`PanelParams`]) are run
//! together so each panel is built once per dependent variable and reused by
//! every model variant. Projections are spread over a rayon pool; finished
//! records funnel through one writer thread that appends them to a journal,
//! which is what makes an interrupted run resumable. On completion the
//! records are sorted by universe id and written as the canonical store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use indexmap::IndexMap;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::data::EventDataset;
use crate::outcomes::{bucket_universe, Baseline, OutcomeError};
use crate::pipeline::{build_panel, ModelParams, PanelError, PanelParams};
use crate::rdit::{check_alpha, fit_universe_dv, panel_failure, RditError};
use crate::spec::{MultiverseSpec, SpecError, UniverseSpec};
use crate::store::{
    header_line, record_line, timing_sidecar, DvRecord, ResultsStore, StoreError, StoreHeader,
    StoreRecord, ENGINE_VERSION, STORE_FORMAT,
};

pub const STORE_FILE: &str = "results.ndjson";
pub const JOURNAL_FILE: &str = "results.partial.ndjson";
pub const TIMING_FILE: &str = "timings.tsv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("the spec expands to no universes")]
    NoUniverses,
    #[error("journal was written for different inputs ({0} differs); remove it or use the original inputs")]
    ResumeMismatch(&'static str),
    #[error("storage is full while writing {0}")]
    StorageFull(PathBuf),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Rdit(#[from] RditError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| {
        if source.kind() == ErrorKind::StorageFull {
            RunError::StorageFull(path.to_path_buf())
        } else {
            RunError::Io { path: path.to_path_buf(), source }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub alpha: f64,
    pub workers: usize,
    /// Directory for the journal, store and timing sidecar; `None` keeps everything in memory.
    pub output: Option<PathBuf>,
    /// Stop after this many newly computed universes, leaving the journal behind.
    pub max_universes: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { alpha: crate::rdit::DEFAULT_ALPHA, workers: 1, output: None, max_universes: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Telemetry {
    pub universes: usize,
    /// Universes skipped because the journal already held them.
    pub resumed: usize,
    pub projections: usize,
    pub panels_built: usize,
    /// Universes that reused a projection computed for an earlier one.
    pub cache_hits: usize,
    pub fit_attempts: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Present once every universe has a record.
    pub store: Option<ResultsStore>,
    pub telemetry: Telemetry,
    pub wall_times: BTreeMap<u64, f64>,
}

pub fn baseline_digest(baseline: &Baseline) -> String {
    hex::encode(Sha256::digest(baseline.to_toml().as_bytes()))
}

pub fn make_header(
    dataset: &EventDataset,
    spec: &MultiverseSpec,
    baseline: &Baseline,
    alpha: f64,
) -> Result<StoreHeader, RunError> {
    Ok(StoreHeader {
        format: STORE_FORMAT.to_string(),
        engine_version: ENGINE_VERSION.to_string(),
        spec_digest: spec.digest(),
        dataset_digest: dataset.digest(),
        baseline_digest: baseline_digest(baseline),
        alpha,
        dvs: baseline.dv_names(),
        severity: baseline.order.clone(),
        decisions: StoreHeader::decisions_of(spec),
        universes: spec.universe_count()?,
    })
}

/// Runs every universe of one projection against prebuilt panels.
fn run_projection(
    dataset: &EventDataset,
    spec: &MultiverseSpec,
    baseline: &Baseline,
    alpha: f64,
    params: &PanelParams,
    universes: &[&UniverseSpec],
) -> Result<Vec<(StoreRecord, f64)>, RunError> {
    let panels: Vec<(String, Result<_, PanelError>)> =
        baseline.dvs.keys().map(|dv| (dv.clone(), build_panel(dataset, dv, params))).collect();
    let mut out = Vec::with_capacity(universes.len());
    for u in universes {
        let started = Instant::now();
        let model = ModelParams::from_universe(spec, u)?;
        let mut outcomes = Vec::with_capacity(panels.len());
        let mut fits = Vec::with_capacity(panels.len());
        for (dv, panel) in &panels {
            let (outcome, fit) = match panel {
                Ok(p) => fit_universe_dv(p, &model, alpha),
                Err(e) => (panel_failure(dv, alpha, e), None),
            };
            outcomes.push(outcome);
            fits.push(fit);
        }
        let buckets = bucket_universe(&outcomes, baseline)?;
        let dvs = outcomes
            .into_iter()
            .zip(fits)
            .map(|(outcome, fit)| {
                let bucket = buckets.dvs[&outcome.dv];
                DvRecord { outcome, bucket, fit }
            })
            .collect();
        let record = StoreRecord {
            id: u.id,
            digest: StoreRecord::digest_of(&u.assignment),
            assignment: u.assignment.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            study: buckets.study,
            match_count: buckets.match_count,
            dvs,
        };
        out.push((record, started.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Reads the journal's header and every complete record line.
fn read_journal(path: &Path, expected: &StoreHeader) -> Result<Vec<StoreRecord>, RunError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let mut lines = text.split_inclusive('\n');
    let Some(first) = lines.next().filter(|l| l.ends_with('\n')) else {
        return Ok(Vec::new());
    };
    let header: StoreHeader = serde_json::from_str(first.trim_end())
        .map_err(|e| StoreError::Parse { line: 1, message: e.to_string() })?;
    let checks: [(&'static str, bool); 6] = [
        ("spec digest", header.spec_digest == expected.spec_digest),
        ("dataset digest", header.dataset_digest == expected.dataset_digest),
        ("baseline digest", header.baseline_digest == expected.baseline_digest),
        ("alpha", header.alpha.to_bits() == expected.alpha.to_bits()),
        ("dependent variables", header.dvs == expected.dvs),
        ("engine version", header.engine_version == expected.engine_version),
    ];
    if let Some((what, _)) = checks.iter().find(|(_, ok)| !ok) {
        return Err(RunError::ResumeMismatch(what));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        // a torn final line from an interrupted write is dropped and recomputed
        if !line.ends_with('\n') {
            break;
        }
        let record: StoreRecord = serde_json::from_str(line.trim_end())
            .map_err(|e| StoreError::Parse { line: i + 2, message: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}

/// Runs the multiverse; with an output directory the run is journaled and resumable.
pub fn run_multiverse(
    dataset: &EventDataset,
    spec: &MultiverseSpec,
    baseline: &Baseline,
    options: &RunOptions,
) -> Result<RunOutcome, RunError> {
    check_alpha(options.alpha)?;
    if options.workers == 0 {
        return Err(RunError::NoWorkers);
    }
    for dv in baseline.dvs.keys() {
        if dataset.schema.dv_index(dv).is_none() {
            return Err(RditError::Panel(PanelError::UnknownDependentVariable(dv.clone())).into());
        }
    }
    let universes = spec.expand()?;
    if universes.is_empty() {
        return Err(RunError::NoUniverses);
    }
    let header = make_header(dataset, spec, baseline, options.alpha)?;

    let journal_path = options.output.as_ref().map(|d| d.join(JOURNAL_FILE));
    let mut done: BTreeMap<u64, StoreRecord> = BTreeMap::new();
    if let Some(path) = &journal_path {
        fs::create_dir_all(path.parent().expect("journal has a parent")).map_err(io_error(path))?;
        if path.exists() {
            for r in read_journal(path, &header)? {
                done.insert(r.id, r);
            }
        }
    }
    let resumed = done.len();

    let mut pending: Vec<&UniverseSpec> = universes.iter().filter(|u| !done.contains_key(&u.id)).collect();
    if let Some(max) = options.max_universes {
        pending.truncate(max);
    }
    let mut groups: IndexMap<String, (PanelParams, Vec<&UniverseSpec>)> = IndexMap::new();
    for u in &pending {
        let params = PanelParams::from_universe(spec, u)?;
        groups.entry(params.key()).or_insert_with(|| (params, Vec::new())).1.push(u);
    }
    // the model decisions must resolve before any work starts
    if let Some(u) = pending.first() {
        ModelParams::from_universe(spec, u)?;
    }

    let (tx, rx) = mpsc::channel::<Vec<(StoreRecord, f64)>>();
    let writer_path = journal_path.clone();
    let fresh_journal = resumed == 0;
    let header_text = header_line(&header);
    let writer = std::thread::spawn(move || -> Result<Vec<(StoreRecord, f64)>, RunError> {
        let mut file = match &writer_path {
            Some(path) => {
                let f = if fresh_journal {
                    File::create(path)
                } else {
                    OpenOptions::new().append(true).open(path)
                }
                .map_err(io_error(path))?;
                let mut w = BufWriter::new(f);
                if fresh_journal {
                    writeln!(w, "{header_text}").and_then(|_| w.flush()).map_err(io_error(path))?;
                }
                Some((w, path.clone()))
            }
            None => None,
        };
        let mut collected = Vec::new();
        for batch in rx {
            if let Some((w, path)) = file.as_mut() {
                for (record, _) in &batch {
                    writeln!(w, "{}", record_line(record)).map_err(io_error(path))?;
                }
                w.flush().map_err(io_error(path))?;
            }
            collected.extend(batch);
        }
        Ok(collected)
    });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .expect("thread pool builds");
    let work: Result<(), RunError> = pool.install(|| {
        groups.values().collect::<Vec<_>>().into_par_iter().try_for_each_with(tx, |tx, (params, members)| {
            let batch = run_projection(dataset, spec, baseline, options.alpha, params, members)?;
            // a closed channel means the writer failed; its error is reported below
            let _ = tx.send(batch);
            Ok(())
        })
    });
    let written = writer.join().expect("writer thread does not panic");
    work?;
    let computed = written?;

    let telemetry = Telemetry {
        universes: universes.len(),
        resumed,
        projections: groups.len(),
        panels_built: groups.len() * baseline.dvs.len(),
        cache_hits: pending.len() - groups.len(),
        fit_attempts: pending.len() * baseline.dvs.len(),
    };
    let mut wall_times = BTreeMap::new();
    for (record, secs) in computed {
        wall_times.insert(record.id, secs);
        done.insert(record.id, record);
    }
    if done.len() < universes.len() {
        return Ok(RunOutcome { store: None, telemetry, wall_times });
    }
    let store = ResultsStore { header, records: done.into_values().collect() };
    if let Some(dir) = &options.output {
        write_atomic(&dir.join(STORE_FILE), &store.to_ndjson())?;
        write_atomic(&dir.join(TIMING_FILE), &timing_sidecar(&wall_times))?;
        if let Some(path) = &journal_path {
            fs::remove_file(path).map_err(io_error(path))?;
        }
    }
    Ok(RunOutcome { store: Some(store), telemetry, wall_times })
}

/// Distinct data projections of a spec: the panel-cache size of a full run.
pub fn distinct_projections(spec: &MultiverseSpec) -> Result<usize, RunError> {
    let mut keys = BTreeSet::new();
    for u in spec.expand()? {
        keys.insert(PanelParams::from_universe(spec, &u)?.key());
    }
    Ok(keys.len())
}
