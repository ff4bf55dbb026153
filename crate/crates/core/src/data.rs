//! Event-level datasets: schema, file ingestion and serialization, and a
//! synthetic generator with known injected intervention effects.
//!
//! File format (UTF-8, comma separated):
//!
//! ```text
//! #dv: general_comments,review_comments
//! #cov: team_size
//! project_id,timestamp_days,intervention_days,general_comments,review_comments,team_size
//! p1,16010.25,16400,3,0,4.5
//! ```
//!
//! Header columns may appear in any order but must be exactly the three fixed
//! columns plus the declared dependent variables and covariates. Every cell is
//! required.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Column names the model reserves for the intercept and the time variables.
pub const RESERVED_NAMES: [&str; 7] = [
    "const",
    "time",
    "intervention",
    "time_after",
    "project_id",
    "timestamp_days",
    "intervention_days",
];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset contains no usable projects")]
    EmptyDataset,
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub dependent: Vec<String>,
    pub covariates: Vec<String>,
}

impl Schema {
    pub fn new(dependent: Vec<String>, covariates: Vec<String>) -> Result<Schema, DataError> {
        if dependent.is_empty() {
            return Err(DataError::Schema("no dependent variables declared".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in dependent.iter().chain(&covariates) {
            if name.is_empty() || name.contains(',') || name.trim() != name {
                return Err(DataError::Schema(format!("invalid column name `{name}`")));
            }
            if RESERVED_NAMES.contains(&name.as_str()) {
                return Err(DataError::Schema(format!("`{name}` is a reserved column name")));
            }
            if !seen.insert(name.as_str()) {
                return Err(DataError::Schema(format!("column `{name}` declared twice")));
            }
        }
        Ok(Schema { dependent, covariates })
    }

    pub fn dv_index(&self, name: &str) -> Option<usize> {
        self.dependent.iter().position(|d| d == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub timestamp: f64,
    /// Aligned with `Schema::dependent`.
    pub dv: Vec<f64>,
    /// Aligned with `Schema::covariates`.
    pub covariates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectRecord {
    pub id: String,
    pub intervention: f64,
    /// Sorted by timestamp.
    pub events: Vec<EventRecord>,
}

impl ProjectRecord {
    fn spans_intervention(&self) -> bool {
        self.events.iter().any(|e| e.timestamp < self.intervention)
            && self.events.iter().any(|e| e.timestamp > self.intervention)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub schema: Schema,
    pub projects: Vec<ProjectRecord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows: usize,
    /// Projects dropped because they lack events on one side of the intervention.
    pub rejected: Vec<String>,
}

impl EventDataset {
    pub fn event_count(&self) -> usize {
        self.projects.iter().map(|p| p.events.len()).sum()
    }

    /// Writes the dataset in the file format described in the module docs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#dv: {}", self.schema.dependent.join(","));
        let _ = writeln!(out, "#cov: {}", self.schema.covariates.join(","));
        out.push_str("project_id,timestamp_days,intervention_days");
        for name in self.schema.dependent.iter().chain(&self.schema.covariates) {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for p in &self.projects {
            for e in &p.events {
                let _ = write!(out, "{},{},{}", p.id, e.timestamp, p.intervention);
                for v in e.dv.iter().chain(&e.covariates) {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(EventDataset, IngestReport), DataError> {
        ingest(&std::fs::read_to_string(path)?)
    }
}

fn parse_name_list(line: &str) -> Vec<String> {
    line.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// Parses and validates a dataset file.
pub fn ingest(text: &str) -> Result<(EventDataset, IngestReport), DataError> {
    let mut dvs = None;
    let mut covs = None;
    let mut body_start = 0;
    let mut header_lines = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("#dv:") {
            dvs = Some(parse_name_list(rest));
        } else if let Some(rest) = trimmed.strip_prefix("#cov:") {
            covs = Some(parse_name_list(rest));
        } else if !(trimmed.is_empty() || trimmed.starts_with('#')) {
            break;
        }
        body_start += line.len();
        header_lines += 1;
    }
    let dvs = dvs.ok_or_else(|| DataError::Schema("missing `#dv:` header line".into()))?;
    let schema = Schema::new(dvs, covs.unwrap_or_default())?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text[body_start..].as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Parse { line: header_lines + 1, message: e.to_string() })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::Schema(format!("missing declared column `{name}`")))
    };
    let project_col = column("project_id")?;
    let time_col = column("timestamp_days")?;
    let intervention_col = column("intervention_days")?;
    let dv_cols = schema.dependent.iter().map(|n| column(n)).collect::<Result<Vec<_>, _>>()?;
    let cov_cols = schema.covariates.iter().map(|n| column(n)).collect::<Result<Vec<_>, _>>()?;
    let expected = 3 + dv_cols.len() + cov_cols.len();
    if headers.len() != expected {
        let known: Vec<_> = ["project_id", "timestamp_days", "intervention_days"]
            .into_iter()
            .chain(schema.dependent.iter().map(String::as_str))
            .chain(schema.covariates.iter().map(String::as_str))
            .collect();
        let extra: Vec<_> = headers.iter().filter(|h| !known.contains(h)).collect();
        return Err(DataError::Schema(format!("undeclared columns: {}", extra.join(","))));
    }

    let mut projects: IndexMap<String, ProjectRecord> = IndexMap::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Parse {
            line: header_lines + e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = header_lines + record.position().map_or(0, |p| p.line());
        let err = |message: String| DataError::Parse { line, message };
        let number = |col: usize, what: &str| -> Result<f64, DataError> {
            let cell = record.get(col).unwrap_or("");
            if cell.is_empty() {
                return Err(err(format!("missing value for `{what}`")));
            }
            let v: f64 = cell.parse().map_err(|_| err(format!("`{cell}` is not a number ({what})")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value for `{what}`")));
            }
            Ok(v)
        };
        let project_id = record.get(project_col).unwrap_or("");
        if project_id.is_empty() {
            return Err(err("missing project_id".into()));
        }
        let timestamp = number(time_col, "timestamp_days")?;
        let intervention = number(intervention_col, "intervention_days")?;
        let mut dv = Vec::with_capacity(dv_cols.len());
        for (&col, name) in dv_cols.iter().zip(&schema.dependent) {
            let v = number(col, name)?;
            if v < 0.0 {
                return Err(err(format!("negative count {v} for `{name}`")));
            }
            dv.push(v);
        }
        let covariates = cov_cols
            .iter()
            .zip(&schema.covariates)
            .map(|(&col, name)| number(col, name))
            .collect::<Result<Vec<_>, _>>()?;
        let project = projects.entry(project_id.to_string()).or_insert_with(|| ProjectRecord {
            id: project_id.to_string(),
            intervention,
            events: Vec::new(),
        });
        if project.intervention != intervention {
            return Err(err(format!(
                "project `{project_id}` has conflicting intervention times {} and {intervention}",
                project.intervention
            )));
        }
        project.events.push(EventRecord { timestamp, dv, covariates });
        rows += 1;
    }

    let mut report = IngestReport { rows, rejected: Vec::new() };
    let mut kept = Vec::with_capacity(projects.len());
    for (_, mut project) in projects {
        project.events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        if project.spans_intervention() {
            kept.push(project);
        } else {
            report.rejected.push(project.id);
        }
    }
    if kept.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    Ok((EventDataset { schema, projects: kept }, report))
}

/// True effects for one dependent variable.
///
/// The event-level mean is
/// `baseline + u_project + pre_slope·τ + jump·1[t ≥ t₀] + slope_change·max(τ, 0) + Σ γ_k x_k`
/// where τ is time since intervention in units of `time_unit_days`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvEffect {
    pub name: String,
    pub baseline: f64,
    #[serde(default)]
    pub pre_slope: f64,
    #[serde(default)]
    pub jump: f64,
    #[serde(default)]
    pub slope_change: f64,
    /// One coefficient per covariate, in declaration order; missing entries are 0.
    #[serde(default)]
    pub covariate_effects: Vec<f64>,
}

/// Covariate process: a per-project level plus a trend and per-event noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateGen {
    pub name: String,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub project_sd: f64,
    /// Change per time unit.
    #[serde(default)]
    pub trend: f64,
    #[serde(default)]
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_projects: usize,
    pub events_per_day: f64,
    pub dependent: Vec<DvEffect>,
    #[serde(default)]
    pub covariates: Vec<CovariateGen>,
    pub intercept_sd: f64,
    pub noise_sd: f64,
    /// Length of one unit of τ, in days.
    pub time_unit_days: f64,
    /// Events are generated this many days on each side of the intervention range.
    pub half_window_days: f64,
    /// Intervention times are uniform on `[start_day + half_window, start_day + half_window + spread]`.
    pub intervention_spread_days: f64,
    pub start_day: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let dv = |name: &str, jump: f64| DvEffect {
            name: name.into(),
            baseline: 10.0,
            pre_slope: 0.0,
            jump,
            slope_change: 0.0,
            covariate_effects: vec![0.5, 0.2],
        };
        SynthConfig {
            n_projects: 200,
            events_per_day: 0.25,
            dependent: vec![
                dv("general_comments", -5.0),
                dv("review_comments", -5.0),
                dv("effective_comments", 0.0),
                dv("commits_after_create", 0.0),
            ],
            covariates: vec![
                CovariateGen {
                    name: "team_size".into(),
                    mean: 5.0,
                    project_sd: 2.0,
                    trend: 0.0,
                    noise_sd: 1.0,
                },
                CovariateGen {
                    name: "activity".into(),
                    mean: 3.0,
                    project_sd: 1.0,
                    trend: 0.0,
                    noise_sd: 1.0,
                },
            ],
            intercept_sd: 1.0,
            noise_sd: 1.0,
            time_unit_days: 30.0,
            half_window_days: 840.0,
            intervention_spread_days: 365.0,
            start_day: 16000.0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Reads a TOML generator config; omitted optional fields take their zero defaults.
    pub fn parse(text: &str) -> Result<SynthConfig, DataError> {
        toml::from_str(text).map_err(|e| DataError::InvalidConfig(e.message().to_string()))
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidConfig(m.to_string()));
        if self.n_projects == 0 {
            return bad("n_projects must be positive");
        }
        if !(self.events_per_day.is_finite() && self.events_per_day > 0.0) {
            return bad("events_per_day must be positive");
        }
        if !(self.intercept_sd >= 0.0 && self.noise_sd >= 0.0) {
            return bad("standard deviations must be non-negative");
        }
        if self.covariates.iter().any(|c| !(c.project_sd >= 0.0 && c.noise_sd >= 0.0)) {
            return bad("covariate standard deviations must be non-negative");
        }
        if !(self.time_unit_days > 0.0 && self.half_window_days > 0.0) {
            return bad("time_unit_days and half_window_days must be positive");
        }
        if !(self.intervention_spread_days >= 0.0 && self.start_day.is_finite()) {
            return bad("intervention_spread_days must be non-negative");
        }
        for d in &self.dependent {
            if d.covariate_effects.len() > self.covariates.len() {
                return bad("more covariate effects than covariates");
            }
        }
        let names = self.dependent.iter().map(|d| d.name.clone()).collect();
        let covs = self.covariates.iter().map(|c| c.name.clone()).collect();
        Schema::new(names, covs).map(|_| ()).map_err(|e| DataError::InvalidConfig(e.to_string()))
    }
}

/// Generates a dataset from `cfg`; identical configs give identical datasets.
pub fn synthesize(cfg: &SynthConfig) -> Result<EventDataset, DataError> {
    cfg.validate()?;
    let schema = Schema::new(
        cfg.dependent.iter().map(|d| d.name.clone()).collect(),
        cfg.covariates.iter().map(|c| c.name.clone()).collect(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let gap = Exp::new(cfg.events_per_day).expect("positive rate");
    let first_t0 = cfg.start_day + cfg.half_window_days;
    let end = first_t0 + cfg.intervention_spread_days + cfg.half_window_days;
    let width = (cfg.n_projects.max(2) - 1).to_string().len();

    let mut projects = Vec::with_capacity(cfg.n_projects);
    for p in 0..cfg.n_projects {
        let t0 = first_t0 + rng.gen::<f64>() * cfg.intervention_spread_days;
        let dv_intercepts: Vec<f64> = cfg
            .dependent
            .iter()
            .map(|_| cfg.intercept_sd * std_normal.sample(&mut rng))
            .collect();
        let cov_levels: Vec<f64> = cfg
            .covariates
            .iter()
            .map(|c| c.mean + c.project_sd * std_normal.sample(&mut rng))
            .collect();
        let mut events = Vec::new();
        let mut t = cfg.start_day;
        loop {
            t += gap.sample(&mut rng);
            if t >= end {
                break;
            }
            let tau = (t - t0) / cfg.time_unit_days;
            let covariates: Vec<f64> = cfg
                .covariates
                .iter()
                .zip(&cov_levels)
                .map(|(c, level)| level + c.trend * tau + c.noise_sd * std_normal.sample(&mut rng))
                .collect();
            let dv = cfg
                .dependent
                .iter()
                .zip(&dv_intercepts)
                .map(|(d, u)| {
                    let after = t >= t0;
                    let mut mu = d.baseline + u + d.pre_slope * tau;
                    if after {
                        mu += d.jump + d.slope_change * tau;
                    }
                    mu += d.covariate_effects.iter().zip(&covariates).map(|(g, x)| g * x).sum::<f64>();
                    let draw = mu + cfg.noise_sd * std_normal.sample(&mut rng);
                    draw.max(0.0).round_ties_even()
                })
                .collect();
            events.push(EventRecord { timestamp: t, dv, covariates });
        }
        projects.push(ProjectRecord { id: format!("p{p:0width$}"), intervention: t0, events });
    }
    projects.retain(ProjectRecord::spans_intervention);
    if projects.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    Ok(EventDataset { schema, projects })
}

/// Shuffles intervention times across projects (a permutation null).
pub fn permute_interventions(dataset: &EventDataset, seed: u64) -> EventDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times: Vec<f64> = dataset.projects.iter().map(|p| p.intervention).collect();
    times.shuffle(&mut rng);
    let projects = dataset
        .projects
        .iter()
        .zip(times)
        .map(|(p, t0)| ProjectRecord { intervention: t0, ..p.clone() })
        .filter(ProjectRecord::spans_intervention)
        .collect();
    EventDataset { schema: dataset.schema.clone(), projects }
}

/// Event-level means of one dependent variable before and after each project's intervention.
pub fn pre_post_means(dataset: &EventDataset, dv: usize) -> (f64, f64) {
    let mut sums: HashMap<bool, (f64, usize)> = HashMap::new();
    for p in &dataset.projects {
        for e in &p.events {
            let slot = sums.entry(e.timestamp >= p.intervention).or_default();
            slot.0 += e.dv[dv];
            slot.1 += 1;
        }
    }
    let mean = |k: bool| sums.get(&k).map_or(f64::NAN, |(s, n)| s / *n as f64);
    (mean(false), mean(true))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PROJECTS: &str = "\
#dv: comments
#cov: size
project_id,timestamp_days,intervention_days,comments,size
a,1,5,1,10
a,6,5,2,10
a,9,5,3,11
b,2,4,0,3
b,3,4,4,3
b,8,4,1,2
";

    #[test]
    fn loads_valid_file() {
        let (d, report) = ingest(TWO_PROJECTS).unwrap();
        assert_eq!(d.projects.len(), 2);
        assert_eq!(report.rows, 6);
        assert!(report.rejected.is_empty());
        assert_eq!(d.projects[0].events.len(), 3);
        assert_eq!(d.schema.covariates, vec!["size".to_string()]);
    }

    #[test]
    fn rejects_one_sided_project() {
        let text = format!("{TWO_PROJECTS}c,1,20,1,1\nc,2,20,1,1\n");
        let (d, report) = ingest(&text).unwrap();
        assert_eq!(d.projects.len(), 2);
        assert_eq!(report.rejected, vec!["c".to_string()]);
    }

    #[test]
    fn negative_count_cites_row() {
        let text = TWO_PROJECTS.replace("b,3,4,4,3", "b,3,4,-4,3");
        match ingest(&text) {
            Err(DataError::Parse { line, message }) => {
                assert_eq!(line, 8);
                assert!(message.contains("negative"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_missing_value() {
        let text = TWO_PROJECTS.replace(",size\n", ",sz\n");
        assert!(matches!(ingest(&text), Err(DataError::Schema(_))));
        let text = TWO_PROJECTS.replace("a,6,5,2,10", "a,6,5,,10");
        assert!(matches!(ingest(&text), Err(DataError::Parse { line: 5, .. })));
    }

    #[test]
    fn empty_dataset() {
        let text = "#dv: c\nproject_id,timestamp_days,intervention_days,c\n";
        assert!(matches!(ingest(text), Err(DataError::EmptyDataset)));
    }

    #[test]
    fn reserved_and_duplicate_names() {
        assert!(Schema::new(vec!["time".into()], vec![]).is_err());
        assert!(Schema::new(vec!["a".into()], vec!["a".into()]).is_err());
    }

    #[test]
    fn constant_process() {
        let cfg = SynthConfig {
            n_projects: 5,
            dependent: vec![DvEffect {
                name: "y".into(),
                baseline: 3.0,
                pre_slope: 0.0,
                jump: 0.0,
                slope_change: 0.0,
                covariate_effects: vec![],
            }],
            covariates: vec![],
            intercept_sd: 0.0,
            noise_sd: 0.0,
            ..SynthConfig::default()
        };
        let d = synthesize(&cfg).unwrap();
        assert!(d.projects.iter().flat_map(|p| &p.events).all(|e| e.dv[0] == 3.0));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = SynthConfig { n_projects: 10, ..SynthConfig::default() };
        assert_eq!(synthesize(&cfg).unwrap().to_text(), synthesize(&cfg).unwrap().to_text());
        let other = SynthConfig { seed: 2, ..cfg.clone() };
        assert_ne!(synthesize(&cfg).unwrap().to_text(), synthesize(&other).unwrap().to_text());
    }

    #[test]
    fn injected_jump_visible_in_raw_means() {
        let cfg = SynthConfig {
            n_projects: 200,
            dependent: vec![DvEffect {
                name: "y".into(),
                baseline: 10.0,
                pre_slope: 0.0,
                jump: 2.0,
                slope_change: 0.0,
                covariate_effects: vec![],
            }],
            covariates: vec![],
            intercept_sd: 0.0,
            noise_sd: 0.1,
            ..SynthConfig::default()
        };
        let d = synthesize(&cfg).unwrap();
        let (pre, post) = pre_post_means(&d, 0);
        assert!((post - pre - 2.0).abs() <= 0.1, "pre {pre} post {post}");
    }

    #[test]
    fn invalid_config() {
        let cfg = SynthConfig { events_per_day: 0.0, ..SynthConfig::default() };
        assert!(matches!(synthesize(&cfg), Err(DataError::InvalidConfig(_))));
        let cfg = SynthConfig { noise_sd: -1.0, ..SynthConfig::default() };
        assert!(matches!(synthesize(&cfg), Err(DataError::InvalidConfig(_))));
    }

    #[test]
    fn generated_projects_span_intervention() {
        let d = synthesize(&SynthConfig { n_projects: 20, ..SynthConfig::default() }).unwrap();
        assert_eq!(d.projects.len(), 20);
        assert!(d.projects.iter().all(ProjectRecord::spans_intervention));
        let permuted = permute_interventions(&d, 9);
        assert!(permuted.projects.iter().all(ProjectRecord::spans_intervention));
    }
}
