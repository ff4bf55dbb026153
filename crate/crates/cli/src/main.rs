use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use forkgarden::analysis::{analyze, to_pretty_json as to_json, AnalysisBundle, Filter};
use forkgarden::data::{synthesize, EventDataset, SynthConfig};
use forkgarden::outcomes::Baseline;
use forkgarden::pipeline::{build_panel, ModelParams, PanelParams};
use forkgarden::rdit::{check_alpha, design_matrix, DEFAULT_ALPHA};
use forkgarden::report;
use forkgarden::runner::{run_multiverse, RunOptions, STORE_FILE};
use forkgarden::spec::{default_spec, MultiverseSpec};
use forkgarden::stats::{lmm, vif_prune, VIF_PROTECTED};
use forkgarden::store::ResultsStore;

/// Multiverse analysis for regression-discontinuity-in-time studies.
#[derive(Parser)]
#[command(name = "forkgarden", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a decision spec and write the universe manifest.
    Expand {
        #[command(flatten)]
        spec: SpecArgs,
        /// Manifest output (CSV: universe id, then one column per decision).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic event dataset.
    Synth {
        /// Generator settings (TOML); built-in defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        projects: Option<usize>,
        /// Zero every injected effect.
        #[arg(long)]
        null: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every universe and write the results store.
    Run {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        /// Baseline outcomes (TOML); its dependent variables are the ones fitted.
        #[arg(long)]
        baseline: PathBuf,
        /// Output directory for the store, journal and timings.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Stop after this many universes; rerun to resume.
        #[arg(long)]
        max_universes: Option<usize>,
    },
    /// Compute the specification curve, change stability and time curve.
    Analyze {
        /// Results store (`results.ndjson`) or the run directory holding it.
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict a decision to some values: `decision=v1,v2`. Repeatable.
        #[arg(long = "pin")]
        pins: Vec<String>,
        /// Leave universes whose study bucket is model-fit-failure out.
        #[arg(long)]
        exclude_fit_failures: bool,
    },
    /// Render SVG figures and the bucket summary table from `analyze` output.
    Report {
        /// Directory written by `analyze`.
        #[arg(long)]
        analysis: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one universe's panel for a dependent variable, or its fit.
    Panel {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        universe: u64,
        #[arg(long)]
        dv: String,
        /// Print the model fit as JSON instead of the panel.
        #[arg(long)]
        fit: bool,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// Decision spec (TOML); the built-in default spec otherwise.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Extra constraints file (TOML with a `[constraints]` table).
    #[arg(long)]
    constraints: Option<PathBuf>,
}

impl SpecArgs {
    fn load(&self) -> Result<MultiverseSpec> {
        let spec = match &self.spec {
            Some(p) => MultiverseSpec::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => default_spec(),
        };
        match &self.constraints {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(spec.add_constraints_text(&text)?)
            }
            None => Ok(spec),
        }
    }
}

fn load_dataset(path: &Path) -> Result<EventDataset> {
    let (dataset, report) = EventDataset::load(path).with_context(|| format!("loading {}", path.display()))?;
    for r in &report.rejected {
        eprintln!("warning: {r}");
    }
    Ok(dataset)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn cmd_expand(spec: &SpecArgs, out: Option<&Path>) -> Result<()> {
    let spec = spec.load()?;
    let universes = spec.expand()?;
    println!("{}", universes.len());
    if let Some(out) = out {
        let mut text = String::from("universe");
        for d in spec.decisions() {
            text.push(',');
            text.push_str(&d.id);
        }
        text.push('\n');
        for u in &universes {
            text.push_str(&u.id.to_string());
            for (_, v) in &u.assignment {
                text.push_str(&format!(",\"{v}\""));
            }
            text.push('\n');
        }
        write(out, &text)?;
    }
    Ok(())
}

fn cmd_synth(config: Option<&Path>, seed: Option<u64>, projects: Option<usize>, null: bool, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SynthConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = projects {
        cfg.n_projects = n;
    }
    if null {
        for d in &mut cfg.dependent {
            d.pre_slope = 0.0;
            d.jump = 0.0;
            d.slope_change = 0.0;
        }
    }
    let dataset = synthesize(&cfg)?;
    dataset.save(out)?;
    println!("{} projects, {} events", dataset.projects.len(), dataset.event_count());
    Ok(())
}

struct RunArgs<'a> {
    data: &'a Path,
    spec: &'a SpecArgs,
    baseline: &'a Path,
    out: &'a Path,
    alpha: f64,
    workers: usize,
    max_universes: Option<usize>,
}

fn cmd_run(args: RunArgs) -> Result<()> {
    check_alpha(args.alpha)?;
    let dataset = load_dataset(args.data)?;
    let spec = args.spec.load()?;
    let baseline = Baseline::load(args.baseline).with_context(|| format!("loading {}", args.baseline.display()))?;
    let options = RunOptions {
        alpha: args.alpha,
        workers: args.workers,
        output: Some(args.out.to_path_buf()),
        max_universes: args.max_universes,
    };
    let outcome = run_multiverse(&dataset, &spec, &baseline, &options)?;
    let t = &outcome.telemetry;
    println!(
        "universes {} (resumed {}), projections {}, panel cache hits {}, fit attempts {}",
        t.universes, t.resumed, t.projections, t.cache_hits, t.fit_attempts
    );
    match outcome.store {
        Some(store) => {
            println!("wrote {} records to {}", store.records.len(), args.out.join(STORE_FILE).display());
            Ok(())
        }
        None => bail!("run stopped before completion; rerun the same command to resume"),
    }
}

fn store_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(STORE_FILE)
    } else {
        path.to_path_buf()
    }
}

fn cmd_analyze(store: &Path, out: &Path, pins: &[String], exclude_fit_failures: bool) -> Result<()> {
    let path = store_path(store);
    let store = ResultsStore::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let mut filter = Filter { include_fit_failures: !exclude_fit_failures, ..Filter::default() };
    for p in pins {
        filter.pin(p)?;
    }
    let bundle = analyze(&store, &filter)?;
    create_dir(out)?;
    write(&out.join("analysis.json"), &bundle.to_json())?;
    write(&out.join("spec_curve.json"), &to_json(&bundle.spec_curve))?;
    write(&out.join("change_stability.json"), &to_json(&bundle.change_stability))?;
    write(&out.join("time_curve.json"), &to_json(&bundle.time_curve))?;
    write(&out.join("spec_curve.csv"), &bundle.spec_curve.to_csv())?;
    write(&out.join("change_stability.csv"), &bundle.change_stability.to_csv())?;
    write(&out.join("time_curve.csv"), &bundle.time_curve.to_csv())?;
    println!("{} universes analysed", bundle.overview.universes);
    Ok(())
}

fn cmd_report(analysis: &Path, out: &Path) -> Result<()> {
    let path = if analysis.is_dir() { analysis.join("analysis.json") } else { analysis.to_path_buf() };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let bundle = AnalysisBundle::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    create_dir(out)?;
    for (name, svg) in report::render(&bundle) {
        write(&out.join(name), &svg)?;
    }
    write(&out.join("bucket_summary.csv"), &bundle.overview.to_csv())?;
    print!("{}", bundle.overview.to_csv());
    Ok(())
}

fn cmd_panel(data: &Path, spec: &SpecArgs, universe: u64, dv: &str, fit: bool) -> Result<()> {
    let dataset = load_dataset(data)?;
    let spec = spec.load()?;
    let u = spec.universe(universe)?;
    let params = PanelParams::from_universe(&spec, &u)?;
    let panel = build_panel(&dataset, dv, &params)?;
    if !fit {
        print!("{}", panel.to_csv());
        return Ok(());
    }
    let model = ModelParams::from_universe(&spec, &u)?;
    let (design, y) = design_matrix(&panel)?;
    let (design, dropped) = vif_prune(&design, model.vif_threshold, &VIF_PROTECTED);
    let mut result = lmm(&design, &y, model.reml)?;
    result.dropped = dropped;
    println!("{}", result.to_json());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Expand { spec, out } => cmd_expand(&spec, out.as_deref()),
        Command::Synth { config, seed, projects, null, out } => {
            cmd_synth(config.as_deref(), seed, projects, null, &out)
        }
        Command::Run { data, spec, baseline, out, alpha, workers, max_universes } => cmd_run(RunArgs {
            data: &data,
            spec: &spec,
            baseline: &baseline,
            out: &out,
            alpha,
            workers,
            max_universes,
        }),
        Command::Analyze { store, out, pins, exclude_fit_failures } => {
            cmd_analyze(&store, &out, &pins, exclude_fit_failures)
        }
        Command::Report { analysis, out } => cmd_report(&analysis, &out),
        Command::Panel { data, spec, universe, dv, fit } => cmd_panel(&data, &spec, universe, &dv, fit),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
