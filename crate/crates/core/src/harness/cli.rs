//! `epinet` command line.
//!
//! Exit codes: 0 success, 1 invalid input (usage, parse or validation
//! errors), 2 runtime failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::run::{run_scenario, run_sub_scenario, write_artifacts, RunOptions};
use super::scenario::{
    load_scenario, AnalyticSpec, CalibrationBasis, CalibrationSpec, GridSpec, ModelSpec, NetworkSpec,
    ScenarioConfig, ScenarioFile, SeedSpec, SeedStrategy,
};
use super::{bundled_scenario, bundled_scenarios};
use crate::analyze::{self, MetricsReport, ReportOptions, DEFAULT_OUTBREAK_THRESHOLD};
use crate::calibrate::{self, Basis, CalibrationReport, FINAL_SIZE_TOL};
use crate::error::{Error, Result};
use crate::netgen::{self, Network, DEFAULT_LAYER, SPECTRAL_TOL};

#[derive(Debug, Parser)]
#[command(name = "epinet", version, about = "Stochastic epidemics on contact networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a contact network and write it as an edge list.
    GenerateNetwork(GenerateArgs),
    /// Per-contact transmission rate for a target R0.
    Calibrate(CalibrateArgs),
    /// Simulate a batch on a network file.
    Run(RunArgs),
    /// Metrics, aggregate series and plot from a trajectory CSV.
    Analyze(AnalyzeArgs),
    /// Run or list scenario files.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Complete,
    Er,
    Ba,
    Configuration,
    ActivityAggregate,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    mean_degree: Option<f64>,
    /// Edges per new node (ba) or per activation (activity-aggregate).
    #[arg(long)]
    m: Option<usize>,
    /// Degree blocks such as `10x700,2x300`.
    #[arg(long)]
    degrees: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    step_length: f64,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_LAYER)]
    layer: String,
    /// Output file; the edge list goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, group = "reference")]
    mean_degree: Option<f64>,
    #[arg(long, group = "reference")]
    spectral_radius: Option<f64>,
    #[arg(long, group = "reference")]
    network: Option<PathBuf>,
    #[arg(long)]
    layer: Option<String>,
    #[arg(long, default_value = "mean-degree")]
    basis: Basis,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliModel {
    Sir,
    Seir,
    Sis,
    Sirv,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, value_enum, conflicts_with = "schema")]
    model: Option<CliModel>,
    /// Model schema JSON file.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    layer: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Calibrate beta to this R0 (needs --gamma).
    #[arg(long, conflicts_with = "beta")]
    r0: Option<f64>,
    #[arg(long, default_value = "mean-degree")]
    basis: Basis,
    /// Number of randomly placed seeds.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Seed the highest-degree nodes instead of random ones.
    #[arg(long)]
    hubs: bool,
    #[arg(long, default_value = "I")]
    seed_compartment: String,
    #[arg(long)]
    t_max: f64,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_OUTBREAK_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    record_events: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    trajectories: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "I")]
    peak_compartment: String,
    #[arg(long, default_value_t = DEFAULT_OUTBREAK_THRESHOLD)]
    threshold: f64,
    /// Analytic final-size fraction to compare against.
    #[arg(long, conflicts_with = "r0")]
    analytic: Option<f64>,
    /// Compare against the final-size equation at this R0.
    #[arg(long)]
    r0: Option<f64>,
    /// Nodes that started pre-immunized (excluded from final sizes).
    #[arg(long, default_value_t = 0)]
    initially_immune: usize,
}

#[derive(Debug, Subcommand)]
enum ScenarioCommand {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        file: String,
        /// Run only this sub-scenario.
        #[arg(long)]
        sub: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Output root (default: the file's `outputs`, else `./out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled scenarios.
    List,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(parsed.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenerateNetwork(a) => generate(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Scenario(ScenarioCommand::List) => {
            let mut out = std::io::stdout().lock();
            for b in bundled_scenarios() {
                let desc = ScenarioFile::from_json(b.json).map(|f| f.description).unwrap_or_default();
                let _ = writeln!(out, "{}\t{}", b.name, desc);
            }
            Ok(())
        }
        Command::Scenario(ScenarioCommand::Run {
            file,
            sub,
            seed,
            realizations,
            out,
        }) => scenario_run(&file, sub, seed, realizations, out),
    }
}

fn missing(flag: &str, kind: &str) -> Error {
    Error::invalid(format!("--{flag} is required for {kind}"))
}

fn parse_degrees(text: &str) -> Result<Vec<usize>> {
    let mut seq = Vec::new();
    for block in text.split(',').map(str::trim).filter(|b| !b.is_empty()) {
        let bad = || Error::invalid(format!("degree block {block:?} is not DEGxCOUNT or DEG"));
        match block.split_once('x') {
            Some((d, c)) => {
                let d: usize = d.parse().map_err(|_| bad())?;
                let c: usize = c.parse().map_err(|_| bad())?;
                seq.extend(std::iter::repeat_n(d, c));
            }
            None => seq.push(block.parse().map_err(|_| bad())?),
        }
    }
    Ok(seq)
}

#[derive(Serialize)]
struct NetworkSummary<'a> {
    path: Option<&'a Path>,
    nodes: usize,
    layer: &'a str,
    edges: usize,
    mean_degree: f64,
    max_degree: usize,
    lambda_max: f64,
}

fn generate(a: GenerateArgs) -> Result<()> {
    let need_n = || a.n.ok_or_else(|| missing("n", "this kind"));
    let net = match a.kind {
        Kind::Complete => netgen::generate_complete(need_n()?)?,
        Kind::Er => netgen::generate_er(need_n()?, a.mean_degree.ok_or_else(|| missing("mean-degree", "er"))?, a.seed)?,
        Kind::Ba => netgen::generate_ba(need_n()?, a.m.ok_or_else(|| missing("m", "ba"))?, a.seed)?,
        Kind::Configuration => {
            let seq = parse_degrees(a.degrees.as_deref().ok_or_else(|| missing("degrees", "configuration"))?)?;
            netgen::generate_configuration(&seq, a.seed)?
        }
        Kind::ActivityAggregate => {
            let spec = netgen::TemporalNetworkSpec::new(
                need_n()?,
                a.alpha.ok_or_else(|| missing("alpha", "activity-aggregate"))?,
                a.m.ok_or_else(|| missing("m", "activity-aggregate"))?,
                a.step_length,
                a.steps.ok_or_else(|| missing("steps", "activity-aggregate"))?,
            )?;
            netgen::aggregate_temporal(&spec, a.seed)?
        }
    };
    let net = if a.layer == DEFAULT_LAYER { net } else { net.with_layer_name(&a.layer)? };
    match &a.out {
        Some(path) => {
            netgen::save_network(&net, path)?;
            let hist = net.degree_histogram(&a.layer)?;
            let summary = NetworkSummary {
                path: Some(path),
                nodes: net.n_nodes(),
                layer: &a.layer,
                edges: net.layer(&a.layer)?.n_edges(),
                mean_degree: hist.mean(),
                max_degree: hist.max_degree(),
                lambda_max: netgen::spectral_radius(&net, &a.layer, SPECTRAL_TOL)?,
            };
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        None => {
            let stdout = std::io::stdout();
            netgen::write_edge_list(&net, stdout.lock()).map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let report = match (a.mean_degree, a.spectral_radius, &a.network) {
        (Some(k), None, None) => CalibrationReport::from_reference(a.r0, a.gamma, Basis::MeanDegree, k)?,
        (None, Some(l), None) => CalibrationReport::from_reference(a.r0, a.gamma, Basis::Spectral, l)?,
        (None, None, Some(path)) => {
            let net = netgen::load_network(path)?;
            let layer = layer_or_first(&net, a.layer.as_deref());
            calibrate::per_contact_rate(a.r0, a.gamma, &net, &layer, a.basis)?
        }
        _ => {
            return Err(Error::invalid(
                "give exactly one of --mean-degree, --spectral-radius or --network",
            ))
        }
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn layer_or_first(net: &Network, layer: Option<&str>) -> String {
    layer
        .map(str::to_string)
        .unwrap_or_else(|| net.layers()[0].name().to_string())
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let calibration = match a.r0 {
        Some(r0) => Some(CalibrationSpec {
            r0,
            gamma: a.gamma.ok_or_else(|| missing("gamma", "--r0 calibration"))?,
            basis: match a.basis {
                Basis::MeanDegree => CalibrationBasis::MeanDegree,
                Basis::Spectral => CalibrationBasis::Spectral,
            },
        }),
        None => None,
    };
    let (name, schema_file) = match (a.model, &a.schema) {
        (Some(m), None) => (Some(format!("{m:?}").to_lowercase()), None),
        (None, Some(p)) => (None, Some(p.to_string_lossy().into_owned())),
        _ => return Err(Error::invalid("give exactly one of --model or --schema")),
    };
    let calibrated = calibration.is_some();
    let model = ModelSpec {
        name,
        schema_file,
        layer: a.layer.clone(),
        beta: a.beta,
        gamma: if calibrated { None } else { a.gamma },
        sigma: a.sigma,
        delta: if calibrated { None } else { a.delta },
        ..ModelSpec::default()
    };
    let seeding = SeedSpec {
        strategy: if a.hubs { SeedStrategy::Hubs } else { SeedStrategy::Random },
        count: a.seeds,
        nodes: Vec::new(),
        compartment: Some(a.seed_compartment.clone()),
    };
    let cfg = ScenarioConfig {
        name: "run".into(),
        network: NetworkSpec::File {
            path: a.network.to_string_lossy().into_owned(),
        },
        model,
        calibration,
        seeding: vec![seeding],
        interventions: None,
        realizations: a.realizations,
        base_seed: a.seed,
        t_max: Some(a.t_max),
        horizon_steps: None,
        sample_grid: GridSpec {
            step: Some(a.grid_step.unwrap_or(a.t_max / 100.0)),
            points: None,
            end: None,
        },
        analytic_reference: a.r0.map(|_| AnalyticSpec::Named("final-size".into())),
        outbreak_threshold: a.threshold,
        regime_epsilon: None,
        peak_compartment: None,
        record_events: a.record_events,
        outputs: None,
    };
    let file = ScenarioFile {
        schema_version: super::SCHEMA_VERSION,
        name: "run".into(),
        description: String::new(),
        paper_silent: Vec::new(),
        sub_scenarios: vec![cfg],
        base_dir: None,
    };
    file.validate()?;
    let outcome = run_sub_scenario(&file.sub_scenarios[0], None)?;
    write_artifacts(&a.out, &outcome, a.record_events)?;
    println!("{}", outcome.report.to_json());
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let path = &a.trajectories;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let batch = analyze::read_trajectories_csv(&text, a.initially_immune)?;
    let series = analyze::aggregate_batch(&batch)?;
    let analytic = a.analytic.or(a.r0.map(|r0| calibrate::final_size_fraction(r0, FINAL_SIZE_TOL)));
    let opts = ReportOptions {
        peak_compartment: a.peak_compartment.clone(),
        outbreak_threshold: a.threshold,
        analytic_final_size: analytic,
        regime_epsilon: None,
    };
    let report = MetricsReport::from_batch(&batch, &series, &opts)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let write = |name: &str, body: String| {
        let p = a.out.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(p, e))
    };
    write("aggregate.csv", analyze::write_aggregate_csv(&series))?;
    write("metrics.json", report.to_json() + "\n")?;
    write(&format!("{}.svg", a.peak_compartment), analyze::render_svg(&series, &a.peak_compartment)?)?;
    println!("{}", report.to_json());
    Ok(())
}

#[derive(Serialize)]
struct SubSummary<'a> {
    name: &'a str,
    parameters: &'a super::ResolvedParameters,
    metrics: &'a MetricsReport,
}

fn scenario_run(
    file: &str,
    only: Option<String>,
    seed: Option<u64>,
    realizations: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let scenario = if Path::new(file).exists() {
        load_scenario(file)?
    } else {
        bundled_scenario(file).map_err(|e| match e {
            Error::InvalidArgument(_) => Error::invalid(format!("{file:?} is neither a file nor a bundled scenario")),
            other => other,
        })?
    };
    let has_outputs = scenario.sub_scenarios.iter().all(|s| s.outputs.is_some());
    let root = out.or(if has_outputs { None } else { Some(PathBuf::from("out")) });
    let opts = RunOptions {
        out: root.clone(),
        seed,
        realizations,
        only,
    };
    let outcome = run_scenario(&scenario, &opts)?;
    let summaries: Vec<SubSummary> = outcome
        .sub_scenarios
        .iter()
        .map(|s| SubSummary {
            name: &s.name,
            parameters: &s.parameters,
            metrics: &s.report,
        })
        .collect();
    let json = serde_json::to_string_pretty(&summaries)?;
    if let Some(root) = root {
        let path = root.join(&scenario.name).join("summary.json");
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(path, e))?;
    }
    let mut stdout = std::io::stdout().lock();
    for s in &outcome.sub_scenarios {
        let r = &s.report;
        let _ = writeln!(
            stdout,
            "{}/{}: final_size_mean={:.1} sd={:.1} outbreak_p={:.3} peak {}={:.1} at t={:.2}{}",
            outcome.scenario,
            s.name,
            r.final_size_mean,
            r.final_size_std,
            r.outbreak_probability,
            r.peak_compartment,
            r.peak_size,
            r.peak_time,
            r.regime.map(|g| format!(" regime={}", serde_json::to_string(&g).unwrap_or_default().trim_matches('"'))).unwrap_or_default()
        );
    }
    Ok(())
}
