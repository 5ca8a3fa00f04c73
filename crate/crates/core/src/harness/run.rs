use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index;
use serde::Serialize;

use super::scenario::{
    resolve, AnalyticSpec, CalibrationBasis, ModelSpec, NetworkSpec, ScenarioConfig, ScenarioFile, SeedSpec,
    SeedStrategy, TemporalMode, VaccinationSpec,
};
use crate::analyze::{self, AggregateSeries, MetricsReport, ReportOptions};
use crate::calibrate::{self, Basis, FINAL_SIZE_TOL};
use crate::engine::{self, BatchResult, DiscreteSir, Horizon, InitialState, SimulationConfig, StateSampler};
use crate::epimodel::{self, ModelSchema, NodeStateVector};
use crate::error::{Error, Result};
use crate::netgen::{self, Network, TemporalNetworkSpec, DEFAULT_LAYER, SPECTRAL_TOL};
use crate::rng::Stream;

/// CLI-level overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Root output directory; artifacts go to `<out>/<scenario>/<sub>/`.
    /// `None` uses each sub-scenario's `outputs` field, and skips writing
    /// when that is absent too.
    pub out: Option<PathBuf>,
    /// Replaces every sub-scenario's `base_seed`.
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    /// Run only the named sub-scenario.
    pub only: Option<String>,
}

/// Rates and derived quantities actually used by a sub-scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResolvedParameters {
    pub n_nodes: usize,
    pub mean_degree: Option<f64>,
    pub lambda_max: Option<f64>,
    pub r0: Option<f64>,
    pub basis: Option<CalibrationBasis>,
    pub reference_quantity: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub infect_prob: Option<f64>,
    pub recover_prob: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub vaccinated_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SubScenarioOutcome {
    pub name: String,
    pub report: MetricsReport,
    pub parameters: ResolvedParameters,
    pub series: AggregateSeries,
    pub batch: BatchResult,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario: String,
    pub sub_scenarios: Vec<SubScenarioOutcome>,
}

impl ScenarioOutcome {
    pub fn get(&self, name: &str) -> Option<&SubScenarioOutcome> {
        self.sub_scenarios.iter().find(|s| s.name == name)
    }
}

/// Runs every (or the selected) sub-scenario in file order, writing
/// artifacts when an output directory is known.
pub fn run_scenario(file: &ScenarioFile, opts: &RunOptions) -> Result<ScenarioOutcome> {
    let ctx = |e: Error| Error::Scenario {
        scenario: file.name.clone(),
        source: Box::new(e),
    };
    file.validate().map_err(ctx)?;
    if let Some(only) = &opts.only {
        if !file.sub_scenarios.iter().any(|s| &s.name == only) {
            return Err(ctx(Error::invalid(format!("no sub-scenario named {only:?}"))));
        }
    }
    if opts.realizations == Some(0) {
        return Err(ctx(Error::invalid("realizations override must be >= 1")));
    }

    let mut outcomes = Vec::new();
    for sub in &file.sub_scenarios {
        if opts.only.as_ref().is_some_and(|o| o != &sub.name) {
            continue;
        }
        let mut cfg = sub.clone();
        if let Some(seed) = opts.seed {
            cfg.base_seed = seed;
        }
        if let Some(r) = opts.realizations {
            cfg.realizations = r;
        }
        let sub_ctx = |e: Error| Error::Scenario {
            scenario: format!("{}/{}", file.name, sub.name),
            source: Box::new(e),
        };
        let outcome = run_sub_scenario(&cfg, file.base_dir.as_deref()).map_err(sub_ctx)?;
        let root = opts
            .out
            .clone()
            .or_else(|| cfg.outputs.as_ref().map(|o| resolve(file.base_dir.as_deref(), o)));
        if let Some(root) = root {
            let dir = root.join(&file.name).join(&sub.name);
            write_artifacts(&dir, &outcome, cfg.record_events).map_err(sub_ctx)?;
        }
        outcomes.push(outcome);
    }
    Ok(ScenarioOutcome {
        scenario: file.name.clone(),
        sub_scenarios: outcomes,
    })
}

/// `trajectories.csv`, `aggregate.csv`, `metrics.json` and
/// `<peak compartment>.svg`, plus `events.csv` when events were recorded.
pub fn write_artifacts(dir: &Path, outcome: &SubScenarioOutcome, events: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    };
    write("trajectories.csv", analyze::write_trajectories_csv(&outcome.batch))?;
    write("aggregate.csv", analyze::write_aggregate_csv(&outcome.series))?;
    write("metrics.json", outcome.report.to_json() + "\n")?;
    let comp = &outcome.report.peak_compartment;
    write(&format!("{comp}.svg"), analyze::render_svg(&outcome.series, comp)?)?;
    if events {
        if let Some(text) = analyze::write_events_csv(&outcome.batch) {
            write("events.csv", text)?;
        }
    }
    Ok(())
}

/// generate -> calibrate -> seed -> vaccinate -> simulate -> analyze.
pub fn run_sub_scenario(cfg: &ScenarioConfig, base_dir: Option<&Path>) -> Result<SubScenarioOutcome> {
    let grid = cfg.grid()?;
    let mut params = ResolvedParameters::default();

    let (batch, model_compartments) = if cfg.is_temporal() {
        let spec = temporal_spec(&cfg.network)?;
        params.n_nodes = spec.n_nodes();
        let (beta, gamma) = match &cfg.calibration {
            Some(c) => {
                // constant activity: <a> = alpha, <a^2> = alpha^2
                let a = spec.activity_rate();
                let threshold = calibrate::activity_driven_threshold(c.gamma, spec.edges_per_activation(), a, a * a)?;
                params.r0 = Some(c.r0);
                params.basis = Some(c.basis);
                params.reference_quantity = Some(threshold);
                (c.r0 * threshold, c.gamma)
            }
            None => (require(cfg.model.beta, "beta")?, require(cfg.model.gamma, "gamma")?),
        };
        let discrete = DiscreteSir::from_rates(beta, gamma, spec.step_length())?;
        params.beta = Some(beta);
        params.gamma = Some(gamma);
        params.infect_prob = Some(discrete.infect_prob);
        params.recover_prob = Some(discrete.recover_prob);

        let model = epimodel::builtin_sir(beta, gamma, DEFAULT_LAYER)?;
        let seeding = cfg.seeding.clone();
        let n = spec.n_nodes();
        let vacc = cfg.interventions.as_ref().map(|i| i.vaccination.clone());
        let m2 = model.clone();
        let sampler: StateSampler = Arc::new(move |rng: &mut Stream| {
            let state = seed_state(n, None, &m2, &seeding, rng)?;
            apply_random_vaccination(state, &m2, vacc.as_ref(), rng)
        });
        let sim = SimulationConfig {
            initial: InitialState::Sampled(sampler),
            horizon: Horizon::Steps(cfg.horizon_steps.unwrap_or(0)),
            n_realizations: cfg.realizations,
            base_seed: cfg.base_seed,
            sample_grid: grid,
            record_events: cfg.record_events,
        };
        (engine::run_batch_temporal(&spec, discrete, &sim)?, model)
    } else {
        let net = Arc::new(build_network(&cfg.network, base_dir)?);
        params.n_nodes = net.n_nodes();
        let model = build_model(&cfg.model, cfg.calibration.as_ref(), &net, base_dir, &mut params)?;
        let layer = primary_layer(&cfg.model, &net);

        // targeted vaccination is deterministic; do it once up front
        let mut fixed_vaccinated: Vec<usize> = Vec::new();
        if let Some(VaccinationSpec::Targeted { policy, count, .. }) = cfg.interventions.as_ref().map(|i| &i.vaccination) {
            let count = match count {
                Some(c) => *c,
                None => {
                    let beta = params.beta.ok_or_else(|| Error::invalid("automatic targeted count needs beta"))?;
                    let gamma = params.gamma.ok_or_else(|| Error::invalid("automatic targeted count needs gamma"))?;
                    calibrate::targeted_vaccination_count(&net, &layer, beta, gamma, *policy)?
                }
            };
            params.vaccinated_count = Some(count);
            fixed_vaccinated = policy.ordering(&net, &layer)?.into_iter().take(count).collect();
            if fixed_vaccinated.len() < count {
                return Err(Error::invalid(format!(
                    "policy {policy:?} has only {} eligible nodes, {count} requested",
                    fixed_vaccinated.len()
                )));
            }
        }
        let immune = vaccine_compartment(&model, cfg.interventions.as_ref().map(|i| &i.vaccination))?;

        let seeding = cfg.seeding.clone();
        let vacc = cfg.interventions.as_ref().map(|i| i.vaccination.clone());
        let (m2, net2, layer2) = (model.clone(), Arc::clone(&net), layer.clone());
        let sampler: StateSampler = Arc::new(move |rng: &mut Stream| {
            // targeted nodes are removed before seeding so seeds land on the
            // unvaccinated population
            let mut state = susceptible(&m2, net2.n_nodes())?;
            if let Some(imm) = immune {
                for &v in &fixed_vaccinated {
                    state.set(v, imm);
                }
            }
            let state = seed_onto(state, Some((&net2, layer2.as_str())), &m2, &seeding, rng)?;
            apply_random_vaccination(state, &m2, vacc.as_ref(), rng)
        });
        let t_max = cfg.t_max.unwrap_or(0.0);
        let sim = SimulationConfig {
            initial: InitialState::Sampled(sampler),
            horizon: Horizon::Time(t_max),
            n_realizations: cfg.realizations,
            base_seed: cfg.base_seed,
            sample_grid: grid,
            record_events: cfg.record_events,
        };
        (engine::run_batch(&net, &model, &sim)?, model)
    };

    let series = analyze::aggregate_batch(&batch)?;
    let peak_compartment = match &cfg.peak_compartment {
        Some(c) => c.clone(),
        None => default_peak_compartment(&model_compartments),
    };
    let analytic_final_size = match &cfg.analytic_reference {
        None => None,
        Some(AnalyticSpec::Fraction(f)) => Some(*f),
        Some(AnalyticSpec::Named(_)) => {
            let r0 = cfg.calibration.as_ref().map(|c| c.r0).unwrap_or_default();
            Some(calibrate::final_size_fraction(r0, FINAL_SIZE_TOL))
        }
    };
    let is_bivirus = cfg.model.name.as_deref() == Some("bivirus");
    let opts = ReportOptions {
        peak_compartment,
        outbreak_threshold: cfg.outbreak_threshold,
        analytic_final_size,
        regime_epsilon: if is_bivirus {
            Some(cfg.regime_epsilon.unwrap_or(analyze::DEFAULT_REGIME_EPSILON))
        } else {
            None
        },
    };
    let report = MetricsReport::from_batch(&batch, &series, &opts)?;
    Ok(SubScenarioOutcome {
        name: cfg.name.clone(),
        report,
        parameters: params,
        series,
        batch,
    })
}

fn require(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::invalid(format!("model.{name} is required")))
}

fn default_peak_compartment(compartments: &ModelSchema) -> String {
    let names = &compartments.compartments;
    ["I", "I1"]
        .iter()
        .find(|c| names.iter().any(|n| n == *c))
        .map(|c| c.to_string())
        .unwrap_or_else(|| names.get(1).cloned().unwrap_or_else(|| names[0].clone()))
}

fn temporal_spec(spec: &NetworkSpec) -> Result<TemporalNetworkSpec> {
    match spec {
        NetworkSpec::ActivityDriven {
            n,
            activity_rate,
            edges_per_activation,
            step_length,
            horizon_steps,
            ..
        } => TemporalNetworkSpec::new(*n, *activity_rate, *edges_per_activation, *step_length, *horizon_steps),
        _ => Err(Error::invalid("not an activity-driven network")),
    }
}

/// Materializes a static (possibly multiplex) network.
pub fn build_network(spec: &NetworkSpec, base_dir: Option<&Path>) -> Result<Network> {
    Ok(match spec {
        NetworkSpec::Complete { n } => netgen::generate_complete(*n)?,
        NetworkSpec::Er { n, mean_degree, seed } => netgen::generate_er(*n, *mean_degree, *seed)?,
        NetworkSpec::Ba { n, m, seed } => netgen::generate_ba(*n, *m, *seed)?,
        NetworkSpec::Configuration { degrees, seed } => {
            let seq: Vec<usize> = degrees
                .iter()
                .flat_map(|&(d, c)| std::iter::repeat_n(d, c))
                .collect();
            netgen::generate_configuration(&seq, *seed)?
        }
        NetworkSpec::Multiplex { n, layers } => {
            let mut built = Vec::with_capacity(layers.len());
            for l in layers {
                let net = build_network(&l.network, base_dir)?;
                if net.n_nodes() != *n {
                    return Err(Error::invalid(format!(
                        "layer {} has {} nodes, multiplex expects {n}",
                        l.name,
                        net.n_nodes()
                    )));
                }
                let renamed = net.with_layer_name(&l.name)?;
                built.push(renamed.layers()[0].clone());
            }
            Network::new(*n, built)?
        }
        NetworkSpec::ActivityDriven { seed, mode, .. } => {
            if *mode == TemporalMode::Temporal {
                return Err(Error::invalid("temporal networks have no static form"));
            }
            netgen::aggregate_temporal(&temporal_spec(spec)?, *seed)?
        }
        NetworkSpec::File { path } => netgen::load_network(resolve(base_dir, path))?,
    })
}

fn primary_layer(model: &ModelSpec, net: &Network) -> String {
    model
        .layer
        .clone()
        .unwrap_or_else(|| net.layers()[0].name().to_string())
}

fn build_model(
    spec: &ModelSpec,
    cal: Option<&super::scenario::CalibrationSpec>,
    net: &Network,
    base_dir: Option<&Path>,
    params: &mut ResolvedParameters,
) -> Result<ModelSchema> {
    if let Some(path) = &spec.schema_file {
        let path = resolve(base_dir, path);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let schema = ModelSchema::from_json(&text)?;
        epimodel::validate_schema(&schema, net)?;
        return Ok(schema);
    }
    let layer = primary_layer(spec, net);
    let name = spec.name.as_deref().unwrap_or_default();
    if name != "bivirus" {
        net.layer(&layer)?;
        params.mean_degree = Some(net.mean_degree(&layer)?);
        params.lambda_max = Some(netgen::spectral_radius(net, &layer, SPECTRAL_TOL)?);
    }
    let (beta, gamma) = match cal {
        Some(c) => {
            let basis = match c.basis {
                CalibrationBasis::MeanDegree => Basis::MeanDegree,
                CalibrationBasis::Spectral => Basis::Spectral,
                CalibrationBasis::ActivityDriven => {
                    return Err(Error::invalid("activity-driven calibration needs a temporal network"))
                }
            };
            let report = calibrate::per_contact_rate(c.r0, c.gamma, net, &layer, basis)?;
            params.r0 = Some(c.r0);
            params.basis = Some(c.basis);
            params.reference_quantity = Some(report.reference_quantity);
            (Some(report.per_contact_rate), Some(c.gamma))
        }
        None => (spec.beta, if name == "sis" { spec.delta } else { spec.gamma }),
    };
    params.beta = beta;
    params.gamma = gamma;
    let need = |v: Option<f64>, what: &str| v.ok_or_else(|| Error::invalid(format!("model.{what} is required")));
    let model = match name {
        "sir" => epimodel::builtin_sir(need(beta, "beta")?, need(gamma, "gamma")?, &layer)?,
        "sirv" => epimodel::builtin_sirv(need(beta, "beta")?, need(gamma, "gamma")?, &layer)?,
        "seir" => epimodel::builtin_seir(need(beta, "beta")?, need(spec.sigma, "sigma")?, need(gamma, "gamma")?, &layer)?,
        "sis" => epimodel::builtin_sis(need(beta, "beta")?, need(gamma, "delta")?, &layer)?,
        "bivirus" => {
            let l1 = spec.layer1.clone().ok_or_else(|| Error::invalid("model.layer1 is required"))?;
            let l2 = spec.layer2.clone().ok_or_else(|| Error::invalid("model.layer2 is required"))?;
            let d1 = need(spec.delta1, "delta1")?;
            let d2 = need(spec.delta2, "delta2")?;
            let rate = |beta: Option<f64>, tau: Option<f64>, delta: f64, layer: &str| -> Result<f64> {
                match (beta, tau) {
                    (Some(b), _) => Ok(b),
                    (None, Some(t)) => Ok(t * delta / netgen::spectral_radius(net, layer, SPECTRAL_TOL)?),
                    (None, None) => Err(Error::invalid("set beta or tau for each virus")),
                }
            };
            let b1 = rate(spec.beta1, spec.tau1, d1, &l1)?;
            let b2 = rate(spec.beta2, spec.tau2, d2, &l2)?;
            params.beta1 = Some(b1);
            params.beta2 = Some(b2);
            epimodel::builtin_bivirus(b1, d1, &l1, b2, d2, &l2)?
        }
        other => return Err(Error::invalid(format!("unknown model {other:?}"))),
    };
    epimodel::validate_schema(&model, net)?;
    Ok(model)
}

fn susceptible(model: &ModelSchema, n: usize) -> Result<NodeStateVector> {
    NodeStateVector::uniform(n, model.compartments.len(), 0)
}

fn seed_compartment(model: &ModelSchema, spec: &SeedSpec) -> Result<usize> {
    match &spec.compartment {
        Some(c) => model.require_compartment(c),
        None => model.require_compartment("I"),
    }
}

fn seed_state(
    n: usize,
    net: Option<(&Network, &str)>,
    model: &ModelSchema,
    seeding: &[SeedSpec],
    rng: &mut Stream,
) -> Result<NodeStateVector> {
    seed_onto(susceptible(model, n)?, net, model, seeding, rng)
}

/// Applies each seeding entry in turn, only ever converting nodes that are
/// still susceptible.
fn seed_onto(
    mut state: NodeStateVector,
    net: Option<(&Network, &str)>,
    model: &ModelSchema,
    seeding: &[SeedSpec],
    rng: &mut Stream,
) -> Result<NodeStateVector> {
    for spec in seeding {
        let c = seed_compartment(model, spec)?;
        let pool: Vec<usize> = match spec.strategy {
            SeedStrategy::Random => {
                let free: Vec<usize> = state.nodes_in(0).collect();
                if spec.count > free.len() {
                    return Err(Error::invalid(format!(
                        "cannot seed {} of {} susceptible nodes",
                        spec.count,
                        free.len()
                    )));
                }
                index::sample(rng, free.len(), spec.count)
                    .into_iter()
                    .map(|i| free[i])
                    .collect()
            }
            SeedStrategy::Hubs => {
                let (net, layer) = net.ok_or_else(|| Error::invalid("hub seeding needs a static network"))?;
                let picked: Vec<usize> = net
                    .nodes_by_degree(layer)?
                    .into_iter()
                    .filter(|&v| state.get(v) == 0)
                    .take(spec.count)
                    .collect();
                if picked.len() < spec.count {
                    return Err(Error::invalid(format!("cannot seed {} hubs", spec.count)));
                }
                picked
            }
            SeedStrategy::Explicit => {
                for &v in &spec.nodes {
                    if v >= state.n_nodes() {
                        return Err(Error::invalid(format!("seed node {v} out of range 0..{}", state.n_nodes())));
                    }
                }
                spec.nodes.clone()
            }
        };
        for v in pool {
            state.set(v, c);
        }
    }
    Ok(state)
}

fn vaccine_compartment(model: &ModelSchema, vacc: Option<&VaccinationSpec>) -> Result<Option<usize>> {
    let Some(v) = vacc else { return Ok(None) };
    let named = match v {
        VaccinationSpec::Random { compartment, .. } | VaccinationSpec::Targeted { compartment, .. } => compartment,
    };
    let name = match named {
        Some(c) => c.as_str(),
        None if model.compartment_index("V").is_some() => "V",
        None => "R",
    };
    model.require_compartment(name).map(Some)
}

fn apply_random_vaccination(
    state: NodeStateVector,
    model: &ModelSchema,
    vacc: Option<&VaccinationSpec>,
    rng: &mut Stream,
) -> Result<NodeStateVector> {
    match vacc {
        Some(VaccinationSpec::Random { fraction, .. }) => {
            let imm = vaccine_compartment(model, vacc)?.expect("vaccination present");
            let name = model.compartments[imm].clone();
            engine::vaccinate_random(&state, model, *fraction, &name, rng)
        }
        _ => Ok(state),
    }
}
