//! Scenario file schema (JSON, `schema_version` 1).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::TargetPolicy;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const BUILTIN_MODELS: [&str; 5] = ["sir", "seir", "sis", "sirv", "bivirus"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Parameters chosen here because the source question leaves them open.
    #[serde(default)]
    pub paper_silent: Vec<String>,
    pub sub_scenarios: Vec<ScenarioConfig>,
    /// Directory relative paths inside the file resolve against; set by
    /// the loader, never serialized.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub network: NetworkSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub calibration: Option<CalibrationSpec>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub seeding: Vec<SeedSpec>,
    #[serde(default)]
    pub interventions: Option<InterventionSpec>,
    pub realizations: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub horizon_steps: Option<usize>,
    pub sample_grid: GridSpec,
    #[serde(default)]
    pub analytic_reference: Option<AnalyticSpec>,
    #[serde(default = "default_threshold")]
    pub outbreak_threshold: f64,
    #[serde(default)]
    pub regime_epsilon: Option<f64>,
    #[serde(default)]
    pub peak_compartment: Option<String>,
    #[serde(default)]
    pub record_events: bool,
    #[serde(default)]
    pub outputs: Option<String>,
}

fn default_threshold() -> f64 {
    crate::analyze::DEFAULT_OUTBREAK_THRESHOLD
}

fn one_or_many<'de, D>(d: D) -> std::result::Result<Vec<SeedSpec>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(SeedSpec),
        Many(Vec<SeedSpec>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkSpec {
    Complete {
        n: usize,
    },
    Er {
        n: usize,
        mean_degree: f64,
        seed: u64,
    },
    Ba {
        n: usize,
        m: usize,
        seed: u64,
    },
    /// Degree sequence given as `[degree, count]` blocks.
    Configuration {
        degrees: Vec<(usize, usize)>,
        seed: u64,
    },
    Multiplex {
        n: usize,
        layers: Vec<LayerSpec>,
    },
    ActivityDriven {
        n: usize,
        activity_rate: f64,
        edges_per_activation: usize,
        #[serde(default = "one")]
        step_length: f64,
        horizon_steps: usize,
        seed: u64,
        mode: TemporalMode,
    },
    File {
        path: String,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub network: NetworkSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalMode {
    /// Discrete-time simulation on the temporal network itself.
    Temporal,
    /// Continuous-time simulation on the time-aggregated weighted network.
    Aggregate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub schema_file: Option<String>,
    #[serde(default)]
    pub layer: Option<String>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub layer1: Option<String>,
    #[serde(default)]
    pub layer2: Option<String>,
    #[serde(default)]
    pub beta1: Option<f64>,
    #[serde(default)]
    pub beta2: Option<f64>,
    #[serde(default)]
    pub delta1: Option<f64>,
    #[serde(default)]
    pub delta2: Option<f64>,
    /// Bi-virus effective spreading ratio `beta1 * lambda_max(layer1) / delta1`.
    #[serde(default)]
    pub tau1: Option<f64>,
    #[serde(default)]
    pub tau2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationBasis {
    MeanDegree,
    Spectral,
    ActivityDriven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub r0: f64,
    pub gamma: f64,
    pub basis: CalibrationBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedStrategy {
    Random,
    Hubs,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub strategy: SeedStrategy,
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub nodes: Vec<usize>,
    #[serde(default)]
    pub compartment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    pub vaccination: VaccinationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VaccinationSpec {
    /// Fraction of susceptible nodes, redrawn per realization.
    Random {
        fraction: f64,
        #[serde(default)]
        compartment: Option<String>,
    },
    /// Degree-ordered removal; `count` omitted means the minimal count that
    /// pushes the residual reproduction number below one.
    Targeted {
        policy: TargetPolicy,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        compartment: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    /// Defaults to the run horizon.
    #[serde(default)]
    pub end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnalyticSpec {
    Fraction(f64),
    /// `"final-size"`: solve the final-size equation at the calibrated r0.
    Named(String),
}

impl ScenarioConfig {
    pub fn is_temporal(&self) -> bool {
        matches!(
            self.network,
            NetworkSpec::ActivityDriven {
                mode: TemporalMode::Temporal,
                ..
            }
        )
    }

    /// Time at which the run stops.
    pub fn horizon_end(&self) -> Option<f64> {
        if self.is_temporal() {
            let NetworkSpec::ActivityDriven { step_length, .. } = self.network else {
                unreachable!()
            };
            self.horizon_steps.map(|s| s as f64 * step_length)
        } else {
            self.t_max
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let end = self
            .sample_grid
            .end
            .or(self.horizon_end())
            .ok_or_else(|| Error::invalid("no horizon to derive the grid from"))?;
        match (self.sample_grid.step, self.sample_grid.points) {
            (Some(step), None) if step > 0.0 => {
                let n = (end / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|i| i as f64 * step).collect())
            }
            (None, Some(points)) if points >= 2 => Ok((0..points)
                .map(|i| end * i as f64 / (points - 1) as f64)
                .collect()),
            _ => Err(Error::invalid("sample_grid needs exactly one of step > 0 or points >= 2")),
        }
    }

    fn problems(&self, at: &str, base_dir: Option<&Path>) -> Vec<String> {
        let mut out = Vec::new();
        let mut err = |field: &str, msg: String| out.push(format!("{at}.{field}: {msg}"));

        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            err("name", format!("{:?} is not a valid directory name", self.name));
        }
        if self.realizations == 0 {
            err("realizations", "must be >= 1".into());
        }
        network_problems(&self.network, "network", base_dir, &mut err);

        let temporal = self.is_temporal();
        match (temporal, self.t_max, self.horizon_steps) {
            (true, None, Some(s)) if s >= 1 => {}
            (true, _, _) => err("horizon_steps", "temporal runs need horizon_steps >= 1 and no t_max".into()),
            (false, Some(t), None) if t > 0.0 => {}
            (false, _, _) => err("t_max", "continuous runs need t_max > 0 and no horizon_steps".into()),
        }
        match self.grid() {
            Ok(grid) => {
                if let (Some(end), Some(last)) = (self.horizon_end(), grid.last()) {
                    if *last > end + 1e-12 {
                        err("sample_grid", format!("grid ends at {last}, beyond the horizon {end}"));
                    }
                }
            }
            Err(e) => err("sample_grid", e.to_string()),
        }

        let m = &self.model;
        match (&m.name, &m.schema_file) {
            (Some(name), None) => {
                if !BUILTIN_MODELS.contains(&name.as_str()) {
                    err("model.name", format!("unknown model {name:?} (expected one of {BUILTIN_MODELS:?})"));
                } else {
                    model_param_problems(name, m, self.calibration.as_ref(), temporal, &mut err);
                }
            }
            (None, Some(path)) => {
                if self.calibration.is_some() {
                    err("calibration", "not supported with schema_file models".into());
                }
                if temporal {
                    err("model.schema_file", "temporal runs support only the sir model".into());
                }
                if !resolve(base_dir, path).exists() {
                    err("model.schema_file", format!("{path:?} does not exist"));
                }
            }
            _ => err("model", "set exactly one of name or schema_file".into()),
        }

        if let Some(c) = &self.calibration {
            if !(c.r0 >= 0.0) {
                err("calibration.r0", format!("{} must be >= 0", c.r0));
            }
            if !(c.gamma > 0.0) {
                err("calibration.gamma", format!("{} must be > 0", c.gamma));
            }
            let wants_activity = c.basis == CalibrationBasis::ActivityDriven;
            if wants_activity != temporal {
                err("calibration.basis", "activity-driven basis goes with temporal runs only".into());
            }
        }

        if self.seeding.is_empty() {
            err("seeding", "at least one seeding entry is required".into());
        }
        for (i, s) in self.seeding.iter().enumerate() {
            match s.strategy {
                SeedStrategy::Explicit if s.nodes.is_empty() => {
                    err(&format!("seeding[{i}].nodes"), "explicit seeding needs nodes".into())
                }
                SeedStrategy::Hubs if temporal => {
                    err(&format!("seeding[{i}].strategy"), "hub seeding needs a static network".into())
                }
                _ => {}
            }
        }

        if let Some(iv) = &self.interventions {
            match &iv.vaccination {
                VaccinationSpec::Random { fraction, .. } => {
                    if !(0.0..=1.0).contains(fraction) {
                        err("interventions.vaccination.fraction", format!("{fraction} outside [0, 1]"));
                    }
                }
                VaccinationSpec::Targeted { count, .. } => {
                    if temporal {
                        err("interventions.vaccination", "targeted vaccination needs a static network".into());
                    }
                    if count.is_none() && self.calibration.is_none() && m.beta.is_none() {
                        err("interventions.vaccination.count", "automatic count needs a transmission rate".into());
                    }
                }
            }
        }

        if let Some(AnalyticSpec::Named(name)) = &self.analytic_reference {
            if name != "final-size" {
                err("analytic_reference", format!("unknown reference {name:?}"));
            } else if self.calibration.is_none() {
                err("analytic_reference", "final-size needs a calibration r0".into());
            }
        }
        if let Some(AnalyticSpec::Fraction(f)) = &self.analytic_reference {
            if !(*f > 0.0 && *f <= 1.0) {
                err("analytic_reference", format!("{f} outside (0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.outbreak_threshold) {
            err("outbreak_threshold", format!("{} outside [0, 1]", self.outbreak_threshold));
        }
        out
    }
}

fn network_problems(spec: &NetworkSpec, at: &str, base_dir: Option<&Path>, err: &mut impl FnMut(&str, String)) {
    match spec {
        NetworkSpec::Complete { n } | NetworkSpec::Ba { n, .. } | NetworkSpec::Er { n, .. } if *n == 0 => {
            err(at, "n must be >= 1".into())
        }
        NetworkSpec::Ba { n, m, .. } if *m == 0 || m >= n => err(at, format!("BA needs 1 <= m < n, got m={m}")),
        NetworkSpec::Er { n, mean_degree, .. } if !(*mean_degree >= 0.0 && *mean_degree <= (*n - 1) as f64) => {
            err(at, format!("mean_degree {mean_degree} outside [0, n-1]"))
        }
        NetworkSpec::Configuration { degrees, .. } => {
            let sum: usize = degrees.iter().map(|(d, c)| d * c).sum();
            if sum % 2 != 0 {
                err(at, format!("degree sum {sum} is odd"));
            }
        }
        NetworkSpec::Multiplex { n, layers } => {
            if layers.is_empty() {
                err(at, "multiplex needs layers".into());
            }
            for (i, l) in layers.iter().enumerate() {
                let sub = format!("{at}.layers[{i}].network");
                if matches!(l.network, NetworkSpec::Multiplex { .. } | NetworkSpec::ActivityDriven { mode: TemporalMode::Temporal, .. }) {
                    err(&sub, "layers must be static single-layer networks".into());
                }
                network_problems(&l.network, &sub, base_dir, err);
                if let Some(ln) = declared_nodes(&l.network) {
                    if ln != *n {
                        err(&sub, format!("layer has {ln} nodes, multiplex expects {n}"));
                    }
                }
            }
        }
        NetworkSpec::ActivityDriven { n, activity_rate, edges_per_activation, step_length, horizon_steps, .. } => {
            if let Err(Error::Validation(p)) =
                crate::netgen::TemporalNetworkSpec::new(*n, *activity_rate, *edges_per_activation, *step_length, *horizon_steps)
            {
                for msg in p {
                    err(at, msg);
                }
            }
        }
        NetworkSpec::File { path } => {
            if !resolve(base_dir, path).exists() {
                err(at, format!("network file {path:?} does not exist"));
            }
        }
        _ => {}
    }
}

fn declared_nodes(spec: &NetworkSpec) -> Option<usize> {
    match spec {
        NetworkSpec::Complete { n }
        | NetworkSpec::Er { n, .. }
        | NetworkSpec::Ba { n, .. }
        | NetworkSpec::Multiplex { n, .. }
        | NetworkSpec::ActivityDriven { n, .. } => Some(*n),
        NetworkSpec::Configuration { degrees, .. } => Some(degrees.iter().map(|(_, c)| c).sum()),
        NetworkSpec::File { .. } => None,
    }
}

fn model_param_problems(
    name: &str,
    m: &ModelSpec,
    cal: Option<&CalibrationSpec>,
    temporal: bool,
    err: &mut impl FnMut(&str, String),
) {
    let calibrated = cal.is_some();
    let need = |field: &str, value: Option<f64>, err: &mut dyn FnMut(&str, String)| match value {
        None => err(&format!("model.{field}"), "required".into()),
        Some(v) if !(v >= 0.0 && v.is_finite()) => err(&format!("model.{field}"), format!("{v} must be >= 0")),
        _ => {}
    };
    if temporal && name != "sir" {
        err("model.name", format!("temporal runs support only sir, got {name:?}"));
    }
    match name {
        "sir" | "seir" | "sirv" => {
            if calibrated {
                if m.beta.is_some() || m.gamma.is_some() {
                    err("model.beta", "beta/gamma come from calibration; remove them".into());
                }
            } else {
                need("beta", m.beta, err);
                need("gamma", m.gamma, err);
            }
            if name == "seir" {
                need("sigma", m.sigma, err);
            }
        }
        "sis" => {
            if calibrated {
                if m.beta.is_some() || m.delta.is_some() {
                    err("model.beta", "beta/delta come from calibration; remove them".into());
                }
            } else {
                need("beta", m.beta, err);
                need("delta", m.delta, err);
            }
        }
        "bivirus" => {
            if calibrated {
                err("calibration", "bivirus models use tau1/tau2 instead".into());
            }
            for (v, beta, tau, delta, layer) in [
                (1, m.beta1, m.tau1, m.delta1, &m.layer1),
                (2, m.beta2, m.tau2, m.delta2, &m.layer2),
            ] {
                match (beta, tau) {
                    (Some(_), None) => need(&format!("beta{v}"), beta, err),
                    (None, Some(_)) => need(&format!("tau{v}"), tau, err),
                    _ => err(&format!("model.beta{v}"), format!("set exactly one of beta{v} or tau{v}")),
                }
                need(&format!("delta{v}"), delta, err);
                if layer.is_none() {
                    err(&format!("model.layer{v}"), "required".into());
                }
            }
        }
        _ => {}
    }
}

pub(crate) fn resolve(base_dir: Option<&Path>, path: &str) -> PathBuf {
    let p = Path::new(path);
    match base_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    /// Every semantic problem in the file, each prefixed with its field path.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!(
                "schema_version: {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.sub_scenarios.is_empty() {
            out.push("sub_scenarios: at least one is required".into());
        }
        let mut names = std::collections::HashSet::new();
        for (i, s) in self.sub_scenarios.iter().enumerate() {
            if !names.insert(s.name.as_str()) {
                out.push(format!("sub_scenarios[{i}].name: duplicate {:?}", s.name));
            }
            out.extend(s.problems(&format!("sub_scenarios[{i}]"), self.base_dir.as_deref()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(p))
        }
    }
}

/// Reads and validates a scenario file; relative paths inside it resolve
/// against its directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut file: ScenarioFile = serde_json::from_str(&text)?;
    file.base_dir = path.parent().map(Path::to_path_buf);
    file.validate()?;
    Ok(file)
}
