use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::ctmc::check_grid;
use super::{run_ctmc, run_discrete_temporal, CtmcOptions, DiscreteSir, Trajectory};
use crate::epimodel::{ModelSchema, NodeStateVector};
use crate::error::{Error, Result};
use crate::netgen::{Network, TemporalNetworkSpec};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Continuous-time end point.
    Time(f64),
    /// Number of discrete steps.
    Steps(usize),
}

/// Draws a realization's initial state from that realization's own stream.
pub type StateSampler = Arc<dyn Fn(&mut Stream) -> Result<NodeStateVector> + Send + Sync>;

#[derive(Clone)]
pub enum InitialState {
    Fixed(NodeStateVector),
    /// Resampled per realization (random seeding, random vaccination).
    Sampled(StateSampler),
}

impl fmt::Debug for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Fixed(s) => f.debug_tuple("Fixed").field(&s.counts()).finish(),
            InitialState::Sampled(_) => f.write_str("Sampled(..)"),
        }
    }
}

impl InitialState {
    fn draw(&self, rng: &mut Stream) -> Result<NodeStateVector> {
        match self {
            InitialState::Fixed(s) => Ok(s.clone()),
            InitialState::Sampled(f) => f(rng),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub initial: InitialState,
    pub horizon: Horizon,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub sample_grid: Vec<f64>,
    pub record_events: bool,
}

impl SimulationConfig {
    fn check(&self, end: f64) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_realizations == 0 {
            problems.push("n_realizations must be >= 1".to_string());
        }
        if !(end > 0.0) {
            problems.push(format!("horizon {:?} must be positive", self.horizon));
        }
        if let Err(e) = check_grid(&self.sample_grid, end) {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Seed of realization `index`.
    pub fn realization_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub compartments: Vec<String>,
    pub n_nodes: usize,
    pub grid: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub seeds: Vec<u64>,
}

impl BatchResult {
    pub fn n_realizations(&self) -> usize {
        self.trajectories.len()
    }

    pub fn compartment_index(&self, name: &str) -> Option<usize> {
        self.compartments.iter().position(|c| c == name)
    }

    pub fn final_sizes(&self) -> Vec<usize> {
        self.trajectories.iter().map(Trajectory::final_size).collect()
    }

    pub fn aggregate(&self) -> Result<crate::analyze::AggregateSeries> {
        crate::analyze::aggregate_batch(self)
    }
}

fn run_realizations<F>(config: &SimulationConfig, compartments: Vec<String>, n_nodes: usize, run: F) -> Result<BatchResult>
where
    F: Fn(&mut Stream, NodeStateVector) -> Result<Trajectory> + Sync,
{
    let seeds: Vec<u64> = (0..config.n_realizations)
        .map(|i| config.realization_seed(i))
        .collect();
    let trajectories = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = rng::stream(seed);
            let initial = config.initial.draw(&mut rng)?;
            run(&mut rng, initial)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchResult {
        compartments,
        n_nodes,
        grid: config.sample_grid.clone(),
        trajectories,
        seeds,
    })
}

/// Independent continuous-time realizations; realization `i` runs on the
/// stream seeded with `base_seed + i`.
pub fn run_batch(net: &Network, model: &ModelSchema, config: &SimulationConfig) -> Result<BatchResult> {
    let Horizon::Time(t_max) = config.horizon else {
        return Err(Error::invalid("continuous engine needs a time horizon"));
    };
    config.check(t_max)?;
    crate::epimodel::validate_schema(model, net)?;
    let options = CtmcOptions {
        t_max,
        grid: &config.sample_grid,
        record_events: config.record_events,
    };
    run_realizations(config, model.compartments.clone(), net.n_nodes(), |rng, initial| {
        run_ctmc(net, model, &initial, options, rng)
    })
}

/// Independent discrete-time SIR realizations on a temporal network.
pub fn run_batch_temporal(
    spec: &TemporalNetworkSpec,
    params: DiscreteSir,
    config: &SimulationConfig,
) -> Result<BatchResult> {
    let Horizon::Steps(steps) = config.horizon else {
        return Err(Error::invalid("discrete engine needs a step horizon"));
    };
    let spec = TemporalNetworkSpec::new(
        spec.n_nodes(),
        spec.activity_rate(),
        spec.edges_per_activation(),
        spec.step_length(),
        steps,
    )?;
    config.check(steps as f64 * spec.step_length())?;
    let compartments = ["S", "I", "R"].map(String::from).to_vec();
    run_realizations(config, compartments, spec.n_nodes(), |rng, initial| {
        run_discrete_temporal(
            &spec,
            params,
            &initial,
            &config.sample_grid,
            config.record_events,
            rng,
        )
    })
}
