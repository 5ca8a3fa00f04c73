//! Stochastic simulation.
//!
//! [`run_ctmc`] samples exact continuous-time paths (Gillespie direct method)
//! of any [`ModelSchema`] on a static or multiplex [`Network`].
//! [`run_discrete_temporal`] runs synchronous discrete-time SIR on an
//! activity-driven temporal network. [`run_batch`] and
//! [`run_batch_temporal`] repeat either one over independent seeded
//! realizations, possibly in parallel, with identical output regardless of
//! scheduling.

mod batch;
mod ctmc;
mod discrete;
mod interventions;
mod sumtree;

use serde::Serialize;

use crate::epimodel::ModelSchema;

pub use batch::{
    run_batch, run_batch_temporal, BatchResult, Horizon, InitialState, SimulationConfig,
    StateSampler,
};
pub use ctmc::{run_ctmc, CtmcOptions};
pub use discrete::{run_discrete_temporal, synchronous_update, DiscreteSir};
pub use interventions::{
    seed_explicit, seed_hubs, seed_random, vaccinate_random, vaccinate_targeted,
};

/// One compartment change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub node: usize,
    pub from: usize,
    pub to: usize,
}

/// Record of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_nodes: usize,
    pub initial_counts: Vec<usize>,
    /// Nodes that started in an absorbing compartment (pre-immunized); they
    /// never count toward the final size.
    pub initially_immune: usize,
    /// Present only when event recording was requested.
    pub events: Option<Vec<Event>>,
    pub n_events: usize,
    pub grid: Vec<f64>,
    /// Compartment totals at each grid time.
    pub grid_counts: Vec<Vec<usize>>,
    pub final_counts: Vec<usize>,
    /// Time of the last event, 0 when nothing happened.
    pub last_event_time: f64,
}

impl Trajectory {
    /// Ever-infected count: `n - S(end)` minus pre-immunized nodes.
    pub fn final_size(&self) -> usize {
        self.n_nodes - self.final_counts[0] - self.initially_immune
    }

    pub fn duration(&self) -> f64 {
        self.last_event_time
    }

    /// Compartment totals at `time` replayed from the initial counts and the
    /// recorded events; `None` when events were not recorded.
    pub fn replay_counts(&self, time: f64) -> Option<Vec<usize>> {
        let events = self.events.as_ref()?;
        let mut counts = self.initial_counts.clone();
        for e in events.iter().take_while(|e| e.time <= time) {
            counts[e.from] -= 1;
            counts[e.to] += 1;
        }
        Some(counts)
    }
}

/// Number of initial nodes in compartments with no outgoing transition.
pub(crate) fn count_initially_immune(model: &ModelSchema, initial_counts: &[usize]) -> usize {
    model
        .compartments
        .iter()
        .zip(initial_counts)
        .skip(1)
        .filter(|(c, _)| model.is_absorbing(c))
        .map(|(_, &n)| n)
        .sum()
}

/// Walks grid times forward, emitting the counts in force at each one.
pub(crate) struct GridRecorder<'a> {
    grid: &'a [f64],
    next: usize,
    pub rows: Vec<Vec<usize>>,
}

impl<'a> GridRecorder<'a> {
    pub fn new(grid: &'a [f64]) -> Self {
        GridRecorder {
            grid,
            next: 0,
            rows: Vec::with_capacity(grid.len()),
        }
    }

    /// Records every grid time strictly before `time` with `counts`.
    pub fn advance_to(&mut self, time: f64, counts: &[usize]) {
        while self.next < self.grid.len() && self.grid[self.next] < time {
            self.rows.push(counts.to_vec());
            self.next += 1;
        }
    }

    pub fn finish(mut self, counts: &[usize]) -> Vec<Vec<usize>> {
        while self.next < self.grid.len() {
            self.rows.push(counts.to_vec());
            self.next += 1;
        }
        self.rows
    }
}
