use rand::Rng;

use super::ctmc::check_grid;
use super::{Event, GridRecorder, Trajectory};
use crate::epimodel::NodeStateVector;
use crate::error::{Error, Result};
use crate::netgen::{sample_temporal_step, TemporalNetworkSpec};
use crate::rng::keyed_unit;

const S: usize = 0;
const I: usize = 1;
const R: usize = 2;

/// Per-step probabilities of the discrete SIR process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSir {
    /// Per infectious contact per step.
    pub infect_prob: f64,
    /// Per infectious node per step.
    pub recover_prob: f64,
}

impl DiscreteSir {
    pub fn new(infect_prob: f64, recover_prob: f64) -> Result<Self> {
        for (name, p) in [("infect_prob", infect_prob), ("recover_prob", recover_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} {p} outside [0, 1]")));
            }
        }
        Ok(DiscreteSir {
            infect_prob,
            recover_prob,
        })
    }

    /// Probabilities equivalent to continuous rates over one step of length
    /// `dt`.
    pub fn from_rates(beta: f64, gamma: f64, dt: f64) -> Result<Self> {
        DiscreteSir::new(-(-beta * dt).exp_m1(), -(-gamma * dt).exp_m1())
    }
}

// purpose tags for keyed draws
const DRAW_INFECT: u64 = 1;
const DRAW_RECOVER: u64 = 2;

/// Transitions `(node, new compartment)` of one synchronous step, computed
/// from start-of-step states only and sorted by node. Each node's draws are
/// keyed by `(key, node)`, so the result does not depend on the order in
/// which `nodes` are visited.
pub fn synchronous_update(
    state: &[usize],
    infectious_contacts: &[u32],
    key: u64,
    params: DiscreteSir,
    nodes: impl Iterator<Item = usize>,
) -> Vec<(usize, usize)> {
    let mut changes = Vec::new();
    for v in nodes {
        match state[v] {
            S if infectious_contacts[v] > 0 => {
                let escape = (1.0 - params.infect_prob).powi(infectious_contacts[v] as i32);
                if keyed_unit(key, v, DRAW_INFECT) < 1.0 - escape {
                    changes.push((v, I));
                }
            }
            I => {
                if keyed_unit(key, v, DRAW_RECOVER) < params.recover_prob {
                    changes.push((v, R));
                }
            }
            _ => {}
        }
    }
    changes.sort_unstable();
    changes
}

/// Synchronous discrete-time SIR on an activity-driven temporal network.
///
/// Each step samples that step's contacts, then updates all nodes from their
/// start-of-step states: a susceptible node with `j` infectious contacts
/// becomes infectious with probability `1 - (1 - infect_prob)^j`, and every
/// infectious node recovers with probability `recover_prob` after its own
/// transmissions for the step have been drawn. Stops at the network horizon or
/// when no infectious node remains. Compartments are `[S, I, R]`.
pub fn run_discrete_temporal<Rg: Rng + ?Sized>(
    spec: &TemporalNetworkSpec,
    params: DiscreteSir,
    initial: &NodeStateVector,
    grid: &[f64],
    record_events: bool,
    rng: &mut Rg,
) -> Result<Trajectory> {
    let params = DiscreteSir::new(params.infect_prob, params.recover_prob)?;
    let n = spec.n_nodes();
    if initial.n_nodes() != n || initial.n_compartments() != 3 {
        return Err(Error::invalid(format!(
            "discrete engine needs an [S, I, R] state over {n} nodes"
        )));
    }
    let dt = spec.step_length();
    check_grid(grid, spec.horizon_steps() as f64 * dt)?;

    let mut state = initial.state().to_vec();
    let mut counts = initial.counts().to_vec();
    let mut contacts = vec![0u32; n];
    let mut recorder = GridRecorder::new(grid);
    let mut events = record_events.then(Vec::new);
    let mut n_events = 0;
    let mut last_event_time = 0.0;

    for step in 1..=spec.horizon_steps() {
        if counts[I] == 0 {
            break;
        }
        let time = step as f64 * dt;
        let pairs = sample_temporal_step(spec, rng);
        let key: u64 = rng.random();
        contacts.iter_mut().for_each(|c| *c = 0);
        for &(u, v) in &pairs {
            match (state[u], state[v]) {
                (I, S) => contacts[v] += 1,
                (S, I) => contacts[u] += 1,
                _ => {}
            }
        }
        let changes = synchronous_update(&state, &contacts, key, params, 0..n);
        recorder.advance_to(time, &counts);
        for &(v, to) in &changes {
            let from = state[v];
            state[v] = to;
            counts[from] -= 1;
            counts[to] += 1;
            if let Some(ev) = events.as_mut() {
                ev.push(Event {
                    time,
                    node: v,
                    from,
                    to,
                });
            }
        }
        if !changes.is_empty() {
            n_events += changes.len();
            last_event_time = time;
        }
    }

    Ok(Trajectory {
        n_nodes: n,
        initial_counts: initial.counts().to_vec(),
        initially_immune: initial.counts()[R],
        events,
        n_events,
        grid: grid.to_vec(),
        grid_counts: recorder.finish(&counts),
        final_counts: counts,
        last_event_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn seeded(n: usize, infected: &[usize]) -> NodeStateVector {
        let mut s = NodeStateVector::uniform(n, 3, S).unwrap();
        for &v in infected {
            s.set(v, I);
        }
        s
    }

    #[test]
    fn probabilities_validated() {
        assert!(DiscreteSir::new(1.1, 0.5).is_err());
        assert!(DiscreteSir::new(0.5, -0.1).is_err());
        let p = DiscreteSir::from_rates(3.0, 1.0, 1.0).unwrap();
        assert!((p.infect_prob - 0.950_212_931_632_136).abs() < 1e-12);
        assert!((p.recover_prob - 0.632_120_558_828_557_7).abs() < 1e-12);
    }

    #[test]
    fn zero_infect_prob_only_recovers() {
        let spec = TemporalNetworkSpec::new(200, 1.0, 5, 1.0, 100).unwrap();
        let init = seeded(200, &[0, 1, 2, 3]);
        let tr = run_discrete_temporal(
            &spec,
            DiscreteSir::new(0.0, 0.3).unwrap(),
            &init,
            &[],
            true,
            &mut rng::stream(1),
        )
        .unwrap();
        assert!(tr.events.as_ref().unwrap().iter().all(|e| (e.from, e.to) == (I, R)));
        assert_eq!(tr.final_size(), 4);
    }

    #[test]
    fn seed_transmits_before_recovering() {
        // two nodes, near-certain contact every step, certain transmission and
        // certain recovery: the seed still infects its partner in step 1
        let spec = TemporalNetworkSpec::new(2, 50.0, 1, 1.0, 5).unwrap();
        let init = seeded(2, &[0]);
        let tr = run_discrete_temporal(
            &spec,
            DiscreteSir::new(1.0, 1.0).unwrap(),
            &init,
            &[0.0, 1.0, 2.0],
            true,
            &mut rng::stream(3),
        )
        .unwrap();
        let ev = tr.events.as_ref().unwrap();
        assert_eq!(ev[0].time, 1.0);
        assert!(ev.iter().any(|e| e.node == 1 && e.to == I && e.time == 1.0));
        assert!(ev.iter().any(|e| e.node == 0 && e.to == R && e.time == 1.0));
        assert_eq!(tr.grid_counts, vec![vec![1, 1, 0], vec![0, 1, 1], vec![0, 0, 2]]);
        assert_eq!(tr.final_size(), 2);
    }

    #[test]
    fn update_is_order_invariant() {
        let n = 300;
        let mut r = rng::stream(44);
        let state: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let contacts: Vec<u32> = (0..n).map(|_| r.random_range(0..4)).collect();
        let params = DiscreteSir::new(0.4, 0.3).unwrap();
        let mut forward = synchronous_update(&state, &contacts, 99, params, 0..n);
        let mut backward = synchronous_update(&state, &contacts, 99, params, (0..n).rev());
        let mut strided =
            synchronous_update(&state, &contacts, 99, params, (0..n).map(|i| (i * 7) % n));
        forward.sort_unstable();
        backward.sort_unstable();
        strided.sort_unstable();
        assert_eq!(forward, backward);
        assert_eq!(forward, strided);
    }

    #[test]
    fn stops_on_extinction() {
        let spec = TemporalNetworkSpec::new(50, 0.5, 2, 1.0, 1000).unwrap();
        let init = seeded(50, &[7]);
        let tr = run_discrete_temporal(
            &spec,
            DiscreteSir::new(0.1, 0.9).unwrap(),
            &init,
            &[],
            true,
            &mut rng::stream(5),
        )
        .unwrap();
        assert_eq!(tr.final_counts[I], 0);
        assert!(tr.last_event_time < 1000.0);
        let ev = tr.events.as_ref().unwrap();
        assert!(ev.windows(2).all(|w| w[0].time <= w[1].time));
    }
}
