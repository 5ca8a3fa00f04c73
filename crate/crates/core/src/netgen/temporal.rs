use std::collections::HashMap;

use rand::Rng;

use super::{Edge, Layer, Network, DEFAULT_LAYER};
use crate::error::{Error, Result};
use crate::rng;

/// Generative parameters of an activity-driven temporal network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalNetworkSpec {
    n_nodes: usize,
    activity_rate: f64,
    edges_per_activation: usize,
    step_length: f64,
    horizon_steps: usize,
}

impl TemporalNetworkSpec {
    pub fn new(
        n_nodes: usize,
        activity_rate: f64,
        edges_per_activation: usize,
        step_length: f64,
        horizon_steps: usize,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(activity_rate >= 0.0 && activity_rate.is_finite()) {
            problems.push(format!("activity_rate {activity_rate} must be finite and >= 0"));
        }
        if edges_per_activation >= n_nodes {
            problems.push(format!(
                "edges_per_activation {edges_per_activation} must be below n_nodes {n_nodes}"
            ));
        }
        if !(step_length > 0.0 && step_length.is_finite()) {
            problems.push(format!("step_length {step_length} must be positive"));
        }
        if horizon_steps == 0 {
            problems.push("horizon_steps must be >= 1".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(TemporalNetworkSpec {
            n_nodes,
            activity_rate,
            edges_per_activation,
            step_length,
            horizon_steps,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn activity_rate(&self) -> f64 {
        self.activity_rate
    }

    pub fn edges_per_activation(&self) -> usize {
        self.edges_per_activation
    }

    pub fn step_length(&self) -> f64 {
        self.step_length
    }

    pub fn horizon_steps(&self) -> usize {
        self.horizon_steps
    }

    /// Per-step activation probability `1 - exp(-alpha * dt)`.
    pub fn activation_probability(&self) -> f64 {
        crate::calibrate::activation_probability(self.activity_rate, self.step_length)
    }
}

/// Samples one step's contacts: every node activates with the exact
/// per-step probability and, if active, links to `m` distinct uniformly
/// chosen partners. Returned pairs are `(u, v)` with `u < v`, sorted and
/// unique.
pub fn sample_temporal_step<R: Rng + ?Sized>(
    spec: &TemporalNetworkSpec,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    sample_step_counting(spec, rng).1
}

/// Same as [`sample_temporal_step`], also returning how many nodes
/// activated.
pub(crate) fn sample_step_counting<R: Rng + ?Sized>(
    spec: &TemporalNetworkSpec,
    rng: &mut R,
) -> (usize, Vec<(usize, usize)>) {
    let n = spec.n_nodes;
    let m = spec.edges_per_activation;
    let p = spec.activation_probability();
    let mut pairs = Vec::new();
    let mut active = 0;
    if p == 0.0 {
        return (0, pairs);
    }
    for node in 0..n {
        if rng.random::<f64>() >= p {
            continue;
        }
        active += 1;
        if m == 0 {
            continue;
        }
        for idx in rand::seq::index::sample(rng, n - 1, m) {
            let other = if idx >= node { idx + 1 } else { idx };
            pairs.push((node.min(other), node.max(other)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    (active, pairs)
}

/// Time-aggregated network over `horizon_steps` steps: edge weight counts
/// the steps in which the pair was in contact.
pub fn aggregate_temporal(spec: &TemporalNetworkSpec, seed: u64) -> Result<Network> {
    aggregate_steps(spec, seed, spec.horizon_steps)
}

pub(crate) fn aggregate_steps(
    spec: &TemporalNetworkSpec,
    seed: u64,
    steps: usize,
) -> Result<Network> {
    let mut rng = rng::stream(seed);
    let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
    for _ in 0..steps {
        for pair in sample_temporal_step(spec, &mut rng) {
            *counts.entry(pair).or_insert(0) += 1;
        }
    }
    let edges = counts
        .into_iter()
        .map(|((u, v), c)| Edge {
            u,
            v,
            weight: c as f64,
        })
        .collect();
    Ok(Network::single_layer(Layer::new(
        DEFAULT_LAYER,
        spec.n_nodes,
        edges,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation_lists_every_problem() {
        match TemporalNetworkSpec::new(5, -1.0, 5, 0.0, 0) {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn activation_frequency(alpha: f64, dt: f64) -> f64 {
        // 100 nodes x 100 steps = 10^4 node-steps
        let spec = TemporalNetworkSpec::new(100, alpha, 5, dt, 100).unwrap();
        let mut r = rng::stream(17);
        let active: usize = (0..100).map(|_| sample_step_counting(&spec, &mut r).0).sum();
        active as f64 / 10_000.0
    }

    #[test]
    fn activation_frequency_uses_exact_probability() {
        let f = activation_frequency(3.0, 1.0);
        assert!((f - 0.950).abs() < 0.01, "frequency {f}");
        let f = activation_frequency(0.1, 1.0);
        assert!((f - 0.0952).abs() < 0.005, "frequency {f}");
    }

    #[test]
    fn zero_activity_gives_no_edges() {
        let spec = TemporalNetworkSpec::new(100, 0.0, 5, 1.0, 10).unwrap();
        let mut r = rng::stream(1);
        for _ in 0..10 {
            assert!(sample_temporal_step(&spec, &mut r).is_empty());
        }
        assert_eq!(aggregate_temporal(&spec, 1).unwrap().layers()[0].n_edges(), 0);
    }

    #[test]
    fn steps_have_no_self_loops_or_duplicates() {
        let spec = TemporalNetworkSpec::new(30, 2.0, 4, 1.0, 1).unwrap();
        let mut r = rng::stream(2);
        for _ in 0..50 {
            let s = sample_temporal_step(&spec, &mut r);
            assert!(s.iter().all(|&(u, v)| u < v && v < 30));
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn aggregate_weight_equals_sum_of_step_sizes() {
        let spec = TemporalNetworkSpec::new(40, 0.5, 3, 1.0, 25).unwrap();
        let mut r = rng::stream(99);
        let per_step: usize = (0..25).map(|_| sample_temporal_step(&spec, &mut r).len()).sum();
        let agg = aggregate_temporal(&spec, 99).unwrap();
        assert_eq!(agg.layers()[0].total_weight(), per_step as f64);
        assert_eq!(aggregate_steps(&spec, 99, 0).unwrap().layers()[0].n_edges(), 0);
    }

    #[test]
    fn pair_present_every_step_gets_that_weight() {
        // n = 2, m = 1, near-certain activation: the single pair appears in
        // every step
        let spec = TemporalNetworkSpec::new(2, 50.0, 1, 1.0, 3).unwrap();
        let agg = aggregate_temporal(&spec, 0).unwrap();
        assert_eq!(agg.layers()[0].edges()[0].weight, 3.0);
    }

    #[test]
    fn aggregate_contact_mass_matches_expectation() {
        let spec = TemporalNetworkSpec::new(1000, 0.1, 5, 1.0, 1000).unwrap();
        let total = aggregate_temporal(&spec, 2024).unwrap().layers()[0].total_weight();
        let expected = 1000.0 * 1000.0 * (1.0 - (-0.1f64).exp()) * 5.0;
        assert!((total - expected).abs() / expected < 0.05, "{total} vs {expected}");
    }
}
