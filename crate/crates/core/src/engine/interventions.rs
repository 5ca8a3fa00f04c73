use rand::seq::index;
use rand::Rng;

use crate::calibrate::TargetPolicy;
use crate::epimodel::{ModelSchema, NodeStateVector};
use crate::error::{Error, Result};
use crate::netgen::Network;

fn susceptible_population(n_nodes: usize, model: &ModelSchema) -> Result<NodeStateVector> {
    NodeStateVector::uniform(n_nodes, model.compartments.len(), 0)
}

/// `count` uniformly chosen nodes in `compartment`, everyone else
/// susceptible.
pub fn seed_random<R: Rng + ?Sized>(
    n_nodes: usize,
    model: &ModelSchema,
    compartment: &str,
    count: usize,
    rng: &mut R,
) -> Result<NodeStateVector> {
    let c = model.require_compartment(compartment)?;
    if count > n_nodes {
        return Err(Error::invalid(format!(
            "cannot seed {count} of {n_nodes} nodes"
        )));
    }
    let mut state = susceptible_population(n_nodes, model)?;
    for v in index::sample(rng, n_nodes, count) {
        state.set(v, c);
    }
    Ok(state)
}

/// Seeds the `count` highest-degree nodes of `layer` (ties by node id).
pub fn seed_hubs(
    net: &Network,
    layer: &str,
    model: &ModelSchema,
    compartment: &str,
    count: usize,
) -> Result<NodeStateVector> {
    let c = model.require_compartment(compartment)?;
    if count > net.n_nodes() {
        return Err(Error::invalid(format!(
            "cannot seed {count} of {} nodes",
            net.n_nodes()
        )));
    }
    let mut state = susceptible_population(net.n_nodes(), model)?;
    for v in net.nodes_by_degree(layer)?.into_iter().take(count) {
        state.set(v, c);
    }
    Ok(state)
}

pub fn seed_explicit(
    n_nodes: usize,
    model: &ModelSchema,
    compartment: &str,
    nodes: &[usize],
) -> Result<NodeStateVector> {
    let c = model.require_compartment(compartment)?;
    let mut state = susceptible_population(n_nodes, model)?;
    for &v in nodes {
        if v >= n_nodes {
            return Err(Error::invalid(format!("seed node {v} out of range 0..{n_nodes}")));
        }
        state.set(v, c);
    }
    Ok(state)
}

/// Moves `round(fraction * |S|)` uniformly chosen susceptible nodes into
/// `immune`.
pub fn vaccinate_random<R: Rng + ?Sized>(
    state: &NodeStateVector,
    model: &ModelSchema,
    fraction: f64,
    immune: &str,
    rng: &mut R,
) -> Result<NodeStateVector> {
    let target = model.require_compartment(immune)?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("vaccination fraction {fraction} outside [0, 1]")));
    }
    let susceptible: Vec<usize> = state.nodes_in(0).collect();
    let count = (fraction * susceptible.len() as f64).round() as usize;
    let mut out = state.clone();
    for i in index::sample(rng, susceptible.len(), count) {
        out.set(susceptible[i], target);
    }
    Ok(out)
}

/// Moves the first `count` susceptible nodes of the policy ordering into
/// `immune`.
pub fn vaccinate_targeted(
    state: &NodeStateVector,
    model: &ModelSchema,
    net: &Network,
    layer: &str,
    policy: TargetPolicy,
    count: usize,
    immune: &str,
) -> Result<NodeStateVector> {
    let target = model.require_compartment(immune)?;
    let eligible: Vec<usize> = policy
        .ordering(net, layer)?
        .into_iter()
        .filter(|&v| state.get(v) == 0)
        .collect();
    if count > eligible.len() {
        return Err(Error::invalid(format!(
            "policy {policy:?} has {} eligible susceptible nodes, {count} requested",
            eligible.len()
        )));
    }
    let mut out = state.clone();
    for &v in &eligible[..count] {
        out.set(v, target);
    }
    Ok(out)
}
