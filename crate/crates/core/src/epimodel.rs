//! Generalized compartment models.
//!
//! A [`ModelSchema`] lists compartments plus two transition kinds: nodal
//! transitions fire spontaneously at a fixed rate, edge transitions are
//! induced by neighbors in an inducer compartment on one network layer. The
//! first compartment is the susceptible pool by convention; every built-in
//! follows it.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodalTransition {
    pub from: String,
    pub to: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeTransition {
    pub from: String,
    pub to: String,
    pub inducer: String,
    pub layer: String,
    pub rate_per_contact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSchema {
    pub compartments: Vec<String>,
    #[serde(rename = "nodal", default)]
    pub nodal_transitions: Vec<NodalTransition>,
    #[serde(rename = "edge", default)]
    pub edge_transitions: Vec<EdgeTransition>,
}

impl ModelSchema {
    /// Parses and checks everything that does not depend on a network.
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        let problems = schema.problems(None);
        if problems.is_empty() {
            Ok(schema)
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn compartment_index(&self, name: &str) -> Option<usize> {
        self.compartments.iter().position(|c| c == name)
    }

    pub fn require_compartment(&self, name: &str) -> Result<usize> {
        self.compartment_index(name)
            .ok_or_else(|| Error::invalid(format!("model has no compartment {name:?}")))
    }

    /// Compartment holding never-infected nodes.
    pub fn susceptible(&self) -> &str {
        &self.compartments[0]
    }

    /// True when no transition leaves `compartment`.
    pub fn is_absorbing(&self, compartment: &str) -> bool {
        !self.nodal_transitions.iter().any(|t| t.from == compartment)
            && !self.edge_transitions.iter().any(|t| t.from == compartment)
    }

    /// Every schema-level problem, plus layer references when a network is
    /// given.
    pub fn problems(&self, net: Option<&Network>) -> Vec<String> {
        let mut out = Vec::new();
        if self.compartments.is_empty() {
            out.push("model declares no compartments".to_string());
        }
        let mut seen = HashSet::new();
        for c in &self.compartments {
            if c.is_empty() {
                out.push("empty compartment name".to_string());
            }
            if !seen.insert(c.as_str()) {
                out.push(format!("duplicate compartment {c:?}"));
            }
        }
        let check_ref = |what: &str, name: &str, out: &mut Vec<String>| {
            if !seen.contains(name) {
                out.push(format!("{what} references undeclared compartment {name:?}"));
            }
        };
        for (i, t) in self.nodal_transitions.iter().enumerate() {
            let what = format!("nodal[{i}]");
            check_ref(&what, &t.from, &mut out);
            check_ref(&what, &t.to, &mut out);
            if t.from == t.to {
                out.push(format!("{what} has from = to = {:?}", t.from));
            }
            if !(t.rate >= 0.0 && t.rate.is_finite()) {
                out.push(format!("{what} has invalid rate {}", t.rate));
            }
        }
        for (i, t) in self.edge_transitions.iter().enumerate() {
            let what = format!("edge[{i}]");
            check_ref(&what, &t.from, &mut out);
            check_ref(&what, &t.to, &mut out);
            check_ref(&what, &t.inducer, &mut out);
            if t.from == t.to {
                out.push(format!("{what} has from = to = {:?}", t.from));
            }
            if !(t.rate_per_contact >= 0.0 && t.rate_per_contact.is_finite()) {
                out.push(format!("{what} has invalid rate {}", t.rate_per_contact));
            }
            if let Some(net) = net {
                if !net.has_layer(&t.layer) {
                    out.push(format!("{what} references unknown layer {:?}", t.layer));
                }
            }
        }
        out
    }
}

/// Checks the schema and its layer bindings against `net`, reporting all
/// problems at once.
pub fn validate_schema(schema: &ModelSchema, net: &Network) -> Result<()> {
    let problems = schema.problems(Some(net));
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

fn check_rates(rates: &[(&str, f64)]) -> Result<()> {
    for (name, r) in rates {
        if !(*r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("rate {name} = {r} must be finite and >= 0")));
        }
    }
    Ok(())
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn nodal(from: &str, to: &str, rate: f64) -> NodalTransition {
    NodalTransition {
        from: from.into(),
        to: to.into(),
        rate,
    }
}

fn edge(from: &str, to: &str, inducer: &str, layer: &str, rate: f64) -> EdgeTransition {
    EdgeTransition {
        from: from.into(),
        to: to.into(),
        inducer: inducer.into(),
        layer: layer.into(),
        rate_per_contact: rate,
    }
}

pub fn builtin_sir(beta: f64, gamma: f64, layer: &str) -> Result<ModelSchema> {
    check_rates(&[("beta", beta), ("gamma", gamma)])?;
    Ok(ModelSchema {
        compartments: names(&["S", "I", "R"]),
        nodal_transitions: vec![nodal("I", "R", gamma)],
        edge_transitions: vec![edge("S", "I", "I", layer, beta)],
    })
}

pub fn builtin_seir(beta: f64, sigma: f64, gamma: f64, layer: &str) -> Result<ModelSchema> {
    check_rates(&[("beta", beta), ("sigma", sigma), ("gamma", gamma)])?;
    Ok(ModelSchema {
        compartments: names(&["S", "E", "I", "R"]),
        nodal_transitions: vec![nodal("E", "I", sigma), nodal("I", "R", gamma)],
        edge_transitions: vec![edge("S", "E", "I", layer, beta)],
    })
}

pub fn builtin_sis(beta: f64, delta: f64, layer: &str) -> Result<ModelSchema> {
    check_rates(&[("beta", beta), ("delta", delta)])?;
    Ok(ModelSchema {
        compartments: names(&["S", "I"]),
        nodal_transitions: vec![nodal("I", "S", delta)],
        edge_transitions: vec![edge("S", "I", "I", layer, beta)],
    })
}

/// SIR with an isolated vaccinated compartment `V`.
pub fn builtin_sirv(beta: f64, gamma: f64, layer: &str) -> Result<ModelSchema> {
    let mut m = builtin_sir(beta, gamma, layer)?;
    m.compartments.push("V".into());
    Ok(m)
}

/// Competitive SI1I2S: two exclusive SIS viruses, each spreading on its own
/// layer.
pub fn builtin_bivirus(
    beta1: f64,
    delta1: f64,
    layer1: &str,
    beta2: f64,
    delta2: f64,
    layer2: &str,
) -> Result<ModelSchema> {
    check_rates(&[
        ("beta1", beta1),
        ("delta1", delta1),
        ("beta2", beta2),
        ("delta2", delta2),
    ])?;
    Ok(ModelSchema {
        compartments: names(&["S", "I1", "I2"]),
        nodal_transitions: vec![nodal("I1", "S", delta1), nodal("I2", "S", delta2)],
        edge_transitions: vec![
            edge("S", "I1", "I1", layer1, beta1),
            edge("S", "I2", "I2", layer2, beta2),
        ],
    })
}

/// Per-node compartment assignment with running totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStateVector {
    state: Vec<usize>,
    counts: Vec<usize>,
}

impl NodeStateVector {
    /// Every node in `compartment`.
    pub fn uniform(n_nodes: usize, n_compartments: usize, compartment: usize) -> Result<Self> {
        if compartment >= n_compartments {
            return Err(Error::invalid(format!(
                "compartment index {compartment} out of range 0..{n_compartments}"
            )));
        }
        let mut counts = vec![0; n_compartments];
        counts[compartment] = n_nodes;
        Ok(NodeStateVector {
            state: vec![compartment; n_nodes],
            counts,
        })
    }

    pub fn from_states(state: Vec<usize>, n_compartments: usize) -> Result<Self> {
        let mut counts = vec![0; n_compartments];
        for (node, &c) in state.iter().enumerate() {
            if c >= n_compartments {
                return Err(Error::invalid(format!(
                    "node {node} in compartment {c}, only {n_compartments} exist"
                )));
            }
            counts[c] += 1;
        }
        Ok(NodeStateVector { state, counts })
    }

    pub fn n_nodes(&self) -> usize {
        self.state.len()
    }

    pub fn n_compartments(&self) -> usize {
        self.counts.len()
    }

    pub fn state(&self) -> &[usize] {
        &self.state
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn get(&self, node: usize) -> usize {
        self.state[node]
    }

    pub fn set(&mut self, node: usize, compartment: usize) {
        let old = self.state[node];
        self.counts[old] -= 1;
        self.counts[compartment] += 1;
        self.state[node] = compartment;
    }

    pub fn nodes_in(&self, compartment: usize) -> impl Iterator<Item = usize> + '_ {
        self.state
            .iter()
            .enumerate()
            .filter(move |&(_, &c)| c == compartment)
            .map(|(v, _)| v)
    }
}
