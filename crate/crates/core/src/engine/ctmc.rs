use rand::Rng;

use super::sumtree::SumTree;
use super::{count_initially_immune, Event, GridRecorder, Trajectory};
use crate::epimodel::{validate_schema, ModelSchema, NodeStateVector};
use crate::error::{Error, Result};
use crate::netgen::Network;
use crate::rng::open_unit;

#[derive(Debug, Clone, Copy)]
pub struct CtmcOptions<'a> {
    pub t_max: f64,
    /// Strictly increasing sample times in `[0, t_max]`.
    pub grid: &'a [f64],
    pub record_events: bool,
}

/// Schema resolved to compartment and layer indices.
struct CompiledModel {
    nodal: Vec<Vec<(usize, f64)>>,
    /// `(to, channel, rate_per_contact)` per source compartment.
    edge: Vec<Vec<(usize, usize, f64)>>,
    /// A channel is one `(layer, inducer)` pair; its pressure on a node is the
    /// summed weight of neighbors on that layer currently in the inducer.
    channel_layer: Vec<usize>,
    channels_by_inducer: Vec<Vec<usize>>,
}

impl CompiledModel {
    fn new(model: &ModelSchema, net: &Network) -> Result<Self> {
        validate_schema(model, net)?;
        let idx = |name: &str| model.compartment_index(name).expect("validated");
        let k = model.compartments.len();
        let mut nodal = vec![Vec::new(); k];
        for t in &model.nodal_transitions {
            if t.rate > 0.0 {
                nodal[idx(&t.from)].push((idx(&t.to), t.rate));
            }
        }
        let mut channels: Vec<(usize, usize)> = Vec::new();
        let mut edge = vec![Vec::new(); k];
        for t in &model.edge_transitions {
            if t.rate_per_contact <= 0.0 {
                continue;
            }
            let key = (net.layer_index(&t.layer).expect("validated"), idx(&t.inducer));
            let ch = match channels.iter().position(|&c| c == key) {
                Some(ch) => ch,
                None => {
                    channels.push(key);
                    channels.len() - 1
                }
            };
            edge[idx(&t.from)].push((idx(&t.to), ch, t.rate_per_contact));
        }
        let mut channels_by_inducer = vec![Vec::new(); k];
        for (ch, &(_, inducer)) in channels.iter().enumerate() {
            channels_by_inducer[inducer].push(ch);
        }
        Ok(CompiledModel {
            nodal,
            edge,
            channel_layer: channels.iter().map(|c| c.0).collect(),
            channels_by_inducer,
        })
    }
}

pub(crate) fn check_grid(grid: &[f64], end: f64) -> Result<()> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("sample grid must be strictly increasing"));
    }
    if grid.iter().any(|&t| !(0.0..=end).contains(&t)) {
        return Err(Error::invalid(format!("sample grid must lie within [0, {end}]")));
    }
    Ok(())
}

struct State<'a> {
    net: &'a Network,
    model: CompiledModel,
    state: Vec<usize>,
    counts: Vec<usize>,
    pressure: Vec<Vec<f64>>,
    rates: SumTree,
}

impl State<'_> {
    fn node_rate(&self, v: usize) -> f64 {
        let s = self.state[v];
        let nodal: f64 = self.model.nodal[s].iter().map(|&(_, r)| r).sum();
        let induced: f64 = self.model.edge[s]
            .iter()
            .map(|&(_, ch, r)| r * self.pressure[ch][v])
            .sum();
        nodal + induced
    }

    fn shift_pressure(&mut self, v: usize, compartment: usize, sign: f64) {
        for &ch in &self.model.channels_by_inducer[compartment] {
            let layer = &self.net.layers()[self.model.channel_layer[ch]];
            let pressure = &mut self.pressure[ch];
            for (nb, w) in layer.neighbors(v) {
                let p = &mut pressure[nb];
                *p += sign * w;
                // cancellation residue with non-integer weights
                if *p < 1e-12 {
                    *p = 0.0;
                }
            }
        }
    }

    fn refresh_neighbors(&mut self, v: usize, compartment: usize) {
        for &ch in &self.model.channels_by_inducer[compartment] {
            let layer = &self.net.layers()[self.model.channel_layer[ch]];
            for (nb, _) in layer.neighbors(v) {
                if !self.model.edge[self.state[nb]].is_empty() {
                    let r = self.node_rate(nb);
                    self.rates.set(nb, r);
                }
            }
        }
    }

    fn apply(&mut self, v: usize, to: usize) {
        let from = self.state[v];
        self.state[v] = to;
        self.counts[from] -= 1;
        self.counts[to] += 1;
        self.shift_pressure(v, from, -1.0);
        self.shift_pressure(v, to, 1.0);
        let r = self.node_rate(v);
        self.rates.set(v, r);
        self.refresh_neighbors(v, from);
        self.refresh_neighbors(v, to);
    }

    /// Picks the transition of node `v` whose rate interval contains
    /// `target` in `[0, rate(v))`.
    fn pick_transition(&self, v: usize, mut target: f64) -> usize {
        let s = self.state[v];
        let mut last = None;
        for &(to, r) in &self.model.nodal[s] {
            if target < r {
                return to;
            }
            target -= r;
            last = Some(to);
        }
        for &(to, ch, r) in &self.model.edge[s] {
            let rate = r * self.pressure[ch][v];
            if rate > 0.0 {
                if target < rate {
                    return to;
                }
                target -= rate;
                last = Some(to);
            }
        }
        last.expect("selected node has a positive rate")
    }
}

/// Samples one exact continuous-time path.
///
/// Every enabled transition is an exponential clock: nodal ones at their
/// declared rate, edge-based ones at `rate_per_contact` times the summed
/// weight of inducer neighbors on the bound layer. The run stops at `t_max`
/// or as soon as the total rate is zero.
pub fn run_ctmc<R: Rng + ?Sized>(
    net: &Network,
    model: &ModelSchema,
    initial: &NodeStateVector,
    options: CtmcOptions<'_>,
    rng: &mut R,
) -> Result<Trajectory> {
    let compiled = CompiledModel::new(model, net)?;
    let n = net.n_nodes();
    if initial.n_nodes() != n || initial.n_compartments() != model.compartments.len() {
        return Err(Error::invalid(format!(
            "initial state covers {} nodes / {} compartments, expected {n} / {}",
            initial.n_nodes(),
            initial.n_compartments(),
            model.compartments.len()
        )));
    }
    if !(options.t_max > 0.0) {
        return Err(Error::invalid(format!("t_max {} must be > 0", options.t_max)));
    }
    check_grid(options.grid, options.t_max)?;

    let n_channels = compiled.channel_layer.len();
    let mut sim = State {
        net,
        model: compiled,
        state: initial.state().to_vec(),
        counts: initial.counts().to_vec(),
        pressure: vec![vec![0.0; n]; n_channels],
        rates: SumTree::new(n),
    };
    for v in 0..n {
        sim.shift_pressure(v, sim.state[v], 1.0);
    }
    for v in 0..n {
        let r = sim.node_rate(v);
        sim.rates.set(v, r);
    }

    let mut recorder = GridRecorder::new(options.grid);
    let mut events = options.record_events.then(Vec::new);
    let mut n_events = 0;
    let mut t = 0.0;
    let mut last_event_time = 0.0;
    loop {
        let total = sim.rates.total();
        if !(total > 0.0) {
            break;
        }
        let t_next = t - open_unit(rng).ln() / total;
        if t_next > options.t_max {
            break;
        }
        recorder.advance_to(t_next, &sim.counts);
        let v = sim.rates.find(rng.random::<f64>() * total);
        let to = sim.pick_transition(v, rng.random::<f64>() * sim.rates.get(v));
        let from = sim.state[v];
        sim.apply(v, to);
        t = t_next;
        last_event_time = t;
        n_events += 1;
        if let Some(ev) = events.as_mut() {
            ev.push(Event {
                time: t,
                node: v,
                from,
                to,
            });
        }
    }

    Ok(Trajectory {
        n_nodes: n,
        initial_counts: initial.counts().to_vec(),
        initially_immune: count_initially_immune(model, initial.counts()),
        events,
        n_events,
        grid: options.grid.to_vec(),
        grid_counts: recorder.finish(&sim.counts),
        final_counts: sim.counts,
        last_event_time,
    })
}
