use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Layer, Network, DEFAULT_LAYER};
use crate::error::{Error, Result};
use crate::rng::{self, open_unit};

/// Restart budget for configuration-model stub matching.
pub const CONFIGURATION_MAX_RESTARTS: usize = 1000;

pub fn generate_complete(n: usize) -> Result<Network> {
    if n == 0 {
        return Err(Error::invalid("complete graph needs n >= 1"));
    }
    let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Ok(Network::single_layer(Layer::from_pairs(
        DEFAULT_LAYER,
        n,
        pairs,
    )?))
}

/// G(n, p) with `p = target_mean_degree / (n - 1)`, sampled by geometric
/// skipping over the lower-triangular pair sequence.
pub fn generate_er(n: usize, target_mean_degree: f64, seed: u64) -> Result<Network> {
    if n == 0 {
        return Err(Error::invalid("Erdos-Renyi graph needs n >= 1"));
    }
    if !(target_mean_degree >= 0.0) || target_mean_degree > (n - 1) as f64 {
        return Err(Error::invalid(format!(
            "target mean degree {target_mean_degree} outside [0, {}]",
            n - 1
        )));
    }
    if n == 1 || target_mean_degree == 0.0 {
        return Ok(Network::single_layer(Layer::from_pairs(DEFAULT_LAYER, n, [])?));
    }
    let p = target_mean_degree / (n - 1) as f64;
    if p >= 1.0 {
        return generate_complete(n);
    }

    let mut rng = rng::stream(seed);
    let log_q = (1.0 - p).ln();
    let mut pairs = Vec::new();
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let skip = (open_unit(&mut rng).ln() / log_q).floor();
        w += 1 + skip as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            pairs.push((w as usize, v));
        }
    }
    Ok(Network::single_layer(Layer::from_pairs(
        DEFAULT_LAYER,
        n,
        pairs,
    )?))
}

/// Preferential attachment grown from a complete seed graph on
/// `m_attach + 1` nodes. Each new node draws `m_attach` distinct targets with
/// probability proportional to current degree (duplicates redrawn).
pub fn generate_ba(n: usize, m_attach: usize, seed: u64) -> Result<Network> {
    if m_attach == 0 || m_attach >= n {
        return Err(Error::invalid(format!(
            "Barabasi-Albert needs 1 <= m_attach < n, got m_attach={m_attach}, n={n}"
        )));
    }
    let mut rng = rng::stream(seed);
    let core = m_attach + 1;
    let mut pairs: Vec<(usize, usize)> = (0..core)
        .flat_map(|u| (u + 1..core).map(move |v| (u, v)))
        .collect();
    // one entry per edge endpoint, so a uniform draw is degree-proportional
    let mut stubs: Vec<usize> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    let mut targets = Vec::with_capacity(m_attach);
    for new in core..n {
        targets.clear();
        while targets.len() < m_attach {
            let t = stubs[rng.random_range(0..stubs.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            pairs.push((t, new));
            stubs.push(t);
            stubs.push(new);
        }
    }
    Ok(Network::single_layer(Layer::from_pairs(
        DEFAULT_LAYER,
        n,
        pairs,
    )?))
}

/// Simple graph with exactly the requested degree sequence.
///
/// Stubs are matched one at a time; each popped stub is paired with a
/// uniformly chosen admissible stub (different node, not yet adjacent). When
/// no admissible partner is left the whole matching restarts, up to
/// [`CONFIGURATION_MAX_RESTARTS`] times.
pub fn generate_configuration(degree_sequence: &[usize], seed: u64) -> Result<Network> {
    let n = degree_sequence.len();
    let total: usize = degree_sequence.iter().sum();
    if total % 2 != 0 {
        return Err(Error::invalid(format!(
            "degree sequence sums to {total}, which is odd"
        )));
    }
    if let Some(&max) = degree_sequence.iter().max() {
        if max >= n {
            return Err(Error::invalid(format!(
                "max degree {max} must be below node count {n}"
            )));
        }
    }
    let mut rng = rng::stream(seed);
    let initial: Vec<usize> = degree_sequence
        .iter()
        .enumerate()
        .flat_map(|(node, &d)| std::iter::repeat_n(node, d))
        .collect();

    'attempt: for _ in 0..=CONFIGURATION_MAX_RESTARTS {
        let mut stubs = initial.clone();
        stubs.shuffle(&mut rng);
        let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(total / 2);
        let mut pairs = Vec::with_capacity(total / 2);
        while let Some(u) = stubs.pop() {
            let admissible = |w: usize| w != u && !present.contains(&(u.min(w), u.max(w)));
            let mut pick = None;
            for _ in 0..16 {
                let j = rng.random_range(0..stubs.len().max(1));
                if j < stubs.len() && admissible(stubs[j]) {
                    pick = Some(j);
                    break;
                }
            }
            if pick.is_none() {
                let candidates: Vec<usize> =
                    (0..stubs.len()).filter(|&j| admissible(stubs[j])).collect();
                if candidates.is_empty() {
                    continue 'attempt;
                }
                pick = Some(candidates[rng.random_range(0..candidates.len())]);
            }
            let w = stubs.swap_remove(pick.unwrap());
            present.insert((u.min(w), u.max(w)));
            pairs.push((u, w));
        }
        return Ok(Network::single_layer(Layer::from_pairs(
            DEFAULT_LAYER,
            n,
            pairs,
        )?));
    }
    Err(Error::NonRealizableSequence(format!(
        "no simple matching found after {CONFIGURATION_MAX_RESTARTS} restarts"
    )))
}

/// Stacks two single-layer networks over the same `n` nodes into a
/// two-layer multiplex.
pub fn build_multiplex(
    layer_a: (&str, &Network),
    layer_b: (&str, &Network),
    n: usize,
) -> Result<Network> {
    for (name, net) in [layer_a, layer_b] {
        if net.n_nodes() != n {
            return Err(Error::invalid(format!(
                "layer {name} has {} nodes, multiplex expects {n}",
                net.n_nodes()
            )));
        }
    }
    let a = layer_a.1.with_layer_name(layer_a.0)?;
    let b = layer_b.1.with_layer_name(layer_b.0)?;
    Network::new(n, vec![a.layers[0].clone(), b.layers[0].clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(net: &Network) -> Vec<(usize, usize)> {
        net.layers()[0].edges().iter().map(|e| (e.u, e.v)).collect()
    }

    #[test]
    fn complete_edge_counts() {
        assert_eq!(generate_complete(4).unwrap().layers()[0].n_edges(), 6);
        assert_eq!(generate_complete(1).unwrap().layers()[0].n_edges(), 0);
        let k = generate_complete(1000).unwrap();
        assert_eq!(k.layers()[0].n_edges(), 499_500);
        assert_eq!(k.mean_degree(DEFAULT_LAYER).unwrap(), 999.0);
        assert!(matches!(generate_complete(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn er_basic_contracts() {
        let net = generate_er(1000, 10.0, 3).unwrap();
        let k = net.mean_degree(DEFAULT_LAYER).unwrap();
        assert!((k - 10.0).abs() <= 0.5, "mean degree {k}");
        assert_eq!(generate_er(10, 0.0, 1).unwrap().layers()[0].n_edges(), 0);
        assert_eq!(
            edge_set(&generate_er(300, 4.0, 9).unwrap()),
            edge_set(&generate_er(300, 4.0, 9).unwrap())
        );
        assert!(generate_er(10, 9.5, 1).is_err());
        assert_eq!(generate_er(6, 5.0, 1).unwrap().layers()[0].n_edges(), 15);
    }

    #[test]
    fn er_edge_count_within_four_sigma() {
        let n = 1000usize;
        let k = 10.0;
        let p = k / (n - 1) as f64;
        let pairs = (n * (n - 1) / 2) as f64;
        let (mean, sd) = (pairs * p, (pairs * p * (1.0 - p)).sqrt());
        for seed in 0..10 {
            let m = generate_er(n, k, seed).unwrap().layers()[0].n_edges() as f64;
            assert!((m - mean).abs() <= 4.0 * sd, "seed {seed}: {m} vs {mean}");
        }
    }

    #[test]
    fn ba_edge_count_and_seed_graph() {
        for (n, m) in [(1000, 5), (50, 1), (20, 3)] {
            let net = generate_ba(n, m, 11).unwrap();
            assert_eq!(net.layers()[0].n_edges(), m * (n - m - 1) + m * (m + 1) / 2);
        }
        let tiny = generate_ba(6, 5, 0).unwrap();
        assert_eq!(edge_set(&tiny), edge_set(&generate_complete(6).unwrap()));
        assert!(generate_ba(5, 5, 0).is_err());
        assert!(generate_ba(5, 0, 0).is_err());
    }

    #[test]
    fn configuration_realizes_sequence() {
        let mut seq = vec![10; 700];
        seq.extend(std::iter::repeat_n(2, 300));
        let net = generate_configuration(&seq, 5).unwrap();
        let l = &net.layers()[0];
        for (node, &d) in seq.iter().enumerate() {
            assert_eq!(l.degree(node), d);
        }
        assert_eq!(net.count_nodes_with_degree(DEFAULT_LAYER, 10).unwrap(), 700);

        let single = generate_configuration(&[1, 1], 0).unwrap();
        assert_eq!(edge_set(&single), vec![(0, 1)]);
        assert!(matches!(
            generate_configuration(&[3], 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn configuration_reports_unrealizable() {
        // even sum, but not graphical
        assert!(matches!(
            generate_configuration(&[3, 3, 1, 1], 0),
            Err(Error::NonRealizableSequence(_))
        ));
    }

    #[test]
    fn multiplex_checks_sizes() {
        let a = generate_er(500, 4.0, 1).unwrap();
        let b = generate_ba(500, 3, 2).unwrap();
        let mx = build_multiplex(("er", &a), ("ba", &b), 500).unwrap();
        assert_eq!(mx.layers().len(), 2);
        assert_eq!(mx.n_nodes(), 500);
        assert_eq!(mx.layer_names().collect::<Vec<_>>(), vec!["er", "ba"]);
        let c = generate_er(400, 4.0, 1).unwrap();
        assert!(build_multiplex(("er", &a), ("small", &c), 500).is_err());
        assert!(build_multiplex(("x", &a), ("x", &b), 500).is_err());
    }
}
