//! Edge-list text format.
//!
//! ```text
//! # comment
//! nodes 4
//! layer contact
//! 0 1 1 contact
//! 2 3 2.5 contact
//! ```
//!
//! `nodes N` must precede every edge line. `layer NAME` lines are optional
//! and only needed to keep edge-less layers and an explicit layer order;
//! otherwise layers appear in order of first use. Weights are written with
//! 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{Edge, Layer, Network};
use crate::error::{Error, Result};
use crate::fmt::g17;

pub fn write_edge_list<W: Write>(net: &Network, mut out: W) -> std::io::Result<()> {
    let mut buf = String::new();
    writeln!(buf, "nodes {}", net.n_nodes()).unwrap();
    for layer in net.layers() {
        writeln!(buf, "layer {}", layer.name()).unwrap();
    }
    for layer in net.layers() {
        for e in layer.edges() {
            writeln!(buf, "{} {} {} {}", e.u, e.v, g17(e.weight), layer.name()).unwrap();
        }
    }
    out.write_all(buf.as_bytes())
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_edge_list(net, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

pub fn parse_edge_list(text: &str) -> Result<Network> {
    let mut n_nodes: Option<usize> = None;
    let mut layers: Vec<(String, Vec<Edge>)> = Vec::new();
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["nodes", n] => {
                if n_nodes.is_some() {
                    return Err(parse_err(line_no, "repeated `nodes` header".into()));
                }
                let n = n
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad node count {n:?}")))?;
                n_nodes = Some(n);
            }
            ["layer", name] => {
                if !layers.iter().any(|(l, _)| l == name) {
                    layers.push((name.to_string(), Vec::new()));
                }
            }
            [u, v, w, name] => {
                let n = n_nodes
                    .ok_or_else(|| parse_err(line_no, "edge before `nodes` header".into()))?;
                let u: usize = u
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad node id {u:?}")))?;
                let v: usize = v
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad node id {v:?}")))?;
                let weight: f64 = w
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad weight {w:?}")))?;
                if u == v {
                    return Err(parse_err(line_no, format!("self-loop on node {u}")));
                }
                if u >= n || v >= n {
                    return Err(parse_err(
                        line_no,
                        format!("node id out of range 0..{n} in edge ({u}, {v})"),
                    ));
                }
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(parse_err(line_no, format!("weight {weight} must be > 0")));
                }
                let slot = match layers.iter().position(|(l, _)| l == name) {
                    Some(i) => i,
                    None => {
                        layers.push((name.to_string(), Vec::new()));
                        layers.len() - 1
                    }
                };
                layers[slot].1.push(Edge { u, v, weight });
            }
            _ => {
                return Err(parse_err(
                    line_no,
                    format!("expected `u v weight layer`, got {line:?}"),
                ))
            }
        }
    }

    let n = n_nodes.ok_or_else(|| parse_err(0, "missing `nodes N` header".into()))?;
    let layers = layers
        .into_iter()
        .map(|(name, edges)| Layer::new(name, n, edges))
        .collect::<Result<Vec<_>>>()?;
    Network::new(n, layers)
}
