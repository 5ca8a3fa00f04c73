use super::{Layer, Network};
use crate::error::Result;

const MAX_ITERATIONS: usize = 1_000_000;

/// Largest eigenvalue of a layer's weighted adjacency matrix.
///
/// Returns 0 for a layer without edges.
pub fn spectral_radius(net: &Network, layer: &str, tol: f64) -> Result<f64> {
    let l = net.layer(layer)?;
    Ok(layer_spectral_radius(l, None, tol))
}

/// Spectral radius of the subgraph induced on nodes where `removed` is
/// false (all nodes when `removed` is `None`).
///
/// Power iteration on `A + I` from a positive start vector; the shift keeps
/// the Perron eigenvalue strictly dominant on bipartite graphs. Iteration
/// stops once the residual `|Ax - theta x|` of the Rayleigh quotient is below
/// `tol`, which bounds the eigenvalue error for a symmetric matrix.
pub(crate) fn layer_spectral_radius(layer: &Layer, removed: Option<&[bool]>, tol: f64) -> f64 {
    let n = layer.n_nodes();
    let keep = |v: usize| removed.is_none_or(|r| !r[v]);
    let active_edges = layer
        .edges()
        .iter()
        .filter(|e| keep(e.u) && keep(e.v))
        .count();
    if active_edges == 0 {
        return 0.0;
    }

    let mut x: Vec<f64> = (0..n).map(|v| if keep(v) { 1.0 } else { 0.0 }).collect();
    normalize(&mut x);
    let mut ax = vec![0.0; n];
    let mut theta = 0.0;
    for _ in 0..MAX_ITERATIONS {
        multiply(layer, &keep, &x, &mut ax);
        theta = dot(&x, &ax);
        let residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, yi)| (yi - theta * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            break;
        }
        for (xi, yi) in x.iter_mut().zip(&ax) {
            *xi += yi;
        }
        normalize(&mut x);
    }
    theta.max(0.0)
}

fn multiply(layer: &Layer, keep: &impl Fn(usize) -> bool, x: &[f64], out: &mut [f64]) {
    for (v, slot) in out.iter_mut().enumerate() {
        *slot = if keep(v) {
            layer
                .neighbors(v)
                .filter(|&(w, _)| keep(w))
                .map(|(w, weight)| weight * x[w])
                .sum()
        } else {
            0.0
        };
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}
