//! Batch statistics: uncertainty bands, peaks, final sizes, outbreak
//! probability, duration and bi-virus regimes.

mod artifacts;

use serde::Serialize;

use crate::engine::{BatchResult, Trajectory};
use crate::error::{Error, Result};

pub use artifacts::{
    read_trajectories_csv, render_svg, write_aggregate_csv, write_events_csv,
    write_trajectories_csv,
};

/// Final-size fraction at or above which a realization is a major outbreak.
pub const DEFAULT_OUTBREAK_THRESHOLD: f64 = 0.1;
/// End-of-run prevalence below which a virus counts as extinct.
pub const DEFAULT_REGIME_EPSILON: f64 = 0.01;

/// Per-compartment mean and population standard deviation at each grid time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSeries {
    pub grid: Vec<f64>,
    pub compartments: Vec<String>,
    /// `mean[t][c]`
    pub mean: Vec<Vec<f64>>,
    /// `std[t][c]`, divide-by-n estimator.
    pub std: Vec<Vec<f64>>,
    pub n_realizations: usize,
    pub n_nodes: usize,
}

impl AggregateSeries {
    pub fn compartment_index(&self, name: &str) -> Result<usize> {
        self.compartments
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("unknown compartment {name:?}")))
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate_batch(batch: &BatchResult) -> Result<AggregateSeries> {
    if batch.trajectories.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty batch"));
    }
    let k = batch.compartments.len();
    let mut mean = Vec::with_capacity(batch.grid.len());
    let mut std = Vec::with_capacity(batch.grid.len());
    for t in 0..batch.grid.len() {
        let mut m_row = Vec::with_capacity(k);
        let mut s_row = Vec::with_capacity(k);
        for c in 0..k {
            let (m, s) = mean_std(batch.trajectories.iter().map(|tr| tr.grid_counts[t][c] as f64));
            m_row.push(m);
            s_row.push(s);
        }
        mean.push(m_row);
        std.push(s_row);
    }
    Ok(AggregateSeries {
        grid: batch.grid.clone(),
        compartments: batch.compartments.clone(),
        mean,
        std,
        n_realizations: batch.trajectories.len(),
        n_nodes: batch.n_nodes,
    })
}

/// Grid time and value of the largest mean of `compartment`, earliest on
/// ties.
pub fn peak_metrics(series: &AggregateSeries, compartment: &str) -> Result<(f64, f64)> {
    let c = series.compartment_index(compartment)?;
    let mut best: Option<(f64, f64)> = None;
    for (t, row) in series.grid.iter().zip(&series.mean) {
        if best.is_none_or(|(_, v)| row[c] > v) {
            best = Some((*t, row[c]));
        }
    }
    best.ok_or_else(|| Error::invalid("series has an empty grid"))
}

pub fn final_size(traj: &Trajectory) -> usize {
    traj.final_size()
}

pub fn epidemic_duration(traj: &Trajectory) -> f64 {
    traj.duration()
}

fn is_major(traj: &Trajectory, threshold_fraction: f64) -> bool {
    traj.final_size() as f64 >= threshold_fraction * traj.n_nodes as f64
}

/// Fraction of realizations whose final size reaches
/// `threshold_fraction * n`.
pub fn outbreak_probability(batch: &BatchResult, threshold_fraction: f64) -> f64 {
    if batch.trajectories.is_empty() {
        return 0.0;
    }
    let major = batch
        .trajectories
        .iter()
        .filter(|t| is_major(t, threshold_fraction))
        .count();
    major as f64 / batch.trajectories.len() as f64
}

/// Mean final size over major outbreaks only; `None` when there are none.
pub fn conditional_final_size_mean(batch: &BatchResult, threshold_fraction: f64) -> Option<f64> {
    let major: Vec<f64> = batch
        .trajectories
        .iter()
        .filter(|t| is_major(t, threshold_fraction))
        .map(|t| t.final_size() as f64)
        .collect();
    (!major.is_empty()).then(|| major.iter().sum::<f64>() / major.len() as f64)
}

/// Signed relative deviation of the major-outbreak mean final fraction from
/// an analytic prediction. A batch without major outbreaks counts as 0.
pub fn compare_to_analytic(batch: &BatchResult, analytic_fraction: f64) -> Result<f64> {
    if !(analytic_fraction > 0.0 && analytic_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "analytic fraction {analytic_fraction} outside (0, 1]"
        )));
    }
    let observed = conditional_final_size_mean(batch, DEFAULT_OUTBREAK_THRESHOLD).unwrap_or(0.0)
        / batch.n_nodes as f64;
    Ok((observed - analytic_fraction) / analytic_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    #[serde(rename = "dominance-1")]
    Dominance1,
    #[serde(rename = "dominance-2")]
    Dominance2,
    Coexistence,
    Extinction,
}

/// Mean end-of-run prevalence of `I1` and `I2`.
pub fn bivirus_prevalence(batch: &BatchResult) -> Result<(f64, f64)> {
    let (Some(i1), Some(i2)) = (batch.compartment_index("I1"), batch.compartment_index("I2")) else {
        return Err(Error::invalid("batch has no I1/I2 compartments"));
    };
    if batch.trajectories.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let r = batch.trajectories.len() as f64;
    let n = batch.n_nodes as f64;
    let p = |c: usize| {
        batch
            .trajectories
            .iter()
            .map(|t| t.final_counts[c] as f64 / n)
            .sum::<f64>()
            / r
    };
    Ok((p(i1), p(i2)))
}

pub fn regime_from_prevalence(p1: f64, p2: f64, epsilon: f64) -> Regime {
    match (p1 >= epsilon, p2 >= epsilon) {
        (false, false) => Regime::Extinction,
        (true, false) => Regime::Dominance1,
        (false, true) => Regime::Dominance2,
        (true, true) => Regime::Coexistence,
    }
}

pub fn classify_bivirus(batch: &BatchResult, epsilon: f64) -> Result<Regime> {
    let (p1, p2) = bivirus_prevalence(batch)?;
    Ok(regime_from_prevalence(p1, p2, epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n_nodes: usize,
    pub n_realizations: usize,
    pub peak_compartment: String,
    pub peak_time: f64,
    pub peak_size: f64,
    pub final_size_mean: f64,
    pub final_size_std: f64,
    pub final_size_conditional_mean: Option<f64>,
    pub outbreak_threshold: f64,
    pub outbreak_probability: f64,
    pub duration_mean: f64,
    pub analytic_final_size: Option<f64>,
    pub analytic_deviation: Option<f64>,
    pub prevalence_end: Option<[f64; 2]>,
    pub regime: Option<Regime>,
    pub std_estimator: &'static str,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub peak_compartment: String,
    pub outbreak_threshold: f64,
    pub analytic_final_size: Option<f64>,
    /// Classify bi-virus regimes with this epsilon.
    pub regime_epsilon: Option<f64>,
}

impl MetricsReport {
    pub fn from_batch(batch: &BatchResult, series: &AggregateSeries, opts: &ReportOptions) -> Result<Self> {
        let (peak_time, peak_size) = peak_metrics(series, &opts.peak_compartment)?;
        let sizes = batch.final_sizes();
        let (final_size_mean, final_size_std) = mean_std(sizes.iter().map(|&s| s as f64));
        let (duration_mean, _) = mean_std(batch.trajectories.iter().map(Trajectory::duration));
        let analytic_deviation = opts
            .analytic_final_size
            .map(|a| compare_to_analytic(batch, a))
            .transpose()?;
        let (prevalence_end, regime) = match opts.regime_epsilon {
            Some(eps) => {
                let (p1, p2) = bivirus_prevalence(batch)?;
                (Some([p1, p2]), Some(regime_from_prevalence(p1, p2, eps)))
            }
            None => (None, None),
        };
        Ok(MetricsReport {
            n_nodes: batch.n_nodes,
            n_realizations: batch.n_realizations(),
            peak_compartment: opts.peak_compartment.clone(),
            peak_time,
            peak_size,
            final_size_mean,
            final_size_std,
            final_size_conditional_mean: conditional_final_size_mean(batch, opts.outbreak_threshold),
            outbreak_threshold: opts.outbreak_threshold,
            outbreak_probability: outbreak_probability(batch, opts.outbreak_threshold),
            duration_mean,
            analytic_final_size: opts.analytic_final_size,
            analytic_deviation,
            prevalence_end,
            regime,
            std_estimator: "population",
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
