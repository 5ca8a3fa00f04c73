//! Mean-field relations between intrinsic reproduction numbers, per-contact
//! rates, thresholds and immunization levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{spectral::layer_spectral_radius, Network, SPECTRAL_TOL};

/// Which network quantity stands in for the contact count in `R0 = beta * k / gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Mean weighted degree (mean degree on unweighted layers).
    MeanDegree,
    /// Largest adjacency eigenvalue.
    Spectral,
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-degree" => Ok(Basis::MeanDegree),
            "spectral" => Ok(Basis::Spectral),
            other => Err(Error::invalid(format!(
                "unknown basis {other:?} (expected mean-degree or spectral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub r0: f64,
    pub per_contact_rate: f64,
    pub recovery_rate: f64,
    pub basis: Basis,
    pub reference_quantity: f64,
}

impl CalibrationReport {
    pub fn from_reference(r0: f64, gamma: f64, basis: Basis, reference: f64) -> Result<Self> {
        if !(r0 >= 0.0 && r0.is_finite()) {
            return Err(Error::invalid(format!("r0 {r0} must be >= 0")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma {gamma} must be > 0")));
        }
        if !(reference > 0.0 && reference.is_finite()) {
            return Err(Error::DegenerateNetwork(format!(
                "reference quantity {reference} must be positive"
            )));
        }
        Ok(CalibrationReport {
            r0,
            per_contact_rate: r0 * gamma / reference,
            recovery_rate: gamma,
            basis,
            reference_quantity: reference,
        })
    }

    /// Reproduction number implied by the calibrated rate.
    pub fn implied_r0(&self) -> f64 {
        self.per_contact_rate * self.reference_quantity / self.recovery_rate
    }
}

/// Per-contact transmission rate giving intrinsic `r0` on a layer.
pub fn per_contact_rate(
    r0: f64,
    gamma: f64,
    net: &Network,
    layer: &str,
    basis: Basis,
) -> Result<CalibrationReport> {
    let reference = match basis {
        Basis::MeanDegree => net.mean_strength(layer)?,
        Basis::Spectral => crate::netgen::spectral_radius(net, layer, SPECTRAL_TOL)?,
    };
    CalibrationReport::from_reference(r0, gamma, basis, reference)
}

/// Largest root of `z = 1 - exp(-r0 z)` by bisection; 0 when `r0 <= 1`.
pub fn final_size_fraction(r0: f64, tol: f64) -> f64 {
    if !(r0 > 1.0) {
        return 0.0;
    }
    let f = |z: f64| z - 1.0 + (-r0 * z).exp();
    let (mut lo, mut hi) = (1e-9_f64, 1.0_f64);
    if f(lo) >= 0.0 {
        // root lies below the bracket
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol && hi - lo <= tol {
            return mid;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub const FINAL_SIZE_TOL: f64 = 1e-8;

/// Static-network threshold `gamma / lambda_max`.
pub fn epidemic_threshold(gamma: f64, lambda_max: f64) -> Result<f64> {
    if !(lambda_max > 0.0) {
        return Err(Error::invalid(format!("lambda_max {lambda_max} must be > 0")));
    }
    Ok(gamma / lambda_max)
}

/// Per-contact threshold on an activity-driven network,
/// `gamma / (m (<a> + sqrt(<a^2>)))`.
pub fn activity_driven_threshold(gamma: f64, m: usize, a_mean: f64, a2_mean: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("edges per activation must be >= 1"));
    }
    if !(gamma > 0.0 && a_mean > 0.0 && a2_mean > 0.0) {
        return Err(Error::invalid(format!(
            "gamma, <a>, <a^2> must be positive (got {gamma}, {a_mean}, {a2_mean})"
        )));
    }
    Ok(gamma / (m as f64 * (a_mean + a2_mean.sqrt())))
}

/// Exact per-step activation probability `1 - exp(-alpha dt)`.
pub fn activation_probability(alpha: f64, dt: f64) -> f64 {
    -(-alpha * dt).exp_m1()
}

/// Random-immunization herd threshold `max(0, 1 - 1/r0)`.
pub fn herd_immunity_random(r0: f64) -> f64 {
    (1.0 - 1.0 / r0).max(0.0)
}

/// Relative margin below 1 an effective reproduction number must clear to
/// count as subcritical; absorbs the eigenvalue tolerance at exact ties.
pub const SUBCRITICAL_MARGIN: f64 = 1e-9;

pub fn is_subcritical(re: f64) -> bool {
    re < 1.0 - SUBCRITICAL_MARGIN
}

/// `beta * lambda_max(unvaccinated subgraph) / gamma`.
pub fn residual_reproduction(
    net: &Network,
    layer: &str,
    vaccinated: &[usize],
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    let l = net.layer(layer)?;
    let mut removed = vec![false; net.n_nodes()];
    for &v in vaccinated {
        if v >= net.n_nodes() {
            return Err(Error::invalid(format!("vaccinated node {v} out of range")));
        }
        removed[v] = true;
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma {gamma} must be > 0")));
    }
    Ok(beta * layer_spectral_radius(l, Some(&removed), 1e-12) / gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum TargetPolicy {
    /// All nodes, highest degree first.
    TopDegree,
    /// Only nodes of exactly degree `k`.
    DegreeEquals { k: usize },
}

impl TargetPolicy {
    /// Eligible nodes in removal order: degree descending, ties by id.
    pub fn ordering(&self, net: &Network, layer: &str) -> Result<Vec<usize>> {
        let order = net.nodes_by_degree(layer)?;
        Ok(match *self {
            TargetPolicy::TopDegree => order,
            TargetPolicy::DegreeEquals { k } => {
                let l = net.layer(layer)?;
                order.into_iter().filter(|&v| l.degree(v) == k).collect()
            }
        })
    }
}

/// Smallest number of policy-ordered removals that pushes the residual
/// reproduction number below 1.
pub fn targeted_vaccination_count(
    net: &Network,
    layer: &str,
    beta: f64,
    gamma: f64,
    policy: TargetPolicy,
) -> Result<usize> {
    let order = policy.ordering(net, layer)?;
    let re_after = |c: usize| residual_reproduction(net, layer, &order[..c], beta, gamma);
    if !is_subcritical(re_after(order.len())?) {
        return Err(Error::InfeasiblePolicy(format!(
            "removing all {} eligible nodes leaves Re >= 1",
            order.len()
        )));
    }
    // Re is non-increasing in the prefix length
    let (mut lo, mut hi) = (0usize, order.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if is_subcritical(re_after(mid)?) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{generate_complete, generate_configuration, Layer, DEFAULT_LAYER};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    /// Bisection on `z - 1 + exp(-r0 z)` written independently of the
    /// solver above.
    fn bisection_oracle(r0: f64) -> f64 {
        let g = |z: f64| z - 1.0 + (-r0 * z).exp();
        let (mut a, mut b) = (1e-6, 1.0);
        for _ in 0..100 {
            let m = (a + b) / 2.0;
            if g(a) * g(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn per_contact_rate_examples() {
        let r = CalibrationReport::from_reference(3.0, 0.1, Basis::MeanDegree, 10.0).unwrap();
        assert!((r.per_contact_rate - 0.03).abs() < 1e-15);
        let zero = CalibrationReport::from_reference(0.0, 0.1, Basis::MeanDegree, 10.0).unwrap();
        assert_eq!(zero.per_contact_rate, 0.0);

        let k = generate_complete(1000).unwrap();
        let r = per_contact_rate(2.5, 0.1, &k, DEFAULT_LAYER, Basis::MeanDegree).unwrap();
        assert_eq!(r.reference_quantity, 999.0);
        assert!((r.per_contact_rate - 2.5025e-4).abs() < 1e-8);
        let s = per_contact_rate(2.5, 0.1, &k, DEFAULT_LAYER, Basis::Spectral).unwrap();
        assert!((s.reference_quantity - 999.0).abs() < 1e-6);
    }

    #[test]
    fn empty_layer_is_degenerate() {
        let net = Network::single_layer(Layer::from_pairs("c", 4, []).unwrap());
        for basis in [Basis::MeanDegree, Basis::Spectral] {
            assert!(matches!(
                per_contact_rate(2.0, 0.1, &net, "c", basis),
                Err(Error::DegenerateNetwork(_))
            ));
        }
    }

    #[test]
    fn final_size_values() {
        assert!((final_size_fraction(3.0, FINAL_SIZE_TOL) - 0.9405).abs() < 1e-4);
        assert_eq!(final_size_fraction(0.5, FINAL_SIZE_TOL), 0.0);
        assert_eq!(final_size_fraction(1.0, FINAL_SIZE_TOL), 0.0);
        let oracle = bisection_oracle(2.5);
        assert!((oracle - 0.8926).abs() < 1e-4);
        assert!((final_size_fraction(2.5, FINAL_SIZE_TOL) - oracle).abs() < 1e-6);
    }

    #[test]
    fn thresholds() {
        assert_eq!(epidemic_threshold(1.0, 10.0).unwrap(), 0.1);
        assert!((epidemic_threshold(0.1, 1000.0).unwrap() - 1e-4).abs() < 1e-18);
        assert!(epidemic_threshold(1.0, 0.0).is_err());

        let c = activity_driven_threshold(1.0, 5, 0.1, 0.01).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let c10 = activity_driven_threshold(1.0, 10, 0.1, 0.01).unwrap();
        assert!((c10 - c / 2.0).abs() < 1e-12);
        assert!(activity_driven_threshold(1.0, 0, 0.1, 0.01).is_err());
    }

    #[test]
    fn activation_probability_values() {
        assert!((activation_probability(3.0, 1.0) - 0.9502).abs() < 1e-4);
        assert_eq!(activation_probability(0.0, 1.0), 0.0);
        assert!((activation_probability(0.1, 1.0) - 0.09516).abs() < 1e-5);
    }

    #[test]
    fn herd_immunity_values() {
        assert!((herd_immunity_random(3.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(herd_immunity_random(1.0), 0.0);
        assert!((herd_immunity_random(2.5) - 0.6).abs() < 1e-15);
        assert_eq!(herd_immunity_random(0.5), 0.0);
    }

    #[test]
    fn residual_reproduction_examples() {
        let k5 = generate_complete(5).unwrap();
        let (b, g) = (0.2, 0.1);
        assert_eq!(residual_reproduction(&k5, DEFAULT_LAYER, &[0, 1, 2, 3, 4], b, g).unwrap(), 0.0);
        assert!((residual_reproduction(&k5, DEFAULT_LAYER, &[], b, g).unwrap() - 8.0).abs() < 1e-9);

        // dense oracle for the residual K_3
        let mut a = DMatrix::<f64>::zeros(3, 3);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        let lambda = a.symmetric_eigen().eigenvalues.max();
        let re = residual_reproduction(&k5, DEFAULT_LAYER, &[3, 1], b, g).unwrap();
        assert!((re - b * lambda / g).abs() < 1e-9);
        assert!(residual_reproduction(&k5, "x", &[], b, g).is_err());
    }

    #[test]
    fn targeted_counts() {
        let star = Network::single_layer(Layer::from_pairs("s", 11, (1..=10).map(|v| (0, v))).unwrap());
        assert_eq!(targeted_vaccination_count(&star, "s", 10.0, 1.0, TargetPolicy::TopDegree).unwrap(), 1);

        let k6 = generate_complete(6).unwrap();
        assert_eq!(
            targeted_vaccination_count(&k6, DEFAULT_LAYER, 0.5, 1.0, TargetPolicy::TopDegree).unwrap(),
            4
        );

        let mut seq = vec![10; 700];
        seq.extend(std::iter::repeat_n(2, 300));
        let net = generate_configuration(&seq, 5).unwrap();
        let cal = per_contact_rate(3.0, 0.1, &net, DEFAULT_LAYER, Basis::Spectral).unwrap();
        let policy = TargetPolicy::DegreeEquals { k: 10 };
        let (beta, gamma) = (cal.per_contact_rate, 0.1);
        let c = targeted_vaccination_count(&net, DEFAULT_LAYER, beta, gamma, policy).unwrap();
        assert!(c <= 700);
        let order = policy.ordering(&net, DEFAULT_LAYER).unwrap();
        let re = |c: usize| residual_reproduction(&net, DEFAULT_LAYER, &order[..c], beta, gamma).unwrap();
        assert!(is_subcritical(re(c)));
        assert!(c == 0 || !is_subcritical(re(c - 1)));
    }

    #[test]
    fn infeasible_policy_reported() {
        // no degree-7 nodes in K_6 and Re > 1
        let k6 = generate_complete(6).unwrap();
        assert!(matches!(
            targeted_vaccination_count(&k6, DEFAULT_LAYER, 1.0, 1.0, TargetPolicy::DegreeEquals { k: 7 }),
            Err(Error::InfeasiblePolicy(_))
        ));
    }

    proptest! {
        #[test]
        fn final_size_residual_and_monotone(r0 in 1.01f64..20.0, dr in 0.0f64..2.0) {
            let z = final_size_fraction(r0, FINAL_SIZE_TOL);
            prop_assert!((z - 1.0 + (-r0 * z).exp()).abs() <= FINAL_SIZE_TOL);
            prop_assert!(z > 0.0);
            prop_assert!(final_size_fraction(r0 + dr, FINAL_SIZE_TOL) >= z - 1e-12);
        }

        #[test]
        fn activation_probability_bounds(alpha in 0.0f64..10.0, da in 0.001f64..5.0, dt in 0.01f64..3.0) {
            // alpha * dt stays below 30, where 1 - exp(-x) is still < 1 in f64
            let p = activation_probability(alpha, dt);
            prop_assert!((0.0..1.0).contains(&p));
            prop_assert!(activation_probability(alpha + da, dt) > p || p > 1.0 - 1e-15);
            if alpha * dt >= 1.0 {
                // linear approximation would clamp at 1
                prop_assert!(p < (alpha * dt).min(1.0));
            }
        }

        #[test]
        fn calibration_round_trip(r0 in 0.0f64..10.0, gamma in 0.01f64..5.0, reference in 0.1f64..1000.0) {
            let r = CalibrationReport::from_reference(r0, gamma, Basis::MeanDegree, reference).unwrap();
            prop_assert!((r.implied_r0() - r0).abs() <= 4.0 * f64::EPSILON * r0.max(1.0));
        }

        #[test]
        fn residual_reproduction_monotone(seed in 0u64..500, extra in 1usize..10) {
            let net = crate::netgen::generate_er(40, 5.0, seed).unwrap();
            let base: Vec<usize> = (0..40).filter(|v| (v * 7 + seed as usize) % 5 == 0).collect();
            let mut more = base.clone();
            more.extend((0..40).filter(|v| !base.contains(v)).take(extra));
            let a = residual_reproduction(&net, DEFAULT_LAYER, &base, 0.1, 0.1).unwrap();
            let b = residual_reproduction(&net, DEFAULT_LAYER, &more, 0.1, 0.1).unwrap();
            prop_assert!(b <= a + 1e-9);
        }
    }
}
