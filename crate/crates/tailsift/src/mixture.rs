//! Two-component univariate Gaussian mixture fitting.
//!
//! Each metric axis of a class is separated into two clusters by
//! expectation-maximization. The fit is fully deterministic: component means
//! start at the 10th and 90th percentiles of the data, weights start equal,
//! and both components share the sample variance initially. No RNG is
//! involved, so identical inputs always produce identical fits.
//!
//! Densities are evaluated in log space; a variance floor keeps components
//! from collapsing onto near-duplicate values.

use crate::error::{Error, Result};

/// Minimum number of values a fit needs.
pub const MIN_FIT_SAMPLES: usize = 4;

/// Floor for component variance on the per-class normalized scale.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Default stop threshold on the change in total log-likelihood.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Parameters of a fitted two-component mixture, components sorted by mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub means: [f64; 2],
    pub std_devs: [f64; 2],
    pub weights: [f64; 2],
    /// Equal-posterior point between the two means (midpoint fallback).
    pub threshold_d: f64,
    /// Total log-likelihood at convergence (natural log).
    pub log_likelihood: f64,
    /// Number of EM update steps performed.
    pub iterations: usize,
    /// Log-likelihood after each E step, including the initial parameters.
    pub ll_trace: Vec<f64>,
}

/// Sample ids split by mixture component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPair {
    /// Assigned to the low-mean component.
    pub low_ids: Vec<u64>,
    /// Assigned to the high-mean component.
    pub high_ids: Vec<u64>,
}

/// Min-max normalization to [0, 1]; constant input maps to all 0.5.
pub fn normalize_per_class(values: &[f64]) -> Vec<f64> {
    assert!(!values.is_empty(), "cannot normalize an empty list");
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range <= 0.0 {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - min) / range).collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[lo]
    }
}

fn log_density(x: f64, mean: f64, std_dev: f64) -> f64 {
    let z = (x - mean) / std_dev;
    -0.5 * z * z - std_dev.ln() - 0.5 * LN_2PI
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Posterior responsibility of each component for a single value.
///
/// The two entries sum to 1.
pub fn responsibilities(fit: &MixtureFit, x: f64) -> [f64; 2] {
    let l0 = fit.weights[0].ln() + log_density(x, fit.means[0], fit.std_devs[0]);
    let l1 = fit.weights[1].ln() + log_density(x, fit.means[1], fit.std_devs[1]);
    let total = log_sum_exp(l0, l1);
    [(l0 - total).exp(), (l1 - total).exp()]
}

/// Fit with the default tolerance and iteration cap.
pub fn fit_two_component(values: &[f64]) -> Result<MixtureFit> {
    fit_two_component_with(values, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)
}

/// EM fit of a two-component univariate mixture.
///
/// Stops when the log-likelihood change drops below `tolerance` or after
/// `max_iterations` update steps. Errors if fewer than [`MIN_FIT_SAMPLES`]
/// values are given.
pub fn fit_two_component_with(
    values: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<MixtureFit> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            n: values.len(),
            min: MIN_FIT_SAMPLES,
        });
    }

    let n = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mean_all = values.iter().sum::<f64>() / n;
    let var_all = values
        .iter()
        .map(|v| (v - mean_all) * (v - mean_all))
        .sum::<f64>()
        / n;
    let init_std = var_all.max(VARIANCE_FLOOR).sqrt();

    let mut means = [percentile(&sorted, 0.1), percentile(&sorted, 0.9)];
    let mut std_devs = [init_std, init_std];
    let mut weights: [f64; 2] = [0.5, 0.5];

    let mut trace = Vec::new();
    let mut resp = vec![[0.0f64; 2]; values.len()];
    let mut iterations = 0;

    loop {
        // E step: responsibilities and total log-likelihood under the
        // current parameters.
        let mut ll = 0.0;
        for (i, &x) in values.iter().enumerate() {
            let l0 = weights[0].ln() + log_density(x, means[0], std_devs[0]);
            let l1 = weights[1].ln() + log_density(x, means[1], std_devs[1]);
            let total = log_sum_exp(l0, l1);
            resp[i] = [(l0 - total).exp(), (l1 - total).exp()];
            ll += total;
        }
        let converged = trace
            .last()
            .is_some_and(|prev: &f64| (ll - prev).abs() < tolerance);
        trace.push(ll);
        if converged || iterations >= max_iterations {
            break;
        }

        // M step.
        for k in 0..2 {
            let nk: f64 = resp.iter().map(|r| r[k]).sum();
            if nk < 1e-12 {
                // Dead component: leave its shape alone, keep a tiny weight.
                weights[k] = 1e-9;
                continue;
            }
            let mu = values
                .iter()
                .zip(&resp)
                .map(|(&x, r)| r[k] * x)
                .sum::<f64>()
                / nk;
            let var = values
                .iter()
                .zip(&resp)
                .map(|(&x, r)| r[k] * (x - mu) * (x - mu))
                .sum::<f64>()
                / nk;
            means[k] = mu;
            std_devs[k] = var.max(VARIANCE_FLOOR).sqrt();
            weights[k] = nk / n;
        }
        let w_total = weights[0] + weights[1];
        weights[0] /= w_total;
        weights[1] /= w_total;
        iterations += 1;
    }

    if means[0] > means[1] {
        means.swap(0, 1);
        std_devs.swap(0, 1);
        weights.swap(0, 1);
    }

    let mut fit = MixtureFit {
        means,
        std_devs,
        weights,
        threshold_d: 0.0,
        log_likelihood: *trace.last().unwrap(),
        iterations,
        ll_trace: trace,
    };
    fit.threshold_d = separation_threshold(&fit);
    Ok(fit)
}

/// Point between the two means where the component posteriors are equal.
///
/// Solves the quadratic in the log-density difference; takes the smallest
/// real root inside `[means[0], means[1]]`, or the midpoint of the means
/// when no root lands there. The result is clamped to that interval.
pub fn separation_threshold(fit: &MixtureFit) -> f64 {
    let [m1, m2] = fit.means;
    let [s1, s2] = fit.std_devs;
    let [w1, w2] = fit.weights;
    let midpoint = 0.5 * (m1 + m2);

    // w1·N(x; m1, s1) = w2·N(x; m2, s2)  ⇔  a·x² + b·x + c = 0
    let a = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
    let b = m1 / (s1 * s1) - m2 / (s2 * s2);
    let c = (m2 * m2) / (2.0 * s2 * s2) - (m1 * m1) / (2.0 * s1 * s1)
        + ((w1 * s2) / (w2 * s1)).ln();

    let mut roots = Vec::new();
    if a.abs() < 1e-12 {
        if b.abs() > 1e-12 {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push((-b - sq) / (2.0 * a));
            roots.push((-b + sq) / (2.0 * a));
        }
    }

    let inside = roots
        .into_iter()
        .filter(|r| r.is_finite() && *r >= m1 - 1e-12 && *r <= m2 + 1e-12)
        .fold(f64::INFINITY, f64::min);
    let d = if inside.is_finite() { inside } else { midpoint };
    d.clamp(m1, m2)
}

/// Hard assignment by maximum posterior responsibility; ties go to the
/// low-mean component.
pub fn assign_clusters(values: &[f64], ids: &[u64], fit: &MixtureFit) -> ClusterPair {
    assert_eq!(values.len(), ids.len(), "values and ids must align");
    let mut low_ids = Vec::new();
    let mut high_ids = Vec::new();
    for (&x, &id) in values.iter().zip(ids) {
        let r = responsibilities(fit, x);
        if r[1] > r[0] {
            high_ids.push(id);
        } else {
            low_ids.push(id);
        }
    }
    ClusterPair { low_ids, high_ids }
}
