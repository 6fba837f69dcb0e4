//! Per-class statistics: mean confidence, target class, high-confidence
//! threshold and set, adaptive centroid, cosine distance, and purity.
//!
//! The adaptive centroid is the feature mean of a class's high-confidence
//! subset rather than of all its members. The subset is chosen by the
//! confidence of the class's *target class* — the index where the mean
//! prediction of the observed class peaks — so on a heavily polluted class
//! the centroid follows whichever group the model finds most representative,
//! not necessarily the clean one. Cluster selection deals with that later.

use crate::dataset::{Dataset, SampleRecord};
use crate::error::{Error, Result};
use crate::par;

/// Statistics of one observed class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStatistics {
    pub class_index: usize,
    pub size: usize,
    /// Mean confidence vector of the class.
    pub mean_confidence: Vec<f64>,
    /// Argmax of the mean confidence (ties toward the smallest index).
    pub target_class: usize,
    /// High-confidence threshold on the target-class confidence.
    pub threshold: f64,
    /// Ids of the high-confidence subset, ascending. Never empty.
    pub high_conf_ids: Vec<u64>,
    /// Feature mean of the high-confidence subset.
    pub centroid: Vec<f64>,
}

/// Arithmetic mean of the confidence vectors of one class.
pub fn class_mean_confidence(records: &[&SampleRecord]) -> Vec<f64> {
    assert!(!records.is_empty(), "empty class");
    let m = records[0].probs.len();
    let mut mean = vec![0.0; m];
    for record in records {
        for (slot, &p) in mean.iter_mut().zip(&record.probs) {
            *slot += p;
        }
    }
    let n = records.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

/// Index of the largest mean confidence; ties break toward the smallest
/// index.
pub fn target_class(mean_confidence: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in mean_confidence.iter().enumerate().skip(1) {
        if v > mean_confidence[best] {
            best = i;
        }
    }
    best
}

/// High-confidence threshold: the mean of the target-class confidences,
/// with each sample up-weighted by `max(1, p/p̄)`.
///
/// Always at least the plain mean, so the strict filter below is selective.
pub fn confidence_threshold(records: &[&SampleRecord], t_c: usize, mean_confidence: &[f64]) -> f64 {
    assert!(!records.is_empty(), "empty class");
    let mean_conf = mean_confidence[t_c].max(crate::metrics::LOG_CLAMP);
    let total: f64 = records
        .iter()
        .map(|r| {
            let p = r.probs[t_c];
            (p / mean_conf).max(1.0) * p
        })
        .sum();
    total / records.len() as f64
}

/// Samples whose target-class confidence strictly exceeds the threshold.
///
/// The strict inequality can leave the set empty (all-equal confidences, or
/// a heavily weighted threshold); in that case the single sample with the
/// maximum confidence is returned, ties broken by smallest id.
pub fn high_confidence_set(records: &[&SampleRecord], t_c: usize, threshold: f64) -> Vec<u64> {
    assert!(!records.is_empty(), "empty class");
    let mut ids: Vec<u64> = records
        .iter()
        .filter(|r| r.probs[t_c] > threshold)
        .map(|r| r.id)
        .collect();
    if ids.is_empty() {
        let best = records
            .iter()
            .map(|r| (r.probs[t_c], std::cmp::Reverse(r.id)))
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        ids.push(records[best].id);
    }
    ids.sort_unstable();
    ids
}

/// Feature mean over the given member ids.
pub fn adaptive_centroid(records: &[&SampleRecord], high_conf_ids: &[u64]) -> Vec<f64> {
    assert!(!high_conf_ids.is_empty(), "high-confidence set is empty");
    let dim = records[0].features.len();
    let mut centroid = vec![0.0; dim];
    let mut count = 0usize;
    for record in records {
        if high_conf_ids.binary_search(&record.id).is_ok() {
            for (slot, &f) in centroid.iter_mut().zip(&record.features) {
                *slot += f;
            }
            count += 1;
        }
    }
    assert_eq!(
        count,
        high_conf_ids.len(),
        "high-confidence ids must belong to the class"
    );
    centroid.iter_mut().for_each(|v| *v /= count as f64);
    centroid
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity between a feature and a centroid.
///
/// Despite being used as a "distance", larger means closer: samples near a
/// pure centroid concentrate toward 1.
///
/// Panics on a zero-norm argument; callers guard degenerate centroids.
pub fn acd(feature: &[f64], centroid: &[f64]) -> f64 {
    let nf = norm(feature);
    let nc = norm(centroid);
    assert!(nf > 0.0, "zero-norm feature");
    assert!(nc > 0.0, "zero-norm centroid");
    let dot: f64 = feature.iter().zip(centroid).map(|(a, b)| a * b).sum();
    (dot / (nf * nc)).clamp(-1.0, 1.0)
}

/// Largest single-true-class fraction of a record set.
///
/// Only meaningful on truth-bearing data; errors when any record lacks a
/// ground-truth label.
pub fn purity(records: &[&SampleRecord]) -> Result<f64> {
    assert!(!records.is_empty(), "empty class");
    let mut counts: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for record in records {
        let truth = record.true_label.ok_or_else(|| {
            Error::MissingTruth(format!("record {} has no true label", record.id))
        })?;
        *counts.entry(truth).or_insert(0) += 1;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    Ok(max as f64 / records.len() as f64)
}

impl ClassStatistics {
    /// Compute all statistics for one nonempty class.
    pub fn compute(class_index: usize, records: &[&SampleRecord]) -> Self {
        assert!(!records.is_empty(), "empty class");
        let mean_confidence = class_mean_confidence(records);
        let t_c = target_class(&mean_confidence);
        let threshold = confidence_threshold(records, t_c, &mean_confidence);
        let high_conf_ids = high_confidence_set(records, t_c, threshold);
        let centroid = adaptive_centroid(records, &high_conf_ids);
        ClassStatistics {
            class_index,
            size: records.len(),
            mean_confidence,
            target_class: t_c,
            threshold,
            high_conf_ids,
            centroid,
        }
    }
}

/// Statistics for every observed class; empty classes yield `None`.
///
/// Classes are independent, so this runs per-class in parallel when the
/// `parallel` feature is enabled.
pub fn build_class_statistics(dataset: &Dataset) -> Vec<Option<ClassStatistics>> {
    par::map_indexed(dataset.num_classes(), |class| {
        let records = dataset.class_records(class);
        if records.is_empty() {
            None
        } else {
            Some(ClassStatistics::compute(class, &records))
        }
    })
}

/// Sequential twin of [`build_class_statistics`].
pub fn build_class_statistics_seq(dataset: &Dataset) -> Vec<Option<ClassStatistics>> {
    par::map_indexed_seq(dataset.num_classes(), |class| {
        let records = dataset.class_records(class);
        if records.is_empty() {
            None
        } else {
            Some(ClassStatistics::compute(class, &records))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(id: u64, probs: Vec<f64>, features: Vec<f64>) -> SampleRecord {
        SampleRecord {
            id,
            observed_label: 0,
            probs,
            features,
            true_label: None,
        }
    }

    #[test]
    fn mean_confidence_basics() {
        let a = record(0, vec![1.0, 0.0], vec![1.0]);
        let b = record(1, vec![0.0, 1.0], vec![1.0]);
        assert_eq!(class_mean_confidence(&[&a]), vec![1.0, 0.0]);
        assert_eq!(class_mean_confidence(&[&a, &b]), vec![0.5, 0.5]);
    }

    #[test]
    fn mean_confidence_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 6;
        let records: Vec<SampleRecord> = (0..100)
            .map(|id| {
                let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..1.0)).collect();
                let total: f64 = raw.iter().sum();
                record(id, raw.into_iter().map(|v| v / total).collect(), vec![1.0])
            })
            .collect();
        let refs: Vec<&SampleRecord> = records.iter().collect();
        let mean = class_mean_confidence(&refs);

        for d in 0..m {
            let oracle: f64 =
                records.iter().map(|r| r.probs[d]).sum::<f64>() / records.len() as f64;
            assert!((mean[d] - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn target_class_tie_breaks_low() {
        assert_eq!(target_class(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(target_class(&[0.5, 0.5]), 0);
        assert_eq!(target_class(&[0.25, 0.25, 0.25, 0.25]), 0);
    }

    #[test]
    fn threshold_hand_example() {
        // Confidences {0.2, 0.8} with mean 0.5: weights {1, 1.6},
        // H = (0.2 + 1.28) / 2 = 0.74.
        let a = record(0, vec![0.2, 0.8], vec![1.0]);
        let b = record(1, vec![0.8, 0.2], vec![1.0]);
        let h = confidence_threshold(&[&a, &b], 0, &[0.5, 0.5]);
        assert!((h - 0.74).abs() < 1e-12);

        let set = high_confidence_set(&[&a, &b], 0, h);
        assert_eq!(set, vec![1]);
    }

    #[test]
    fn threshold_equals_value_when_all_equal() {
        let a = record(0, vec![0.3, 0.7], vec![1.0]);
        let b = record(1, vec![0.3, 0.7], vec![1.0]);
        let h = confidence_threshold(&[&a, &b], 1, &[0.3, 0.7]);
        assert!((h - 0.7).abs() < 1e-12);
        // Strict filter is empty; fallback keeps the smallest id.
        assert_eq!(high_confidence_set(&[&a, &b], 1, h), vec![0]);
    }

    #[test]
    fn centroid_basics() {
        let a = record(0, vec![1.0], vec![1.0, 0.0]);
        let b = record(1, vec![1.0], vec![0.0, 1.0]);
        assert_eq!(adaptive_centroid(&[&a, &b], &[0]), vec![1.0, 0.0]);
        assert_eq!(adaptive_centroid(&[&a, &b], &[0, 1]), vec![0.5, 0.5]);
    }

    #[test]
    fn centroid_matches_summation_oracle_and_ignores_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let records: Vec<SampleRecord> = (0..50)
            .map(|id| {
                record(
                    id,
                    vec![1.0],
                    (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let mut refs: Vec<&SampleRecord> = records.iter().collect();
        let ids: Vec<u64> = (0..50).collect();
        let forward = adaptive_centroid(&refs, &ids);
        refs.reverse();
        let backward = adaptive_centroid(&refs, &ids);
        for d in 0..8 {
            let oracle: f64 = records.iter().map(|r| r.features[d]).sum::<f64>() / 50.0;
            assert!((forward[d] - oracle).abs() < 1e-9);
            assert!((forward[d] - backward[d]).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_features_cancel_to_zero_centroid() {
        let a = record(0, vec![1.0], vec![0.5, -0.5]);
        let b = record(1, vec![1.0], vec![-0.5, 0.5]);
        let centroid = adaptive_centroid(&[&a, &b], &[0, 1]);
        assert_eq!(centroid, vec![0.0, 0.0]);
        assert_eq!(norm(&centroid), 0.0);
    }

    #[test]
    fn acd_basics() {
        assert!((acd(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-12);
        assert!(acd(&[1.0, 0.0], &[0.0, 3.0]).abs() < 1e-12);
        assert!((acd(&[2.0, 4.0], &[1.0, 2.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "zero-norm centroid")]
    fn acd_rejects_zero_norm() {
        acd(&[1.0, 0.0], &[0.0, 0.0]);
    }

    #[test]
    fn purity_basics() {
        let mk = |id, truth| SampleRecord {
            id,
            observed_label: 0,
            probs: vec![1.0],
            features: vec![1.0],
            true_label: Some(truth),
        };
        let records = [mk(0, 3), mk(1, 3), mk(2, 3)];
        let refs: Vec<&SampleRecord> = records.iter().collect();
        assert_eq!(purity(&refs).unwrap(), 1.0);

        let records = [mk(0, 1), mk(1, 1), mk(2, 1), mk(3, 2), mk(4, 2)];
        let refs: Vec<&SampleRecord> = records.iter().collect();
        assert!((purity(&refs).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn purity_requires_truth() {
        let r = record(0, vec![1.0], vec![1.0]);
        assert!(matches!(purity(&[&r]), Err(Error::MissingTruth(_))));
    }

    proptest! {
        #[test]
        fn threshold_at_least_plain_mean(
            confs in prop::collection::vec(0.01..1.0f64, 1..40)
        ) {
            let records: Vec<SampleRecord> = confs
                .iter()
                .enumerate()
                .map(|(i, &c)| record(i as u64, vec![c, 1.0 - c], vec![1.0]))
                .collect();
            let refs: Vec<&SampleRecord> = records.iter().collect();
            let mean = class_mean_confidence(&refs);
            let h = confidence_threshold(&refs, 0, &mean);
            let plain = confs.iter().sum::<f64>() / confs.len() as f64;
            prop_assert!(h >= plain - 1e-12);
        }

        #[test]
        fn high_confidence_set_matches_brute_force(
            confs in prop::collection::vec(0.01..1.0f64, 1..40)
        ) {
            let records: Vec<SampleRecord> = confs
                .iter()
                .enumerate()
                .map(|(i, &c)| record(i as u64, vec![c, 1.0 - c], vec![1.0]))
                .collect();
            let refs: Vec<&SampleRecord> = records.iter().collect();
            let mean = class_mean_confidence(&refs);
            let h = confidence_threshold(&refs, 0, &mean);
            let got = high_confidence_set(&refs, 0, h);

            let brute: Vec<u64> = records
                .iter()
                .filter(|r| r.probs[0] > h)
                .map(|r| r.id)
                .collect();
            if brute.is_empty() {
                prop_assert_eq!(got.len(), 1);
            } else {
                prop_assert_eq!(got, brute);
            }
        }

        #[test]
        fn acd_scale_invariant(
            feat in prop::collection::vec(-1.0..1.0f64, 3..10),
            scale_f in 0.1..50.0f64,
            scale_c in 0.1..50.0f64,
        ) {
            prop_assume!(norm(&feat) > 1e-6);
            let centroid: Vec<f64> = feat.iter().map(|v| v * 0.5 + 0.1).collect();
            prop_assume!(norm(&centroid) > 1e-6);
            let base = acd(&feat, &centroid);
            let scaled_f: Vec<f64> = feat.iter().map(|v| v * scale_f).collect();
            let scaled_c: Vec<f64> = centroid.iter().map(|v| v * scale_c).collect();
            prop_assert!((acd(&scaled_f, &scaled_c) - base).abs() < 1e-9);
        }
    }
}
