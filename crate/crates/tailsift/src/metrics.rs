//! Prediction-side separation metrics.
//!
//! All divergences use base-2 logarithms so the Jensen-Shannon divergence of
//! a prediction against a one-hot label lands in [0, 1]. The convention
//! 0·log 0 = 0 applies throughout; values are clamped to `LOG_CLAMP` inside
//! logarithms so degenerate inputs stay finite.
//!
//! Inputs are validated once at ingestion (see [`crate::dataset`]); the
//! functions here assume normalized confidence vectors and in-range labels
//! and only guard numerically.

/// Floor applied inside logarithms and confidence divisions.
pub const LOG_CLAMP: f64 = 1e-12;

fn max_entry(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Jensen-Shannon divergence between a confidence vector and the one-hot
/// form of its observed label, in bits.
///
/// Returns 0 for a one-hot prediction on the observed class and 1 when the
/// prediction puts no mass on it.
///
/// Panics if `observed` is out of range.
pub fn jsd(probs: &[f64], observed: usize) -> f64 {
    assert!(
        observed < probs.len(),
        "observed label {observed} out of range for {} classes",
        probs.len()
    );
    debug_assert!(
        (probs.iter().sum::<f64>() - 1.0).abs() <= 1e-6,
        "confidence vector must sum to 1"
    );

    let mut acc = 0.0;
    for (d, &p) in probs.iter().enumerate() {
        let y = if d == observed { 1.0 } else { 0.0 };
        let m = 0.5 * (p + y);
        if p > 0.0 {
            acc += 0.5 * p * (p.max(LOG_CLAMP).log2() - m.max(LOG_CLAMP).log2());
        }
        if y > 0.0 {
            acc += 0.5 * (y.log2() - m.max(LOG_CLAMP).log2());
        }
    }
    acc.clamp(0.0, 1.0)
}

/// Closed form of [`jsd`] for one-hot labels: only the observed-class
/// confidence matters, and the divergence is
/// `(2 + p·log2 p − (p+1)·log2(p+1)) / 2`.
///
/// Strictly decreasing on (0, 1); equals 1 at p = 0 and 0 at p = 1.
///
/// Panics if `p_c` is outside [0, 1].
pub fn jsd_closed_form(p_c: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&p_c),
        "observed-class confidence {p_c} outside [0, 1]"
    );
    let self_term = if p_c > 0.0 { p_c * p_c.log2() } else { 0.0 };
    let v = 0.5 * (2.0 + self_term - (p_c + 1.0) * (p_c + 1.0).log2());
    v.clamp(0.0, 1.0)
}

/// Confidence-ratio weight.
///
/// The per-sample ratio `max(p)/p^c` exceeds 1 exactly when the argmax of the
/// prediction is not the observed class; it is capped by the same ratio of
/// the class-mean confidence so a handful of near-zero `p^c` values cannot
/// blow up the scale of the weighted divergence before per-class
/// normalization. Observed-class entries are clamped to `LOG_CLAMP` instead
/// of erroring: softmax outputs are never exactly zero.
pub fn weight(probs: &[f64], observed: usize, class_mean: &[f64]) -> f64 {
    assert!(observed < probs.len(), "observed label out of range");
    debug_assert_eq!(probs.len(), class_mean.len());

    let sample_ratio = max_entry(probs) / probs[observed].max(LOG_CLAMP);
    let cap = max_entry(class_mean) / class_mean[observed].max(LOG_CLAMP);
    sample_ratio.min(cap)
}

/// Weighted Jensen-Shannon divergence: [`weight`] × [`jsd`].
///
/// Never below the plain divergence because the weight is at least 1.
pub fn wjsd(probs: &[f64], observed: usize, class_mean: &[f64]) -> f64 {
    weight(probs, observed, class_mean) * jsd(probs, observed)
}

/// Upper bound on `|jsd_closed_form(p_i_c) − jsd_closed_form(p_j_c)|`:
/// `log2((p_i_c + 1)/p_i_c) · |p_i_c − p_j_c| / 2`.
///
/// The bound evaluates the divergence's slope at `p_i_c`, so it is only a
/// valid upper bound when `p_i_c` is the smaller of the two confidences;
/// callers pass the smaller value first.
///
/// Panics if `p_i_c` is not positive (the bound diverges at 0).
pub fn jsd_difference_bound(p_i_c: f64, p_j_c: f64) -> f64 {
    assert!(p_i_c > 0.0, "bound diverges at p_i_c = 0");
    0.5 * ((p_i_c + 1.0) / p_i_c).log2() * (p_i_c - p_j_c).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Term-by-term evaluation of the divergence definition, kept independent
    /// of the implementation above: KL(p ‖ m)/2 + KL(y ‖ m)/2 with
    /// m = (p + y)/2 and 0·log 0 = 0.
    fn jsd_reference(probs: &[f64], observed: usize) -> f64 {
        let onehot: Vec<f64> = (0..probs.len())
            .map(|d| if d == observed { 1.0 } else { 0.0 })
            .collect();
        let mid: Vec<f64> = probs
            .iter()
            .zip(&onehot)
            .map(|(&p, &y)| 0.5 * (p + y))
            .collect();
        let kl = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| if x > 0.0 { x * (x / y).log2() } else { 0.0 })
                .sum()
        };
        0.5 * kl(probs, &mid) + 0.5 * kl(&onehot, &mid)
    }

    #[test]
    fn jsd_one_hot_correct_is_zero() {
        let mut probs = vec![0.0; 5];
        probs[2] = 1.0;
        assert_eq!(jsd(&probs, 2), 0.0);
    }

    #[test]
    fn jsd_disjoint_support_is_one() {
        let probs = vec![0.0, 0.6, 0.4];
        assert!((jsd(&probs, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jsd_uniform_binary_matches_frozen_value() {
        // Closed-form evaluation of the binary case p = [0.5, 0.5], c = 0.
        let expected = 0.311_278_124_459_132_84;
        assert!((jsd(&[0.5, 0.5], 0) - expected).abs() < 1e-9);
        assert!((jsd_closed_form(0.5) - expected).abs() < 1e-9);
    }

    #[test]
    fn closed_form_endpoints() {
        assert_eq!(jsd_closed_form(1.0), 0.0);
        assert!((jsd_closed_form(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "outside")]
    fn closed_form_rejects_out_of_range() {
        jsd_closed_form(1.5);
    }

    #[test]
    fn weight_hand_examples() {
        // argmax at observed class: ratio 1 regardless of cap.
        assert!((weight(&[0.9, 0.1], 0, &[0.2, 0.8]) - 1.0).abs() < 1e-12);
        // min(9, 1) = 1.
        assert!((weight(&[0.1, 0.9], 0, &[0.5, 0.5]) - 1.0).abs() < 1e-12);
        // min(4, 3) = 3.
        assert!((weight(&[0.2, 0.8], 0, &[0.25, 0.75]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn wjsd_composes_weight_and_jsd() {
        let got = wjsd(&[0.2, 0.8], 0, &[0.25, 0.75]);
        let expected = 3.0 * jsd_closed_form(0.2);
        assert!((got - expected).abs() < 1e-9);

        let mut one_hot = vec![0.0; 4];
        one_hot[1] = 1.0;
        assert_eq!(wjsd(&one_hot, 1, &[0.25; 4]), 0.0);
    }

    #[test]
    fn bound_hand_example() {
        let bound = jsd_difference_bound(0.25, 0.5);
        assert!((bound - 0.290_241_011_860_920_26).abs() < 1e-9);
        let gap = (jsd_closed_form(0.25) - jsd_closed_form(0.5)).abs();
        assert!(gap <= bound + 1e-9);
    }

    #[test]
    fn bound_zero_for_equal_confidences() {
        assert_eq!(jsd_difference_bound(0.3, 0.3), 0.0);
    }

    #[test]
    #[should_panic(expected = "diverges")]
    fn bound_rejects_zero() {
        jsd_difference_bound(0.0, 0.5);
    }

    fn confidence_vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-6..1.0f64, len).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
    }

    proptest! {
        #[test]
        fn jsd_matches_reference_and_stays_in_range(
            probs in (2usize..12).prop_flat_map(confidence_vector),
            label_pick in 0usize..12,
        ) {
            let observed = label_pick % probs.len();
            let v = jsd(&probs, observed);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - jsd_reference(&probs, observed)).abs() < 1e-9);
        }

        #[test]
        fn jsd_depends_only_on_observed_confidence(
            probs in (3usize..10).prop_flat_map(confidence_vector),
            label_pick in 0usize..10,
            rotate in 1usize..8,
        ) {
            // Redistribute the off-class mass arbitrarily: the divergence
            // against a one-hot label must not move.
            let observed = label_pick % probs.len();
            let mut rearranged = probs.clone();
            let others: Vec<usize> =
                (0..probs.len()).filter(|&d| d != observed).collect();
            let mut mass: Vec<f64> = others.iter().map(|&d| probs[d]).collect();
            let shift = rotate % mass.len();
            mass.rotate_left(shift);
            for (slot, m) in others.iter().zip(mass) {
                rearranged[*slot] = m;
            }
            prop_assert!(
                (jsd(&probs, observed) - jsd(&rearranged, observed)).abs() < 1e-9
            );
            prop_assert!(
                (jsd(&probs, observed) - jsd_closed_form(probs[observed])).abs()
                    < 1e-9
            );
        }

        #[test]
        fn wjsd_dominates_jsd(
            probs in (2usize..10).prop_flat_map(confidence_vector),
            mean in (2usize..10).prop_flat_map(confidence_vector),
            label_pick in 0usize..10,
        ) {
            let len = probs.len().min(mean.len());
            let probs = {
                let mut p = probs[..len].to_vec();
                let t: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= t);
                p
            };
            let mean = {
                let mut m = mean[..len].to_vec();
                let t: f64 = m.iter().sum();
                m.iter_mut().for_each(|v| *v /= t);
                m
            };
            let observed = label_pick % len;
            let w = weight(&probs, observed, &mean);
            prop_assert!(w >= 1.0 - 1e-12);
            prop_assert!(
                wjsd(&probs, observed, &mean) >= jsd(&probs, observed) - 1e-12
            );
        }

        #[test]
        fn closed_form_strictly_decreasing(a in 1e-9..1.0f64, b in 1e-9..1.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-12);
            prop_assert!(jsd_closed_form(lo) > jsd_closed_form(hi));
        }

        #[test]
        fn theorem_bound_holds_for_ordered_pairs(
            a in 1e-6..1.0f64,
            b in 0.0..1.0f64,
        ) {
            let lo = a.min(b).max(1e-6);
            let hi = a.max(b);
            let gap = (jsd_closed_form(lo) - jsd_closed_form(hi)).abs();
            prop_assert!(gap <= jsd_difference_bound(lo, hi) + 1e-9);
        }

        #[test]
        fn weight_ignores_permutation_of_irrelevant_classes(
            probs in (4usize..10).prop_flat_map(confidence_vector),
            mean in (4usize..10).prop_flat_map(confidence_vector),
            label_pick in 0usize..10,
        ) {
            let len = probs.len().min(mean.len());
            let mut probs = probs[..len].to_vec();
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|v| *v /= total);
            let mean = &mean[..len];

            let observed = label_pick % len;
            let argmax = probs
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .map(|(d, _)| d)
                .unwrap();
            let swappable: Vec<usize> = (0..len)
                .filter(|&d| d != observed && d != argmax)
                .collect();
            prop_assume!(swappable.len() >= 2);

            let before = weight(&probs, observed, mean);
            probs.swap(swappable[0], swappable[1]);
            let after = weight(&probs, observed, mean);
            prop_assert!((before - after).abs() < 1e-12);
        }
    }
}
