//! Ground-truth scoring of selections, single-metric baselines, and the
//! purity/clean-ratio sweep table.
//!
//! Every partition — the bi-dimensional selector's and both baselines' — is
//! scored by the same function on the same schema, so comparisons never mix
//! scorers. Head/medium/tail grouping uses *intrinsic* (true) class sizes:
//! observed sizes are exactly what label noise distorts.

use std::collections::HashMap;

use crate::centroids;
use crate::dataset::{Dataset, SampleRecord};
use crate::error::{Error, Result};
use crate::mixture;
use crate::selection::{self, SelectionOutcome};

/// Intrinsic-size tertile of a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeGroup {
    Head,
    Medium,
    Tail,
}

impl SizeGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeGroup::Head => "head",
            SizeGroup::Medium => "medium",
            SizeGroup::Tail => "tail",
        }
    }
}

/// Scorer input: one class's clean/noisy split plus free-form labels for
/// the report (which axis, which rule, or which baseline produced it).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    pub class_index: usize,
    pub clean_ids: Vec<u64>,
    pub noisy_ids: Vec<u64>,
    pub dimension_label: String,
    pub branch_label: String,
}

/// Per-class scores against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub class_index: usize,
    pub group: SizeGroup,
    pub intrinsic_size: usize,
    pub observed_size: usize,
    pub dimension: String,
    pub branch: String,
    pub clean_count: usize,
    pub noisy_count: usize,
    /// Fraction of truly clean samples in the selected clean cluster.
    /// Identical to `precision` by definition; reported under both names.
    pub clean_ratio: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub class_purity: f64,
    pub high_conf_purity: f64,
    /// Truly clean fraction of the whole observed class (what "select
    /// everything" would score).
    pub base_clean_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupScore {
    pub group: SizeGroup,
    pub classes: usize,
    pub aggregate: AggregateScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    /// One row per nonempty observed class, ascending class index.
    pub classes: Vec<ClassScore>,
    /// Unweighted mean over class rows.
    pub macro_avg: AggregateScore,
    /// Pooled counts over all class rows.
    pub micro: AggregateScore,
    /// Macro scores within each intrinsic-size tertile.
    pub groups: Vec<GroupScore>,
}

impl SelectionReport {
    pub fn group(&self, group: SizeGroup) -> &GroupScore {
        self.groups
            .iter()
            .find(|g| g.group == group)
            .expect("all three groups are always present")
    }
}

/// Tertile of every class by intrinsic size: the largest third of classes is
/// the head, the smallest third the tail. Ties rank the smaller class index
/// first.
pub fn size_groups(intrinsic_counts: &[usize]) -> Vec<SizeGroup> {
    let m = intrinsic_counts.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(intrinsic_counts[c]), c));
    let mut groups = vec![SizeGroup::Head; m];
    for (rank, &class) in order.iter().enumerate() {
        groups[class] = match rank * 3 / m {
            0 => SizeGroup::Head,
            1 => SizeGroup::Medium,
            _ => SizeGroup::Tail,
        };
    }
    groups
}

pub fn partitions_from_outcomes(outcomes: &[SelectionOutcome]) -> Vec<ClassPartition> {
    outcomes
        .iter()
        .map(|o| ClassPartition {
            class_index: o.class_index,
            clean_ids: o.clean_ids.clone(),
            noisy_ids: o.noisy_ids.clone(),
            dimension_label: o.dimension.as_str().to_string(),
            branch_label: o.branch.as_str().to_string(),
        })
        .collect()
}

/// Score selection outcomes against ground truth.
pub fn score_selection(outcomes: &[SelectionOutcome], dataset: &Dataset) -> Result<SelectionReport> {
    score_partitions(&partitions_from_outcomes(outcomes), dataset)
}

/// Score any per-class partitions against ground truth.
///
/// Requires truth on every record and partitions that exactly cover each
/// nonempty observed class.
pub fn score_partitions(
    partitions: &[ClassPartition],
    dataset: &Dataset,
) -> Result<SelectionReport> {
    if !dataset.has_truth() {
        return Err(Error::MissingTruth(
            "evaluation needs ground-truth labels on every record".into(),
        ));
    }
    let intrinsic = dataset.intrinsic_counts()?;
    let groups = size_groups(&intrinsic);
    let stats = centroids::build_class_statistics(dataset);

    let clean_by_id: HashMap<u64, bool> = dataset
        .records()
        .iter()
        .map(|r| (r.id, r.is_clean()))
        .collect();

    let mut rows = Vec::new();
    for part in partitions {
        let class = part.class_index;
        let records = dataset.class_records(class);
        if records.is_empty() {
            continue;
        }

        // The partition must cover the class exactly.
        let mut got: Vec<u64> = part
            .clean_ids
            .iter()
            .chain(&part.noisy_ids)
            .copied()
            .collect();
        got.sort_unstable();
        let expected: Vec<u64> = records.iter().map(|r| r.id).collect();
        if got != expected {
            return Err(Error::PartitionMismatch(format!(
                "class {class}: partition covers {} ids, class has {}",
                got.len(),
                expected.len()
            )));
        }

        let tp = part
            .clean_ids
            .iter()
            .filter(|id| clean_by_id[id])
            .count();
        let class_clean: usize = expected.iter().filter(|id| clean_by_id[id]).count();

        let precision = if part.clean_ids.is_empty() {
            0.0
        } else {
            tp as f64 / part.clean_ids.len() as f64
        };
        let recall = if class_clean == 0 {
            1.0
        } else {
            tp as f64 / class_clean as f64
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };

        let class_stats = stats[class].as_ref().expect("nonempty class has stats");
        let high_conf: Vec<&SampleRecord> = records
            .iter()
            .filter(|r| class_stats.high_conf_ids.binary_search(&r.id).is_ok())
            .copied()
            .collect();

        rows.push(ClassScore {
            class_index: class,
            group: groups[class],
            intrinsic_size: intrinsic[class],
            observed_size: records.len(),
            dimension: part.dimension_label.clone(),
            branch: part.branch_label.clone(),
            clean_count: part.clean_ids.len(),
            noisy_count: part.noisy_ids.len(),
            clean_ratio: precision,
            precision,
            recall,
            f1,
            class_purity: centroids::purity(&records)?,
            high_conf_purity: centroids::purity(&high_conf)?,
            base_clean_rate: class_clean as f64 / records.len() as f64,
        });
    }
    rows.sort_by_key(|r| r.class_index);

    let macro_avg = macro_aggregate(rows.iter());
    let micro = micro_aggregate(&rows, &clean_by_id, partitions, dataset);
    let groups = [SizeGroup::Head, SizeGroup::Medium, SizeGroup::Tail]
        .into_iter()
        .map(|g| GroupScore {
            group: g,
            classes: rows.iter().filter(|r| r.group == g).count(),
            aggregate: macro_aggregate(rows.iter().filter(|r| r.group == g)),
        })
        .collect();

    Ok(SelectionReport {
        classes: rows,
        macro_avg,
        micro,
        groups,
    })
}

fn macro_aggregate<'a>(rows: impl Iterator<Item = &'a ClassScore>) -> AggregateScore {
    let mut n = 0usize;
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for row in rows {
        p += row.precision;
        r += row.recall;
        f += row.f1;
        n += 1;
    }
    if n == 0 {
        return AggregateScore {
            precision: f64::NAN,
            recall: f64::NAN,
            f1: f64::NAN,
        };
    }
    AggregateScore {
        precision: p / n as f64,
        recall: r / n as f64,
        f1: f / n as f64,
    }
}

fn micro_aggregate(
    rows: &[ClassScore],
    clean_by_id: &HashMap<u64, bool>,
    partitions: &[ClassPartition],
    dataset: &Dataset,
) -> AggregateScore {
    let scored: Vec<usize> = rows.iter().map(|r| r.class_index).collect();
    let mut tp = 0usize;
    let mut selected = 0usize;
    let mut clean_total = 0usize;
    for part in partitions {
        if !scored.contains(&part.class_index) {
            continue;
        }
        tp += part.clean_ids.iter().filter(|id| clean_by_id[id]).count();
        selected += part.clean_ids.len();
        clean_total += dataset
            .class_records(part.class_index)
            .iter()
            .filter(|r| r.is_clean())
            .count();
    }
    let precision = if selected == 0 {
        0.0
    } else {
        tp as f64 / selected as f64
    };
    let recall = if clean_total == 0 {
        1.0
    } else {
        tp as f64 / clean_total as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    AggregateScore {
        precision,
        recall,
        f1,
    }
}

/// Small-value baseline on the plain (unweighted) divergence: mixture fit on
/// per-class normalized divergence values, lower-mean cluster clean. Tiny
/// classes take the same median-split fallback as the main selector.
pub fn baseline_small_jsd(records: &[&SampleRecord]) -> (Vec<u64>, Vec<u64>) {
    let mut sorted: Vec<&SampleRecord> = records.to_vec();
    sorted.sort_by_key(|r| r.id);
    let ids: Vec<u64> = sorted.iter().map(|r| r.id).collect();
    let values: Vec<f64> = sorted
        .iter()
        .map(|r| crate::metrics::jsd(&r.probs, r.observed_label))
        .collect();

    let normed = mixture::normalize_per_class(&values);
    if let Ok(fit) = mixture::fit_two_component(&normed) {
        let clusters = mixture::assign_clusters(&normed, &ids, &fit);
        let (mut clean, mut noisy) = selection::select_cluster_wjsd(&clusters, &ids, &normed);
        clean.sort_unstable();
        noisy.sort_unstable();
        return (clean, noisy);
    }
    median_split_by(&ids, &values, true)
}

/// Per-sample cosine similarity to the *whole-class* feature mean — no
/// high-confidence filtering. The control the adaptive centroid is measured
/// against.
pub fn baseline_naive_cd_values(records: &[&SampleRecord]) -> Result<Vec<f64>> {
    assert!(!records.is_empty(), "empty class");
    let dim = records[0].features.len();
    let mut mean = vec![0.0; dim];
    for r in records {
        for (slot, &f) in mean.iter_mut().zip(&r.features) {
            *slot += f;
        }
    }
    mean.iter_mut().for_each(|v| *v /= records.len() as f64);
    if centroids::norm(&mean) <= 0.0 {
        return Err(Error::ZeroNorm(
            "class mean feature has zero norm".into(),
        ));
    }
    Ok(records
        .iter()
        .map(|r| centroids::acd(&r.features, &mean))
        .collect())
}

/// Naive centroid-distance baseline: mixture fit on per-class normalized
/// similarity values, the near-centroid (higher-mean) cluster is clean.
pub fn baseline_naive_cd(records: &[&SampleRecord]) -> Result<(Vec<u64>, Vec<u64>)> {
    let mut sorted: Vec<&SampleRecord> = records.to_vec();
    sorted.sort_by_key(|r| r.id);
    let ids: Vec<u64> = sorted.iter().map(|r| r.id).collect();
    let values = baseline_naive_cd_values(&sorted)?;

    let normed = mixture::normalize_per_class(&values);
    if let Ok(fit) = mixture::fit_two_component(&normed) {
        let clusters = mixture::assign_clusters(&normed, &ids, &fit);
        if clusters.low_ids.is_empty() {
            return Ok((clusters.high_ids, Vec::new()));
        }
        if clusters.high_ids.is_empty() {
            return Ok((clusters.low_ids, Vec::new()));
        }
        let mean_of = |subset: &[u64]| -> f64 {
            subset
                .iter()
                .map(|id| normed[ids.binary_search(id).unwrap()])
                .sum::<f64>()
                / subset.len() as f64
        };
        let (mean_low, mean_high) = (mean_of(&clusters.low_ids), mean_of(&clusters.high_ids));
        let high_is_clean = if mean_high > mean_low {
            true
        } else if mean_low > mean_high {
            false
        } else {
            clusters.high_ids.len() >= clusters.low_ids.len()
        };
        let (mut clean, mut noisy) = if high_is_clean {
            (clusters.high_ids, clusters.low_ids)
        } else {
            (clusters.low_ids, clusters.high_ids)
        };
        clean.sort_unstable();
        noisy.sort_unstable();
        return Ok((clean, noisy));
    }
    // Tiny class: upper half (nearest to the centroid) is clean.
    Ok(median_split_by(&ids, &values, false))
}

/// Ascending (low clean) or descending (high clean) median split by value,
/// ids breaking ties.
fn median_split_by(ids: &[u64], values: &[f64], low_is_clean: bool) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        let cmp = values[a].partial_cmp(&values[b]).unwrap();
        let cmp = if low_is_clean { cmp } else { cmp.reverse() };
        cmp.then(ids[a].cmp(&ids[b]))
    });
    let cut = ids.len().div_ceil(2);
    let mut clean: Vec<u64> = order[..cut].iter().map(|&i| ids[i]).collect();
    let mut noisy: Vec<u64> = order[cut..].iter().map(|&i| ids[i]).collect();
    clean.sort_unstable();
    noisy.sort_unstable();
    (clean, noisy)
}

/// Baseline partitions for every observed class of a dataset.
pub fn baseline_small_jsd_partitions(dataset: &Dataset) -> Vec<ClassPartition> {
    (0..dataset.num_classes())
        .map(|class| {
            let records = dataset.class_records(class);
            let (clean_ids, noisy_ids) = if records.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                baseline_small_jsd(&records)
            };
            ClassPartition {
                class_index: class,
                clean_ids,
                noisy_ids,
                dimension_label: "jsd-small".into(),
                branch_label: "baseline".into(),
            }
        })
        .collect()
}

/// Naive-CD partitions for every observed class of a dataset.
pub fn baseline_naive_cd_partitions(dataset: &Dataset) -> Result<Vec<ClassPartition>> {
    (0..dataset.num_classes())
        .map(|class| {
            let records = dataset.class_records(class);
            let (clean_ids, noisy_ids) = if records.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                baseline_naive_cd(&records)?
            };
            Ok(ClassPartition {
                class_index: class,
                clean_ids,
                noisy_ids,
                dimension_label: "naive-cd".into(),
                branch_label: "baseline".into(),
            })
        })
        .collect()
}

/// One row of the purity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    /// Mean observed purity of the tail-tertile classes.
    pub purity: f64,
    /// Mean best-cluster clean ratio of the tail-tertile classes, where
    /// "best" is the better of the two clusters of each class's partition.
    pub best_clean_ratio: f64,
}

/// Best-cluster clean ratio of one class partition: the larger truly-clean
/// fraction of its two sides. `None` for empty partitions.
pub fn best_cluster_clean_ratio(
    outcome: &SelectionOutcome,
    clean_by_id: &HashMap<u64, bool>,
) -> Option<f64> {
    let ratio = |ids: &[u64]| -> Option<f64> {
        if ids.is_empty() {
            return None;
        }
        let tp = ids.iter().filter(|id| clean_by_id[id]).count();
        Some(tp as f64 / ids.len() as f64)
    };
    match (ratio(&outcome.clean_ids), ratio(&outcome.noisy_ids)) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    }
}

/// Build the purity → best-clean-ratio table over a sweep of datasets, plus
/// the Spearman rank correlation of its two columns (`None` when undefined:
/// fewer than three points or a constant column).
pub fn purity_vs_cleanratio_table(
    entries: &[(String, &Dataset, &[SelectionOutcome])],
) -> Result<(Vec<SweepPoint>, Option<f64>)> {
    let mut points = Vec::new();
    for (label, dataset, outcomes) in entries {
        if !dataset.has_truth() {
            return Err(Error::MissingTruth(format!(
                "sweep dataset '{label}' lacks ground truth"
            )));
        }
        let groups = size_groups(&dataset.intrinsic_counts()?);
        let clean_by_id: HashMap<u64, bool> = dataset
            .records()
            .iter()
            .map(|r| (r.id, r.is_clean()))
            .collect();

        let mut purities = Vec::new();
        let mut ratios = Vec::new();
        for outcome in outcomes.iter() {
            let class = outcome.class_index;
            if groups[class] != SizeGroup::Tail || dataset.class_size(class) == 0 {
                continue;
            }
            purities.push(centroids::purity(&dataset.class_records(class))?);
            if let Some(best) = best_cluster_clean_ratio(outcome, &clean_by_id) {
                ratios.push(best);
            }
        }
        if purities.is_empty() || ratios.is_empty() {
            continue;
        }
        points.push(SweepPoint {
            label: label.clone(),
            purity: purities.iter().sum::<f64>() / purities.len() as f64,
            best_clean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        });
    }
    let rho = spearman(
        &points.iter().map(|p| p.purity).collect::<Vec<_>>(),
        &points.iter().map(|p| p.best_clean_ratio).collect::<Vec<_>>(),
    );
    Ok((points, rho))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
///
/// `None` when fewer than three points or either column is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mean = (n + 1) as f64 / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..n {
        cov += (rx[i] - mean) * (ry[i] - mean);
        var_x += (rx[i] - mean) * (rx[i] - mean);
        var_y += (ry[i] - mean) * (ry[i] - mean);
    }
    if var_x <= 0.0 || var_y <= 0.0 {
        return None;
    }
    Some(cov / (var_x * var_y).sqrt())
}

/// Overlap coefficient of two samples: 50-bin normalized histograms over the
/// joint range, summing the per-bin minima. 1 means indistinguishable
/// distributions, 0 disjoint ones.
pub fn overlap_coefficient(a: &[f64], b: &[f64], bins: usize) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let lo = a
        .iter()
        .chain(b)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = a
        .iter()
        .chain(b)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return 1.0;
    }
    let histogram = |values: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &v in values {
            let idx = (((v - lo) / (hi - lo)) * bins as f64) as usize;
            h[idx.min(bins - 1)] += 1.0;
        }
        let total: f64 = h.iter().sum();
        h.iter_mut().for_each(|x| *x /= total);
        h
    };
    let ha = histogram(a);
    let hb = histogram(b);
    ha.iter().zip(&hb).map(|(&x, &y)| x.min(y)).sum()
}

/// Per-class purity of the high-confidence sets, next to the full-class
/// purity. Used by the purity-improvement checks.
pub fn high_confidence_purity_pairs(dataset: &Dataset) -> Result<Vec<(usize, f64, f64)>> {
    let stats = centroids::build_class_statistics(dataset);
    let mut rows = Vec::new();
    for class in 0..dataset.num_classes() {
        let Some(class_stats) = &stats[class] else {
            continue;
        };
        let records = dataset.class_records(class);
        let class_purity = centroids::purity(&records)?;
        let high: Vec<&SampleRecord> = records
            .iter()
            .filter(|r| class_stats.high_conf_ids.binary_search(&r.id).is_ok())
            .copied()
            .collect();
        rows.push((class, class_purity, centroids::purity(&high)?));
    }
    Ok(rows)
}

/// Convenience for tests and the harness: clean-lookup table of a dataset.
pub fn clean_lookup(dataset: &Dataset) -> HashMap<u64, bool> {
    dataset
        .records()
        .iter()
        .map(|r| (r.id, r.is_clean()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centroids::ClassStatistics;
    use crate::dataset::Manifest;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(id: u64, class: usize, truth: usize, conf: f64, features: Vec<f64>) -> SampleRecord {
        let mut probs = vec![(1.0 - conf) / 1.0; 2];
        probs[class] = conf;
        probs[1 - class] = 1.0 - conf;
        SampleRecord {
            id,
            observed_label: class,
            probs,
            features,
            true_label: Some(truth),
        }
    }

    fn two_class_dataset(records: Vec<SampleRecord>) -> Dataset {
        let mut observed_counts = vec![0usize; 2];
        for r in &records {
            observed_counts[r.observed_label] += 1;
        }
        let manifest = Manifest {
            num_classes: 2,
            feature_dim: records[0].features.len(),
            record_count: records.len(),
            observed_counts,
            intrinsic_counts: None,
            transition_matrix: None,
            generator: None,
        };
        Dataset::new(manifest, records).unwrap()
    }

    #[test]
    fn perfect_selection_scores_one() {
        let records: Vec<SampleRecord> = (0..10)
            .map(|i| {
                let truth = if i < 6 { 0 } else { 1 };
                record(i, 0, truth, 0.9, vec![1.0, 0.0])
            })
            .chain((10..14).map(|i| record(i, 1, 1, 0.9, vec![0.0, 1.0])))
            .collect();
        let dataset = two_class_dataset(records);

        let partitions = vec![
            ClassPartition {
                class_index: 0,
                clean_ids: (0..6).collect(),
                noisy_ids: (6..10).collect(),
                dimension_label: "wjsd".into(),
                branch_label: "A".into(),
            },
            ClassPartition {
                class_index: 1,
                clean_ids: (10..14).collect(),
                noisy_ids: vec![],
                dimension_label: "wjsd".into(),
                branch_label: "A".into(),
            },
        ];
        let report = score_partitions(&partitions, &dataset).unwrap();
        assert_eq!(report.classes.len(), 2);
        assert!((report.macro_avg.precision - 1.0).abs() < 1e-12);
        assert!((report.macro_avg.recall - 1.0).abs() < 1e-12);
        assert!((report.micro.f1 - 1.0).abs() < 1e-12);
        assert!((report.classes[0].base_clean_rate - 0.6).abs() < 1e-12);
    }

    #[test]
    fn clean_ratio_is_cluster_clean_fraction() {
        let records: Vec<SampleRecord> = (0..10)
            .map(|i| {
                let truth = if i < 8 { 0 } else { 1 };
                record(i, 0, truth, 0.9, vec![1.0, 0.0])
            })
            .chain([record(10, 1, 1, 0.9, vec![0.0, 1.0])])
            .collect();
        let dataset = two_class_dataset(records);
        let partitions = vec![
            ClassPartition {
                class_index: 0,
                clean_ids: (0..10).collect(),
                noisy_ids: vec![],
                dimension_label: "-".into(),
                branch_label: "-".into(),
            },
            ClassPartition {
                class_index: 1,
                clean_ids: vec![10],
                noisy_ids: vec![],
                dimension_label: "-".into(),
                branch_label: "-".into(),
            },
        ];
        let report = score_partitions(&partitions, &dataset).unwrap();
        assert!((report.classes[0].clean_ratio - 0.8).abs() < 1e-12);
        assert_eq!(report.classes[0].clean_ratio, report.classes[0].precision);
    }

    #[test]
    fn random_partition_precision_matches_noise_rate() {
        // A random split of a 60%-clean class has expected precision 0.6.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 5000u64;
        let records: Vec<SampleRecord> = (0..n)
            .map(|i| {
                let truth = if rng.gen_bool(0.6) { 0 } else { 1 };
                record(i, 0, truth, 0.9, vec![1.0, 0.0])
            })
            .chain([record(n, 1, 1, 0.9, vec![0.0, 1.0])])
            .collect();
        let dataset = two_class_dataset(records);

        let mut clean_ids = Vec::new();
        let mut noisy_ids = Vec::new();
        for i in 0..n {
            if rng.gen_bool(0.5) {
                clean_ids.push(i);
            } else {
                noisy_ids.push(i);
            }
        }
        let partitions = vec![
            ClassPartition {
                class_index: 0,
                clean_ids,
                noisy_ids,
                dimension_label: "-".into(),
                branch_label: "-".into(),
            },
            ClassPartition {
                class_index: 1,
                clean_ids: vec![n],
                noisy_ids: vec![],
                dimension_label: "-".into(),
                branch_label: "-".into(),
            },
        ];
        let report = score_partitions(&partitions, &dataset).unwrap();
        let base = report.classes[0].base_clean_rate;
        assert!((report.classes[0].precision - base).abs() < 0.03);
    }

    #[test]
    fn incomplete_partition_is_rejected() {
        let records: Vec<SampleRecord> = (0..4)
            .map(|i| record(i, 0, 0, 0.9, vec![1.0, 0.0]))
            .chain([record(4, 1, 1, 0.9, vec![0.0, 1.0])])
            .collect();
        let dataset = two_class_dataset(records);
        let partitions = vec![ClassPartition {
            class_index: 0,
            clean_ids: vec![0, 1],
            noisy_ids: vec![2],
            dimension_label: "-".into(),
            branch_label: "-".into(),
        }];
        assert!(matches!(
            score_partitions(&partitions, &dataset),
            Err(Error::PartitionMismatch(_))
        ));
    }

    #[test]
    fn missing_truth_is_an_error() {
        let mut records: Vec<SampleRecord> = (0..4)
            .map(|i| record(i, 0, 0, 0.9, vec![1.0, 0.0]))
            .chain([record(4, 1, 1, 0.9, vec![0.0, 1.0])])
            .collect();
        records[2].true_label = None;
        let dataset = two_class_dataset(records);
        let partitions = vec![ClassPartition {
            class_index: 0,
            clean_ids: (0..4).collect(),
            noisy_ids: vec![],
            dimension_label: "-".into(),
            branch_label: "-".into(),
        }];
        assert!(matches!(
            score_partitions(&partitions, &dataset),
            Err(Error::MissingTruth(_))
        ));
    }

    #[test]
    fn size_groups_use_intrinsic_tertiles() {
        let groups = size_groups(&[100, 90, 80, 70, 60, 50, 40, 30, 20, 10]);
        assert_eq!(groups[0], SizeGroup::Head);
        assert_eq!(groups[3], SizeGroup::Head);
        assert_eq!(groups[4], SizeGroup::Medium);
        assert_eq!(groups[6], SizeGroup::Medium);
        assert_eq!(groups[7], SizeGroup::Tail);
        assert_eq!(groups[9], SizeGroup::Tail);
    }

    #[test]
    fn baseline_small_jsd_picks_the_low_mode() {
        let records: Vec<SampleRecord> = (0..20)
            .map(|i| {
                let conf = if i < 12 { 0.9 } else { 0.15 };
                record(i, 0, 0, conf, vec![1.0, 0.0])
            })
            .collect();
        let refs: Vec<&SampleRecord> = records.iter().collect();
        let (clean, noisy) = baseline_small_jsd(&refs);
        assert_eq!(clean, (0..12).collect::<Vec<u64>>());
        assert_eq!(noisy, (12..20).collect::<Vec<u64>>());
    }

    #[test]
    fn naive_cd_matches_adaptive_on_a_pure_class() {
        // Purity 1: the high-confidence subset spans both feature lobes, so
        // both centroids lean toward the big lobe and cluster assignment
        // agrees even though the centroid values differ.
        let mut records = Vec::new();
        for i in 0..12u64 {
            let angle = 0.02 * i as f64;
            records.push(record(
                i,
                0,
                0,
                0.8 + 0.01 * (i % 3) as f64,
                vec![angle.cos(), angle.sin()],
            ));
        }
        for i in 12..16u64 {
            let angle = 1.2 + 0.02 * (i - 12) as f64;
            records.push(record(
                i,
                0,
                0,
                0.8 + 0.01 * (i % 3) as f64,
                vec![angle.cos(), angle.sin()],
            ));
        }
        let refs: Vec<&SampleRecord> = records.iter().collect();
        let (cd_clean, _) = baseline_naive_cd(&refs).unwrap();

        let stats = ClassStatistics::compute(0, &refs);
        let acd_values: Vec<f64> = refs
            .iter()
            .map(|r| centroids::acd(&r.features, &stats.centroid))
            .collect();
        let ids: Vec<u64> = refs.iter().map(|r| r.id).collect();
        let normed = mixture::normalize_per_class(&acd_values);
        let fit = mixture::fit_two_component(&normed).unwrap();
        let clusters = mixture::assign_clusters(&normed, &ids, &fit);
        // Near-centroid cluster of the adaptive values.
        let acd_clean = clusters.high_ids;

        assert_eq!(cd_clean, acd_clean);
    }

    #[test]
    fn naive_cd_single_sample_class() {
        let records = [record(5, 0, 0, 0.9, vec![0.3, 0.4])];
        let refs: Vec<&SampleRecord> = records.iter().collect();
        let values = baseline_naive_cd_values(&refs).unwrap();
        assert!((values[0] - 1.0).abs() < 1e-12);
        let (clean, noisy) = baseline_naive_cd(&refs).unwrap();
        assert_eq!(clean, vec![5]);
        assert!(noisy.is_empty());
    }

    #[test]
    fn naive_cd_zero_norm_mean_errors() {
        let records = [
            record(0, 0, 0, 0.9, vec![1.0, 0.0]),
            record(1, 0, 0, 0.9, vec![-1.0, 0.0]),
        ];
        let refs: Vec<&SampleRecord> = records.iter().collect();
        assert!(matches!(
            baseline_naive_cd_values(&refs),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn spearman_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.0, 4.0, 5.0, 7.0, 9.0];
        assert!((spearman(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = ys.iter().rev().cloned().collect();
        assert!((spearman(&xs, &rev).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 2.0]), None);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn spearman_handles_ties_with_average_ranks() {
        let xs = [1.0, 2.0, 2.0, 3.0];
        let ys = [1.0, 2.5, 2.5, 4.0];
        assert!((spearman(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_coefficient_extremes() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 * 0.001).collect();
        let b: Vec<f64> = (0..100).map(|i| 1.0 + i as f64 * 0.001).collect();
        assert!(overlap_coefficient(&a, &b, 50) < 0.05);
        assert!((overlap_coefficient(&a, &a, 50) - 1.0).abs() < 1e-12);
    }
}
