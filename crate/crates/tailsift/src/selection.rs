//! Two-stage per-class clean/noisy selection.
//!
//! Stage one turns every sample of an observed class into a point in a 2-D
//! metric space (weighted Jensen-Shannon divergence × centroid cosine). Both
//! axes are min-max normalized per class and clustered by a two-component
//! Gaussian mixture.
//!
//! Stage two decides which axis actually separates the class. The decision
//! looks at the divergence statistics of the two cosine clusters relative to
//! the divergence threshold `d`: if the near-centroid cluster straddles mixed
//! divergences (its spread dwarfs the far cluster's) the cosine axis is
//! contaminated and the divergence clusters win; if both cosine clusters sit
//! above `d` the class is noise-heavy and the divergence clusters win again;
//! otherwise the cosine clusters are used. Finally one cluster is picked as
//! clean: smaller mean divergence on the divergence axis, or a
//! centroid-similarity test on the cosine axis that detects centroids built
//! from another class's strayed samples and flips the choice.

use crate::centroids::{self, ClassStatistics};
use crate::dataset::{Dataset, SampleRecord};
use crate::error::Result;
use crate::metrics;
use crate::mixture::{self, ClusterPair, MixtureFit};
use crate::par;

/// Metric axis a class was separated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Wjsd,
    Acd,
    /// Median split; used for tiny classes and degenerate statistics.
    Fallback,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Wjsd => "wjsd",
            Dimension::Acd => "acd",
            Dimension::Fallback => "fallback",
        }
    }
}

/// Which selection rule fired for a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Divergence threshold splits the cosine clusters and the far cluster
    /// is much tighter: cosine axis contaminated, divergence clusters used.
    WjsdSpan,
    /// Both cosine clusters sit above the divergence threshold: noise-heavy
    /// class, divergence clusters used.
    WjsdAbove,
    /// Neither condition held; cosine clusters used.
    Acd,
    /// Class smaller than the configured minimum: median split.
    TinyClass,
    /// Mixture fit failed or the centroid had zero norm: median split.
    DegenerateStats,
    /// Observed class had no samples; nothing to select.
    EmptyClass,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::WjsdSpan => "A",
            Branch::WjsdAbove => "B",
            Branch::Acd => "C",
            Branch::TinyClass => "fallback-tiny",
            Branch::DegenerateStats => "fallback-degenerate",
            Branch::EmptyClass => "skip-empty",
        }
    }
}

/// Per-sample coordinates in the bi-dimensional metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    pub sample_id: u64,
    pub wjsd: f64,
    pub acd: f64,
}

/// Knobs of the selector. Defaults match the CLI defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    /// Spread-ratio threshold of the dimension-selection rule.
    pub eta: f64,
    /// Centroid-similarity tolerance of the cosine cluster-selection rule.
    pub epsilon: f64,
    /// Classes below this size skip the mixture machinery entirely.
    pub min_class_size: usize,
    /// Log-likelihood stop threshold of the mixture fits.
    pub em_tolerance: f64,
    /// Iteration cap of the mixture fits.
    pub em_max_iterations: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            eta: 0.6,
            epsilon: 0.05,
            min_class_size: 4,
            em_tolerance: mixture::DEFAULT_TOLERANCE,
            em_max_iterations: mixture::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 2.0) {
            return Err(crate::Error::InvalidConfig(format!(
                "eta must be in (0, 2], got {}",
                self.eta
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(crate::Error::InvalidConfig(format!(
                "epsilon must be in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.em_tolerance <= 0.0 || self.em_max_iterations == 0 {
            return Err(crate::Error::InvalidConfig(
                "EM tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the dimension-selection rule looked at, for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub class_size: usize,
    /// Separation threshold of the divergence-axis mixture.
    pub threshold_d: f64,
    /// Divergence mean/std of the near-centroid cosine cluster.
    pub mu1: f64,
    pub sigma1: f64,
    /// Divergence mean/std of the far cosine cluster.
    pub mu2: f64,
    pub sigma2: f64,
    pub wjsd_fit: Option<MixtureFit>,
    pub acd_fit: Option<MixtureFit>,
    /// Class whose centroid matched ours in the flip rule, if any.
    pub matched_class: Option<usize>,
}

impl Diagnostics {
    fn empty(class_size: usize) -> Self {
        Diagnostics {
            class_size,
            threshold_d: f64::NAN,
            mu1: f64::NAN,
            sigma1: f64::NAN,
            mu2: f64::NAN,
            sigma2: f64::NAN,
            wjsd_fit: None,
            acd_fit: None,
            matched_class: None,
        }
    }
}

/// Clean/noisy partition of one observed class.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub class_index: usize,
    pub dimension: Dimension,
    pub branch: Branch,
    /// Ascending sample ids judged clean.
    pub clean_ids: Vec<u64>,
    /// Ascending sample ids judged noisy.
    pub noisy_ids: Vec<u64>,
    pub diagnostics: Diagnostics,
}

/// Raw metric coordinates for every sample of a class.
///
/// `stats` must belong to the same class and its centroid must have positive
/// norm; `select_class` guards the degenerate case before calling this.
pub fn compute_metric_points(
    records: &[&SampleRecord],
    stats: &ClassStatistics,
) -> Vec<MetricPoint> {
    records
        .iter()
        .map(|r| MetricPoint {
            sample_id: r.id,
            wjsd: metrics::wjsd(&r.probs, r.observed_label, &stats.mean_confidence),
            acd: centroids::acd(&r.features, &stats.centroid),
        })
        .collect()
}

/// Outcome of the dimension-selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionChoice {
    pub dimension: Dimension,
    pub branch: Branch,
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
}

fn mean_std(ids: &[u64], all_ids: &[u64], values: &[f64]) -> (f64, f64) {
    if ids.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let picked: Vec<f64> = ids
        .iter()
        .map(|id| {
            let i = all_ids.binary_search(id).expect("cluster id not in class");
            values[i]
        })
        .collect();
    let n = picked.len() as f64;
    let mean = picked.iter().sum::<f64>() / n;
    let var = picked.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Decide which metric axis separates the class.
///
/// `all_ids` must be ascending and aligned with `wjsd_norm` (the per-class
/// normalized divergence values the divergence mixture was fitted on).
/// `acd_clusters` come from the cosine-axis mixture: `high_ids` is the
/// near-centroid cluster, `low_ids` the far one.
pub fn select_dimension(
    all_ids: &[u64],
    wjsd_norm: &[f64],
    wjsd_fit: &MixtureFit,
    acd_clusters: &ClusterPair,
    eta: f64,
) -> DimensionChoice {
    let d = wjsd_fit.threshold_d;
    let near = &acd_clusters.high_ids;
    let far = &acd_clusters.low_ids;
    let (mu1, sigma1) = mean_std(near, all_ids, wjsd_norm);
    let (mu2, sigma2) = mean_std(far, all_ids, wjsd_norm);

    let both_present = !near.is_empty() && !far.is_empty();
    // A zero sigma1 makes the spread ratio infinite, so the first rule
    // cannot fire; NaN comparisons fail closed the same way.
    let span = both_present && mu1 < d && d < mu2 && sigma1 > 0.0 && sigma2 / sigma1 < eta;
    let above = both_present && mu1 > d && mu2 > d;

    let (dimension, branch) = if span {
        (Dimension::Wjsd, Branch::WjsdSpan)
    } else if above {
        (Dimension::Wjsd, Branch::WjsdAbove)
    } else {
        (Dimension::Acd, Branch::Acd)
    };
    DimensionChoice {
        dimension,
        branch,
        mu1,
        sigma1,
        mu2,
        sigma2,
    }
}

/// Pick the clean cluster on the divergence axis: smaller mean divergence
/// wins; ties go to the larger cluster, then to the low cluster. An empty
/// side concedes to the other.
pub fn select_cluster_wjsd(
    clusters: &ClusterPair,
    all_ids: &[u64],
    wjsd_norm: &[f64],
) -> (Vec<u64>, Vec<u64>) {
    if clusters.low_ids.is_empty() {
        return (clusters.high_ids.clone(), Vec::new());
    }
    if clusters.high_ids.is_empty() {
        return (clusters.low_ids.clone(), Vec::new());
    }
    let (mean_low, _) = mean_std(&clusters.low_ids, all_ids, wjsd_norm);
    let (mean_high, _) = mean_std(&clusters.high_ids, all_ids, wjsd_norm);

    let low_is_clean = if mean_low < mean_high {
        true
    } else if mean_high < mean_low {
        false
    } else {
        // Equal means: larger cluster, then the low cluster.
        clusters.low_ids.len() >= clusters.high_ids.len()
    };
    if low_is_clean {
        (clusters.low_ids.clone(), clusters.high_ids.clone())
    } else {
        (clusters.high_ids.clone(), clusters.low_ids.clone())
    }
}

/// Pick the clean cluster on the cosine axis.
///
/// By default the near-centroid cluster is clean. But when some other class
/// `k` has a centroid pointing the same way (cosine within `epsilon` of 1)
/// and a larger high-confidence set, our centroid was built from samples
/// that really belong to `k` — their true class keeps the majority because
/// flipped-label fractions stay below one half — so the far cluster is the
/// clean one. Returns (clean, noisy, matched class).
pub fn select_cluster_acd(
    acd_clusters: &ClusterPair,
    class_stats: &ClassStatistics,
    all_stats: &[Option<ClassStatistics>],
    epsilon: f64,
) -> (Vec<u64>, Vec<u64>, Option<usize>) {
    let near = &acd_clusters.high_ids;
    let far = &acd_clusters.low_ids;

    let own_norm = centroids::norm(&class_stats.centroid);
    let mut matched = None;
    if own_norm > 0.0 {
        for (k, stats) in all_stats.iter().enumerate() {
            if k == class_stats.class_index {
                continue;
            }
            let Some(other) = stats else { continue };
            if centroids::norm(&other.centroid) <= 0.0 {
                continue;
            }
            let cos = centroids::acd(&class_stats.centroid, &other.centroid);
            if (cos - 1.0).abs() < epsilon
                && class_stats.high_conf_ids.len() < other.high_conf_ids.len()
            {
                matched = Some(k);
                break;
            }
        }
    }

    let (clean, noisy) = if matched.is_some() {
        (far.clone(), near.clone())
    } else {
        (near.clone(), far.clone())
    };
    // A degenerate one-sided clustering concedes to the nonempty side.
    if clean.is_empty() && !noisy.is_empty() {
        return (noisy, clean, matched);
    }
    (clean, noisy, matched)
}

/// Median-split fallback: ascending by (divergence, id), lower half clean.
fn median_split(points: &[MetricPoint]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .wjsd
            .partial_cmp(&points[b].wjsd)
            .unwrap()
            .then(points[a].sample_id.cmp(&points[b].sample_id))
    });
    let cut = points.len().div_ceil(2);
    let mut clean: Vec<u64> = order[..cut].iter().map(|&i| points[i].sample_id).collect();
    let mut noisy: Vec<u64> = order[cut..].iter().map(|&i| points[i].sample_id).collect();
    clean.sort_unstable();
    noisy.sort_unstable();
    (clean, noisy)
}

fn fallback_outcome(
    class_index: usize,
    branch: Branch,
    points: &[MetricPoint],
    diagnostics: Diagnostics,
) -> SelectionOutcome {
    let (clean_ids, noisy_ids) = median_split(points);
    SelectionOutcome {
        class_index,
        dimension: Dimension::Fallback,
        branch,
        clean_ids,
        noisy_ids,
        diagnostics,
    }
}

/// Run the full two-stage selection for one observed class.
///
/// `all_stats` is the immutable per-class statistics table for the whole
/// dataset (the cosine cluster-selection rule compares centroids across
/// classes). Records may arrive in any order; the outcome depends only on
/// their contents.
pub fn select_class(
    class_index: usize,
    records: &[&SampleRecord],
    all_stats: &[Option<ClassStatistics>],
    config: &SelectionConfig,
) -> SelectionOutcome {
    if records.is_empty() {
        return SelectionOutcome {
            class_index,
            dimension: Dimension::Fallback,
            branch: Branch::EmptyClass,
            clean_ids: Vec::new(),
            noisy_ids: Vec::new(),
            diagnostics: Diagnostics::empty(0),
        };
    }

    let stats = all_stats[class_index]
        .as_ref()
        .expect("statistics missing for a nonempty class");

    // Fix the processing order to ascending id so float summation inside the
    // fits cannot depend on record order.
    let mut sorted: Vec<&SampleRecord> = records.to_vec();
    sorted.sort_by_key(|r| r.id);
    let ids: Vec<u64> = sorted.iter().map(|r| r.id).collect();

    let mut diagnostics = Diagnostics::empty(sorted.len());

    // Degenerate centroid: the cosine axis is undefined, fall back to a
    // divergence-only split.
    if centroids::norm(&stats.centroid) <= 0.0 {
        let points: Vec<MetricPoint> = sorted
            .iter()
            .map(|r| MetricPoint {
                sample_id: r.id,
                wjsd: metrics::wjsd(&r.probs, r.observed_label, &stats.mean_confidence),
                acd: f64::NAN,
            })
            .collect();
        return fallback_outcome(class_index, Branch::DegenerateStats, &points, diagnostics);
    }

    let points = compute_metric_points(&sorted, stats);

    if sorted.len() < config.min_class_size {
        return fallback_outcome(class_index, Branch::TinyClass, &points, diagnostics);
    }

    let wjsd_raw: Vec<f64> = points.iter().map(|p| p.wjsd).collect();
    let acd_raw: Vec<f64> = points.iter().map(|p| p.acd).collect();
    let wjsd_norm = mixture::normalize_per_class(&wjsd_raw);
    let acd_norm = mixture::normalize_per_class(&acd_raw);

    let fits = (
        mixture::fit_two_component_with(&wjsd_norm, config.em_tolerance, config.em_max_iterations),
        mixture::fit_two_component_with(&acd_norm, config.em_tolerance, config.em_max_iterations),
    );
    let (wjsd_fit, acd_fit) = match fits {
        (Ok(w), Ok(a)) => (w, a),
        _ => {
            return fallback_outcome(class_index, Branch::DegenerateStats, &points, diagnostics);
        }
    };

    let wjsd_clusters = mixture::assign_clusters(&wjsd_norm, &ids, &wjsd_fit);
    let acd_clusters = mixture::assign_clusters(&acd_norm, &ids, &acd_fit);

    let choice = select_dimension(&ids, &wjsd_norm, &wjsd_fit, &acd_clusters, config.eta);
    diagnostics.threshold_d = wjsd_fit.threshold_d;
    diagnostics.mu1 = choice.mu1;
    diagnostics.sigma1 = choice.sigma1;
    diagnostics.mu2 = choice.mu2;
    diagnostics.sigma2 = choice.sigma2;

    let (mut clean_ids, mut noisy_ids) = match choice.dimension {
        Dimension::Wjsd => {
            let (clean, noisy) = select_cluster_wjsd(&wjsd_clusters, &ids, &wjsd_norm);
            (clean, noisy)
        }
        Dimension::Acd => {
            let (clean, noisy, matched) =
                select_cluster_acd(&acd_clusters, stats, all_stats, config.epsilon);
            diagnostics.matched_class = matched;
            (clean, noisy)
        }
        Dimension::Fallback => unreachable!("dimension selection never yields fallback"),
    };
    clean_ids.sort_unstable();
    noisy_ids.sort_unstable();

    diagnostics.wjsd_fit = Some(wjsd_fit);
    diagnostics.acd_fit = Some(acd_fit);

    SelectionOutcome {
        class_index,
        dimension: choice.dimension,
        branch: choice.branch,
        clean_ids,
        noisy_ids,
        diagnostics,
    }
}

fn select_all_inner(
    dataset: &Dataset,
    config: &SelectionConfig,
    stats: &[Option<ClassStatistics>],
    class: usize,
) -> SelectionOutcome {
    let records = dataset.class_records(class);
    select_class(class, &records, stats, config)
}

/// Selection for every observed class; per-class work runs in parallel when
/// the `parallel` feature is enabled. Outcomes are indexed by class.
pub fn select_all(dataset: &Dataset, config: &SelectionConfig) -> Result<Vec<SelectionOutcome>> {
    config.validate()?;
    let stats = centroids::build_class_statistics(dataset);
    Ok(par::map_indexed(dataset.num_classes(), |class| {
        select_all_inner(dataset, config, &stats, class)
    }))
}

/// Sequential twin of [`select_all`]; same results, one thread.
pub fn select_all_seq(
    dataset: &Dataset,
    config: &SelectionConfig,
) -> Result<Vec<SelectionOutcome>> {
    config.validate()?;
    let stats = centroids::build_class_statistics_seq(dataset);
    Ok(par::map_indexed_seq(dataset.num_classes(), |class| {
        select_all_inner(dataset, config, &stats, class)
    }))
}
