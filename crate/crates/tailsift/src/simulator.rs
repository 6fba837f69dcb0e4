//! Ground-truth-bearing synthetic datasets.
//!
//! Construction order follows the standard benchmark recipe: draw a
//! long-tailed intrinsic class distribution first (exponential decay in
//! class sizes), inject label noise second (symmetric or asymmetric with a
//! seeded random derangement), then synthesize model outputs for every
//! sample.
//!
//! The output synthesizer stands in for a trained network. Features are
//! noisy copies of per-class unit prototypes. Confidences come from a
//! nearest-class-mean classifier whose class weights are the feature means
//! of the *observed* classes — the weights are learned from the noisy
//! labels, exactly like a classifier head would be. That one choice
//! reproduces the phenomenology the selector targets: tail classes get weak,
//! polluted weights; a class whose noise comes from a single source merges
//! with it in prediction space while staying separated in feature space.
//! A final blend toward the observed one-hot label models label
//! memorization. The `model_quality`, `memorization`, and `temperature`
//! knobs are simulator parameters, not quantities estimated from any real
//! training run.
//!
//! All randomness flows through one seeded generator in a fixed order, so a
//! given configuration is byte-reproducible. Generation is single-threaded
//! by design; parallelize across datasets, not within one.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Manifest, SampleRecord};
use crate::error::{Error, Result};

/// Feature-noise scale at `model_quality` = 1.
const FEATURE_NOISE_FLOOR: f64 = 0.05;
/// Additional feature noise per unit of lost model quality.
const FEATURE_NOISE_SLOPE: f64 = 1.5;
/// How much worse rare classes' features are: the per-class noise scale is
/// multiplied by `(n_max / n_class)^EXP`. A model trained on a long tail
/// learns crisp features for big classes and mush for rare ones; at
/// `model_quality` = 1 the multiplier is disabled.
const FEATURE_NOISE_SIZE_EXP: f64 = 0.3;
/// Prototypes come in confusion groups of roughly three classes around a
/// shared anchor, like semantically close classes in real datasets. These
/// constants set how far a prototype strays from its group anchor; higher
/// model quality spreads the groups apart.
const GROUP_SPREAD_BASE: f64 = 0.35;
const GROUP_SPREAD_QUALITY: f64 = 0.9;
/// Classifier-fidelity curve: the classifier weights blend this share of
/// the true prototype with the observed-class feature mean. The share is
/// `max(q^8, FLOOR)`, so a realistic-quality model largely fits the label
/// noise (a small fixed prototype pull survives) while quality 1 yields
/// exactly the prototype bank.
const CLASSIFIER_FIDELITY_POWER: i32 = 8;
const CLASSIFIER_FIDELITY_FLOOR: f64 = 0.2;
/// How strongly overall label noise drags down effective model quality.
const NOISE_QUALITY_DRAG: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseType {
    Symmetric,
    Asymmetric,
}

impl NoiseType {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseType::Symmetric => "sym",
            NoiseType::Asymmetric => "asym",
        }
    }
}

/// Full description of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    /// Number of classes M.
    pub num_classes: usize,
    /// Size of the largest intrinsic class.
    pub max_class_size: usize,
    /// Ratio of smallest to largest intrinsic class size, in (0, 1].
    pub imbalance_factor: f64,
    pub noise_type: NoiseType,
    /// Fraction of samples whose observed label is corrupted.
    pub noise_ratio: f64,
    pub feature_dim: usize,
    /// Prototype separation / feature sharpness knob in [0, 1].
    pub model_quality: f64,
    /// Strength of the blend toward the observed one-hot label, in [0, 1].
    /// The effective blend weight is `(1 − model_quality) · memorization`.
    pub memorization: f64,
    /// Softmax temperature of the synthetic classifier.
    pub temperature: f64,
    pub seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            num_classes: 10,
            max_class_size: 1000,
            imbalance_factor: 0.1,
            noise_type: NoiseType::Symmetric,
            noise_ratio: 0.4,
            feature_dim: 32,
            model_quality: 0.7,
            memorization: 0.25,
            temperature: 0.25,
            seed: 0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_classes < 2 {
            return fail(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        if self.max_class_size < self.num_classes {
            return fail(format!(
                "max_class_size {} below num_classes {}",
                self.max_class_size, self.num_classes
            ));
        }
        if !(self.imbalance_factor > 0.0 && self.imbalance_factor <= 1.0) {
            return fail(format!(
                "imbalance_factor must be in (0, 1], got {}",
                self.imbalance_factor
            ));
        }
        if !(0.0..1.0).contains(&self.noise_ratio) {
            return fail(format!(
                "noise_ratio must be in [0, 1), got {}",
                self.noise_ratio
            ));
        }
        if self.noise_type == NoiseType::Asymmetric && self.noise_ratio >= 0.5 {
            return fail(format!(
                "asymmetric noise_ratio must stay below 0.5, got {}",
                self.noise_ratio
            ));
        }
        if self.feature_dim < 2 {
            return fail(format!("feature_dim must be >= 2, got {}", self.feature_dim));
        }
        if !(0.0..=1.0).contains(&self.model_quality) {
            return fail(format!(
                "model_quality must be in [0, 1], got {}",
                self.model_quality
            ));
        }
        if !(0.0..=1.0).contains(&self.memorization) {
            return fail(format!(
                "memorization must be in [0, 1], got {}",
                self.memorization
            ));
        }
        if self.temperature <= 0.0 {
            return fail(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        Ok(())
    }
}

/// Prototype and classifier geometry of a synthesized dataset, exposed for
/// diagnostics and tests. Not persisted.
#[derive(Debug, Clone)]
pub struct SynthInfo {
    /// True-class feature prototypes, unit norm.
    pub prototypes: Vec<Vec<f64>>,
    /// Observed-class mean-feature classifier weights, unit norm.
    pub class_weights: Vec<Vec<f64>>,
}

/// Intrinsic class sizes under exponential decay:
/// `n_c = round(n1 · factor^(c / (M−1)))` for c = 0..M.
pub fn longtail_counts(
    num_classes: usize,
    max_class_size: usize,
    imbalance_factor: f64,
) -> Result<Vec<usize>> {
    if num_classes < 2 {
        return Err(Error::InvalidConfig(format!(
            "num_classes must be >= 2, got {num_classes}"
        )));
    }
    if max_class_size < num_classes {
        return Err(Error::InvalidConfig(format!(
            "max_class_size {max_class_size} below num_classes {num_classes}"
        )));
    }
    if !(imbalance_factor > 0.0 && imbalance_factor <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "imbalance_factor must be in (0, 1], got {imbalance_factor}"
        )));
    }
    let counts: Vec<usize> = (0..num_classes)
        .map(|c| {
            let exponent = c as f64 / (num_classes - 1) as f64;
            (max_class_size as f64 * imbalance_factor.powf(exponent)).round() as usize
        })
        .collect();
    if counts.last().copied() == Some(0) {
        return Err(Error::InvalidConfig(format!(
            "smallest class rounds to zero samples \
             (max_class_size {max_class_size}, imbalance_factor {imbalance_factor})"
        )));
    }
    Ok(counts)
}

/// Flip exactly `round(N · ratio)` uniformly chosen samples to a uniformly
/// random *different* class.
pub fn inject_symmetric_noise(
    true_labels: &[usize],
    num_classes: usize,
    noise_ratio: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut observed = true_labels.to_vec();
    let n_noisy = (true_labels.len() as f64 * noise_ratio).round() as usize;
    let mut chosen = rand::seq::index::sample(rng, true_labels.len(), n_noisy).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let offset = rng.gen_range(0..num_classes - 1);
        let flipped = if offset >= true_labels[i] {
            offset + 1
        } else {
            offset
        };
        observed[i] = flipped;
    }
    observed
}

/// Flip a `round(n_c · ratio)` subset of every class to a fixed target class
/// given by a random derangement of the class indices.
///
/// Returns the observed labels and the realized row-stochastic transition
/// matrix (exact per-sample bookkeeping, not the nominal rates).
pub fn inject_asymmetric_noise(
    true_labels: &[usize],
    num_classes: usize,
    noise_ratio: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<Vec<f64>>) {
    // Uniform random derangement by rejection; a couple of tries on average.
    let derangement = loop {
        let mut perm: Vec<usize> = (0..num_classes).collect();
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            break perm;
        }
    };

    let mut observed = true_labels.to_vec();
    for class in 0..num_classes {
        let members: Vec<usize> = (0..true_labels.len())
            .filter(|&i| true_labels[i] == class)
            .collect();
        let n_flip = (members.len() as f64 * noise_ratio).round() as usize;
        let mut chosen = rand::seq::index::sample(rng, members.len(), n_flip).into_vec();
        chosen.sort_unstable();
        for pick in chosen {
            observed[members[pick]] = derangement[class];
        }
    }
    let matrix = realized_transition_matrix(true_labels, &observed, num_classes);
    (observed, matrix)
}

/// Row-stochastic transition matrix realized by an actual labeling:
/// `T[a][b]` = fraction of class-`a` samples observed as `b`.
pub fn realized_transition_matrix(
    true_labels: &[usize],
    observed_labels: &[usize],
    num_classes: usize,
) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    let mut totals = vec![0usize; num_classes];
    for (&truth, &obs) in true_labels.iter().zip(observed_labels) {
        counts[truth][obs] += 1;
        totals[truth] += 1;
    }
    counts
        .into_iter()
        .zip(&totals)
        .map(|(row, &total)| {
            if total == 0 {
                row.into_iter().map(|_| 0.0).collect()
            } else {
                row.into_iter().map(|c| c as f64 / total as f64).collect()
            }
        })
        .collect()
}

fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = crate::centroids::norm(&v);
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn normalize_in_place(v: &mut [f64]) {
    let n = crate::centroids::norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Fill `probs` and `features` of every record.
///
/// Records must carry observed and true labels. Draw order is the record
/// order, so callers keep records id-ordered for reproducibility.
pub fn synthesize_outputs(
    records: &mut [SampleRecord],
    config: &SimulatorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SynthInfo> {
    if config.feature_dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "feature_dim must be >= 2, got {}",
            config.feature_dim
        )));
    }
    let m = config.num_classes;
    let dim = config.feature_dim;

    // Effective model quality: training on noisier labels yields a worse
    // model across the board. The penalty scales with the remaining quality
    // gap, so a perfect model (quality 1) stays perfect at any noise level.
    let noise_frac = records
        .iter()
        .filter(|r| r.true_label != Some(r.observed_label))
        .count() as f64
        / records.len().max(1) as f64;
    let q = (1.0 - (1.0 - config.model_quality) * (1.0 + NOISE_QUALITY_DRAG * noise_frac))
        .clamp(0.0, 1.0);

    // Class prototypes: confusion groups of ~3 classes share an anchor
    // direction; each prototype strays from its anchor by an amount that
    // grows with model quality. Group membership interleaves class indices
    // so every group spans the size spectrum.
    let group_count = (m / 3).max(2);
    let anchors: Vec<Vec<f64>> = (0..group_count)
        .map(|_| random_unit_vector(dim, rng))
        .collect();
    let spread = GROUP_SPREAD_BASE + GROUP_SPREAD_QUALITY * q;
    let mut prototypes = Vec::with_capacity(m);
    for class in 0..m {
        let own = random_unit_vector(dim, rng);
        let anchor = &anchors[class % group_count];
        let mut proto: Vec<f64> = anchor
            .iter()
            .zip(&own)
            .map(|(&a, &v)| a + spread * v)
            .collect();
        normalize_in_place(&mut proto);
        prototypes.push(proto);
    }

    // Features: prototype of the true class plus isotropic noise, unit norm.
    // The per-coordinate scale is divided by sqrt(dim) so the total noise
    // magnitude is dimension-independent. Rare true classes get noisier
    // features, scaled by how far their size falls below the largest class.
    let mut true_counts = vec![0usize; m];
    for record in records.iter() {
        let truth = record.true_label.ok_or_else(|| {
            Error::MissingTruth(format!("record {} has no true label", record.id))
        })?;
        true_counts[truth] += 1;
    }
    let max_count = true_counts.iter().copied().max().unwrap_or(1).max(1);
    let base_sigma = FEATURE_NOISE_FLOOR + FEATURE_NOISE_SLOPE * (1.0 - q);
    let class_sigma: Vec<f64> = true_counts
        .iter()
        .map(|&n| {
            let rarity = if n == 0 {
                1.0
            } else {
                (max_count as f64 / n as f64).powf(FEATURE_NOISE_SIZE_EXP)
            };
            // A perfect model is immune to class rarity.
            let rarity = 1.0 + (rarity - 1.0) * (1.0 - q);
            base_sigma * rarity / (dim as f64).sqrt()
        })
        .collect();
    // Mislabeled samples get their stored features dragged part-way toward
    // the prototype of their observed label: a model that cannot explain a
    // wrong label structurally memorizes the sample and distorts its
    // representation. The drag shrinks with the coherence of the sample's
    // noise group — when a large block of one class shares the same wrong
    // label (asymmetric noise), the classifier head absorbs it instead and
    // the features stay put.
    let mut pair_counts = vec![vec![0usize; m]; m];
    let mut class_counts = vec![0usize; m];
    for record in records.iter() {
        let truth = record.true_label.expect("checked above");
        pair_counts[truth][record.observed_label] += 1;
        class_counts[record.observed_label] += 1;
    }
    let drift_cap = (4.0 * (1.0 - q) * config.memorization).min(1.0);

    // Each sample gets two independent noisy views of its prototype: the
    // stored feature (what selection sees) and a logit view (what the
    // classifier head sees). A real network's penultimate features and
    // logits carry different noise, which is what lets one view separate a
    // class when the other cannot. Class rarity degrades the stored feature
    // only; the classifier head averages over the whole training set and
    // keeps the base noise level.
    let logit_sigma = 0.5 * base_sigma / (dim as f64).sqrt();
    let mut logit_views: Vec<Vec<f64>> = Vec::with_capacity(records.len());
    for record in records.iter_mut() {
        let truth = record.true_label.expect("checked above");
        let observed = record.observed_label;
        let drift = if truth == observed {
            let _ = rng.gen_range(0.0..1.0f64);
            0.0
        } else {
            let share = pair_counts[truth][observed] as f64 / class_counts[observed].max(1) as f64;
            // sqrt skews the per-sample strength upward: a sizable minority
            // of incoherent noise is memorized nearly all the way.
            drift_cap * rng.gen_range(0.0..1.0f64).sqrt() * (1.0 - share).powi(3)
        };

        let mut draw = |sigma: f64, drift: f64| -> Vec<f64> {
            let mut v: Vec<f64> = prototypes[truth]
                .iter()
                .zip(&prototypes[observed])
                .map(|(&p_true, &p_obs)| {
                    let noise: f64 = StandardNormal.sample(rng);
                    (1.0 - drift) * p_true + drift * p_obs + sigma * noise
                })
                .collect();
            normalize_in_place(&mut v);
            v
        };
        record.features = draw(class_sigma[truth], drift);
        logit_views.push(draw(logit_sigma, 0.0));
    }

    // Classifier weights: the observed-class feature mean (a class head fit
    // to the noisy labels), pulled toward the true prototype by the
    // fidelity share. Empty observed classes fall back to their prototype.
    let fidelity = q.powi(CLASSIFIER_FIDELITY_POWER).max(CLASSIFIER_FIDELITY_FLOOR);
    let mut weights = vec![vec![0.0f64; dim]; m];
    let mut counts = vec![0usize; m];
    for record in records.iter() {
        let class = record.observed_label;
        for (slot, &f) in weights[class].iter_mut().zip(&record.features) {
            *slot += f;
        }
        counts[class] += 1;
    }
    for (class, weight) in weights.iter_mut().enumerate() {
        if counts[class] == 0 {
            weight.clone_from(&prototypes[class]);
            continue;
        }
        normalize_in_place(weight);
        for (w, &p) in weight.iter_mut().zip(&prototypes[class]) {
            *w = fidelity * p + (1.0 - fidelity) * *w;
        }
        normalize_in_place(weight);
    }

    // Confidences: tempered softmax over weight similarities of the logit
    // view, blended toward the observed one-hot label.
    let blend = (1.0 - q) * config.memorization;
    for (record, logit_view) in records.iter_mut().zip(&logit_views) {
        let logits: Vec<f64> = weights
            .iter()
            .map(|w| {
                let dot: f64 = logit_view.iter().zip(w).map(|(a, b)| a * b).sum();
                dot / config.temperature
            })
            .collect();
        let peak = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - peak).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut probs: Vec<f64> = exps.into_iter().map(|e| (1.0 - blend) * e / total).collect();
        probs[record.observed_label] += blend;
        record.probs = probs;
    }

    Ok(SynthInfo {
        prototypes,
        class_weights: weights,
    })
}

/// Generate a complete synthetic dataset.
pub fn generate(config: &SimulatorConfig) -> Result<Dataset> {
    Ok(generate_with_info(config)?.0)
}

/// [`generate`] plus the synthesizer geometry, for tests and diagnostics.
pub fn generate_with_info(config: &SimulatorConfig) -> Result<(Dataset, SynthInfo)> {
    config.validate()?;
    let counts = longtail_counts(
        config.num_classes,
        config.max_class_size,
        config.imbalance_factor,
    )?;

    let mut true_labels = Vec::with_capacity(counts.iter().sum());
    for (class, &count) in counts.iter().enumerate() {
        true_labels.extend(std::iter::repeat(class).take(count));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (observed, matrix) = match config.noise_type {
        NoiseType::Symmetric => {
            let observed = inject_symmetric_noise(
                &true_labels,
                config.num_classes,
                config.noise_ratio,
                &mut rng,
            );
            let matrix =
                realized_transition_matrix(&true_labels, &observed, config.num_classes);
            (observed, matrix)
        }
        NoiseType::Asymmetric => inject_asymmetric_noise(
            &true_labels,
            config.num_classes,
            config.noise_ratio,
            &mut rng,
        ),
    };

    let mut records: Vec<SampleRecord> = true_labels
        .iter()
        .zip(&observed)
        .enumerate()
        .map(|(id, (&truth, &obs))| SampleRecord {
            id: id as u64,
            observed_label: obs,
            probs: Vec::new(),
            features: Vec::new(),
            true_label: Some(truth),
        })
        .collect();
    let info = synthesize_outputs(&mut records, config, &mut rng)?;

    let mut observed_counts = vec![0usize; config.num_classes];
    for &obs in &observed {
        observed_counts[obs] += 1;
    }
    let manifest = Manifest {
        num_classes: config.num_classes,
        feature_dim: config.feature_dim,
        record_count: records.len(),
        observed_counts,
        intrinsic_counts: Some(counts),
        transition_matrix: Some(matrix),
        generator: Some(config.clone()),
    };
    let dataset = Dataset::new(manifest, records)?;
    Ok((dataset, info))
}
