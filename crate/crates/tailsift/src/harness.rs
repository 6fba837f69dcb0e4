//! Benchmark harness: the eight pipeline-level checks behind `bench` and the
//! acceptance test suite.
//!
//! Each criterion is a pure function from a [`BenchConfig`] to a
//! [`CriterionOutcome`] with a pass flag and a human-readable detail line.
//! Thresholds and tolerances are pinned here in code, not in configuration;
//! the config only chooses seeds, dataset scales, and synthesizer knobs.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset};
use crate::error::Result;
use crate::eval::{self, SizeGroup, SweepPoint};
use crate::metrics;
use crate::mixture;
use crate::report;
use crate::selection::{self, Branch, Dimension, SelectionConfig};
use crate::simulator::{self, NoiseType, SimulatorConfig};

/// Scenario knobs for the bench runs. Scales are the `max_class_size` of the
/// simulated datasets; the per-criterion noise settings are fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub seeds: Vec<u64>,
    pub classes: usize,
    pub feature_dim: usize,
    pub model_quality: f64,
    pub memorization: f64,
    pub temperature: f64,
    /// Largest-class size for the dimension-complementarity runs (IF 0.1).
    pub complementarity_max_size: usize,
    /// Largest-class size for the tail-dominance runs (IF 0.1, ~20k records).
    pub dominance_max_size: usize,
    /// Largest-class size for the purity-improvement runs (IF 0.01).
    pub purity_max_size: usize,
    /// Largest-class size for the purity sweep (IF 0.1).
    pub sweep_max_size: usize,
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seeds: vec![1, 2, 3, 4, 5],
            classes: 10,
            feature_dim: 32,
            model_quality: 0.7,
            memorization: 0.25,
            temperature: 0.25,
            complementarity_max_size: 2000,
            dominance_max_size: 5150,
            purity_max_size: 3000,
            sweep_max_size: 2000,
            eta: 0.6,
            epsilon: 0.05,
        }
    }
}

impl BenchConfig {
    fn simulator(
        &self,
        noise_type: NoiseType,
        noise_ratio: f64,
        imbalance_factor: f64,
        max_class_size: usize,
        seed: u64,
    ) -> SimulatorConfig {
        SimulatorConfig {
            num_classes: self.classes,
            max_class_size,
            imbalance_factor,
            noise_type,
            noise_ratio,
            feature_dim: self.feature_dim,
            model_quality: self.model_quality,
            memorization: self.memorization,
            temperature: self.temperature,
            seed,
        }
    }

    fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            eta: self.eta,
            epsilon: self.epsilon,
            ..SelectionConfig::default()
        }
    }
}

/// Result of one bench criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn status_line(&self) -> String {
        format!(
            "[{}] criterion {}: {} — {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details,
            self.seconds
        )
    }
}

/// Everything a bench run produces.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub criteria: Vec<CriterionOutcome>,
    pub sweep_points: Vec<SweepPoint>,
    pub sweep_rho: Option<f64>,
}

impl BenchReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

fn timed<F: FnOnce() -> (bool, String)>(id: usize, name: &'static str, f: F) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, details) = f();
    CriterionOutcome {
        id,
        name,
        passed,
        details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Criterion 1: the divergence-difference bound holds over a million random
/// ordered confidence pairs, in bounded time.
pub fn criterion_1_divergence_bound(_cfg: &BenchConfig) -> CriterionOutcome {
    timed(1, "divergence difference bound", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0);
        let pairs = 1_000_000usize;
        let mut violations = 0usize;
        let start = Instant::now();
        for _ in 0..pairs {
            let a: f64 = rng.gen_range(f64::MIN_POSITIVE..=1.0);
            let b: f64 = rng.gen_range(f64::MIN_POSITIVE..=1.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let gap = (metrics::jsd_closed_form(lo) - metrics::jsd_closed_form(hi)).abs();
            if gap > metrics::jsd_difference_bound(lo, hi) + 1e-9 {
                violations += 1;
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        let passed = violations == 0 && elapsed < 10.0;
        (
            passed,
            format!("{violations} violations over {pairs} ordered pairs in {elapsed:.2}s (< 10s)"),
        )
    })
}

/// Criterion 2: the one-hot divergence equals its closed form across random
/// vector sizes and mass placements.
pub fn criterion_2_closed_form(_cfg: &BenchConfig) -> CriterionOutcome {
    timed(2, "closed-form divergence equivalence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
        let mut max_err = 0.0f64;
        for _ in 0..10_000 {
            let m = rng.gen_range(2..=100);
            let mut probs: Vec<f64> = (0..m).map(|_| rng.gen_range(1e-6..1.0)).collect();
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
            let observed = rng.gen_range(0..m);
            let err = (metrics::jsd(&probs, observed)
                - metrics::jsd_closed_form(probs[observed]))
            .abs();
            max_err = max_err.max(err);
        }
        (
            max_err < 1e-9,
            format!("max |jsd − closed_form| = {max_err:.3e} over 10000 vectors (< 1e-9)"),
        )
    })
}

/// Criterion 3: the mixture fit recovers known parameters, keeps the
/// log-likelihood monotone, and recovers component labels, in bounded time.
pub fn criterion_3_mixture_oracle(_cfg: &BenchConfig) -> CriterionOutcome {
    timed(3, "mixture fit against generation oracle", || {
        let start = Instant::now();
        let mut worst_mean_err = 0.0f64;
        let mut worst_recovery = 1.0f64;
        let mut monotone = true;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0xD0 + seed);
            let lo = Normal::new(0.2, 0.05).unwrap();
            let hi = Normal::new(0.8, 0.05).unwrap();
            let mut values: Vec<f64> = Vec::with_capacity(2000);
            for _ in 0..1000 {
                values.push(lo.sample(&mut rng));
            }
            for _ in 0..1000 {
                values.push(hi.sample(&mut rng));
            }
            let ids: Vec<u64> = (0..2000).collect();
            let fit = mixture::fit_two_component(&values).expect("enough samples");

            worst_mean_err = worst_mean_err
                .max((fit.means[0] - 0.2).abs())
                .max((fit.means[1] - 0.8).abs());
            for pair in fit.ll_trace.windows(2) {
                if pair[1] < pair[0] - 1e-9 {
                    monotone = false;
                }
            }
            let clusters = mixture::assign_clusters(&values, &ids, &fit);
            let correct = clusters.low_ids.iter().filter(|&&id| id < 1000).count()
                + clusters.high_ids.iter().filter(|&&id| id >= 1000).count();
            worst_recovery = worst_recovery.min(correct as f64 / 2000.0);
        }
        let elapsed = start.elapsed().as_secs_f64();
        let passed =
            worst_mean_err <= 0.02 && monotone && worst_recovery >= 0.99 && elapsed < 5.0;
        (
            passed,
            format!(
                "20 seeds: max mean error {worst_mean_err:.4} (≤ 0.02), \
                 min recovery {:.2}% (≥ 99%), monotone={monotone}, {elapsed:.2}s (< 5s)",
                worst_recovery * 100.0
            ),
        )
    })
}

/// Criterion 4: the high-confidence subset never lowers class purity, and
/// strictly raises it wherever the observed class is impure (< 0.9).
pub fn criterion_4_purity_improvement(cfg: &BenchConfig) -> CriterionOutcome {
    timed(4, "high-confidence purity improvement", || {
        let mut checked = 0usize;
        let mut failures = Vec::new();
        for &seed in &cfg.seeds {
            let sim = cfg.simulator(NoiseType::Asymmetric, 0.4, 0.01, cfg.purity_max_size, seed);
            let dataset = match simulator::generate(&sim) {
                Ok(d) => d,
                Err(e) => return (false, format!("generation failed: {e}")),
            };
            let pairs = match eval::high_confidence_purity_pairs(&dataset) {
                Ok(p) => p,
                Err(e) => return (false, format!("purity computation failed: {e}")),
            };
            for (class, class_purity, high_purity) in pairs {
                checked += 1;
                let improved = high_purity >= class_purity - 1e-12;
                let strict_ok = class_purity >= 0.9 || high_purity > class_purity;
                if !(improved && strict_ok) {
                    failures.push(format!(
                        "seed {seed} class {class}: {class_purity:.3} → {high_purity:.3}"
                    ));
                }
            }
        }
        let passed = failures.is_empty();
        let details = if passed {
            format!(
                "{checked} class instances over {} seeds, all improved or already ≥ 0.9",
                cfg.seeds.len()
            )
        } else {
            format!("{} of {checked} classes regressed: {}", failures.len(), failures.join("; "))
        };
        (passed, details)
    })
}

fn dimension_fraction(outcomes: &[selection::SelectionOutcome], dim: Dimension) -> (usize, usize) {
    let total = outcomes
        .iter()
        .filter(|o| o.branch != Branch::EmptyClass)
        .count();
    let hits = outcomes.iter().filter(|o| o.dimension == dim).count();
    (hits, total)
}

/// Criterion 5: symmetric noise drives most classes to the divergence axis,
/// asymmetric noise to the cosine axis (70% pooled over seeds, each way).
pub fn criterion_5_complementarity(cfg: &BenchConfig) -> CriterionOutcome {
    timed(5, "metric complementarity", || {
        let selection_cfg = cfg.selection();
        let run = |noise_type: NoiseType, dim: Dimension| -> Result<(usize, usize)> {
            let mut hits = 0;
            let mut total = 0;
            for &seed in &cfg.seeds {
                let sim = cfg.simulator(
                    noise_type,
                    0.4,
                    0.1,
                    cfg.complementarity_max_size,
                    seed,
                );
                let dataset = simulator::generate(&sim)?;
                let outcomes = selection::select_all(&dataset, &selection_cfg)?;
                let (h, t) = dimension_fraction(&outcomes, dim);
                hits += h;
                total += t;
            }
            Ok((hits, total))
        };
        let sym = run(NoiseType::Symmetric, Dimension::Wjsd);
        let asym = run(NoiseType::Asymmetric, Dimension::Acd);
        match (sym, asym) {
            (Ok((sym_hits, sym_total)), Ok((asym_hits, asym_total))) => {
                let sym_frac = sym_hits as f64 / sym_total as f64;
                let asym_frac = asym_hits as f64 / asym_total as f64;
                let passed = sym_frac >= 0.7 && asym_frac >= 0.7;
                (
                    passed,
                    format!(
                        "sym: {sym_hits}/{sym_total} ({:.0}%) chose the divergence axis; \
                         asym: {asym_hits}/{asym_total} ({:.0}%) chose the cosine axis (both ≥ 70%)",
                        sym_frac * 100.0,
                        asym_frac * 100.0
                    ),
                )
            }
            (Err(e), _) | (_, Err(e)) => (false, format!("run failed: {e}")),
        }
    })
}

struct DominanceStats {
    ours_tail: f64,
    jsd_tail: f64,
    cd_tail: f64,
    clean_ratio_violations: Vec<String>,
}

fn dominance_one_type(cfg: &BenchConfig, noise_type: NoiseType) -> Result<DominanceStats> {
    let selection_cfg = cfg.selection();
    let mut ours_acc = 0.0;
    let mut jsd_acc = 0.0;
    let mut cd_acc = 0.0;
    let mut violations = Vec::new();
    for &seed in &cfg.seeds {
        let sim = cfg.simulator(noise_type, 0.4, 0.1, cfg.dominance_max_size, seed);
        let dataset = simulator::generate(&sim)?;

        let outcomes = selection::select_all(&dataset, &selection_cfg)?;
        let ours = eval::score_selection(&outcomes, &dataset)?;
        let jsd = eval::score_partitions(&eval::baseline_small_jsd_partitions(&dataset), &dataset)?;
        let cd = eval::score_partitions(&eval::baseline_naive_cd_partitions(&dataset)?, &dataset)?;

        ours_acc += ours.group(SizeGroup::Tail).aggregate.precision;
        jsd_acc += jsd.group(SizeGroup::Tail).aggregate.precision;
        cd_acc += cd.group(SizeGroup::Tail).aggregate.precision;

        for row in &ours.classes {
            if row.clean_ratio < row.base_clean_rate - 1e-9 {
                violations.push(format!(
                    "{} seed {seed} class {}: clean ratio {:.3} < base {:.3}",
                    noise_type.as_str(),
                    row.class_index,
                    row.clean_ratio,
                    row.base_clean_rate
                ));
            }
        }
    }
    let n = cfg.seeds.len() as f64;
    Ok(DominanceStats {
        ours_tail: ours_acc / n,
        jsd_tail: jsd_acc / n,
        cd_tail: cd_acc / n,
        clean_ratio_violations: violations,
    })
}

/// Criterion 6: on the tail tertile the two-stage selector strictly beats the
/// small-divergence baseline and the naive centroid baseline under
/// asymmetric noise, never falls behind the small-divergence baseline under
/// symmetric noise, and never scores a class below its no-selection clean
/// rate.
pub fn criterion_6_tail_dominance(cfg: &BenchConfig) -> CriterionOutcome {
    timed(6, "tail selection dominance", || {
        let sym = match dominance_one_type(cfg, NoiseType::Symmetric) {
            Ok(s) => s,
            Err(e) => return (false, format!("symmetric run failed: {e}")),
        };
        let asym = match dominance_one_type(cfg, NoiseType::Asymmetric) {
            Ok(s) => s,
            Err(e) => return (false, format!("asymmetric run failed: {e}")),
        };
        let mut problems = Vec::new();
        if !(asym.ours_tail > asym.jsd_tail) {
            problems.push(format!(
                "asym tail precision {:.4} not above jsd baseline {:.4}",
                asym.ours_tail, asym.jsd_tail
            ));
        }
        if !(asym.ours_tail > asym.cd_tail) {
            problems.push(format!(
                "asym tail precision {:.4} not above naive-cd baseline {:.4}",
                asym.ours_tail, asym.cd_tail
            ));
        }
        if sym.ours_tail < sym.jsd_tail - 1e-9 {
            problems.push(format!(
                "sym tail precision {:.4} below jsd baseline {:.4}",
                sym.ours_tail, sym.jsd_tail
            ));
        }
        problems.extend(sym.clean_ratio_violations.iter().cloned());
        problems.extend(asym.clean_ratio_violations.iter().cloned());

        let passed = problems.is_empty();
        let details = if passed {
            format!(
                "tail precision means over {} seeds — sym: ours {:.4} vs jsd {:.4}; \
                 asym: ours {:.4} vs jsd {:.4} vs naive-cd {:.4}; clean ratio ≥ base everywhere",
                cfg.seeds.len(),
                sym.ours_tail,
                sym.jsd_tail,
                asym.ours_tail,
                asym.jsd_tail,
                asym.cd_tail
            )
        } else {
            problems.join("; ")
        };
        (passed, details)
    })
}

fn files_equal(a: &std::path::Path, b: &std::path::Path) -> bool {
    match (std::fs::read(a), std::fs::read(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn pipeline_into(
    dir: &std::path::Path,
    sim: &SimulatorConfig,
    selection_cfg: &SelectionConfig,
) -> Result<()> {
    let dataset = simulator::generate(sim)?;
    dataset::write_dataset(&dataset, dir)?;
    let reread = dataset::read_dataset(dir)?;
    let outcomes = selection::select_all(&reread, selection_cfg)?;
    report::write_partition(&outcomes, dir)?;
    report::write_selection_manifest(selection_cfg, dir)?;
    let scored = eval::score_selection(&outcomes, &reread)?;
    report::write_report(&scored, &dir.join("report.csv"))?;
    Ok(())
}

/// Criterion 7: per-class partitions, global id conservation, byte-identical
/// reruns of the whole pipeline, and record-order invariance.
pub fn criterion_7_invariants(cfg: &BenchConfig) -> CriterionOutcome {
    timed(7, "partition and determinism invariants", || {
        let selection_cfg = cfg.selection();
        let seed = cfg.seeds.first().copied().unwrap_or(1);
        let mut problems = Vec::new();

        for noise_type in [NoiseType::Symmetric, NoiseType::Asymmetric] {
            let sim = cfg.simulator(noise_type, 0.4, 0.1, cfg.complementarity_max_size, seed);

            // Partition and conservation.
            let dataset = match simulator::generate(&sim) {
                Ok(d) => d,
                Err(e) => return (false, format!("generation failed: {e}")),
            };
            let outcomes = match selection::select_all(&dataset, &selection_cfg) {
                Ok(o) => o,
                Err(e) => return (false, format!("selection failed: {e}")),
            };
            let mut seen = 0usize;
            for outcome in &outcomes {
                let class = outcome.class_index;
                let mut got: Vec<u64> = outcome
                    .clean_ids
                    .iter()
                    .chain(&outcome.noisy_ids)
                    .copied()
                    .collect();
                got.sort_unstable();
                let expected: Vec<u64> = dataset
                    .class_records(class)
                    .iter()
                    .map(|r| r.id)
                    .collect();
                if got != expected {
                    problems.push(format!(
                        "{} class {class}: partition mismatch",
                        noise_type.as_str()
                    ));
                }
                seen += got.len();
            }
            if seen != dataset.records().len() {
                problems.push(format!(
                    "{}: {} ids in outcomes, {} records",
                    noise_type.as_str(),
                    seen,
                    dataset.records().len()
                ));
            }

            // Byte reproducibility of the full pipeline.
            let run = |label: &str| -> Result<tempfile::TempDir> {
                let dir = tempfile::Builder::new()
                    .prefix(label)
                    .tempdir()
                    .map_err(|e| crate::Error::io("tempdir", e))?;
                pipeline_into(dir.path(), &sim, &selection_cfg)?;
                Ok(dir)
            };
            match (run("bench-a"), run("bench-b")) {
                (Ok(a), Ok(b)) => {
                    for file in [
                        dataset::RECORDS_FILE,
                        dataset::MANIFEST_FILE,
                        report::PARTITION_FILE,
                        report::DIAGNOSTICS_FILE,
                        report::SELECTION_MANIFEST_FILE,
                        "report.csv",
                    ] {
                        if !files_equal(&a.path().join(file), &b.path().join(file)) {
                            problems.push(format!(
                                "{}: {file} not byte-identical across reruns",
                                noise_type.as_str()
                            ));
                        }
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    return (false, format!("pipeline failed: {e}"));
                }
            }

            // Record-order invariance.
            let mut shuffled_records = dataset.records().to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF00D);
            for i in (1..shuffled_records.len()).rev() {
                let j = rng.gen_range(0..=i);
                shuffled_records.swap(i, j);
            }
            let shuffled =
                match dataset::Dataset::new(dataset.manifest().clone(), shuffled_records) {
                    Ok(d) => d,
                    Err(e) => return (false, format!("shuffle rebuild failed: {e}")),
                };
            match selection::select_all(&shuffled, &selection_cfg) {
                Ok(shuffled_outcomes) => {
                    // Debug equality treats NaN diagnostics as equal.
                    if format!("{shuffled_outcomes:?}") != format!("{outcomes:?}") {
                        problems.push(format!(
                            "{}: outcomes changed under record shuffling",
                            noise_type.as_str()
                        ));
                    }
                }
                Err(e) => return (false, format!("shuffled selection failed: {e}")),
            }
        }

        let passed = problems.is_empty();
        let details = if passed {
            "partitions exact, ids conserved, reruns byte-identical, order-invariant".to_string()
        } else {
            problems.join("; ")
        };
        (passed, details)
    })
}

/// Sweep ratios of the purity–clean-ratio table.
pub const SWEEP_RATIOS: [f64; 6] = [0.0, 0.05, 0.15, 0.25, 0.35, 0.45];

/// Build the purity sweep: asymmetric runs at increasing noise ratios.
pub fn purity_sweep(cfg: &BenchConfig) -> Result<(Vec<SweepPoint>, Option<f64>)> {
    let selection_cfg = cfg.selection();
    let seed = cfg.seeds.first().copied().unwrap_or(1);
    let mut owned = Vec::new();
    for &ratio in &SWEEP_RATIOS {
        let sim = cfg.simulator(NoiseType::Asymmetric, ratio, 0.1, cfg.sweep_max_size, seed);
        let dataset = simulator::generate(&sim)?;
        let outcomes = selection::select_all(&dataset, &selection_cfg)?;
        owned.push((format!("asym-{ratio}"), dataset, outcomes));
    }
    let entries: Vec<(String, &Dataset, &[selection::SelectionOutcome])> = owned
        .iter()
        .map(|(label, dataset, outcomes)| (label.clone(), dataset, outcomes.as_slice()))
        .collect();
    eval::purity_vs_cleanratio_table(&entries)
}

fn judge_sweep(result: &Result<(Vec<SweepPoint>, Option<f64>)>) -> (bool, String) {
    match result {
        Ok((points, Some(rho))) => (
            *rho > 0.8,
            format!(
                "Spearman rho = {rho:.3} over {} sweep points (> 0.8)",
                points.len()
            ),
        ),
        Ok((points, None)) => (
            false,
            format!("correlation undefined over {} sweep points", points.len()),
        ),
        Err(e) => (false, format!("sweep failed: {e}")),
    }
}

/// Criterion 8: tail purity and best-cluster clean ratio are strongly rank
/// correlated over a six-point noise sweep.
pub fn criterion_8_purity_correlation(cfg: &BenchConfig) -> CriterionOutcome {
    timed(8, "purity / clean-ratio correlation", || {
        judge_sweep(&purity_sweep(cfg))
    })
}

/// Run all eight criteria in order.
pub fn run_all(cfg: &BenchConfig) -> BenchReport {
    let mut criteria = vec![
        criterion_1_divergence_bound(cfg),
        criterion_2_closed_form(cfg),
        criterion_3_mixture_oracle(cfg),
        criterion_4_purity_improvement(cfg),
        criterion_5_complementarity(cfg),
        criterion_6_tail_dominance(cfg),
        criterion_7_invariants(cfg),
    ];
    let start = Instant::now();
    let sweep = purity_sweep(cfg);
    let (passed, details) = judge_sweep(&sweep);
    criteria.push(CriterionOutcome {
        id: 8,
        name: "purity / clean-ratio correlation",
        passed,
        details,
        seconds: start.elapsed().as_secs_f64(),
    });
    let (sweep_points, sweep_rho) = sweep.unwrap_or((Vec::new(), None));
    BenchReport {
        criteria,
        sweep_points,
        sweep_rho,
    }
}
