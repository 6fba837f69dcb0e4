//! Temporary knob-calibration sweep. Not part of the deliverable.

use tailsift::eval::{self, SizeGroup};
use tailsift::harness::BenchConfig;
use tailsift::selection::{self, Dimension};
use tailsift::simulator::{self, NoiseType, SimulatorConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let quality: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.7);
    let memorization: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let temperature: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let seeds: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10);

    let cfg = BenchConfig {
        model_quality: quality,
        memorization,
        temperature,
        ..BenchConfig::default()
    };
    let selection_cfg = cfg_selection(&cfg);

    println!("q={quality} mem={memorization} T={temperature} seeds={seeds}");

    // --- per-class diagnostics dump for one seed ---
    if std::env::var("CAL_DUMP").is_ok() {
        for noise_type in [NoiseType::Symmetric, NoiseType::Asymmetric] {
            let simc = sim(&cfg, noise_type, 0.4, 0.1, cfg.complementarity_max_size, 1);
            let ds = simulator::generate(&simc).unwrap();
            let outcomes = selection::select_all(&ds, &selection_cfg).unwrap();
            let report = eval::score_selection(&outcomes, &ds).unwrap();
            println!("  --- {} seed 1 ---", noise_type.as_str());
            for o in &outcomes {
                let d = &o.diagnostics;
                let row = report.classes.iter().find(|r| r.class_index == o.class_index);
                println!(
                    "   c{} n={} {}/{} d={:.3} mu1={:.3} s1={:.3} mu2={:.3} s2={:.3} r={:.2} | prec={:.3} base={:.3} pur={:.3} match={:?}",
                    o.class_index,
                    d.class_size,
                    o.dimension.as_str(),
                    o.branch.as_str(),
                    d.threshold_d,
                    d.mu1,
                    d.sigma1,
                    d.mu2,
                    d.sigma2,
                    d.sigma2 / d.sigma1,
                    row.map(|r| r.precision).unwrap_or(f64::NAN),
                    row.map(|r| r.base_clean_rate).unwrap_or(f64::NAN),
                    row.map(|r| r.class_purity).unwrap_or(f64::NAN),
                    d.matched_class,
                );
            }
        }
    }

    // --- match-scan dump for asym classes ---
    if std::env::var("CAL_MATCH").is_ok() {
        let simc = sim(&cfg, NoiseType::Asymmetric, 0.4, 0.1, cfg.complementarity_max_size, 1);
        let (ds, info) = simulator::generate_with_info(&simc).unwrap();
        let stats = tailsift::centroids::build_class_statistics(&ds);
        let outcomes = selection::select_all(&ds, &selection_cfg).unwrap();
        let report = eval::score_selection(&outcomes, &ds).unwrap();
        let matrix = ds.manifest().transition_matrix.clone().unwrap();
        for row in &report.classes {
            let c = row.class_index;
            let own = stats[c].as_ref().unwrap();
            let records = ds.class_records(c);
            let high: Vec<&tailsift::dataset::SampleRecord> = records
                .iter()
                .filter(|r| own.high_conf_ids.binary_search(&r.id).is_ok())
                .copied()
                .collect();
            let high_purity = tailsift::centroids::purity(&high).unwrap();
            let source = (0..ds.num_classes())
                .filter(|&a| a != c && matrix[a][c] > 0.0)
                .next()
                .unwrap_or(c);
            // Alignment of the class centroid with each true prototype.
            let best_proto = (0..ds.num_classes())
                .map(|k| (k, tailsift::centroids::acd(&own.centroid, &info.prototypes[k])))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let viol = if row.clean_ratio < row.base_clean_rate - 1e-9 { "VIOL" } else { "ok" };
            println!(
                "  {viol} c{c} base {:.3} ratio {:.3} t_c={} src={source} |D^H|={} Dh_pur={:.2} o≈proto_{}({:.3}) match={:?}",
                row.base_clean_rate,
                row.clean_ratio,
                own.target_class,
                own.high_conf_ids.len(),
                high_purity,
                best_proto.0,
                best_proto.1,
                outcomes[c].diagnostics.matched_class,
            );
            for k in 0..ds.num_classes() {
                if k == c {
                    continue;
                }
                let other = stats[k].as_ref().unwrap();
                let cos = tailsift::centroids::acd(&own.centroid, &other.centroid);
                if cos > 0.85 {
                    println!(
                        "      vs {k}: cos {:.4} |D^H_k|={} t_k={}",
                        cos,
                        other.high_conf_ids.len(),
                        other.target_class
                    );
                }
            }
        }
    }

    // --- criterion 5 style: dimension fractions ---
    for noise_type in [NoiseType::Symmetric, NoiseType::Asymmetric] {
        let mut wjsd = 0usize;
        let mut acd = 0usize;
        let mut fallback = 0usize;
        let mut total = 0usize;
        for seed in 1..=seeds {
            let sim = sim(&cfg, noise_type, 0.4, 0.1, cfg.complementarity_max_size, seed);
            let ds = simulator::generate(&sim).unwrap();
            let outcomes = selection::select_all(&ds, &selection_cfg).unwrap();
            for o in &outcomes {
                match o.dimension {
                    Dimension::Wjsd => wjsd += 1,
                    Dimension::Acd => acd += 1,
                    Dimension::Fallback => fallback += 1,
                }
                total += 1;
            }
        }
        println!(
            "  {} dims: wjsd {:.0}% acd {:.0}% fb {:.0}% (n={})",
            noise_type.as_str(),
            100.0 * wjsd as f64 / total as f64,
            100.0 * acd as f64 / total as f64,
            100.0 * fallback as f64 / total as f64,
            total
        );
    }

    // --- criterion 4 style: purity improvement at IF 0.01 asym ---
    let purity_dump = std::env::var("CAL_PURITY").is_ok();
    let mut worst: Option<String> = None;
    let mut regressions = 0usize;
    let mut checked = 0usize;
    for seed in 1..=seeds {
        let sim = sim(&cfg, NoiseType::Asymmetric, 0.4, 0.01, cfg.purity_max_size, seed);
        let ds = simulator::generate(&sim).unwrap();
        let stats = tailsift::centroids::build_class_statistics(&ds);
        for (class, class_purity, high_purity) in
            eval::high_confidence_purity_pairs(&ds).unwrap()
        {
            checked += 1;
            let ok = high_purity >= class_purity - 1e-12
                && (class_purity >= 0.9 || high_purity > class_purity);
            if !ok {
                regressions += 1;
                worst = Some(format!(
                    "seed {seed} class {class}: {class_purity:.3} -> {high_purity:.3}"
                ));
                if purity_dump {
                    let st = stats[class].as_ref().unwrap();
                    let records = ds.class_records(class);
                    let mut comp = std::collections::HashMap::new();
                    for r in &records {
                        *comp.entry(r.true_label.unwrap()).or_insert(0usize) += 1;
                    }
                    let mut comp: Vec<(usize, usize)> = comp.into_iter().collect();
                    comp.sort_by_key(|&(_, n)| std::cmp::Reverse(n));
                    println!(
                        "   purity-fail seed {seed} c{class}: n={} t_c={} H={:.3} |D^H|={} comp {:?}",
                        records.len(),
                        st.target_class,
                        st.threshold,
                        st.high_conf_ids.len(),
                        &comp[..comp.len().min(4)]
                    );
                }
            }
        }
    }
    println!("  purity: {regressions}/{checked} regressions {}", worst.unwrap_or_default());

    // --- criterion 6 style: tail precision means ---
    for noise_type in [NoiseType::Symmetric, NoiseType::Asymmetric] {
        let mut ours_acc = 0.0;
        let mut jsd_acc = 0.0;
        let mut cd_acc = 0.0;
        let mut viol = 0usize;
        let mut worst_gap = 0.0f64;
        for seed in 1..=seeds {
            let simc = sim(&cfg, noise_type, 0.4, 0.1, cfg.dominance_max_size, seed);
            let ds = simulator::generate(&simc).unwrap();
            let outcomes = selection::select_all(&ds, &selection_cfg).unwrap();
            let ours = eval::score_selection(&outcomes, &ds).unwrap();
            let jsd =
                eval::score_partitions(&eval::baseline_small_jsd_partitions(&ds), &ds).unwrap();
            let cd =
                eval::score_partitions(&eval::baseline_naive_cd_partitions(&ds).unwrap(), &ds)
                    .unwrap();
            ours_acc += ours.group(SizeGroup::Tail).aggregate.precision;
            jsd_acc += jsd.group(SizeGroup::Tail).aggregate.precision;
            cd_acc += cd.group(SizeGroup::Tail).aggregate.precision;
            for row in &ours.classes {
                if row.clean_ratio < row.base_clean_rate - 1e-9 {
                    viol += 1;
                    worst_gap = worst_gap.max(row.base_clean_rate - row.clean_ratio);
                }
            }
        }
        let n = seeds as f64;
        println!(
            "  {} tails: ours {:.4} jsd {:.4} cd {:.4} | clean-ratio viol {} (worst gap {:.4})",
            noise_type.as_str(),
            ours_acc / n,
            jsd_acc / n,
            cd_acc / n,
            viol,
            worst_gap
        );
    }

    // --- criterion 8 style: sweep spearman for first few seeds ---
    for seed in 1..=3u64.min(seeds) {
        let mut cfg8 = cfg.clone();
        cfg8.seeds = vec![seed];
        match tailsift::harness::purity_sweep(&cfg8) {
            Ok((points, rho)) => {
                let pts: Vec<String> = points
                    .iter()
                    .map(|p| format!("({:.2},{:.2})", p.purity, p.best_clean_ratio))
                    .collect();
                println!(
                    "  sweep seed {seed}: rho {:?} {}",
                    rho,
                    pts.join(" ")
                );
            }
            Err(e) => println!("  sweep seed {seed}: failed {e}"),
        }
    }
}

fn cfg_selection(cfg: &BenchConfig) -> selection::SelectionConfig {
    selection::SelectionConfig {
        eta: cfg.eta,
        epsilon: cfg.epsilon,
        ..selection::SelectionConfig::default()
    }
}

fn sim(
    cfg: &BenchConfig,
    noise_type: NoiseType,
    noise_ratio: f64,
    imbalance_factor: f64,
    max_class_size: usize,
    seed: u64,
) -> SimulatorConfig {
    SimulatorConfig {
        num_classes: cfg.classes,
        max_class_size,
        imbalance_factor,
        noise_type,
        noise_ratio,
        feature_dim: cfg.feature_dim,
        model_quality: cfg.model_quality,
        memorization: cfg.memorization,
        temperature: cfg.temperature,
        seed,
    }
}
