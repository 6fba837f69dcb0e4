//! Command-line interface: dataset generation, selection, baselines,
//! evaluation, and the bench harness.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 internal
//! error. `bench` additionally exits 1 when any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tailsift::dataset;
use tailsift::error::Error;
use tailsift::eval;
use tailsift::harness::{self, BenchConfig};
use tailsift::report;
use tailsift::selection::{self, Branch, SelectionConfig};
use tailsift::simulator::{self, NoiseType, SimulatorConfig};

#[derive(Parser)]
#[command(
    name = "tailsift",
    version,
    about = "Clean/noisy sample separation for noisy-labeled, long-tailed datasets"
)]
struct Cli {
    /// Worker threads for per-class parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseTypeArg {
    Sym,
    Asym,
}

impl From<NoiseTypeArg> for NoiseType {
    fn from(value: NoiseTypeArg) -> Self {
        match value {
            NoiseTypeArg::Sym => NoiseType::Symmetric,
            NoiseTypeArg::Asym => NoiseType::Asymmetric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineStrategy {
    JsdSmall,
    NaiveCd,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic noisy long-tailed dataset.
    Generate {
        /// Number of classes.
        #[arg(long, default_value_t = 10)]
        classes: usize,
        /// Size of the largest intrinsic class.
        #[arg(long, default_value_t = 1000)]
        max_size: usize,
        /// Smallest-to-largest class size ratio, in (0, 1].
        #[arg(long, default_value_t = 0.1)]
        imbalance_factor: f64,
        #[arg(long, value_enum)]
        noise_type: NoiseTypeArg,
        #[arg(long, default_value_t = 0.4)]
        noise_ratio: f64,
        #[arg(long, default_value_t = 32)]
        feature_dim: usize,
        /// Synthetic model sharpness in [0, 1].
        #[arg(long, default_value_t = 0.7)]
        model_quality: f64,
        /// Observed-label memorization strength in [0, 1].
        #[arg(long, default_value_t = 0.25)]
        memorization: f64,
        /// Softmax temperature of the synthetic classifier.
        #[arg(long, default_value_t = 0.25)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for records.jsonl + manifest.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Split every observed class into clean and noisy samples.
    Select {
        /// Dataset directory (records.jsonl + manifest.json).
        #[arg(long)]
        input: PathBuf,
        /// Output directory for partition.csv + diagnostics.csv.
        #[arg(long)]
        out: PathBuf,
        /// Spread-ratio threshold of dimension selection.
        #[arg(long, default_value_t = 0.6)]
        eta: f64,
        /// Centroid-similarity tolerance of cluster selection.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Classes below this size take the median-split fallback.
        #[arg(long, default_value_t = 4)]
        min_class_size: usize,
        /// Mixture-fit log-likelihood stop threshold.
        #[arg(long, default_value_t = 1e-6)]
        em_tol: f64,
        /// Mixture-fit iteration cap.
        #[arg(long, default_value_t = 100)]
        em_max_iters: usize,
    },
    /// Run a single-metric baseline partition.
    Baseline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        strategy: BaselineStrategy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a partition against ground-truth labels.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// partition.csv produced by select or baseline.
        #[arg(long)]
        partition: PathBuf,
        /// Report CSV to write.
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the full acceptance bench and write a summary table.
    Bench {
        /// TOML bench configuration; defaults are built in.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for summary.csv and purity_sweep.csv.
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        // Ignore the error if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Generate {
            classes,
            max_size,
            imbalance_factor,
            noise_type,
            noise_ratio,
            feature_dim,
            model_quality,
            memorization,
            temperature,
            seed,
            out,
        } => {
            let config = SimulatorConfig {
                num_classes: classes,
                max_class_size: max_size,
                imbalance_factor,
                noise_type: noise_type.into(),
                noise_ratio,
                feature_dim,
                model_quality,
                memorization,
                temperature,
                seed,
            };
            let dataset = simulator::generate(&config)?;
            dataset::write_dataset(&dataset, &out)?;
            println!(
                "wrote {} records across {} classes to {}",
                dataset.records().len(),
                dataset.num_classes(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Select {
            input,
            out,
            eta,
            epsilon,
            min_class_size,
            em_tol,
            em_max_iters,
        } => {
            let config = SelectionConfig {
                eta,
                epsilon,
                min_class_size,
                em_tolerance: em_tol,
                em_max_iterations: em_max_iters,
            };
            let dataset = dataset::read_dataset(&input)?;
            let outcomes = selection::select_all(&dataset, &config)?;
            for outcome in &outcomes {
                if outcome.branch == Branch::EmptyClass {
                    eprintln!(
                        "warning: observed class {} is empty, skipped",
                        outcome.class_index
                    );
                }
            }
            report::write_partition(&outcomes, &out)?;
            report::write_selection_manifest(&config, &out)?;
            let clean: usize = outcomes.iter().map(|o| o.clean_ids.len()).sum();
            let noisy: usize = outcomes.iter().map(|o| o.noisy_ids.len()).sum();
            println!(
                "selected {clean} clean / {noisy} noisy samples; partition in {}",
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Baseline {
            input,
            strategy,
            out,
        } => {
            let dataset = dataset::read_dataset(&input)?;
            let partitions = match strategy {
                BaselineStrategy::JsdSmall => eval::baseline_small_jsd_partitions(&dataset),
                BaselineStrategy::NaiveCd => eval::baseline_naive_cd_partitions(&dataset)?,
            };
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let path = out.join(report::PARTITION_FILE);
            write_baseline_partition(&partitions, &path)?;
            println!("baseline partition in {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            input,
            partition,
            report: report_path,
        } => {
            let dataset = dataset::read_dataset(&input)?;
            let rows = report::read_partition(&partition)?;
            let labels = {
                let sibling = partition
                    .parent()
                    .map(|p| p.join(report::DIAGNOSTICS_FILE))
                    .filter(|p| p.exists());
                match sibling {
                    Some(path) => Some(report::read_diagnostic_labels(&path)?),
                    None => None,
                }
            };
            let partitions =
                report::partitions_from_rows(&rows, dataset.num_classes(), labels.as_ref())?;
            let scored = eval::score_partitions(&partitions, &dataset)?;
            report::write_report(&scored, &report_path)?;
            println!(
                "macro precision {:.4}, recall {:.4}; report in {}",
                scored.macro_avg.precision,
                scored.macro_avg.recall,
                report_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { config, out } => {
            let cfg = match config {
                Some(path) => {
                    let text =
                        std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    toml::from_str::<BenchConfig>(&text)
                        .map_err(|e| Error::InvalidConfig(format!("bench config: {e}")))?
                }
                None => BenchConfig::default(),
            };
            let start = std::time::Instant::now();
            let bench = harness::run_all(&cfg);
            for criterion in &bench.criteria {
                println!("{}", criterion.status_line());
            }
            println!(
                "bench total: {:.1}s, {}/{} criteria passed",
                start.elapsed().as_secs_f64(),
                bench.criteria.iter().filter(|c| c.passed).count(),
                bench.criteria.len()
            );

            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let summary = out.join("summary.csv");
            write_bench_summary(&bench, &summary)?;
            report::write_sweep_table(
                &bench.sweep_points,
                bench.sweep_rho,
                &out.join("purity_sweep.csv"),
            )?;
            println!("summary in {}", summary.display());

            Ok(if bench.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn write_baseline_partition(
    partitions: &[eval::ClassPartition],
    path: &std::path::Path,
) -> Result<(), Error> {
    use std::io::Write as _;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "id,class,assignment").map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<(u64, usize, &str)> = Vec::new();
    for part in partitions {
        for &id in &part.clean_ids {
            rows.push((id, part.class_index, "clean"));
        }
        for &id in &part.noisy_ids {
            rows.push((id, part.class_index, "noisy"));
        }
    }
    rows.sort_unstable();
    for (id, class, assignment) in rows {
        writeln!(w, "{id},{class},{assignment}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_bench_summary(bench: &harness::BenchReport, path: &std::path::Path) -> Result<(), Error> {
    use std::io::Write as _;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "criterion,name,passed,seconds,details").map_err(|e| Error::io(path, e))?;
    for criterion in &bench.criteria {
        writeln!(
            w,
            "{},{},{},{:.3},\"{}\"",
            criterion.id,
            criterion.name,
            criterion.passed,
            criterion.seconds,
            criterion.details.replace('"', "'")
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
