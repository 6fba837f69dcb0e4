//! CSV emission and read-back for partitions, per-class diagnostics,
//! evaluation reports, and sweep tables.
//!
//! Columns are fixed and floats print at shortest round-trippable precision,
//! so outputs are byte-stable under identical inputs and usable as golden
//! files. Missing values (no mixture fit, no matched class) serialize as
//! empty fields.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{ClassPartition, SelectionReport, SweepPoint};
use crate::mixture::MixtureFit;
use crate::selection::{SelectionConfig, SelectionOutcome};

pub const PARTITION_FILE: &str = "partition.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SELECTION_MANIFEST_FILE: &str = "selection.json";

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn fit_fields(fit: &Option<MixtureFit>) -> String {
    match fit {
        Some(f) => format!(
            "{},{},{},{},{},{}",
            fmt(f.means[0]),
            fmt(f.means[1]),
            fmt(f.std_devs[0]),
            fmt(f.std_devs[1]),
            fmt(f.weights[0]),
            fmt(f.weights[1]),
        ),
        None => ",,,,,".to_string(),
    }
}

/// Write `partition.csv` (per-sample assignments, ascending id) and
/// `diagnostics.csv` (per-class selection audit trail) into a directory.
pub fn write_partition(outcomes: &[SelectionOutcome], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let partition_path = dir.join(PARTITION_FILE);
    let file = fs::File::create(&partition_path).map_err(|e| Error::io(&partition_path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "id,class,assignment").map_err(|e| Error::io(&partition_path, e))?;
    let mut rows: Vec<(u64, usize, &str)> = Vec::new();
    for outcome in outcomes {
        for &id in &outcome.clean_ids {
            rows.push((id, outcome.class_index, "clean"));
        }
        for &id in &outcome.noisy_ids {
            rows.push((id, outcome.class_index, "noisy"));
        }
    }
    rows.sort_unstable();
    for (id, class, assignment) in rows {
        writeln!(w, "{id},{class},{assignment}").map_err(|e| Error::io(&partition_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&partition_path, e))?;

    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let file = fs::File::create(&diag_path).map_err(|e| Error::io(&diag_path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "class,size,dimension,branch,threshold_d,mu1,mu2,sigma1,sigma2,\
         wjsd_mean_low,wjsd_mean_high,wjsd_std_low,wjsd_std_high,wjsd_weight_low,wjsd_weight_high,\
         acd_mean_low,acd_mean_high,acd_std_low,acd_std_high,acd_weight_low,acd_weight_high,\
         matched_class,clean_count,noisy_count"
    )
    .map_err(|e| Error::io(&diag_path, e))?;
    for outcome in outcomes {
        let d = &outcome.diagnostics;
        let matched = d
            .matched_class
            .map(|k| k.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            outcome.class_index,
            d.class_size,
            outcome.dimension.as_str(),
            outcome.branch.as_str(),
            fmt(d.threshold_d),
            fmt(d.mu1),
            fmt(d.mu2),
            fmt(d.sigma1),
            fmt(d.sigma2),
            fit_fields(&d.wjsd_fit),
            fit_fields(&d.acd_fit),
            matched,
            outcome.clean_ids.len(),
            outcome.noisy_ids.len(),
        )
        .map_err(|e| Error::io(&diag_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&diag_path, e))?;
    Ok(())
}

/// Echo of the selection configuration, written next to the partition.
pub fn write_selection_manifest(config: &SelectionConfig, dir: &Path) -> Result<()> {
    let path = dir.join(SELECTION_MANIFEST_FILE);
    let body = serde_json::json!({
        "eta": config.eta,
        "epsilon": config.epsilon,
        "min_class_size": config.min_class_size,
        "em_tolerance": config.em_tolerance,
        "em_max_iterations": config.em_max_iterations,
    });
    let text = serde_json::to_string_pretty(&body)
        .map_err(|e| Error::Internal(format!("manifest serialization failed: {e}")))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// One `partition.csv` row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionRow {
    pub id: u64,
    pub class: usize,
    pub clean: bool,
}

/// Parse a `partition.csv` file.
pub fn read_partition(path: &Path) -> Result<Vec<PartitionRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "id,class,assignment" {
                return Err(Error::MalformedLine {
                    line: 1,
                    reason: format!("unexpected partition header '{line}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |reason: String| Error::MalformedLine {
            line: lineno + 1,
            reason,
        };
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", fields.len())));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|e| bad(format!("bad id: {e}")))?;
        let class: usize = fields[1]
            .parse()
            .map_err(|e| bad(format!("bad class: {e}")))?;
        let clean = match fields[2] {
            "clean" => true,
            "noisy" => false,
            other => return Err(bad(format!("unknown assignment '{other}'"))),
        };
        rows.push(PartitionRow { id, class, clean });
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

/// Dimension/branch labels per class from a `diagnostics.csv`, if present.
pub fn read_diagnostic_labels(path: &Path) -> Result<HashMap<usize, (String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = HashMap::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::MalformedLine {
                line: lineno + 1,
                reason: format!("expected at least 4 fields, got {}", fields.len()),
            });
        }
        let class: usize = fields[0].parse().map_err(|e| Error::MalformedLine {
            line: lineno + 1,
            reason: format!("bad class: {e}"),
        })?;
        labels.insert(class, (fields[2].to_string(), fields[3].to_string()));
    }
    Ok(labels)
}

/// Group partition rows into scorer inputs. `labels` (from a diagnostics
/// file) annotates dimension/branch; absent classes get "-".
pub fn partitions_from_rows(
    rows: &[PartitionRow],
    num_classes: usize,
    labels: Option<&HashMap<usize, (String, String)>>,
) -> Result<Vec<ClassPartition>> {
    let mut parts: Vec<ClassPartition> = (0..num_classes)
        .map(|class| {
            let (dimension_label, branch_label) = labels
                .and_then(|l| l.get(&class).cloned())
                .unwrap_or_else(|| ("-".to_string(), "-".to_string()));
            ClassPartition {
                class_index: class,
                clean_ids: Vec::new(),
                noisy_ids: Vec::new(),
                dimension_label,
                branch_label,
            }
        })
        .collect();
    for row in rows {
        if row.class >= num_classes {
            return Err(Error::PartitionMismatch(format!(
                "row for id {} names class {} of {num_classes}",
                row.id, row.class
            )));
        }
        if row.clean {
            parts[row.class].clean_ids.push(row.id);
        } else {
            parts[row.class].noisy_ids.push(row.id);
        }
    }
    for part in &mut parts {
        part.clean_ids.sort_unstable();
        part.noisy_ids.sort_unstable();
    }
    Ok(parts)
}

/// Write an evaluation report as CSV: one row per class, then macro, micro,
/// and per-group aggregate rows.
pub fn write_report(report: &SelectionReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "scope,class,group,intrinsic_size,observed_size,dimension,branch,\
         clean_count,noisy_count,clean_ratio,precision,recall,f1,\
         class_purity,high_conf_purity,base_clean_rate"
    )
    .map_err(|e| Error::io(path, e))?;
    for row in &report.classes {
        writeln!(
            w,
            "class,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.class_index,
            row.group.as_str(),
            row.intrinsic_size,
            row.observed_size,
            row.dimension,
            row.branch,
            row.clean_count,
            row.noisy_count,
            fmt(row.clean_ratio),
            fmt(row.precision),
            fmt(row.recall),
            fmt(row.f1),
            fmt(row.class_purity),
            fmt(row.high_conf_purity),
            fmt(row.base_clean_rate),
        )
        .map_err(|e| Error::io(path, e))?;
    }
    let mut aggregate = |scope: &str, group: &str, agg: crate::eval::AggregateScore| {
        writeln!(
            w,
            "{scope},,{group},,,,,,,,{},{},{},,,",
            fmt(agg.precision),
            fmt(agg.recall),
            fmt(agg.f1),
        )
        .map_err(|e| Error::io(path, e))
    };
    aggregate("macro", "", report.macro_avg)?;
    aggregate("micro", "", report.micro)?;
    for group in &report.groups {
        aggregate("group", group.group.as_str(), group.aggregate)?;
    }
    Ok(())
}

/// Write the purity → best-clean-ratio sweep table.
pub fn write_sweep_table(points: &[SweepPoint], rho: Option<f64>, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "label,purity,best_clean_ratio").map_err(|e| Error::io(path, e))?;
    for point in points {
        writeln!(
            w,
            "{},{},{}",
            point.label,
            fmt(point.purity),
            fmt(point.best_clean_ratio)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    let rho_text = rho.map(|r| format!("{r}")).unwrap_or_else(|| "undefined".into());
    writeln!(w, "spearman_rho,{rho_text},").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
