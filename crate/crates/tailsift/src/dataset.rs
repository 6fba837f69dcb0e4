//! Record and manifest formats, validation, and JSONL I/O.
//!
//! A dataset on disk is a directory holding `records.jsonl` (one sample per
//! line) and a sibling `manifest.json`. Validation happens once here, at
//! ingestion: every downstream computation assumes normalized confidence
//! vectors, in-range labels, unique ids, and nonzero feature vectors.
//! Failures name the offending record id and field.
//!
//! Floats are serialized at shortest round-trippable precision, so a
//! generate → write → read → write cycle is byte-identical.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::SimulatorConfig;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Tolerance for the confidence-vector normalization check.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// One sample: identifier, observed label, prediction confidences, feature
/// embedding, and (for simulator or evaluation data) the ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: u64,
    pub observed_label: usize,
    pub probs: Vec<f64>,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_label: Option<usize>,
}

impl SampleRecord {
    /// Whether the observed label matches the ground truth.
    ///
    /// Panics if the record carries no truth; callers check `has_truth`
    /// upfront.
    pub fn is_clean(&self) -> bool {
        self.true_label.expect("record has no ground-truth label") == self.observed_label
    }
}

/// Dataset-level metadata stored next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub record_count: usize,
    /// Observed-class sizes, indexed by class.
    pub observed_counts: Vec<usize>,
    /// Ground-truth class sizes, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_counts: Option<Vec<usize>>,
    /// Realized label-transition matrix, row-stochastic, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    /// Generator configuration echo for simulator-produced data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SimulatorConfig>,
}

/// Validated, in-memory dataset grouped by observed class.
#[derive(Debug, Clone)]
pub struct Dataset {
    manifest: Manifest,
    records: Vec<SampleRecord>,
    /// Record indices per observed class, ordered by sample id.
    by_class: Vec<Vec<usize>>,
}

impl Dataset {
    /// Validate records against a manifest and group them by observed class.
    pub fn new(manifest: Manifest, records: Vec<SampleRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if manifest.num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "num_classes must be at least 2, got {}",
                manifest.num_classes
            )));
        }
        if manifest.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be positive".into()));
        }
        if manifest.record_count != records.len() {
            return Err(Error::ManifestMismatch(format!(
                "manifest says {} records, file has {}",
                manifest.record_count,
                records.len()
            )));
        }
        if manifest.observed_counts.len() != manifest.num_classes {
            return Err(Error::ManifestMismatch(format!(
                "observed_counts has {} entries for {} classes",
                manifest.observed_counts.len(),
                manifest.num_classes
            )));
        }

        let mut seen = HashSet::with_capacity(records.len());
        for record in &records {
            validate_record(record, &manifest)?;
            if !seen.insert(record.id) {
                return Err(Error::DuplicateId { id: record.id });
            }
        }

        let mut by_class = vec![Vec::new(); manifest.num_classes];
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by_key(|&i| records[i].id);
        for i in order {
            by_class[records[i].observed_label].push(i);
        }

        for (class, members) in by_class.iter().enumerate() {
            if manifest.observed_counts[class] != members.len() {
                return Err(Error::ManifestMismatch(format!(
                    "class {class}: manifest counts {} records, file has {}",
                    manifest.observed_counts[class],
                    members.len()
                )));
            }
        }

        Ok(Dataset {
            manifest,
            records,
            by_class,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn num_classes(&self) -> usize {
        self.manifest.num_classes
    }

    /// Records of one observed class, ordered by sample id.
    pub fn class_records(&self, class: usize) -> Vec<&SampleRecord> {
        self.by_class[class]
            .iter()
            .map(|&i| &self.records[i])
            .collect()
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.by_class[class].len()
    }

    /// Whether every record carries a ground-truth label.
    pub fn has_truth(&self) -> bool {
        self.records.iter().all(|r| r.true_label.is_some())
    }

    /// Ground-truth class sizes, recomputed from the records.
    pub fn intrinsic_counts(&self) -> Result<Vec<usize>> {
        let mut counts = vec![0usize; self.manifest.num_classes];
        for record in &self.records {
            let label = record.true_label.ok_or_else(|| {
                Error::MissingTruth(format!("record {} has no true label", record.id))
            })?;
            counts[label] += 1;
        }
        Ok(counts)
    }
}

fn validate_record(record: &SampleRecord, manifest: &Manifest) -> Result<()> {
    let id = record.id;
    if record.observed_label >= manifest.num_classes {
        return Err(Error::InvalidRecord {
            id,
            field: "observed_label",
            reason: format!(
                "label {} out of range for {} classes",
                record.observed_label, manifest.num_classes
            ),
        });
    }
    if let Some(truth) = record.true_label {
        if truth >= manifest.num_classes {
            return Err(Error::InvalidRecord {
                id,
                field: "true_label",
                reason: format!(
                    "label {truth} out of range for {} classes",
                    manifest.num_classes
                ),
            });
        }
    }
    if record.probs.len() != manifest.num_classes {
        return Err(Error::InvalidRecord {
            id,
            field: "probs",
            reason: format!(
                "length {} does not match {} classes",
                record.probs.len(),
                manifest.num_classes
            ),
        });
    }
    let mut sum = 0.0;
    for &p in &record.probs {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidRecord {
                id,
                field: "probs",
                reason: format!("entry {p} outside [0, 1]"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::InvalidRecord {
            id,
            field: "probs",
            reason: format!("entries sum to {sum}, expected 1"),
        });
    }
    if record.features.len() != manifest.feature_dim {
        return Err(Error::InvalidRecord {
            id,
            field: "features",
            reason: format!(
                "length {} does not match feature_dim {}",
                record.features.len(),
                manifest.feature_dim
            ),
        });
    }
    let mut norm_sq = 0.0;
    for &f in &record.features {
        if !f.is_finite() {
            return Err(Error::InvalidRecord {
                id,
                field: "features",
                reason: format!("non-finite entry {f}"),
            });
        }
        norm_sq += f * f;
    }
    if norm_sq <= 0.0 {
        return Err(Error::InvalidRecord {
            id,
            field: "features",
            reason: "zero-norm feature vector".into(),
        });
    }
    Ok(())
}

/// Read `records.jsonl` + `manifest.json` from a directory and validate.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest_text =
        fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| Error::ManifestMismatch(format!("unparseable manifest: {e}")))?;

    let records_path = dir.join(RECORDS_FILE);
    let file = fs::File::open(&records_path).map_err(|e| Error::io(&records_path, e))?;
    let reader = BufReader::new(file);

    let mut records = Vec::with_capacity(manifest.record_count);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&records_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Dataset::new(manifest, records)
}

/// Write a dataset into a directory (created if missing).
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let records_path = dir.join(RECORDS_FILE);
    let file = fs::File::create(&records_path).map_err(|e| Error::io(&records_path, e))?;
    let mut writer = BufWriter::new(file);
    for record in &dataset.records {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Internal(format!("record serialization failed: {e}")))?;
        writeln!(writer, "{line}").map_err(|e| Error::io(&records_path, e))?;
    }
    writer.flush().map_err(|e| Error::io(&records_path, e))?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest_text = serde_json::to_string_pretty(&dataset.manifest)
        .map_err(|e| Error::Internal(format!("manifest serialization failed: {e}")))?;
    fs::write(&manifest_path, manifest_text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_manifest() -> Manifest {
        Manifest {
            num_classes: 2,
            feature_dim: 2,
            record_count: 2,
            observed_counts: vec![1, 1],
            intrinsic_counts: None,
            transition_matrix: None,
            generator: None,
        }
    }

    fn tiny_records() -> Vec<SampleRecord> {
        vec![
            SampleRecord {
                id: 0,
                observed_label: 0,
                probs: vec![0.7, 0.3],
                features: vec![1.0, 0.0],
                true_label: Some(0),
            },
            SampleRecord {
                id: 1,
                observed_label: 1,
                probs: vec![0.2, 0.8],
                features: vec![0.0, 1.0],
                true_label: Some(1),
            },
        ]
    }

    #[test]
    fn accepts_valid_dataset() {
        let ds = Dataset::new(tiny_manifest(), tiny_records()).unwrap();
        assert_eq!(ds.class_size(0), 1);
        assert!(ds.has_truth());
        assert_eq!(ds.intrinsic_counts().unwrap(), vec![1, 1]);
    }

    #[test]
    fn rejects_non_normalized_probs_naming_the_record() {
        let mut records = tiny_records();
        records[1].probs = vec![0.2, 0.7];
        let err = Dataset::new(tiny_manifest(), records).unwrap_err();
        match err {
            Error::InvalidRecord { id, field, .. } => {
                assert_eq!(id, 1);
                assert_eq!(field, "probs");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let mut records = tiny_records();
        records[1].id = 0;
        let err = Dataset::new(tiny_manifest(), records).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { id: 0 }));
    }

    #[test]
    fn rejects_label_out_of_range() {
        let mut records = tiny_records();
        records[0].observed_label = 5;
        let err = Dataset::new(tiny_manifest(), records).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidRecord {
                field: "observed_label",
                ..
            }
        ));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let mut records = tiny_records();
        records[0].features = vec![1.0, 0.0, 0.0];
        let err = Dataset::new(tiny_manifest(), records).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidRecord {
                field: "features",
                ..
            }
        ));
    }

    #[test]
    fn rejects_zero_norm_features() {
        let mut records = tiny_records();
        records[0].features = vec![0.0, 0.0];
        let err = Dataset::new(tiny_manifest(), records).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidRecord {
                field: "features",
                ..
            }
        ));
    }

    #[test]
    fn rejects_empty_dataset() {
        let err = Dataset::new(tiny_manifest(), vec![]).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn rejects_count_mismatch() {
        let mut manifest = tiny_manifest();
        manifest.observed_counts = vec![2, 0];
        let err = Dataset::new(manifest, tiny_records()).unwrap_err();
        assert!(matches!(err, Error::ManifestMismatch(_)));
    }

    #[test]
    fn roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(tiny_manifest(), tiny_records()).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.records(), ds.records());
        assert_eq!(back.manifest(), ds.manifest());
    }

    #[test]
    fn empty_file_reports_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest {
            record_count: 0,
            observed_counts: vec![0, 0],
            ..tiny_manifest()
        };
        fs::write(
            dir.path().join(MANIFEST_FILE),
            serde_json::to_string(&manifest).unwrap(),
        )
        .unwrap();
        fs::write(dir.path().join(RECORDS_FILE), "").unwrap();
        let err = read_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(tiny_manifest(), tiny_records()).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let path = dir.path().join(RECORDS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        fs::write(&path, text).unwrap();
        // Manifest now disagrees on count, but the parse error comes first.
        let err = read_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 3, .. }));
    }
}
