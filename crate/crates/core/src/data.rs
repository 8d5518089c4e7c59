//! State-action datasets: the sample pools the learners are fit on.
//!
//! File format: text, header `dataset-v1 <d_in>`, then one comma-separated
//! row per sample: `track_id, step_index, a_ref, obs_0..obs_{d_in-1}`.

use crate::fsutil::write_atomic;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("row {row}: |a_ref| = {value} exceeds 1")]
    ActionOutOfRange { row: usize, value: f64 },
    #[error("row {row}: expected {expected} observation values, found {found}")]
    WrongWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One supervised pair: what the learner saw and what the expert commanded.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observation: Vec<f64>,
    pub a_ref: f64,
    pub track_id: String,
    pub step_index: u32,
}

/// Where a dataset's samples came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Expert demonstration pass.
    Collection,
    /// Mistake/visited-state aggregation; the field is the last aggregation
    /// iteration that appended to the set.
    Aggregation { iteration: u32 },
}

/// Append-only sample pool. Size never decreases during an algorithm run.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<Sample>,
    provenance: Provenance,
}

impl PartialEq for Dataset {
    /// Provenance is bookkeeping, not content; equality compares samples.
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
    }
}

impl Dataset {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            samples: Vec::new(),
            provenance,
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn set_iteration(&mut self, iteration: u32) {
        self.provenance = Provenance::Aggregation { iteration };
    }

    pub fn push(&mut self, sample: Sample) {
        debug_assert!(sample.a_ref.abs() <= 1.0);
        self.samples.push(sample);
    }

    pub fn extend(&mut self, samples: impl IntoIterator<Item = Sample>) {
        for s in samples {
            self.push(s);
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Feature dimension of the first sample, if any.
    pub fn feature_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.observation.len())
    }

    /// Split into the `(inputs, targets)` views the trainer consumes.
    pub fn training_views(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let inputs = self.samples.iter().map(|s| s.observation.clone()).collect();
        let targets = self.samples.iter().map(|s| s.a_ref).collect();
        (inputs, targets)
    }
}

pub fn dataset_to_string(dataset: &Dataset) -> String {
    let d_in = dataset.feature_dim().unwrap_or(0);
    let mut out = format!("dataset-v1 {d_in}\n");
    for s in dataset.samples() {
        out.push_str(&s.track_id);
        out.push(',');
        out.push_str(&s.step_index.to_string());
        out.push(',');
        out.push_str(&format!("{}", s.a_ref));
        for v in &s.observation {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    write_atomic(path, &dataset_to_string(dataset))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, DatasetError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| DatasetError::Malformed("empty file".to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 || fields[0] != "dataset-v1" {
        return Err(DatasetError::Malformed(format!(
            "expected header `dataset-v1 <d_in>`, got {header:?}"
        )));
    }
    let d_in: usize = fields[1]
        .parse()
        .map_err(|_| DatasetError::Malformed(format!("bad d_in {:?}", fields[1])))?;

    let mut dataset = Dataset::new(Provenance::Collection);
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 3 {
            return Err(DatasetError::Malformed(format!(
                "row {}: expected at least 3 columns",
                row + 1
            )));
        }
        let track_id = cols[0].to_string();
        let step_index: u32 = cols[1].parse().map_err(|_| {
            DatasetError::Malformed(format!("row {}: bad step_index {:?}", row + 1, cols[1]))
        })?;
        let a_ref: f64 = cols[2].parse().map_err(|_| {
            DatasetError::Malformed(format!("row {}: bad a_ref {:?}", row + 1, cols[2]))
        })?;
        if !a_ref.is_finite() || a_ref.abs() > 1.0 {
            return Err(DatasetError::ActionOutOfRange {
                row: row + 1,
                value: a_ref,
            });
        }
        let observation: Vec<f64> = cols[3..]
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    DatasetError::Malformed(format!("row {}: bad observation {s:?}", row + 1))
                })
            })
            .collect::<Result<_, _>>()?;
        if observation.len() != d_in {
            return Err(DatasetError::WrongWidth {
                row: row + 1,
                expected: d_in,
                found: observation.len(),
            });
        }
        if observation.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::Malformed(format!(
                "row {}: non-finite observation",
                row + 1
            )));
        }
        dataset.push(Sample {
            observation,
            a_ref,
            track_id,
            step_index,
        });
    }
    Ok(dataset)
}
