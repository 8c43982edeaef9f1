//! Labeled training corpora and the corpus file format.
//!
//! Corpus files are line-delimited JSON: the first line is a header
//! recording the schema version, the feature order, the label names and
//! scales, and the normalization spec it was built against; every
//! following line is one `(features, labels)` row.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

/// First line of every corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub schema_version: u32,
    pub platform_id: String,
    pub model: String,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    /// Multipliers mapping normalized labels back to raw units.
    pub label_scales: Vec<f64>,
    pub normalization_version: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorpusRow {
    f: Vec<f64>,
    l: Vec<f64>,
}

/// An in-memory labeled dataset.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, features: Vec<f64>, labels: Vec<f64>) {
        self.features.push(features);
        self.labels.push(labels);
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map(Vec::len).unwrap_or(0)
    }

    pub fn label_dim(&self) -> usize {
        self.labels.first().map(Vec::len).unwrap_or(0)
    }

    /// Seeded shuffle split; `train_frac` of rows go to the first set.
    pub fn split(&self, train_frac: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        let n_train = ((self.len() as f64) * train_frac).round() as usize;
        let mut train = Dataset::new();
        let mut test = Dataset::new();
        for (k, &i) in idx.iter().enumerate() {
            let target = if k < n_train { &mut train } else { &mut test };
            target.push(self.features[i].clone(), self.labels[i].clone());
        }
        (train, test)
    }

    pub fn write(&self, header: &CorpusHeader, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, header)?;
        w.write_all(b"\n")?;
        for (f, l) in self.features.iter().zip(&self.labels) {
            serde_json::to_writer(
                &mut w,
                &CorpusRow {
                    f: f.clone(),
                    l: l.clone(),
                },
            )?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<(CorpusHeader, Dataset)> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Serde("empty corpus file".into()))??;
        let header: CorpusHeader = serde_json::from_str(&header_line)?;
        if header.schema_version != CORPUS_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported corpus schema version {}",
                header.schema_version
            )));
        }
        let mut data = Dataset::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let row: CorpusRow = serde_json::from_str(&line)?;
            data.push(row.f, row.l);
        }
        Ok((header, data))
    }
}
