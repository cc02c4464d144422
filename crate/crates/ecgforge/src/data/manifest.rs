//! Corpus manifest: the reproducibility audit trail of a dataset build.

use super::sample::NormConstants;
use super::split::CorpusSplit;
use crate::error::{Error, Result};
use crate::tissue::TissueClass;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// Relative sample directory names, index-aligned with `classes`.
    pub sample_dirs: Vec<String>,
    pub classes: Vec<TissueClass>,
    pub split: CorpusSplit,
    pub norm: NormConstants,
    /// (T, C, H, W) of every input tensor.
    pub input_shape: (usize, usize, usize, usize),
    /// SHA-256 of the generator/simulation configs that produced the corpus.
    pub source_hashes: BTreeMap<String, String>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
    }
}
