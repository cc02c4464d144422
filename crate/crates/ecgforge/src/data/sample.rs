//! Training samples: normalized frame tensors paired with ECG targets.
//!
//! A sample persists as a directory holding `input.ecgf` (T x C x H x W,
//! f32), `target.ecgf` (T_out, f32) and `meta.json`. Inputs are scaled to
//! [0, 1] by corpus-wide voltage extrema; targets are z-scored with
//! statistics of the training split only, and the constants travel with
//! every sample so downstream stages can assert that no split used different
//! ones.

use super::split::CorpusSplit;
use super::tensorfile::{load_tensor, save_tensor, TensorData};
use crate::error::{Error, Result};
use crate::tissue::TissueClass;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Affine constants applied to every sample of a corpus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    /// Corpus-wide input extrema.
    pub u_min: f64,
    pub u_max: f64,
    /// Train-split target statistics.
    pub target_mean: f64,
    pub target_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub case_id: String,
    pub class: TissueClass,
    pub grid_seed: u64,
    pub d_range: (f64, f64),
    /// Present once the corpus has been normalized.
    pub norm: Option<NormConstants>,
}

/// One training sample: T frames of C x H x W voltage input and a length
/// T_out ECG target (T_out == T under the default policy).
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub input: Vec<f32>,
    pub target: Vec<f32>,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn frame(&self, t: usize) -> &[f32] {
        let size = self.c * self.h * self.w;
        &self.input[t * size..(t + 1) * size]
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.len() != self.t * self.c * self.h * self.w {
            return Err(Error::Shape(format!(
                "sample {}: input holds {} values for {}x{}x{}x{}",
                self.meta.case_id,
                self.input.len(),
                self.t,
                self.c,
                self.h,
                self.w
            )));
        }
        if self.target.len() != self.t {
            return Err(Error::Shape(format!(
                "sample {}: target length {} != T {}",
                self.meta.case_id,
                self.target.len(),
                self.t
            )));
        }
        if self.input.iter().any(|x| !x.is_finite())
            || self.target.iter().any(|x| !x.is_finite())
        {
            return Err(Error::Numerical(format!(
                "sample {}: non-finite values",
                self.meta.case_id
            )));
        }
        if self.meta.norm.is_some() {
            let eps = 1e-6;
            if self.input.iter().any(|&x| x < -eps || x > 1.0 + eps) {
                return Err(Error::Numerical(format!(
                    "sample {}: normalized input leaves [0, 1]",
                    self.meta.case_id
                )));
            }
        }
        Ok(())
    }
}

/// Normalize a corpus in place and return the constants. Input extrema are
/// taken corpus-wide; target statistics come from the train split alone and
/// are reused verbatim for val and test.
pub fn normalize_corpus(samples: &mut [Sample], split: &CorpusSplit) -> Result<NormConstants> {
    if samples.is_empty() {
        return Err(Error::Config("cannot normalize an empty corpus".into()));
    }
    if split.total() != samples.len() {
        return Err(Error::Shape(format!(
            "split covers {} samples, corpus has {}",
            split.total(),
            samples.len()
        )));
    }

    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    for s in samples.iter() {
        for &x in &s.input {
            let x = x as f64;
            u_min = u_min.min(x);
            u_max = u_max.max(x);
        }
    }
    if !(u_max > u_min) {
        return Err(Error::Numerical(format!(
            "degenerate input range [{u_min}, {u_max}]"
        )));
    }

    let mut sum = 0.0f64;
    let mut count = 0usize;
    for &i in &split.train {
        for &y in &samples[i].target {
            sum += y as f64;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    let mut var = 0.0f64;
    for &i in &split.train {
        for &y in &samples[i].target {
            let d = y as f64 - mean;
            var += d * d;
        }
    }
    var /= count as f64;
    if var == 0.0 {
        return Err(Error::Numerical(
            "zero-variance targets: z-scoring is undefined".into(),
        ));
    }
    let std = var.sqrt();

    let constants = NormConstants {
        u_min,
        u_max,
        target_mean: mean,
        target_std: std,
    };
    let scale = 1.0 / (u_max - u_min);
    for s in samples.iter_mut() {
        for x in &mut s.input {
            *x = (((*x as f64) - u_min) * scale) as f32;
        }
        for y in &mut s.target {
            *y = (((*y as f64) - mean) / std) as f32;
        }
        s.meta.norm = Some(constants);
    }
    Ok(constants)
}

pub fn save_sample(dir: &Path, sample: &Sample) -> Result<()> {
    sample.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_tensor(
        &dir.join("input.ecgf"),
        &TensorData::f32(
            vec![
                sample.t as u64,
                sample.c as u64,
                sample.h as u64,
                sample.w as u64,
            ],
            sample.input.clone(),
        ),
    )?;
    save_tensor(
        &dir.join("target.ecgf"),
        &TensorData::f32(vec![sample.target.len() as u64], sample.target.clone()),
    )?;
    let meta_path = dir.join("meta.json");
    let json = serde_json::to_vec_pretty(&sample.meta).map_err(|e| Error::json(&meta_path, e))?;
    fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
    Ok(())
}

pub fn load_sample(dir: &Path) -> Result<Sample> {
    let input = load_tensor(&dir.join("input.ecgf"))?;
    let target = load_tensor(&dir.join("target.ecgf"))?;
    let meta_path = dir.join("meta.json");
    let meta_bytes = fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SampleMeta =
        serde_json::from_slice(&meta_bytes).map_err(|e| Error::json(&meta_path, e))?;

    if input.dims.len() != 4 {
        return Err(Error::Shape(format!(
            "{}: input tensor must be 4-D, found {:?}",
            dir.display(),
            input.dims
        )));
    }
    let dims: Vec<usize> = input.dims.iter().map(|&d| d as usize).collect();
    let input_values = input
        .as_f32()
        .ok_or_else(|| Error::Shape(format!("{}: input tensor must be f32", dir.display())))?
        .to_vec();
    let target_values = target
        .as_f32()
        .ok_or_else(|| Error::Shape(format!("{}: target tensor must be f32", dir.display())))?
        .to_vec();
    let sample = Sample {
        t: dims[0],
        c: dims[1],
        h: dims[2],
        w: dims[3],
        input: input_values,
        target: target_values,
        meta,
    };
    sample.validate()?;
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn toy_sample(id: &str, fill: f32, target: Vec<f32>) -> Sample {
        let (t, c, h, w) = (target.len(), 1, 2, 2);
        Sample {
            t,
            c,
            h,
            w,
            input: vec![fill; t * c * h * w],
            target,
            meta: SampleMeta {
                case_id: id.into(),
                class: TissueClass::Healthy,
                grid_seed: 1,
                d_range: (0.09, 0.10),
                norm: None,
            },
        }
    }

    fn toy_corpus() -> (Vec<Sample>, CorpusSplit) {
        let samples = vec![
            toy_sample("a", 0.0, vec![1.0, 2.0, 3.0]),
            toy_sample("b", 1.3, vec![2.0, 4.0, 6.0]),
            toy_sample("c", 0.5, vec![0.0, 0.0, 1.0]),
        ];
        let split = CorpusSplit {
            train: vec![0, 1],
            val: vec![2],
            test: vec![],
            seed: 0,
        };
        (samples, split)
    }

    #[test]
    fn input_extrema_map_to_unit_interval() {
        let (mut samples, split) = toy_corpus();
        let constants = normalize_corpus(&mut samples, &split).unwrap();
        assert_eq!(constants.u_min, 0.0);
        assert!((constants.u_max - 1.3).abs() < 1e-6);
        assert!(samples[0].input.iter().all(|&x| x == 0.0));
        assert!(samples[1].input.iter().all(|&x| (x - 1.0).abs() < 1e-7));
    }

    #[test]
    fn val_split_uses_train_constants() {
        // hand-computed: train targets (1,2,3,2,4,6), mean = 3, population
        // variance = (4+1+0+1+1+9)/6 = 8/3
        let (mut samples, split) = toy_corpus();
        let constants = normalize_corpus(&mut samples, &split).unwrap();
        assert!((constants.target_mean - 3.0).abs() < 1e-12);
        let std = (8.0f64 / 3.0).sqrt();
        assert!((constants.target_std - std).abs() < 1e-12);
        for (k, &y) in samples[2].target.iter().enumerate() {
            let raw = [0.0f64, 0.0, 1.0][k];
            let expected = ((raw - 3.0) / std) as f32;
            assert!((y - expected).abs() < 1e-7, "val target {k}");
        }
        for s in &samples {
            assert_eq!(s.meta.norm.unwrap(), constants);
        }
    }

    #[test]
    fn renormalizing_is_identity() {
        let (mut samples, split) = toy_corpus();
        normalize_corpus(&mut samples, &split).unwrap();
        let first = samples.clone();
        let c2 = normalize_corpus(&mut samples, &split).unwrap();
        assert!((c2.u_min).abs() < 1e-12 && (c2.u_max - 1.0).abs() < 1e-12);
        assert!((c2.target_mean).abs() < 1e-7 && (c2.target_std - 1.0).abs() < 1e-7);
        for (a, b) in first.iter().zip(&samples) {
            for (x, y) in a.input.iter().zip(&b.input) {
                assert!((x - y).abs() <= 1e-12);
            }
            for (x, y) in a.target.iter().zip(&b.target) {
                assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn zero_variance_targets_are_rejected() {
        let mut samples = vec![
            toy_sample("a", 0.0, vec![5.0, 5.0]),
            toy_sample("b", 1.0, vec![5.0, 5.0]),
            toy_sample("c", 0.5, vec![1.0, 2.0]),
        ];
        let split = CorpusSplit {
            train: vec![0, 1],
            val: vec![2],
            test: vec![],
            seed: 0,
        };
        assert!(matches!(
            normalize_corpus(&mut samples, &split),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn sample_roundtrip_is_exact() {
        let dir = tempdir().unwrap();
        let sample = toy_sample("case_007", 0.25, vec![0.5, -1.0, 2.5]);
        let path = dir.path().join("case_007");
        save_sample(&path, &sample).unwrap();
        let back = load_sample(&path).unwrap();
        assert_eq!(back, sample);
    }
}
