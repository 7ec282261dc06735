//! Vibration record ingestion and window sampling.
//!
//! The record is a long single-channel signal (canonically 262,144 samples:
//! 256 seconds at 1024 Hz). Training consumes randomly positioned
//! 1024-sample windows copied raw from the record — nothing in this module
//! rescales, detrends, or filters; the model trains on the unnormalized
//! signal by design.

pub mod synth;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};
use std::fs;
use std::path::{Path, PathBuf};

/// Length of one training window, in samples.
pub const WINDOW_LEN: usize = 1024;

/// Input file format for [`load_signal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    /// Decide from the extension: `.csv`, `.f32`, `.f64`.
    Auto,
    /// One numeric value per line; a single non-numeric header line is
    /// skipped.
    Csv,
    /// Consecutive little-endian IEEE-754 32-bit floats.
    F32le,
    /// Consecutive little-endian IEEE-754 64-bit floats.
    F64le,
}

/// The real vibration record plus metadata.
#[derive(Debug, Clone)]
pub struct SignalDataset<P: Scalar> {
    samples: Vec<P>,
    /// Metadata only; the canonical record was captured at 1024 Hz.
    pub sample_rate: u32,
    pub source: PathBuf,
}

/// A batch of real windows: tensor `(B, 1, WINDOW_LEN)` plus the start
/// offset of each window in the record.
#[derive(Debug, Clone)]
pub struct WindowBatch<P: Scalar> {
    pub tensor: Tensor<P>,
    pub offsets: Vec<usize>,
}

impl<P: Scalar> SignalDataset<P> {
    /// Validate and wrap an in-memory record.
    pub fn from_samples(samples: Vec<P>, source: PathBuf) -> Result<Self> {
        if samples.len() < WINDOW_LEN {
            return Err(Error::DatasetTooSmall {
                len: samples.len(),
                needed: WINDOW_LEN,
            });
        }
        for (i, v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Data {
                    index: i,
                    reason: format!("non-finite sample {v}"),
                });
            }
        }
        Ok(SignalDataset {
            samples,
            sample_rate: 1024,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[P] {
        &self.samples
    }

    /// Number of non-overlapping windows the record holds; one epoch's
    /// window budget.
    pub fn windows_per_epoch(&self) -> usize {
        self.samples.len() / WINDOW_LEN
    }
}

/// Load a record from disk. See [`SignalFormat`] for the accepted layouts.
pub fn load_signal<P: Scalar>(path: &Path, format: SignalFormat) -> Result<SignalDataset<P>> {
    let format = match format {
        SignalFormat::Auto => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => SignalFormat::Csv,
            Some("f32") => SignalFormat::F32le,
            Some("f64") => SignalFormat::F64le,
            other => {
                return Err(Error::Config(format!(
                    "cannot auto-detect signal format from extension {other:?}; \
                     expected .csv, .f32, or .f64"
                )))
            }
        },
        f => f,
    };

    let samples: Vec<P> = match format {
        SignalFormat::Csv => {
            let text = fs::read_to_string(path)?;
            let mut values = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                match trimmed.parse::<f64>() {
                    Ok(v) => values.push(P::from_f64(v)),
                    // One header line is tolerated at the top of the file.
                    Err(_) if lineno == 0 => continue,
                    Err(_) => {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            line: lineno + 1,
                            reason: format!("not a number: {trimmed:?}"),
                        })
                    }
                }
            }
            values
        }
        SignalFormat::F32le => {
            let bytes = fs::read(path)?;
            if bytes.len() % 4 != 0 {
                return Err(Error::Format {
                    offset: (bytes.len() - bytes.len() % 4) as u64,
                    reason: "trailing bytes: file length is not a multiple of 4".into(),
                });
            }
            bytes
                .chunks_exact(4)
                .map(|b| P::from_f64(f32::from_le_bytes(b.try_into().unwrap()) as f64))
                .collect()
        }
        SignalFormat::F64le => {
            let bytes = fs::read(path)?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Format {
                    offset: (bytes.len() - bytes.len() % 8) as u64,
                    reason: "trailing bytes: file length is not a multiple of 8".into(),
                });
            }
            bytes
                .chunks_exact(8)
                .map(|b| P::from_f64(f64::from_le_bytes(b.try_into().unwrap())))
                .collect()
        }
        SignalFormat::Auto => unreachable!(),
    };

    SignalDataset::from_samples(samples, path.to_path_buf())
}

/// Draw `batch` windows with offsets i.i.d. uniform over all valid start
/// positions (with replacement). Windows are exact raw slices of the record.
pub fn sample_windows<P: Scalar>(
    ds: &SignalDataset<P>,
    batch: usize,
    rng: &mut Rng,
) -> WindowBatch<P> {
    debug_assert!(batch >= 1);
    let max_offset = ds.len() - WINDOW_LEN;
    let mut offsets = Vec::with_capacity(batch);
    let mut data = Vec::with_capacity(batch * WINDOW_LEN);
    for _ in 0..batch {
        let o = rng.uniform_below(max_offset as u64 + 1) as usize;
        offsets.push(o);
        data.extend_from_slice(&ds.samples[o..o + WINDOW_LEN]);
    }
    WindowBatch {
        tensor: Tensor::from_vec(batch, 1, WINDOW_LEN, data).unwrap(),
        offsets,
    }
}

/// Record statistics: mean, population standard deviation (divide by N),
/// min, max. Two-pass computation in f64.
pub fn dataset_stats<P: Scalar>(ds: &SignalDataset<P>) -> (f64, f64, f64, f64) {
    let n = ds.len() as f64;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in &ds.samples {
        let x = v.to_f64();
        sum += x;
        min = min.min(x);
        max = max.max(x);
    }
    let mean = sum / n;
    let mut sq = 0.0;
    for v in &ds.samples {
        let d = v.to_f64() - mean;
        sq += d * d;
    }
    (mean, (sq / n).sqrt(), min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_from(values: Vec<f64>) -> SignalDataset<f64> {
        SignalDataset::from_samples(values, PathBuf::from("test")).unwrap()
    }

    #[test]
    fn short_record_is_rejected() {
        let err = SignalDataset::from_samples(vec![0.0f64; 100], PathBuf::from("x")).unwrap_err();
        assert!(matches!(err, Error::DatasetTooSmall { len: 100, needed: 1024 }));
    }

    #[test]
    fn non_finite_sample_is_rejected_with_index() {
        let mut v = vec![0.0f64; 2000];
        v[1234] = f64::INFINITY;
        let err = SignalDataset::from_samples(v, PathBuf::from("x")).unwrap_err();
        assert!(matches!(err, Error::Data { index: 1234, .. }));
    }

    #[test]
    fn windows_are_exact_slices() {
        let mut rng = Rng::from_seed(9);
        let record: Vec<f64> = (0..4096).map(|i| (i as f64).sin()).collect();
        let ds = ds_from(record);
        let batch = sample_windows(&ds, 8, &mut rng);
        assert_eq!(batch.tensor.shape(), (8, 1, WINDOW_LEN));
        for (b, &o) in batch.offsets.iter().enumerate() {
            assert!(o <= ds.len() - WINDOW_LEN);
            assert_eq!(batch.tensor.row(b, 0), &ds.samples()[o..o + WINDOW_LEN]);
        }
    }

    #[test]
    fn window_of_minimal_record_is_whole_record() {
        let mut rng = Rng::from_seed(10);
        let ds = ds_from((0..1024).map(|i| i as f64).collect());
        let batch = sample_windows(&ds, 4, &mut rng);
        assert!(batch.offsets.iter().all(|&o| o == 0));
    }

    #[test]
    fn same_seed_same_offsets() {
        let ds = ds_from((0..4096).map(|i| i as f64 * 0.5).collect());
        let a = sample_windows(&ds, 16, &mut Rng::from_seed(77));
        let b = sample_windows(&ds, 16, &mut Rng::from_seed(77));
        assert_eq!(a.offsets, b.offsets);
        assert_eq!(a.tensor.data(), b.tensor.data());
    }

    #[test]
    fn offsets_are_uniform_per_decile() {
        let ds = ds_from(vec![0.0f64; 262_144]);
        let mut rng = Rng::from_seed(13);
        let n = 100_000usize;
        let span = (ds.len() - WINDOW_LEN + 1) as f64;
        let mut deciles = [0usize; 10];
        for _ in 0..n / 1000 {
            let batch = sample_windows(&ds, 1000, &mut rng);
            for &o in &batch.offsets {
                deciles[((o as f64 / span) * 10.0) as usize] += 1;
            }
        }
        for (i, &count) in deciles.iter().enumerate() {
            let frac = count as f64 / n as f64;
            assert!((frac - 0.1).abs() / 0.1 < 0.02, "decile {i}: {frac}");
        }
    }

    #[test]
    fn stats_constant_record() {
        let ds = ds_from(vec![2.5f64; 2048]);
        let (mean, std, min, max) = dataset_stats(&ds);
        assert_eq!(mean, 2.5);
        assert_eq!(std, 0.0);
        assert_eq!((min, max), (2.5, 2.5));
    }

    #[test]
    fn stats_plus_minus_one() {
        let mut v = vec![-1.0f64; 512];
        v.extend(vec![1.0f64; 512]);
        let ds = ds_from(v);
        let (mean, std, min, max) = dataset_stats(&ds);
        assert!(mean.abs() < 1e-15);
        assert!((std - 1.0).abs() < 1e-15);
        assert_eq!((min, max), (-1.0, 1.0));
    }

    #[test]
    fn stats_match_naive_oracle() {
        let mut rng = Rng::from_seed(12);
        let record: Vec<f64> = (0..4096).map(|_| rng.normal_f64() * 3.0 + 1.0).collect();
        let ds = ds_from(record.clone());
        let (mean, std, _, _) = dataset_stats(&ds);

        let n = record.len() as f64;
        let oracle_mean: f64 = record.iter().sum::<f64>() / n;
        let oracle_std =
            (record.iter().map(|v| (v - oracle_mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mean - oracle_mean).abs() / oracle_mean.abs().max(1e-12) < 1e-10);
        assert!((std - oracle_std).abs() / oracle_std < 1e-10);
    }

    #[test]
    fn csv_round_trip_with_header_and_f32_sizes() {
        let dir = std::env::temp_dir().join(format!("vibegen_data_test_{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();

        let csv_path = dir.join("rec.csv");
        let mut text = String::from("value\n");
        for i in 0..2048 {
            text.push_str(&format!("{}\n", (i as f64 * 0.01).sin()));
        }
        fs::write(&csv_path, text).unwrap();
        let ds: SignalDataset<f64> = load_signal(&csv_path, SignalFormat::Auto).unwrap();
        assert_eq!(ds.len(), 2048);

        let f32_path = dir.join("rec.f32");
        let mut bytes = Vec::new();
        for i in 0..1024u32 {
            bytes.extend_from_slice(&(i as f32).to_le_bytes());
        }
        assert_eq!(bytes.len(), 4096);
        fs::write(&f32_path, bytes).unwrap();
        let ds: SignalDataset<f32> = load_signal(&f32_path, SignalFormat::Auto).unwrap();
        assert_eq!(ds.len(), 1024);

        let bad_path = dir.join("bad.csv");
        fs::write(&bad_path, "1.0\n2.0\nnot_a_number\n").unwrap();
        let err = load_signal::<f64>(&bad_path, SignalFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));

        let empty_path = dir.join("empty.csv");
        fs::write(&empty_path, "").unwrap();
        let err = load_signal::<f64>(&empty_path, SignalFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::DatasetTooSmall { len: 0, .. }));

        fs::remove_dir_all(&dir).ok();
    }
}
