//! Evaluation protocol: moment-distance scores between real and generated
//! windows.
//!
//! The score between two windows is `(|mu_x - mu_y|)^2 + (sigma_x -
//! sigma_y)^2` with per-window mean and population standard deviation
//! (divide by N). It is a univariate moment distance, not the
//! inception-embedding Frechet distance, but it is conventionally called a
//! FID score in this setting and this module keeps that name.
//!
//! Population sigma is used so that `fid_score(x, x) == 0` holds without a
//! correction-term ambiguity; at 1024-sample windows the difference from
//! the sample convention is below 0.1%. All statistics accumulate in f64
//! regardless of the tensor precision.
//!
//! The full protocol scores every (real, fake) pair — 256 x 256 = 65,536
//! scores at the reference evaluation size — then derives a density
//! histogram, box statistics, and low/median/high exemplar pairs for
//! plotting.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};
use std::io::Write;

pub const DEFAULT_HIST_BINS: usize = 100;

/// Real and generated windows to score against each other.
#[derive(Debug, Clone)]
pub struct FidInputs<P: Scalar> {
    /// `(N, 1, window)` real windows.
    pub real: Tensor<P>,
    /// `(M, 1, window)` generated windows.
    pub fake: Tensor<P>,
}

/// Mean and population standard deviation of one window.
pub fn window_stats<P: Scalar>(window: &[P]) -> Result<(f64, f64)> {
    if window.is_empty() {
        return Err(Error::EmptyInput("window_stats"));
    }
    let n = window.len() as f64;
    let mean = window.iter().map(|v| v.to_f64()).sum::<f64>() / n;
    let var = window
        .iter()
        .map(|v| {
            let d = v.to_f64() - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok((mean, var.sqrt()))
}

/// Moment distance between two windows (squared mean gap plus squared
/// standard-deviation gap). Symmetric, zero for identical windows.
pub fn fid_score<P: Scalar>(x: &[P], y: &[P]) -> Result<f64> {
    let (mx, sx) = window_stats(x)?;
    let (my, sy) = window_stats(y)?;
    let dm = (mx - my).abs();
    let ds = sx - sy;
    Ok(dm * dm + ds * ds)
}

/// Score every (real, fake) pair; row-major `N x M` result with
/// `scores[i * M + j] = fid_score(real_i, fake_j)`.
///
/// Per-window statistics are computed once and combined per pair, which is
/// numerically identical to calling [`fid_score`] on each pair.
pub fn fid_matrix<P: Scalar>(inputs: &FidInputs<P>) -> Result<Vec<f64>> {
    let n = inputs.real.batch;
    let m = inputs.fake.batch;
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("fid_matrix"));
    }
    let real_stats: Vec<(f64, f64)> = (0..n)
        .map(|i| window_stats(inputs.real.row(i, 0)))
        .collect::<Result<_>>()?;
    let fake_stats: Vec<(f64, f64)> = (0..m)
        .map(|j| window_stats(inputs.fake.row(j, 0)))
        .collect::<Result<_>>()?;
    let mut scores = Vec::with_capacity(n * m);
    for &(mx, sx) in &real_stats {
        for &(my, sy) in &fake_stats {
            let dm = (mx - my).abs();
            let ds = sx - sy;
            scores.push(dm * dm + ds * ds);
        }
    }
    Ok(scores)
}

/// Moment distance between the two sets pooled into one sample each; the
/// per-epoch training monitor.
pub fn pooled_fid<P: Scalar>(real: &Tensor<P>, fake: &Tensor<P>) -> Result<f64> {
    fid_score(real.data(), fake.data())
}

/// Equal-width density histogram; `sum(density * width) == 1`.
#[derive(Debug, Clone)]
pub struct Histogram {
    /// `bins + 1` edges, ascending.
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    pub fn integral(&self) -> f64 {
        let width = self.edges[1] - self.edges[0];
        self.densities.iter().sum::<f64>() * width
    }
}

/// Histogram over `[min, max]` with `bins` equal-width bins; values equal
/// to the maximum land in the last bin. A zero-span input is widened to
/// `[v - 0.5, v + 0.5]` so the density still integrates to one (a single
/// occupied bin).
pub fn histogram_density(scores: &[f64], bins: usize) -> Result<Histogram> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("histogram_density"));
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in scores {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let idx = (((s - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (scores.len() as f64 * width);
    let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let densities = counts.iter().map(|&c| c as f64 * norm).collect();
    Ok(Histogram { edges, densities })
}

/// Box-plot statistics of one signal under the Tukey convention.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Most extreme data points within `q1 - 1.5*IQR` and `q3 + 1.5*IQR`.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: usize,
}

/// Quantile by linear interpolation between order statistics of the sorted
/// data: position `q * (n - 1)`, interpolating between the bracketing
/// values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn box_stats<P: Scalar>(signal: &[P]) -> Result<BoxStats> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("box_stats"));
    }
    let mut sorted: Vec<f64> = signal.iter().map(|v| v.to_f64()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_low = *sorted.iter().find(|&&v| v >= lo_fence).unwrap();
    let whisker_high = *sorted.iter().rev().find(|&&v| v <= hi_fence).unwrap();
    let outliers = sorted.iter().filter(|&&v| v < lo_fence || v > hi_fence).count();
    Ok(BoxStats {
        mean,
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// One scored (real, fake) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExemplarPair {
    pub real_index: usize,
    pub fake_index: usize,
    pub score: f64,
}

/// The lowest-, nearest-to-median-, and highest-scoring pairs.
///
/// Median selection minimizes the distance to the matrix median; on a
/// distance tie the higher score wins, and equal scores keep the lowest
/// flat index. Minimum and maximum keep the lowest flat index among equals.
pub fn select_exemplars(
    scores: &[f64],
    n_real: usize,
    n_fake: usize,
) -> Result<(ExemplarPair, ExemplarPair, ExemplarPair)> {
    if scores.is_empty() || scores.len() != n_real * n_fake {
        return Err(Error::EmptyInput("select_exemplars"));
    }
    let pair = |flat: usize| ExemplarPair {
        real_index: flat / n_fake,
        fake_index: flat % n_fake,
        score: scores[flat],
    };

    let mut lo = 0usize;
    let mut hi = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[lo] {
            lo = i;
        }
        if s > scores[hi] {
            hi = i;
        }
    }

    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = quantile(&sorted, 0.5);
    let mut best = 0usize;
    let mut best_dist = (scores[0] - median).abs();
    for (i, &s) in scores.iter().enumerate().skip(1) {
        let dist = (s - median).abs();
        if dist < best_dist || (dist == best_dist && s > scores[best]) {
            best = i;
            best_dist = dist;
        }
    }

    Ok((pair(lo), pair(best), pair(hi)))
}

/// Everything the evaluation protocol produces for one real-vs-generated
/// comparison.
#[derive(Debug, Clone)]
pub struct FidReport {
    pub n_real: usize,
    pub n_fake: usize,
    /// Row-major `n_real x n_fake` score matrix.
    pub scores: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub histogram: Histogram,
    pub low: ExemplarPair,
    pub median: ExemplarPair,
    pub high: ExemplarPair,
    /// Box statistics for (real, fake) members of low, median, high pairs.
    pub box_stats: Vec<(String, BoxStats)>,
}

/// Run the full protocol: score matrix, histogram, exemplars, and box
/// statistics for all six exemplar signals.
pub fn build_report<P: Scalar>(inputs: &FidInputs<P>, bins: usize) -> Result<FidReport> {
    let scores = fid_matrix(inputs)?;
    let n_real = inputs.real.batch;
    let n_fake = inputs.fake.batch;
    let histogram = histogram_density(&scores, bins)?;
    let (low, median, high) = select_exemplars(&scores, n_real, n_fake)?;

    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &s in &scores {
        min = min.min(s);
        max = max.max(s);
        sum += s;
    }

    let mut box_stats_out = Vec::new();
    for (label, pair) in [("low", low), ("median", median), ("high", high)] {
        box_stats_out.push((
            format!("{label}_real"),
            box_stats(inputs.real.row(pair.real_index, 0))?,
        ));
        box_stats_out.push((
            format!("{label}_fake"),
            box_stats(inputs.fake.row(pair.fake_index, 0))?,
        ));
    }

    Ok(FidReport {
        n_real,
        n_fake,
        mean: sum / scores.len() as f64,
        scores,
        min,
        max,
        histogram,
        low,
        median,
        high,
        box_stats: box_stats_out,
    })
}

// --- CSV emission ---------------------------------------------------------
//
// All files are headerless, '.' decimal, '\n' line endings. Columns are
// documented in the README.

/// `i,j,score` — one row per matrix entry.
pub fn write_scores_csv(report: &FidReport, out: &mut impl Write) -> Result<()> {
    for i in 0..report.n_real {
        for j in 0..report.n_fake {
            writeln!(out, "{i},{j},{}", report.scores[i * report.n_fake + j])?;
        }
    }
    Ok(())
}

/// `bin_left,bin_right,density` — one row per bin.
pub fn write_hist_csv(report: &FidReport, out: &mut impl Write) -> Result<()> {
    let h = &report.histogram;
    for (i, d) in h.densities.iter().enumerate() {
        writeln!(out, "{},{},{}", h.edges[i], h.edges[i + 1], d)?;
    }
    Ok(())
}

/// `rank,member,window_index,score,s0..s{window-1}` — two rows per exemplar
/// pair (the real member then the fake member).
pub fn write_exemplars_csv<P: Scalar>(
    report: &FidReport,
    inputs: &FidInputs<P>,
    out: &mut impl Write,
) -> Result<()> {
    for (label, pair) in [
        ("low", report.low),
        ("median", report.median),
        ("high", report.high),
    ] {
        for (member, tensor, index) in [
            ("real", &inputs.real, pair.real_index),
            ("fake", &inputs.fake, pair.fake_index),
        ] {
            write!(out, "{label},{member},{index},{}", pair.score)?;
            for v in tensor.row(index, 0) {
                write!(out, ",{}", v.to_f64())?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// `label,mean,median,q1,q3,whisker_low,whisker_high,outliers`.
pub fn write_box_stats_csv(report: &FidReport, out: &mut impl Write) -> Result<()> {
    for (label, b) in &report.box_stats {
        writeln!(
            out,
            "{label},{},{},{},{},{},{},{}",
            b.mean, b.median, b.q1, b.q3, b.whisker_low, b.whisker_high, b.outliers
        )?;
    }
    Ok(())
}
