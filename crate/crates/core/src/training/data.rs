use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::{CsiDataset, Standardization};

/// Which real-valued channel of the complex CSI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

/// `[0, n_train)` and `[n_train, T_total)` with `n_train = round(f·T_total)`.
pub fn chronological_split(t_total: usize, train_fraction: f64) -> Result<(Range<usize>, Range<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let n_train = (train_fraction * t_total as f64).round() as usize;
    if n_train == 0 || n_train >= t_total {
        return Err(Error::Data(format!("cannot split {t_total} snapshots at fraction {train_fraction}")));
    }
    Ok((0..n_train, n_train..t_total))
}

fn moments(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    (mean, (m2 / n).sqrt())
}

/// Per-part mean and (population) standard deviation over the snapshots
/// in `ranges`.
pub fn fit_standardization(ds: &CsiDataset, ranges: &[Range<usize>]) -> Result<Standardization> {
    let n = ds.snapshot_len();
    let values = || {
        ranges
            .iter()
            .flat_map(move |r| ds.csi()[r.start * n..r.end * n].iter())
            .map(|z| (z.re as f64, z.im as f64))
    };
    if ranges.iter().all(|r| r.is_empty()) || ranges.iter().any(|r| r.end > ds.t_total) {
        return Err(Error::Data(format!("invalid standardisation ranges {ranges:?}")));
    }
    let (mean_re, std_re) = moments(values().map(|v| v.0));
    let (mean_im, std_im) = moments(values().map(|v| v.1));
    if !(std_re > 0.0 && std_im > 0.0) {
        return Err(Error::Data("zero variance in real or imaginary part".into()));
    }
    Ok(Standardization { mean_re, std_re, mean_im, std_im })
}

/// Standardised real and imaginary planes of a dataset, `[t][l][m]` order.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizedData {
    pub t_total: usize,
    pub l: usize,
    pub m: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub stats: Standardization,
}

impl StandardizedData {
    pub fn part(&self, part: Part) -> &[f64] {
        match part {
            Part::Real => &self.re,
            Part::Imag => &self.im,
        }
    }

    /// Snapshots `[start, start + len)` of one part.
    pub fn frames(&self, part: Part, start: usize, len: usize) -> &[f64] {
        let n = self.l * self.m;
        &self.part(part)[start * n..(start + len) * n]
    }

    pub fn invert(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| self.stats.invert(r, i)).collect()
    }
}

/// Applies statistics fitted on `train_ranges` to the whole dataset.
pub fn standardize(ds: &CsiDataset, train_ranges: &[Range<usize>]) -> Result<StandardizedData> {
    let stats = fit_standardization(ds, train_ranges)?;
    Ok(standardize_with(ds, stats))
}

pub fn standardize_with(ds: &CsiDataset, stats: Standardization) -> StandardizedData {
    let (re, im) = ds
        .csi()
        .iter()
        .map(|z| stats.apply(Complex64::new(z.re as f64, z.im as f64)))
        .unzip();
    StandardizedData { t_total: ds.t_total, l: ds.l, m: ds.m, re, im, stats }
}

/// Starts `s` of every window whose `T` inputs and `K` targets,
/// `[s, s + T + K)`, lie inside `range`, every `stride` snapshots.
pub fn window_starts(range: &Range<usize>, t: usize, k: usize, stride: usize) -> Vec<usize> {
    let span = t + k;
    if range.len() < span || stride == 0 {
        return Vec::new();
    }
    (range.start..=range.end - span).step_by(stride).collect()
}
