//! Measurement-style processing: CFR ↔ CIR, power-delay profiles and
//! delay-window separation of superimposed AP signals.

use num_complex::{Complex32, Complex64};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sim::CsiDataset;
use crate::tensor::Array;
use crate::training::NMSE_DB_FLOOR;

fn transform(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    fft.process(&mut buf);
    let norm = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= norm);
    buf
}

/// Unitary inverse DFT: delay taps of a frequency response.
pub fn cfr_to_cir(cfr: &[Complex64]) -> Vec<Complex64> {
    transform(cfr, true)
}

/// Unitary forward DFT, the inverse of [`cfr_to_cir`].
pub fn cir_to_cfr(taps: &[Complex64]) -> Vec<Complex64> {
    transform(taps, false)
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// One impulse response; bin `n` sits at delay `n · delay_resolution`.
#[derive(Clone, Debug, PartialEq)]
pub struct CirFrame {
    pub taps: Vec<Complex64>,
    /// Seconds per bin (`1 / bandwidth`).
    pub delay_resolution: f64,
    pub timestamp: usize,
}

impl CirFrame {
    pub fn from_cfr(cfr: &[Complex64], delay_resolution: f64, timestamp: usize) -> Self {
        Self { taps: cfr_to_cir(cfr), delay_resolution, timestamp }
    }

    pub fn to_cfr(&self) -> Vec<Complex64> {
        cir_to_cfr(&self.taps)
    }

    pub fn n_delay(&self) -> usize {
        self.taps.len()
    }
}

/// Mean tap power per delay bin.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerDelayProfile {
    pub linear: Vec<f64>,
    /// Relative to the peak bin, floored at −300 dB.
    pub db: Vec<f64>,
    pub delay_resolution: f64,
}

pub fn compute_pdp(cirs: &[CirFrame]) -> Result<PowerDelayProfile> {
    let first = cirs.first().ok_or_else(|| Error::Data("PDP of an empty CIR sequence".into()))?;
    let n = first.n_delay();
    if let Some(f) = cirs.iter().find(|f| f.n_delay() != n) {
        return Err(Error::dim("compute_pdp", &[n], &[f.n_delay()]));
    }
    let mut linear = vec![0.0; n];
    for f in cirs {
        for (p, t) in linear.iter_mut().zip(&f.taps) {
            *p += t.norm_sqr();
        }
    }
    linear.iter_mut().for_each(|p| *p /= cirs.len() as f64);
    let peak = linear.iter().copied().fold(0.0, f64::max);
    let db = linear
        .iter()
        .map(|&p| if p > 0.0 && peak > 0.0 { (10.0 * (p / peak).log10()).max(NMSE_DB_FLOOR) } else { NMSE_DB_FLOOR })
        .collect();
    Ok(PowerDelayProfile { linear, db, delay_resolution: first.delay_resolution })
}

/// Delay bins `[start, end)` attributed to one AP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DelayWindow {
    pub start: usize,
    pub end: usize,
    pub ap: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec {
    pub n_delay: usize,
    pub windows: Vec<DelayWindow>,
}

impl PartitionSpec {
    pub fn new(n_delay: usize, windows: Vec<DelayWindow>) -> Result<Self> {
        let spec = Self { n_delay, windows };
        spec.validate()?;
        Ok(spec)
    }

    /// Consecutive windows `[i·τ_th, (i+1)·τ_th)` for sources `i = 0..n`,
    /// with `τ_th` in delay bins.
    pub fn from_threshold(n_delay: usize, tau_th_bins: usize, sources: usize) -> Result<Self> {
        if tau_th_bins == 0 || sources == 0 {
            return Err(Error::Config("delay threshold and source count must be positive".into()));
        }
        let windows = (0..sources)
            .map(|i| DelayWindow { start: i * tau_th_bins, end: (i + 1) * tau_th_bins, ap: i })
            .collect();
        Self::new(n_delay, windows)
    }

    /// Same as [`Self::from_threshold`] with `τ_th` in seconds.
    pub fn from_threshold_seconds(n_delay: usize, tau_th: f64, delay_resolution: f64, sources: usize) -> Result<Self> {
        if !(tau_th > 0.0 && delay_resolution > 0.0) {
            return Err(Error::Config("delay threshold and resolution must be positive".into()));
        }
        Self::from_threshold(n_delay, (tau_th / delay_resolution).round() as usize, sources)
    }

    pub fn n_aps(&self) -> usize {
        self.windows.iter().map(|w| w.ap + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        for w in &self.windows {
            if w.start > w.end || w.end > self.n_delay {
                return Err(Error::Config(format!("delay window {}..{} outside 0..{}", w.start, w.end, self.n_delay)));
            }
        }
        let mut sorted: Vec<_> = self.windows.iter().filter(|w| w.start < w.end).collect();
        sorted.sort_by_key(|w| w.start);
        if let Some(p) = sorted.windows(2).find(|p| p[0].end > p[1].start) {
            return Err(Error::Config(format!(
                "delay windows {}..{} and {}..{} overlap",
                p[0].start, p[0].end, p[1].start, p[1].end
            )));
        }
        Ok(())
    }
}

/// Output of [`partition_by_delay_window`].
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// `per_ap[ap][frame]`.
    pub per_ap: Vec<Vec<CirFrame>>,
    /// Energy in bins outside every window, summed over frames.
    pub leakage: f64,
    pub total_energy: f64,
}

impl Partition {
    pub fn ap_energy(&self, ap: usize) -> f64 {
        self.per_ap[ap].iter().map(|f| energy(&f.taps)).sum()
    }

    pub fn leakage_fraction(&self) -> f64 {
        if self.total_energy > 0.0 { self.leakage / self.total_energy } else { 0.0 }
    }
}

/// Copies each window's taps to its AP (zeros elsewhere).
pub fn partition_by_delay_window(cirs: &[CirFrame], spec: &PartitionSpec) -> Result<Partition> {
    spec.validate()?;
    let n_aps = spec.n_aps();
    let mut per_ap = vec![Vec::with_capacity(cirs.len()); n_aps];
    let (mut leakage, mut total) = (0.0, 0.0);
    for f in cirs {
        if f.n_delay() != spec.n_delay {
            return Err(Error::dim("partition_by_delay_window", &[f.n_delay()], &[spec.n_delay]));
        }
        let mut outs = vec![vec![Complex64::new(0.0, 0.0); spec.n_delay]; n_aps];
        let mut covered = vec![false; spec.n_delay];
        for w in &spec.windows {
            for b in w.start..w.end {
                outs[w.ap][b] = f.taps[b];
                covered[b] = true;
            }
        }
        total += energy(&f.taps);
        leakage += f.taps.iter().zip(&covered).filter(|(_, &c)| !c).map(|(t, _)| t.norm_sqr()).sum::<f64>();
        for (ap, taps) in outs.into_iter().enumerate() {
            per_ap[ap].push(CirFrame { taps, delay_resolution: f.delay_resolution, timestamp: f.timestamp });
        }
    }
    Ok(Partition { per_ap, leakage, total_energy: total })
}

/// Assembles `per_ap[m][t][l]` frequency responses into a dataset.
pub fn build_dataset_from_cfrs(per_ap: &[Vec<Vec<Complex64>>], positions: Option<Array<f64>>) -> Result<CsiDataset> {
    let m = per_ap.len();
    if m == 0 {
        return Err(Error::Data("no AP sequences to assemble".into()));
    }
    let t_total = per_ap[0].len();
    let l = per_ap[0].first().map_or(0, Vec::len);
    for (ap, seq) in per_ap.iter().enumerate() {
        if seq.len() != t_total || seq.iter().any(|f| f.len() != l) {
            return Err(Error::Data(format!("AP {ap} does not share the {t_total}×{l} shape of AP 0")));
        }
    }
    let mut csi = Vec::with_capacity(t_total * l * m);
    for t in 0..t_total {
        for li in 0..l {
            for seq in per_ap {
                let z = seq[t][li];
                csi.push(Complex32::new(z.re as f32, z.im as f32));
            }
        }
    }
    CsiDataset::new(t_total, l, m, csi, positions.unwrap_or_else(|| Array::zeros(&[m, 3])))
}

/// CFR sequences of one AP column of a dataset: `[t][l]`.
pub fn dataset_cfrs(ds: &CsiDataset, ap: usize) -> Vec<Vec<Complex64>> {
    (0..ds.t_total).map(|t| (0..ds.l).map(|l| ds.at(t, l, ap)).collect()).collect()
}

/// Splits every AP-0 frame of a single-column dataset into `spec.n_aps()`
/// sources and rebuilds a multi-AP dataset from their frequency responses.
pub fn separate_dataset(ds: &CsiDataset, spec: &PartitionSpec, delay_resolution: f64) -> Result<(CsiDataset, Partition)> {
    if ds.m != 1 {
        return Err(Error::Data(format!("delay-window separation expects one mixed column, got M = {}", ds.m)));
    }
    if spec.n_delay != ds.l {
        return Err(Error::dim("separate_dataset", &[spec.n_delay], &[ds.l]));
    }
    let frames: Vec<CirFrame> = dataset_cfrs(ds, 0)
        .iter()
        .enumerate()
        .map(|(t, cfr)| CirFrame::from_cfr(cfr, delay_resolution, t))
        .collect();
    let part = partition_by_delay_window(&frames, spec)?;
    let per_ap: Vec<Vec<Vec<Complex64>>> =
        part.per_ap.iter().map(|frames| frames.iter().map(CirFrame::to_cfr).collect()).collect();
    let out = build_dataset_from_cfrs(&per_ap, None)?;
    Ok((out, part))
}
