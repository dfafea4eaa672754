//! Synthetic wideband cell-free CSI.
//!
//! Each AP sees `P` paths with exponentially distributed delays (mean
//! `σ_τ`, equal power). Every path carries a sum-of-sinusoids Doppler
//! process whose arrival angles are shared by all APs, so the time
//! autocorrelation of any series follows `J₀(2π f_d τ)`. The complex
//! sinusoid amplitudes are correlated across APs with
//! `exp(−distance / d₀)`. The three correlation axes are thus controlled
//! independently by `d₀` (space), the UE speed (time) and `σ_τ`
//! (frequency).

mod dataset;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::Array;

pub use dataset::{read_csif, write_csif, CsiDataset, Standardization};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Random-stream identifiers; per-AP delay streams start at `STREAM_DELAYS`.
const STREAM_PLACEMENT: u64 = 0;
const STREAM_ANGLES: u64 = 1;
const STREAM_COEFFS: u64 = 2;
const STREAM_LATENT: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_DELAYS: u64 = 16;

/// How inter-AP amplitude correlation is tied to geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpatialModel {
    /// `exp(−|s_ij| / d₀)` on the actual AP positions.
    #[default]
    Geometric,
    /// Same kernel on independent random latent positions: AP-pair
    /// correlation is strong or weak regardless of physical distance.
    Decoupled,
}

/// Delay-spread presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Umi,
    Uma,
    Rma,
}

impl Scenario {
    pub fn delay_spread(self) -> f64 {
        match self {
            Scenario::Umi => 50e-9,
            Scenario::Uma => 100e-9,
            Scenario::Rma => 300e-9,
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "umi" => Ok(Scenario::Umi),
            "uma" => Ok(Scenario::Uma),
            "rma" => Ok(Scenario::Rma),
            other => Err(Error::Config(format!("unknown scenario `{other}` (umi|uma|rma)"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Umi => "umi",
            Scenario::Uma => "uma",
            Scenario::Rma => "rma",
        })
    }
}

/// Generator settings. Units: meters, seconds, hertz, m/s.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub l: usize,
    pub t_total: usize,
    pub area_side: f64,
    pub ap_height_range: (f64, f64),
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub ue_speed: f64,
    pub paths: usize,
    pub sinusoids: usize,
    pub rms_delay_spread: f64,
    pub spatial_corr_decay: f64,
    pub spatial_model: SpatialModel,
    pub snapshot_interval: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            m: 16,
            l: 16,
            t_total: 10_000,
            area_side: 250.0,
            ap_height_range: (5.0, 25.0),
            carrier_freq: 13e9,
            bandwidth: 20e6,
            ue_speed: 100.0 / 3.6,
            paths: 12,
            sinusoids: 16,
            rms_delay_spread: Scenario::Umi.delay_spread(),
            spatial_corr_decay: 100.0,
            spatial_model: SpatialModel::Geometric,
            snapshot_interval: 1e-3,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn preset(scenario: Scenario) -> Self {
        Self { rms_delay_spread: scenario.delay_spread(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.m == 0 || self.l == 0 || self.t_total == 0 {
            return bad("M, L and T_total must be positive");
        }
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return bad("area_side must be positive");
        }
        let (lo, hi) = self.ap_height_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("ap height range must be an ordered finite interval");
        }
        if !(self.ue_speed >= 0.0 && self.ue_speed.is_finite()) {
            return bad("ue_speed must be non-negative");
        }
        if !(self.rms_delay_spread >= 0.0 && self.rms_delay_spread.is_finite()) {
            return bad("rms delay spread must be non-negative");
        }
        if self.paths == 0 || self.sinusoids == 0 {
            return bad("path and sinusoid counts must be at least 1");
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval.is_finite()) {
            return bad("snapshot interval must be positive");
        }
        if !(self.carrier_freq > 0.0 && self.bandwidth > 0.0) {
            return bad("carrier frequency and bandwidth must be positive");
        }
        if !(self.spatial_corr_decay >= 0.0 && self.noise_std >= 0.0) {
            return bad("d0 and noise std must be non-negative");
        }
        Ok(())
    }

    /// Maximum Doppler shift `v·f_c/c`.
    pub fn max_doppler(&self) -> f64 {
        self.ue_speed * self.carrier_freq / SPEED_OF_LIGHT
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.l as f64
    }

    /// Baseband subcarrier frequencies, centred on zero.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let df = self.subcarrier_spacing();
        let centre = (self.l as f64 - 1.0) / 2.0;
        (0..self.l).map(|i| (i as f64 - centre) * df).collect()
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn box_positions(rng: &mut ChaCha8Rng, cfg: &SimConfig) -> Array<f64> {
    let (lo, hi) = cfg.ap_height_range;
    let mut data = Vec::with_capacity(cfg.m * 3);
    for _ in 0..cfg.m {
        data.push(rng.random::<f64>() * cfg.area_side);
        data.push(rng.random::<f64>() * cfg.area_side);
        data.push(lo + rng.random::<f64>() * (hi - lo));
    }
    Array::from_vec(&[cfg.m, 3], data).expect("finite positions")
}

/// AP positions `[M×3]`: x, y uniform over the square, z over the height range.
pub fn place_aps(cfg: &SimConfig, seed: u64) -> Array<f64> {
    box_positions(&mut stream(seed, STREAM_PLACEMENT), cfg)
}

pub(crate) fn distance(p: &Array<f64>, i: usize, j: usize) -> f64 {
    (0..3).map(|k| (p.at(i, k) - p.at(j, k)).powi(2)).sum::<f64>().sqrt()
}

/// Inter-AP amplitude correlation `exp(−s_ij / d₀)` (identity for `d₀ = 0`).
pub fn spatial_correlation(positions: &Array<f64>, d0: f64) -> Array<f64> {
    let m = positions.shape()[0];
    Array::from_fn(&[m, m], |k| {
        let (i, j) = (k / m, k % m);
        let s = distance(positions, i, j);
        if i == j || (d0 > 0.0 && s == 0.0) {
            1.0
        } else if d0 == 0.0 {
            0.0
        } else {
            (-s / d0).exp()
        }
    })
}

/// Lower Cholesky factor of a positive semi-definite matrix; directions
/// with vanishing pivot get a zero column.
fn cholesky_psd(r: &Array<f64>) -> Vec<f64> {
    let m = r.shape()[0];
    let mut l = vec![0.0; m * m];
    for j in 0..m {
        let d = r.at(j, j) - (0..j).map(|k| l[j * m + k] * l[j * m + k]).sum::<f64>();
        let pivot = d.max(0.0).sqrt();
        l[j * m + j] = pivot;
        for i in j + 1..m {
            let s = r.at(i, j) - (0..j).map(|k| l[i * m + k] * l[j * m + k]).sum::<f64>();
            l[i * m + j] = if pivot > 1e-12 { s / pivot } else { 0.0 };
        }
    }
    l
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Generates a dataset; identical configs give bit-identical output.
pub fn generate(cfg: &SimConfig) -> Result<CsiDataset> {
    cfg.validate()?;
    let (m, l, t_total, p_count, n_sin) = (cfg.m, cfg.l, cfg.t_total, cfg.paths, cfg.sinusoids);
    let positions = place_aps(cfg, cfg.seed);
    let corr_positions = match cfg.spatial_model {
        SpatialModel::Geometric => positions.clone(),
        SpatialModel::Decoupled => box_positions(&mut stream(cfg.seed, STREAM_LATENT), cfg),
    };
    let chol = cholesky_psd(&spatial_correlation(&corr_positions, cfg.spatial_corr_decay));

    // Doppler angular frequencies, shared by all APs: [p][n].
    let fd = cfg.max_doppler();
    let mut angles = stream(cfg.seed, STREAM_ANGLES);
    let omega: Vec<f64> = (0..p_count * n_sin)
        .map(|_| 2.0 * PI * fd * (2.0 * PI * angles.random::<f64>()).cos())
        .collect();

    // Sinusoid amplitudes correlated across APs: coeff[(p·N + n)·M + m].
    let mut coeff_rng = stream(cfg.seed, STREAM_COEFFS);
    let norm = 1.0 / (n_sin as f64).sqrt();
    let mut coeff = vec![Complex64::new(0.0, 0.0); p_count * n_sin * m];
    for pn in 0..p_count * n_sin {
        let z: Vec<Complex64> = (0..m).map(|_| complex_normal(&mut coeff_rng)).collect();
        for i in 0..m {
            let c: Complex64 = (0..=i).map(|k| z[k] * chol[i * m + k]).sum();
            coeff[pn * m + i] = c * norm;
        }
    }

    // Per-AP delays and the resulting frequency phasors: steer[(m·P + p)·L + l].
    let freqs = cfg.subcarrier_frequencies();
    let mut steer = vec![Complex64::new(0.0, 0.0); m * p_count * l];
    for ap in 0..m {
        let mut rng = stream(cfg.seed, STREAM_DELAYS + ap as u64);
        for p in 0..p_count {
            let tau = if cfg.rms_delay_spread > 0.0 {
                rng.sample(Exp::new(1.0 / cfg.rms_delay_spread).expect("positive rate"))
            } else {
                0.0
            };
            for (li, f) in freqs.iter().enumerate() {
                steer[(ap * p_count + p) * l + li] = Complex64::from_polar(1.0, -2.0 * PI * f * tau);
            }
        }
    }

    let path_gain = 1.0 / (p_count as f64).sqrt();
    let mut noise_rng = stream(cfg.seed, STREAM_NOISE);
    let mut csi = Vec::with_capacity(t_total * l * m);
    let mut phasor = vec![Complex64::new(0.0, 0.0); p_count * n_sin];
    let mut amp = vec![Complex64::new(0.0, 0.0); m * p_count];
    for t in 0..t_total {
        let time = t as f64 * cfg.snapshot_interval;
        for (ph, w) in phasor.iter_mut().zip(&omega) {
            *ph = Complex64::from_polar(1.0, w * time);
        }
        for ap in 0..m {
            for p in 0..p_count {
                amp[ap * p_count + p] =
                    (0..n_sin).map(|n| coeff[(p * n_sin + n) * m + ap] * phasor[p * n_sin + n]).sum::<Complex64>()
                        * path_gain;
            }
        }
        for li in 0..l {
            for ap in 0..m {
                let mut h: Complex64 =
                    (0..p_count).map(|p| amp[ap * p_count + p] * steer[(ap * p_count + p) * l + li]).sum();
                if cfg.noise_std > 0.0 {
                    h += complex_normal(&mut noise_rng) * cfg.noise_std;
                }
                csi.push(Complex32::new(h.re as f32, h.im as f32));
            }
        }
    }
    let mut ds = CsiDataset::new(t_total, l, m, csi, positions)?;
    ds.sim_config = Some(cfg.clone());
    Ok(ds)
}

/// Coherence magnitude of an exponential power-delay profile:
/// `1/√(1 + (2π Δf σ_τ)²)`.
pub fn theoretical_freq_correlation(rms_delay_spread: f64, delta_f: f64) -> f64 {
    let x = 2.0 * PI * delta_f * rms_delay_spread;
    1.0 / (1.0 + x * x).sqrt()
}
