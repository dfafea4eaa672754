//! Independent reference values used by several test targets.

use std::f64::consts::PI;

use cfchanpred::sim::{self, CsiDataset, SimConfig};
use cfchanpred::tensor::Array;
use num_complex::{Complex32, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `J₀(x) = (1/π) ∫₀^π cos(x sin θ) dθ` by composite Simpson.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |k: usize| (x * (k as f64 * h).sin()).cos();
    let mut s = f(0) + f(n);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    s * h / 3.0 / PI
}

/// AR(1) `x_t = φ x_{t−1} + e_t` with unit-variance Gaussian innovations.
pub fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n + 200 {
        let e: f64 = StandardNormal.sample(&mut rng);
        prev = phi * prev + e;
        x.push(prev);
    }
    x.split_off(200)
}

/// Dataset whose every real and imaginary series is an independent AR(1).
pub fn ar1_dataset(phi: f64, t_total: usize, l: usize, m: usize, seed: u64) -> CsiDataset {
    let series: Vec<(Vec<f64>, Vec<f64>)> = (0..l * m)
        .map(|i| (ar1(phi, t_total, seed * 1000 + 2 * i as u64), ar1(phi, t_total, seed * 1000 + 2 * i as u64 + 1)))
        .collect();
    let mut csi = Vec::with_capacity(t_total * l * m);
    for t in 0..t_total {
        for s in &series {
            csi.push(Complex32::new(s.0[t] as f32, s.1[t] as f32));
        }
    }
    CsiDataset::new(t_total, l, m, csi, Array::zeros(&[m, 3])).unwrap()
}

/// Normalised temporal autocorrelation `|Σ_t h(t+k) h*(t)| / Σ_t |h(t)|²`
/// pooled over every series of `ds`, for lags `0..=max_lag`.
pub fn pooled_autocorrelation(ds: &CsiDataset, max_lag: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); max_lag + 1];
    let n = ds.t_total - max_lag;
    for l in 0..ds.l {
        for m in 0..ds.m {
            let s = ds.series(l, m);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += (0..n).map(|t| s[t + k] * s[t].conj()).sum::<Complex64>();
            }
        }
    }
    let r0 = acc[0].re;
    acc.iter().map(|a| a / r0).collect()
}

/// RMS distance of the realization-averaged autocorrelation from
/// `J₀(2π f_d kΔt)` over lags `1..=20`.
pub fn jakes_rms_error(realizations: u64) -> f64 {
    let base = SimConfig { m: 1, l: 1, t_total: 400, paths: 12, snapshot_interval: 0.02 / 1204.0, ..SimConfig::default() };
    let lags = 20;
    let mut mean = vec![0.0; lags + 1];
    for seed in 0..realizations {
        let ds = sim::generate(&SimConfig { seed, ..base.clone() }).unwrap();
        for (m, r) in mean.iter_mut().zip(pooled_autocorrelation(&ds, lags)) {
            *m += r.re / realizations as f64;
        }
    }
    let fd_dt = base.max_doppler() * base.snapshot_interval;
    let sq: f64 = (1..=lags).map(|k| (mean[k] - bessel_j0(2.0 * PI * fd_dt * k as f64)).powi(2)).sum();
    (sq / lags as f64).sqrt()
}

/// RMS distance of the measured inter-subcarrier `|PCC|` from the
/// exponential-PDP closed form, over offsets `1..L`.
pub fn freq_pcc_rms_error(rms_delay_spread: f64, seeds: u64) -> f64 {
    let base = SimConfig {
        m: 8,
        l: 16,
        t_total: 600,
        paths: 256,
        sinusoids: 4,
        rms_delay_spread,
        snapshot_interval: 0.05 / 1204.0,
        ..SimConfig::default()
    };
    let df = base.subcarrier_spacing();
    let mut sq = 0.0;
    let mut count = 0;
    for seed in 0..seeds {
        let ds = sim::generate(&SimConfig { seed, ..base.clone() }).unwrap();
        let f = cfchanpred::analysis::freq_pcc(&ds).unwrap();
        for off in 1..base.l {
            let measured = cfchanpred::analysis::mean_pcc_at_offset(&f, off);
            sq += (measured - sim::theoretical_freq_correlation(rms_delay_spread, off as f64 * df)).powi(2);
            count += 1;
        }
    }
    (sq / count as f64).sqrt()
}

/// Window length chosen on noiseless Jakes data whose middle speed gives
/// `f_d·Δt = 0.01`.
pub fn jakes_window_lengths(speeds_kmh: &[f64], seed: u64) -> Vec<usize> {
    let dt = 0.01 / (100.0 / 3.6 * 13e9 / sim::SPEED_OF_LIGHT);
    speeds_kmh
        .iter()
        .map(|&v| {
            let cfg = SimConfig { m: 4, l: 4, t_total: 4000, ue_speed: v / 3.6, snapshot_interval: dt, seed, ..SimConfig::default() };
            cfchanpred::analysis::select_window_length(&sim::generate(&cfg).unwrap(), 0.1, 40).unwrap().lag
        })
        .collect()
}

/// Two generator channels confined to disjoint delay supports
/// (`[0, 8)` and `[16, 24)` of 32 bins), mixed into one column, then
/// separated. Returns the worse per-AP reconstruction NMSE in dB.
pub fn two_source_separation_db(seed: u64) -> f64 {
    use cfchanpred::pipeline::*;
    let cfg = SimConfig { m: 2, l: 32, t_total: 50, rms_delay_spread: 60e-9, seed, ..SimConfig::default() };
    let ds = sim::generate(&cfg).unwrap();
    let n = cfg.l;
    let truth: Vec<Vec<Vec<Complex64>>> = (0..2)
        .map(|ap| {
            dataset_cfrs(&ds, ap)
                .iter()
                .map(|cfr| {
                    let taps = cfr_to_cir(cfr);
                    let mut confined = vec![Complex64::new(0.0, 0.0); n];
                    for b in 0..8 {
                        confined[b + 16 * ap] = taps[b];
                    }
                    cir_to_cfr(&confined)
                })
                .collect()
        })
        .collect();
    let mixed: Vec<Vec<Complex64>> =
        (0..cfg.t_total).map(|t| (0..n).map(|l| truth[0][t][l] + truth[1][t][l]).collect()).collect();
    let mixture = cfchanpred::pipeline::build_dataset_from_cfrs(&[mixed], None).unwrap();
    let spec = PartitionSpec::from_threshold(n, 16, 2).unwrap();
    let (sep, _) = separate_dataset(&mixture, &spec, 1.0 / cfg.bandwidth).unwrap();
    (0..2)
        .map(|ap| {
            let (mut err, mut pow) = (0.0, 0.0);
            for t in 0..cfg.t_total {
                for l in 0..n {
                    err += (sep.at(t, l, ap) - truth[ap][t][l]).norm_sqr();
                    pow += truth[ap][t][l].norm_sqr();
                }
            }
            10.0 * (err / pow).log10()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
