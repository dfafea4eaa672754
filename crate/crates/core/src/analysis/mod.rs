//! Correlation analysis and the hyper-parameter rules derived from it.

mod adjacency;
mod correlation;

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::CsiDataset;
use crate::tensor::Array;

pub use adjacency::{
    ap_series, build_adjacency_constant, build_adjacency_distance, build_adjacency_pcc, default_distance_sigma, AdjacencyChoice,
    pairwise_space_pcc, AdjacencyKind, AdjacencyMatrix, SeriesStrategy,
};
pub use correlation::{autocovariance, pacf, pcc, pcc_complex, EmpiricalCdf};

/// At most this many `(l, m)` series enter the averaged PACF.
pub const PACF_SERIES: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct WindowSelection {
    pub lag: usize,
    /// The threshold was never crossed (or every series was constant).
    pub warning: bool,
    /// Mean `|PACF|` over the sampled series, lags `0..=max_lag`.
    pub mean_abs_re: Vec<f64>,
    pub mean_abs_im: Vec<f64>,
}

fn sampled_pairs(l: usize, m: usize) -> Vec<(usize, usize)> {
    let n = l * m;
    let take = n.min(PACF_SERIES);
    (0..take).map(|i| i * n / take).map(|f| (f / m, f % m)).collect()
}

/// Mean `|PACF|` per lag over up to [`PACF_SERIES`] evenly spaced series of
/// each part; `None` for a part whose series are all constant.
pub fn mean_abs_pacf(ds: &CsiDataset, max_lag: usize) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>)> {
    let mut acc = [vec![0.0; max_lag + 1], vec![0.0; max_lag + 1]];
    let mut used = [0usize; 2];
    for (l, m) in sampled_pairs(ds.l, ds.m) {
        let z = ds.series(l, m);
        for (p, part) in [z.iter().map(|v| v.re).collect::<Vec<_>>(), z.iter().map(|v| v.im).collect()]
            .into_iter()
            .enumerate()
        {
            match pacf(&part, max_lag) {
                Ok(phi) => {
                    for (a, v) in acc[p].iter_mut().zip(&phi) {
                        *a += v.abs();
                    }
                    used[p] += 1;
                }
                Err(Error::Data(_)) if ds.t_total >= max_lag + 2 => {}
                Err(e) => return Err(e),
            }
        }
    }
    let [re, im] = acc;
    let finish = |v: Vec<f64>, n: usize| (n > 0).then(|| v.into_iter().map(|x| x / n as f64).collect());
    Ok((finish(re, used[0]), finish(im, used[1])))
}

/// Smallest lag at which the mean `|PACF|` of both parts is below
/// `threshold`; `max_lag` with a warning when none is.
pub fn select_window_length(ds: &CsiDataset, threshold: f64, max_lag: usize) -> Result<WindowSelection> {
    let (re, im) = mean_abs_pacf(ds, max_lag)?;
    let lag = match (&re, &im) {
        (Some(re), Some(im)) => (1..=max_lag).find(|&k| re[k] < threshold && im[k] < threshold),
        _ => None,
    };
    let ones = vec![1.0; max_lag + 1];
    Ok(WindowSelection {
        lag: lag.unwrap_or(max_lag),
        warning: lag.is_none(),
        mean_abs_re: re.unwrap_or_else(|| ones.clone()),
        mean_abs_im: im.unwrap_or(ones),
    })
}

/// `[L×L]` inter-subcarrier correlation magnitudes, averaged over the APs
/// with a time-varying channel. Unit diagonal.
pub fn freq_pcc(ds: &CsiDataset) -> Result<Array<f64>> {
    let l = ds.l;
    let mut acc = Array::<f64>::zeros(&[l, l]);
    let mut used = 0usize;
    'ap: for ap in 0..ds.m {
        let series: Vec<Vec<Complex64>> = (0..l).map(|li| ds.series(li, ap)).collect();
        let mut block = vec![0.0; l * l];
        for i in 0..l {
            block[i * l + i] = 1.0;
            for j in i + 1..l {
                match pcc_complex(&series[i], &series[j]) {
                    Ok(r) => {
                        block[i * l + j] = r;
                        block[j * l + i] = r;
                    }
                    Err(Error::Data(_)) => continue 'ap,
                    Err(e) => return Err(e),
                }
            }
        }
        for (a, b) in acc.data_mut().iter_mut().zip(&block) {
            *a += b;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Data("every AP series is constant; frequency PCC undefined".into()));
    }
    Ok(acc.scale(1.0 / used as f64))
}

/// Mean `|PCC|` between subcarriers `offset` apart.
pub fn mean_pcc_at_offset(freq_pcc: &Array<f64>, offset: usize) -> f64 {
    let l = freq_pcc.shape()[0];
    if offset >= l {
        return 0.0;
    }
    (0..l - offset).map(|i| freq_pcc.at(i, i + offset).abs()).sum::<f64>() / (l - offset) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelSelection {
    pub size: usize,
    /// Correlation never fell below the threshold; size capped at `L`.
    pub warning: bool,
}

/// Smallest odd `D_k` whose half-width `(D_k−1)/2` covers every offset with
/// mean `|PCC| ≥ threshold`, i.e. offset `(D_k+1)/2` falls below it.
/// Capped at the largest odd size not above `L`.
pub fn select_kernel_size(freq_pcc: &Array<f64>, threshold: f64) -> KernelSelection {
    let l = freq_pcc.shape()[0];
    let cap = if l % 2 == 1 { l } else { l - 1 };
    let mut size = 1;
    while size <= cap {
        if mean_pcc_at_offset(freq_pcc, size.div_ceil(2)) < threshold {
            return KernelSelection { size, warning: false };
        }
        size += 2;
    }
    KernelSelection { size: cap.max(1), warning: true }
}

/// Empirical CDF of inter-AP `|PCC|` values over all pairs.
pub fn pcc_cdf(ds: &CsiDataset, strategy: SeriesStrategy) -> Result<EmpiricalCdf> {
    if ds.m < 2 {
        return Err(Error::Data("space PCC needs at least 2 APs".into()));
    }
    let a = pairwise_space_pcc(ds, strategy)?;
    let m = ds.m;
    let values = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).map(|(i, j)| a.at(i, j)).collect();
    EmpiricalCdf::new(values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub max_lag: usize,
    pub window_threshold: f64,
    pub kernel_threshold: f64,
    pub strategy: SeriesStrategy,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { max_lag: 40, window_threshold: 0.1, kernel_threshold: 0.5, strategy: SeriesStrategy::default() }
    }
}

/// Everything the `analyze` command reports.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub window: WindowSelection,
    pub freq_pcc: Array<f64>,
    pub kernel: KernelSelection,
    pub space_pcc: AdjacencyMatrix,
    pub space_pcc_cdf: EmpiricalCdf,
    pub distance_adjacency: AdjacencyMatrix,
}

impl CorrelationReport {
    pub fn recommended_t(&self) -> usize {
        self.window.lag
    }

    pub fn recommended_kernel(&self) -> usize {
        self.kernel.size
    }

    pub fn mean_space_pcc(&self) -> f64 {
        self.space_pcc_cdf.mean()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "recommended_T = {}", self.window.lag);
        let _ = writeln!(s, "window_warning = {}", self.window.warning);
        let _ = writeln!(s, "recommended_D_k = {}", self.kernel.size);
        let _ = writeln!(s, "kernel_warning = {}", self.kernel.warning);
        let _ = writeln!(s, "mean_space_pcc = {:.6}", self.mean_space_pcc());
        let _ = writeln!(s, "space_pcc_cdf_at_0.4 = {:.6}", self.space_pcc_cdf.cdf(0.4));
        let _ = writeln!(s, "space_pcc_median = {:.6}", self.space_pcc_cdf.quantile(0.5));
        for off in 1..self.freq_pcc.shape()[0].min(6) {
            let _ = writeln!(s, "freq_pcc_offset_{off} = {:.6}", mean_pcc_at_offset(&self.freq_pcc, off));
        }
        let _ = writeln!(s, "adjacency = {}", self.space_pcc.kind);
        s
    }

    /// `lag,pacf_re,pacf_im`.
    pub fn pacf_csv(&self) -> String {
        let mut s = String::from("lag,pacf_re,pacf_im\n");
        for (k, (r, i)) in self.window.mean_abs_re.iter().zip(&self.window.mean_abs_im).enumerate() {
            let _ = writeln!(s, "{k},{r:.9},{i:.9}");
        }
        s
    }
}

/// Square matrix as CSV without a header.
pub fn matrix_csv(a: &Array<f64>) -> String {
    let n = a.shape()[1];
    let mut s = String::new();
    for row in a.data().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn analyze(ds: &CsiDataset, cfg: &AnalysisConfig) -> Result<CorrelationReport> {
    let window = select_window_length(ds, cfg.window_threshold, cfg.max_lag)?;
    let freq_pcc = freq_pcc(ds)?;
    let kernel = select_kernel_size(&freq_pcc, cfg.kernel_threshold);
    let space_pcc = build_adjacency_pcc(ds, cfg.strategy)?;
    let space_pcc_cdf = pcc_cdf(ds, cfg.strategy)?;
    let distance_adjacency = build_adjacency_distance(&ds.ap_positions, default_distance_sigma(ds))?;
    Ok(CorrelationReport { window, freq_pcc, kernel, space_pcc, space_pcc_cdf, distance_adjacency })
}
