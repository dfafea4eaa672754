use num_complex::Complex64;

use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Biased sample autocovariances `γ_0..=γ_max_lag`.
pub fn autocovariance(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mu = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - mu).collect();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|k| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

/// True when a series has no usable variance.
pub(crate) fn degenerate(gamma0: f64, mu: f64) -> bool {
    !(gamma0 > 1e-28 * (1.0 + mu * mu))
}

/// Partial autocorrelations `[1, φ_11, φ_22, …, φ_{max_lag,max_lag}]`
/// by the Durbin–Levinson recursion.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 || x.len() < max_lag + 2 {
        return Err(Error::Data(format!("PACF to lag {max_lag} needs at least {} samples, got {}", max_lag + 2, x.len())));
    }
    let gamma = autocovariance(x, max_lag);
    if degenerate(gamma[0], mean(x)) {
        return Err(Error::Data("PACF of a constant series is undefined".into()));
    }
    let r: Vec<f64> = gamma.iter().map(|g| g / gamma[0]).collect();
    let mut out = vec![1.0; max_lag + 1];
    let mut phi = vec![r[1]];
    out[1] = r[1];
    for k in 2..=max_lag {
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * r[j]).sum::<f64>();
        if !(den > 0.0) {
            return Err(Error::Numeric(format!("Durbin–Levinson breakdown at lag {k}")));
        }
        let pkk = (num / den).clamp(-1.0, 1.0);
        let mut next: Vec<f64> = (1..k).map(|j| phi[j - 1] - pkk * phi[k - j - 1]).collect();
        next.push(pkk);
        phi = next;
        out[k] = pkk;
    }
    Ok(out)
}

/// Pearson correlation coefficient.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::dim("pcc", &[x.len()], &[y.len()]));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let n = x.len() as f64;
    if degenerate(sxx / n, mx) || degenerate(syy / n, my) {
        return Err(Error::Data("PCC of a constant series is undefined".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Magnitude of the complex correlation coefficient
/// `|E[(a−ā)(b−b̄)*]| / √(E|a−ā|² E|b−b̄|²)`.
pub fn pcc_complex(x: &[Complex64], y: &[Complex64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::dim("pcc_complex", &[x.len()], &[y.len()]));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<Complex64>() / n;
    let my = y.iter().sum::<Complex64>() / n;
    let (mut sxy, mut sxx, mut syy) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db.conj();
        sxx += da.norm_sqr();
        syy += db.norm_sqr();
    }
    if degenerate(sxx / n, mx.norm()) || degenerate(syy / n, my.norm()) {
        return Err(Error::Data("PCC of a constant series is undefined".into()));
    }
    Ok((sxy.norm() / (sxx * syy).sqrt()).min(1.0))
}

/// Empirical distribution of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("empirical CDF needs finite samples".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&v| v <= x) as f64 / self.samples.len() as f64
    }

    /// Linear-interpolated quantile, `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.samples.len();
        let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let (lo, frac) = (pos.floor() as usize, pos.fract());
        if lo + 1 >= n {
            return self.samples[n - 1];
        }
        self.samples[lo] * (1.0 - frac) + self.samples[lo + 1] * frac
    }

    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pcc_hand_values() {
        let x = [1.0, 2.0, 3.0];
        assert!((pcc(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pcc(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((pcc(&x, &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(pcc(&x, &[2.0; 3]).is_err());
    }

    #[test]
    fn first_pacf_is_lag_one_ratio() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7919) % 31) as f64).collect();
        let g = autocovariance(&x, 1);
        assert_eq!(pacf(&x, 5).unwrap()[1], g[1] / g[0]);
        assert!(pacf(&[1.0; 20], 3).is_err());
        assert!(pacf(&x[..4], 3).is_err());
    }

    #[test]
    fn cdf_steps_and_quantiles() {
        let c = EmpiricalCdf::new(vec![0.3]).unwrap();
        assert_eq!((c.cdf(0.29), c.cdf(0.3)), (0.0, 1.0));
        let c = EmpiricalCdf::new(vec![0.4, 0.0, 0.2]).unwrap();
        assert_eq!(c.quantile(0.25), 0.1);
        assert_eq!(c.quantile(1.0), 0.4);
        assert!((c.cdf(0.2) - 2.0 / 3.0).abs() < 1e-15);
    }
}
