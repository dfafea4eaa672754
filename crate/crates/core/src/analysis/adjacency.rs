use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::analysis::correlation::{pcc, pcc_complex};
use crate::error::{Error, Result};
use crate::sim::CsiDataset;
use crate::tensor::Array;

/// Per-AP series used to correlate access points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SeriesStrategy {
    /// `|h|` averaged over subcarriers, per snapshot.
    #[default]
    MagnitudeMean,
    /// `Re h` averaged over subcarriers, per snapshot.
    RealPart,
    /// Complex-correlation magnitude on each subcarrier, averaged.
    PerSubcarrier,
}

impl FromStr for SeriesStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "magnitude_mean" | "magnitude" => Ok(Self::MagnitudeMean),
            "real_part" | "real" => Ok(Self::RealPart),
            "per_subcarrier" => Ok(Self::PerSubcarrier),
            _ => Err(Error::Config(format!("unknown PCC series strategy `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdjacencyKind {
    Distance { sigma: f64 },
    Pcc { strategy: SeriesStrategy },
    Constant { value: f64 },
}

impl fmt::Display for AdjacencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdjacencyKind::Distance { sigma } => write!(f, "distance(sigma={sigma})"),
            AdjacencyKind::Pcc { strategy } => write!(f, "pcc({strategy:?})"),
            AdjacencyKind::Constant { value } => write!(f, "constant({value})"),
        }
    }
}

/// Raw symmetric AP adjacency with zero diagonal and entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    pub a: Array<f64>,
    pub kind: AdjacencyKind,
}

impl AdjacencyMatrix {
    pub fn m(&self) -> usize {
        self.a.shape()[0]
    }

    /// Mean off-diagonal entry.
    pub fn mean_off_diagonal(&self) -> f64 {
        let m = self.m();
        if m < 2 {
            return 0.0;
        }
        self.a.sum() / (m * (m - 1)) as f64
    }
}

fn symmetric(m: usize, f: impl Fn(usize, usize) -> Result<f64>) -> Result<Array<f64>> {
    let mut a = Array::zeros(&[m, m]);
    for i in 0..m {
        for j in i + 1..m {
            let v = f(i, j)?;
            a.data_mut()[i * m + j] = v;
            a.data_mut()[j * m + i] = v;
        }
    }
    Ok(a)
}

/// `a_ij = exp(−‖p_i − p_j‖ / σ)`, zero diagonal.
pub fn build_adjacency_distance(positions: &Array<f64>, sigma: f64) -> Result<AdjacencyMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("distance-adjacency sigma must be positive, got {sigma}")));
    }
    if positions.rank() != 2 || positions.shape()[1] != 3 {
        return Err(Error::dim("build_adjacency_distance", positions.shape(), &[positions.shape()[0], 3]));
    }
    let a = symmetric(positions.shape()[0], |i, j| Ok((-crate::sim::distance(positions, i, j) / sigma).exp()))?;
    Ok(AdjacencyMatrix { a, kind: AdjacencyKind::Distance { sigma } })
}

/// `σ = area_side / 4` when the generator config is known, else a quarter
/// of the largest AP separation.
pub fn default_distance_sigma(ds: &CsiDataset) -> f64 {
    if let Some(cfg) = &ds.sim_config {
        return cfg.area_side / 4.0;
    }
    let m = ds.m;
    let mut far: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            far = far.max(crate::sim::distance(&ds.ap_positions, i, j));
        }
    }
    if far > 0.0 { far / 4.0 } else { 1.0 }
}

/// Per-AP snapshot series for the scalar strategies.
pub fn ap_series(ds: &CsiDataset, strategy: SeriesStrategy) -> Vec<Vec<f64>> {
    let f: fn(Complex64) -> f64 = match strategy {
        SeriesStrategy::RealPart => |z| z.re,
        _ => |z| z.norm(),
    };
    (0..ds.m)
        .map(|ap| {
            (0..ds.t_total)
                .map(|t| (0..ds.l).map(|l| f(ds.at(t, l, ap))).sum::<f64>() / ds.l as f64)
                .collect()
        })
        .collect()
}

/// Absolute inter-AP PCC for every pair `i < j`, row-major.
pub fn pairwise_space_pcc(ds: &CsiDataset, strategy: SeriesStrategy) -> Result<Array<f64>> {
    if ds.t_total < 2 {
        return Err(Error::Data("PCC adjacency needs at least 2 snapshots".into()));
    }
    match strategy {
        SeriesStrategy::PerSubcarrier => {
            let series: Vec<Vec<Vec<Complex64>>> =
                (0..ds.m).map(|ap| (0..ds.l).map(|l| (0..ds.t_total).map(|t| ds.at(t, l, ap)).collect()).collect()).collect();
            symmetric(ds.m, |i, j| {
                let mut total = 0.0;
                for l in 0..ds.l {
                    total += pcc_complex(&series[i][l], &series[j][l])?;
                }
                Ok(total / ds.l as f64)
            })
        }
        _ => {
            let series = ap_series(ds, strategy);
            symmetric(ds.m, |i, j| Ok(pcc(&series[i], &series[j])?.abs()))
        }
    }
}

/// `a_ij = |r_ij|`, zero diagonal.
pub fn build_adjacency_pcc(ds: &CsiDataset, strategy: SeriesStrategy) -> Result<AdjacencyMatrix> {
    Ok(AdjacencyMatrix { a: pairwise_space_pcc(ds, strategy)?, kind: AdjacencyKind::Pcc { strategy } })
}

/// Uniform off-diagonal value, for deployments without usable statistics.
pub fn build_adjacency_constant(m: usize, value: f64) -> Result<AdjacencyMatrix> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Config(format!("constant adjacency {value} outside [0, 1]")));
    }
    Ok(AdjacencyMatrix { a: symmetric(m, |_, _| Ok(value))?, kind: AdjacencyKind::Constant { value } })
}

/// How a model's SpaceConv adjacency is obtained: `pcc[:strategy]`,
/// `distance[:sigma]` or `constant:<value>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdjacencyChoice {
    Pcc(SeriesStrategy),
    Distance(Option<f64>),
    Constant(f64),
    /// Identity normalisation only (no inter-AP edges).
    None,
}

impl Default for AdjacencyChoice {
    fn default() -> Self {
        Self::Pcc(SeriesStrategy::default())
    }
}

impl FromStr for AdjacencyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim().to_ascii_lowercase(), Some(a.trim())),
            None => (s.trim().to_ascii_lowercase(), None),
        };
        let number = |a: &str| a.parse::<f64>().map_err(|e| Error::Config(format!("adjacency `{s}`: {e}")));
        match (head.as_str(), arg) {
            ("pcc", None) => Ok(Self::Pcc(SeriesStrategy::default())),
            ("pcc", Some(a)) => Ok(Self::Pcc(a.parse()?)),
            ("distance", None) => Ok(Self::Distance(None)),
            ("distance", Some(a)) => Ok(Self::Distance(Some(number(a)?))),
            ("constant", Some(a)) => Ok(Self::Constant(number(a)?)),
            ("none", None) => Ok(Self::None),
            _ => Err(Error::Config(format!("unknown adjacency `{s}` (pcc[:strategy], distance[:sigma], constant:<v>, none)"))),
        }
    }
}

impl AdjacencyChoice {
    /// Raw adjacency from `ds` (callers pass the training portion).
    pub fn build(&self, ds: &CsiDataset) -> Result<AdjacencyMatrix> {
        match *self {
            Self::Pcc(strategy) => build_adjacency_pcc(ds, strategy),
            Self::Distance(sigma) => build_adjacency_distance(&ds.ap_positions, sigma.unwrap_or_else(|| default_distance_sigma(ds))),
            Self::Constant(v) => build_adjacency_constant(ds.m, v),
            Self::None => build_adjacency_constant(ds.m, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex32;

    #[test]
    fn distance_closed_forms() {
        let pos = Array::from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0], &[6.0, 8.0, 0.0]]).unwrap();
        let adj = build_adjacency_distance(&pos, 5.0).unwrap();
        assert_eq!(adj.a.at(0, 1), 1.0);
        assert!((adj.a.at(0, 2) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(adj.a.at(0, 3) < adj.a.at(0, 2));
        assert_eq!(adj.a.at(2, 2), 0.0);
        assert!(build_adjacency_distance(&pos, 0.0).is_err());
    }

    #[test]
    fn proportional_aps_fully_correlated() {
        let t = 30;
        let csi: Vec<Complex32> = (0..t)
            .flat_map(|i| {
                let z = Complex32::new((i as f32 * 0.4).sin() + 2.0, (i as f32 * 0.3).cos());
                [z, z * 2.0]
            })
            .collect();
        let ds = CsiDataset::new(t, 1, 2, csi, Array::zeros(&[2, 3])).unwrap();
        for s in [SeriesStrategy::MagnitudeMean, SeriesStrategy::RealPart, SeriesStrategy::PerSubcarrier] {
            let adj = build_adjacency_pcc(&ds, s).unwrap();
            assert!((adj.a.at(0, 1) - 1.0).abs() < 1e-6, "{s:?}");
            assert_eq!(adj.a.at(0, 1), adj.a.at(1, 0));
        }
    }
}
