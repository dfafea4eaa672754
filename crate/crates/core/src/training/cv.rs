use std::ops::Range;

use crate::error::{Error, Result};
use crate::models::{ModelConfig, PredictorModel};
use crate::sim::CsiDataset;
use crate::training::loss::Nmse;
use crate::training::train::{train_on_ranges, TrainConfig};

/// Cross-validation scores for every candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub best_index: usize,
    pub best: ModelConfig,
    /// `fold_nmse[c][f]`: linear test NMSE of candidate `c` on fold `f`.
    pub fold_nmse: Vec<Vec<f64>>,
    /// Equal-weight fold mean per candidate.
    pub mean_nmse: Vec<Nmse>,
}

/// The `folds` equal contiguous blocks; a remainder is dropped from the end.
pub fn fold_blocks(t_total: usize, folds: usize) -> Result<Vec<Range<usize>>> {
    if folds < 2 || t_total < folds {
        return Err(Error::Config(format!("cannot split {t_total} snapshots into {folds} folds")));
    }
    let size = t_total / folds;
    Ok((0..folds).map(|f| f * size..(f + 1) * size).collect())
}

/// Trains every candidate on `folds − 1` blocks, tests on the remaining one,
/// rotating, and returns the candidate with the lowest mean test NMSE.
/// A single candidate is returned without training.
pub fn k_fold_cross_validate(
    ds: &CsiDataset,
    folds: usize,
    candidates: &[ModelConfig],
    cfg: &TrainConfig,
) -> Result<CvOutcome> {
    if candidates.is_empty() {
        return Err(Error::Config("cross-validation grid is empty".into()));
    }
    let blocks = fold_blocks(ds.t_total, folds)?;
    if candidates.len() == 1 {
        return Ok(CvOutcome {
            best_index: 0,
            best: candidates[0].clone(),
            fold_nmse: vec![Vec::new()],
            mean_nmse: vec![Nmse::from_linear(f64::NAN)],
        });
    }
    let mut fold_nmse = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let mut scores = Vec::with_capacity(folds);
        for (f, test) in blocks.iter().enumerate() {
            let train: Vec<Range<usize>> = blocks
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != f)
                .map(|(_, b)| b.clone())
                .collect();
            let train = merge_adjacent(&train);
            let mut model = PredictorModel::<f32>::new(cand.clone(), cfg.seed)?;
            let report = train_on_ranges(&mut model, None, ds, &train, std::slice::from_ref(test), cfg)?;
            scores.push(report.test.overall.linear);
        }
        fold_nmse.push(scores);
    }
    let means: Vec<f64> = fold_nmse.iter().map(|s| mean(s)).collect();
    let best_index = means
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    Ok(CvOutcome {
        best_index,
        best: candidates[best_index].clone(),
        fold_nmse,
        mean_nmse: means.into_iter().map(Nmse::from_linear).collect(),
    })
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Joins touching ranges so windows may straddle block borders.
fn merge_adjacent(ranges: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for r in ranges {
        match out.last_mut() {
            Some(last) if last.end == r.start => last.end = r.end,
            _ => out.push(r.clone()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_equal_and_contiguous() {
        assert_eq!(fold_blocks(10, 5).unwrap(), vec![0..2, 2..4, 4..6, 6..8, 8..10]);
        assert_eq!(fold_blocks(11, 5).unwrap().last().unwrap().end, 10);
        assert!(fold_blocks(3, 5).is_err());
        assert_eq!(merge_adjacent(&[0..2, 2..4, 6..8, 8..10]), vec![0..4, 6..10]);
    }

    #[test]
    fn fold_mean_is_unweighted() {
        assert_eq!(mean(&[0.1, 0.2, 0.3, 0.4, 0.5]), (0.1 + 0.2 + 0.3 + 0.4 + 0.5) / 5.0);
    }
}
