use std::ops::Range;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::models::{ModelKind, PredictorModel};
use crate::scalar::Scalar;
use crate::sim::CsiDataset;
use crate::tensor::Array;
use crate::training::adam::{adam_step, AdamConfig, AdamState};
use crate::training::complexity::{count_complexity, ComplexityReport, HardwareProfile};
use crate::training::data::{chronological_split, standardize, window_starts, Part, StandardizedData};
use crate::training::loss::{mse_loss, Nmse};

/// Training-loop settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Windows per mini-batch; each contributes its real and imaginary part.
    pub batch_size: usize,
    pub seed: u64,
    pub train_fraction: f64,
    /// Step between consecutive window starts (1 = every snapshot).
    pub window_stride: usize,
    /// Stop after this many epochs without a new best training loss.
    pub early_stopping: Option<usize>,
    /// Standardise parts with training statistics (off: identity statistics).
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            epochs: 100,
            batch_size: 64,
            seed: 0,
            train_fraction: 0.8,
            window_stride: 1,
            early_stopping: None,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.epochs == 0 || self.batch_size == 0 || self.window_stride == 0 {
            return Err(Error::Config("epochs, batch size and window stride must be positive".into()));
        }
        Ok(())
    }
}

/// Test-set accuracy of a (pair of) trained model(s).
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Mean per-window NMSE of step `k` alone, `k = 1..=K`.
    pub per_horizon: Vec<Nmse>,
    /// Mean per-window NMSE over all `K` steps.
    pub overall: Nmse,
    pub n_windows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub kind: ModelKind,
    pub epochs_run: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub epoch_loss: Vec<f64>,
    /// Wall-clock seconds per epoch (never written to result files).
    pub epoch_seconds: Vec<f64>,
    pub n_train_windows: usize,
    pub test: Evaluation,
    pub complexity: ComplexityReport,
}

impl TrainReport {
    /// Deterministic `key = value` rendering (timings excluded).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("model", self.kind.to_string());
        kv("epochs", self.epochs_run.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("learning_rate", format!("{:e}", self.learning_rate));
        kv("seed", self.seed.to_string());
        kv("train_windows", self.n_train_windows.to_string());
        kv("test_windows", self.test.n_windows.to_string());
        kv("final_train_loss", format!("{:.9e}", self.epoch_loss.last().copied().unwrap_or(f64::NAN)));
        kv("test_nmse_db", format!("{:.6}", self.test.overall.db));
        kv("n_parameters", self.complexity.n_parameters.to_string());
        kv("n_flops", self.complexity.n_flops.to_string());
        kv("memory_mb", format!("{:.4}", self.complexity.memory_mb));
        for (i, l) in self.epoch_loss.iter().enumerate() {
            kv(&format!("loss.epoch{}", i + 1), format!("{l:.9e}"));
        }
        s
    }
}

/// Builds `[B,T,L,M]` inputs and `[B,K,L,M]` targets for `(start, part)` samples.
pub fn assemble_batch<S: Scalar>(
    data: &StandardizedData,
    samples: &[(usize, Part)],
    t: usize,
    k: usize,
) -> Result<(Array<S>, Array<S>)> {
    let n = data.l * data.m;
    let mut x = Vec::with_capacity(samples.len() * t * n);
    let mut y = Vec::with_capacity(samples.len() * k * n);
    for &(s, part) in samples {
        x.extend(data.frames(part, s, t).iter().map(|&v| S::lit(v)));
        y.extend(data.frames(part, s + t, k).iter().map(|&v| S::lit(v)));
    }
    let b = samples.len();
    Ok((
        Array::from_vec(&[b, t, data.l, data.m], x)?,
        Array::from_vec(&[b, k, data.l, data.m], y)?,
    ))
}

/// One Adam step on a batch; returns the batch loss before the update.
pub fn train_step<S: Scalar>(
    model: &mut PredictorModel<S>,
    state: &mut AdamState<S>,
    adam: &AdamConfig,
    step: u64,
    x: &Array<S>,
    y: &Array<S>,
) -> Result<f64> {
    let mut g = Graph::new();
    let bound = model.bind(&mut g);
    let xn = g.constant(x.clone());
    let yn = g.constant(y.clone());
    let pred = model.forward_graph(&mut g, &bound, xn)?;
    let loss = mse_loss(&mut g, pred, yn)?;
    let value = g.value(loss).data()[0].as_f64();
    if !value.is_finite() {
        return Err(Error::Numeric(format!("training loss became {value} at step {step}")));
    }
    g.backward(loss)?;
    let grads: Vec<Array<S>> = model
        .weights
        .iter()
        .zip(bound.nodes())
        .filter(|((name, _), _)| crate::models::ModelWeights::<S>::is_trainable(name))
        .map(|((_, w), &node)| g.grad(node).cloned().unwrap_or_else(|| Array::zeros(w.shape())))
        .collect();
    let grad_refs: Vec<&Array<S>> = grads.iter().collect();
    let mut params = model.weights.trainable_mut();
    adam_step(&mut params, &grad_refs, state, adam, step)?;
    Ok(value)
}

fn new_state<S: Scalar>(model: &PredictorModel<S>) -> AdamState<S> {
    let shapes: Vec<&[usize]> = model
        .weights
        .iter()
        .filter(|(n, _)| crate::models::ModelWeights::<S>::is_trainable(n))
        .map(|(_, a)| a.shape())
        .collect();
    AdamState::new(&shapes)
}

/// Mini-batch Adam over the windows inside `train_ranges`, using `parts`.
/// Returns `(epoch losses, epoch seconds, window count)`.
fn fit<S: Scalar>(
    model: &mut PredictorModel<S>,
    data: &StandardizedData,
    train_ranges: &[Range<usize>],
    parts: &[Part],
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (t, k) = (model.config.t, model.config.k);
    let mut starts: Vec<usize> =
        train_ranges.iter().flat_map(|r| window_starts(r, t, k, cfg.window_stride)).collect();
    if starts.is_empty() {
        return Err(Error::Data(format!(
            "no training window of length T + K = {} fits in {train_ranges:?}",
            t + k
        )));
    }
    let mut state = new_state(model);
    let mut step = 0u64;
    let (mut losses, mut seconds) = (Vec::new(), Vec::new());
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for epoch in 0..cfg.epochs {
        let clock = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        starts.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in starts.chunks(cfg.batch_size) {
            let samples: Vec<(usize, Part)> =
                parts.iter().flat_map(|&p| chunk.iter().map(move |&s| (s, p))).collect();
            let (x, y) = assemble_batch::<S>(data, &samples, t, k)?;
            step += 1;
            total += train_step(model, &mut state, &cfg.adam, step, &x, &y)? * samples.len() as f64;
            count += samples.len();
        }
        let epoch_loss = total / count as f64;
        losses.push(epoch_loss);
        seconds.push(clock.elapsed().as_secs_f64());
        if epoch_loss < best {
            best = epoch_loss;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if cfg.early_stopping.is_some_and(|p| since_best >= p) {
            break;
        }
    }
    Ok((losses, seconds, starts.len()))
}

/// Complex NMSE of de-standardised predictions over every window in `ranges`.
pub fn evaluate<S: Scalar>(
    model_r: &PredictorModel<S>,
    model_i: &PredictorModel<S>,
    data: &StandardizedData,
    ranges: &[Range<usize>],
) -> Result<Evaluation> {
    let c = &model_r.config;
    let (t, k, n) = (c.t, c.k, data.l * data.m);
    let starts: Vec<usize> = ranges.iter().flat_map(|r| window_starts(r, t, k, 1)).collect();
    if starts.is_empty() {
        return Err(Error::Data(format!("no evaluation window fits in {ranges:?}")));
    }
    let mut per_horizon = vec![0.0; k];
    let mut overall = 0.0;
    for chunk in starts.chunks(64) {
        let predict = |model: &PredictorModel<S>, part| -> Result<Array<S>> {
            let samples: Vec<_> = chunk.iter().map(|&s| (s, part)).collect();
            let (x, _) = assemble_batch::<S>(data, &samples, t, k)?;
            model.forward_batch(&x)
        };
        let (pr, pi) = (predict(model_r, Part::Real)?, predict(model_i, Part::Imag)?);
        for (w, &s) in chunk.iter().enumerate() {
            let (mut err_all, mut en_all) = (0.0, 0.0);
            for step in 0..k {
                let (mut err, mut en) = (0.0, 0.0);
                let truth_re = data.frames(Part::Real, s + t + step, 1);
                let truth_im = data.frames(Part::Imag, s + t + step, 1);
                for j in 0..n {
                    let idx = (w * k + step) * n + j;
                    let p = data.stats.invert(pr.data()[idx].as_f64(), pi.data()[idx].as_f64());
                    let h: Complex64 = data.stats.invert(truth_re[j], truth_im[j]);
                    err += (p - h).norm_sqr();
                    en += h.norm_sqr();
                }
                if en == 0.0 {
                    return Err(Error::Data(format!("zero-energy target at snapshot {}", s + t + step)));
                }
                per_horizon[step] += err / en;
                err_all += err;
                en_all += en;
            }
            overall += err_all / en_all;
        }
    }
    let nw = starts.len() as f64;
    Ok(Evaluation {
        per_horizon: per_horizon.into_iter().map(|v| Nmse::from_linear(v / nw)).collect(),
        overall: Nmse::from_linear(overall / nw),
        n_windows: starts.len(),
    })
}

fn prepare(ds: &CsiDataset, train_ranges: &[Range<usize>], cfg: &TrainConfig) -> Result<StandardizedData> {
    if cfg.standardize {
        standardize(ds, train_ranges)
    } else {
        let unit = crate::sim::Standardization { mean_re: 0.0, std_re: 1.0, mean_im: 0.0, std_im: 1.0 };
        Ok(crate::training::data::standardize_with(ds, unit))
    }
}

/// Core loop on explicit snapshot ranges. With `model_i` the imaginary
/// part trains its own model; otherwise one model sees both parts.
pub fn train_on_ranges<S: Scalar>(
    model: &mut PredictorModel<S>,
    mut model_i: Option<&mut PredictorModel<S>>,
    ds: &CsiDataset,
    train_ranges: &[Range<usize>],
    test_ranges: &[Range<usize>],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    model.audit()?;
    let c = &model.config;
    if c.l != ds.l || c.m != ds.m {
        return Err(Error::dim("train", &[c.l, c.m], &[ds.l, ds.m]));
    }
    if ds.t_total < c.t + c.k + 1 {
        return Err(Error::Data(format!("{} snapshots cannot hold T + K + 1 = {}", ds.t_total, c.t + c.k + 1)));
    }
    let data = prepare(ds, train_ranges, cfg)?;
    let (losses, seconds, n_windows) = match model_i.as_deref_mut() {
        None => fit(model, &data, train_ranges, &[Part::Real, Part::Imag], cfg)?,
        Some(mi) => {
            mi.audit()?;
            let (lr, sr, n) = fit(model, &data, train_ranges, &[Part::Real], cfg)?;
            let (li, si, _) = fit(mi, &data, train_ranges, &[Part::Imag], cfg)?;
            let both = lr.iter().zip(&li).map(|(a, b)| 0.5 * (a + b)).collect();
            (both, sr.iter().zip(&si).map(|(a, b)| a + b).collect(), n)
        }
    };
    model.standardization = Some(data.stats);
    if let Some(mi) = model_i.as_deref_mut() {
        mi.standardization = Some(data.stats);
    }
    let test = match model_i.as_deref() {
        None => evaluate(model, model, &data, test_ranges)?,
        Some(mi) => evaluate(model, mi, &data, test_ranges)?,
    };
    Ok(TrainReport {
        kind: model.config.kind,
        epochs_run: losses.len(),
        batch_size: cfg.batch_size,
        learning_rate: cfg.adam.learning_rate,
        seed: cfg.seed,
        epoch_loss: losses,
        epoch_seconds: seconds,
        n_train_windows: n_windows,
        test,
        complexity: count_complexity(model, &HardwareProfile::default()),
    })
}

/// Weight-shared training with the chronological train/test split.
pub fn train<S: Scalar>(model: &mut PredictorModel<S>, ds: &CsiDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    let (tr, te) = chronological_split(ds.t_total, cfg.train_fraction)?;
    train_on_ranges(model, None, ds, &[tr], &[te], cfg)
}

/// Separate real- and imaginary-part models.
pub fn train_separate<S: Scalar>(
    model_r: &mut PredictorModel<S>,
    model_i: &mut PredictorModel<S>,
    ds: &CsiDataset,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let (tr, te) = chronological_split(ds.t_total, cfg.train_fraction)?;
    train_on_ranges(model_r, Some(model_i), ds, &[tr], &[te], cfg)
}
