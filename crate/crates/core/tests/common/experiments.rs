//! Desk-scale training experiments shared by the acceptance harness.

use cfchanpred::analysis::AdjacencyChoice;
use cfchanpred::autodiff::NormAxis;
use cfchanpred::models::{ModelConfig, ModelKind, PredictorModel};
use cfchanpred::sim::{self, CsiDataset, SimConfig};
use cfchanpred::training::{chronological_split, train, AdamConfig, Evaluation, TrainConfig};

/// One dataset recipe plus the model/training settings applied to it.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub sim: SimConfig,
    pub t: usize,
    pub k: usize,
    pub d_model: usize,
    pub heads: usize,
    pub kernel_size: usize,
    pub norm_axis: NormAxis,
    pub adjacency: AdjacencyChoice,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Experiment {
    /// M = L = 16, T = 10, K = 5, strong space and frequency correlation.
    pub fn base() -> Self {
        let f_d = 100.0 / 3.6 * 13e9 / sim::SPEED_OF_LIGHT;
        Self {
            sim: SimConfig {
                m: 16,
                l: 16,
                t_total: env("ACC_TT", 600),
                paths: env("ACC_P", 12),
                sinusoids: env("ACC_NS", 16),
                rms_delay_spread: 10e-9,
                spatial_corr_decay: 1000.0,
                area_side: 250.0,
                snapshot_interval: env("ACC_FDT", 0.05) / f_d,
                ..SimConfig::default()
            },
            t: 10,
            k: 5,
            d_model: env("ACC_DM", 32),
            heads: 2,
            kernel_size: 3,
            norm_axis: if std::env::var("ACC_AXIS").as_deref() == Ok("feature") { NormAxis::Feature } else { NormAxis::Time },
            adjacency: AdjacencyChoice::default(),
            epochs: env("ACC_EPOCHS", 100),
            batch_size: 32,
            learning_rate: 5e-4,
        }
    }

    pub fn dataset(&self, seed: u64) -> CsiDataset {
        sim::generate(&SimConfig { seed, ..self.sim.clone() }).expect("generator config is valid")
    }

    pub fn model_config(&self, kind: ModelKind) -> ModelConfig {
        let mut c = ModelConfig::new(kind, self.t, self.k, self.sim.l, self.sim.m).with_width(self.d_model, self.heads);
        c.kernel_size = self.kernel_size;
        c.norm_axis = self.norm_axis;
        c
    }

    /// Trains `kind` on the seed-`seed` dataset and returns its test score.
    pub fn run_on(&self, kind: ModelKind, ds: &CsiDataset, seed: u64) -> Evaluation {
        let cfg = TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            adam: AdamConfig { learning_rate: self.learning_rate, ..AdamConfig::default() },
            ..TrainConfig::default()
        };
        let mut model = PredictorModel::<f32>::new(self.model_config(kind), seed).unwrap();
        if kind.uses_space() {
            let (tr, _) = chronological_split(ds.t_total, cfg.train_fraction).unwrap();
            let adj = self.adjacency.build(&ds.slice_time(tr).unwrap()).unwrap();
            model.set_adjacency(&adj.a).unwrap();
        }
        let start = std::time::Instant::now();
        let r = train(&mut model, ds, &cfg).unwrap();
        if std::env::var("ACC_VERBOSE").is_ok() {
            let ph: Vec<String> = r.test.per_horizon.iter().map(|n| format!("{:.2}", n.db)).collect();
            eprintln!("    {kind} seed {seed}: {:.2} dB {ph:?} ({:.0} s)", r.test.overall.db, start.elapsed().as_secs_f64());
        }
        r.test
    }

    pub fn run(&self, kind: ModelKind, seed: u64) -> Evaluation {
        self.run_on(kind, &self.dataset(seed), seed)
    }
}

fn env<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

/// Mean over seeds of a per-seed dB score.
pub fn mean_db(scores: &[Evaluation]) -> f64 {
    scores.iter().map(|e| e.overall.db).sum::<f64>() / scores.len() as f64
}
