use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use cfchanpred::analysis::{self, AdjacencyChoice, AnalysisConfig, SeriesStrategy};
use cfchanpred::autodiff::NormAxis;
use cfchanpred::config::ConfigFile;
use cfchanpred::fsutil::write_atomic;
use cfchanpred::models::{load_checkpoint, predict_complex, save_checkpoint, ModelConfig, ModelKind, PredictorModel};
use cfchanpred::pipeline::{separate_dataset, PartitionSpec};
use cfchanpred::sim::{self, CsiDataset, Scenario, SimConfig, SpatialModel};
use cfchanpred::training::{
    chronological_split, count_complexity, evaluate, standardize_with, train_on_ranges, AdamConfig, Evaluation,
    HardwareProfile, TrainConfig,
};
use cfchanpred::{Error, Result};

#[derive(Parser)]
#[command(name = "cfchanpred", version, about = "Space-time-frequency CSI prediction for cell-free massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a CSI dataset.
    Generate(GenerateArgs),
    /// Correlation analysis and hyper-parameter recommendations.
    Analyze(AnalyzeArgs),
    /// Train a predictor and write a checkpoint.
    Train(TrainArgs),
    /// Test-split NMSE of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Predict the K snapshots following a window.
    Predict(PredictArgs),
    /// Parameter / FLOP / memory table for every model kind.
    Complexity(ComplexityArgs),
    /// Separate a mixed single-column dataset by delay windows.
    Partition(PartitionArgs),
    /// Summarise a dataset or checkpoint file.
    Info(InfoArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn file(&self) -> Result<ConfigFile> {
        self.config.as_deref().map(ConfigFile::load).transpose().map(Option::unwrap_or_default)
    }

    fn out(&self, cfg: &ConfigFile) -> Result<PathBuf> {
        self.out
            .clone()
            .or(cfg.get::<PathBuf>("out")?)
            .ok_or_else(|| Error::Config("--out is required".into()))
    }
}

fn data_path(flag: &Option<PathBuf>, cfg: &ConfigFile) -> Result<PathBuf> {
    flag.clone().or(cfg.get("data")?).ok_or_else(|| Error::Config("--data is required".into()))
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// umi | uma | rma (sets the delay spread).
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    t_total: Option<usize>,
    #[arg(long)]
    area_side: Option<f64>,
    #[arg(long)]
    carrier_freq: Option<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// UE speed in km/h.
    #[arg(long)]
    ue_speed_kmh: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    sinusoids: Option<usize>,
    /// RMS delay spread in seconds.
    #[arg(long)]
    delay_spread: Option<f64>,
    /// Inter-AP correlation decay distance d₀, metres.
    #[arg(long)]
    d0: Option<f64>,
    /// geometric | decoupled
    #[arg(long)]
    spatial_model: Option<String>,
    #[arg(long)]
    snapshot_interval: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
}

fn run_generate(a: &GenerateArgs) -> Result<()> {
    let f = a.common.file()?;
    let scenario = f.resolve("scenario", a.scenario, Scenario::Umi)?;
    let base = SimConfig::preset(scenario);
    let spatial = match f.resolve("spatial-model", a.spatial_model.clone(), "geometric".into())?.as_str() {
        "geometric" => SpatialModel::Geometric,
        "decoupled" => SpatialModel::Decoupled,
        other => return Err(Error::Config(format!("unknown spatial model `{other}`"))),
    };
    let cfg = SimConfig {
        m: f.resolve("m", a.m, base.m)?,
        l: f.resolve("l", a.l, base.l)?,
        t_total: f.resolve("t-total", a.t_total, base.t_total)?,
        area_side: f.resolve("area-side", a.area_side, base.area_side)?,
        carrier_freq: f.resolve("carrier-freq", a.carrier_freq, base.carrier_freq)?,
        bandwidth: f.resolve("bandwidth", a.bandwidth, base.bandwidth)?,
        ue_speed: f.resolve("ue-speed-kmh", a.ue_speed_kmh, base.ue_speed * 3.6)? / 3.6,
        paths: f.resolve("paths", a.paths, base.paths)?,
        sinusoids: f.resolve("sinusoids", a.sinusoids, base.sinusoids)?,
        rms_delay_spread: f.resolve("delay-spread", a.delay_spread, base.rms_delay_spread)?,
        spatial_corr_decay: f.resolve("d0", a.d0, base.spatial_corr_decay)?,
        spatial_model: spatial,
        snapshot_interval: f.resolve("snapshot-interval", a.snapshot_interval, base.snapshot_interval)?,
        noise_std: f.resolve("noise-std", a.noise_std, base.noise_std)?,
        seed: f.resolve("seed", a.common.seed, 0)?,
        ..base
    };
    let ds = sim::generate(&cfg)?;
    let out = a.common.out(&f)?;
    ds.save(&out)?;
    println!(
        "wrote {} ({}×{}×{}, f_d·Δt = {:.4})",
        out.display(),
        ds.t_total,
        ds.l,
        ds.m,
        cfg.max_doppler() * cfg.snapshot_interval
    );
    Ok(())
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    window_threshold: Option<f64>,
    #[arg(long)]
    kernel_threshold: Option<f64>,
    /// magnitude_mean | real_part | per_subcarrier
    #[arg(long)]
    strategy: Option<String>,
}

fn run_analyze(a: &AnalyzeArgs) -> Result<()> {
    let f = a.common.file()?;
    let ds = CsiDataset::load(&data_path(&a.data, &f)?)?;
    let d = AnalysisConfig::default();
    let strategy: SeriesStrategy = f.resolve("strategy", a.strategy.clone(), "magnitude_mean".into())?.parse()?;
    let cfg = AnalysisConfig {
        max_lag: f.resolve("max-lag", a.max_lag, d.max_lag)?,
        window_threshold: f.resolve("window-threshold", a.window_threshold, d.window_threshold)?,
        kernel_threshold: f.resolve("kernel-threshold", a.kernel_threshold, d.kernel_threshold)?,
        strategy,
    };
    let report = analysis::analyze(&ds, &cfg)?;
    let text = report.to_text();
    print!("{text}");
    let dir = a.common.out(&f)?;
    std::fs::create_dir_all(&dir)?;
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    write_atomic(&dir.join("pacf.csv"), report.pacf_csv().as_bytes())?;
    write_atomic(&dir.join("freq_pcc.csv"), analysis::matrix_csv(&report.freq_pcc).as_bytes())?;
    write_atomic(&dir.join("adjacency.csv"), analysis::matrix_csv(&report.space_pcc.a).as_bytes())?;
    Ok(())
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    /// proposed | variant_a | variant_b | variant_c | dnn | rnn | lstm | transformer
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Input window length T.
    #[arg(long)]
    t: Option<usize>,
    /// Prediction horizon K.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// time | feature
    #[arg(long)]
    norm_axis: Option<String>,
    /// pcc[:strategy] | distance[:sigma] | constant:<v> | none
    #[arg(long)]
    adjacency: Option<String>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Directory for train_report.txt and nmse_vs_horizon.csv (default: beside the checkpoint).
    #[arg(long)]
    report_dir: Option<PathBuf>,
}

fn nmse_csv(e: &Evaluation) -> String {
    let mut s = String::from("horizon_k,nmse_db\n");
    for (k, n) in e.per_horizon.iter().enumerate() {
        let _ = writeln!(s, "{},{:.6}", k + 1, n.db);
    }
    s
}

fn parent_dir(p: &Path) -> PathBuf {
    p.parent().filter(|d| !d.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let f = a.common.file()?;
    let ds = CsiDataset::load(&data_path(&a.data, &f)?)?;
    let kind = f.resolve("model", a.model, ModelKind::Proposed)?;
    let d_model = f.resolve("d-model", a.d_model, 128)?;
    let heads = f.resolve("heads", a.heads, 2)?;
    let mut mc = ModelConfig::new(kind, f.resolve("t", a.t, 10)?, f.resolve("k", a.k, 5)?, ds.l, ds.m)
        .with_width(d_model, heads);
    mc.kernel_size = f.resolve("kernel-size", a.kernel_size, mc.kernel_size)?;
    mc.alpha = f.resolve("alpha", a.alpha, mc.alpha)?;
    mc.norm_axis = match f.resolve("norm-axis", a.norm_axis.clone(), "time".into())?.as_str() {
        "time" => NormAxis::Time,
        "feature" => NormAxis::Feature,
        other => return Err(Error::Config(format!("unknown norm axis `{other}`"))),
    };
    let tc = TrainConfig {
        adam: AdamConfig { learning_rate: f.resolve("lr", a.lr, 5e-4)?, ..AdamConfig::default() },
        epochs: f.resolve("epochs", a.epochs, 100)?,
        batch_size: f.resolve("batch", a.batch, 64)?,
        seed: f.resolve("seed", a.common.seed, 0)?,
        train_fraction: f.resolve("train-fraction", a.train_fraction, 0.8)?,
        ..TrainConfig::default()
    };
    let adjacency: AdjacencyChoice = f.resolve("adjacency", a.adjacency.clone(), "pcc".into())?.parse()?;
    let (tr, te) = chronological_split(ds.t_total, tc.train_fraction)?;
    let mut model = PredictorModel::<f32>::new(mc, tc.seed)?;
    if kind.uses_space() {
        model.set_adjacency(&adjacency.build(&ds.slice_time(tr.clone())?)?.a)?;
    }
    let report = train_on_ranges(&mut model, None, &ds, &[tr], &[te], &tc)?;
    let out = a.common.out(&f)?;
    save_checkpoint(&model, &out)?;
    let dir = a.report_dir.clone().or(f.get("report-dir")?).unwrap_or_else(|| parent_dir(&out));
    std::fs::create_dir_all(&dir)?;
    let text = report.to_text();
    write_atomic(&dir.join("train_report.txt"), text.as_bytes())?;
    write_atomic(&dir.join("nmse_vs_horizon.csv"), nmse_csv(&report.test).as_bytes())?;
    print!("{text}");
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

fn load_model(flag: &Option<PathBuf>, f: &ConfigFile) -> Result<PredictorModel<f32>> {
    let path = flag.clone().or(f.get("checkpoint")?).ok_or_else(|| Error::Config("--checkpoint is required".into()))?;
    load_checkpoint(&path)
}

fn run_evaluate(a: &EvaluateArgs) -> Result<()> {
    let f = a.common.file()?;
    let ds = CsiDataset::load(&data_path(&a.data, &f)?)?;
    let model = load_model(&a.checkpoint, &f)?;
    let stats = model
        .standardization
        .ok_or_else(|| Error::Data("checkpoint carries no standardisation statistics".into()))?;
    let (_, te) = chronological_split(ds.t_total, f.resolve("train-fraction", a.train_fraction, 0.8)?)?;
    let e = evaluate(&model, &model, &standardize_with(&ds, stats), &[te])?;
    let dir = a.common.out(&f)?;
    std::fs::create_dir_all(&dir)?;
    let csv = nmse_csv(&e);
    write_atomic(&dir.join("nmse_vs_horizon.csv"), csv.as_bytes())?;
    println!("test_windows = {}\nnmse_db = {:.6}", e.n_windows, e.overall.db);
    print!("{csv}");
    Ok(())
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// First snapshot of the input window (default: the last full window).
    #[arg(long)]
    start: Option<usize>,
}

fn run_predict(a: &PredictArgs) -> Result<()> {
    let f = a.common.file()?;
    let ds = CsiDataset::load(&data_path(&a.data, &f)?)?;
    let model = load_model(&a.checkpoint, &f)?;
    let c = &model.config;
    if ds.t_total < c.t {
        return Err(Error::Data(format!("dataset has {} snapshots, window needs {}", ds.t_total, c.t)));
    }
    let start = f.resolve("start", a.start, ds.t_total - c.t)?;
    if start + c.t > ds.t_total {
        return Err(Error::Data(format!("window {start}..{} exceeds {} snapshots", start + c.t, ds.t_total)));
    }
    let window: Vec<Complex64> =
        (start..start + c.t).flat_map(|t| (0..ds.l).flat_map(move |l| (0..ds.m).map(move |m| (t, l, m)))).map(|(t, l, m)| ds.at(t, l, m)).collect();
    let pred = predict_complex(&model, &model, &window, None)?;
    let mut s = String::from("k,l,m,re,im\n");
    let n = ds.l * ds.m;
    for (i, z) in pred.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{:.9e},{:.9e}", i / n + 1, (i % n) / ds.m, i % ds.m, z.re, z.im);
    }
    let out = a.common.out(&f)?;
    write_atomic(&out, s.as_bytes())?;
    println!("wrote {} ({} steps from window {start}..{})", out.display(), c.k, start + c.t);
    Ok(())
}

#[derive(Args)]
struct ComplexityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    f_gpu: Option<f64>,
    #[arg(long)]
    n_unit: Option<f64>,
    #[arg(long)]
    n_core: Option<f64>,
}

fn run_complexity(a: &ComplexityArgs) -> Result<()> {
    let f = a.common.file()?;
    let hw0 = HardwareProfile::default();
    let hw = HardwareProfile {
        f_hz: f.resolve("f-gpu", a.f_gpu, hw0.f_hz)?,
        n_unit: f.resolve("n-unit", a.n_unit, hw0.n_unit)?,
        n_core: f.resolve("n-core", a.n_core, hw0.n_core)?,
    };
    let (m, l) = (f.resolve("m", a.m, 16)?, f.resolve("l", a.l, 16)?);
    let (t, k) = (f.resolve("t", a.t, 10)?, f.resolve("k", a.k, 5)?);
    let (d, h) = (f.resolve("d-model", a.d_model, 128)?, f.resolve("heads", a.heads, 2)?);
    let mut s = String::from("model,n_parameters,n_flops,memory_mb,est_time_s\n");
    for kind in ModelKind::ALL {
        let model = PredictorModel::<f32>::zeros(ModelConfig::new(kind, t, k, l, m).with_width(d, h))?;
        let r = count_complexity(&model, &hw);
        let _ = writeln!(s, "{},{},{},{:.4},{:.6e}", kind, r.n_parameters, r.n_flops, r.memory_mb, r.est_time_s);
    }
    print!("{s}");
    if let Some(out) = a.common.out.clone().or(f.get("out")?) {
        write_atomic(&out, s.as_bytes())?;
    }
    Ok(())
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Delay threshold in bins.
    #[arg(long)]
    tau_th: Option<usize>,
    /// Delay threshold in seconds (needs --bandwidth).
    #[arg(long)]
    tau_th_seconds: Option<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    sources: Option<usize>,
}

fn run_partition(a: &PartitionArgs) -> Result<()> {
    let f = a.common.file()?;
    let ds = CsiDataset::load(&data_path(&a.data, &f)?)?;
    let sources = f.resolve("sources", a.sources, 2)?;
    let bandwidth = f.resolve("bandwidth", a.bandwidth, 20e6)?;
    let resolution = 1.0 / bandwidth;
    let spec = match (a.tau_th.or(f.get("tau-th")?), a.tau_th_seconds.or(f.get("tau-th-seconds")?)) {
        (Some(bins), _) => PartitionSpec::from_threshold(ds.l, bins, sources)?,
        (None, Some(sec)) => PartitionSpec::from_threshold_seconds(ds.l, sec, resolution, sources)?,
        (None, None) => return Err(Error::Config("--tau-th or --tau-th-seconds is required".into())),
    };
    let (out_ds, part) = separate_dataset(&ds, &spec, resolution)?;
    let out = a.common.out(&f)?;
    out_ds.save(&out)?;
    println!("sources = {}\nleakage_fraction = {:.6e}", spec.n_aps(), part.leakage_fraction());
    Ok(())
}

#[derive(Args)]
struct InfoArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

fn run_info(a: &InfoArgs) -> Result<()> {
    let f = a.common.file()?;
    let mut s = String::new();
    if let Some(p) = a.data.clone().or(f.get("data")?) {
        let ds = CsiDataset::load(&p)?;
        let power = ds.csi().iter().map(|z| z.norm_sqr() as f64).sum::<f64>() / ds.csi().len() as f64;
        let _ = writeln!(s, "dataset = {}\nt_total = {}\nl = {}\nm = {}\nmean_power = {power:.6e}", p.display(), ds.t_total, ds.l, ds.m);
        let _ = writeln!(s, "standardization = {}", ds.standardization.is_some());
    }
    if let Some(p) = a.checkpoint.clone().or(f.get("checkpoint")?) {
        let model: PredictorModel<f32> = load_checkpoint(&p)?;
        let c = &model.config;
        let _ = writeln!(s, "checkpoint = {}\nmodel = {}\nT = {}\nK = {}\nL = {}\nM = {}", p.display(), c.kind, c.t, c.k, c.l, c.m);
        let _ = writeln!(s, "d_model = {}\nheads = {}\nn_parameters = {}", c.d_model, c.heads, model.n_parameters());
    }
    if s.is_empty() {
        return Err(Error::Config("pass --data and/or --checkpoint".into()));
    }
    print!("{s}");
    if let Some(out) = a.common.out.clone().or(f.get("out")?) {
        write_atomic(&out, s.as_bytes())?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Numeric(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Train(a) => run_train(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Predict(a) => run_predict(a),
        Command::Complexity(a) => run_complexity(a),
        Command::Partition(a) => run_partition(a),
        Command::Info(a) => run_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
