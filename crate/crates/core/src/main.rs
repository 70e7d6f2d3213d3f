use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flowcast::decomposition::{EmdConfig, Method, NoiseScale};
use flowcast::entropy::{recombine_by_entropy, SampEnParams, Tolerance, DEFAULT_BAND_EDGES};
use flowcast::gwo::{tune_lstm, SearchSpace, TuneBudget};
use flowcast::neuralnet::{lstm_train, make_windows, Forecaster, LstmModel, TrainConfig};
use flowcast::pipeline::{
    clean_series, compute_metrics, format_time, load_adjacency, load_station_csv, read_imfs_csv, run_pipeline,
    split_index, synth_traffic, write_adjacency, write_components_csv, write_imfs_csv, write_predictions_csv,
    write_station_csv, CleanConfig, CsvSchema, PipelineConfig, SynthConfig,
};
use flowcast::{Error, Result, TimeSeries};

#[derive(Parser)]
#[command(name = "flowcast", version, about = "Short-term traffic flow forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose one station's series into IMFs.
    Decompose(DecomposeArgs),
    /// Sample entropy of each IMF and the entropy-band regrouping.
    Entropy(EntropyArgs),
    /// Train an LSTM with fixed hyperparameters.
    Train(TrainArgs),
    /// Tune LSTM hyperparameters with the grey wolf optimizer.
    Tune(TuneArgs),
    /// One-step forecasts over the test span.
    Predict(PredictArgs),
    /// Metrics of prediction columns against an `actual` column.
    Evaluate(EvaluateArgs),
    /// Run every variant end to end and write metrics and traces.
    Pipeline(PipelineArgs),
    /// Generate synthetic multi-station data.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SeriesArgs {
    /// Station CSV with `time,station_id,flow` columns.
    #[arg(long)]
    input: PathBuf,
    /// Station to use; defaults to the first one in the file.
    #[arg(long)]
    station: Option<String>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value = "ceemdan")]
    method: Method,
    /// Noise standard deviation (absolute, or relative with --relative-noise).
    #[arg(long, default_value_t = 2000.0)]
    noise_std: f64,
    #[arg(long)]
    relative_noise: bool,
    #[arg(long, default_value_t = 500)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EntropyArgs {
    /// IMF CSV written by `decompose`.
    #[arg(long)]
    imfs: PathBuf,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Tolerance as a fraction of each IMF's standard deviation.
    #[arg(long, default_value_t = 0.2)]
    r: f64,
    /// Strictly decreasing band edges, e.g. `inf,1,0.5,0.1,0`.
    #[arg(long, value_delimiter = ',')]
    band_edges: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 6)]
    pack_size: usize,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    #[arg(long, default_value_t = 20)]
    probe_epochs: usize,
    #[arg(long, default_value_t = 200)]
    final_epochs: usize,
    /// TOML search space (`[[dims]]` tables with name, low, high, integer).
    #[arg(long)]
    space: Option<PathBuf>,
    /// Fraction of training windows held out for fitness.
    #[arg(long, default_value_t = 0.2)]
    validation: f64,
    /// Per-iteration JSON history.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Checkpoint from `train` or `tune`. Without it the decomposition
    /// method runs end to end.
    #[arg(long, conflicts_with = "spatial")]
    model: Option<PathBuf>,
    /// Correct the low-frequency component with neighbouring stations.
    #[arg(long)]
    spatial: bool,
    /// Adjacency CSV (`station_id,neighbor_id`), needed with --spatial.
    #[arg(long)]
    adjacency: Option<PathBuf>,
    /// Pipeline TOML config for the end-to-end method.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// CSV with an `actual` column and one or more prediction columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    adjacency: Option<PathBuf>,
    /// Target station; defaults to the first station in the file.
    #[arg(long)]
    target: Option<String>,
    /// TOML config; without it the published settings are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the desk preset (noise relative to the series' spread).
    #[arg(long, conflicts_with = "config")]
    desk: bool,
    #[arg(long)]
    out_dir: PathBuf,
    /// Write the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    stations: usize,
    #[arg(long, default_value_t = 30)]
    days: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40.0)]
    noise_std: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    adjacency: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose(a) => decompose(a),
        Command::Entropy(a) => entropy(a),
        Command::Train(a) => train(a),
        Command::Tune(a) => tune(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Synth(a) => synth(a),
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

fn load_series(args: &SeriesArgs) -> Result<(String, TimeSeries)> {
    let raw = staged("load", load_station_csv(&args.input, &CsvSchema::default()))?;
    let station = match &args.station {
        Some(id) => raw
            .iter()
            .find(|r| &r.station_id == id)
            .ok_or_else(|| Error::Config(format!("station {id} not in {}", args.input.display()))),
        None => Ok(&raw[0]),
    };
    let station = staged("load", station)?;
    let ts = staged("clean", clean_series(station, &CleanConfig::default()))?;
    Ok((station.station_id.clone(), ts))
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let (_, ts) = load_series(&a.series)?;
    let cfg = EmdConfig {
        noise_std: a.noise_std,
        noise_scale: if a.relative_noise { NoiseScale::RelativeToStd } else { NoiseScale::Absolute },
        realizations: a.realizations,
        master_seed: a.seed,
        ..EmdConfig::default()
    };
    let set = staged("decompose", a.method.decompose(&ts, &cfg))?;
    write_imfs_csv(&a.out, &ts, &set)?;
    println!("{} IMFs written to {}", set.imf_count(), a.out.display());
    Ok(())
}

fn entropy(a: EntropyArgs) -> Result<()> {
    let set = staged("load", read_imfs_csv(&a.imfs))?;
    let params = SampEnParams { m: a.m, r: Tolerance::StdFraction(a.r) };
    let edges = a.band_edges.unwrap_or_else(|| DEFAULT_BAND_EDGES.to_vec());
    let groups = staged("entropy", recombine_by_entropy(&set, &params, &edges))?;
    for (i, se) in groups.entropies().iter().enumerate() {
        match se {
            Some(v) => eprintln!("IMF{:<3} {v:.6}", i + 1),
            None => eprintln!("IMF{:<3} undefined", i + 1),
        }
    }
    let summary: Vec<BTreeMap<&str, serde_json::Value>> = (0..groups.len())
        .map(|c| {
            BTreeMap::from([
                ("imfs", serde_json::json!(groups.members()[c].iter().map(|i| i + 1).collect::<Vec<_>>())),
                ("band", serde_json::json!(groups.bands()[c])),
                ("mean_entropy", serde_json::json!(groups.mean_entropy(c))),
            ])
        })
        .collect();
    write_json(
        a.out.as_deref(),
        &serde_json::json!({
            "entropies": groups.entropies(),
            "components": summary,
            "low_frequency": groups.low_frequency_index(),
        }),
    )
}

fn train_windows(m: &ModelArgs) -> Result<(TimeSeries, flowcast::neuralnet::WindowDataset)> {
    let (_, ts) = load_series(&m.series)?;
    let n_train = staged("split", split_index(ts.len(), m.split))?;
    let data = staged("train", make_windows(&ts.values()[..n_train], m.window, m.horizon))?;
    Ok((ts, data))
}

fn train(a: TrainArgs) -> Result<()> {
    let (_, data) = train_windows(&a.model)?;
    let init = LstmModel::init(1, a.hidden, a.model.seed)?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.model.seed,
        ..TrainConfig::default()
    };
    let (model, history) = staged("train", lstm_train(&init, &data, &cfg))?;
    let f = Forecaster::new(model, data.scaler().clone(), a.model.window, a.model.horizon)?;
    f.save(&a.model.out)?;
    if let Some(last) = history.last() {
        println!("final training loss {last:.6e}");
    }
    Ok(())
}

fn tune(a: TuneArgs) -> Result<()> {
    let (_, data) = train_windows(&a.model)?;
    let space = match &a.space {
        Some(p) => staged("tune", SearchSpace::from_toml(&fs::read_to_string(p)?))?,
        None => SearchSpace::lstm_default(),
    };
    let fit = ((data.len() as f64) * (1.0 - a.validation)).round() as usize;
    let (train, val) = data.split_at(fit);
    let budget = TuneBudget {
        pack_size: a.pack_size,
        iterations: a.iters,
        probe_epochs: a.probe_epochs,
        final_epochs: a.final_epochs,
    };
    let tuned = staged("tune", tune_lstm(&train, &val, &space, &budget, a.model.seed))?;
    let f = Forecaster::new(tuned.model.clone(), data.scaler().clone(), a.model.window, a.model.horizon)?;
    f.save(&a.model.out)?;
    if let Some(p) = &a.history {
        write_json(Some(p), &tuned.search.history)?;
    }
    println!(
        "learning rate {:.4e}, hidden {}, batch {}, validation mse {:.6e}",
        tuned.params.learning_rate, tuned.params.hidden_dim, tuned.params.batch_size, tuned.validation_mse
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    if let Some(model) = &a.model {
        let (_, ts) = load_series(&a.series)?;
        let f = staged("load", Forecaster::load(model))?;
        let x = ts.values();
        let start = staged("split", split_index(x.len(), a.split))?.max(f.window + f.horizon - 1);
        let preds = staged("predict", f.predict_range(&[x], start..x.len()))?;
        let mut w = csv::Writer::from_path(&a.out)?;
        w.write_record(["time", "actual", "predicted"])?;
        for (k, p) in preds.iter().enumerate() {
            let t = start + k;
            w.write_record([format_time(ts.time_at(t)), x[t].to_string(), p.to_string()])?;
        }
        w.flush()?;
        return Ok(());
    }
    let mut config = load_config(a.config.as_deref(), false)?;
    config.spatial = a.spatial;
    config.split_ratio = a.split;
    let raw = staged("load", load_station_csv(&a.series.input, &CsvSchema::default()))?;
    let adjacency = match &a.adjacency {
        Some(p) => staged("load", load_adjacency(p))?,
        None if a.spatial => return Err(Error::Config("--spatial needs --adjacency".into())),
        None => BTreeMap::new(),
    };
    let target = a.series.station.clone().unwrap_or_else(|| raw[0].station_id.clone());
    let report = run_pipeline(&config, &raw, &adjacency, &target)?;
    write_predictions_csv(&a.out, &report)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let mut r = csv::Reader::from_path(&a.input)?;
    let headers = r.headers()?.clone();
    let actual_col = headers
        .iter()
        .position(|h| h == "actual")
        .ok_or_else(|| Error::Config("no `actual` column".into()))?;
    let pred_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != actual_col && &headers[c] != "time")
        .collect();
    let mut actual = Vec::new();
    let mut preds = vec![Vec::new(); pred_cols.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c).unwrap_or("").parse().map_err(|_| Error::Parse {
                path: a.input.clone(),
                line: i + 2,
                message: format!("bad number in column `{}`", &headers[c]),
            })
        };
        actual.push(num(actual_col)?);
        for (k, &c) in pred_cols.iter().enumerate() {
            preds[k].push(num(c)?);
        }
    }
    let metrics = pred_cols
        .iter()
        .zip(&preds)
        .map(|(&c, p)| Ok((headers[c].to_string(), compute_metrics(&actual, p)?)))
        .collect::<Result<BTreeMap<_, _>>>();
    let metrics = staged("metrics", metrics)?;
    write_json(a.out.as_deref(), &metrics)
}

fn load_config(path: Option<&Path>, desk: bool) -> Result<PipelineConfig> {
    match path {
        Some(p) => staged("config", PipelineConfig::from_toml(&fs::read_to_string(p)?)),
        None if desk => Ok(PipelineConfig::desk()),
        None => Ok(PipelineConfig::default()),
    }
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let config = load_config(a.config.as_deref(), a.desk)?;
    fs::create_dir_all(&a.out_dir)?;
    if a.print_config {
        let p = a.out_dir.join("config.toml");
        fs::write(&p, config.to_toml()?)?;
        println!("config written to {}", p.display());
        return Ok(());
    }
    let raw = staged("load", load_station_csv(&a.input, &CsvSchema::default()))?;
    let adjacency = match &a.adjacency {
        Some(p) => staged("load", load_adjacency(p))?,
        None => BTreeMap::new(),
    };
    let target = a.target.unwrap_or_else(|| raw[0].station_id.clone());
    let report = run_pipeline(&config, &raw, &adjacency, &target)?;
    fs::write(a.out_dir.join("metrics.json"), report.metrics_json()?)?;
    write_predictions_csv(&a.out_dir.join("predictions.csv"), &report)?;
    write_components_csv(&a.out_dir.join("components.csv"), &report)?;
    write_json(Some(&a.out_dir.join("report.json")), &report)?;
    for (name, m) in &report.metrics {
        println!(
            "{name:<24} rmse {:>10.4}  mae {:>10.4}  mape {:>8}  r2 {:.4}",
            m.rmse,
            m.mae,
            m.mape.map_or("n/a".to_string(), |v| format!("{v:.4}")),
            m.r2
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        stations: a.stations,
        days: a.days,
        seed: a.seed,
        noise_std: a.noise_std,
        ..SynthConfig::default()
    };
    let stations = staged("synth", synth_traffic(&cfg))?;
    write_station_csv(&a.out, &stations)?;
    if let Some(p) = &a.adjacency {
        write_adjacency(p, &stations)?;
    }
    println!("{} stations x {} samples written to {}", stations.len(), stations[0].series.len(), a.out.display());
    Ok(())
}
