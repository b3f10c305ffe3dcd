//! `karmic`: command-line front end.
//!
//! Every subcommand prints one JSON document on stdout. Failures print
//! `{"error": <code>, "message": <text>}` on stderr and exit with status 1; usage
//! errors exit with status 2.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use karmic_core::confusion::ScoredSample;
use karmic_core::experiment::{fit_loglog_slope, run_rate_experiment, summarize, write_outputs, ExperimentConfig};
use karmic_core::plugin::{bayes_optimum, PluginClassifierRecord, TolerancePolicy};
use karmic_core::threshold::{binary_search_on_sample, brute_force_discrete, grid_search_on_sample, DEFAULT_GRID_STEP};
use karmic_core::{
    population_regret, train_plugin, Dataset, Error, EstimatorSpec, EvalMode, GaussianModel, HolderEta, HolderModel, Label,
    MetricSpec, PluginClassifier, Result, Scorer, ScorerSpec, SynthModel,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "karmic", version, about = "Plug-in classifiers for confusion-matrix metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset.
    Gen(GenArgs),
    /// Search a threshold for a fixed scorer on a dataset.
    Threshold(ThresholdArgs),
    /// Train a plug-in classifier (estimate η on one half, threshold on the other).
    Train(TrainArgs),
    /// Population regret of a trained classifier under a synthetic model.
    Evaluate(EvaluateArgs),
    /// Run a convergence-rate experiment from a TOML config.
    Rate(RateArgs),
    /// Brute-force optimum: labellings of discrete atoms or a population threshold grid.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Gaussian,
    Holder,
}

#[derive(Args)]
struct ModelArgs {
    /// Generative model.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Class-mean offset, comma separated (gaussian).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Vec<f64>,
    /// Positive-class prior (gaussian).
    #[arg(long)]
    kappa: Option<f64>,
    /// Smoothness (holder).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Conditional probability: `sine` or `half` (holder).
    #[arg(long, default_value = "sine")]
    eta: String,
    /// Model JSON, e.g. the sidecar written by `gen`.
    #[arg(long, conflicts_with = "model")]
    model_file: Option<PathBuf>,
}

impl ModelArgs {
    fn build(&self) -> Result<SynthModel> {
        if let Some(path) = &self.model_file {
            return Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?);
        }
        match self.model {
            Some(ModelKind::Gaussian) => {
                let kappa = self.kappa.ok_or_else(|| Error::InvalidInput("--kappa is required".into()))?;
                if self.mu.is_empty() {
                    return Err(Error::InvalidInput("--mu is required".into()));
                }
                Ok(SynthModel::Gaussian(GaussianModel::new(self.mu.clone(), kappa)?))
            }
            Some(ModelKind::Holder) => {
                let eta = match self.eta.as_str() {
                    "sine" => HolderEta::Sine,
                    "half" => HolderEta::Half,
                    other => return Err(Error::Parse(format!("unknown eta `{other}`"))),
                };
                Ok(SynthModel::Holder(HolderModel::new(eta, self.beta)?))
            }
            None => Err(Error::InvalidInput("give --model or --model-file".into())),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; the model is written next to it as `<out>.model.json`.
    #[arg(long)]
    out: PathBuf,
    /// Also write the binary cache format here.
    #[arg(long)]
    binary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchMethod {
    Binary,
    Grid,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    metric: String,
    /// Scorer JSON, inline or as a file path.
    #[arg(long)]
    scorer: String,
    #[arg(long, value_enum, default_value = "binary")]
    method: SearchMethod,
    /// `logn-over-n` or a number.
    #[arg(long, default_value = "logn-over-n")]
    tolerance: String,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    metric: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `logistic`, `kernel[:beta[,const]]` or `true-eta` (needs a model).
    #[arg(long, default_value = "logistic")]
    estimator: String,
    #[arg(long, default_value = "logn-over-n")]
    tolerance: String,
    /// Classifier JSON; printed to stdout when absent. Kernel scorers also write
    /// their training half to `<out>.train.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    classifier: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// `closed-form`, `monte-carlo[:m[:seed]]` or `quadrature[:points]`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (overrides the config and KARMIC_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Output prefix (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    metric: String,
    /// Atoms `weight:eta`, comma separated.
    #[arg(long, conflicts_with = "model")]
    discrete: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable output"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Threshold(a) => threshold(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Rate(a) => rate(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("krmd") => Dataset::read_binary(path),
        _ => Dataset::read_csv(path),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", path.display()))
}

fn gen(a: GenArgs) -> Result<Value> {
    let model = a.model.build()?;
    let data = model.sample(a.n, a.seed);
    data.write_csv(&a.out)?;
    if let Some(bin) = &a.binary {
        data.write_binary(bin)?;
    }
    let model_path = sidecar(&a.out, "model.json");
    std::fs::write(&model_path, serde_json::to_string_pretty(&model)?)?;
    Ok(json!({
        "out": a.out,
        "model_file": model_path,
        "n": data.len(),
        "dim": data.dim(),
        "positive_rate": data.positive_rate(),
        "seed": a.seed,
    }))
}

fn load_scorer(arg: &str) -> Result<Scorer> {
    let (text, base) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), None)
    } else {
        let p = Path::new(arg);
        (std::fs::read_to_string(p)?, p.parent().map(Path::to_path_buf))
    };
    let spec: ScorerSpec<f64> = serde_json::from_str(&text)?;
    spec.load(base.as_deref())
}

fn threshold(a: ThresholdArgs) -> Result<Value> {
    let metric = MetricSpec::parse(&a.metric)?;
    let data = read_dataset(&a.data)?;
    let scorer = load_scorer(&a.scorer)?;
    let sample = ScoredSample::from_scorer(&scorer, &data)?;
    match a.method {
        SearchMethod::Binary => {
            let cfg = TolerancePolicy::parse(&a.tolerance)?.config(data.len())?;
            let r = binary_search_on_sample(&metric, &sample, &cfg)?;
            let value = metric.value(&sample.confusion(r.delta_hat)).ok();
            Ok(json!({
                "method": "binary",
                "metric": metric.name,
                "delta_hat": r.delta_hat,
                "value": value,
                "iterations": r.iterations,
                "tolerance": cfg.tolerance,
                "h_trace": r.h_trace,
            }))
        }
        SearchMethod::Grid => {
            let r = grid_search_on_sample(&metric, &sample, a.grid_step)?;
            Ok(json!({
                "method": "grid",
                "metric": metric.name,
                "delta_hat": r.delta,
                "value": r.value,
                "grid_step": a.grid_step,
            }))
        }
    }
}

fn train(a: TrainArgs) -> Result<Value> {
    let metric = MetricSpec::parse(&a.metric)?;
    let data = read_dataset(&a.data)?;
    let estimator = match a.estimator.trim() {
        "true-eta" => EstimatorSpec::TrueEta { model: a.model.build()? },
        other => EstimatorSpec::parse(other)?,
    };
    let tolerance = TolerancePolicy::parse(&a.tolerance)?;
    let mut clf = train_plugin(&metric, &data, &estimator, &tolerance, a.seed)?;
    if let Scorer::Kernel(k) = &mut clf.scorer {
        let out = a
            .out
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("kernel classifiers need --out for their training file".into()))?;
        let train_path = sidecar(out, "train.csv");
        k.train().write_csv(&train_path)?;
        let name = train_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        k.set_train_ref(name);
    }
    let record = serde_json::to_value(clf.to_record()?)?;
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&record)?)?;
    }
    Ok(record)
}

fn evaluate(a: EvaluateArgs) -> Result<Value> {
    let text = std::fs::read_to_string(&a.classifier)?;
    let record: PluginClassifierRecord = serde_json::from_str(&text)?;
    let clf = PluginClassifier::from_record(&record, a.classifier.parent())?;
    let model = a.model.build()?;
    let mode = match &a.mode {
        Some(m) => EvalMode::parse(m)?,
        None => match (&model, &clf.scorer) {
            (SynthModel::Holder(_), _) => EvalMode::parse("quadrature")?,
            (SynthModel::Gaussian(_), Scorer::Logistic { .. } | Scorer::TrueEta(_)) => EvalMode::ClosedForm,
            _ => EvalMode::parse("monte-carlo")?,
        },
    };
    let metric = MetricSpec::parse(&record.provenance.metric)?;
    Ok(serde_json::to_value(population_regret(&metric, &clf, &model, mode)?)?)
}

fn rate(a: RateArgs) -> Result<Value> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if let Some(out) = &a.out {
        cfg.output = Some(out.display().to_string());
    }
    let table = run_rate_experiment(&cfg)?;
    let mut summary = serde_json::to_value(summarize(&cfg, &table))?;
    if let Some(prefix) = &cfg.output {
        let paths = write_outputs(&cfg, &table, Path::new(prefix))?;
        summary["outputs"] = json!({ "table": paths.table, "timing": paths.timing, "summary": paths.summary });
    } else {
        // no files requested; keep the fit error visible on stdout
        if let Err(e) = fit_loglog_slope(&table) {
            summary["fit_error"] = json!(e.code());
        }
    }
    Ok(summary)
}

fn parse_atoms(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|item| {
            let (w, eta) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("atom `{item}` is not `weight:eta`")))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}")));
            Ok((num(w)?, num(eta)?))
        })
        .collect()
}

fn signs(labels: &[Label]) -> Vec<i8> {
    labels.iter().map(|l| l.sign()).collect()
}

fn oracle(a: OracleArgs) -> Result<Value> {
    let metric = MetricSpec::parse(&a.metric)?;
    if let Some(spec) = &a.discrete {
        let atoms = parse_atoms(spec)?;
        let opt = brute_force_discrete(&metric, &atoms)?;
        let set: Vec<Vec<i8>> = opt.argmax_set.iter().map(|l| signs(l)).collect();
        return Ok(json!({
            "metric": metric.name,
            "best_utility": opt.best_utility,
            "argmax_set": set,
            "utilities": opt.utilities,
        }));
    }
    let model = a.model.build()?;
    if !(a.grid_step > 0.0 && a.grid_step <= 0.5) {
        return Err(Error::InvalidInput(format!("grid step must lie in (0, 0.5], got {}", a.grid_step)));
    }
    let count = (1.0 / a.grid_step).ceil() as usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..count {
        let delta = k as f64 * a.grid_step;
        let Ok(c) = model.population_confusion(delta) else { continue };
        if let Ok(v) = metric.value(&c) {
            if best.is_none_or(|b| v > b.1) {
                best = Some((delta, v));
            }
        }
    }
    let (delta, value) = best.ok_or_else(|| Error::MetricDomain("no grid threshold inside the metric domain".into()))?;
    let fixed = bayes_optimum(&metric, &model).ok();
    Ok(json!({
        "metric": metric.name,
        "grid_step": a.grid_step,
        "grid_delta": delta,
        "grid_value": value,
        "delta_star": fixed.map(|f| f.0),
        "u_star": fixed.map(|f| f.1),
    }))
}
