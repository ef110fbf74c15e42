use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oti::evaluation::{adjusted_rand_index, normalized_mutual_information};
use oti::harness::{emit_report, load_csv, read_feature_table, run_experiment, ExperimentConfig};
use oti::induction::{InductionConfig, InductiveModel};
use oti::ot::EpsilonRule;
use oti::transduction::{LabeledPool, PropagationConfig};
use oti::{Error, Result};

#[derive(Parser)]
#[command(name = "oti", version, about = "Optimal transport label propagation and induction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated split experiment on a labeled CSV.
    Run(RunArgs),
    /// Label new points from a partially labeled training CSV.
    Predict(PredictArgs),
    /// ARI and NMI between two label columns.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct MethodArgs {
    /// Regularization: a positive number, `auto` or `auto:<scale>`.
    #[arg(long, default_value = "auto")]
    epsilon: EpsilonRule,
    /// Certainty threshold for joining the labeled pool.
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    #[arg(long, default_value_t = 20)]
    max_rounds: usize,
}

impl MethodArgs {
    fn configs(&self) -> Result<(PropagationConfig, InductionConfig)> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        let propagation =
            PropagationConfig { epsilon: self.epsilon, alpha: self.alpha, max_rounds: self.max_rounds, ..Default::default() };
        let induction = InductionConfig { epsilon: self.epsilon, ..Default::default() };
        Ok((propagation, induction))
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_col: String,
    /// Labeled fractions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.15, 0.25])]
    zeta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Z-score features before splitting.
    #[arg(long)]
    standardize: bool,
    /// JSON output; the flat table goes next to it with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct PredictArgs {
    /// Training CSV; rows with an empty label cell are treated as unlabeled.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    label_col: String,
    /// CSV of points to label. A column named like the label column is ignored.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV with a single `label` column; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Column of the truth file; the first column when omitted.
    #[arg(long)]
    truth_col: Option<String>,
    /// Column of the prediction file; the first column when omitted.
    #[arg(long)]
    pred_col: Option<String>,
}

fn run(args: RunArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(Error::invalid("--reps must be at least 1"));
    }
    let dataset = load_csv(&args.data, &args.label_col)?;
    let (propagation, induction) = args.method.configs()?;
    let config = ExperimentConfig {
        zetas: args.zeta,
        repetitions: args.reps,
        seed: args.seed,
        standardize: args.standardize,
        propagation,
        induction,
    };
    let reports = run_experiment(&dataset, &config);
    for r in &reports {
        match (&r.inductive, &r.transductive) {
            (Some(i), Some(t)) => println!(
                "{} zeta={} runs={}/{} oti ari={:.4}±{:.4} nmi={:.4}±{:.4} | transductive ari={:.4}±{:.4} nmi={:.4}±{:.4}",
                r.dataset,
                r.zeta,
                r.runs.len(),
                r.repetitions,
                i.ari.mean,
                i.ari.std,
                i.nmi.mean,
                i.nmi.std,
                t.ari.mean,
                t.ari.std,
                t.nmi.mean,
                t.nmi.std
            ),
            _ => println!("{} zeta={} runs=0/{}", r.dataset, r.zeta, r.repetitions),
        }
        for f in &r.failures {
            eprintln!("warning: {} zeta={} run {} (seed {}) failed: {}", r.dataset, r.zeta, f.run, f.seed, f.error);
        }
    }
    let table = emit_report(&reports, &args.out)?;
    println!("wrote {} and {}", args.out.display(), table.display());
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let (propagation, induction) = args.method.configs()?;
    let train = read_feature_table(&args.train, Some(&args.label_col))?;
    let cells = train.labels.expect("label column requested");

    let input_has_label = csv::Reader::from_path(&args.input)
        .and_then(|mut r| r.headers().map(|h| h.iter().any(|c| c == args.label_col)))
        .map_err(|e| Error::Ingestion { path: args.input.clone(), message: e.to_string() })?;
    let input = read_feature_table(&args.input, input_has_label.then_some(args.label_col.as_str()))?;
    if input.feature_names != train.feature_names {
        return Err(Error::Ingestion {
            path: args.input.clone(),
            message: format!("feature columns {:?} do not match training columns {:?}", input.feature_names, train.feature_names),
        });
    }

    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        match cell {
            Some(_) => labeled.push(i),
            None => unlabeled.push(i),
        }
    }
    if labeled.is_empty() {
        return Err(Error::invalid("training file has no labeled rows"));
    }
    let mut class_names: Vec<String> = Vec::new();
    let labels: Vec<usize> = labeled
        .iter()
        .map(|&i| {
            let name = cells[i].as_deref().expect("labeled row");
            match class_names.iter().position(|c| c == name) {
                Some(k) => k,
                None => {
                    class_names.push(name.to_string());
                    class_names.len() - 1
                }
            }
        })
        .collect();

    let rows = |idx: &[usize]| train.features.select(ndarray::Axis(0), idx);
    let model = if unlabeled.is_empty() {
        InductiveModel::from_labeled(rows(&labeled), labels, class_names.len(), induction)?
    } else {
        let pool = LabeledPool::new(rows(&labeled), labels, class_names.len())?;
        InductiveModel::fit(&pool, rows(&unlabeled).view(), &propagation, induction)?.0
    };
    let predicted = model.predict(input.features.view())?;
    write_labels(args.out.as_deref(), predicted.iter().map(|&k| class_names[k].as_str()))
}

fn write_labels<'a>(out: Option<&Path>, labels: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut text = String::from("label\n");
    for l in labels {
        text.push_str(l);
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Output(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_label_column(path: &Path, column: Option<&str>) -> Result<Vec<String>> {
    let ingestion = |message: String| Error::Ingestion { path: path.to_path_buf(), message };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ingestion(format!("cannot open: {e}")))?;
    let headers = reader.headers().map_err(|e| ingestion(format!("bad header: {e}")))?.clone();
    let idx = match column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| ingestion(format!("column `{name}` not found")))?,
        None => 0,
    };
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ingestion(format!("row {}: {e}", r + 1)))?;
        match record.get(idx) {
            Some(cell) if !cell.is_empty() => labels.push(cell.to_string()),
            _ => return Err(ingestion(format!("row {}: missing label", r + 1))),
        }
    }
    Ok(labels)
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let truth = read_label_column(&args.truth, args.truth_col.as_deref())?;
    let pred = read_label_column(&args.pred, args.pred_col.as_deref())?;
    println!("ari={}", adjusted_rand_index(&truth, &pred)?);
    println!("nmi={}", normalized_mutual_information(&truth, &pred)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Predict(args) => predict(args),
        Command::Metrics(args) => metrics(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
