//! Command-line pipeline: fit PCA on target samples, train or grid-search a
//! one-class model, and triage new samples into a flagged-for-review list.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_synthetic, load_features, save_features, split_by_target, BlobSpec};
use crate::error::{Error, Result};
use crate::io::{read_json, write_atomic, write_json_atomic};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{ClassifierConfig, ClassifierType, Decision, KernelKind, OneClassModel};
use crate::model_selection::{grid_search, write_leaderboard, GridSpec};
use crate::pca::{fit_pca, total_variance, PcaModel, DEFAULT_COMPONENTS};

#[derive(Debug, Parser)]
#[command(
    name = "occkit",
    version,
    about = "One-class classification and rare-class triage"
)]
pub struct Cli {
    /// Seed for synthetic fixtures.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit PCA on the target-class rows of a feature file.
    FitPca(FitPcaArgs),
    /// Train one classifier on the target-class rows.
    Train(TrainArgs),
    /// Select hyper-parameters by validation GM.
    GridSearch(GridSearchArgs),
    /// Score samples and write the flagged-for-review list.
    Triage(TriageArgs),
    /// Compare a scores file against labeled features.
    Evaluate(EvaluateArgs),
    /// Write a synthetic Gaussian-blob feature file.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct FitPcaArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub target_class: String,
    #[arg(long, default_value_t = DEFAULT_COMPONENTS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long, value_parser = parse_classifier)]
    pub classifier: ClassifierType,
    #[arg(long, value_parser = parse_kernel, default_value = "linear")]
    pub kernel: KernelKind,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl HyperArgs {
    fn config(&self) -> ClassifierConfig {
        ClassifierConfig {
            classifier: self.classifier,
            kernel: self.kernel,
            c: self.c,
            sigma: self.sigma,
            d: self.d,
            eta: self.eta,
            beta: self.beta,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub pca: PathBuf,
    #[arg(long)]
    pub target_class: String,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub pca: PathBuf,
    #[arg(long)]
    pub target_class: String,
    /// JSON grid; when absent the default grids are used for
    /// `--classifier`/`--kernel`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, value_parser = parse_classifier)]
    pub classifier: Option<ClassifierType>,
    #[arg(long, value_parser = parse_kernel, default_value = "linear")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out_leaderboard: PathBuf,
    /// Best configuration retrained and written as a classifier file.
    #[arg(long)]
    pub out_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TriageArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub pca: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Treat the label column as ground truth and write an evaluation report.
    #[arg(long)]
    pub truth: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Scores CSV written by `triage`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Feature file whose labels are the ground truth.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub target_class: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON blob specification; its seed is replaced by `--seed`.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_classifier(s: &str) -> std::result::Result<ClassifierType, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kernel(s: &str) -> std::result::Result<KernelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Trained classifier plus the PCA it expects its inputs to pass through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFile {
    pub pca_sha256: String,
    pub target_class: String,
    pub config: ClassifierConfig,
    pub model: OneClassModel,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FitPca(a) => cmd_fit_pca(&a),
        Command::Train(a) => cmd_train(&a),
        Command::GridSearch(a) => cmd_grid_search(&a),
        Command::Triage(a) => cmd_triage(&a).map(|_| ()),
        Command::Evaluate(a) => cmd_evaluate(&a).map(|_| ()),
        Command::Generate(a) => cmd_generate(&a, cli.seed),
    }
}

fn load_pca(path: &Path) -> Result<PcaModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PcaModel::from_json(&text)
}

pub fn cmd_fit_pca(args: &FitPcaArgs) -> Result<()> {
    let features = load_features(&args.features)?;
    let split = split_by_target(&features, &args.target_class)?;
    let pca = fit_pca(&split.target, args.k as usize)?;
    let json = pca.to_json()?;
    write_atomic(&args.out, |w| {
        w.write_all(json.as_bytes())
            .map_err(|e| Error::io(&args.out, e))
    })?;
    let fraction = pca.explained_fraction(total_variance(split.target.data()));
    println!("k = {}", pca.k());
    println!("explained variance fraction = {fraction:.6}");
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let features = load_features(&args.features)?;
    let pca = load_pca(&args.pca)?;
    let split = split_by_target(&features, &args.target_class)?;
    let projected = pca.project(&split.target)?;
    let config = args.hyper.config();
    let model = config.train(projected.data())?;
    if let OneClassModel::Ssvdd(m) = &model {
        println!("iterations_run = {}", m.iterations_run);
    }
    let file = ClassifierFile {
        pca_sha256: pca.fingerprint(),
        target_class: args.target_class.clone(),
        config,
        model,
    };
    write_json_atomic(&args.out, &file)
}

pub fn cmd_grid_search(args: &GridSearchArgs) -> Result<()> {
    let grid = match (&args.grid, args.classifier) {
        (Some(path), _) => read_json::<GridSpec>(path)?,
        (None, Some(classifier)) => GridSpec::new(classifier, args.kernel),
        (None, None) => {
            return Err(Error::InvalidParameter(
                "either --grid or --classifier is required".into(),
            ))
        }
    };
    let pca = load_pca(&args.pca)?;
    let train = load_features(&args.train)?;
    let target = pca.project(&split_by_target(&train, &args.target_class)?.target)?;
    let validation = pca.project(&load_features(&args.validation)?)?;

    let result = grid_search(&target, &validation, &args.target_class, &grid, args.jobs)?;
    for f in &result.failures {
        eprintln!("skipped {}: {}", serde_json::to_string(&f.config)?, f.error);
    }

    let best_model = match &args.out_model {
        Some(_) => Some(result.best_config.train(target.data())?),
        None => None,
    };
    write_atomic(&args.out_leaderboard, |w| write_leaderboard(w, &result))?;
    if let (Some(path), Some(model)) = (&args.out_model, best_model) {
        let file = ClassifierFile {
            pca_sha256: pca.fingerprint(),
            target_class: args.target_class.clone(),
            config: result.best_config.clone(),
            model,
        };
        write_json_atomic(path, &file)?;
    }
    println!(
        "best {} gm = {:.3} ({} evaluated, {} skipped)",
        serde_json::to_string(&result.best_config)?,
        result.best_validation_gm,
        result.leaderboard.len(),
        result.failures.len()
    );
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriageReport {
    pub flagged_ids: Vec<String>,
    /// `(id, score, decision)` sorted by score, highest first.
    pub scores: Vec<(String, f64, Decision)>,
    pub summary: Option<EvalReport>,
}

pub fn cmd_triage(args: &TriageArgs) -> Result<TriageReport> {
    let features = load_features(&args.features)?;
    let pca = load_pca(&args.pca)?;
    let classifier: ClassifierFile = read_json(&args.model)?;
    let fingerprint = pca.fingerprint();
    if classifier.pca_sha256 != fingerprint {
        return Err(Error::PcaHashMismatch {
            expected: classifier.pca_sha256,
            found: fingerprint,
        });
    }
    let projected = pca.project(&features)?;
    let scored = classifier.model.classify_rows(projected.data())?;

    let flagged_ids: Vec<String> = features
        .ids()
        .iter()
        .zip(&scored)
        .filter(|(_, s)| s.decision.is_target())
        .map(|(id, _)| id.clone())
        .collect();
    let mut scores: Vec<(String, f64, Decision)> = features
        .ids()
        .iter()
        .zip(&scored)
        .map(|(id, s)| (id.clone(), s.score, s.decision))
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));

    let summary = if args.truth {
        let predictions: Vec<(&str, Decision)> =
            scores.iter().map(|(id, _, d)| (id.as_str(), *d)).collect();
        let truth: Vec<(&str, bool)> = features
            .ids()
            .iter()
            .map(String::as_str)
            .zip(features.is_target(&classifier.target_class))
            .collect();
        Some(evaluate(&predictions, &truth)?)
    } else {
        None
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let flagged_path = args.out_dir.join("flagged.txt");
    write_atomic(&flagged_path, |w| {
        for id in &flagged_ids {
            writeln!(w, "{id}").map_err(|e| Error::io(&flagged_path, e))?;
        }
        Ok(())
    })?;
    write_atomic(&args.out_dir.join("scores.csv"), |w| {
        write_scores(w, &scores)
    })?;
    if let Some(report) = &summary {
        write_json_atomic(&args.out_dir.join("report.json"), report)?;
        println!("TPR GM TP TP+FP");
        println!("{}", report.table_row());
    }
    eprintln!("{} of {} samples flagged", flagged_ids.len(), features.n());
    Ok(TriageReport {
        flagged_ids,
        scores,
        summary,
    })
}

fn write_scores(w: &mut dyn Write, scores: &[(String, f64, Decision)]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(["id", "score", "decision"])?;
    for (id, score, decision) in scores {
        wtr.write_record([id.clone(), format!("{score:.16e}"), decision.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<scores>", e))?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<(String, f64, Decision)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::WrongColumnCount {
                line,
                expected: 3,
                found: record.len(),
            });
        }
        let score = record[1].parse().map_err(|_| Error::NonNumeric {
            line,
            column: 2,
            value: record[1].to_string(),
        })?;
        out.push((record[0].to_string(), score, record[2].parse()?));
    }
    Ok(out)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvalReport> {
    let scores = read_scores(&args.scores)?;
    let truth_features = load_features(&args.truth)?;
    let predictions: Vec<(&str, Decision)> =
        scores.iter().map(|(id, _, d)| (id.as_str(), *d)).collect();
    let truth: Vec<(&str, bool)> = truth_features
        .ids()
        .iter()
        .map(String::as_str)
        .zip(truth_features.is_target(&args.target_class))
        .collect();
    let report = evaluate(&predictions, &truth)?;
    if let Some(out) = &args.out {
        write_json_atomic(out, &report)?;
    }
    println!("TPR GM TP TP+FP");
    println!("{}", report.table_row());
    Ok(report)
}

pub fn cmd_generate(args: &GenerateArgs, seed: u64) -> Result<()> {
    let mut spec: BlobSpec = read_json(&args.spec)?;
    spec.seed = seed;
    save_features(&args.out, &generate_synthetic(&spec)?)
}
