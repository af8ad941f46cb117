use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nidsgap::dataset::{class_distribution, load_csv, write_csv};
use nidsgap::evaluation::{compare_models_with, evaluate, EvaluationReport, DEFAULT_GAP_FLAG};
use nidsgap::experiment::{run_experiment_in, ExperimentConfig};
use nidsgap::features::{accuracy_curve, choose_top_k, rank_features, FeatureRanking, DEFAULT_RANKING_FRACTION};
use nidsgap::models::{fit, load_model, save_model, ForestParams};
use nidsgap::preprocess::{binarize_labels, clean, downsample, drop_class, ResamplePolicy};
use nidsgap::synth::{generate_pair, Drift, SynthConfig};
use nidsgap::tuning::{cross_validate, grid_search, HyperGrid, DEFAULT_GRID_FRACTION};
use nidsgap::{ClassifierSpec, Dataset, Error, Family, HyperValue};

#[derive(Parser)]
#[command(name = "nidsgap", version, about = "Cross-dataset evaluation of flow-based intrusion detection classifiers")]
struct Cli {
    /// Master seed for every stochastic step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Share of CSV rows to read
    #[arg(long, global = true, default_value_t = 1.0)]
    fraction: f64,
    /// Only print errors
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Flow CSV file
    csv: PathBuf,
    /// Label column name
    #[arg(long, default_value = "Label")]
    label: String,
}

#[derive(Args)]
struct ModelArgs {
    /// decision_tree, random_forest, svm, naive_bayes, ann or dnn
    #[arg(long)]
    family: Family,
    /// Hyperparameter as name=value (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the class distribution and what cleaning would drop
    Inspect(Input),
    /// Clean, drop classes, downsample and binarize a CSV
    Preprocess {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "BENIGN")]
        benign: String,
        /// Class to remove (repeatable)
        #[arg(long = "drop")]
        drop: Vec<String>,
        /// Cap on each attack class
        #[arg(long)]
        cap: Option<usize>,
        /// Benign records per malicious record
        #[arg(long)]
        ratio: Option<f64>,
        /// Merge every attack class into this label
        #[arg(long)]
        binarize: Option<String>,
        #[arg(long)]
        no_clean: bool,
    },
    /// Rank features by random-forest impurity decrease
    RankFeatures {
        #[command(flatten)]
        input: Input,
        /// Feature to leave out (repeatable)
        #[arg(long = "exclude")]
        exclude: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        /// Share of the records the ranking forest is fitted on
        #[arg(long, default_value_t = DEFAULT_RANKING_FRACTION)]
        sample: f64,
    },
    /// Accuracy against the number of top-ranked features
    Curve {
        #[command(flatten)]
        input: Input,
        /// Ranking CSV from rank-features
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long)]
        max_k: Option<usize>,
        /// Families to score (repeatable; default all)
        #[arg(long = "family")]
        families: Vec<Family>,
        #[arg(long, default_value_t = 0.002)]
        tolerance: f64,
    },
    /// Grid search with k-fold cross-validation
    Tune {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        family: Family,
        /// Axis as name=v1,v2,... (repeatable)
        #[arg(long = "grid", value_name = "NAME=V1,V2")]
        grid: Vec<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Share of the data searched
        #[arg(long, default_value_t = DEFAULT_GRID_FRACTION)]
        grid_fraction: f64,
    },
    /// k-fold cross-validation of one configuration
    Cv {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Fit a model and save it as JSON
    Train {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Score a saved model on a holdout and optionally a later test set
    Evaluate {
        /// Model JSON from train
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        holdout: Input,
        /// Later dataset for the cross-dataset gap
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Merge evaluation reports into one comparison table
    Compare {
        /// Evaluation report JSON files
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GAP_FLAG)]
        gap_flag: f64,
    },
    /// Write a synthetic train/test pair
    Synth {
        #[arg(long, default_value_t = 10_000)]
        records: usize,
        #[arg(long, default_value_t = 5)]
        features: usize,
        /// Distance between class means on every feature
        #[arg(long, default_value_t = 1.5)]
        separation: f64,
        /// Offset added to every test feature
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        /// Benign fraction of the test set
        #[arg(long)]
        test_balance: Option<f64>,
    },
    /// Run the full pipeline from a config file
    Run { config: PathBuf },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn parse_params(family: Family, items: &[String], seed: u64) -> Result<ClassifierSpec, Failure> {
    let mut hp = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("expected NAME=VALUE, got {item:?}")))?;
        hp.insert(k.trim().to_string(), HyperValue::parse(v.trim()));
    }
    Ok(ClassifierSpec::new(family, hp, seed)?)
}

fn parse_grid(items: &[String]) -> Result<HyperGrid, Failure> {
    let mut grid = HyperGrid::default();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("expected NAME=V1,V2, got {item:?}")))?;
        grid = grid.axis(k.trim(), v.split(',').map(|s| HyperValue::parse(s.trim())))?;
    }
    Ok(grid)
}

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
    fraction: f64,
    quiet: bool,
}

impl Ctx {
    fn load(&self, input: &Input) -> Result<Dataset, Error> {
        load_csv(&input.csv, &input.label, self.fraction, self.seed)
    }

    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", text.as_ref());
        }
    }

    fn out_dir(&self) -> Result<PathBuf, Error> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
        Ok(dir)
    }

    /// Writes to `<out>/<name>` when `--out` is given, else prints.
    fn emit(&self, name: &str, text: &str) -> Result<(), Error> {
        match &self.out {
            Some(_) => write(&self.out_dir()?.join(name), text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn csv_text(f: impl FnOnce(&mut Vec<u8>) -> nidsgap::Result<()>) -> Result<String, Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn json_text<T: serde::Serialize>(v: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn execute(cmd: Command, ctx: &Ctx) -> Outcome {
    match cmd {
        Command::Inspect(input) => {
            let d = ctx.load(&input)?;
            let (_, report) = clean(&d);
            println!("{} records, {} features", d.len(), d.schema().dim());
            println!("{}", class_distribution(&d));
            println!(
                "cleaning would drop {} with missing values, {} non-finite, {} duplicates; {} remain",
                report.dropped_missing, report.dropped_nonfinite, report.dropped_duplicates, report.remaining
            );
        }
        Command::Preprocess { input, benign, drop, cap, ratio, binarize, no_clean } => {
            let mut d = ctx.load(&input)?;
            if !no_clean {
                let (c, report) = clean(&d);
                ctx.say(format!("clean: {}", json_text(&report)?.trim_end()));
                d = c;
            }
            for label in &drop {
                d = drop_class(&d, label);
            }
            if cap.is_some() || ratio.is_some() {
                let mut policy = ResamplePolicy::new(&benign, ctx.seed);
                policy.per_class_cap = cap;
                policy.target_benign_to_malicious_ratio = ratio;
                d = downsample(&d, &policy)?;
            }
            if let Some(merged) = binarize {
                d = binarize_labels(&d, &benign, &merged);
            }
            ctx.say(class_distribution(&d).to_string());
            let path = ctx.out_dir()?.join("preprocessed.csv");
            write_csv(&d, &path)?;
            ctx.say(format!("wrote {}", path.display()));
        }
        Command::RankFeatures { input, exclude, trees, sample } => {
            let d = ctx.load(&input)?;
            let forest = ForestParams { n_trees: trees, ..ForestParams::default() };
            let ranking = rank_features(&d, &forest, &exclude, sample, ctx.seed)?;
            ctx.emit("importances.csv", &csv_text(|b| ranking.write_csv(b))?)?;
        }
        Command::Curve { input, ranking, max_k, families, tolerance } => {
            let d = ctx.load(&input)?;
            let file = fs::File::open(&ranking).map_err(|e| Error::Io { path: ranking.clone(), source: e })?;
            let ranking = FeatureRanking::read_csv(file)?;
            let families = if families.is_empty() { Family::ALL.to_vec() } else { families };
            let specs: Vec<ClassifierSpec> = families.iter().map(|&f| ClassifierSpec::default_for(f, ctx.seed)).collect();
            let curve = accuracy_curve(&d, &ranking, &specs, max_k.unwrap_or(ranking.len()), ctx.seed)?;
            ctx.emit("curve.csv", &csv_text(|b| curve.write_csv(b))?)?;
            let k = choose_top_k(&curve, tolerance)?;
            eprintln!("chosen k = {k}: {}", ranking.top(k).join(", "));
        }
        Command::Tune { input, family, grid, k, grid_fraction } => {
            let d = ctx.load(&input)?;
            let grid = parse_grid(&grid)?;
            let (best, table) = grid_search(family, &grid, &d, grid_fraction, k, ctx.seed)?;
            ctx.emit(&format!("grid_{family}.csv"), &csv_text(|b| table.write_csv(b))?)?;
            eprintln!("best: {}", best.describe());
        }
        Command::Cv { input, model, k } => {
            let d = ctx.load(&input)?;
            let spec = parse_params(model.family, &model.params, ctx.seed)?;
            let r = cross_validate(&spec, &d, k, ctx.seed)?;
            ctx.emit(&format!("cv_{}.json", spec.family), &json_text(&r)?)?;
        }
        Command::Train { input, model } => {
            let d = ctx.load(&input)?;
            let spec = parse_params(model.family, &model.params, ctx.seed)?;
            let trained = fit(&spec, &d)?;
            let path = ctx.out_dir()?.join(format!("{}.json", spec.family));
            save_model(&trained, &path)?;
            ctx.say(format!(
                "{} fitted on {} records in {:.3}s; wrote {}",
                spec.describe(),
                d.len(),
                trained.fit_time().as_secs_f64(),
                path.display()
            ));
        }
        Command::Evaluate { model, holdout, test } => {
            let m = load_model(&model)?;
            let h = ctx.load(&holdout)?;
            let t = test
                .map(|p| load_csv(&p, &holdout.label, ctx.fraction, ctx.seed))
                .transpose()?;
            let report = evaluate(&m, &h, t.as_ref())?;
            ctx.emit(&format!("eval_{}.json", report.model), &json_text(&report)?)?;
        }
        Command::Compare { reports, gap_flag } => {
            let reports: Vec<EvaluationReport> = reports
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                    Ok(serde_json::from_str(&text)?)
                })
                .collect::<Result<_, Error>>()?;
            let table = compare_models_with(&reports, gap_flag);
            let csv = csv_text(|b| table.write_csv(b))?;
            match &ctx.out {
                Some(_) => {
                    let dir = ctx.out_dir()?;
                    write(&dir.join("comparison.csv"), &csv)?;
                    write(&dir.join("comparison.json"), &json_text(&table)?)?;
                }
                None => print!("{csv}"),
            }
        }
        Command::Synth { records, features, separation, shift, test_balance } => {
            let mut drift = Drift::uniform_shift(features, shift);
            drift.prior_shift = test_balance;
            let cfg = SynthConfig::separated(records, features, separation, ctx.seed).with_drift(drift);
            let (train, test) = generate_pair(&cfg)?;
            let dir = ctx.out_dir()?;
            write_csv(&train, dir.join("train.csv"))?;
            write_csv(&test, dir.join("test.csv"))?;
            ctx.say(format!("wrote {} and {}", dir.join("train.csv").display(), dir.join("test.csv").display()));
        }
        Command::Run { config } => {
            if !config.is_file() {
                return Err(Failure::Usage(format!("config file not found: {}", config.display())));
            }
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = &ctx.out {
                cfg.output_dir = Some(out.clone());
            }
            let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("run"));
            let summary = run_experiment_in(&cfg, &out)?;
            ctx.say(csv_text(|b| summary.comparison.write_csv(b))?.trim_end());
            ctx.say(format!("run directory: {}", summary.output_dir.display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        fraction: cli.fraction,
        quiet: cli.quiet,
    };
    match execute(cli.command, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
