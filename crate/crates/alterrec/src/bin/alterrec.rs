//! Command-line front end: data generation, training, evaluation, the
//! modality-imbalance diagnostic, and hyperparameter sweeps. All heavy
//! lifting lives in the library; this file only parses arguments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use alterrec::commands::{
    cmd_diagnose, cmd_evaluate, cmd_gen_data, cmd_sweep, cmd_train, init_thread_pool, Split,
    TrainMode,
};
use alterrec::config::RunConfig;
use alterrec::corpus::SyntheticSpec;
use alterrec::evalkit::SweepParam;

#[derive(Parser)]
#[command(name = "alterrec", version, about = "Session-based recommendation with alternately trained ID and text networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (sessions + text features)
    GenData(GenDataArgs),
    /// Train one of the model variants
    Train(TrainArgs),
    /// Evaluate a checkpoint on a split
    Evaluate(EvaluateArgs),
    /// Reproduce the modality-imbalance study on the fusion baseline
    Diagnose(DiagnoseArgs),
    /// Sweep alpha (re-score) or k2 (retrain)
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long)]
    items: usize,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 2000)]
    train_sessions: usize,
    #[arg(long, default_value_t = 200)]
    val_sessions: usize,
    #[arg(long, default_value_t = 400)]
    test_sessions: usize,
    #[arg(long, default_value_t = 2)]
    min_len: usize,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    #[arg(long, default_value_t = 0.8)]
    id_signal: f64,
    #[arg(long, default_value_t = 0.8)]
    text_informativeness: f64,
    #[arg(long, default_value_t = 64)]
    feature_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// alterrec | alterrec-aug | alterrec-random | id-only | text-only | nfrec-sum | nfrec-concat
    #[arg(long)]
    mode: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// inclusive upper popularity edges, e.g. 30,100
    #[arg(long, value_delimiter = ',', default_value = "30,100")]
    bucket_edges: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// alpha | k2
    #[arg(long)]
    param: String,
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_overrides(config: &mut RunConfig, args: &TrainArgs) {
    if let Some(v) = args.seed {
        config.train.seed = v;
    }
    if let Some(v) = args.alpha {
        config.train.alpha = v;
    }
    if let Some(v) = args.k1 {
        config.train.k1 = v;
    }
    if let Some(v) = args.k2 {
        config.train.k2 = v;
    }
    if let Some(v) = args.m_max {
        config.train.m_max = v;
    }
    if let Some(v) = args.learning_rate {
        config.train.learning_rate = v;
    }
    if let Some(v) = args.dropout {
        config.train.dropout = v;
    }
    if let Some(v) = args.batch_size {
        config.train.batch_size = v;
    }
    if let Some(v) = &args.model_dir {
        config.model_dir = v.clone();
    }
}

fn run() -> alterrec::Result<()> {
    init_thread_pool()?;
    let cli = Cli::parse();
    match cli.command {
        Command::GenData(args) => {
            let spec = SyntheticSpec {
                num_items: args.items,
                num_clusters: args.clusters,
                train_sessions: args.train_sessions,
                val_sessions: args.val_sessions,
                test_sessions: args.test_sessions,
                min_len: args.min_len,
                max_len: args.max_len,
                id_signal: args.id_signal,
                text_informativeness: args.text_informativeness,
                feature_dim: args.feature_dim,
                seed: args.seed,
            };
            let summary = cmd_gen_data(&spec, &args.out)?;
            println!(
                "wrote {} items, {} train / {} val / {} test sessions, {}-dim features to {}",
                summary.num_items,
                summary.train,
                summary.val,
                summary.test,
                summary.feature_dim,
                summary.out_dir.display()
            );
        }
        Command::Train(args) => {
            let mode: TrainMode = args.mode.parse()?;
            let mut config = RunConfig::load(&args.config)?;
            apply_overrides(&mut config, &args);
            let outcome = cmd_train(&config, mode)?;
            for record in &outcome.log {
                println!("{}", serde_json::to_string(record).expect("record serializes"));
            }
            println!(
                "best epoch {} (val hits@20 {:.4}); checkpoint {}",
                outcome.best_epoch,
                outcome.best_val_hits20,
                outcome.checkpoint_path.display()
            );
        }
        Command::Evaluate(args) => {
            let split: Split = args.split.parse()?;
            let report = cmd_evaluate(
                &args.checkpoint,
                &args.data,
                args.features.as_deref(),
                split,
                args.alpha,
                &args.bucket_edges,
                Default::default(),
                args.out.as_deref(),
            )?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::Diagnose(args) => {
            let mut config = RunConfig::load(&args.config)?;
            if let Some(v) = args.seed {
                config.train.seed = v;
            }
            if let Some(v) = args.m_max {
                config.train.m_max = v;
            }
            if let Some(v) = &args.model_dir {
                config.model_dir = v.clone();
            }
            let outcome = cmd_diagnose(&config)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
            );
            println!(
                "log: {}; summary: {}",
                outcome.log_path.display(),
                outcome.summary_path.display()
            );
        }
        Command::Sweep(args) => {
            let param: SweepParam = args.param.parse()?;
            let config = RunConfig::load(&args.config)?;
            let outcome = cmd_sweep(
                param,
                &args.values,
                &config,
                args.checkpoint.as_deref(),
                args.out.as_deref(),
            )?;
            print!("{}", outcome.csv);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
