use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scenegan::fusion::FusionConfig;
use scenegan::gan::TrainConfig;
use scenegan::pipeline::{
    evaluate_dataset, generate_dataset, load_dataset, load_model, predict_dataset, train_dataset, DatasetConfig,
};
use scenegan::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Trajectory prediction with a conditional GAN filtered by scene
/// segmentation.
#[derive(Parser)]
#[command(name = "scenegan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic worlds, driving logs, scenes and a split manifest.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON dataset configuration; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train the generator and discriminator, checkpointing every epoch.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// JSON training configuration; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write fused prediction sets and overlays for the test scenes.
    Predict {
        #[command(flatten)]
        common: FusionArgs,
        /// Only predict for this scene id.
        #[arg(long)]
        instance: Option<String>,
    },
    /// Compare fused predictions against the scene-free baseline.
    Evaluate {
        #[command(flatten)]
        common: FusionArgs,
    },
}

#[derive(Args)]
struct FusionArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON fusion configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl FusionArgs {
    fn resolve(&self) -> Result<FusionConfig, Error> {
        let mut cfg: FusionConfig = read_config(self.config.as_deref())?;
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        echo(&cfg);
        Ok(cfg)
    }
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Error> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::File { path: path.into(), source: Box::new(e.into()) })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn echo<T: Serialize>(cfg: &T) {
    println!("config: {}", serde_json::to_string(cfg).expect("configuration serializes"));
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::File { source, .. } => exit_code(source),
        Error::Config(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::GenDataset { out, seed, config } => {
            let mut cfg: DatasetConfig = read_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            echo(&cfg);
            let s = generate_dataset(&out, &cfg)?;
            for (run, why) in &s.skipped {
                println!("skipped run {run}: {why}");
            }
            println!("logs: {}", s.logs);
            println!("instances: train {} val {} test {}", s.train, s.val, s.test);
            println!("scenes: {}", s.scenes);
        }
        Command::Train { dataset, out, seed, epochs, resume, config } => {
            let mut cfg: TrainConfig = read_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            cfg.validate()?;
            echo(&cfg);
            let data = load_dataset(&dataset)?;
            let trainer = train_dataset(&data, &out, &cfg, resume, |m| {
                let val = m.val_min_ade.map_or("-".to_string(), |v| format!("{v:.4}"));
                println!(
                    "epoch {:>4}  d_loss {:.4}  g_loss {:.4}  variety {:.4}  val_min_ade {val}",
                    m.epoch, m.d_loss, m.g_loss, m.g_variety
                );
            })?;
            println!("trained {} epochs, checkpoint in {}", trainer.epoch, out.display());
        }
        Command::Predict { common, instance } => {
            let cfg = common.resolve()?;
            let model = load_model(&common.checkpoint)?;
            let data = load_dataset(&common.dataset)?;
            for p in predict_dataset(&model, &data, &cfg, instance.as_deref(), &common.out)? {
                println!(
                    "{}: accepted {} of {} proposals, acceptance rate {:.4}, fallback {}",
                    p.scene_id,
                    p.accepted,
                    p.proposals_drawn,
                    p.acceptance_rate,
                    if p.fallback_used { "yes" } else { "no" }
                );
            }
        }
        Command::Evaluate { common } => {
            let cfg = common.resolve()?;
            let model = load_model(&common.checkpoint)?;
            let data = load_dataset(&common.dataset)?;
            let (report, _) = evaluate_dataset(&model, &data, &cfg, &common.out)?;
            print!("{}", report.to_csv());
            println!("instances: {}", report.num_instances);
            println!("mean acceptance rate: {:.4}", report.mean_acceptance_rate);
            println!("fallback instances: {}", report.fallback_count);
            println!("baseline off-road fraction: {:.4}", report.baseline_offroad_fraction);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
