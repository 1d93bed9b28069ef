use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use cogsel_core::experiment::{emit_plotdata, run_experiment, write_outputs, Experiment, ExperimentConfig, Workbench};
use cogsel_core::features::{meta_features_from_profile, signal_features, TaskRequirement, SIGNAL_FEATURE_NAMES};
use cogsel_core::pool::{Environment, Sweep};
use cogsel_core::workload::{io as dsio, builtin_dataset, SignalDataset};

#[derive(Parser)]
#[command(name = "cogsel", version, about = "Cognitive algorithm selection for modulation recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one of the built-in datasets into the binary frame format.
    Gen {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump per-frame signal features of a dataset file as CSV.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every grid point on a dataset file and report the oracle label.
    Oracle {
        #[arg(long)]
        dataset: PathBuf,
        /// Task requirement as inline JSON or a path to a JSON file.
        #[arg(long)]
        req: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment schedule and write its result files.
    Run {
        #[arg(long)]
        experiment: Experiment,
        /// Experiment config; every field is optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the series files from a results CSV.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { dataset, seed, out } => gen(&dataset, seed, &out),
        Command::Features { input, out } => features(&input, &out),
        Command::Oracle { dataset, req, seed, out } => oracle(&dataset, &req, seed, &out),
        Command::Run { experiment, config, out } => run(experiment, config.as_deref(), &out),
        Command::Plot { input, out } => plot(&input, &out),
    }
}

fn gen(name: &str, seed: u64, out: &Path) -> Result<()> {
    let ds = builtin_dataset(name, seed)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    dsio::write_frames(&mut w, &ds.train, &ds.test)?;
    w.flush()?;
    Ok(())
}

fn read_dataset(path: &Path) -> Result<SignalDataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (train, test) = dsio::read_frames(BufReader::new(file))?;
    let id = path.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
    Ok(SignalDataset::from_frames(id, train, test)?)
}

fn features(input: &Path, out: &Path) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let (train, test) = dsio::read_frames(BufReader::new(file))?;
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    writeln!(w, "split,index,class,snr_db,{}", SIGNAL_FEATURE_NAMES.join(","))?;
    for (split, frames) in [("train", &train), ("test", &test)] {
        for (i, frame) in frames.iter().enumerate() {
            let values: Vec<String> = signal_features(frame)?.0.iter().map(|v| format!("{v:.9e}")).collect();
            writeln!(w, "{split},{i},{},{},{}", frame.label.name(), frame.snr_db, values.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn oracle(dataset: &Path, req: &str, seed: u64, out: &Path) -> Result<()> {
    let text = if req.trim_start().starts_with('{') {
        req.to_string()
    } else {
        fs::read_to_string(req).with_context(|| format!("reading requirement {req}"))?
    };
    let x: TaskRequirement = serde_json::from_str(&text).context("parsing the task requirement")?;
    x.validate()?;
    let env = Environment::new(Arc::new(read_dataset(dataset)?))?;
    let sweep = Sweep::run(&env, seed)?;
    let label = sweep.oracle(&x);
    let report = json!({
        "dataset": env.id(),
        "requirement": x,
        "seed": seed,
        "meta_features": meta_features_from_profile(&env.profile, &x),
        "sweep": sweep.rows(&x),
        "label": label,
        "label_index": label.index(),
    });
    fs::write(out, serde_json::to_string_pretty(&report)? + "\n").with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn run(kind: Experiment, config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = match config {
        Some(p) => ExperimentConfig::from_json(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ExperimentConfig::default(),
    };
    let bench = Workbench::for_experiment(kind, &cfg)?;
    let output = run_experiment(kind, &cfg, &bench)?;
    write_outputs(out, kind, &cfg, &output)?;
    Ok(())
}

fn plot(input: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let files = emit_plotdata(&text)?;
    if files.is_empty() {
        bail!("no series in {}", input.display());
    }
    fs::create_dir_all(out)?;
    for (name, body) in files {
        fs::write(out.join(name), body)?;
    }
    Ok(())
}
