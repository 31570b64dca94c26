use std::collections::BTreeMap;
use std::path::PathBuf;

use biphoton_core::sim::{simulate_heralded_autocorr, simulate_hom_experiment_with, simulate_pairs};
use biphoton_core::tagstream;
use clap::Args;
use log::info;
use serde_json::json;

use super::emit;
use crate::config::{overlay, Experiment, FileConfig, SimulateSpec, SourceSpec};
use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "BIPHOTON_SEED";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceSpec,
    #[command(flatten)]
    pub sim: SimulateSpec,
    /// RNG seed; falls back to the config file, then to BIPHOTON_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output tag file; `.csv` selects CSV, anything else the binary format.
    #[arg(long)]
    pub out: PathBuf,
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> CliResult<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer"))),
        Err(_) => Err(CliError::usage(format!("simulate needs a seed (--seed, config `seed` or {SEED_ENV})"))),
    }
}

pub fn run(args: &SimulateArgs, file: &FileConfig) -> CliResult<()> {
    let seed = resolve_seed(args.seed, file)?;
    let sim = overlay(&file.simulate, &args.sim).filled();
    let experiment = sim.experiment()?;
    let spec_a = overlay(&file.source, &args.source);
    let a = spec_a.build(seed)?;
    let mut config = json!({ "seed": seed, "simulate": sim, "source": spec_a.describe(&a) });

    let stream = match experiment {
        Experiment::Pairs => simulate_pairs(&a)?,
        Experiment::Autocorr => simulate_heralded_autocorr(&a, seed)?,
        Experiment::Hom => {
            // Source B inherits every setting of A that [source_b] leaves open.
            let spec_b = overlay(&spec_a, &file.source_b);
            let b = spec_b.build(seed)?;
            config["source_b"] = serde_json::to_value(spec_b.describe(&b)).expect("serializes");
            simulate_hom_experiment_with(&a, &b, seed, &sim.hom_options())?
        }
    };
    let path = file.output_path(&args.out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let bytes = tagstream::save(&stream, &path)?;
    info!("wrote {} tags to {}", stream.len(), path.display());

    let per_channel: BTreeMap<String, usize> =
        stream.channels().into_iter().map(|c| (c.to_string(), stream.count(c))).collect();
    emit(&json!({
        "command": "simulate",
        "config": config,
        "output": path,
        "bytes": bytes,
        "tags": stream.len(),
        "channels": per_channel,
    }))
}
