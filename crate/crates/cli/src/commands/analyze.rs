use std::path::{Path, PathBuf};

use biphoton_core::{
    g2_cross, g2_peak, heralded_g2c, heralding_efficiency, hom_profile, tagstream, CorrelationHistogram,
    TagStream,
};
use clap::Args;
use serde_json::{json, Value};

use super::{emit, write_file};
use crate::config::{overlay, AnalysisSpec, ChannelSpec, FileConfig};
use crate::error::{CliError, CliResult};

/// Bins this far before zero delay, or beyond the peak region, form the
/// reported g2 baseline.
const BASELINE_BEFORE_PS: f64 = -1_000.0;
const BASELINE_AFTER_PS: f64 = 10_000.0;

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Tag file (`.bpl`, or CSV when the extension is `.csv`).
    pub input: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisSpec,
    #[command(flatten)]
    pub channels: ChannelSpec,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the binned table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub g2: bool,
    #[arg(long)]
    pub herald: bool,
    #[arg(long)]
    pub autocorr: bool,
    #[arg(long)]
    pub hom: bool,
    /// Directory for `g2.csv` and `hom.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

struct Context {
    stream: TagStream,
    analysis: AnalysisSpec,
    channels: ChannelSpec,
    input: PathBuf,
}

impl Context {
    fn load(args: &InputArgs, file: &FileConfig) -> CliResult<Self> {
        let stream = tagstream::load(&args.input).map_err(|e| match e {
            biphoton_core::Error::Io(io) if io.kind() != std::io::ErrorKind::InvalidData => {
                CliError::usage(format!("cannot read {}: {io}", args.input.display()))
            }
            e => CliError::from(e),
        })?;
        Ok(Context {
            stream,
            analysis: overlay(&file.analysis, &args.analysis),
            channels: overlay(&file.channels, &args.channels).filled(),
            input: args.input.clone(),
        })
    }

    fn report(&self, command: &str, sections: Vec<(&str, Value)>) -> Value {
        let mut root = json!({
            "command": command,
            "config": { "analysis": self.analysis.filled(), "channels": self.channels },
            "input": self.input,
            "tags": self.stream.len(),
        });
        for (k, v) in sections {
            root[k] = v;
        }
        root
    }

    fn g2(&self, csv: Option<&Path>) -> CliResult<Value> {
        let c = &self.channels;
        let h = g2_cross(&self.stream, c.idler.unwrap(), c.signal.unwrap(), &self.analysis.histogram()?)?;
        if let Some(path) = csv {
            write_file(path, |w| h.write_csv(w))?;
        }
        let (tau, g2max) = g2_peak(&h)?;
        Ok(json!({
            "idler_singles": h.idler_singles,
            "signal_singles": h.signal_singles,
            "duration_s": h.duration_ps as f64 * 1e-12,
            "bins": h.counts.len(),
            "bin_width_ps": h.bin_width_ps,
            "peak_tau_ps": tau,
            "g2_max": g2max,
            "baseline_g2": baseline(&h),
            "csv": csv,
        }))
    }

    fn herald(&self) -> CliResult<Value> {
        let c = &self.channels;
        let r = heralding_efficiency(
            &self.stream,
            c.idler.unwrap(),
            c.signal.unwrap(),
            &self.analysis.window()?,
            self.analysis.acquisition_ps()?,
        )?;
        Ok(serde_json::to_value(r).expect("serializes"))
    }

    fn autocorr(&self) -> CliResult<Value> {
        let c = &self.channels;
        let r = heralded_g2c(&self.stream, c.idler.unwrap(), c.split_t.unwrap(), c.split_r.unwrap(), &self.analysis.window()?)?;
        Ok(serde_json::to_value(r).expect("serializes"))
    }

    fn hom(&self, csv: Option<&Path>) -> CliResult<Value> {
        let c = &self.channels;
        let p = hom_profile(
            &self.stream,
            c.idler.unwrap(),
            c.idler_b.unwrap(),
            c.hom_out_1.unwrap(),
            c.hom_out_2.unwrap(),
            &self.analysis.window()?,
            &self.analysis.hom()?,
        )?;
        if let Some(path) = csv {
            write_file(path, |w| p.write_csv(w))?;
        }
        Ok(json!({
            "visibility": p.visibility,
            "central": p.central,
            "baseline": p.baseline,
            "bins": p.counts.len(),
            "csv": csv,
        }))
    }
}

/// Mean g2 over bins away from the correlation peak, if the range has any.
fn baseline(h: &CorrelationHistogram) -> Option<f64> {
    let g2 = h.g2();
    let far: Vec<f64> = (0..g2.len())
        .filter(|&k| {
            let c = h.bin_center(k);
            !(BASELINE_BEFORE_PS..BASELINE_AFTER_PS).contains(&c)
        })
        .map(|k| g2[k])
        .collect();
    (!far.is_empty()).then(|| far.iter().sum::<f64>() / far.len() as f64)
}

pub fn g2(args: &TableArgs, file: &FileConfig) -> CliResult<()> {
    let ctx = Context::load(&args.input, file)?;
    let csv = args.out.as_ref().map(|p| file.output_path(p));
    let section = ctx.g2(csv.as_deref())?;
    emit(&ctx.report("g2", vec![("g2", section)]))
}

pub fn herald(args: &InputArgs, file: &FileConfig) -> CliResult<()> {
    let ctx = Context::load(args, file)?;
    let section = ctx.herald()?;
    emit(&ctx.report("herald", vec![("herald", section)]))
}

pub fn autocorr(args: &InputArgs, file: &FileConfig) -> CliResult<()> {
    let ctx = Context::load(args, file)?;
    let section = ctx.autocorr()?;
    emit(&ctx.report("autocorr", vec![("autocorr", section)]))
}

pub fn hom(args: &TableArgs, file: &FileConfig) -> CliResult<()> {
    let ctx = Context::load(&args.input, file)?;
    let csv = args.out.as_ref().map(|p| file.output_path(p));
    let section = ctx.hom(csv.as_deref())?;
    emit(&ctx.report("hom", vec![("hom", section)]))
}

pub fn analyze(args: &AnalyzeArgs, file: &FileConfig) -> CliResult<()> {
    if !(args.g2 || args.herald || args.autocorr || args.hom) {
        return Err(CliError::usage("analyze needs at least one of --g2, --herald, --autocorr, --hom"));
    }
    let ctx = Context::load(&args.input, file)?;
    let dir = args.out_dir.as_ref().map(|d| file.output_path(d));
    let table = |name: &str| dir.as_ref().map(|d| d.join(name));
    let mut sections = Vec::new();
    if args.g2 {
        sections.push(("g2", ctx.g2(table("g2.csv").as_deref())?));
    }
    if args.herald {
        sections.push(("herald", ctx.herald()?));
    }
    if args.autocorr {
        sections.push(("autocorr", ctx.autocorr()?));
    }
    if args.hom {
        sections.push(("hom", ctx.hom(table("hom.csv").as_deref())?));
    }
    emit(&ctx.report("analyze", sections))
}
