//! Command-line front end: `run`, `diagnose`, `report` and `render`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use hsl_elicit::config::{load_config, RunConfig};
use hsl_elicit::diagnostics::{AlignmentOptions, DiagnosticsError, HueMetric};
use hsl_elicit::reference::load_references;
use hsl_elicit::report::report_text;
use hsl_elicit::run::{diagnose, diagnosis_text, execute, load_chain_logs, write_alignment, write_diagnoses, write_figures};
use hsl_elicit::sampler::Method;

#[derive(Debug, Parser)]
#[command(name = "hsl-elicit", version, about = "Sample color representations from a respondent and analyze the chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment from a config file.
    Run(RunArgs),
    /// Cumulative R-hat traces from chain logs.
    Diagnose(DiagnoseArgs),
    /// Alignment of logged samples with a reference histogram.
    Report(ReportArgs),
    /// Color strips and scatter plots from chain logs.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restricts the run to these methods (repeatable).
    #[arg(long)]
    method: Vec<String>,
    /// Restricts the run to these objects (repeatable).
    #[arg(long)]
    object: Vec<String>,
    /// Reference histogram file or directory.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    hue_metric: Option<HueMetric>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Debug, Args)]
struct LogArgs {
    /// Chain log files or directories holding them.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    /// Config the logs are expected to come from; a mismatch is reported.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Only chains of these methods (repeatable).
    #[arg(long)]
    method: Vec<String>,
    /// Only chains of these objects (repeatable).
    #[arg(long)]
    object: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    logs: LogArgs,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    logs: LogArgs,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = HueMetric::Linear)]
    hue_metric: HueMetric,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    logs: LogArgs,
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    names.iter().map(|n| n.parse::<Method>().map_err(anyhow::Error::from)).collect()
}

fn apply_run_overrides(cfg: &mut RunConfig, args: &RunArgs) -> Result<()> {
    if let Some(seed) = args.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if !args.method.is_empty() {
        cfg.methods = parse_methods(&args.method)?;
    }
    if !args.object.is_empty() {
        cfg.objects = args.object.clone();
    }
    if let Some(r) = &args.reference {
        cfg.output.reference = Some(r.clone());
    }
    if let Some(m) = args.hue_metric {
        cfg.output.hue_metric = m;
    }
    if let Some(b) = args.burn_in {
        cfg.output.burn_in = b;
    }
    cfg.validate()?;
    Ok(())
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_run_overrides(&mut cfg, &args)?;
    let summary = execute(&cfg)?;
    write!(out, "{}", summary.text())?;
    Ok(())
}

struct Loaded {
    chains: Vec<hsl_elicit::sampler::ChainOutput>,
    out_dir: PathBuf,
}

fn load(args: &LogArgs, err: &mut dyn Write) -> Result<Loaded> {
    let digest = match &args.config {
        Some(p) => Some(load_config(p)?.digest()),
        None => None,
    };
    let loaded = load_chain_logs(&args.logs, digest.as_deref())?;
    for w in &loaded.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let methods = parse_methods(&args.method)?;
    let chains: Vec<_> = loaded
        .chains
        .into_iter()
        .filter(|c| methods.is_empty() || methods.contains(&c.method))
        .filter(|c| args.object.is_empty() || args.object.iter().any(|o| o.eq_ignore_ascii_case(&c.object)))
        .collect();
    if chains.is_empty() {
        bail!("no chains left after filtering");
    }
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded { chains, out_dir })
}

fn drop_burn_in(chains: &mut [hsl_elicit::sampler::ChainOutput], burn_in: usize) {
    for c in chains {
        let n = burn_in.min(c.samples.len());
        c.samples.drain(..n);
    }
}

fn cmd_diagnose(args: DiagnoseArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut loaded = load(&args.logs, err)?;
    drop_burn_in(&mut loaded.chains, args.burn_in);
    let diagnoses = diagnose(&loaded.chains).map_err(|e| match e {
        DiagnosticsError::TooFewChains(n) => {
            anyhow::anyhow!("R-hat needs at least 2 complete chains per object and method; found {n}")
        }
        other => other.into(),
    })?;
    write!(out, "{}", diagnosis_text(&diagnoses))?;
    if args.logs.out.is_some() {
        write_diagnoses(&diagnoses, &loaded.out_dir)?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let loaded = load(&args.logs, err)?;
    let Some(reference) = &args.reference else {
        let object = loaded.chains[0].object.clone();
        bail!("{}; pass --reference with a histogram file or directory", DiagnosticsError::MissingReference(object));
    };
    let mut objects: Vec<String> = Vec::new();
    for c in &loaded.chains {
        if !objects.contains(&c.object) {
            objects.push(c.object.clone());
        }
    }
    let references = load_references(reference, &objects)?;
    let options = AlignmentOptions { hue_metric: args.hue_metric, burn_in: args.burn_in, ..Default::default() };
    let report = write_alignment(&loaded.chains, &references, options, &loaded.out_dir)?;
    write!(out, "{}", report_text(&report))?;
    Ok(())
}

fn cmd_render(args: RenderArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let loaded = load(&args.logs, err)?;
    write_figures(&loaded.chains, &loaded.out_dir)?;
    let markov: Vec<_> = loaded.chains.iter().filter(|c| c.method.is_markov()).cloned().collect();
    match diagnose(&markov) {
        Ok(d) => write_diagnoses(&d, &loaded.out_dir)?,
        Err(e) => writeln!(err, "warning: no R-hat plots: {e}")?,
    }
    writeln!(out, "figures written to {}", loaded.out_dir.join("figures").display())?;
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Errors go to `err` as one diagnostic line per cause.
pub fn cli_main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Diagnose(a) => cmd_diagnose(a, out, err),
        Command::Report(a) => cmd_report(a, out, err),
        Command::Render(a) => cmd_render(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            for cause in e.chain().skip(1) {
                let _ = writeln!(err, "  caused by: {cause}");
            }
            1
        }
    }
}

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    cli_main_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
