//! End-to-end runs: build respondents from a [`RunConfig`], run every method,
//! and write logs, reports, diagnostic traces and figures to the output
//! directory. The pieces used on existing logs are public so the command line
//! can reuse them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::chain_log::{
    collect_log_paths, read_chain_log, read_chain_log_checked, write_chain_log, ChainLogFile, LogError, LogHeader,
    LOG_VERSION,
};
use crate::color::HslColor;
use crate::config::{RespondentKind, RunConfig};
use crate::diagnostics::{
    build_alignment_report, rhat_trace, AlignmentOptions, AlignmentReport, DiagnosticsError, RhatTrace,
    RHAT_THRESHOLD,
};
use crate::grid::GridHistogram;
use crate::kde::Projection;
use crate::reference::{load_references, reference_file_name, slug, write_reference, ReferenceError};
use crate::render::{render_color_strip, render_rhat_trace, render_scatter_kde, RenderError, StripStyle};
use crate::report::{export_report, progression_csv, report_text, rhat_csv, write_text};
use crate::respondent::{
    LatticeTarget, LlmClient, Oracle, ReplayRespondent, Respondent, RespondentError, Supervised,
};
use crate::sampler::{run_experiment, ChainOutput, ChainTask, Method, SamplerConfig, SamplerError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Respondent(#[from] RespondentError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no chain logs found")]
    NoLogs,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Where a chain's log lives below an output directory.
pub fn log_path(out_dir: &Path, object: &str, method: Method, chain_id: usize) -> PathBuf {
    out_dir.join("logs").join(slug(object)).join(method.as_str()).join(format!("chain-{chain_id}.jsonl"))
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub chains: Vec<ChainOutput>,
    pub report: Option<AlignmentReport>,
    pub diagnoses: Vec<Diagnosis>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    /// Plain-text overview: chain counts, R-hat and the alignment table.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let complete = self.chains.iter().filter(|c| c.complete).count();
        let _ = writeln!(out, "chains: {} ({} complete)", self.chains.len(), complete);
        for c in self.chains.iter().filter(|c| !c.complete) {
            let _ = writeln!(
                out,
                "  incomplete: {} {} chain {}: {}",
                c.object,
                c.method,
                c.chain_id,
                c.failure.as_deref().unwrap_or("unknown failure")
            );
        }
        if !self.diagnoses.is_empty() {
            out.push_str("\nR-hat (max over H, S, L):\n");
            out.push_str(&diagnosis_text(&self.diagnoses));
        }
        if let Some(report) = &self.report {
            out.push_str("\nalignment with reference:\n");
            out.push_str(&report_text(report));
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(out, "\noutput: {}", self.out_dir.display());
        out
    }
}

/// Cumulative R-hat of one object and method.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub object: String,
    pub method: Method,
    pub chains: usize,
    pub trace: RhatTrace,
}

fn group(chains: &[ChainOutput]) -> Vec<((String, Method), Vec<&ChainOutput>)> {
    let mut groups: Vec<((String, Method), Vec<&ChainOutput>)> = Vec::new();
    for c in chains {
        let key = (c.object.clone(), c.method);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(c),
            None => groups.push((key, vec![c])),
        }
    }
    groups
}

/// R-hat traces for every object and method among the complete chains.
/// Fails when any group has fewer than two complete chains.
pub fn diagnose(chains: &[ChainOutput]) -> Result<Vec<Diagnosis>, DiagnosticsError> {
    let mut out = Vec::new();
    for ((object, method), members) in group(chains) {
        let samples: Vec<Vec<HslColor>> =
            members.iter().filter(|c| c.complete).map(|c| c.samples.clone()).collect();
        let trace = rhat_trace(&samples)?;
        out.push(Diagnosis { object, method, chains: samples.len(), trace });
    }
    Ok(out)
}

pub fn diagnosis_text(diagnoses: &[Diagnosis]) -> String {
    let mut out = String::new();
    for d in diagnoses {
        let reached = match d.trace.first_below(RHAT_THRESHOLD) {
            Some(t) => format!("<= {RHAT_THRESHOLD} from iteration {t}"),
            None => format!("never <= {RHAT_THRESHOLD}"),
        };
        let _ = writeln!(
            out,
            "  {:<12} {:<16} chains {}  final {:.3}  {}",
            d.object,
            d.method.as_str(),
            d.chains,
            d.trace.last().unwrap_or(f64::NAN),
            reached
        );
    }
    out
}

/// Writes `rhat/<object>_<method>.csv` per diagnosis and one plot per method
/// with a line per object.
pub fn write_diagnoses(diagnoses: &[Diagnosis], out_dir: &Path) -> Result<(), RunError> {
    for d in diagnoses {
        let path = out_dir.join("rhat").join(format!("{}_{}.csv", slug(&d.object), d.method));
        write_text(&path, &rhat_csv(&d.trace)).map_err(io_err(&path))?;
    }
    for method in Method::ALL {
        let traces: Vec<RhatTrace> = diagnoses.iter().filter(|d| d.method == method).map(|d| d.trace.clone()).collect();
        if !traces.is_empty() {
            render_rhat_trace(&traces, &out_dir.join("figures").join(format!("rhat_{method}.png")))?;
        }
    }
    Ok(())
}

/// Color strips and hue-saturation scatters per object and method.
pub fn write_figures(chains: &[ChainOutput], out_dir: &Path) -> Result<(), RunError> {
    let figures = out_dir.join("figures");
    for ((object, method), members) in group(chains) {
        let rows: Vec<Vec<HslColor>> = members.iter().map(|c| c.samples.clone()).collect();
        if rows.iter().all(Vec::is_empty) {
            continue;
        }
        let stem = format!("{}_{}", slug(&object), method);
        render_color_strip(&rows, StripStyle { cell_width: 2, cell_height: 16 }, &figures.join(format!("strip_{stem}.png")))?;
        let pooled: Vec<HslColor> = rows.concat();
        render_scatter_kde(&pooled, Projection::HUE_SATURATION, &figures.join(format!("scatter_{stem}.png")))?;
    }
    Ok(())
}

/// Builds the alignment report and writes `report.csv`, `report.txt` and
/// `progression.csv`.
pub fn write_alignment(
    chains: &[ChainOutput],
    references: &BTreeMap<String, GridHistogram>,
    options: AlignmentOptions,
    out_dir: &Path,
) -> Result<AlignmentReport, RunError> {
    let report = build_alignment_report(chains, references, options)?;
    let csv = out_dir.join("report.csv");
    export_report(&report, &csv).map_err(io_err(&csv))?;
    let prog = out_dir.join("progression.csv");
    write_text(&prog, &progression_csv(&report)).map_err(io_err(&prog))?;
    Ok(report)
}

/// Chains read back from logs, with any config-drift warnings.
#[derive(Debug, Clone, Default)]
pub struct LoadedLogs {
    pub headers: Vec<LogHeader>,
    pub chains: Vec<ChainOutput>,
    pub warnings: Vec<String>,
}

/// Reads every log under `inputs`. With `expected_digest`, logs written under
/// another config produce a warning.
pub fn load_chain_logs(inputs: &[PathBuf], expected_digest: Option<&str>) -> Result<LoadedLogs, RunError> {
    let paths = collect_log_paths(inputs)?;
    if paths.is_empty() {
        return Err(RunError::NoLogs);
    }
    let mut loaded = LoadedLogs::default();
    for path in paths {
        let log = match expected_digest {
            Some(d) => {
                let (log, warning) = read_chain_log_checked(&path, d)?;
                loaded.warnings.extend(warning);
                log
            }
            None => read_chain_log(&path)?,
        };
        if let (Some(header), Some(chain)) = (log.header.clone(), log.to_chain_output()) {
            loaded.headers.push(header);
            loaded.chains.push(chain);
        }
    }
    Ok(loaded)
}

fn replay_log(dir: &Path, task: &ChainTask) -> Result<ReplayRespondent, RespondentError> {
    let candidates = [
        log_path(dir, &task.object, task.method, task.chain_id),
        dir.join(slug(&task.object)).join(task.method.as_str()).join(format!("chain-{}.jsonl", task.chain_id)),
    ];
    let path = candidates
        .iter()
        .find(|p| p.exists())
        .ok_or_else(|| RespondentError::TransportError(format!("no replay log at {}", candidates[0].display())))?;
    let log = read_chain_log(path).map_err(|e| RespondentError::TransportError(e.to_string()))?;
    Ok(ReplayRespondent::new(log.replay_entries()))
}

fn oracle_targets(cfg: &RunConfig) -> Result<BTreeMap<String, Arc<LatticeTarget>>, RunError> {
    let mut built: Vec<(crate::respondent::TargetSpec, Arc<LatticeTarget>)> = Vec::new();
    let mut out = BTreeMap::new();
    for object in &cfg.objects {
        let Some(spec) = cfg.target_for(object) else { continue };
        let target = match built.iter().find(|(s, _)| s == spec) {
            Some((_, t)) => t.clone(),
            None => {
                let t = Arc::new(LatticeTarget::from_spec(spec)?);
                built.push((spec.clone(), t.clone()));
                t
            }
        };
        out.insert(object.clone(), target);
    }
    Ok(out)
}

/// Runs every configured method and writes all outputs under `cfg.output.dir`.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let out_dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let digest = cfg.digest();

    let targets = if cfg.respondent.kind == RespondentKind::Oracle { oracle_targets(cfg)? } else { BTreeMap::new() };
    let llm = cfg.respondent.llm.clone().map(LlmClient::new);
    let backoff = Duration::from_millis(500);
    let factory = |task: &ChainTask| -> Result<Box<dyn Respondent + Send>, RespondentError> {
        match cfg.respondent.kind {
            RespondentKind::Oracle => {
                let target = targets.get(&task.object).ok_or_else(|| RespondentError::DegenerateTarget(format!("no target for {}", task.object)))?;
                Ok(Box::new(Oracle::new(target.clone(), task.respondent_seed).with_rule(cfg.respondent.match_rule)))
            }
            RespondentKind::Llm => {
                let client = llm.clone().ok_or_else(|| RespondentError::TransportError("no endpoint configured".into()))?;
                Ok(Box::new(Supervised::new(client, cfg.respondent.transport_retries, backoff)))
            }
            RespondentKind::Replay => {
                let dir = cfg
                    .respondent
                    .replay_dir
                    .as_deref()
                    .ok_or_else(|| RespondentError::TransportError("no replay directory configured".into()))?;
                Ok(Box::new(replay_log(dir, task)?))
            }
        }
    };

    let mut chains = Vec::new();
    for &method in &cfg.methods {
        let sampler = SamplerConfig { method, ..cfg.sampler.clone() };
        for run in run_experiment(&cfg.objects, &sampler, factory, cfg.concurrency)? {
            let header = LogHeader {
                version: LOG_VERSION,
                config_digest: digest.clone(),
                master_seed: cfg.sampler.seed,
                object: run.task.object.clone(),
                method,
                chain_id: run.task.chain_id,
                sampler_seed: run.task.sampler_seed,
                respondent_seed: run.task.respondent_seed,
                extra: Default::default(),
            };
            let path = log_path(&out_dir, &run.task.object, method, run.task.chain_id);
            write_chain_log(&path, &ChainLogFile::new(header, &run.output))?;
            chains.push(run.output);
        }
    }

    let mut warnings = Vec::new();
    let markov: Vec<ChainOutput> = chains.iter().filter(|c| c.method.is_markov()).cloned().collect();
    let mut diagnoses = Vec::new();
    for ((object, method), members) in group(&markov) {
        let samples: Vec<Vec<HslColor>> = members.iter().filter(|c| c.complete).map(|c| c.samples.clone()).collect();
        match rhat_trace(&samples) {
            Ok(trace) => diagnoses.push(Diagnosis { object, method, chains: samples.len(), trace }),
            Err(e) => warnings.push(format!("no R-hat for {object} {method}: {e}")),
        }
    }
    write_diagnoses(&diagnoses, &out_dir)?;

    let references = match &cfg.output.reference {
        Some(path) => load_references(path, &cfg.objects)?,
        None => {
            let mut refs = BTreeMap::new();
            for (object, target) in &targets {
                let hist = target.grid_histogram();
                let path = out_dir.join("references").join(reference_file_name(object));
                write_reference(&path, &hist)?;
                refs.insert(object.clone(), hist);
            }
            refs
        }
    };
    let options = AlignmentOptions {
        hue_metric: cfg.output.hue_metric,
        burn_in: cfg.output.burn_in,
        progression_step: cfg.output.progression_step,
    };
    let report = if references.is_empty() {
        warnings.push("no reference histograms; alignment report skipped".into());
        None
    } else {
        let covered: Vec<ChainOutput> =
            chains.iter().filter(|c| crate::diagnostics::find_reference(&references, &c.object).is_some()).cloned().collect();
        for object in cfg.objects.iter().filter(|o| crate::diagnostics::find_reference(&references, o).is_none()) {
            warnings.push(format!("no reference histogram for {object}; left out of the report"));
        }
        Some(write_alignment(&covered, &references, options, &out_dir)?)
    };

    if cfg.output.render {
        write_figures(&chains, &out_dir)?;
    }

    let summary = RunSummary { out_dir: out_dir.clone(), chains, report, diagnoses, warnings };
    let path = out_dir.join("summary.txt");
    write_text(&path, &summary.text()).map_err(io_err(&path))?;
    Ok(summary)
}
