//! Run configuration: a TOML file with `[sampler]`, `[respondent]`,
//! `[target]`/`[targets.<object>]` and `[output]` sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::color::Dimension;
use crate::diagnostics::HueMetric;
use crate::respondent::{LlmConfig, MatchRule, TargetSpec};
use crate::sampler::{Method, SamplerConfig, DEFAULT_OBJECTS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.to_string(), message: message.into() }
    }

    /// Dotted path of the offending field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Missing(f) | ConfigError::Invalid { field: f, .. } => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RespondentKind {
    Oracle,
    Llm,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentSettings {
    pub kind: RespondentKind,
    /// Present exactly when `kind` is `llm`.
    pub llm: Option<LlmConfig>,
    /// Directory of logs to read back when `kind` is `replay`.
    pub replay_dir: Option<PathBuf>,
    pub match_rule: MatchRule,
    /// Extra attempts the run supervisor makes after a transport error.
    pub transport_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Reference histogram file, or a directory of `<object>.txt` files.
    pub reference: Option<PathBuf>,
    pub render: bool,
    pub progression_step: usize,
    pub hue_metric: HueMetric,
    pub burn_in: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub objects: Vec<String>,
    pub methods: Vec<Method>,
    /// Shared sampler settings; `method` is overwritten per run.
    pub sampler: SamplerConfig,
    /// Chains run at once.
    pub concurrency: usize,
    pub respondent: RespondentSettings,
    /// Default oracle target for every object.
    pub target: Option<TargetSpec>,
    /// Per-object oracle targets, overriding `target`.
    pub targets: BTreeMap<String, TargetSpec>,
    pub output: OutputSettings,
}

impl RunConfig {
    /// Oracle target for an object, if one is configured.
    pub fn target_for(&self, object: &str) -> Option<&TargetSpec> {
        self.targets
            .get(object)
            .or_else(|| self.targets.iter().find(|(k, _)| k.eq_ignore_ascii_case(object)).map(|(_, v)| v))
            .or(self.target.as_ref())
    }

    /// Hex SHA-256 of the settings that shape the chains, used to detect
    /// config drift in logs. Output settings are left out so the same run
    /// written to two directories gets one digest.
    pub fn digest(&self) -> String {
        let shaping = serde_json::json!({
            "objects": self.objects,
            "methods": self.methods,
            "sampler": self.sampler,
            "respondent": self.respondent,
            "target": self.target,
            "targets": self.targets,
        });
        let json = serde_json::to_vec(&shaping).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.objects.is_empty() {
            return Err(ConfigError::invalid("objects", "at least one object is required"));
        }
        if let Some(o) = self.objects.iter().find(|o| o.trim().is_empty()) {
            return Err(ConfigError::invalid("objects", format!("empty object name {o:?}")));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::invalid("method", "at least one method is required"));
        }
        self.sampler.validate().map_err(|e| ConfigError::invalid("sampler", e.to_string()))?;
        match self.respondent.kind {
            RespondentKind::Oracle => {
                for object in &self.objects {
                    let spec = self.target_for(object).ok_or_else(|| ConfigError::Missing("target".into()))?;
                    spec.validate().map_err(|e| ConfigError::invalid(&format!("targets.{object}"), e.to_string()))?;
                }
            }
            RespondentKind::Llm => {
                let llm = self.respondent.llm.as_ref().ok_or_else(|| ConfigError::Missing("respondent.endpoint".into()))?;
                if llm.temperature < 0.0 || !llm.temperature.is_finite() {
                    return Err(ConfigError::invalid("respondent.temperature", "must be >= 0"));
                }
            }
            RespondentKind::Replay => {
                if self.respondent.replay_dir.is_none() {
                    return Err(ConfigError::Missing("respondent.replay_dir".into()));
                }
            }
        }
        if let MatchRule::Threshold(f) = self.respondent.match_rule {
            if !(0.0..=1.0).contains(&f) {
                return Err(ConfigError::invalid("respondent.match_threshold", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MethodField {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampler {
    iterations: Option<usize>,
    chains: Option<usize>,
    proposal_variance: Option<f64>,
    uniform_jump: Option<f64>,
    gibbs_order: Option<Vec<String>>,
    gibbs_sweep_counting: Option<bool>,
    seed: Option<u64>,
    concurrency: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRespondent {
    kind: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
    api_key_env: Option<String>,
    temperature: Option<f64>,
    max_retries: Option<u32>,
    timeout_secs: Option<f64>,
    max_concurrency: Option<usize>,
    transport_retries: Option<u32>,
    match_threshold: Option<f64>,
    replay_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    reference: Option<PathBuf>,
    render: Option<bool>,
    progression_step: Option<usize>,
    hue_metric: Option<String>,
    burn_in: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    objects: Option<Vec<String>>,
    method: Option<MethodField>,
    #[serde(default)]
    sampler: RawSampler,
    #[serde(default)]
    respondent: RawRespondent,
    target: Option<TargetSpec>,
    #[serde(default)]
    targets: BTreeMap<String, TargetSpec>,
    #[serde(default)]
    output: RawOutput,
}

fn parse_methods(field: Option<MethodField>) -> Result<Vec<Method>, ConfigError> {
    let names = match field {
        None => return Ok(Method::ALL.to_vec()),
        Some(MethodField::One(s)) if s.eq_ignore_ascii_case("all") => return Ok(Method::ALL.to_vec()),
        Some(MethodField::One(s)) => vec![s],
        Some(MethodField::Many(v)) => v,
    };
    let mut methods = Vec::new();
    for name in names {
        let m: Method = name.parse().map_err(|e: crate::sampler::SamplerError| ConfigError::invalid("method", e.to_string()))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    Ok(methods)
}

fn parse_dimension(name: &str) -> Result<Dimension, ConfigError> {
    match name.to_ascii_lowercase().as_str() {
        "h" | "hue" => Ok(Dimension::Hue),
        "s" | "saturation" => Ok(Dimension::Saturation),
        "l" | "lightness" => Ok(Dimension::Lightness),
        other => Err(ConfigError::invalid("sampler.gibbs_order", format!("unknown dimension {other:?}"))),
    }
}

/// Parses, defaults and validates a config from TOML text. Relative paths are
/// resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let defaults = SamplerConfig::default();
    let methods = parse_methods(raw.method)?;
    let gibbs_order = match raw.sampler.gibbs_order {
        Some(names) => names.iter().map(|n| parse_dimension(n)).collect::<Result<Vec<_>, _>>()?,
        None => defaults.gibbs_order.clone(),
    };
    let sampler = SamplerConfig {
        method: methods[0],
        iterations: raw.sampler.iterations.unwrap_or(defaults.iterations),
        chains: raw.sampler.chains.unwrap_or(defaults.chains),
        proposal_variance: raw.sampler.proposal_variance.unwrap_or(defaults.proposal_variance),
        uniform_jump: raw.sampler.uniform_jump.unwrap_or(defaults.uniform_jump),
        gibbs_order,
        gibbs_sweep_counting: raw.sampler.gibbs_sweep_counting.unwrap_or(false),
        seed: raw.sampler.seed.unwrap_or(defaults.seed),
        initial_state: None,
    };

    let r = raw.respondent;
    let kind = match r.kind.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("oracle") => RespondentKind::Oracle,
        Some("llm") => RespondentKind::Llm,
        Some("replay") => RespondentKind::Replay,
        Some(other) => {
            return Err(ConfigError::invalid("respondent.kind", format!("{other:?}; expected oracle, llm or replay")))
        }
    };
    let llm = if kind == RespondentKind::Llm {
        let endpoint = r.endpoint.ok_or_else(|| ConfigError::Missing("respondent.endpoint".into()))?;
        let model = r.model.ok_or_else(|| ConfigError::Missing("respondent.model".into()))?;
        let mut llm = LlmConfig::new(endpoint, model);
        llm.api_key_env = r.api_key_env.or_else(|| Some("OPENAI_API_KEY".into()));
        llm.temperature = r.temperature.unwrap_or(1.0);
        llm.max_retries = r.max_retries.unwrap_or(3);
        if let Some(t) = r.timeout_secs {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::invalid("respondent.timeout_secs", "must be positive"));
            }
            llm.timeout = Duration::from_secs_f64(t);
        }
        llm.max_concurrency = r.max_concurrency.unwrap_or(llm.max_concurrency).max(1);
        Some(llm)
    } else {
        None
    };
    let respondent = RespondentSettings {
        kind,
        llm,
        replay_dir: r.replay_dir.map(|p| base.join(p)),
        match_rule: r.match_threshold.map_or(MatchRule::Graded, MatchRule::Threshold),
        transport_retries: r.transport_retries.unwrap_or(2),
    };

    let hue_metric = match raw.output.hue_metric {
        Some(s) => s.parse().map_err(|e: String| ConfigError::invalid("output.hue_metric", e))?,
        None => HueMetric::Linear,
    };
    let output = OutputSettings {
        dir: base.join(raw.output.dir.unwrap_or_else(|| PathBuf::from("out"))),
        reference: raw.output.reference.map(|p| base.join(p)),
        render: raw.output.render.unwrap_or(true),
        progression_step: raw.output.progression_step.unwrap_or(10).max(1),
        hue_metric,
        burn_in: raw.output.burn_in.unwrap_or(0),
    };

    let concurrency = raw
        .sampler
        .concurrency
        .or_else(|| respondent.llm.as_ref().map(|l| l.max_concurrency))
        .unwrap_or(1)
        .max(1);
    let config = RunConfig {
        objects: raw.objects.unwrap_or_else(|| DEFAULT_OBJECTS.iter().map(|s| s.to_string()).collect()),
        methods,
        sampler,
        concurrency,
        respondent,
        target: raw.target,
        targets: raw.targets,
        output,
    };
    config.validate()?;
    Ok(config)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}
