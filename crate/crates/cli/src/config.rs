use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use symtrace_core::llm::{Backend, RemoteBackend, RemoteConfig, SimulatedReasoner};
use symtrace_core::supervision::McConfig;
use symtrace_core::trajectory::{PromptOptions, PromptView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// The deterministic simulated reasoner.
    Mock,
    Remote,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ViewSetting {
    Nl,
    Fol,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Symbolic,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub kind: BackendKind,
    pub base_url: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout_s: u64,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    pub parallelism: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub corruption_rate: f64,
    pub slip_rate: f64,
}

impl Default for BackendSettings {
    fn default() -> Self {
        let remote = RemoteConfig::default();
        let mock = SimulatedReasoner::default();
        BackendSettings {
            kind: BackendKind::Mock,
            base_url: remote.base_url,
            model: "mock".into(),
            api_key_env: None,
            timeout_s: remote.timeout_s,
            max_retries: remote.max_retries,
            retry_base_ms: remote.retry_base_ms,
            parallelism: 4,
            temperature: 0.7,
            max_tokens: 2048,
            corruption_rate: mock.corruption_rate,
            slip_rate: mock.slip_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSettings {
    pub lengths: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    pub distractors: usize,
}

impl Default for ProblemSettings {
    fn default() -> Self {
        ProblemSettings {
            lengths: vec![7, 8, 9],
            count: 300,
            seed: 0,
            distractors: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSettings {
    pub n_shots: usize,
    /// Samples per problem.
    pub n: usize,
    /// Sample `i` of every problem is requested with `seed + i`.
    pub seed: u64,
    /// Defaults to `both` for the mock backend and `nl` otherwise.
    pub prompt_view: Option<ViewSetting>,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        GenerationSettings {
            n_shots: 1,
            n: 4,
            seed: 0,
            prompt_view: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub n_samples: usize,
    pub k: usize,
    pub temperature: f64,
    pub max_prompt_chars: Option<usize>,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_samples: 10,
            k: 1,
            temperature: 0.7,
            max_prompt_chars: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSettings {
    pub step_threshold: f64,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        SelectionSettings {
            step_threshold: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpoSettings {
    pub threshold: f64,
}

impl Default for DpoSettings {
    fn default() -> Self {
        DpoSettings { threshold: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSettings {
    pub kind: ScorerKind,
    pub url: Option<String>,
    pub timeout_s: u64,
}

impl Default for ScorerSettings {
    fn default() -> Self {
        ScorerSettings {
            kind: ScorerKind::Symbolic,
            url: None,
            timeout_s: 60,
        }
    }
}

/// Default file locations, used when a command is given no path flag.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub problems: Option<PathBuf>,
    pub traces: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub verdicts: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub selected: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub prm: Option<PathBuf>,
    pub sft: Option<PathBuf>,
    pub dpo: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub backend: BackendSettings,
    pub problems: ProblemSettings,
    pub generation: GenerationSettings,
    pub mc: McSettings,
    pub selection: SelectionSettings,
    pub dpo: DpoSettings,
    pub scorer: ScorerSettings,
    pub paths: PathSettings,
}

impl PipelineConfig {
    /// The built-in defaults overlaid with `path`, if given. Relative paths in
    /// the file's `paths` section resolve against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut config.paths;
        for slot in [
            &mut p.problems,
            &mut p.traces,
            &mut p.labels,
            &mut p.verdicts,
            &mut p.scores,
            &mut p.selected,
            &mut p.pairs,
            &mut p.prm,
            &mut p.sft,
            &mut p.dpo,
        ] {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} must be within [0, 1], got {v}");
            }
            Ok(())
        };
        unit("selection.step_threshold", self.selection.step_threshold)?;
        unit("dpo.threshold", self.dpo.threshold)?;
        unit("backend.corruption_rate", self.backend.corruption_rate)?;
        unit("backend.slip_rate", self.backend.slip_rate)?;
        if self.mc.k == 0 || self.mc.n_samples < self.mc.k {
            bail!(
                "mc needs n_samples >= k >= 1, got n_samples={} k={}",
                self.mc.n_samples,
                self.mc.k
            );
        }
        if self.backend.parallelism == 0 || self.backend.max_tokens == 0 {
            bail!("backend.parallelism and backend.max_tokens must be positive");
        }
        for (name, t) in [
            ("backend.temperature", self.backend.temperature),
            ("mc.temperature", self.mc.temperature),
        ] {
            if !(t >= 0.0) {
                bail!("{name} must be non-negative, got {t}");
            }
        }
        if self.generation.n_shots == 0 {
            bail!("generation.n_shots must be positive");
        }
        Ok(())
    }

    pub fn prompt_options(&self) -> PromptOptions {
        let view = match self.generation.prompt_view {
            Some(ViewSetting::Nl) => PromptView::Nl,
            Some(ViewSetting::Fol) => PromptView::Fol,
            Some(ViewSetting::Both) => PromptView::Both,
            None if self.backend.kind == BackendKind::Mock => PromptView::Both,
            None => PromptView::Nl,
        };
        PromptOptions {
            n_shots: self.generation.n_shots,
            view,
        }
    }

    pub fn make_backend(&self) -> Box<dyn Backend> {
        let b = &self.backend;
        match b.kind {
            BackendKind::Mock => Box::new(SimulatedReasoner::new(b.corruption_rate, b.slip_rate)),
            BackendKind::Remote => Box::new(RemoteBackend::new(RemoteConfig {
                base_url: b.base_url.clone(),
                api_key_env: b.api_key_env.clone(),
                timeout_s: b.timeout_s,
                max_retries: b.max_retries,
                retry_base_ms: b.retry_base_ms,
            })),
        }
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_samples: self.mc.n_samples,
            k: self.mc.k,
            temperature: self.mc.temperature,
            max_tokens: self.backend.max_tokens,
            model: self.backend.model.clone(),
            seed: Some(self.generation.seed),
            prompt: self.prompt_options(),
            max_prompt_chars: self.mc.max_prompt_chars,
            parallelism: self.backend.parallelism,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mc": {"k": 2}, "paths": {"traces": "t.jsonl"}}"#).unwrap();
        let c = PipelineConfig::load(Some(&path)).unwrap();
        assert_eq!(c.mc.k, 2);
        assert_eq!(c.mc.n_samples, 10);
        assert_eq!(c.dpo.threshold, 0.25);
        assert_eq!(c.paths.traces, Some(dir.path().join("t.jsonl")));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_ranges_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mc": {"samples": 2}}"#).unwrap();
        assert!(PipelineConfig::load(Some(&path)).is_err());
        let mut c = PipelineConfig::default();
        c.mc.k = 11;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.dpo.threshold = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn mock_defaults_to_formalized_prompts() {
        let mut c = PipelineConfig::default();
        assert_eq!(c.prompt_options().view, PromptView::Both);
        c.backend.kind = BackendKind::Remote;
        assert_eq!(c.prompt_options().view, PromptView::Nl);
    }
}
