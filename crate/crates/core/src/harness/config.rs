//! Experiment configuration: a strict TOML schema layered over
//! per-environment presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advisor::{AdvisorQuality, RemoteConfig, TriggerSchedule};
use crate::envs::{make_task, ENV_NAMES};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sac::SacConfig;
use crate::shaping::ShapingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Varl,
    Sac,
    SacExpertPrefill,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Varl => "varl",
            Algorithm::Sac => "sac",
            Algorithm::SacExpertPrefill => "sac_expert_prefill",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "varl" => Ok(Algorithm::Varl),
            "sac" => Ok(Algorithm::Sac),
            "sac_expert_prefill" | "sac-expert-prefill" => Ok(Algorithm::SacExpertPrefill),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected varl, sac or sac_expert_prefill)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvisorKind {
    Scripted,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdvisorConfig {
    pub kind: AdvisorKind,
    /// Recent-sample size per trigger.
    pub k: usize,
    /// Explicit trigger steps; when absent, `trigger_fractions` of the cutoff.
    pub trigger_steps: Option<Vec<u64>>,
    pub trigger_fractions: Vec<f64>,
    pub quality: AdvisorQuality,
    pub remote: RemoteConfig,
}

impl Default for AdvisorConfig {
    fn default() -> Self {
        Self {
            kind: AdvisorKind::Scripted,
            k: 500,
            trigger_steps: None,
            trigger_fractions: vec![0.1, 0.25, 0.5],
            quality: AdvisorQuality::default(),
            remote: RemoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub env: String,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub max_steps: u64,
    /// Uniform-random steps before the first gradient update.
    pub warmup_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub replay_capacity: usize,
    /// Oracle episodes pushed into the replay buffer for `sac_expert_prefill`.
    pub expert_episodes: usize,
    /// Success (or return-ratio) threshold for steps-to-threshold.
    pub threshold: f64,
    /// Moving-average window, in evaluation points.
    pub smoothing_window: usize,
    pub output_dir: PathBuf,
    pub checkpoints: bool,
    /// How independent seeds are scheduled.
    pub seed_execution: Execution,
    pub sac: SacConfig,
    pub shaping: ShapingConfig,
    pub advisor: AdvisorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "sparse-grid".into(),
            algorithm: Algorithm::Varl,
            seeds: vec![0, 1, 2, 3, 4],
            max_steps: 60_000,
            warmup_steps: 1_000,
            eval_every: 500,
            eval_episodes: 10,
            replay_capacity: 200_000,
            expert_episodes: 10,
            threshold: 0.9,
            smoothing_window: 10,
            output_dir: PathBuf::from("runs"),
            checkpoints: true,
            seed_execution: Execution::Sequential,
            sac: SacConfig::default(),
            shaping: ShapingConfig::default(),
            advisor: AdvisorConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults for `env`. Event-reward discrete tasks use a small fixed
    /// temperature relative to the reward scale: with
    /// `alpha * ln(n) / (1 - gamma)` above the goal reward, the soft-optimal
    /// policy prefers wandering to terminating. Their reward scale of 1000
    /// puts action-value gaps on a footing where a BC weight of 10 is a nudge
    /// rather than an override, and two hidden layers of 32 are plenty.
    pub fn preset(env: &str) -> Result<Self> {
        make_task(env)?;
        let mut cfg = Self {
            env: env.to_string(),
            ..Self::default()
        };
        match env {
            "sparse-grid" | "chain" => {
                cfg.sac.reward_scale = 1000.0;
                cfg.sac.alpha = 0.1;
                cfg.sac.hidden = vec![32, 32];
            }
            "point-reach" => cfg.sac.alpha = 0.01,
            "point-push" => cfg.sac.alpha = 0.05,
            "two-state" => {
                cfg.sac.gamma = 0.9;
                cfg.sac.critic_optimizer.learning_rate = 1e-3;
            }
            _ => {}
        }
        Ok(cfg)
    }

    /// Parses TOML over the preset of the file's `env` (default `sparse-grid`).
    /// Unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        let env = match user.get("env") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::Config("config: `env` must be a string".into())),
            None => Self::default().env,
        };
        let preset = Self::preset(&env)?;
        let mut merged = toml::Table::try_from(&preset).map_err(|e| Error::Config(format!("config: {e}")))?;
        merge(&mut merged, user);
        let cfg: Self = merged.try_into().map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !ENV_NAMES.contains(&self.env.as_str()) {
            return Err(Error::UnknownEnv(self.env.clone()));
        }
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.max_steps == 0 || self.eval_every == 0 || self.eval_episodes == 0 {
            return bad("max_steps, eval_every and eval_episodes must be positive");
        }
        if self.replay_capacity == 0 {
            return bad("replay_capacity must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad("threshold must lie in (0, 1]");
        }
        if self.smoothing_window == 0 {
            return bad("smoothing_window must be positive");
        }
        self.sac.validate()?;
        self.shaping.validate()?;
        self.advisor.quality.validate()?;
        self.schedule()?;
        if self.algorithm == Algorithm::Varl && self.advisor.kind == AdvisorKind::Remote {
            self.advisor.remote.validate()?;
        }
        Ok(())
    }

    /// Trigger schedule; empty for the baselines.
    pub fn schedule(&self) -> Result<TriggerSchedule> {
        if self.algorithm != Algorithm::Varl {
            return Ok(TriggerSchedule::empty());
        }
        match &self.advisor.trigger_steps {
            Some(steps) => TriggerSchedule::new(steps.iter().copied(), self.advisor.k),
            None => TriggerSchedule::from_fractions(&self.advisor.trigger_fractions, self.shaping.cutoff, self.advisor.k),
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub env: Option<String>,
    pub algorithm: Option<Algorithm>,
    pub seeds: Option<Vec<u64>>,
    pub max_steps: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub lambda: Option<f64>,
    pub cutoff: Option<u64>,
    pub kappa: Option<f64>,
    pub k: Option<usize>,
}

impl Overrides {
    /// Applies the overrides. Switching `env` re-bases on that env's preset
    /// while keeping every explicitly configured value from `file`.
    pub fn resolve(&self, file: Option<&str>) -> Result<ExperimentConfig> {
        let mut text = file.unwrap_or("").to_string();
        if let Some(env) = &self.env {
            let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
            table.insert("env".into(), toml::Value::String(env.clone()));
            text = toml::to_string(&table).map_err(|e| Error::Config(format!("config: {e}")))?;
        }
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(m) = self.max_steps {
            cfg.max_steps = m;
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        if let Some(e) = &self.endpoint {
            cfg.advisor.kind = AdvisorKind::Remote;
            cfg.advisor.remote.endpoint = e.clone();
        }
        if let Some(l) = self.lambda {
            cfg.shaping.lambda = l;
        }
        if let Some(n) = self.cutoff {
            cfg.shaping.cutoff = n;
        }
        if let Some(k) = self.kappa {
            cfg.shaping.kappa = k;
        }
        if let Some(k) = self.k {
            cfg.advisor.k = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        for env in ENV_NAMES {
            let cfg = ExperimentConfig::preset(env).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn default_schedule_spans_the_pre_cutoff_window() {
        let cfg = ExperimentConfig::default();
        let s = cfg.schedule().unwrap();
        assert_eq!(s.steps().collect::<Vec<_>>(), vec![600, 1500, 3000]);
        assert_eq!(s.k(), 500);
        let sac = ExperimentConfig {
            algorithm: Algorithm::Sac,
            ..cfg
        };
        assert!(sac.schedule().unwrap().is_empty());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("[shaping]\nlamda = 3.0").is_err());
        assert!(ExperimentConfig::from_toml("env = \"nowhere\"").is_err());
        assert!(ExperimentConfig::from_toml("[shaping]\nkappa = -1.0").is_err());
        assert!(ExperimentConfig::from_toml("algorithm = \"dqn\"").is_err());
        assert!(ExperimentConfig::from_toml("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml("[advisor]\nkind = \"remote\"").is_err());
    }

    #[test]
    fn file_values_override_presets_and_flags_override_files() {
        let cfg = ExperimentConfig::from_toml("env = \"chain\"\n[sac]\nhidden = [16]\n").unwrap();
        assert_eq!((cfg.sac.alpha, cfg.sac.reward_scale), (0.1, 1000.0));
        assert_eq!(cfg.sac.hidden, vec![16]);
        let o = Overrides {
            lambda: Some(50.0),
            cutoff: Some(100),
            kappa: Some(2.0),
            k: Some(20),
            seeds: Some(vec![9]),
            algorithm: Some(Algorithm::Sac),
            endpoint: Some("http://127.0.0.1:1/x".into()),
            ..Overrides::default()
        };
        let r = o.resolve(Some("env = \"chain\"\n[shaping]\nlambda = 1.0\n")).unwrap();
        assert_eq!((r.shaping.lambda, r.shaping.cutoff, r.shaping.kappa, r.advisor.k), (50.0, 100, 2.0, 20));
        assert_eq!(r.seeds, vec![9]);
        assert_eq!(r.advisor.kind, AdvisorKind::Remote);
        let switched = Overrides {
            env: Some("two-state".into()),
            ..Overrides::default()
        }
        .resolve(Some("[sac]\nalpha = 0.3\n"))
        .unwrap();
        assert_eq!((switched.env.as_str(), switched.sac.alpha, switched.sac.gamma), ("two-state", 0.3, 0.9));
    }

    #[test]
    fn explicit_trigger_steps() {
        let cfg = ExperimentConfig::from_toml("[advisor]\ntrigger_steps = [10, 20]\nk = 7\n").unwrap();
        assert_eq!(cfg.schedule().unwrap().steps().collect::<Vec<_>>(), vec![10, 20]);
        assert!(ExperimentConfig::from_toml("[advisor]\ntrigger_steps = [0]\n").is_err());
    }
}
