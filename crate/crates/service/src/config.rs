use std::path::{Path, PathBuf};

use adaptrec_core::{CompositeWeights, ConversationConfig, HebbianRates, IngestOptions, RewardConfig, SpreadConfig};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSource {
    pub id: String,
    pub records: PathBuf,
    #[serde(default = "default_min_freq")]
    pub min_keyword_frequency: usize,
    #[serde(default)]
    pub stem: bool,
}

fn default_min_freq() -> usize {
    IngestOptions::default().min_keyword_frequency
}

impl ContextSource {
    pub fn options(&self) -> IngestOptions {
        IngestOptions {
            min_keyword_frequency: self.min_keyword_frequency,
            stem: self.stem,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationMode {
    /// Finalized categories queue up until the next cycle.
    #[default]
    Batched,
    /// Every finalized category triggers a cycle immediately.
    PerCategory,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositeSettings {
    pub traversal: f64,
    pub structural: f64,
    pub semantic: f64,
}

impl Default for CompositeSettings {
    fn default() -> Self {
        let w = CompositeWeights::default();
        Self {
            traversal: w.traversal,
            structural: w.structural,
            semantic: w.semantic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpreadSettings {
    pub decay: f64,
    pub max_iters: usize,
    pub epsilon: f64,
    pub cue_clamp: bool,
}

impl Default for SpreadSettings {
    fn default() -> Self {
        let d = SpreadConfig::default();
        Self {
            decay: d.decay,
            max_iters: d.max_iters,
            epsilon: d.epsilon,
            cue_clamp: d.cue_clamp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub listen: String,
    pub contexts: Vec<ContextSource>,
    /// Snapshot directory restored at start-up and written on shutdown.
    pub state_dir: Option<PathBuf>,
    /// Static assets for the browser client.
    pub ui_dir: Option<PathBuf>,
    pub adaptation_period_secs: u64,
    pub adaptation_mode: AdaptationMode,
    pub session_gap_secs: i64,
    pub symm_factor: f64,
    pub trans_factor: f64,
    pub structural_lambda: f64,
    pub composite: CompositeSettings,
    pub spread: SpreadSettings,
    pub conversation: ConversationConfig,
    pub hebbian: HebbianRates,
    pub auto_answer_threshold: f64,
    pub related_n: usize,
    pub recommendations_n: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let rewards = RewardConfig::default();
        Self {
            listen: "127.0.0.1:8080".into(),
            contexts: Vec::new(),
            state_dir: None,
            ui_dir: None,
            adaptation_period_secs: 60,
            adaptation_mode: AdaptationMode::Batched,
            session_gap_secs: adaptrec_core::apweb::DEFAULT_SESSION_GAP,
            symm_factor: rewards.symm_factor,
            trans_factor: rewards.trans_factor,
            structural_lambda: 0.5,
            composite: CompositeSettings::default(),
            spread: SpreadSettings::default(),
            conversation: ConversationConfig::default(),
            hebbian: HebbianRates::default(),
            auto_answer_threshold: 0.5,
            related_n: 10,
            recommendations_n: 20,
        }
    }
}

impl EngineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| ServiceError::Config(e.to_string()))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    /// Makes relative record paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for c in &mut self.contexts {
            if c.records.is_relative() {
                c.records = base.join(&c.records);
            }
        }
    }

    pub fn rewards(&self) -> RewardConfig {
        RewardConfig {
            symm_factor: self.symm_factor,
            trans_factor: self.trans_factor,
        }
    }

    pub fn composite_weights(&self) -> CompositeWeights {
        CompositeWeights {
            traversal: self.composite.traversal,
            structural: self.composite.structural,
            semantic: self.composite.semantic,
        }
    }

    pub fn spread_config(&self, top_k: usize) -> SpreadConfig {
        SpreadConfig {
            decay: self.spread.decay,
            max_iters: self.spread.max_iters,
            epsilon: self.spread.epsilon,
            cue_clamp: self.spread.cue_clamp,
            exclude_cues: true,
            top_k: Some(top_k),
            threshold: None,
        }
    }
}
