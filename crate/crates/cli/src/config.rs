//! Run configuration: one TOML document with flat key groups.
//!
//! Every field has a documented default; unknown keys are rejected so typos
//! fail loudly. The resolved (defaults filled in) config is echoed into the
//! output directory for provenance.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

use ascnet_core::augment::AugmentConfig;
use ascnet_core::model::EncoderConfig;
use ascnet_core::synth::CorpusConfig;
use ascnet_core::trainer::{InstanceMode, ScpMode, TrainConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Where run artifacts (checkpoints, metrics, reports) land.
    pub out_dir: String,
    /// Where the corpus manifest and pixel blobs live.
    pub data_dir: String,
    /// Root seed for corpus generation, training, and evaluation splits.
    pub seed: u64,
    pub corpus: CorpusSection,
    pub augment: AugmentSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub ablate: AblateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: "runs/default".into(),
            data_dir: "data".into(),
            seed: 7,
            corpus: CorpusSection::default(),
            augment: AugmentSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            ablate: AblateSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    pub n_videos: usize,
    pub n_classes: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub motion_speed: f32,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let c = CorpusConfig::default();
        CorpusSection {
            n_videos: c.n_videos,
            n_classes: c.n_classes,
            frames: c.frames,
            height: c.height,
            width: c.width,
            motion_speed: c.motion_speed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSection {
    pub crop: bool,
    pub crop_scale_min: f32,
    pub crop_scale_max: f32,
    pub jitter: bool,
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
    pub blur: bool,
    pub blur_sigma_min: f32,
    pub blur_sigma_max: f32,
    pub grayscale: bool,
    pub grayscale_prob: f32,
    pub solarize: bool,
    pub solarize_prob: f32,
    pub solarize_threshold: f32,
}

impl Default for AugmentSection {
    fn default() -> Self {
        let a = AugmentConfig::default();
        AugmentSection {
            crop: a.crop_enabled,
            crop_scale_min: a.crop_scale_range.0,
            crop_scale_max: a.crop_scale_range.1,
            jitter: a.jitter_enabled,
            brightness: a.brightness,
            contrast: a.contrast,
            saturation: a.saturation,
            blur: a.blur_enabled,
            blur_sigma_min: a.blur_sigma_range.0,
            blur_sigma_max: a.blur_sigma_range.1,
            grayscale: a.grayscale_enabled,
            grayscale_prob: a.grayscale_prob,
            solarize: a.solarize_enabled,
            solarize_prob: a.solarize_prob,
            solarize_threshold: a.solarize_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub stage_channels: Vec<usize>,
    pub kernels: Vec<[usize; 3]>,
    pub strides: Vec<[usize; 3]>,
    pub proj_dim: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = EncoderConfig::default();
        ModelSection {
            stage_channels: m.stage_channels,
            kernels: m.kernels,
            strides: m.strides,
            proj_dim: m.proj_dim,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub batch_size: usize,
    pub base_lr: f32,
    pub momentum: f32,
    pub weight_decay: f32,
    pub trust_coefficient: f32,
    pub predictor_trust_coefficient: f32,
    pub gamma: f32,
    pub speed_set: Vec<usize>,
    /// Fixed ordered (s_i, s_j) pair; omit for independent draws.
    pub speed_pair: Option<[usize; 2]>,
    pub epochs: usize,
    /// Hard step cap; overrides epochs when set.
    pub total_steps: Option<u64>,
    pub instance_mode: InstanceModeName,
    pub scp_mode: ScpModeName,
    pub bank_capacity: usize,
    pub clip_frames: usize,
    pub clip_height: usize,
    pub clip_width: usize,
    pub stop_gradient: bool,
    pub symmetrize: bool,
    /// Steps between checkpoints.
    pub checkpoint_interval: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            batch_size: t.batch_size,
            base_lr: t.base_lr,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
            trust_coefficient: t.trust_coefficient,
            predictor_trust_coefficient: t.predictor_trust_coefficient,
            gamma: t.gamma,
            speed_set: t.speed_set,
            speed_pair: None,
            epochs: t.epochs,
            total_steps: None,
            instance_mode: InstanceModeName::Similar,
            scp_mode: ScpModeName::Scp,
            bank_capacity: t.bank_capacity,
            clip_frames: t.clip_frames,
            clip_height: t.clip_height,
            clip_width: t.clip_width,
            stop_gradient: t.stop_gradient,
            symmetrize: t.symmetrize,
            checkpoint_interval: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceModeName {
    Same,
    Different,
    Similar,
}

impl From<InstanceModeName> for InstanceMode {
    fn from(name: InstanceModeName) -> Self {
        match name {
            InstanceModeName::Same => InstanceMode::Same,
            InstanceModeName::Different => InstanceMode::Different,
            InstanceModeName::Similar => InstanceMode::Similar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScpModeName {
    Scp,
    Sp,
}

impl From<ScpModeName> for ScpMode {
    fn from(name: ScpModeName) -> Self {
        match name {
            ScpModeName::Scp => ScpMode::Scp,
            ScpModeName::Sp => ScpMode::Sp,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub query_fraction: f32,
    pub retrieval_ks: Vec<usize>,
    pub probe_epochs: usize,
    pub probe_lr: f32,
    pub finetune_epochs: usize,
    pub finetune_batch: usize,
    pub finetune_lr: f32,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            query_fraction: 0.2,
            retrieval_ks: vec![1, 5, 10, 20, 50],
            probe_epochs: 100,
            probe_lr: 0.5,
            finetune_epochs: 4,
            finetune_batch: 8,
            finetune_lr: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblateSection {
    /// Steps per swept configuration.
    pub steps: u64,
}

impl Default for AblateSection {
    fn default() -> Self {
        AblateSection { steps: 300 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        Ok(config)
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            n_videos: self.corpus.n_videos,
            n_classes: self.corpus.n_classes,
            frames: self.corpus.frames,
            height: self.corpus.height,
            width: self.corpus.width,
            motion_speed: self.corpus.motion_speed,
            seed: self.seed,
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            crop_enabled: self.augment.crop,
            crop_scale_range: (self.augment.crop_scale_min, self.augment.crop_scale_max),
            jitter_enabled: self.augment.jitter,
            brightness: self.augment.brightness,
            contrast: self.augment.contrast,
            saturation: self.augment.saturation,
            blur_enabled: self.augment.blur,
            blur_sigma_range: (self.augment.blur_sigma_min, self.augment.blur_sigma_max),
            grayscale_enabled: self.augment.grayscale,
            grayscale_prob: self.augment.grayscale_prob,
            solarize_enabled: self.augment.solarize,
            solarize_prob: self.augment.solarize_prob,
            solarize_threshold: self.augment.solarize_threshold,
        }
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            stage_channels: self.model.stage_channels.clone(),
            kernels: self.model.kernels.clone(),
            strides: self.model.strides.clone(),
            clip_shape: [
                self.train.clip_frames,
                self.train.clip_height,
                self.train.clip_width,
            ],
            proj_dim: self.model.proj_dim,
            speed_classes: self.train.speed_set.len(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            base_lr: self.train.base_lr,
            momentum: self.train.momentum,
            weight_decay: self.train.weight_decay,
            trust_coefficient: self.train.trust_coefficient,
            predictor_trust_coefficient: self.train.predictor_trust_coefficient,
            gamma: self.train.gamma,
            speed_set: self.train.speed_set.clone(),
            speed_pair: self.train.speed_pair.map(|[a, b]| (a, b)),
            epochs: self.train.epochs,
            total_steps: self.train.total_steps,
            instance_mode: self.train.instance_mode.into(),
            scp_mode: self.train.scp_mode.into(),
            bank_capacity: self.train.bank_capacity,
            seed: self.seed,
            clip_frames: self.train.clip_frames,
            clip_height: self.train.clip_height,
            clip_width: self.train.clip_width,
            stop_gradient: self.train.stop_gradient,
            symmetrize: self.train.symmetrize,
        }
    }

    /// Serialized resolved config (all defaults filled in).
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("serializing resolved config")
    }
}
