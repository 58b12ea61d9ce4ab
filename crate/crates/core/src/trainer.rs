//! The pretraining loop: paired-clip sampling at randomized playback speeds,
//! appearance/speed consistency (or speed-prediction) loss assembly, one
//! backward pass, one LARS update, and memory-bank upkeep per step.
//!
//! Every random draw derives statelessly from `(seed, step, slot, purpose)`,
//! so runs are reproducible bit-for-bit, resume is exact, and per-item clip
//! preparation can be farmed out to threads without affecting results.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::augment::{AugmentConfig, augment, center_crop};
use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::model::{BoundParams, EncoderConfig, Head, ModelParams, clips_to_batch};
use crate::objectives::{FeatureRecord, MemoryBank, acp_loss, combined_loss, scp_loss};
use crate::opt::{LarsConfig, LarsState, lars_step, scaled_lr};
use crate::rng::{Rng, derive_seed};
use crate::synth::{SUPPORTED_SPEEDS, SpeedClass, SyntheticVideo, sample_clip};

/// Where the speed-consistency partner clip comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceMode {
    /// Same video as the anchor.
    Same,
    /// Uniformly random other video.
    Different,
    /// Appearance-based memory-bank retrieval (falls back to `Different`
    /// until the bank holds an eligible record).
    Similar,
}

/// Which speed task trains alongside appearance consistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScpMode {
    /// Speed-consistency: pull together embeddings of same-speed clips.
    Scp,
    /// Speed-prediction baseline: classify each clip's playback speed.
    Sp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub base_lr: f32,
    pub momentum: f32,
    pub weight_decay: f32,
    pub trust_coefficient: f32,
    /// Trust coefficient for the predictor weights. Predictors have to track
    /// the feature statistics faster than the encoder moves them or the
    /// consistency losses contract everything to a constant; under a uniform
    /// trust coefficient they cannot, and the run collapses even with
    /// detached targets.
    pub predictor_trust_coefficient: f32,
    /// Weight of the speed task in the combined loss.
    pub gamma: f32,
    /// Playback speeds sampled during pretraining.
    pub speed_set: Vec<usize>,
    /// Fixed ordered pair (s_i, s_j) instead of independent draws.
    pub speed_pair: Option<(usize, usize)>,
    pub epochs: usize,
    /// Optional hard cap on total steps (overrides the epoch count).
    pub total_steps: Option<u64>,
    pub instance_mode: InstanceMode,
    pub scp_mode: ScpMode,
    pub bank_capacity: usize,
    pub seed: u64,
    pub clip_frames: usize,
    pub clip_height: usize,
    pub clip_width: usize,
    /// Detach consistency targets. Disabling this is only useful to
    /// demonstrate representational collapse.
    pub stop_gradient: bool,
    /// Average both prediction directions instead of the default single
    /// direction.
    pub symmetrize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            base_lr: 0.3,
            momentum: 0.9,
            weight_decay: 1e-6,
            trust_coefficient: 0.001,
            predictor_trust_coefficient: 0.1,
            gamma: 0.5,
            speed_set: vec![4, 8],
            speed_pair: None,
            epochs: 20,
            total_steps: None,
            instance_mode: InstanceMode::Similar,
            scp_mode: ScpMode::Scp,
            bank_capacity: 512,
            seed: 7,
            clip_frames: 8,
            clip_height: 32,
            clip_width: 32,
            stop_gradient: true,
            symmetrize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.speed_set.is_empty() {
            return Err(Error::Config("speed set is empty".into()));
        }
        if let Some(&bad) = self.speed_set.iter().find(|s| !SUPPORTED_SPEEDS.contains(s)) {
            return Err(Error::Config(format!(
                "speed {bad} not in supported set {SUPPORTED_SPEEDS:?}"
            )));
        }
        if let Some((s1, s2)) = self.speed_pair
            && (!self.speed_set.contains(&s1) || !self.speed_set.contains(&s2))
        {
            return Err(Error::Config(format!(
                "speed pair ({s1}, {s2}) not covered by speed set {:?}",
                self.speed_set
            )));
        }
        if self.bank_capacity == 0 {
            return Err(Error::Config("bank capacity must be positive".into()));
        }
        if self.clip_frames == 0 || self.clip_height == 0 || self.clip_width == 0 {
            return Err(Error::Config("clip geometry must be positive".into()));
        }
        Ok(())
    }

    /// The LARS learning rate actually used: base scaled by batch size.
    pub fn effective_lr(&self) -> f32 {
        scaled_lr(self.base_lr, self.batch_size)
    }

    fn lars(&self) -> LarsConfig {
        LarsConfig {
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            trust_coefficient: self.trust_coefficient,
        }
    }

    /// Index of a speed within the configured set (the classifier label).
    pub fn speed_label(&self, speed: usize) -> Result<usize> {
        self.speed_set
            .iter()
            .position(|&s| s == speed)
            .ok_or_else(|| Error::Label(format!("speed {speed} not in configured set")))
    }
}

/// Per-step loss components. `speed_prediction` is only present in SP mode,
/// where it takes the speed slot of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub appearance: f32,
    pub speed_consistency: f32,
    pub speed_prediction: Option<f32>,
    pub total: f32,
    pub gamma: f32,
}

/// One step's metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub losses: LossBreakdown,
    pub lr: f32,
    /// Mean over dimensions of the per-dimension std of the batch's
    /// appearance embeddings; the collapse monitor.
    pub feature_std: f32,
    /// Wall-clock of the step, filled in by the driver (0 here).
    pub wall_ms: f64,
}

/// A fully specified clip extraction: which video, where, at what speed, and
/// with which augmentation stream (None means center crop, no augmentation).
#[derive(Debug, Clone, PartialEq)]
pub struct ClipJob {
    pub video_index: usize,
    pub start: usize,
    pub speed: SpeedClass,
    pub n_frames: usize,
    pub out_height: usize,
    pub out_width: usize,
    pub augment_seed: Option<u64>,
}

/// Materializes one job into `[T, H, W, 3]` pixels. Pure in its arguments.
pub fn prepare_clip(
    corpus: &[SyntheticVideo],
    aug: &AugmentConfig,
    job: &ClipJob,
) -> Result<Vec<f32>> {
    let video = corpus
        .get(job.video_index)
        .ok_or_else(|| Error::Range(format!("video index {} out of corpus", job.video_index)))?;
    let clip = sample_clip(video, job.start, job.speed, job.n_frames)?;
    let out = match job.augment_seed {
        Some(seed) => augment(&clip, aug, job.out_height, job.out_width, seed)?,
        None => center_crop(&clip, job.out_height, job.out_width)?,
    };
    Ok(out.pixels)
}

/// Batch clip preparation. Implementations must be pure per job so the
/// result is independent of evaluation order; the std companion crate
/// provides a threaded version honoring `ASCNET_THREADS`.
pub trait ClipPrep {
    fn prepare(
        &self,
        corpus: &[SyntheticVideo],
        aug: &AugmentConfig,
        jobs: &[ClipJob],
    ) -> Result<Vec<Vec<f32>>>;
}

/// In-order, single-threaded preparation.
pub struct SerialPrep;

impl ClipPrep for SerialPrep {
    fn prepare(
        &self,
        corpus: &[SyntheticVideo],
        aug: &AugmentConfig,
        jobs: &[ClipJob],
    ) -> Result<Vec<Vec<f32>>> {
        jobs.iter().map(|job| prepare_clip(corpus, aug, job)).collect()
    }
}

// Purpose tags for stateless seed derivation.
const TAG_INIT: u64 = 0x11;
const TAG_ITEM: u64 = 0x22;
const TAG_PARTNER: u64 = 0x33;
const AUG_ANCHOR: u64 = 0;
const AUG_TARGET: u64 = 1;
const AUG_PARTNER: u64 = 2;

/// The sampling plan for one batch slot: anchor clip `i`, appearance target
/// clip `j`, and the seed material for the speed partner clip `k`.
#[derive(Debug, Clone)]
pub(crate) struct ItemPlan {
    pub video_index: usize,
    pub speed_i: usize,
    pub speed_j: usize,
    pub start_i: usize,
    pub start_j: usize,
    pub aug_i: u64,
    pub aug_j: u64,
    pub aug_k: u64,
    pub partner_seed: u64,
}

pub(crate) fn plan_item(
    config: &TrainConfig,
    corpus: &[SyntheticVideo],
    step: u64,
    slot: usize,
) -> ItemPlan {
    let item_seed = derive_seed(config.seed, &[TAG_ITEM, step, slot as u64]);
    let mut rng = Rng::new(item_seed);
    let video_index = rng.below(corpus.len() as u64) as usize;
    let video_frames = corpus[video_index].t;
    let (speed_i, speed_j) = match config.speed_pair {
        Some(pair) => pair,
        None => {
            let si = config.speed_set[rng.below(config.speed_set.len() as u64) as usize];
            let sj = config.speed_set[rng.below(config.speed_set.len() as u64) as usize];
            (si, sj)
        }
    };
    let span = |speed: usize| (config.clip_frames - 1) * speed + 1;
    let start_i = rng.below((video_frames - span(speed_i) + 1) as u64) as usize;
    let start_j = rng.below((video_frames - span(speed_j) + 1) as u64) as usize;
    ItemPlan {
        video_index,
        speed_i,
        speed_j,
        start_i,
        start_j,
        aug_i: derive_seed(item_seed, &[AUG_ANCHOR]),
        aug_j: derive_seed(item_seed, &[AUG_TARGET]),
        aug_k: derive_seed(item_seed, &[AUG_PARTNER]),
        partner_seed: derive_seed(config.seed, &[TAG_PARTNER, step, slot as u64]),
    }
}

/// Holds all mutable training state and drives one step at a time.
pub struct Trainer<'a> {
    corpus: &'a [SyntheticVideo],
    config: TrainConfig,
    augment_config: AugmentConfig,
    params: ModelParams,
    lars_config: LarsConfig,
    lars: LarsState,
    bank: MemoryBank,
    step: u64,
    insert_counter: u64,
    lr: f32,
}

impl<'a> Trainer<'a> {
    pub fn new(
        corpus: &'a [SyntheticVideo],
        encoder_config: &EncoderConfig,
        config: TrainConfig,
        augment_config: AugmentConfig,
    ) -> Result<Self> {
        let params = ModelParams::init(encoder_config, derive_seed(config.seed, &[TAG_INIT]))?;
        Trainer::from_state(
            corpus,
            config,
            augment_config,
            params,
            None,
            None,
            0,
            0,
        )
    }

    /// Builds a trainer around existing state (checkpoint resume).
    #[allow(clippy::too_many_arguments)]
    pub fn from_state(
        corpus: &'a [SyntheticVideo],
        config: TrainConfig,
        augment_config: AugmentConfig,
        params: ModelParams,
        lars: Option<LarsState>,
        bank: Option<MemoryBank>,
        step: u64,
        insert_counter: u64,
    ) -> Result<Self> {
        config.validate()?;
        augment_config.validate()?;
        if corpus.len() < 2 {
            return Err(Error::Config(
                "training needs at least two videos (retrieval requires another instance)".into(),
            ));
        }
        let expected_clip = [config.clip_frames, config.clip_height, config.clip_width];
        if params.config.clip_shape != expected_clip {
            return Err(Error::Config(format!(
                "encoder built for clips {:?} but training uses {:?}",
                params.config.clip_shape, expected_clip
            )));
        }
        if params.config.speed_classes != config.speed_set.len() {
            return Err(Error::Config(format!(
                "speed head has {} classes but the speed set has {}",
                params.config.speed_classes,
                config.speed_set.len()
            )));
        }
        for video in corpus {
            let max_span = (config.clip_frames - 1)
                * config.speed_set.iter().copied().max().unwrap_or(1)
                + 1;
            if video.t < max_span {
                return Err(Error::Config(format!(
                    "video {} too short ({} frames) for the largest clip span {max_span}",
                    video.video_id, video.t
                )));
            }
        }
        let lens: Vec<usize> = params.named_tensors().iter().map(|(_, t)| t.len()).collect();
        let lars_state = match lars {
            Some(state) => {
                if state.velocity.iter().map(Vec::len).collect::<Vec<_>>() != lens {
                    return Err(Error::Config("optimizer state does not match parameters".into()));
                }
                state
            }
            None => LarsState::for_shapes(&lens),
        };
        let bank = match bank {
            Some(b) => b,
            None => MemoryBank::new(config.bank_capacity)?,
        };
        let lr = config.effective_lr();
        let lars_config = config.lars();
        Ok(Trainer {
            corpus,
            config,
            augment_config,
            params,
            lars_config,
            lars: lars_state,
            bank,
            step,
            insert_counter,
            lr,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lars_state(&self) -> &LarsState {
        &self.lars
    }

    pub fn bank(&self) -> &MemoryBank {
        &self.bank
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn insert_counter(&self) -> u64 {
        self.insert_counter
    }

    /// Steps in one epoch: `ceil(corpus / batch)`.
    pub fn steps_per_epoch(&self) -> u64 {
        self.corpus.len().div_ceil(self.config.batch_size) as u64
    }

    /// Total steps of a full run under the current config.
    pub fn total_steps(&self) -> u64 {
        self.config
            .total_steps
            .unwrap_or(self.steps_per_epoch() * self.config.epochs as u64)
    }

    fn jobs_for(
        &self,
        plans: &[ItemPlan],
        which: fn(&ItemPlan) -> (usize, usize, u64),
        speed_of: fn(&ItemPlan) -> usize,
    ) -> Result<Vec<ClipJob>> {
        plans
            .iter()
            .map(|p| {
                let (video_index, start, aug) = which(p);
                Ok(ClipJob {
                    video_index,
                    start,
                    speed: SpeedClass::new(speed_of(p))?,
                    n_frames: self.config.clip_frames,
                    out_height: self.config.clip_height,
                    out_width: self.config.clip_width,
                    augment_seed: Some(aug),
                })
            })
            .collect()
    }

    /// One optimization step. Returns the step's metrics; on error the
    /// parameters are left untouched.
    pub fn train_step(&mut self, prep: &dyn ClipPrep) -> Result<StepRecord> {
        let step = self.step;
        let cfg = self.config.clone();
        let b = cfg.batch_size;
        let n = self.corpus.len();

        let plans: Vec<ItemPlan> = (0..b)
            .map(|slot| plan_item(&cfg, self.corpus, step, slot))
            .collect();

        let jobs_i = self.jobs_for(
            &plans,
            |p| (p.video_index, p.start_i, p.aug_i),
            |p| p.speed_i,
        )?;
        let jobs_j = self.jobs_for(
            &plans,
            |p| (p.video_index, p.start_j, p.aug_j),
            |p| p.speed_j,
        )?;
        let clips_i = prep.prepare(self.corpus, &self.augment_config, &jobs_i)?;
        let clips_j = prep.prepare(self.corpus, &self.augment_config, &jobs_j)?;

        let (f, h, w) = (cfg.clip_frames, cfg.clip_height, cfg.clip_width);
        let batch_i = clips_to_batch(&clips_i, f, h, w)?;
        let batch_j = clips_to_batch(&clips_j, f, h, w)?;

        let mut g = Graph::new();
        let bound = self.params.bind(&mut g);
        let ci = g.leaf(&batch_i);
        let cj = g.leaf(&batch_j);
        let xi = bound.encode(&mut g, ci)?;
        let xj = bound.encode(&mut g, cj)?;

        // Appearance consistency: predict the target view from the anchor.
        let ai = bound.project(&mut g, xi, Head::Appearance)?;
        let aj = bound.project(&mut g, xj, Head::Appearance)?;
        let ai_pred = bound.predict(&mut g, ai, Head::Appearance)?;
        let aj_target = if cfg.stop_gradient { g.detach(aj)? } else { aj };
        let mut l_a = acp_loss(&mut g, ai_pred, aj_target)?;
        if cfg.symmetrize {
            let aj_pred = bound.predict(&mut g, aj, Head::Appearance)?;
            let ai_target = if cfg.stop_gradient { g.detach(ai)? } else { ai };
            let l_rev = acp_loss(&mut g, aj_pred, ai_target)?;
            let sum = g.add(l_a, l_rev)?;
            l_a = g.scale(sum, 0.5)?;
        }

        let mut l_sp_value = None;
        let (l_speed_task, l_m_value) = match cfg.scp_mode {
            ScpMode::Sp => {
                // Classify the playback speed of each individual clip.
                let logits_i = bound.speed_logits(&mut g, xi)?;
                let logits_j = bound.speed_logits(&mut g, xj)?;
                let labels_i: Vec<usize> = plans
                    .iter()
                    .map(|p| cfg.speed_label(p.speed_i))
                    .collect::<Result<_>>()?;
                let labels_j: Vec<usize> = plans
                    .iter()
                    .map(|p| cfg.speed_label(p.speed_j))
                    .collect::<Result<_>>()?;
                let ce_i = g.softmax_cross_entropy(logits_i, &labels_i)?;
                let ce_j = g.softmax_cross_entropy(logits_j, &labels_j)?;
                let sum = g.add(ce_i, ce_j)?;
                let l_sp = g.scale(sum, 0.5)?;
                l_sp_value = Some(g.values(l_sp)[0]);
                (l_sp, 0.0)
            }
            ScpMode::Scp => {
                // Pick the speed partner: same video, a random other video, or
                // the appearance-retrieved one. Query features are this
                // step's detached targets, read before any bank insert.
                let aj_values = g.values(aj).to_vec();
                let p_dim = g.shape(aj)[1];
                let jobs_k: Vec<ClipJob> = plans
                    .iter()
                    .enumerate()
                    .map(|(slot, plan)| {
                        let mut rng = Rng::new(plan.partner_seed);
                        let fallback_other = if n > 1 {
                            let oth = rng.below(n as u64 - 1) as usize;
                            if oth >= plan.video_index { oth + 1 } else { oth }
                        } else {
                            plan.video_index
                        };
                        let video_index = match cfg.instance_mode {
                            InstanceMode::Same => plan.video_index,
                            InstanceMode::Different => fallback_other,
                            InstanceMode::Similar => {
                                let query = &aj_values[slot * p_dim..(slot + 1) * p_dim];
                                let own_id = self.corpus[plan.video_index].video_id;
                                match self.bank.retrieve_similar(query, own_id) {
                                    Ok(record) => self
                                        .corpus
                                        .iter()
                                        .position(|v| v.video_id == record.video_id)
                                        .unwrap_or(fallback_other),
                                    Err(Error::NoCandidate) => fallback_other,
                                    Err(other) => return Err(other),
                                }
                            }
                        };
                        let span = (cfg.clip_frames - 1) * plan.speed_i + 1;
                        let reach = self.corpus[video_index].t - span;
                        let start = rng.below(reach as u64 + 1) as usize;
                        Ok(ClipJob {
                            video_index,
                            start,
                            speed: SpeedClass::new(plan.speed_i)?,
                            n_frames: cfg.clip_frames,
                            out_height: cfg.clip_height,
                            out_width: cfg.clip_width,
                            augment_seed: Some(plan.aug_k),
                        })
                    })
                    .collect::<Result<_>>()?;
                let clips_k = prep.prepare(self.corpus, &self.augment_config, &jobs_k)?;
                let batch_k = clips_to_batch(&clips_k, f, h, w)?;
                let ck = g.leaf(&batch_k);
                let xk = bound.encode(&mut g, ck)?;
                let mi = bound.project(&mut g, xi, Head::Speed)?;
                let mk = bound.project(&mut g, xk, Head::Speed)?;
                let mi_pred = bound.predict(&mut g, mi, Head::Speed)?;
                let mk_target = if cfg.stop_gradient { g.detach(mk)? } else { mk };
                let mut l_m = scp_loss(&mut g, mi_pred, mk_target)?;
                if cfg.symmetrize {
                    let mk_pred = bound.predict(&mut g, mk, Head::Speed)?;
                    let mi_target = if cfg.stop_gradient { g.detach(mi)? } else { mi };
                    let l_rev = scp_loss(&mut g, mk_pred, mi_target)?;
                    let sum = g.add(l_m, l_rev)?;
                    l_m = g.scale(sum, 0.5)?;
                }
                let value = g.values(l_m)[0];
                (l_m, value)
            }
        };

        let total = combined_loss(&mut g, l_a, l_speed_task, cfg.gamma)?;
        let l_a_value = g.values(l_a)[0];
        let total_value = g.values(total)[0];
        if !total_value.is_finite() {
            return Err(Error::Numerics(format!(
                "non-finite loss {total_value} at step {step}"
            )));
        }
        let feature_std = mean_per_dim_std(g.values(ai), g.shape(ai)[1]);

        g.backward(total)?;
        self.apply_update(&mut g, &bound)?;

        // FIFO-insert this step's detached appearance targets, after all
        // retrieval reads.
        for (slot, plan) in plans.iter().enumerate() {
            let vector = aj_values_row(&g, aj_target, slot);
            self.bank.insert(FeatureRecord {
                vector,
                video_id: self.corpus[plan.video_index].video_id,
                insert_step: self.insert_counter,
            })?;
            self.insert_counter += 1;
        }

        self.step += 1;
        Ok(StepRecord {
            step,
            losses: LossBreakdown {
                appearance: l_a_value,
                speed_consistency: l_m_value,
                speed_prediction: l_sp_value,
                total: total_value,
                gamma: cfg.gamma,
            },
            lr: self.lr,
            feature_std,
            wall_ms: 0.0,
        })
    }

    fn apply_update(&mut self, g: &mut Graph, bound: &BoundParams) -> Result<()> {
        self.params.zero_grads();
        self.params.accumulate_grads_from(g, bound)?;
        let lr = self.lr;
        let lars_config = self.lars_config;
        let predictor_config = LarsConfig {
            trust_coefficient: self.config.predictor_trust_coefficient,
            ..lars_config
        };
        for ((name, tensor), velocity) in self
            .params
            .named_tensors_mut()
            .into_iter()
            .zip(&mut self.lars.velocity)
        {
            let grad = tensor.grad().map(<[f32]>::to_vec).unwrap_or_default();
            let grad = if grad.is_empty() {
                vec![0.0; tensor.len()]
            } else {
                grad
            };
            let group = if name.starts_with("pred_") {
                &predictor_config
            } else {
                &lars_config
            };
            lars_step(tensor, velocity, &grad, lr, group)?;
        }
        Ok(())
    }

    /// Runs steps until `total_steps`, invoking `on_step` after each one.
    pub fn run(
        &mut self,
        prep: &dyn ClipPrep,
        mut on_step: impl FnMut(&StepRecord) -> Result<()>,
    ) -> Result<()> {
        while self.step < self.total_steps() {
            let record = self.train_step(prep)?;
            on_step(&record)?;
        }
        Ok(())
    }
}

fn aj_values_row(g: &Graph, node: crate::autodiff::NodeId, row: usize) -> Vec<f32> {
    let d = g.shape(node)[1];
    g.values(node)[row * d..(row + 1) * d].to_vec()
}

/// Mean over dimensions of the per-dimension (population) std across rows.
pub fn mean_per_dim_std(values: &[f32], dim: usize) -> f32 {
    let rows = values.len() / dim;
    if rows < 2 {
        return 0.0;
    }
    let mut acc = 0.0f64;
    for d in 0..dim {
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for r in 0..rows {
            let v = values[r * dim + d] as f64;
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / rows as f64;
        let var = (sum_sq / rows as f64 - mean * mean).max(0.0);
        acc += libm::sqrt(var);
    }
    (acc / dim as f64) as f32
}
