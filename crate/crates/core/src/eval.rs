//! Downstream evaluation: video-level features, top-k nearest-neighbor
//! retrieval, linear probes, full fine-tuning, a playback-speed probe, and
//! collapse diagnostics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::augment::center_crop;
use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::model::{EncoderConfig, Head, ModelParams, clips_to_batch};
use crate::opt::{cosine_lr, momentum_sgd_step};
use crate::rng::{Rng, derive_seed};
use crate::synth::{SpeedClass, SyntheticVideo, sample_clip, uniform_clip_starts};

/// Which feature space a video-level vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSpace {
    /// Encoder output x (the space downstream tasks use).
    Encoder,
    /// Appearance projection.
    Appearance,
    /// Speed projection.
    Speed,
}

/// Average-pooled per-video feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeature {
    pub vector: Vec<f32>,
    pub video_id: u64,
    pub appearance_class: usize,
    /// Set when the clip-feature mean was too small to renormalize; the raw
    /// mean is kept in that case.
    pub degenerate: bool,
}

/// Number of uniformly spaced clips pooled into a video-level feature.
pub const EVAL_CLIPS_PER_VIDEO: usize = 10;

/// Clip geometry used by evaluation passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalClipGeometry {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

/// Encodes a batch of prepared clips and projects into the requested space.
/// Rows of the result are the per-clip features.
fn clip_features(
    params: &ModelParams,
    clips: &[Vec<f32>],
    geometry: EvalClipGeometry,
    space: FeatureSpace,
) -> Result<Vec<Vec<f32>>> {
    let batch = clips_to_batch(clips, geometry.frames, geometry.height, geometry.width)?;
    let mut g = Graph::new();
    let bound = params.bind(&mut g);
    let input = g.leaf(&batch);
    let x = bound.encode(&mut g, input)?;
    let node = match space {
        FeatureSpace::Encoder => x,
        FeatureSpace::Appearance => bound.project(&mut g, x, Head::Appearance)?,
        FeatureSpace::Speed => bound.project(&mut g, x, Head::Speed)?,
    };
    let dim = g.shape(node)[1];
    Ok(g.values(node).chunks_exact(dim).map(<[f32]>::to_vec).collect())
}

/// 10 uniform speed-1 clips, center-cropped, no augmentation; features are
/// averaged and renormalized to unit norm (flagged, not renormalized, when
/// the mean collapses below 1e-8).
pub fn extract_video_feature(
    video: &SyntheticVideo,
    params: &ModelParams,
    space: FeatureSpace,
    geometry: EvalClipGeometry,
) -> Result<VideoFeature> {
    let starts = uniform_clip_starts(video.t, EVAL_CLIPS_PER_VIDEO, geometry.frames)?;
    let speed = SpeedClass::new(1)?;
    let clips: Vec<Vec<f32>> = starts
        .iter()
        .map(|&start| {
            let clip = sample_clip(video, start, speed, geometry.frames)?;
            Ok(center_crop(&clip, geometry.height, geometry.width)?.pixels)
        })
        .collect::<Result<_>>()?;
    let features = clip_features(params, &clips, geometry, space)?;
    Ok(pool_features(
        &features,
        video.video_id,
        video.appearance_class,
    ))
}

/// Mean of clip features, renormalized when possible. The f64 accumulation is
/// exact for these magnitudes, so the result is independent of clip order.
fn pool_features(features: &[Vec<f32>], video_id: u64, appearance_class: usize) -> VideoFeature {
    let dim = features[0].len();
    let mut mean = vec![0.0f64; dim];
    for f in features {
        for (m, &v) in mean.iter_mut().zip(f) {
            *m += v as f64;
        }
    }
    for m in &mut mean {
        *m /= features.len() as f64;
    }
    let norm = libm::sqrt(mean.iter().map(|&v| v * v).sum::<f64>());
    let degenerate = norm < 1e-8;
    let vector = if degenerate {
        mean.iter().map(|&v| v as f32).collect()
    } else {
        mean.iter().map(|&v| (v / norm) as f32).collect()
    };
    VideoFeature {
        vector,
        video_id,
        appearance_class,
        degenerate,
    }
}

/// Top-k retrieval accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub ks: Vec<usize>,
    pub accuracies: Vec<f32>,
    pub query_count: usize,
    pub gallery_count: usize,
}

/// Dot-product retrieval: a query scores a hit at k when any of its k most
/// similar gallery videos shares its appearance class. Ordering is
/// (similarity desc, video id asc), exactly.
pub fn topk_retrieval(
    queries: &[VideoFeature],
    gallery: &[VideoFeature],
    ks: &[usize],
) -> Result<RetrievalReport> {
    if gallery.is_empty() {
        return Err(Error::Config("retrieval gallery is empty".into()));
    }
    if queries.is_empty() {
        return Err(Error::Config("retrieval query set is empty".into()));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config(format!("bad retrieval depth list {ks:?}")));
    }
    for q in queries {
        if gallery.iter().any(|g| g.video_id == q.video_id) {
            return Err(Error::Config(format!(
                "video {} appears in both query and gallery sets",
                q.video_id
            )));
        }
    }
    let mut hits = vec![0usize; ks.len()];
    for q in queries {
        let mut scored: Vec<(f32, u64, usize)> = gallery
            .iter()
            .map(|g| {
                let mut dot = 0.0f32;
                for (a, b) in q.vector.iter().zip(&g.vector) {
                    dot += a * b;
                }
                (dot, g.video_id, g.appearance_class)
            })
            .collect();
        scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (slot, &k) in ks.iter().enumerate() {
            let depth = k.min(scored.len());
            if scored[..depth].iter().any(|&(_, _, class)| class == q.appearance_class) {
                hits[slot] += 1;
            }
        }
    }
    Ok(RetrievalReport {
        ks: ks.to_vec(),
        accuracies: hits.iter().map(|&h| h as f32 / queries.len() as f32).collect(),
        query_count: queries.len(),
        gallery_count: gallery.len(),
    })
}

/// Accuracy plus a `[true class][predicted class]` confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub accuracy: f32,
    pub n_classes: usize,
    pub confusion: Vec<usize>,
}

/// Trains a single affine classifier on frozen features with full-batch
/// gradient descent under cosine-annealed learning rate, then scores the
/// held-out set.
#[allow(clippy::too_many_arguments)]
pub fn linear_probe(
    train_features: &[Vec<f32>],
    train_labels: &[usize],
    test_features: &[Vec<f32>],
    test_labels: &[usize],
    n_classes: usize,
    epochs: usize,
    base_lr: f32,
    seed: u64,
) -> Result<ProbeReport> {
    if n_classes < 2 {
        return Err(Error::Label(format!(
            "probe needs at least two classes, got {n_classes}"
        )));
    }
    if train_features.len() != train_labels.len() || test_features.len() != test_labels.len() {
        return Err(Error::Shape("feature/label counts differ".into()));
    }
    if train_features.is_empty() || test_features.is_empty() {
        return Err(Error::Config("probe needs non-empty train and test sets".into()));
    }
    if let Some(&bad) = train_labels.iter().chain(test_labels).find(|&&l| l >= n_classes) {
        return Err(Error::Label(format!("label {bad} out of range")));
    }
    let dim = train_features[0].len();
    let mut rng = Rng::new(seed);
    let bound = libm::sqrtf(3.0 / dim as f32);
    let mut weight = Tensor::new(
        vec![dim, n_classes],
        (0..dim * n_classes).map(|_| rng.uniform(-bound, bound)).collect(),
    )?
    .with_requires_grad();
    let mut bias = Tensor::zeros(vec![n_classes]).with_requires_grad();

    let flat_train: Vec<f32> = train_features.iter().flatten().copied().collect();
    let train_x = Tensor::new(vec![train_features.len(), dim], flat_train)?;
    for epoch in 0..epochs {
        let lr = cosine_lr(epoch as u64, epochs as u64, base_lr);
        let mut g = Graph::new();
        let x = g.leaf(&train_x);
        let w = g.leaf(&weight);
        let b = g.leaf(&bias);
        let logits = g.matmul(x, w)?;
        let logits = g.bias_add(logits, b)?;
        let loss = g.softmax_cross_entropy(logits, train_labels)?;
        g.backward(loss)?;
        for (tensor, node) in [(&mut weight, w), (&mut bias, b)] {
            if let Some(grad) = g.grad(node) {
                for (v, d) in tensor.values_mut().iter_mut().zip(grad) {
                    *v -= lr * d;
                }
            }
        }
    }

    let mut confusion = vec![0usize; n_classes * n_classes];
    let mut correct = 0usize;
    for (feature, &label) in test_features.iter().zip(test_labels) {
        let pred = argmax_affine(feature, weight.values(), bias.values(), n_classes);
        confusion[label * n_classes + pred] += 1;
        if pred == label {
            correct += 1;
        }
    }
    Ok(ProbeReport {
        accuracy: correct as f32 / test_labels.len() as f32,
        n_classes,
        confusion,
    })
}

fn argmax_affine(x: &[f32], w: &[f32], b: &[f32], n_classes: usize) -> usize {
    let mut best = 0usize;
    let mut best_v = f32::NEG_INFINITY;
    for c in 0..n_classes {
        let mut v = b[c];
        for (i, &xv) in x.iter().enumerate() {
            v += xv * w[i * n_classes + c];
        }
        if v > best_v {
            best_v = v;
            best = c;
        }
    }
    best
}

/// Fine-tuning settings (the full-network recognition mode).
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f32,
    pub momentum: f32,
    pub seed: u64,
    pub geometry: EvalClipGeometry,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            epochs: 4,
            batch_size: 8,
            base_lr: 0.1,
            momentum: 0.9,
            seed: 11,
            geometry: EvalClipGeometry {
                frames: 8,
                height: 32,
                width: 32,
            },
        }
    }
}

/// Full fine-tune: keeps the (pretrained or random) encoder weights, appends
/// a randomly initialized classifier on the encoder output, and trains every
/// parameter with cross-entropy under momentum SGD and cosine annealing.
/// Returns held-out video-level accuracy (mean softmax over 10 uniform
/// clips).
pub fn finetune(
    corpus: &[SyntheticVideo],
    train_idx: &[usize],
    test_idx: &[usize],
    init: &ModelParams,
    n_classes: usize,
    config: &FinetuneConfig,
) -> Result<f32> {
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Config("fine-tune needs non-empty splits".into()));
    }
    if n_classes < 2 {
        return Err(Error::Label("fine-tune needs at least two classes".into()));
    }
    let geometry = config.geometry;
    if init.config.clip_shape != [geometry.frames, geometry.height, geometry.width] {
        return Err(Error::Config(format!(
            "checkpoint built for clips {:?}, fine-tune uses {:?}",
            init.config.clip_shape,
            [geometry.frames, geometry.height, geometry.width]
        )));
    }
    let mut params = init.clone();
    params.unfreeze_all();
    let d = params.config.feature_dim();
    let mut rng = Rng::new(derive_seed(config.seed, &[0x51]));
    let bound_w = libm::sqrtf(3.0 / d as f32);
    let mut head_w = Tensor::new(
        vec![d, n_classes],
        (0..d * n_classes).map(|_| rng.uniform(-bound_w, bound_w)).collect(),
    )?
    .with_requires_grad();
    let mut head_b = Tensor::zeros(vec![n_classes]).with_requires_grad();

    let lens: Vec<usize> = params
        .named_tensors()
        .iter()
        .map(|(_, t)| t.len())
        .chain([head_w.len(), head_b.len()])
        .collect();
    let mut velocity: Vec<Vec<f32>> = lens.iter().map(|&len| vec![0.0; len]).collect();
    let lr_base = config.base_lr;
    let steps_per_epoch = train_idx.len().div_ceil(config.batch_size) as u64;
    let total_steps = steps_per_epoch * config.epochs as u64;

    for step in 0..total_steps {
        let lr = cosine_lr(step, total_steps, lr_base);
        let mut clips = Vec::with_capacity(config.batch_size);
        let mut labels = Vec::with_capacity(config.batch_size);
        for slot in 0..config.batch_size {
            let mut item_rng = Rng::new(derive_seed(config.seed, &[0x52, step, slot as u64]));
            let video = &corpus[train_idx[item_rng.below(train_idx.len() as u64) as usize]];
            let reach = video.t - geometry.frames;
            let start = item_rng.below(reach as u64 + 1) as usize;
            let clip = sample_clip(video, start, SpeedClass::new(1)?, geometry.frames)?;
            clips.push(center_crop(&clip, geometry.height, geometry.width)?.pixels);
            labels.push(video.appearance_class);
        }
        let batch = clips_to_batch(&clips, geometry.frames, geometry.height, geometry.width)?;
        let mut g = Graph::new();
        let bound = params.bind(&mut g);
        let wn = g.leaf(&head_w);
        let bn = g.leaf(&head_b);
        let input = g.leaf(&batch);
        let x = bound.encode(&mut g, input)?;
        let logits = g.matmul(x, wn)?;
        let logits = g.bias_add(logits, bn)?;
        let loss = g.softmax_cross_entropy(logits, &labels)?;
        g.backward(loss)?;

        params.zero_grads();
        params.accumulate_grads_from(&g, &bound)?;
        head_w.zero_grad();
        head_b.zero_grad();
        if let Some(grad) = g.grad(wn) {
            head_w.accumulate_grad(grad)?;
        }
        if let Some(grad) = g.grad(bn) {
            head_b.accumulate_grad(grad)?;
        }
        let mut tensors = params.named_tensors_mut();
        let mut all: Vec<&mut Tensor> = tensors.iter_mut().map(|(_, t)| &mut **t).collect();
        all.push(&mut head_w);
        all.push(&mut head_b);
        for (tensor, buffer) in all.into_iter().zip(&mut velocity) {
            let grad = tensor.grad().map(<[f32]>::to_vec).unwrap_or_default();
            let grad = if grad.is_empty() { vec![0.0; tensor.len()] } else { grad };
            momentum_sgd_step(tensor, buffer, &grad, lr, config.momentum)?;
        }
    }

    // Video-level evaluation: average softmax probabilities over 10 clips.
    let mut correct = 0usize;
    for &idx in test_idx {
        let video = &corpus[idx];
        let starts = uniform_clip_starts(video.t, EVAL_CLIPS_PER_VIDEO, geometry.frames)?;
        let clips: Vec<Vec<f32>> = starts
            .iter()
            .map(|&start| {
                let clip = sample_clip(video, start, SpeedClass::new(1)?, geometry.frames)?;
                Ok(center_crop(&clip, geometry.height, geometry.width)?.pixels)
            })
            .collect::<Result<_>>()?;
        let batch = clips_to_batch(&clips, geometry.frames, geometry.height, geometry.width)?;
        let mut g = Graph::new();
        let bound = params.bind(&mut g);
        let wn = g.leaf(&head_w);
        let bn = g.leaf(&head_b);
        let input = g.leaf(&batch);
        let x = bound.encode(&mut g, input)?;
        let logits = g.matmul(x, wn)?;
        let logits = g.bias_add(logits, bn)?;
        let probs = mean_softmax(g.values(logits), n_classes);
        let pred = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if pred == video.appearance_class {
            correct += 1;
        }
    }
    Ok(correct as f32 / test_idx.len() as f32)
}

fn mean_softmax(logits: &[f32], n_classes: usize) -> Vec<f32> {
    let rows = logits.len() / n_classes;
    let mut mean = vec![0.0f64; n_classes];
    for row in logits.chunks_exact(n_classes) {
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        let exps: Vec<f64> = row.iter().map(|&v| libm::exp(v as f64 - max)).collect();
        let denom: f64 = exps.iter().sum();
        for (m, e) in mean.iter_mut().zip(&exps) {
            *m += e / denom;
        }
    }
    mean.into_iter().map(|v| (v / rows as f64) as f32).collect()
}

/// Probes how linearly separable playback speed is in the speed-projection
/// space: labeled clips at every speed in the set, linear probe on m.
#[allow(clippy::too_many_arguments)]
pub fn speed_probe(
    corpus: &[SyntheticVideo],
    train_idx: &[usize],
    test_idx: &[usize],
    params: &ModelParams,
    speed_set: &[usize],
    geometry: EvalClipGeometry,
    probe_epochs: usize,
    probe_lr: f32,
    seed: u64,
) -> Result<ProbeReport> {
    if speed_set.len() < 2 {
        return Err(Error::Label("speed probe needs at least two speeds".into()));
    }
    const CLIPS_PER_SPEED: usize = 2;
    let collect = |idx: &[usize], tag: u64| -> Result<(Vec<Vec<f32>>, Vec<usize>)> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for &video_idx in idx {
            let video = &corpus[video_idx];
            for (label, &speed) in speed_set.iter().enumerate() {
                let mut rng = Rng::new(derive_seed(seed, &[tag, video.video_id, speed as u64]));
                let span = (geometry.frames - 1) * speed + 1;
                let mut pixels = Vec::with_capacity(CLIPS_PER_SPEED);
                for _ in 0..CLIPS_PER_SPEED {
                    let start = rng.below((video.t - span) as u64 + 1) as usize;
                    let clip = sample_clip(video, start, SpeedClass::new(speed)?, geometry.frames)?;
                    pixels.push(center_crop(&clip, geometry.height, geometry.width)?.pixels);
                }
                for feat in clip_features(params, &pixels, geometry, FeatureSpace::Speed)? {
                    features.push(feat);
                    labels.push(label);
                }
            }
        }
        Ok((features, labels))
    };
    let (train_x, train_y) = collect(train_idx, 0x61)?;
    let (test_x, test_y) = collect(test_idx, 0x62)?;
    linear_probe(
        &train_x,
        &train_y,
        &test_x,
        &test_y,
        speed_set.len(),
        probe_epochs,
        probe_lr,
        derive_seed(seed, &[0x63]),
    )
}

/// Collapse diagnostics over a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseMetrics {
    pub per_dim_std: Vec<f32>,
    pub mean_per_dim_std: f32,
    pub mean_pairwise_cosine: f32,
}

/// Exact per-dimension standard deviation and mean off-diagonal cosine.
pub fn collapse_metrics(features: &[Vec<f32>]) -> Result<CollapseMetrics> {
    if features.len() < 2 {
        return Err(Error::Shape("collapse metrics need at least two rows".into()));
    }
    let n = features.len();
    let dim = features[0].len();
    let mut per_dim_std = Vec::with_capacity(dim);
    let mut acc = 0.0f64;
    for d in 0..dim {
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for f in features {
            let v = f[d] as f64;
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let std = libm::sqrt(var);
        per_dim_std.push(std as f32);
        acc += std;
    }
    let norms: Vec<f64> = features
        .iter()
        .map(|f| libm::sqrt(f.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>()).max(1e-12))
        .collect();
    let mut cos_acc = 0.0f64;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let dot: f64 = features[i]
                .iter()
                .zip(&features[j])
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum();
            cos_acc += dot / (norms[i] * norms[j]);
            pairs += 1;
        }
    }
    Ok(CollapseMetrics {
        per_dim_std,
        mean_per_dim_std: (acc / dim as f64) as f32,
        mean_pairwise_cosine: (cos_acc / pairs as f64) as f32,
    })
}

/// Seeded 20/80-style split into (queries, gallery) by video index.
pub fn split_queries_gallery(
    n_videos: usize,
    query_fraction: f32,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_videos < 2 {
        return Err(Error::Config("need at least two videos to split".into()));
    }
    if !(0.0..1.0).contains(&query_fraction) || query_fraction <= 0.0 {
        return Err(Error::Config(format!(
            "query fraction {query_fraction} outside (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..n_videos).collect();
    Rng::new(derive_seed(seed, &[0x99])).shuffle(&mut order);
    let n_queries = (libm::round(n_videos as f64 * query_fraction as f64) as usize)
        .clamp(1, n_videos - 1);
    let gallery = order.split_off(n_queries);
    Ok((order, gallery))
}

/// Convenience: video-level features for a set of corpus indices.
pub fn extract_features_for(
    corpus: &[SyntheticVideo],
    indices: &[usize],
    params: &ModelParams,
    space: FeatureSpace,
    geometry: EvalClipGeometry,
) -> Result<Vec<VideoFeature>> {
    indices
        .iter()
        .map(|&i| extract_video_feature(&corpus[i], params, space, geometry))
        .collect()
}

/// Geometry taken from an encoder config's clip shape.
pub fn geometry_of(config: &EncoderConfig) -> EvalClipGeometry {
    EvalClipGeometry {
        frames: config.clip_shape[0],
        height: config.clip_shape[1],
        width: config.clip_shape[2],
    }
}
