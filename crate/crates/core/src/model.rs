//! TinyC3D encoder and its heads.
//!
//! The encoder is a stack of valid 3-d convolutions with relu, followed by
//! global average pooling; a desk-scale stand-in for the big video backbones.
//! On top sit two disjoint projection heads (appearance and speed, one affine
//! layer each into a shared 256-d space, L2-normalized), two predictors of
//! the same shape applied to the online branch only, and a linear speed
//! classifier for the speed-prediction baseline. One parameter set is shared
//! by every clip encoded within a training step.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Graph, NodeId, Tensor};
use crate::error::{Error, Result};
use crate::rng::{Rng, derive_seed};

/// Which embedding space a projection or prediction targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Appearance,
    Speed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Output channels per conv stage; the last entry is the feature width D.
    pub stage_channels: Vec<usize>,
    /// Kernel (t, h, w) per stage.
    pub kernels: Vec<[usize; 3]>,
    /// Stride (sT, sH, sW) per stage.
    pub strides: Vec<[usize; 3]>,
    /// Clip shape (frames, height, width) the encoder is built for.
    pub clip_shape: [usize; 3],
    /// Width of the projection/prediction embedding space.
    pub proj_dim: usize,
    /// Number of playback-speed classes the speed classifier separates.
    pub speed_classes: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            stage_channels: vec![8, 16, 32],
            kernels: vec![[3, 3, 3]; 3],
            strides: vec![[1, 2, 2], [1, 2, 2], [2, 2, 2]],
            clip_shape: [8, 32, 32],
            proj_dim: 256,
            speed_classes: 4,
        }
    }
}

impl EncoderConfig {
    /// Feature width D of the encoder output.
    pub fn feature_dim(&self) -> usize {
        *self.stage_channels.last().unwrap_or(&0)
    }

    /// Checks internal consistency and that every stage's kernel fits the
    /// shrinking activation volume under valid convolution.
    pub fn validate(&self) -> Result<()> {
        if self.stage_channels.is_empty() {
            return Err(Error::Config("encoder needs at least one stage".into()));
        }
        if self.kernels.len() != self.stage_channels.len()
            || self.strides.len() != self.stage_channels.len()
        {
            return Err(Error::Config(format!(
                "stage count mismatch: {} channels, {} kernels, {} strides",
                self.stage_channels.len(),
                self.kernels.len(),
                self.strides.len()
            )));
        }
        if self.proj_dim == 0 || self.speed_classes == 0 {
            return Err(Error::Config("projection width and speed classes must be positive".into()));
        }
        if self.stage_channels.contains(&0) {
            return Err(Error::Config("stage channels must be positive".into()));
        }
        self.stage_output_shape()?;
        Ok(())
    }

    /// Activation shape (T, H, W) after the final stage.
    pub fn stage_output_shape(&self) -> Result<[usize; 3]> {
        let mut dims = self.clip_shape;
        for (stage, (kernel, stride)) in self.kernels.iter().zip(&self.strides).enumerate() {
            for axis in 0..3 {
                if kernel[axis] == 0 || stride[axis] == 0 {
                    return Err(Error::Config(format!(
                        "stage {stage}: kernel and stride must be positive"
                    )));
                }
                if kernel[axis] > dims[axis] {
                    return Err(Error::Config(format!(
                        "stage {stage}: kernel {:?} does not fit activation {:?}",
                        kernel, dims
                    )));
                }
                dims[axis] = (dims[axis] - kernel[axis]) / stride[axis] + 1;
            }
        }
        Ok(dims)
    }
}

/// One linear layer: `weight` is `[in, out]`, `bias` (when present) `[out]`.
///
/// The projection heads and predictors are bias-free: a biased head can
/// satisfy a consistency loss by emitting a constant vector through its bias
/// alone (biases are exempt from LARS trust scaling, so that shortcut wins
/// the race against weight learning and collapses the representation). A
/// bias-free map can only produce constants by flattening its input, which
/// the loss itself opposes. The speed classifier keeps its bias; its targets
/// are labels, not learned features.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

/// One conv stage: `weight` is `[K, C, t, h, w]`, `bias` is `[K]`.
///
/// Encoder biases are frozen at zero (`requires_grad` false). Rank-1 tensors
/// are exempt from LARS trust scaling, which lets a trainable bias outrun
/// every weight by orders of magnitude and drag the whole representation to
/// a constant; freezing them closes that shortcut during pretraining.
/// Fine-tuning re-enables them along with everything else.
#[derive(Debug, Clone)]
pub struct ConvLayer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: [usize; 3],
}

/// All trainable tensors. The projection heads, predictors, and classifier
/// are parameter-disjoint; the encoder is shared by every branch.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: EncoderConfig,
    pub encoder: Vec<ConvLayer>,
    pub proj_appearance: Linear,
    pub proj_speed: Linear,
    pub pred_appearance: Linear,
    pub pred_speed: Linear,
    pub speed_head: Linear,
}

/// Weights are uniform in `[-sqrt(3/fan_in), sqrt(3/fan_in)]` (standard
/// deviation `1/sqrt(fan_in)`); biases, where used, start at zero.
fn init_linear(rng: &mut Rng, fan_in: usize, fan_out: usize, with_bias: bool) -> Linear {
    let bound = libm::sqrtf(3.0 / fan_in as f32);
    let weight: Vec<f32> = (0..fan_in * fan_out)
        .map(|_| rng.uniform(-bound, bound))
        .collect();
    Linear {
        weight: Tensor::new(vec![fan_in, fan_out], weight)
            .expect("sized weight")
            .with_requires_grad(),
        bias: with_bias.then(|| Tensor::zeros(vec![fan_out]).with_requires_grad()),
    }
}

impl ModelParams {
    /// Deterministic initialization from a seed.
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut encoder = Vec::with_capacity(config.stage_channels.len());
        let mut in_ch = 3;
        for (stage, (&out_ch, (kernel, stride))) in config
            .stage_channels
            .iter()
            .zip(config.kernels.iter().zip(&config.strides))
            .enumerate()
        {
            let mut rng = Rng::new(derive_seed(seed, &[0x10, stage as u64]));
            let fan_in = in_ch * kernel[0] * kernel[1] * kernel[2];
            let bound = libm::sqrtf(3.0 / fan_in as f32);
            let weight: Vec<f32> = (0..out_ch * fan_in).map(|_| rng.uniform(-bound, bound)).collect();
            encoder.push(ConvLayer {
                weight: Tensor::new(
                    vec![out_ch, in_ch, kernel[0], kernel[1], kernel[2]],
                    weight,
                )?
                .with_requires_grad(),
                bias: Tensor::zeros(vec![out_ch]),
                stride: *stride,
            });
            in_ch = out_ch;
        }
        let d = config.feature_dim();
        let p = config.proj_dim;
        let head_rng = |tag: u64| Rng::new(derive_seed(seed, &[0x20, tag]));
        Ok(ModelParams {
            config: config.clone(),
            encoder,
            proj_appearance: init_linear(&mut head_rng(1), d, p, false),
            proj_speed: init_linear(&mut head_rng(2), d, p, false),
            pred_appearance: init_linear(&mut head_rng(3), p, p, false),
            pred_speed: init_linear(&mut head_rng(4), p, p, false),
            speed_head: init_linear(&mut head_rng(5), d, config.speed_classes, true),
        })
    }

    /// Stable (name, tensor) listing used by the optimizer and checkpoints.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}.weight"), &layer.weight));
            out.push((format!("encoder.{i}.bias"), &layer.bias));
        }
        for (name, linear) in [
            ("proj_appearance", &self.proj_appearance),
            ("proj_speed", &self.proj_speed),
            ("pred_appearance", &self.pred_appearance),
            ("pred_speed", &self.pred_speed),
            ("speed_head", &self.speed_head),
        ] {
            out.push((format!("{name}.weight"), &linear.weight));
            if let Some(bias) = &linear.bias {
                out.push((format!("{name}.bias"), bias));
            }
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.encoder.iter_mut().enumerate() {
            out.push((format!("encoder.{i}.weight"), &mut layer.weight));
            out.push((format!("encoder.{i}.bias"), &mut layer.bias));
        }
        for (name, linear) in [
            ("proj_appearance", &mut self.proj_appearance),
            ("proj_speed", &mut self.proj_speed),
            ("pred_appearance", &mut self.pred_appearance),
            ("pred_speed", &mut self.pred_speed),
            ("speed_head", &mut self.speed_head),
        ] {
            out.push((format!("{name}.weight"), &mut linear.weight));
            if let Some(bias) = &mut linear.bias {
                out.push((format!("{name}.bias"), bias));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Makes every tensor trainable, including the pretraining-frozen conv
    /// biases. Used by fine-tuning, which trains the whole network.
    pub fn unfreeze_all(&mut self) {
        for (_, tensor) in self.named_tensors_mut() {
            tensor.set_requires_grad(true);
        }
    }

    /// Copies every parameter into a graph once; all forward passes within
    /// the step read these same nodes, which is what shares the encoder.
    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        let bind_linear = |g: &mut Graph, l: &Linear| {
            (g.leaf(&l.weight), l.bias.as_ref().map(|b| g.leaf(b)))
        };
        BoundParams {
            encoder: self
                .encoder
                .iter()
                .map(|l| (g.leaf(&l.weight), g.leaf(&l.bias), l.stride))
                .collect(),
            proj_appearance: bind_linear(g, &self.proj_appearance),
            proj_speed: bind_linear(g, &self.proj_speed),
            pred_appearance: bind_linear(g, &self.pred_appearance),
            pred_speed: bind_linear(g, &self.pred_speed),
            speed_head: bind_linear(g, &self.speed_head),
            feature_dim: self.config.feature_dim(),
        }
    }

    /// After `backward`, pulls gradients out of the graph into the parameter
    /// tensors' own buffers (accumulating). The binding and this call must
    /// refer to the same graph.
    pub fn accumulate_grads_from(&mut self, g: &Graph, bound: &BoundParams) -> Result<()> {
        let mut ids = Vec::new();
        for (w, b, _) in &bound.encoder {
            ids.push(*w);
            ids.push(*b);
        }
        for (w, b) in [
            bound.proj_appearance,
            bound.proj_speed,
            bound.pred_appearance,
            bound.pred_speed,
            bound.speed_head,
        ] {
            ids.push(w);
            if let Some(b) = b {
                ids.push(b);
            }
        }
        for ((_, tensor), id) in self.named_tensors_mut().into_iter().zip(ids) {
            if let Some(grad) = g.grad(id) {
                tensor.accumulate_grad(grad)?;
            }
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for (_, t) in self.named_tensors_mut() {
            t.zero_grad();
        }
    }
}

/// Graph-side handles to one step's parameter leaves.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub encoder: Vec<(NodeId, NodeId, [usize; 3])>,
    pub proj_appearance: (NodeId, Option<NodeId>),
    pub proj_speed: (NodeId, Option<NodeId>),
    pub pred_appearance: (NodeId, Option<NodeId>),
    pub pred_speed: (NodeId, Option<NodeId>),
    pub speed_head: (NodeId, Option<NodeId>),
    feature_dim: usize,
}

impl BoundParams {
    /// Clip batch `[N, 3, T, H, W]` to features `[N, D]`: conv/relu stages
    /// then global average pooling.
    pub fn encode(&self, g: &mut Graph, clips: NodeId) -> Result<NodeId> {
        let mut x = clips;
        for &(weight, bias, stride) in &self.encoder {
            x = g.conv3d(x, weight, bias, stride)?;
            x = g.relu(x)?;
        }
        g.global_avg_pool(x)
    }

    /// Projects encoder features into the chosen embedding space and
    /// L2-normalizes each row.
    pub fn project(&self, g: &mut Graph, x: NodeId, head: Head) -> Result<NodeId> {
        if g.shape(x).len() != 2 || g.shape(x)[1] != self.feature_dim {
            return Err(Error::Shape(format!(
                "project expects [N, {}], got {:?}",
                self.feature_dim,
                g.shape(x)
            )));
        }
        let (w, b) = match head {
            Head::Appearance => self.proj_appearance,
            Head::Speed => self.proj_speed,
        };
        let mut affine = g.matmul(x, w)?;
        if let Some(b) = b {
            affine = g.bias_add(affine, b)?;
        }
        g.l2_normalize(affine)
    }

    /// Online-branch predictor in the chosen space, L2-normalized so losses
    /// stay within [0, 4].
    pub fn predict(&self, g: &mut Graph, v: NodeId, head: Head) -> Result<NodeId> {
        let (w, b) = match head {
            Head::Appearance => self.pred_appearance,
            Head::Speed => self.pred_speed,
        };
        if g.shape(v).len() != 2 || g.shape(v)[1] != g.shape(w)[0] {
            return Err(Error::Shape(format!(
                "predict expects [N, {}], got {:?}",
                g.shape(w)[0],
                g.shape(v)
            )));
        }
        let mut affine = g.matmul(v, w)?;
        if let Some(b) = b {
            affine = g.bias_add(affine, b)?;
        }
        g.l2_normalize(affine)
    }

    /// Raw playback-speed logits `[N, M]`; no normalization.
    pub fn speed_logits(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        if g.shape(x).len() != 2 || g.shape(x)[1] != self.feature_dim {
            return Err(Error::Shape(format!(
                "speed_logits expects [N, {}], got {:?}",
                self.feature_dim,
                g.shape(x)
            )));
        }
        let (w, b) = self.speed_head;
        let logits = g.matmul(x, w)?;
        match b {
            Some(b) => g.bias_add(logits, b),
            None => Ok(logits),
        }
    }
}

/// Assembles clip pixel buffers (`[T, H, W, 3]` each) into one channel-first
/// batch tensor `[N, 3, T, H, W]`.
pub fn clips_to_batch(clips: &[Vec<f32>], t: usize, h: usize, w: usize) -> Result<Tensor> {
    let n = clips.len();
    if n == 0 {
        return Err(Error::Shape("empty clip batch".into()));
    }
    let frame = h * w * 3;
    let mut values = vec![0.0f32; n * 3 * t * h * w];
    for (i, clip) in clips.iter().enumerate() {
        if clip.len() != t * frame {
            return Err(Error::Shape(format!(
                "clip {i} has {} values, expected {}",
                clip.len(),
                t * frame
            )));
        }
        for ft in 0..t {
            for y in 0..h {
                for x in 0..w {
                    let src = ft * frame + (y * w + x) * 3;
                    for c in 0..3 {
                        values[(((i * 3 + c) * t + ft) * h + y) * w + x] = clip[src + c];
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, 3, t, h, w], values)
}
