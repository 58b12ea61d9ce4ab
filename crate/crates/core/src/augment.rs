//! The pretraining augmentation stack.
//!
//! Order is fixed: random crop with resize first, then color jitter, Gaussian
//! blur, random grayscale, and solarization. Every random parameter is drawn
//! once per clip and the same transform is applied to all frames, so targets
//! stay temporally coherent. Output values are clamped to `[0, 1]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::synth::VideoClip;

/// Rec. 601 luminance weights used for grayscale and saturation.
pub const LUMA: [f32; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub crop_enabled: bool,
    /// Area fraction of the source frame kept by the random crop. The source
    /// gives no scale range for its crop-with-resize; (0.4, 1.0) is this
    /// implementation's default.
    pub crop_scale_range: (f32, f32),
    pub jitter_enabled: bool,
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
    pub blur_enabled: bool,
    pub blur_sigma_range: (f32, f32),
    pub grayscale_enabled: bool,
    pub grayscale_prob: f32,
    pub solarize_enabled: bool,
    pub solarize_prob: f32,
    /// Pixels at or above this value are inverted to `1 - v`.
    pub solarize_threshold: f32,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            crop_enabled: true,
            crop_scale_range: (0.4, 1.0),
            jitter_enabled: true,
            brightness: 0.5,
            contrast: 0.5,
            saturation: 0.5,
            blur_enabled: true,
            blur_sigma_range: (0.1, 1.5),
            grayscale_enabled: true,
            grayscale_prob: 0.2,
            solarize_enabled: true,
            solarize_prob: 0.2,
            solarize_threshold: 0.5,
        }
    }
}

impl AugmentConfig {
    /// Identity configuration: every transform disabled.
    pub fn disabled() -> Self {
        AugmentConfig {
            crop_enabled: false,
            jitter_enabled: false,
            blur_enabled: false,
            grayscale_enabled: false,
            solarize_enabled: false,
            ..AugmentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("grayscale_prob", self.grayscale_prob),
            ("solarize_prob", self.solarize_prob),
            ("solarize_threshold", self.solarize_threshold),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        for (name, s) in [
            ("brightness", self.brightness),
            ("contrast", self.contrast),
            ("saturation", self.saturation),
        ] {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!("{name} strength {s} outside [0, 1]")));
            }
        }
        let (clo, chi) = self.crop_scale_range;
        if !(clo > 0.0 && clo <= chi && chi <= 1.0) {
            return Err(Error::Config(format!(
                "crop scale range ({clo}, {chi}) must satisfy 0 < min <= max <= 1"
            )));
        }
        let (blo, bhi) = self.blur_sigma_range;
        if !(blo >= 0.0 && blo <= bhi) {
            return Err(Error::Config(format!(
                "blur sigma range ({blo}, {bhi}) must be ordered and non-negative"
            )));
        }
        Ok(())
    }
}

/// Applies the full stack to a clip, producing an `out_h x out_w` clip.
///
/// Deterministic in `(clip, config, seed)`; per-clip parameters are drawn in
/// a fixed order, one stage at a time.
pub fn augment(
    clip: &VideoClip,
    config: &AugmentConfig,
    out_h: usize,
    out_w: usize,
    seed: u64,
) -> Result<VideoClip> {
    config.validate()?;
    let mut rng = Rng::new(seed);

    let mut out = if config.crop_enabled {
        let area = rng.uniform(config.crop_scale_range.0, config.crop_scale_range.1);
        let max_side = clip.h.min(clip.w);
        let side = libm::roundf(libm::sqrtf(area) * max_side as f32) as usize;
        let side = side.clamp(1, max_side);
        let y0 = rng.below((clip.h - side + 1) as u64) as usize;
        let x0 = rng.below((clip.w - side + 1) as u64) as usize;
        resize_window(clip, y0, x0, side, side, out_h, out_w)
    } else {
        center_crop(clip, out_h, out_w)?
    };

    if config.jitter_enabled {
        let fb = rng.uniform((1.0 - config.brightness).max(0.0), 1.0 + config.brightness);
        let fc = rng.uniform((1.0 - config.contrast).max(0.0), 1.0 + config.contrast);
        let fs = rng.uniform((1.0 - config.saturation).max(0.0), 1.0 + config.saturation);
        for v in &mut out.pixels {
            *v *= fb;
        }
        // Contrast pulls toward the clip-wide gray mean so the mapping is
        // identical on every frame.
        let mean_gray = gray_mean(&out.pixels);
        for v in &mut out.pixels {
            *v = (*v - mean_gray) * fc + mean_gray;
        }
        for px in out.pixels.chunks_exact_mut(3) {
            let gray = LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2];
            for c in px {
                *c = gray + (*c - gray) * fs;
            }
        }
    }

    if config.blur_enabled {
        let sigma = rng.uniform(config.blur_sigma_range.0, config.blur_sigma_range.1);
        gaussian_blur(&mut out, sigma);
    }

    if config.grayscale_enabled && rng.coin(config.grayscale_prob) {
        for px in out.pixels.chunks_exact_mut(3) {
            let gray = LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2];
            px.fill(gray);
        }
    }

    if config.solarize_enabled && rng.coin(config.solarize_prob) {
        for v in &mut out.pixels {
            if *v >= config.solarize_threshold {
                *v = 1.0 - *v;
            }
        }
    }

    for v in &mut out.pixels {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Deterministic center crop used by the evaluation protocol (and as the
/// no-crop path in `augment`). No resizing: requires the clip to be at least
/// `out_h x out_w`.
pub fn center_crop(clip: &VideoClip, out_h: usize, out_w: usize) -> Result<VideoClip> {
    if out_h > clip.h || out_w > clip.w {
        return Err(Error::Shape(format!(
            "center crop {out_h}x{out_w} larger than clip {}x{}",
            clip.h, clip.w
        )));
    }
    if out_h == clip.h && out_w == clip.w {
        return Ok(clip.clone());
    }
    let y0 = (clip.h - out_h) / 2;
    let x0 = (clip.w - out_w) / 2;
    let mut pixels = Vec::with_capacity(clip.n_frames * out_h * out_w * 3);
    for f in 0..clip.n_frames {
        let fbase = f * clip.h * clip.w * 3;
        for y in 0..out_h {
            let row = fbase + ((y0 + y) * clip.w + x0) * 3;
            pixels.extend_from_slice(&clip.pixels[row..row + out_w * 3]);
        }
    }
    Ok(VideoClip {
        pixels,
        n_frames: clip.n_frames,
        h: out_h,
        w: out_w,
        ..clip.clone()
    })
}

/// Bilinear resize of a square window to the output size, same window for
/// every frame. Half-pixel-center sampling, so a full-frame window at equal
/// size reproduces the input exactly.
fn resize_window(
    clip: &VideoClip,
    y0: usize,
    x0: usize,
    win_h: usize,
    win_w: usize,
    out_h: usize,
    out_w: usize,
) -> VideoClip {
    let sy = win_h as f32 / out_h as f32;
    let sx = win_w as f32 / out_w as f32;
    let mut pixels = Vec::with_capacity(clip.n_frames * out_h * out_w * 3);
    for f in 0..clip.n_frames {
        let fbase = f * clip.h * clip.w * 3;
        for oy in 0..out_h {
            let src_y = ((oy as f32 + 0.5) * sy - 0.5).max(0.0);
            let iy = (src_y as usize).min(win_h - 1);
            let iy1 = (iy + 1).min(win_h - 1);
            let wy = src_y - iy as f32;
            for ox in 0..out_w {
                let src_x = ((ox as f32 + 0.5) * sx - 0.5).max(0.0);
                let ix = (src_x as usize).min(win_w - 1);
                let ix1 = (ix + 1).min(win_w - 1);
                let wx = src_x - ix as f32;
                let p00 = fbase + ((y0 + iy) * clip.w + x0 + ix) * 3;
                let p01 = fbase + ((y0 + iy) * clip.w + x0 + ix1) * 3;
                let p10 = fbase + ((y0 + iy1) * clip.w + x0 + ix) * 3;
                let p11 = fbase + ((y0 + iy1) * clip.w + x0 + ix1) * 3;
                for c in 0..3 {
                    let top = clip.pixels[p00 + c] * (1.0 - wx) + clip.pixels[p01 + c] * wx;
                    let bot = clip.pixels[p10 + c] * (1.0 - wx) + clip.pixels[p11 + c] * wx;
                    pixels.push(top * (1.0 - wy) + bot * wy);
                }
            }
        }
    }
    VideoClip {
        pixels,
        n_frames: clip.n_frames,
        h: out_h,
        w: out_w,
        ..clip.clone()
    }
}

fn gray_mean(pixels: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for px in pixels.chunks_exact(3) {
        acc += (LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2]) as f64;
    }
    (acc / (pixels.len() / 3) as f64) as f32
}

/// Separable Gaussian blur, one sigma for the whole clip, clamped borders.
fn gaussian_blur(clip: &mut VideoClip, sigma: f32) {
    if sigma <= 0.0 {
        return;
    }
    let radius = libm::ceilf(2.0 * sigma).max(1.0) as usize;
    let mut weights = Vec::with_capacity(2 * radius + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut sum = 0.0f32;
    for i in -(radius as i32)..=(radius as i32) {
        let w = libm::expf(-(i * i) as f32 * inv);
        weights.push(w);
        sum += w;
    }
    for w in &mut weights {
        *w /= sum;
    }

    let (h, w, r) = (clip.h, clip.w, radius as i32);
    let frame_len = h * w * 3;
    let mut scratch = vec![0.0f32; frame_len];
    for f in 0..clip.n_frames {
        let frame = &mut clip.pixels[f * frame_len..(f + 1) * frame_len];
        // Horizontal pass into scratch.
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0f32;
                    for (k, wt) in weights.iter().enumerate() {
                        let sx = (x as i32 + k as i32 - r).clamp(0, w as i32 - 1) as usize;
                        acc += wt * frame[(y * w + sx) * 3 + c];
                    }
                    scratch[(y * w + x) * 3 + c] = acc;
                }
            }
        }
        // Vertical pass back into the frame.
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0f32;
                    for (k, wt) in weights.iter().enumerate() {
                        let sy = (y as i32 + k as i32 - r).clamp(0, h as i32 - 1) as usize;
                        acc += wt * scratch[(sy * w + x) * 3 + c];
                    }
                    frame[(y * w + x) * 3 + c] = acc;
                }
            }
        }
    }
}
