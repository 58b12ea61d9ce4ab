//! Procedural video corpus with known appearance classes and motion.
//!
//! Each video is a static class-specific background texture (quantized value
//! noise, class-tinted) with a class-specific filled polygon translating at a
//! fixed speed across a toroidal canvas. The appearance class is readable
//! from any single frame; the only temporal signal is how far the polygon
//! moves between frames, so a clip's playback speed (frame sampling interval)
//! is the only speed cue a model can pick up. All randomness flows from the
//! video seed, making regeneration bit-exact.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::{Rng, derive_seed};

/// Playback speed: the frame sampling interval used when extracting a clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpeedClass(usize);

/// Intervals supported corpus-wide; configs may restrict to a subset.
pub const SUPPORTED_SPEEDS: [usize; 4] = [1, 2, 4, 8];

impl SpeedClass {
    pub fn new(interval: usize) -> Result<Self> {
        if SUPPORTED_SPEEDS.contains(&interval) {
            Ok(SpeedClass(interval))
        } else {
            Err(Error::Config(format!(
                "playback speed {interval} not in {SUPPORTED_SPEEDS:?}"
            )))
        }
    }

    pub fn interval(self) -> usize {
        self.0
    }
}

/// A generated video: `[T, H, W, 3]` pixels in `[0, 1]` plus its labels.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub video_id: u64,
    pub frames: Vec<f32>,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub appearance_class: usize,
    pub motion_speed: f32,
    pub seed: u64,
}

impl SyntheticVideo {
    pub fn frame(&self, index: usize) -> &[f32] {
        let stride = self.h * self.w * 3;
        &self.frames[index * stride..(index + 1) * stride]
    }
}

/// A sampled clip: `[n_frames, H, W, 3]` pixels plus provenance.
#[derive(Debug, Clone)]
pub struct VideoClip {
    pub pixels: Vec<f32>,
    pub n_frames: usize,
    pub h: usize,
    pub w: usize,
    pub video_id: u64,
    pub start: usize,
    pub speed: SpeedClass,
}

/// Corpus-level generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub n_videos: usize,
    pub n_classes: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Pixels per source frame the foreground shape travels. Identical for
    /// every class so playback speed stays the only speed signal.
    pub motion_speed: f32,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_videos: 200,
            n_classes: 8,
            frames: 128,
            height: 32,
            width: 32,
            motion_speed: 1.0,
            seed: 7,
        }
    }
}

const TAG_VIDEO_SEED: u64 = 0x5eed01;
const TAG_TEXTURE: u64 = 0x7e3702;
const TAG_MOTION: u64 = 0x307703;

/// Minimum video length: a 16-frame clip at the largest supported interval
/// needs indices up to 8 * 15 = 120.
pub const MIN_VIDEO_FRAMES: usize = 128;

/// Generates one deterministic video.
pub fn generate_video(
    seed: u64,
    video_id: u64,
    appearance_class: usize,
    motion_speed: f32,
    t: usize,
    h: usize,
    w: usize,
) -> Result<SyntheticVideo> {
    if t < MIN_VIDEO_FRAMES {
        return Err(Error::Config(format!(
            "video length {t} cannot host 16-frame clips at interval 8; need >= {MIN_VIDEO_FRAMES}"
        )));
    }
    if h < 32 || w < 32 {
        return Err(Error::Config(format!(
            "frame size {h}x{w} below the 32x32 minimum"
        )));
    }
    if !(motion_speed.is_finite() && motion_speed >= 0.0) {
        return Err(Error::Config(format!("bad motion speed {motion_speed}")));
    }

    let background = render_background(appearance_class, h, w);
    let motion = MotionParams::from_seed(seed, h, w);
    let (shape_r, shape_g, shape_b) = class_shape_color(appearance_class);
    let sides = class_shape_sides(appearance_class);
    let radius = 0.3 * h.min(w) as f32;
    let apothem = radius * libm::cosf(core::f32::consts::PI / sides as f32);

    let mut frames = Vec::with_capacity(t * h * w * 3);
    for frame in 0..t {
        let (cx, cy) = motion.center(motion_speed, frame, w, h);
        for py in 0..h {
            for px in 0..w {
                let dx = wrap_delta(px as f32 + 0.5 - cx, w as f32);
                let dy = wrap_delta(py as f32 + 0.5 - cy, h as f32);
                let inside = point_in_regular_polygon(dx, dy, sides, motion.phase, radius, apothem);
                let base = (py * w + px) * 3;
                if inside {
                    frames.push(shape_r);
                    frames.push(shape_g);
                    frames.push(shape_b);
                } else {
                    frames.push(background[base]);
                    frames.push(background[base + 1]);
                    frames.push(background[base + 2]);
                }
            }
        }
    }
    Ok(SyntheticVideo {
        video_id,
        frames,
        t,
        h,
        w,
        appearance_class,
        motion_speed,
        seed,
    })
}

/// Generates the full corpus; classes are assigned round-robin so they stay
/// balanced, and every per-video seed derives from the corpus seed.
pub fn generate_corpus(config: &CorpusConfig) -> Result<Vec<SyntheticVideo>> {
    if config.n_videos == 0 || config.n_classes == 0 {
        return Err(Error::Config(
            "corpus needs at least one video and one class".into(),
        ));
    }
    (0..config.n_videos)
        .map(|i| {
            generate_video(
                derive_seed(config.seed, &[TAG_VIDEO_SEED, i as u64]),
                i as u64,
                i % config.n_classes,
                config.motion_speed,
                config.frames,
                config.height,
                config.width,
            )
        })
        .collect()
}

/// Foreground center at a given frame, as a pure function of the video seed.
/// Exposed so tests can check displacement analytically.
pub fn shape_center(seed: u64, motion_speed: f32, frame: usize, h: usize, w: usize) -> (f32, f32) {
    MotionParams::from_seed(seed, h, w).center(motion_speed, frame, w, h)
}

struct MotionParams {
    x0: f32,
    y0: f32,
    dir_x: f32,
    dir_y: f32,
    phase: f32,
}

impl MotionParams {
    fn from_seed(seed: u64, h: usize, w: usize) -> Self {
        let mut rng = Rng::new(derive_seed(seed, &[TAG_MOTION]));
        let x0 = rng.uniform(0.0, w as f32);
        let y0 = rng.uniform(0.0, h as f32);
        let angle = rng.uniform(0.0, core::f32::consts::TAU);
        let phase = rng.uniform(0.0, core::f32::consts::TAU);
        MotionParams {
            x0,
            y0,
            dir_x: libm::cosf(angle),
            dir_y: libm::sinf(angle),
            phase,
        }
    }

    fn center(&self, motion_speed: f32, frame: usize, w: usize, h: usize) -> (f32, f32) {
        let dist = motion_speed * frame as f32;
        (
            wrap_position(self.x0 + dist * self.dir_x, w as f32),
            wrap_position(self.y0 + dist * self.dir_y, h as f32),
        )
    }
}

/// Signed toroidal offset in `[-size/2, size/2]`.
pub fn wrap_delta(d: f32, size: f32) -> f32 {
    d - size * libm::roundf(d / size)
}

fn wrap_position(p: f32, size: f32) -> f32 {
    let r = p - size * libm::floorf(p / size);
    if r >= size { r - size } else { r }
}

fn point_in_regular_polygon(
    dx: f32,
    dy: f32,
    sides: usize,
    phase: f32,
    radius: f32,
    apothem: f32,
) -> bool {
    let dist2 = dx * dx + dy * dy;
    if dist2 > radius * radius {
        return false;
    }
    if dist2 <= apothem * apothem {
        return true;
    }
    let sector = core::f32::consts::TAU / sides as f32;
    let alpha = libm::atan2f(dy, dx) - phase;
    let frac = alpha - sector * libm::floorf(alpha / sector);
    let dist = libm::sqrtf(dist2);
    dist * libm::cosf(frac - sector * 0.5) <= apothem
}

fn class_texture_seed(class: usize) -> u64 {
    derive_seed(0xa55e_7bac, &[TAG_TEXTURE, class as u64])
}

fn class_hue(class: usize) -> f32 {
    // Golden-ratio spacing keeps hues distinct for any class count.
    let hue = class as f32 * 0.618_034;
    hue - libm::floorf(hue)
}

/// Per-class base luminance, spread over a wide range so classes separate in
/// brightness as well as hue (single-frame class identity needs to survive
/// grayscale augmentation too).
fn class_value(class: usize) -> f32 {
    let phase = class as f32 * 0.381_966;
    0.6 + 0.4 * (phase - libm::floorf(phase))
}

fn class_shape_sides(class: usize) -> usize {
    3 + class % 8
}

fn class_shape_color(class: usize) -> (f32, f32, f32) {
    let hue = class_hue(class) + 0.5;
    hsv_to_rgb(hue - libm::floorf(hue), 0.9, 0.95)
}

/// Noise cell size (width, height) in pixels. Anisotropic cells give each
/// class an oriented, frequency-distinct texture, which separates classes in
/// the channel patterns of a random convolutional encoder far more strongly
/// than color alone.
fn class_cell(class: usize) -> (usize, usize) {
    [
        (2, 12),
        (12, 2),
        (3, 3),
        (10, 10),
        (2, 5),
        (5, 2),
        (16, 3),
        (3, 16),
    ][class % 8]
}

fn class_levels(class: usize) -> f32 {
    [2.0, 3.0, 2.0, 4.0][class % 4]
}

/// Static per-class background: quantized value noise modulating a tinted
/// base color. Cell geometry, quantization, hue, and luminance all vary by
/// class, so class identity shows up in texture statistics as well as color.
fn render_background(class: usize, h: usize, w: usize) -> Vec<f32> {
    let (cell_x, cell_y) = class_cell(class);
    let levels = class_levels(class);
    let tex_seed = class_texture_seed(class);
    let gw = w / cell_x + 2;
    let gh = h / cell_y + 2;
    let lattice: Vec<f32> = (0..gw * gh)
        .map(|i| Rng::new(derive_seed(tex_seed, &[i as u64])).next_f32())
        .collect();
    let (base_r, base_g, base_b) = hsv_to_rgb(class_hue(class), 0.75, class_value(class));

    let mut out = Vec::with_capacity(h * w * 3);
    for py in 0..h {
        let gy = py / cell_y;
        let fy = (py % cell_y) as f32 / cell_y as f32;
        for px in 0..w {
            let gx = px / cell_x;
            let fx = (px % cell_x) as f32 / cell_x as f32;
            let v00 = lattice[gy * gw + gx];
            let v10 = lattice[gy * gw + gx + 1];
            let v01 = lattice[(gy + 1) * gw + gx];
            let v11 = lattice[(gy + 1) * gw + gx + 1];
            let v = v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy;
            let q = libm::floorf(v * levels).min(levels - 1.0) / (levels - 1.0);
            let brightness = 0.08 + 0.9 * q;
            out.push((base_r * brightness).clamp(0.0, 1.0));
            out.push((base_g * brightness).clamp(0.0, 1.0));
            out.push((base_b * brightness).clamp(0.0, 1.0));
        }
    }
    out
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let h6 = h * 6.0;
    let i = libm::floorf(h6) as i32 % 6;
    let f = h6 - libm::floorf(h6);
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

/// Extracts the frames `start, start + s, ..., start + (n-1) s`.
pub fn sample_clip(
    video: &SyntheticVideo,
    start: usize,
    speed: SpeedClass,
    n_frames: usize,
) -> Result<VideoClip> {
    if n_frames == 0 {
        return Err(Error::Range("clip needs at least one frame".into()));
    }
    let last = start + (n_frames - 1) * speed.interval();
    if last >= video.t {
        return Err(Error::Range(format!(
            "clip needs frame {last} but video {} has only {} frames",
            video.video_id, video.t
        )));
    }
    let stride = video.h * video.w * 3;
    let mut pixels = Vec::with_capacity(n_frames * stride);
    for i in 0..n_frames {
        pixels.extend_from_slice(video.frame(start + i * speed.interval()));
    }
    Ok(VideoClip {
        pixels,
        n_frames,
        h: video.h,
        w: video.w,
        video_id: video.video_id,
        start,
        speed,
    })
}

/// Evenly spaced clip starts: `round(i (T - span) / (n - 1))`, so the first
/// clip begins at 0 and the last at `T - span`.
pub fn uniform_clip_starts(
    total_frames: usize,
    n_clips: usize,
    clip_span: usize,
) -> Result<Vec<usize>> {
    if clip_span == 0 || n_clips == 0 {
        return Err(Error::Range(
            "clip span and clip count must be positive".into(),
        ));
    }
    if clip_span > total_frames {
        return Err(Error::Range(format!(
            "clip span {clip_span} exceeds video length {total_frames}"
        )));
    }
    let reach = (total_frames - clip_span) as f64;
    if n_clips == 1 {
        return Ok(vec![0]);
    }
    Ok((0..n_clips)
        .map(|i| libm::round(i as f64 * reach / (n_clips - 1) as f64) as usize)
        .collect())
}
