//! Corpus persistence: a JSON manifest plus one raw little-endian f32 pixel
//! file per video (`[T, H, W, 3]`, row-major). Pixel files are optional; when
//! absent the corpus regenerates deterministically from the manifest.

use anyhow::{Context, Result, bail};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ascnet_core::synth::{CorpusConfig, SyntheticVideo, generate_corpus, generate_video};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub video_id: u64,
    pub appearance_class: usize,
    pub motion_speed: f32,
    pub seed: u64,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub videos: Vec<ManifestEntry>,
}

fn pixel_file(dir: &Path, video_id: u64) -> PathBuf {
    dir.join(format!("video_{video_id:05}.f32"))
}

fn write_f32s(path: &Path, values: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(&buf)?;
    Ok(())
}

fn read_f32s(path: &Path) -> Result<Vec<f32>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() % 4 != 0 {
        bail!("{} is not a whole number of f32 values", path.display());
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Writes manifest plus pixel blobs. Deterministic content, so a rerun over
/// existing output leaves every byte unchanged.
pub fn write_corpus(dir: &Path, corpus: &[SyntheticVideo]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating data dir {}", dir.display()))?;
    let manifest = Manifest {
        videos: corpus
            .iter()
            .map(|v| ManifestEntry {
                video_id: v.video_id,
                appearance_class: v.appearance_class,
                motion_speed: v.motion_speed,
                seed: v.seed,
                frames: v.t,
                height: v.h,
                width: v.w,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join(MANIFEST_NAME), json)?;
    for video in corpus {
        write_f32s(&pixel_file(dir, video.video_id), &video.frames)?;
    }
    Ok(())
}

/// Loads a corpus from `dir` if a manifest exists there (reading pixel files
/// when present, regenerating otherwise); falls back to generating the whole
/// corpus from `config` in memory.
pub fn load_or_generate(dir: &Path, config: &CorpusConfig) -> Result<Vec<SyntheticVideo>> {
    let manifest_path = dir.join(MANIFEST_NAME);
    if !manifest_path.exists() {
        return generate_corpus(config).map_err(anyhow::Error::from);
    }
    let text = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", manifest_path.display()))?;
    manifest
        .videos
        .iter()
        .map(|entry| {
            let expected = entry.frames * entry.height * entry.width * 3;
            let path = pixel_file(dir, entry.video_id);
            if path.exists() {
                let frames = read_f32s(&path)?;
                if frames.len() != expected {
                    bail!(
                        "{} holds {} values, manifest expects {expected}",
                        path.display(),
                        frames.len()
                    );
                }
                Ok(SyntheticVideo {
                    video_id: entry.video_id,
                    frames,
                    t: entry.frames,
                    h: entry.height,
                    w: entry.width,
                    appearance_class: entry.appearance_class,
                    motion_speed: entry.motion_speed,
                    seed: entry.seed,
                })
            } else {
                generate_video(
                    entry.seed,
                    entry.video_id,
                    entry.appearance_class,
                    entry.motion_speed,
                    entry.frames,
                    entry.height,
                    entry.width,
                )
                .map_err(anyhow::Error::from)
            }
        })
        .collect()
}
