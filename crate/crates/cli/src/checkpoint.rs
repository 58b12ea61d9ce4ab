//! Checkpoint blobs: a magic/version header, a JSON metadata echo (encoder
//! geometry plus trainer counters), then named little-endian f32 tensors for
//! parameters and optimizer momentum, and the memory-bank records. Loading
//! validates every tensor shape against the embedded configuration, so a
//! checkpoint can only resume a compatible run.

use anyhow::{Context, Result, bail};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use ascnet_core::model::{EncoderConfig, ModelParams};
use ascnet_core::objectives::{FeatureRecord, MemoryBank};
use ascnet_core::opt::LarsState;

const MAGIC: &[u8; 8] = b"ASCNCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckpointMeta {
    pub step: u64,
    pub insert_counter: u64,
    pub seed: u64,
    pub stage_channels: Vec<usize>,
    pub kernels: Vec<[usize; 3]>,
    pub strides: Vec<[usize; 3]>,
    pub clip_shape: [usize; 3],
    pub proj_dim: usize,
    pub speed_classes: usize,
}

impl CheckpointMeta {
    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            stage_channels: self.stage_channels.clone(),
            kernels: self.kernels.clone(),
            strides: self.strides.clone(),
            clip_shape: self.clip_shape,
            proj_dim: self.proj_dim,
            speed_classes: self.speed_classes,
        }
    }
}

pub struct LoadedCheckpoint {
    pub meta: CheckpointMeta,
    pub params: ModelParams,
    pub lars: LarsState,
    pub bank: MemoryBank,
}

fn write_tensor(out: &mut Vec<u8>, name: &str, shape: &[usize], values: &[f32]) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            bail!("checkpoint truncated at byte {}", self.pos);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    fn tensor(&mut self) -> Result<(String, Vec<usize>, Vec<f32>)> {
        let name_len = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(name_len)?)
            .context("tensor name is not utf-8")?
            .to_string();
        let ndim = self.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(self.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let values = self.f32s(len)?;
        Ok((name, shape, values))
    }
}

/// Serializes the complete training state.
pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    lars: &LarsState,
    bank: &MemoryBank,
    step: u64,
    insert_counter: u64,
    seed: u64,
) -> Result<()> {
    let meta = CheckpointMeta {
        step,
        insert_counter,
        seed,
        stage_channels: params.config.stage_channels.clone(),
        kernels: params.config.kernels.clone(),
        strides: params.config.strides.clone(),
        clip_shape: params.config.clip_shape,
        proj_dim: params.config.proj_dim,
        speed_classes: params.config.speed_classes,
    };
    let meta_json = serde_json::to_vec(&meta)?;

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta_json);

    let named = params.named_tensors();
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, tensor) in &named {
        write_tensor(&mut out, name, tensor.shape(), tensor.values());
    }
    out.extend_from_slice(&(lars.velocity.len() as u32).to_le_bytes());
    for ((name, tensor), velocity) in named.iter().zip(&lars.velocity) {
        write_tensor(&mut out, name, tensor.shape(), velocity);
    }

    out.extend_from_slice(&(bank.capacity() as u64).to_le_bytes());
    out.extend_from_slice(&(bank.write_cursor() as u64).to_le_bytes());
    out.extend_from_slice(&(bank.len() as u64).to_le_bytes());
    for record in bank.records() {
        out.extend_from_slice(&record.video_id.to_le_bytes());
        out.extend_from_slice(&record.insert_step.to_le_bytes());
        out.extend_from_slice(&(record.vector.len() as u32).to_le_bytes());
        for v in &record.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating checkpoint {}", path.display()))?;
    file.write_all(&out)?;
    Ok(())
}

/// Loads and validates a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .with_context(|| format!("opening checkpoint {}", path.display()))?
        .read_to_end(&mut bytes)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        bail!("{} is not a checkpoint (bad magic)", path.display());
    }
    let version = r.u32()?;
    if version != VERSION {
        bail!("unsupported checkpoint version {version}");
    }
    let meta_len = r.u32()? as usize;
    let meta: CheckpointMeta =
        serde_json::from_slice(r.take(meta_len)?).context("parsing checkpoint metadata")?;

    let config = meta.encoder_config();
    // Fresh init gives us correctly shaped tensors to validate against.
    let mut params = ModelParams::init(&config, 0).map_err(anyhow::Error::from)?;

    let n_params = r.u32()? as usize;
    let expected = params.named_tensors().len();
    if n_params != expected {
        bail!("checkpoint has {n_params} tensors, config implies {expected}");
    }
    for (expected_name, tensor) in params.named_tensors_mut() {
        let (name, shape, values) = r.tensor()?;
        if name != expected_name {
            bail!("tensor order mismatch: found {name}, expected {expected_name}");
        }
        if shape != tensor.shape() {
            bail!(
                "tensor {name} has shape {shape:?}, config implies {:?}",
                tensor.shape()
            );
        }
        tensor.values_mut().copy_from_slice(&values);
    }

    let n_velocity = r.u32()? as usize;
    if n_velocity != expected {
        bail!("checkpoint has {n_velocity} momentum tensors, expected {expected}");
    }
    let mut velocity = Vec::with_capacity(n_velocity);
    for (expected_name, tensor) in params.named_tensors() {
        let (name, shape, values) = r.tensor()?;
        if name != expected_name || shape != tensor.shape() {
            bail!("momentum tensor {name} does not match parameter {expected_name}");
        }
        velocity.push(values);
    }

    let capacity = r.u64()? as usize;
    let cursor = r.u64()? as usize;
    let count = r.u64()? as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let video_id = r.u64()?;
        let insert_step = r.u64()?;
        let dim = r.u32()? as usize;
        let vector = r.f32s(dim)?;
        records.push(FeatureRecord {
            vector,
            video_id,
            insert_step,
        });
    }
    let bank = MemoryBank::from_parts(capacity, records, cursor).map_err(anyhow::Error::from)?;

    Ok(LoadedCheckpoint {
        meta,
        params,
        lars: LarsState { velocity },
        bank,
    })
}
