//! Consistency losses, the speed-prediction baseline loss, and the
//! appearance memory bank used to retrieve "similar instance" partners.

use alloc::format;
use alloc::vec::Vec;

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};

/// Mean squared distance between predicted and target appearance embeddings:
/// `mean_i || pred_i - target_i ||^2`. For unit-norm rows this equals
/// `2 - 2 cos` and lies in `[0, 4]`. The target is expected to be detached;
/// this function does not detach for the caller.
pub fn acp_loss(g: &mut Graph, pred: NodeId, target: NodeId) -> Result<NodeId> {
    consistency_loss(g, pred, target)
}

/// Same contract as [`acp_loss`], applied in the speed embedding space.
pub fn scp_loss(g: &mut Graph, pred: NodeId, target: NodeId) -> Result<NodeId> {
    consistency_loss(g, pred, target)
}

fn consistency_loss(g: &mut Graph, pred: NodeId, target: NodeId) -> Result<NodeId> {
    let shape = g.shape(pred);
    if shape.len() != 2 || shape != g.shape(target) {
        return Err(Error::Shape(format!(
            "consistency loss expects matching [N, D] inputs, got {:?} and {:?}",
            g.shape(pred),
            g.shape(target)
        )));
    }
    let rows = shape[0];
    let diff = g.sub(pred, target)?;
    let sq = g.mul(diff, diff)?;
    let total = g.sum_all(sq)?;
    g.scale(total, 1.0 / rows as f32)
}

/// Weighted sum of the two task losses: `gamma * l_m + (1 - gamma) * l_a`.
pub fn combined_loss_value(l_a: f32, l_m: f32, gamma: f32) -> Result<f32> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(gamma * l_m + (1.0 - gamma) * l_a)
}

/// Graph version of [`combined_loss_value`], for backprop.
pub fn combined_loss(g: &mut Graph, l_a: NodeId, l_m: NodeId, gamma: f32) -> Result<NodeId> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma {gamma} outside [0, 1]")));
    }
    let weighted_m = g.scale(l_m, gamma)?;
    let weighted_a = g.scale(l_a, 1.0 - gamma)?;
    g.add(weighted_m, weighted_a)
}

/// Mean softmax cross-entropy of playback-speed logits against speed labels.
pub fn sp_loss(g: &mut Graph, logits: NodeId, speed_labels: &[usize]) -> Result<NodeId> {
    g.softmax_cross_entropy(logits, speed_labels)
}

/// One entry of the retrieval gallery.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    /// Unit-norm appearance embedding.
    pub vector: Vec<f32>,
    pub video_id: u64,
    /// Monotone insertion counter; smaller is older.
    pub insert_step: u64,
}

/// Fixed-capacity FIFO ring of appearance features.
///
/// Inserting past capacity overwrites the oldest record. Retrieval scans all
/// live records, which at desk scale means the bank effectively covers every
/// other video once warm.
#[derive(Debug, Clone)]
pub struct MemoryBank {
    capacity: usize,
    ring: Vec<FeatureRecord>,
    write_cursor: usize,
}

impl MemoryBank {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("memory bank capacity must be positive".into()));
        }
        Ok(MemoryBank {
            capacity,
            ring: Vec::new(),
            write_cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.ring
    }

    /// FIFO insert. The vector must be unit norm (within 1e-5).
    pub fn insert(&mut self, record: FeatureRecord) -> Result<()> {
        let norm = libm::sqrt(
            record
                .vector
                .iter()
                .map(|&v| (v as f64) * (v as f64))
                .sum::<f64>(),
        );
        if (norm - 1.0).abs() > 1e-5 {
            return Err(Error::DegenerateFeature(format!(
                "bank insert needs a unit vector, got norm {norm:.6}"
            )));
        }
        if self.ring.len() < self.capacity {
            self.ring.push(record);
        } else {
            self.ring[self.write_cursor] = record;
        }
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
        Ok(())
    }

    /// Returns the record with the highest dot product against `query`,
    /// skipping records from `exclude_video_id`. Ties go to the oldest
    /// (smallest insert step).
    pub fn retrieve_similar(&self, query: &[f32], exclude_video_id: u64) -> Result<&FeatureRecord> {
        let mut best: Option<(&FeatureRecord, f32)> = None;
        for record in &self.ring {
            if record.video_id == exclude_video_id {
                continue;
            }
            let mut dot = 0.0f32;
            for (q, v) in query.iter().zip(&record.vector) {
                dot += q * v;
            }
            best = match best {
                None => Some((record, dot)),
                Some((cur, cur_dot)) => {
                    if dot > cur_dot
                        || (dot == cur_dot && record.insert_step < cur.insert_step)
                    {
                        Some((record, dot))
                    } else {
                        Some((cur, cur_dot))
                    }
                }
            };
        }
        best.map(|(r, _)| r).ok_or(Error::NoCandidate)
    }

    /// Rebuilds a bank from checkpointed parts.
    pub fn from_parts(capacity: usize, ring: Vec<FeatureRecord>, write_cursor: usize) -> Result<Self> {
        if capacity == 0 || ring.len() > capacity || (write_cursor >= capacity && capacity > 0) {
            return Err(Error::Config(format!(
                "inconsistent bank state: capacity {capacity}, {} records, cursor {write_cursor}",
                ring.len()
            )));
        }
        Ok(MemoryBank {
            capacity,
            ring,
            write_cursor,
        })
    }

    pub fn write_cursor(&self) -> usize {
        self.write_cursor
    }
}
