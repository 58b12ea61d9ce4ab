//! Test-only f64 shadow implementations and the central finite-difference
//! driver. These never call into the autodiff graph: they are the oracle the
//! graph is checked against.

#![allow(dead_code)]

use ascnet_core::rng::Rng;

pub const FD_STEP: f64 = 1e-2;
pub const REL_TOL: f64 = 1e-3;
pub const ABS_FLOOR: f64 = 1e-6;

pub fn close(autodiff: f64, fd: f64) -> bool {
    let diff = (autodiff - fd).abs();
    diff <= ABS_FLOOR || diff <= REL_TOL * autodiff.abs().max(fd.abs())
}

pub fn rand_vec(rng: &mut Rng, len: usize, lo: f32, hi: f32) -> Vec<f32> {
    (0..len).map(|_| rng.uniform(lo, hi)).collect()
}

// ---- f64 shadow ops ------------------------------------------------------

pub fn matmul64(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..k {
                acc += a[i * k + p] * b[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Records the sign of each input (true = passed through). FD steps that
/// flip a sign sit on the relu kink and are skipped by the driver.
pub fn relu64(x: &[f64], signs: &mut Vec<bool>) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            signs.push(v > 0.0);
            v.max(0.0)
        })
        .collect()
}

#[derive(Clone, Copy)]
pub struct ConvDims {
    pub n: usize,
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub kt: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: [usize; 3],
}

impl ConvDims {
    pub fn out(&self) -> (usize, usize, usize) {
        (
            (self.t - self.kt) / self.stride[0] + 1,
            (self.h - self.kh) / self.stride[1] + 1,
            (self.w - self.kw) / self.stride[2] + 1,
        )
    }
}

pub fn conv3d64(input: &[f64], kernel: &[f64], bias: &[f64], d: &ConvDims) -> Vec<f64> {
    let (to, ho, wo) = d.out();
    let mut out = vec![0.0; d.n * d.k * to * ho * wo];
    for n in 0..d.n {
        for k in 0..d.k {
            for ot in 0..to {
                for oh in 0..ho {
                    for ow in 0..wo {
                        let mut acc = bias[k];
                        for c in 0..d.c {
                            for dt in 0..d.kt {
                                for dh in 0..d.kh {
                                    for dw in 0..d.kw {
                                        let it = ot * d.stride[0] + dt;
                                        let ih = oh * d.stride[1] + dh;
                                        let iw = ow * d.stride[2] + dw;
                                        let iv = input
                                            [(((n * d.c + c) * d.t + it) * d.h + ih) * d.w + iw];
                                        let kv = kernel
                                            [(((k * d.c + c) * d.kt + dt) * d.kh + dh) * d.kw + dw];
                                        acc += iv * kv;
                                    }
                                }
                            }
                        }
                        out[(((n * d.k + k) * to + ot) * ho + oh) * wo + ow] = acc;
                    }
                }
            }
        }
    }
    out
}

pub fn global_avg_pool64(x: &[f64], spatial: usize) -> Vec<f64> {
    x.chunks_exact(spatial)
        .map(|b| b.iter().sum::<f64>() / spatial as f64)
        .collect()
}

pub fn l2_normalize64(x: &[f64], d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks_exact(d) {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        out.extend(row.iter().map(|v| v / norm));
    }
    out
}

pub fn bias_add64(x: &[f64], b: &[f64]) -> Vec<f64> {
    x.chunks_exact(b.len())
        .flat_map(|row| row.iter().zip(b).map(|(v, bv)| v + bv).collect::<Vec<_>>())
        .collect()
}

pub fn softmax_ce64(logits: &[f64], labels: &[usize], m: usize) -> f64 {
    let mut loss = 0.0;
    for (row, &label) in logits.chunks_exact(m).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        loss -= (row[label] - max) - denom.ln();
    }
    loss / labels.len() as f64
}

/// Mean over rows of the squared distance between two [N, D] matrices.
pub fn mean_sq_dist64(a: &[f64], b: &[f64], rows: usize) -> f64 {
    let total: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    total / rows as f64
}

// ---- finite differences ----------------------------------------------------

/// Central finite difference over every coordinate of `values`, against a
/// scalar function that also reports the relu sign pattern it saw. Returns
/// per-coordinate gradients with `None` for coordinates whose FD step
/// straddles a relu kink (where FD is not a valid derivative estimate).
pub fn central_differences(
    values: &[f32],
    f: impl FnMut(&[f64]) -> (f64, Vec<bool>),
) -> Vec<Option<f64>> {
    central_differences_with(values, FD_STEP, f)
}

/// Like [`central_differences`] with an explicit step. Row-normalization has
/// enough curvature at O(1) norms that checks through it need a finer step
/// than the 1e-2 used for the (locally linear) convolutions.
pub fn central_differences_with(
    values: &[f32],
    step: f64,
    mut f: impl FnMut(&[f64]) -> (f64, Vec<bool>),
) -> Vec<Option<f64>> {
    let base: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let mut grads = Vec::with_capacity(values.len());
    let mut work = base.clone();
    for i in 0..values.len() {
        work[i] = base[i] + step;
        let (up, signs_up) = f(&work);
        work[i] = base[i] - step;
        let (down, signs_down) = f(&work);
        work[i] = base[i];
        if signs_up != signs_down {
            grads.push(None);
        } else {
            grads.push(Some((up - down) / (2.0 * step)));
        }
    }
    grads
}

/// Checks autodiff gradients against FD results, honoring kink skips.
/// Returns (checked, skipped).
pub fn assert_grads_match(
    autodiff: &[f32],
    fd: &[Option<f64>],
    context: &str,
) -> (usize, usize) {
    assert_eq!(autodiff.len(), fd.len(), "{context}: length mismatch");
    let mut checked = 0;
    let mut skipped = 0;
    for (i, (&ad, fd_i)) in autodiff.iter().zip(fd).enumerate() {
        match fd_i {
            None => skipped += 1,
            Some(fd_v) => {
                checked += 1;
                assert!(
                    close(ad as f64, *fd_v),
                    "{context}: coordinate {i}: autodiff {ad} vs fd {fd_v}"
                );
            }
        }
    }
    (checked, skipped)
}
pub mod gradcheck;
