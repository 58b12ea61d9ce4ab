//! Reusable gradient-check routines shared by the core test suite and the
//! acceptance suite. Each function validates one operation (or the whole
//! pipeline) for a single seed, panicking with context on mismatch.

use super::*;
use ascnet_core::autodiff::{Graph, Tensor};
use ascnet_core::model::{EncoderConfig, Head, ModelParams, clips_to_batch};
use ascnet_core::objectives::{acp_loss, combined_loss, scp_loss};
use ascnet_core::rng::Rng;


fn leaf(g: &mut Graph, shape: Vec<usize>, values: Vec<f32>) -> ascnet_core::autodiff::NodeId {
    g.leaf(&Tensor::new(shape, values).unwrap().with_requires_grad())
}

/// Weighted-sum readout makes every output coordinate matter differently, so
/// transposed/misrouted gradients cannot cancel out.
fn weighted_loss(
    g: &mut Graph,
    out: ascnet_core::autodiff::NodeId,
    weights: &[f32],
) -> ascnet_core::autodiff::NodeId {
    let shape = g.shape(out).to_vec();
    let w = g.constant(shape, weights.to_vec()).unwrap();
    let prod = g.mul(out, w).unwrap();
    g.sum_all(prod).unwrap()
}

fn weighted64(out: &[f64], weights: &[f32]) -> f64 {
    out.iter().zip(weights).map(|(o, &w)| o * w as f64).sum()
}

pub fn check_elementwise(seed: u64) {
    {
        let mut rng = Rng::new(seed);
        let len = 1 + rng.below(24) as usize;
        let a = rand_vec(&mut rng, len, -2.0, 2.0);
        let b = rand_vec(&mut rng, len, -2.0, 2.0);
        let weights = rand_vec(&mut rng, len, -1.0, 1.0);
        let factor = rng.uniform(-2.0, 2.0);

        // add / sub / mul / scale / relu, each on fresh graphs.
        type BuildFn = fn(&mut Graph, ascnet_core::autodiff::NodeId, ascnet_core::autodiff::NodeId, f32)
            -> ascnet_core::autodiff::NodeId;
        type ShadowFn = fn(&[f64], &[f64], f64) -> Vec<f64>;
        let cases: [(&str, BuildFn, ShadowFn); 5] = [
            ("add", |g, x, y, _| g.add(x, y).unwrap(), |x, y, _| {
                x.iter().zip(y).map(|(a, b)| a + b).collect()
            }),
            ("sub", |g, x, y, _| g.sub(x, y).unwrap(), |x, y, _| {
                x.iter().zip(y).map(|(a, b)| a - b).collect()
            }),
            ("mul", |g, x, y, _| g.mul(x, y).unwrap(), |x, y, _| {
                x.iter().zip(y).map(|(a, b)| a * b).collect()
            }),
            ("scale", |g, x, _, f| g.scale(x, f).unwrap(), |x, _, f| {
                x.iter().map(|a| a * f).collect()
            }),
            ("relu", |g, x, _, _| g.relu(x).unwrap(), |x, _, _| {
                x.iter().map(|a| a.max(0.0)).collect()
            }),
        ];
        for (name, build, shadow) in cases {
            let mut g = Graph::new();
            let xa = leaf(&mut g, vec![len], a.clone());
            let xb = leaf(&mut g, vec![len], b.clone());
            let out = build(&mut g, xa, xb, factor);
            let loss = weighted_loss(&mut g, out, &weights);
            g.backward(loss).unwrap();

            let b64: Vec<f64> = b.iter().map(|&v| v as f64).collect();
            let fd_a = central_differences(&a, |x| {
                let mut signs = Vec::new();
                let mut out = shadow(x, &b64, factor as f64);
                if name == "relu" {
                    signs = x.iter().map(|&v| v > 0.0).collect();
                    out = x.iter().map(|&v| v.max(0.0)).collect();
                }
                (weighted64(&out, &weights), signs)
            });
            let (checked, skipped) =
                assert_grads_match(g.grad(xa).unwrap_or(&vec![0.0; len]), &fd_a, name);
            assert!(checked + skipped == len && skipped <= len / 4);
        }
    }
}

pub fn check_matmul(seed: u64) {
    {
        let mut rng = Rng::new(100 + seed);
        let (m, k, n) = (
            1 + rng.below(4) as usize,
            1 + rng.below(4) as usize,
            1 + rng.below(4) as usize,
        );
        let a = rand_vec(&mut rng, m * k, -1.5, 1.5);
        let b = rand_vec(&mut rng, k * n, -1.5, 1.5);
        let weights = rand_vec(&mut rng, m * n, -1.0, 1.0);

        let mut g = Graph::new();
        let an = leaf(&mut g, vec![m, k], a.clone());
        let bn = leaf(&mut g, vec![k, n], b.clone());
        let out = g.matmul(an, bn).unwrap();
        let loss = weighted_loss(&mut g, out, &weights);
        g.backward(loss).unwrap();

        let b64: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let a64: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let fd_a = central_differences(&a, |x| {
            (weighted64(&matmul64(x, &b64, m, k, n), &weights), Vec::new())
        });
        assert_grads_match(g.grad(an).unwrap(), &fd_a, "matmul dA");
        let fd_b = central_differences(&b, |x| {
            (weighted64(&matmul64(&a64, x, m, k, n), &weights), Vec::new())
        });
        assert_grads_match(g.grad(bn).unwrap(), &fd_b, "matmul dB");
    }
}

pub fn check_conv3d(seed: u64) {
    {
        let mut rng = Rng::new(200 + seed);
        let d = ConvDims {
            n: 1 + rng.below(2) as usize,
            c: 1 + rng.below(2) as usize,
            t: 2 + rng.below(3) as usize,
            h: 3 + rng.below(3) as usize,
            w: 3 + rng.below(3) as usize,
            k: 1 + rng.below(2) as usize,
            kt: 1 + rng.below(2) as usize,
            kh: 1 + rng.below(3) as usize,
            kw: 1 + rng.below(3) as usize,
            stride: [
                1 + rng.below(2) as usize,
                1 + rng.below(2) as usize,
                1 + rng.below(2) as usize,
            ],
        };
        let d = ConvDims {
            kt: d.kt.min(d.t),
            kh: d.kh.min(d.h),
            kw: d.kw.min(d.w),
            ..d
        };
        let input = rand_vec(&mut rng, d.n * d.c * d.t * d.h * d.w, -1.0, 1.0);
        let kernel = rand_vec(&mut rng, d.k * d.c * d.kt * d.kh * d.kw, -1.0, 1.0);
        let bias = rand_vec(&mut rng, d.k, -0.5, 0.5);
        let (to, ho, wo) = d.out();
        let weights = rand_vec(&mut rng, d.n * d.k * to * ho * wo, -1.0, 1.0);

        let mut g = Graph::new();
        let xn = leaf(&mut g, vec![d.n, d.c, d.t, d.h, d.w], input.clone());
        let kn = leaf(&mut g, vec![d.k, d.c, d.kt, d.kh, d.kw], kernel.clone());
        let bn = leaf(&mut g, vec![d.k], bias.clone());
        let out = g.conv3d(xn, kn, bn, d.stride).unwrap();
        let loss = weighted_loss(&mut g, out, &weights);
        g.backward(loss).unwrap();

        let i64v: Vec<f64> = input.iter().map(|&v| v as f64).collect();
        let k64: Vec<f64> = kernel.iter().map(|&v| v as f64).collect();
        let b64: Vec<f64> = bias.iter().map(|&v| v as f64).collect();

        let fd_input = central_differences(&input, |x| {
            (weighted64(&conv3d64(x, &k64, &b64, &d), &weights), Vec::new())
        });
        assert_grads_match(g.grad(xn).unwrap(), &fd_input, "conv3d dInput");
        let fd_kernel = central_differences(&kernel, |x| {
            (weighted64(&conv3d64(&i64v, x, &b64, &d), &weights), Vec::new())
        });
        assert_grads_match(g.grad(kn).unwrap(), &fd_kernel, "conv3d dKernel");
        let fd_bias = central_differences(&bias, |x| {
            (weighted64(&conv3d64(&i64v, &k64, x, &d), &weights), Vec::new())
        });
        assert_grads_match(g.grad(bn).unwrap(), &fd_bias, "conv3d dBias");
    }
}

pub fn check_pool_normalize_bias_reductions(seed: u64) {
    {
        let mut rng = Rng::new(300 + seed);

        // global_avg_pool on [n, k, t, h, w]
        let (n, k, t, h, w) = (1 + rng.below(2) as usize, 1 + rng.below(2) as usize, 2, 2, 3);
        let x = rand_vec(&mut rng, n * k * t * h * w, -1.0, 1.0);
        let weights = rand_vec(&mut rng, n * k, -1.0, 1.0);
        let mut g = Graph::new();
        let xn = leaf(&mut g, vec![n, k, t, h, w], x.clone());
        let out = g.global_avg_pool(xn).unwrap();
        let loss = weighted_loss(&mut g, out, &weights);
        g.backward(loss).unwrap();
        let fd = central_differences(&x, |v| {
            (weighted64(&global_avg_pool64(v, t * h * w), &weights), Vec::new())
        });
        assert_grads_match(g.grad(xn).unwrap(), &fd, "global_avg_pool");

        // l2_normalize on [rows, d]
        let (rows, d) = (1 + rng.below(3) as usize, 2 + rng.below(6) as usize);
        let mut x = rand_vec(&mut rng, rows * d, -1.0, 1.0);
        // keep rows clearly away from the degenerate-norm region
        for row in x.chunks_exact_mut(d) {
            let norm: f32 = row.iter().map(|v| v * v).sum::<f32>().sqrt();
            if norm < 0.5 {
                row[0] += 1.0;
            }
        }
        let weights = rand_vec(&mut rng, rows * d, -1.0, 1.0);
        let mut g = Graph::new();
        let xn = leaf(&mut g, vec![rows, d], x.clone());
        let out = g.l2_normalize(xn).unwrap();
        let loss = weighted_loss(&mut g, out, &weights);
        g.backward(loss).unwrap();
        let fd = central_differences_with(&x, 1e-3, |v| {
            (weighted64(&l2_normalize64(v, d), &weights), Vec::new())
        });
        assert_grads_match(g.grad(xn).unwrap(), &fd, "l2_normalize");

        // bias_add on [rows, d]
        let xb = rand_vec(&mut rng, rows * d, -1.0, 1.0);
        let bias = rand_vec(&mut rng, d, -1.0, 1.0);
        let weights = rand_vec(&mut rng, rows * d, -1.0, 1.0);
        let mut g = Graph::new();
        let xn = leaf(&mut g, vec![rows, d], xb.clone());
        let bn = leaf(&mut g, vec![d], bias.clone());
        let out = g.bias_add(xn, bn).unwrap();
        let loss = weighted_loss(&mut g, out, &weights);
        g.backward(loss).unwrap();
        let x64: Vec<f64> = xb.iter().map(|&v| v as f64).collect();
        let fd_b = central_differences(&bias, |v| {
            (weighted64(&bias_add64(&x64, v), &weights), Vec::new())
        });
        assert_grads_match(g.grad(bn).unwrap(), &fd_b, "bias_add dBias");

        // sum_all / mean_all
        let xs = rand_vec(&mut rng, 7, -2.0, 2.0);
        let mut g = Graph::new();
        let xn = leaf(&mut g, vec![7], xs.clone());
        let s = g.sum_all(xn).unwrap();
        let m = g.mean_all(xn).unwrap();
        let loss = g.add(s, m).unwrap();
        g.backward(loss).unwrap();
        let fd = central_differences(&xs, |v| {
            let sum: f64 = v.iter().sum();
            (sum + sum / v.len() as f64, Vec::new())
        });
        assert_grads_match(g.grad(xn).unwrap(), &fd, "sum+mean");
    }
}

pub fn check_softmax_cross_entropy(seed: u64) {
    {
        let mut rng = Rng::new(400 + seed);
        let (n, m) = (1 + rng.below(4) as usize, 2 + rng.below(4) as usize);
        let logits = rand_vec(&mut rng, n * m, -3.0, 3.0);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(m as u64) as usize).collect();
        let mut g = Graph::new();
        let ln = leaf(&mut g, vec![n, m], logits.clone());
        let loss = g.softmax_cross_entropy(ln, &labels).unwrap();
        g.backward(loss).unwrap();
        let fd = central_differences(&logits, |v| (softmax_ce64(v, &labels, m), Vec::new()));
        assert_grads_match(g.grad(ln).unwrap(), &fd, "softmax_cross_entropy");
    }
}

/// Tiny encoder used for whole-pipeline checks: every parameter is probed.
fn tiny_config() -> EncoderConfig {
    EncoderConfig {
        stage_channels: vec![2, 3],
        kernels: vec![[2, 3, 3], [2, 3, 3]],
        strides: vec![[1, 2, 2], [1, 1, 1]],
        clip_shape: [4, 10, 10],
        proj_dim: 5,
        speed_classes: 2,
    }
}

/// f64 shadow of encode -> (features, relu signs).
fn shadow_encode(
    cfg: &EncoderConfig,
    params: &[Vec<f64>],
    clips: &[f64],
    batch: usize,
) -> (Vec<f64>, Vec<bool>) {
    let mut signs = Vec::new();
    let mut x = clips.to_vec();
    let mut dims = cfg.clip_shape;
    let mut in_ch = 3usize;
    for (stage, (&out_ch, (kernel, stride))) in cfg
        .stage_channels
        .iter()
        .zip(cfg.kernels.iter().zip(&cfg.strides))
        .enumerate()
    {
        let d = ConvDims {
            n: batch,
            c: in_ch,
            t: dims[0],
            h: dims[1],
            w: dims[2],
            k: out_ch,
            kt: kernel[0],
            kh: kernel[1],
            kw: kernel[2],
            stride: *stride,
        };
        let conv = conv3d64(&x, &params[2 * stage], &params[2 * stage + 1], &d);
        x = relu64(&conv, &mut signs);
        let (to, ho, wo) = d.out();
        dims = [to, ho, wo];
        in_ch = out_ch;
    }
    let spatial = dims[0] * dims[1] * dims[2];
    (global_avg_pool64(&x, spatial), signs)
}

fn shadow_linear_norm(x: &[f64], w: &[f64], in_dim: usize, out_dim: usize) -> Vec<f64> {
    let rows = x.len() / in_dim;
    l2_normalize64(&matmul64(x, w, rows, in_dim, out_dim), out_dim)
}

pub fn check_full_model(seed: u64) {
    let cfg = tiny_config();
    let gamma = 0.5f32;
    let sp_weight = 0.5f32;
    let batch = 2usize;
    let clip_len = 3 * cfg.clip_shape.iter().product::<usize>();
    let d = cfg.feature_dim();
    let p = cfg.proj_dim;

    {
        let mut rng = Rng::new(500 + seed);
        let mut params = ModelParams::init(&cfg, 9000 + seed).unwrap();
        params.unfreeze_all();
        let clips_i_raw: Vec<Vec<f32>> =
            (0..batch).map(|_| rand_vec(&mut rng, clip_len, 0.0, 1.0)).collect();
        let clips_j_raw: Vec<Vec<f32>> =
            (0..batch).map(|_| rand_vec(&mut rng, clip_len, 0.0, 1.0)).collect();
        let clips_k_raw: Vec<Vec<f32>> =
            (0..batch).map(|_| rand_vec(&mut rng, clip_len, 0.0, 1.0)).collect();
        let labels: Vec<usize> = (0..batch).map(|_| rng.below(2) as usize).collect();
        let [t, h, w] = cfg.clip_shape;
        let batch_i = clips_to_batch(&clips_i_raw, t, h, w).unwrap();
        let batch_j = clips_to_batch(&clips_j_raw, t, h, w).unwrap();
        let batch_k = clips_to_batch(&clips_k_raw, t, h, w).unwrap();

        // Autodiff route: full pipeline with detached targets.
        let mut g = Graph::new();
        let bound = params.bind(&mut g);
        let ci = g.leaf(&batch_i);
        let cj = g.leaf(&batch_j);
        let ck = g.leaf(&batch_k);
        let xi = bound.encode(&mut g, ci).unwrap();
        let xj = bound.encode(&mut g, cj).unwrap();
        let xk = bound.encode(&mut g, ck).unwrap();
        let ai = bound.project(&mut g, xi, Head::Appearance).unwrap();
        let ai_pred = bound.predict(&mut g, ai, Head::Appearance).unwrap();
        let aj = bound.project(&mut g, xj, Head::Appearance).unwrap();
        let aj_t = g.detach(aj).unwrap();
        let l_a = acp_loss(&mut g, ai_pred, aj_t).unwrap();
        let mi = bound.project(&mut g, xi, Head::Speed).unwrap();
        let mi_pred = bound.predict(&mut g, mi, Head::Speed).unwrap();
        let mk = bound.project(&mut g, xk, Head::Speed).unwrap();
        let mk_t = g.detach(mk).unwrap();
        let l_m = scp_loss(&mut g, mi_pred, mk_t).unwrap();
        let logits = bound.speed_logits(&mut g, xi).unwrap();
        let l_sp = g.softmax_cross_entropy(logits, &labels).unwrap();
        let eq1 = combined_loss(&mut g, l_a, l_m, gamma).unwrap();
        let sp_term = g.scale(l_sp, sp_weight).unwrap();
        let total = g.add(eq1, sp_term).unwrap();
        g.backward(total).unwrap();

        // Frozen targets for the FD oracle, from the f64 shadow at theta_0.
        let named = params.named_tensors();
        let tensors64: Vec<Vec<f64>> = named
            .iter()
            .map(|(_, t)| t.values().iter().map(|&v| v as f64).collect())
            .collect();
        let to64 = |b: &Tensor| b.values().iter().map(|&v| v as f64).collect::<Vec<f64>>();
        let cj64 = to64(&batch_j);
        let ck64 = to64(&batch_k);
        let ci64 = to64(&batch_i);
        // named order: encoder stage weight/bias pairs, then the bias-free
        // head weights (proj_appearance, proj_speed, pred_appearance,
        // pred_speed), then speed_head weight and bias.
        let enc_params = 2 * cfg.stage_channels.len();
        let (xj_shadow, _) = shadow_encode(&cfg, &tensors64[..enc_params].to_vec(), &cj64, batch);
        let target_a = shadow_linear_norm(&xj_shadow, &tensors64[enc_params], d, p);
        let (xk_shadow, _) = shadow_encode(&cfg, &tensors64[..enc_params].to_vec(), &ck64, batch);
        let target_m = shadow_linear_norm(&xk_shadow, &tensors64[enc_params + 1], d, p);

        // Shadow loss as a function of a flat parameter vector.
        let lens: Vec<usize> = named.iter().map(|(_, t)| t.len()).collect();
        let flat: Vec<f32> = named
            .iter()
            .flat_map(|(_, t)| t.values().iter().copied())
            .collect();
        let shadow_loss = |flat64: &[f64]| -> (f64, Vec<bool>) {
            let mut tensors: Vec<Vec<f64>> = Vec::with_capacity(lens.len());
            let mut off = 0;
            for &len in &lens {
                tensors.push(flat64[off..off + len].to_vec());
                off += len;
            }
            let (xi_s, signs) = shadow_encode(&cfg, &tensors[..enc_params].to_vec(), &ci64, batch);
            let a_i = shadow_linear_norm(&xi_s, &tensors[enc_params], d, p);
            let a_pred = shadow_linear_norm(&a_i, &tensors[enc_params + 2], p, p);
            let m_i = shadow_linear_norm(&xi_s, &tensors[enc_params + 1], d, p);
            let m_pred = shadow_linear_norm(&m_i, &tensors[enc_params + 3], p, p);
            let rows = batch;
            let l_a = mean_sq_dist64(&a_pred, &target_a, rows);
            let l_m = mean_sq_dist64(&m_pred, &target_m, rows);
            let logits = bias_add64(
                &matmul64(&xi_s, &tensors[enc_params + 4], rows, d, cfg.speed_classes),
                &tensors[enc_params + 5],
            );
            let l_sp = softmax_ce64(&logits, &labels, cfg.speed_classes);
            let total = gamma as f64 * l_m + (1.0 - gamma as f64) * l_a + sp_weight as f64 * l_sp;
            (total, signs)
        };

        let fd = central_differences_with(&flat, 1e-4, |v| shadow_loss(v));
        let mut autodiff_flat: Vec<f32> = Vec::with_capacity(flat.len());
        let mut ids = Vec::new();
        for (wn, bn, _) in &bound.encoder {
            ids.push(*wn);
            ids.push(*bn);
        }
        for (wn, bn) in [
            bound.proj_appearance,
            bound.proj_speed,
            bound.pred_appearance,
            bound.pred_speed,
            bound.speed_head,
        ] {
            ids.push(wn);
            if let Some(bn) = bn {
                ids.push(bn);
            }
        }
        for (id, len) in ids.iter().zip(&lens) {
            match g.grad(*id) {
                Some(grad) => autodiff_flat.extend_from_slice(grad),
                None => autodiff_flat.extend(core::iter::repeat_n(0.0, *len)),
            }
        }
        let (checked, skipped) =
            assert_grads_match(&autodiff_flat, &fd, &format!("full model seed {seed}"));
        // Coordinates whose FD step straddles a relu kink are skipped; they
        // must stay a small minority or the check loses its teeth.
        assert!(
            skipped * 100 <= 15 * (checked + skipped),
            "too many kink skips: {skipped} of {}",
            checked + skipped
        );
    }
}
