//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (visible under `--nocapture`; the test name itself
//! records the verdict otherwise).
//!
//! Criteria 5-7 share one desk-scale pretraining run (200 videos, 8 classes,
//! 8x32x32 clips, batch 16, speeds {4, 8}, gamma 0.5, similar-instance
//! retrieval, 2000 steps), cached in a `OnceLock`.

#[path = "../../core/tests/common/mod.rs"]
mod fd;

use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use ascnet_core::augment::AugmentConfig;
use ascnet_core::autodiff::{Graph, Tensor};
use ascnet_core::eval::{
    EvalClipGeometry, FeatureSpace, extract_features_for, geometry_of, speed_probe,
    split_queries_gallery, topk_retrieval,
};
use ascnet_core::model::{EncoderConfig, ModelParams};
use ascnet_core::objectives::{FeatureRecord, MemoryBank, acp_loss, combined_loss_value, scp_loss};
use ascnet_core::opt::{LarsConfig, cosine_lr, lars_step, scaled_lr};
use ascnet_core::rng::{Rng, derive_seed};
use ascnet_core::synth::{CorpusConfig, SyntheticVideo, generate_corpus};
use ascnet_core::trainer::{InstanceMode, SerialPrep, StepRecord, TrainConfig, Trainer};

use ascnet_cli::commands::{AblateAxis, Overrides, cmd_gen_data, cmd_pretrain, run_ablation};
use ascnet_cli::config::RunConfig;

// ---- criterion 1: gradient suite -------------------------------------------

#[test]
fn acceptance_01_gradient_suite() {
    let started = Instant::now();
    for seed in 0..20 {
        fd::gradcheck::check_elementwise(seed);
        fd::gradcheck::check_matmul(seed);
        fd::gradcheck::check_conv3d(seed);
        fd::gradcheck::check_pool_normalize_bias_reductions(seed);
        fd::gradcheck::check_softmax_cross_entropy(seed);
        fd::gradcheck::check_full_model(seed);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 120,
        "gradient suite took {elapsed:?}, budget is 2 minutes"
    );
    println!(
        "ACCEPTANCE 1: PASS - all ops + full pipeline match finite differences on 20 seeds in {elapsed:?}"
    );
}

// ---- criterion 2: loss identities -------------------------------------------

fn random_unit(rng: &mut Rng, d: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let norm: f64 = v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.iter().map(|&x| (x as f64 / norm) as f32).collect();
        }
    }
}

#[test]
fn acceptance_02_loss_identities() {
    let mut rng = Rng::new(0x1055);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let u = random_unit(&mut rng, 256);
        let v = random_unit(&mut rng, 256);
        let mut g = Graph::new();
        let un = g.leaf(&Tensor::new(vec![1, 256], u.clone()).unwrap());
        let vn = g.leaf(&Tensor::new(vec![1, 256], v.clone()).unwrap());
        let loss = if i % 2 == 0 {
            acp_loss(&mut g, un, vn).unwrap()
        } else {
            scp_loss(&mut g, un, vn).unwrap()
        };
        let dot: f64 = u.iter().zip(&v).map(|(&a, &b)| a as f64 * b as f64).sum();
        let diff = (g.values(loss)[0] as f64 - (2.0 - 2.0 * dot)).abs();
        worst = worst.max(diff);
        assert!(diff <= 1e-6, "pair {i}: |L - (2 - 2cos)| = {diff}");
    }

    for _ in 0..100 {
        let gamma = rng.next_f32();
        let l_a = rng.uniform(0.0, 4.0);
        let l_m = rng.uniform(0.0, 4.0);
        let combined = combined_loss_value(l_a, l_m, gamma).unwrap();
        assert_eq!(combined, gamma * l_m + (1.0 - gamma) * l_a, "combined loss must be exact");
    }

    let mut g = Graph::new();
    let logits = g.leaf(&Tensor::new(vec![1, 4], vec![0.0; 4]).unwrap());
    let sp = g.softmax_cross_entropy(logits, &[1]).unwrap();
    let ln4 = (4.0f64).ln();
    let sp_diff = (g.values(sp)[0] as f64 - ln4).abs();
    assert!(sp_diff <= 1e-6, "uniform-logit sp loss off ln 4 by {sp_diff}");
    println!(
        "ACCEPTANCE 2: PASS - cosine identity worst diff {worst:.2e}, combined exact on 100 draws, sp(uniform, M=4) = ln 4 within {sp_diff:.2e}"
    );
}

// ---- criterion 3: retrieval oracle ------------------------------------------

#[test]
fn acceptance_03_retrieval_oracle() {
    let mut rng = Rng::new(0xba2b);
    for trial in 0..1000 {
        let capacity = 1 + rng.below(24) as usize;
        let inserts = rng.below(40) as usize;
        let mut bank = MemoryBank::new(capacity).unwrap();
        let mut mirror = Vec::new();
        for step in 0..inserts {
            let record = FeatureRecord {
                vector: random_unit(&mut rng, 8),
                video_id: rng.below(6),
                insert_step: step as u64,
            };
            bank.insert(record.clone()).unwrap();
            mirror.push(record);
        }
        let live = &mirror[mirror.len().saturating_sub(capacity)..];
        let query = random_unit(&mut rng, 8);
        let exclude = rng.below(6);
        let oracle = live
            .iter()
            .filter(|r| r.video_id != exclude)
            .map(|r| {
                let dot: f32 = query.iter().zip(&r.vector).map(|(a, b)| a * b).sum();
                (dot, r.insert_step, r.video_id)
            })
            .fold(None::<(f32, u64, u64)>, |best, cand| match best {
                None => Some(cand),
                Some(b) if cand.0 > b.0 || (cand.0 == b.0 && cand.1 < b.1) => Some(cand),
                other => other,
            });
        match (bank.retrieve_similar(&query, exclude), oracle) {
            (Ok(hit), Some((_, step, id))) => {
                assert_eq!((hit.insert_step, hit.video_id), (step, id), "trial {trial}");
            }
            (Err(ascnet_core::Error::NoCandidate), None) => {}
            (got, want) => panic!("trial {trial}: bank {:?} vs oracle {want:?}", got.ok().map(|r| r.video_id)),
        }
    }

    // FIFO semantics at the named capacities.
    for capacity in [1usize, 2, 7, 512] {
        let mut bank = MemoryBank::new(capacity).unwrap();
        let total = capacity + 5;
        for step in 0..total {
            bank.insert(FeatureRecord {
                vector: vec![1.0, 0.0],
                video_id: step as u64,
                insert_step: step as u64,
            })
            .unwrap();
        }
        assert_eq!(bank.len(), capacity);
        let mut steps: Vec<u64> = bank.records().iter().map(|r| r.insert_step).collect();
        steps.sort_unstable();
        let expected: Vec<u64> = (total - capacity..total).map(|s| s as u64).collect();
        assert_eq!(steps, expected, "capacity {capacity} keeps the newest records");
    }
    println!("ACCEPTANCE 3: PASS - 1000 bank states match the exhaustive oracle; FIFO verified at capacities 1, 2, 7, 512");
}

// ---- criterion 4: LARS oracle -----------------------------------------------

#[test]
fn acceptance_04_lars_oracle() {
    // Case 1: zero gradient, zero velocity is a fixed point.
    let mut w = Tensor::new(vec![1, 2], vec![0.4, -0.6]).unwrap().with_requires_grad();
    let mut v = vec![0.0; 2];
    lars_step(&mut w, &mut v, &[0.0, 0.0], 0.5, &LarsConfig { weight_decay: 0.0, ..LarsConfig::default() }).unwrap();
    assert_eq!(w.values(), &[0.4, -0.6]);

    // Case 2: pure weight decay. w = [[3]], g = 0, wd = 0.1, eta = 1, lr = 1:
    // g' = 0.3, local = 3/0.3 = 10, v = 3, w -> 0.
    let mut w = Tensor::new(vec![1, 1], vec![3.0]).unwrap().with_requires_grad();
    let mut v = vec![0.0];
    lars_step(&mut w, &mut v, &[0.0], 1.0, &LarsConfig { momentum: 0.0, weight_decay: 0.1, trust_coefficient: 1.0 }).unwrap();
    assert!((w.values()[0]).abs() <= 1e-6);

    // Case 3: momentum accumulation over three steps on a bias tensor:
    // v = 0.1, 0.19, 0.271; w = 1 -> 0.9 -> 0.71 -> 0.439.
    let mut w = Tensor::new(vec![1], vec![1.0]).unwrap().with_requires_grad();
    let mut v = vec![0.0];
    let cfg = LarsConfig { momentum: 0.9, weight_decay: 0.0, trust_coefficient: 0.001 };
    for expected in [0.9f32, 0.71, 0.439] {
        lars_step(&mut w, &mut v, &[1.0], 0.1, &cfg).unwrap();
        assert!((w.values()[0] - expected).abs() <= 1e-6);
    }

    // Case 4: bias exclusion. Rank-1 tensor sees no decay and no trust
    // scaling: exactly w - lr * g.
    let mut w = Tensor::new(vec![4], vec![10.0; 4]).unwrap().with_requires_grad();
    let mut v = vec![0.0; 4];
    lars_step(&mut w, &mut v, &[1.0; 4], 0.5, &LarsConfig { momentum: 0.0, weight_decay: 1.0, trust_coefficient: 0.001 }).unwrap();
    assert_eq!(w.values(), &[9.5; 4]);

    // Case 5: scaled-tensor direction invariance. Scaling (w, g) by c scales
    // the velocity by exactly c.
    let base_w = [0.8f32, -0.4, 0.2, 0.6];
    let base_g = [0.1f32, 0.3, -0.2, 0.05];
    let cfg = LarsConfig { momentum: 0.0, weight_decay: 0.01, trust_coefficient: 0.001 };
    let run = |c: f32| {
        let mut w = Tensor::new(vec![2, 2], base_w.iter().map(|x| x * c).collect()).unwrap().with_requires_grad();
        let mut v = vec![0.0; 4];
        let g: Vec<f32> = base_g.iter().map(|x| x * c).collect();
        lars_step(&mut w, &mut v, &g, 0.2, &cfg).unwrap();
        v
    };
    let v1 = run(1.0);
    let v5 = run(5.0);
    for (a, b) in v1.iter().zip(&v5) {
        assert!((5.0 * a - b).abs() <= 1e-6 * b.abs().max(1e-3));
    }
    println!("ACCEPTANCE 4: PASS - five hand-computed LARS cases match to 1e-6");
}

// ---- criteria 5-7: the shared desk run --------------------------------------

const DESK_SEED: u64 = 7;
const DESK_STEPS: u64 = 2000;

struct DeskRun {
    corpus: Vec<SyntheticVideo>,
    records: Vec<StepRecord>,
    trained: ModelParams,
    untrained: ModelParams,
    collapse_min_std: f32,
    collapse_steps: u64,
    geometry: EvalClipGeometry,
    wall_minutes: f64,
}

fn desk_corpus_config() -> CorpusConfig {
    CorpusConfig {
        n_videos: 200,
        n_classes: 8,
        seed: DESK_SEED,
        ..CorpusConfig::default()
    }
}

fn desk_train_config() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        speed_set: vec![4, 8],
        gamma: 0.5,
        instance_mode: InstanceMode::Similar,
        total_steps: Some(DESK_STEPS),
        seed: DESK_SEED,
        ..TrainConfig::default()
    }
}

fn desk_encoder_config() -> EncoderConfig {
    EncoderConfig {
        speed_classes: 2,
        ..EncoderConfig::default()
    }
}

fn desk() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let started = Instant::now();
        let corpus = generate_corpus(&desk_corpus_config()).unwrap();
        let encoder = desk_encoder_config();
        let mut trainer = Trainer::new(
            &corpus,
            &encoder,
            desk_train_config(),
            AugmentConfig::default(),
        )
        .unwrap();
        let untrained = trainer.params().clone();
        let mut records = Vec::with_capacity(DESK_STEPS as usize);
        trainer
            .run(&SerialPrep, |record| {
                records.push(record.clone());
                Ok(())
            })
            .unwrap();
        let trained = trainer.params().clone();

        // Collapse demonstration: identical run, stop-gradient disabled,
        // stopping as soon as the monitor crosses the collapse line.
        let mut no_detach = desk_train_config();
        no_detach.stop_gradient = false;
        let mut collapse_trainer =
            Trainer::new(&corpus, &encoder, no_detach, AugmentConfig::default()).unwrap();
        let mut collapse_min_std = f32::INFINITY;
        let mut collapse_steps = 0;
        while collapse_trainer.step() < DESK_STEPS {
            let record = collapse_trainer.train_step(&SerialPrep).unwrap();
            collapse_min_std = collapse_min_std.min(record.feature_std);
            collapse_steps = record.step + 1;
            if collapse_min_std < 0.001 {
                break;
            }
        }

        DeskRun {
            geometry: geometry_of(&encoder),
            corpus,
            records,
            trained,
            untrained,
            collapse_min_std,
            collapse_steps,
            wall_minutes: started.elapsed().as_secs_f64() / 60.0,
        }
    })
}

#[test]
fn acceptance_05_anti_collapse_desk_run() {
    let run = desk();
    assert!(
        run.wall_minutes <= 30.0,
        "desk run took {:.1} minutes, budget is 30",
        run.wall_minutes
    );

    // (a) the loss keeps falling: final 100-step mean at most half the
    // 100-step mean anchored at step 100.
    let mean = |lo: usize, hi: usize| -> f64 {
        run.records[lo..hi]
            .iter()
            .map(|r| r.losses.total as f64)
            .sum::<f64>()
            / (hi - lo) as f64
    };
    let early = mean(100, 200);
    let late = mean(run.records.len() - 100, run.records.len());
    assert!(
        late <= 0.5 * early,
        "(a) final mean {late:.4} vs step-100 window mean {early:.4}"
    );

    // (b) the collapse monitor stays healthy after warmup.
    let min_std = run.records[500..]
        .iter()
        .map(|r| r.feature_std)
        .fold(f32::INFINITY, f32::min);
    assert!(
        min_std >= 0.01,
        "(b) appearance feature std dipped to {min_std} after step 500"
    );

    // (c) without stop-gradient the same configuration collapses.
    assert!(
        run.collapse_min_std < 0.001,
        "(c) no-stop-gradient run only reached std {} in {} steps",
        run.collapse_min_std,
        run.collapse_steps
    );
    println!(
        "ACCEPTANCE 5: PASS - (a) loss {early:.3} -> {late:.3}; (b) min std after 500 = {min_std:.4}; (c) collapsed to {:.5} by step {} without stop-gradient; {:.1} min",
        run.collapse_min_std, run.collapse_steps, run.wall_minutes
    );
}

fn retrieval_top1(run: &DeskRun, params: &ModelParams) -> f32 {
    let (query_idx, gallery_idx) =
        split_queries_gallery(run.corpus.len(), 0.2, derive_seed(DESK_SEED, &[0xe7a1])).unwrap();
    let queries =
        extract_features_for(&run.corpus, &query_idx, params, FeatureSpace::Encoder, run.geometry)
            .unwrap();
    let gallery =
        extract_features_for(&run.corpus, &gallery_idx, params, FeatureSpace::Encoder, run.geometry)
            .unwrap();
    topk_retrieval(&queries, &gallery, &[1]).unwrap().accuracies[0]
}

#[test]
fn acceptance_06_appearance_signal() {
    let run = desk();
    let trained = retrieval_top1(run, &run.trained);
    let untrained = retrieval_top1(run, &run.untrained);
    assert!(
        trained >= 0.375,
        "trained top-1 {trained:.3} below 3x chance (0.375)"
    );
    assert!(
        trained >= untrained,
        "trained top-1 {trained:.3} fell below the untrained encoder's {untrained:.3}"
    );
    println!(
        "ACCEPTANCE 6: PASS - video-level top-1 {:.1}% (untrained {:.1}%, chance 12.5%)",
        trained * 100.0,
        untrained * 100.0
    );
}

fn speed_probe_accuracy(run: &DeskRun, params: &ModelParams) -> f32 {
    let (test_idx, train_idx) =
        split_queries_gallery(run.corpus.len(), 0.2, derive_seed(DESK_SEED, &[0xe7a1])).unwrap();
    speed_probe(
        &run.corpus,
        &train_idx,
        &test_idx,
        params,
        &[4, 8],
        run.geometry,
        100,
        0.5,
        derive_seed(DESK_SEED, &[0x5d]),
    )
    .unwrap()
    .accuracy
}

#[test]
fn acceptance_07_speed_signal() {
    let run = desk();
    let trained = speed_probe_accuracy(run, &run.trained);
    let untrained = speed_probe_accuracy(run, &run.untrained);
    assert!(
        trained >= 0.60,
        "trained speed probe {trained:.3} below 60% (chance 50%)"
    );
    assert!(
        trained > untrained,
        "trained speed probe {trained:.3} not above untrained {untrained:.3}"
    );
    println!(
        "ACCEPTANCE 7: PASS - speed probe {:.1}% on m-features (untrained {:.1}%, chance 50%)",
        trained * 100.0,
        untrained * 100.0
    );
}

// ---- fine-tune mode (paired run, fixed seeds) --------------------------------

#[test]
fn finetune_pretrained_vs_scratch_on_desk_run() {
    use ascnet_core::eval::{FinetuneConfig, finetune};
    let run = desk();
    let (test_idx, train_idx) =
        split_queries_gallery(run.corpus.len(), 0.2, derive_seed(DESK_SEED, &[0xe7a1])).unwrap();
    let config = FinetuneConfig {
        epochs: 2,
        batch_size: 8,
        base_lr: 0.1,
        momentum: 0.9,
        seed: derive_seed(DESK_SEED, &[0xf1]),
        geometry: run.geometry,
    };
    let pretrained = finetune(&run.corpus, &train_idx, &test_idx, &run.trained, 8, &config).unwrap();
    let scratch = finetune(&run.corpus, &train_idx, &test_idx, &run.untrained, 8, &config).unwrap();
    assert!(
        pretrained >= scratch,
        "fine-tune from the pretrained encoder ({pretrained:.3}) fell below scratch ({scratch:.3})"
    );
    println!(
        "fine-tune: pretrained {:.1}% vs scratch {:.1}% on held-out videos",
        pretrained * 100.0,
        scratch * 100.0
    );
}

// ---- criterion 8: protocol fidelity -----------------------------------------

#[test]
fn acceptance_08_protocol_fidelity() {
    use ascnet_core::eval::VideoFeature;
    let mut rng = Rng::new(0xf1de);
    for trial in 0..50 {
        let n_gallery = 5 + rng.below(20) as usize;
        let n_query = 1 + rng.below(8) as usize;
        let dim = 2 + rng.below(12) as usize;
        let gallery: Vec<VideoFeature> = (0..n_gallery)
            .map(|i| VideoFeature {
                vector: random_unit(&mut rng, dim),
                video_id: i as u64,
                appearance_class: rng.below(4) as usize,
                degenerate: false,
            })
            .collect();
        let queries: Vec<VideoFeature> = (0..n_query)
            .map(|i| VideoFeature {
                vector: random_unit(&mut rng, dim),
                video_id: 1000 + i as u64,
                appearance_class: rng.below(4) as usize,
                degenerate: false,
            })
            .collect();
        let ks = [1usize, 5, 10, 20, 50];
        let report = topk_retrieval(&queries, &gallery, &ks).unwrap();

        // Brute-force oracle with the documented sort order.
        for (slot, &k) in ks.iter().enumerate() {
            let mut hits = 0usize;
            for q in &queries {
                let mut scored: Vec<(f32, u64, usize)> = gallery
                    .iter()
                    .map(|g| {
                        (
                            q.vector.iter().zip(&g.vector).map(|(a, b)| a * b).sum::<f32>(),
                            g.video_id,
                            g.appearance_class,
                        )
                    })
                    .collect();
                scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                if scored[..k.min(scored.len())].iter().any(|s| s.2 == q.appearance_class) {
                    hits += 1;
                }
            }
            assert_eq!(
                report.accuracies[slot],
                hits as f32 / n_query as f32,
                "trial {trial}, k = {k}"
            );
        }
        for pair in report.accuracies.windows(2) {
            assert!(pair[1] >= pair[0], "monotonicity violated in trial {trial}");
        }
    }

    assert_eq!(scaled_lr(0.3, 128), 0.3);
    let base = 0.42f32;
    assert_eq!(cosine_lr(0, 77, base), base);
    assert!((cosine_lr(77, 77, base) - 0.01 * base).abs() <= 1e-7);
    println!(
        "ACCEPTANCE 8: PASS - 50 retrieval reports match the brute-force oracle; scaled_lr(128) = 0.3; cosine endpoints exact"
    );
}

// ---- criterion 9: CLI determinism -------------------------------------------

fn write_determinism_config(dir: &PathBuf) -> PathBuf {
    let text = format!(
        r#"
out_dir = "{out}"
data_dir = "{data}"
seed = 13

[corpus]
n_videos = 10
n_classes = 4

[model]
stage_channels = [4, 8]
kernels = [[3, 3, 3], [3, 3, 3]]
strides = [[1, 2, 2], [2, 2, 2]]
proj_dim = 64

[train]
batch_size = 4
total_steps = 40
checkpoint_interval = 20
"#,
        out = dir.join("run").display(),
        data = dir.join("data").display(),
    );
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn acceptance_09_determinism() {
    let dir = std::env::temp_dir().join(format!("ascnet-acc9-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let config = write_determinism_config(&dir);
    cmd_gen_data(&config, &Overrides::default()).unwrap();

    let out_a = dir.join("a");
    let out_b = dir.join("b");
    cmd_pretrain(&config, None, &Overrides { out: Some(out_a.clone()), seed: None }).unwrap();
    cmd_pretrain(&config, None, &Overrides { out: Some(out_b.clone()), seed: None }).unwrap();
    let log_a = fs::read(out_a.join("metrics.jsonl")).unwrap();
    assert_eq!(
        log_a,
        fs::read(out_b.join("metrics.jsonl")).unwrap(),
        "repeated runs must produce byte-identical metrics logs"
    );

    let resumed = dir.join("resumed");
    cmd_pretrain(
        &config,
        Some(&out_a.join("ckpt_step_000020.bin")),
        &Overrides { out: Some(resumed.clone()), seed: None },
    )
    .unwrap();
    assert_eq!(
        fs::read(out_a.join("ckpt_final.bin")).unwrap(),
        fs::read(resumed.join("ckpt_final.bin")).unwrap(),
        "resume must reproduce the uninterrupted run byte-for-byte"
    );
    let full_log = String::from_utf8(log_a).unwrap();
    let resumed_log = fs::read_to_string(resumed.join("metrics.jsonl")).unwrap();
    assert_eq!(
        full_log.lines().skip(20).collect::<Vec<_>>(),
        resumed_log.lines().collect::<Vec<_>>()
    );
    println!("ACCEPTANCE 9: PASS - byte-identical metrics logs; resume matches the uninterrupted run");
    let _ = fs::remove_dir_all(&dir);
}

// ---- criterion 10: ablation harness -----------------------------------------

#[test]
fn acceptance_10_ablation_harness() {
    let run = desk();
    let mut config = RunConfig::default();
    config.seed = DESK_SEED;
    config.corpus.n_videos = 200;
    config.corpus.n_classes = 8;
    config.train.batch_size = 16;
    config.train.speed_set = vec![4, 8];
    config.ablate.steps = 250;
    let report = run_ablation(&config, &run.corpus, AblateAxis::InstanceMode).unwrap();
    assert_eq!(report.rows.len(), 3, "three speed-partner configurations");
    let labels: Vec<&str> = report.rows.iter().map(|r| r.configuration.as_str()).collect();
    assert_eq!(labels, vec!["same_instance", "different_instance", "similar_instance"]);
    for row in &report.rows {
        assert!(row.probe_accuracy.is_finite() && row.retrieval_top1.is_finite());
    }
    println!(
        "ACCEPTANCE 10: PASS - instance-mode sweep complete; probe accuracies (same/different/similar) = {:.3}/{:.3}/{:.3} (diagnostic, not gated)",
        report.rows[0].probe_accuracy, report.rows[1].probe_accuracy, report.rows[2].probe_accuracy
    );
}
