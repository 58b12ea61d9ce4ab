//! The four operator commands: corpus generation, pretraining, evaluation,
//! and ablation sweeps. All are library functions so tests drive them
//! in-process; `main` only parses arguments and maps errors to exit codes.

use anyhow::{Context, Result, bail};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ascnet_core::eval::{
    EvalClipGeometry, FeatureSpace, FinetuneConfig, collapse_metrics, extract_features_for,
    finetune, geometry_of, linear_probe, speed_probe, split_queries_gallery, topk_retrieval,
};
use ascnet_core::model::ModelParams;
use ascnet_core::rng::derive_seed;
use ascnet_core::synth::{SyntheticVideo, generate_corpus};
use ascnet_core::trainer::{StepRecord, Trainer};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{InstanceModeName, RunConfig};
use crate::manifest::{load_or_generate, write_corpus};
use crate::metrics::{MetricsWriter, retrieval_table, write_report};
use crate::prep::ThreadedPrep;

const EVAL_SPLIT_TAG: u64 = 0xe7a1;
const PROBE_SEED_TAG: u64 = 0xb0;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.out_dir = out.display().to_string();
    }
    Ok(config)
}

fn echo_resolved_config(config: &RunConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    std::fs::write(out_dir.join("resolved_config.toml"), config.to_toml()?)?;
    Ok(())
}

/// `gen-data`: write manifest plus pixel blobs. `--out` overrides the data
/// directory. Idempotent: regenerating over identical output changes no byte.
pub fn cmd_gen_data(config_path: &Path, overrides: &Overrides) -> Result<()> {
    let mut config = load_config(config_path, &Overrides { out: None, seed: overrides.seed })?;
    if let Some(out) = &overrides.out {
        config.data_dir = out.display().to_string();
    }
    let corpus = generate_corpus(&config.corpus_config())?;
    let dir = PathBuf::from(&config.data_dir);
    write_corpus(&dir, &corpus)?;
    println!(
        "wrote {} videos ({} classes, {}x{}x{} frames) to {}",
        corpus.len(),
        config.corpus.n_classes,
        config.corpus.frames,
        config.corpus.height,
        config.corpus.width,
        dir.display()
    );
    Ok(())
}

fn load_corpus(config: &RunConfig) -> Result<Vec<SyntheticVideo>> {
    load_or_generate(Path::new(&config.data_dir), &config.corpus_config())
}

/// `pretrain`: run the training loop, logging metrics per step and writing
/// checkpoints at the configured interval.
pub fn cmd_pretrain(config_path: &Path, resume: Option<&Path>, overrides: &Overrides) -> Result<()> {
    let config = load_config(config_path, overrides)?;
    let corpus = load_corpus(&config)?;
    let out_dir = PathBuf::from(&config.out_dir);
    echo_resolved_config(&config, &out_dir)?;

    let encoder_config = config.encoder_config();
    let train_config = config.train_config();
    let augment_config = config.augment_config();

    let mut trainer = match resume {
        None => Trainer::new(&corpus, &encoder_config, train_config, augment_config)?,
        Some(ckpt_path) => {
            let loaded = load_checkpoint(ckpt_path)?;
            if loaded.meta.encoder_config() != encoder_config {
                bail!(
                    "checkpoint {} was trained with a different model config",
                    ckpt_path.display()
                );
            }
            if loaded.meta.seed != config.seed {
                bail!(
                    "checkpoint seed {} does not match config seed {}",
                    loaded.meta.seed,
                    config.seed
                );
            }
            Trainer::from_state(
                &corpus,
                train_config,
                augment_config,
                loaded.params,
                Some(loaded.lars),
                Some(loaded.bank),
                loaded.meta.step,
                loaded.meta.insert_counter,
            )?
        }
    };

    let save = |trainer: &Trainer, name: &str| -> Result<()> {
        save_checkpoint(
            &out_dir.join(name),
            trainer.params(),
            trainer.lars_state(),
            trainer.bank(),
            trainer.step(),
            trainer.insert_counter(),
            config.seed,
        )
    };
    if resume.is_none() {
        save(&trainer, "ckpt_init.bin")?;
    }

    let total = trainer.total_steps();
    let interval = config.train.checkpoint_interval.max(1);
    let report_every = (total / 20).max(1);
    let mut metrics = MetricsWriter::create(&out_dir.join("metrics.jsonl"))?;
    let prep = ThreadedPrep::from_env();

    while trainer.step() < total {
        let started = Instant::now();
        let mut record = trainer.train_step(&prep)?;
        record.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        metrics.log(&record)?;
        if record.step % report_every == 0 || record.step + 1 == total {
            print_step(&record);
        }
        if trainer.step() % interval == 0 && trainer.step() < total {
            save(&trainer, &format!("ckpt_step_{:06}.bin", trainer.step()))?;
        }
    }
    save(&trainer, "ckpt_final.bin")?;
    println!(
        "finished {total} steps; checkpoints and metrics.jsonl in {}",
        out_dir.display()
    );
    Ok(())
}

fn print_step(record: &StepRecord) {
    let l_sp = record
        .losses
        .speed_prediction
        .map(|v| format!(" l_sp {v:.4}"))
        .unwrap_or_default();
    println!(
        "step {:>6}  total {:.4}  l_a {:.4}  l_m {:.4}{}  feat_std {:.4}  {:.0} ms",
        record.step,
        record.losses.total,
        record.losses.appearance,
        record.losses.speed_consistency,
        l_sp,
        record.feature_std,
        record.wall_ms
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTask {
    Retrieval,
    Probe,
    Finetune,
    Speed,
    Collapse,
}

impl EvalTask {
    pub fn name(self) -> &'static str {
        match self {
            EvalTask::Retrieval => "retrieval",
            EvalTask::Probe => "probe",
            EvalTask::Finetune => "finetune",
            EvalTask::Speed => "speed",
            EvalTask::Collapse => "collapse",
        }
    }
}

#[derive(Serialize)]
struct RetrievalJson {
    task: &'static str,
    ks: Vec<usize>,
    accuracies: Vec<f32>,
    query_count: usize,
    gallery_count: usize,
}

#[derive(Serialize)]
struct ProbeJson {
    task: &'static str,
    accuracy: f32,
    n_classes: usize,
    confusion: Vec<usize>,
}

#[derive(Serialize)]
struct FinetuneJson {
    task: &'static str,
    accuracy: f32,
    epochs: usize,
}

#[derive(Serialize)]
struct CollapseJson {
    task: &'static str,
    mean_per_dim_std: f32,
    min_per_dim_std: f32,
    max_per_dim_std: f32,
    mean_pairwise_cosine: f32,
}

/// `eval`: run one downstream protocol against a checkpoint and write its
/// JSON report into the output directory.
pub fn cmd_eval(
    config_path: &Path,
    ckpt: &Path,
    task: EvalTask,
    overrides: &Overrides,
) -> Result<()> {
    let config = load_config(config_path, overrides)?;
    let corpus = load_corpus(&config)?;
    let loaded = load_checkpoint(ckpt)?;
    let out_dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&out_dir)?;

    let report_path = out_dir.join(format!("report_{}.json", task.name()));
    run_eval_task(&config, &corpus, &loaded.params, task, &report_path)?;
    println!("report written to {}", report_path.display());
    Ok(())
}

/// Shared by `cmd_eval` and the acceptance/ablation paths.
pub fn run_eval_task(
    config: &RunConfig,
    corpus: &[SyntheticVideo],
    params: &ModelParams,
    task: EvalTask,
    report_path: &Path,
) -> Result<()> {
    let geometry = geometry_of(&params.config);
    let (query_idx, gallery_idx) = split_queries_gallery(
        corpus.len(),
        config.eval.query_fraction,
        derive_seed(config.seed, &[EVAL_SPLIT_TAG]),
    )?;
    match task {
        EvalTask::Retrieval => {
            let report = eval_retrieval(config, corpus, params, &query_idx, &gallery_idx, geometry)?;
            println!("{}", retrieval_table(&report.ks, &report.accuracies));
            write_report(
                report_path,
                &RetrievalJson {
                    task: "retrieval",
                    ks: report.ks,
                    accuracies: report.accuracies,
                    query_count: report.query_count,
                    gallery_count: report.gallery_count,
                },
            )
        }
        EvalTask::Probe => {
            let report = eval_probe(config, corpus, params, &gallery_idx, &query_idx, geometry)?;
            println!("linear probe accuracy: {:.1}%", report.accuracy * 100.0);
            write_report(
                report_path,
                &ProbeJson {
                    task: "probe",
                    accuracy: report.accuracy,
                    n_classes: report.n_classes,
                    confusion: report.confusion,
                },
            )
        }
        EvalTask::Finetune => {
            let accuracy = finetune(
                corpus,
                &gallery_idx,
                &query_idx,
                params,
                config.corpus.n_classes,
                &FinetuneConfig {
                    epochs: config.eval.finetune_epochs,
                    batch_size: config.eval.finetune_batch,
                    base_lr: config.eval.finetune_lr,
                    momentum: config.train.momentum,
                    seed: derive_seed(config.seed, &[0xf1]),
                    geometry,
                },
            )?;
            println!("fine-tune accuracy: {:.1}%", accuracy * 100.0);
            write_report(
                report_path,
                &FinetuneJson {
                    task: "finetune",
                    accuracy,
                    epochs: config.eval.finetune_epochs,
                },
            )
        }
        EvalTask::Speed => {
            let report = eval_speed_probe(config, corpus, params, &gallery_idx, &query_idx, geometry)?;
            println!("speed probe accuracy: {:.1}%", report.accuracy * 100.0);
            write_report(
                report_path,
                &ProbeJson {
                    task: "speed",
                    accuracy: report.accuracy,
                    n_classes: report.n_classes,
                    confusion: report.confusion,
                },
            )
        }
        EvalTask::Collapse => {
            let all: Vec<usize> = (0..corpus.len()).collect();
            let features = extract_features_for(
                corpus,
                &all,
                params,
                FeatureSpace::Appearance,
                geometry,
            )?;
            let rows: Vec<Vec<f32>> = features.into_iter().map(|f| f.vector).collect();
            let metrics = collapse_metrics(&rows)?;
            println!(
                "per-dim std: mean {:.4}  mean pairwise cosine: {:.4}",
                metrics.mean_per_dim_std, metrics.mean_pairwise_cosine
            );
            let min = metrics.per_dim_std.iter().copied().fold(f32::INFINITY, f32::min);
            let max = metrics.per_dim_std.iter().copied().fold(0.0f32, f32::max);
            write_report(
                report_path,
                &CollapseJson {
                    task: "collapse",
                    mean_per_dim_std: metrics.mean_per_dim_std,
                    min_per_dim_std: min,
                    max_per_dim_std: max,
                    mean_pairwise_cosine: metrics.mean_pairwise_cosine,
                },
            )
        }
    }
}

pub fn eval_retrieval(
    config: &RunConfig,
    corpus: &[SyntheticVideo],
    params: &ModelParams,
    query_idx: &[usize],
    gallery_idx: &[usize],
    geometry: EvalClipGeometry,
) -> Result<ascnet_core::eval::RetrievalReport> {
    let queries = extract_features_for(corpus, query_idx, params, FeatureSpace::Encoder, geometry)?;
    let gallery = extract_features_for(corpus, gallery_idx, params, FeatureSpace::Encoder, geometry)?;
    Ok(topk_retrieval(&queries, &gallery, &config.eval.retrieval_ks)?)
}

pub fn eval_probe(
    config: &RunConfig,
    corpus: &[SyntheticVideo],
    params: &ModelParams,
    train_idx: &[usize],
    test_idx: &[usize],
    geometry: EvalClipGeometry,
) -> Result<ascnet_core::eval::ProbeReport> {
    let train = extract_features_for(corpus, train_idx, params, FeatureSpace::Encoder, geometry)?;
    let test = extract_features_for(corpus, test_idx, params, FeatureSpace::Encoder, geometry)?;
    let train_x: Vec<Vec<f32>> = train.iter().map(|f| f.vector.clone()).collect();
    let train_y: Vec<usize> = train.iter().map(|f| f.appearance_class).collect();
    let test_x: Vec<Vec<f32>> = test.iter().map(|f| f.vector.clone()).collect();
    let test_y: Vec<usize> = test.iter().map(|f| f.appearance_class).collect();
    Ok(linear_probe(
        &train_x,
        &train_y,
        &test_x,
        &test_y,
        config.corpus.n_classes,
        config.eval.probe_epochs,
        config.eval.probe_lr,
        derive_seed(config.seed, &[PROBE_SEED_TAG]),
    )?)
}

pub fn eval_speed_probe(
    config: &RunConfig,
    corpus: &[SyntheticVideo],
    params: &ModelParams,
    train_idx: &[usize],
    test_idx: &[usize],
    geometry: EvalClipGeometry,
) -> Result<ascnet_core::eval::ProbeReport> {
    Ok(speed_probe(
        corpus,
        train_idx,
        test_idx,
        params,
        &config.train.speed_set,
        geometry,
        config.eval.probe_epochs,
        config.eval.probe_lr,
        derive_seed(config.seed, &[0x5d]),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblateAxis {
    InstanceMode,
    SpeedSet,
    Augmentation,
}

impl AblateAxis {
    pub fn name(self) -> &'static str {
        match self {
            AblateAxis::InstanceMode => "instance_mode",
            AblateAxis::SpeedSet => "speed_set",
            AblateAxis::Augmentation => "augmentation",
        }
    }
}

#[derive(Serialize, Clone)]
pub struct AblationRow {
    pub configuration: String,
    pub probe_accuracy: f32,
    pub retrieval_top1: f32,
    pub speed_probe_accuracy: Option<f32>,
    pub final_loss: f32,
}

#[derive(Serialize)]
pub struct AblationReport {
    pub axis: &'static str,
    pub steps: u64,
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

/// `ablate`: run every configuration of one ablation axis on a shared corpus
/// and seed, then emit a single comparative report.
pub fn cmd_ablate(config_path: &Path, axis: AblateAxis, overrides: &Overrides) -> Result<()> {
    let config = load_config(config_path, overrides)?;
    let out_dir = PathBuf::from(&config.out_dir);
    echo_resolved_config(&config, &out_dir)?;
    let corpus = load_corpus(&config)?;
    let report = run_ablation(&config, &corpus, axis)?;
    let report_path = out_dir.join(format!("ablate_{}.json", axis.name()));
    write_report(&report_path, &report)?;
    print_ablation(&report);
    println!("report written to {}", report_path.display());
    Ok(())
}

fn print_ablation(report: &AblationReport) {
    println!(
        "{:<24} {:>10} {:>12} {:>12} {:>10}",
        "configuration", "probe %", "retr top-1 %", "speed %", "loss"
    );
    for row in &report.rows {
        println!(
            "{:<24} {:>10.1} {:>12.1} {:>12} {:>10.4}",
            row.configuration,
            row.probe_accuracy * 100.0,
            row.retrieval_top1 * 100.0,
            row.speed_probe_accuracy
                .map(|a| format!("{:.1}", a * 100.0))
                .unwrap_or_else(|| "-".into()),
            row.final_loss
        );
    }
}

/// Runs one axis; exposed for the acceptance suite.
pub fn run_ablation(
    config: &RunConfig,
    corpus: &[SyntheticVideo],
    axis: AblateAxis,
) -> Result<AblationReport> {
    let variants: Vec<(String, RunConfig)> = match axis {
        AblateAxis::InstanceMode => [
            InstanceModeName::Same,
            InstanceModeName::Different,
            InstanceModeName::Similar,
        ]
        .into_iter()
        .map(|mode| {
            let mut v = config.clone();
            v.train.instance_mode = mode;
            (format!("{mode:?}").to_lowercase() + "_instance", v)
        })
        .collect(),
        AblateAxis::SpeedSet => [(1usize, 2usize), (1, 1), (1, 4), (4, 8)]
            .into_iter()
            .map(|(s1, s2)| {
                let mut v = config.clone();
                let mut set = vec![s1, s2];
                set.dedup();
                v.train.speed_set = set;
                v.train.speed_pair = Some([s1, s2]);
                (format!("speeds_{s1}x_{s2}x"), v)
            })
            .collect(),
        AblateAxis::Augmentation => {
            // Transforms stack one at a time, in the order they apply.
            type Enable = fn(&mut RunConfig);
            let stages: [(&str, Enable); 4] = [
                ("color_jitter", |c| {
                    c.augment.jitter = true;
                }),
                ("gaussian_blur", |c| {
                    c.augment.blur = true;
                }),
                ("random_grayscale", |c| {
                    c.augment.grayscale = true;
                }),
                ("solarization", |c| {
                    c.augment.solarize = true;
                }),
            ];
            let mut base = config.clone();
            base.augment.jitter = false;
            base.augment.blur = false;
            base.augment.grayscale = false;
            base.augment.solarize = false;
            let mut variants = Vec::new();
            let mut label = String::new();
            for (name, enable) in stages {
                enable(&mut base);
                label = if label.is_empty() {
                    name.to_string()
                } else {
                    format!("{label}+{name}")
                };
                variants.push((label.clone(), base.clone()));
            }
            variants
        }
    };

    let mut rows = Vec::new();
    for (label, mut variant) in variants {
        variant.train.total_steps = Some(config.ablate.steps);
        let encoder_config = variant.encoder_config();
        let train_config = variant.train_config();
        let augment_config = variant.augment_config();
        let mut trainer = Trainer::new(corpus, &encoder_config, train_config, augment_config)?;
        let prep = ThreadedPrep::from_env();
        let mut recent = Vec::new();
        trainer.run(&prep, |record| {
            recent.push(record.losses.total);
            Ok(())
        })?;
        let tail = &recent[recent.len().saturating_sub(20)..];
        let final_loss = tail.iter().sum::<f32>() / tail.len().max(1) as f32;

        let geometry = geometry_of(&trainer.params().config);
        let (query_idx, gallery_idx) = split_queries_gallery(
            corpus.len(),
            variant.eval.query_fraction,
            derive_seed(variant.seed, &[EVAL_SPLIT_TAG]),
        )?;
        let probe = eval_probe(&variant, corpus, trainer.params(), &gallery_idx, &query_idx, geometry)?;
        let retrieval =
            eval_retrieval(&variant, corpus, trainer.params(), &query_idx, &gallery_idx, geometry)?;
        let speed = if variant.train.speed_set.len() >= 2 {
            Some(
                eval_speed_probe(&variant, corpus, trainer.params(), &gallery_idx, &query_idx, geometry)?
                    .accuracy,
            )
        } else {
            None
        };
        rows.push(AblationRow {
            configuration: label,
            probe_accuracy: probe.accuracy,
            retrieval_top1: retrieval.accuracies[0],
            speed_probe_accuracy: speed,
            final_loss,
        });
    }
    Ok(AblationReport {
        axis: axis.name(),
        steps: config.ablate.steps,
        seed: config.seed,
        rows,
    })
}
