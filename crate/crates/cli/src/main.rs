use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ascnet_cli::commands::{
    AblateAxis, EvalTask, Overrides, cmd_ablate, cmd_eval, cmd_gen_data, cmd_pretrain,
};

/// Appearance/speed-consistency pretraining on a synthetic video corpus.
#[derive(Parser)]
#[command(name = "ascnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus (manifest + raw f32 pixel files).
    GenData {
        #[arg(long)]
        config: PathBuf,
        /// Override the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the root seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run self-supervised pretraining.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
        /// Resume from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on one downstream task.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        task: TaskArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep one ablation axis and emit a comparative report.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: AxisArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Retrieval,
    Probe,
    Finetune,
    Speed,
    Collapse,
}

impl From<TaskArg> for EvalTask {
    fn from(task: TaskArg) -> Self {
        match task {
            TaskArg::Retrieval => EvalTask::Retrieval,
            TaskArg::Probe => EvalTask::Probe,
            TaskArg::Finetune => EvalTask::Finetune,
            TaskArg::Speed => EvalTask::Speed,
            TaskArg::Collapse => EvalTask::Collapse,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    #[value(name = "instance_mode")]
    InstanceMode,
    #[value(name = "speed_set")]
    SpeedSet,
    #[value(name = "augmentation")]
    Augmentation,
}

impl From<AxisArg> for AblateAxis {
    fn from(axis: AxisArg) -> Self {
        match axis {
            AxisArg::InstanceMode => AblateAxis::InstanceMode,
            AxisArg::SpeedSet => AblateAxis::SpeedSet,
            AxisArg::Augmentation => AblateAxis::Augmentation,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { config, out, seed } => {
            cmd_gen_data(&config, &Overrides { out, seed })
        }
        Command::Pretrain {
            config,
            resume,
            out,
            seed,
        } => cmd_pretrain(&config, resume.as_deref(), &Overrides { out, seed }),
        Command::Eval {
            config,
            ckpt,
            task,
            out,
            seed,
        } => cmd_eval(&config, &ckpt, task.into(), &Overrides { out, seed }),
        Command::Ablate {
            config,
            axis,
            out,
            seed,
        } => cmd_ablate(&config, axis.into(), &Overrides { out, seed }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
