use clap::{Parser, Subcommand};
use harness_cli::commands::{
    cmd_attn_stats, cmd_eval, cmd_modulator_curve, cmd_simplex_path, cmd_sweep, cmd_train_toy,
    cmd_verify_props, TrainToyOpts,
};
use harness_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Reweighting functions on the probability simplex: evaluation, metric
/// sweeps, verification suites, and a toy attention trainer.
#[derive(Parser)]
#[command(name = "multimax", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one reweighting function on an input vector.
    Eval {
        /// softmax, multimax, sparsemax, entmax15 or evsoftmax.
        #[arg(long = "fn")]
        fn_name: String,
        /// Comma-separated logits, e.g. "1,2,3".
        #[arg(long, allow_hyphen_values = true)]
        input: String,
        /// Temperature divisor (softmax only, default 1).
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        /// Modulator parameters: bundled name (deit_small, lm6) or JSON path.
        #[arg(long)]
        params: Option<String>,
        /// One-based layer inside the parameter bundle.
        #[arg(long, default_value_t = 1)]
        layer: usize,
    },
    /// Emit sigma(x) per bundle layer over a grid as CSV.
    ModulatorCurve {
        #[arg(long)]
        params: String,
        /// start:stop:step, e.g. "-6:6:0.01".
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
    /// Trajectory of a 3-entry distribution over a knob grid, as CSV with
    /// planar simplex coordinates.
    SimplexPath {
        #[arg(long = "fn")]
        fn_name: String,
        /// Exactly three comma-separated logits.
        #[arg(long, allow_hyphen_values = true)]
        input: String,
        /// Knob grid, start:stop:step[:log].
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        params: Option<String>,
        #[arg(long, default_value_t = 1)]
        layer: usize,
    },
    /// Multi-modality / sparsity sweep along a knob grid, as CSV.
    Sweep {
        #[arg(long = "fn")]
        fn_name: String,
        #[arg(long, allow_hyphen_values = true)]
        input: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Relevance threshold (default: mean absolute input entry).
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Option<f64>,
        /// Sparsity reference scale (default: smallest softmax probability).
        #[arg(long = "sparsity-ref")]
        s_ref: Option<f64>,
        #[arg(long)]
        params: Option<String>,
        #[arg(long, default_value_t = 1)]
        layer: usize,
    },
    /// Run the randomized inequality suites; nonzero exit on any violation.
    VerifyProps {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Train the toy attention classifier on the synthetic retrieval task.
    TrainToy {
        #[arg(long = "fn", default_value = "softmax")]
        fn_name: String,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        lr: f64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        heads: usize,
        #[arg(long = "dim", default_value_t = 16)]
        model_dim: usize,
        #[arg(long = "ff-dim", default_value_t = 32)]
        ff_dim: usize,
        #[arg(long = "seq-len", default_value_t = 32)]
        seq_len: usize,
        #[arg(long, default_value_t = 64)]
        vocab: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        /// Relevant (marker) tokens per sample.
        #[arg(long, default_value_t = 3)]
        relevant: usize,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long = "batch", default_value_t = 16)]
        batch_size: usize,
        /// Where to write the trained checkpoint (JSON).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Attention statistics of a trained checkpoint: histogram, cumulative
    /// distribution, patch similarity and rollout discrepancy CSVs.
    AttnStats {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "eval-seed", default_value_t = 999)]
        eval_seed: u64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        relevant: usize,
        #[arg(long = "out", default_value = "attn-stats")]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Eval {
            fn_name,
            input,
            tau,
            params,
            layer,
        } => {
            print!(
                "{}",
                cmd_eval(&fn_name, &input, tau, params.as_deref(), layer)?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ModulatorCurve { params, range } => {
            print!("{}", cmd_modulator_curve(&params, &range)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::SimplexPath {
            fn_name,
            input,
            grid,
            params,
            layer,
        } => {
            print!(
                "{}",
                cmd_simplex_path(&fn_name, &input, &grid, params.as_deref(), layer)?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            fn_name,
            input,
            grid,
            epsilon,
            s_ref,
            params,
            layer,
        } => {
            print!(
                "{}",
                cmd_sweep(
                    &fn_name,
                    &input,
                    &grid,
                    epsilon,
                    s_ref,
                    params.as_deref(),
                    layer
                )?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyProps { trials, seed } => {
            let (report, all_passed) = cmd_verify_props(trials, seed)?;
            print!("{report}");
            if all_passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::TrainToy {
            fn_name,
            steps,
            seed,
            lr,
            depth,
            heads,
            model_dim,
            ff_dim,
            seq_len,
            vocab,
            classes,
            relevant,
            samples,
            batch_size,
            checkpoint,
        } => {
            let opts = TrainToyOpts {
                fn_name,
                steps,
                seed,
                lr,
                depth,
                heads,
                model_dim,
                ff_dim,
                seq_len,
                vocab,
                classes,
                relevant,
                samples,
                batch_size,
                checkpoint,
            };
            print!("{}", cmd_train_toy(&opts)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::AttnStats {
            checkpoint,
            eval_seed,
            samples,
            relevant,
            out_dir,
        } => {
            print!(
                "{}",
                cmd_attn_stats(&checkpoint, eval_seed, samples, relevant, &out_dir)?
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
