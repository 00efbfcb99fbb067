use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sst_cli::commands::{
    cmd_bench, cmd_curves, cmd_eval, cmd_gradcheck, cmd_sparsify, cmd_train, gradcheck_text, EvalData,
    GRADCHECK_TOLERANCE,
};
use sst_cli::config::{DataSource, RunConfig};
use sst_cli::{exit_code, EXIT_CHECK_FAILED, EXIT_OK};
use sst_core::{Error, Result};

#[derive(Parser)]
#[command(name = "sst", version, about = "GRU experiments with squared sigmoid / squared tanh activations")]
struct Cli {
    /// Run configuration (flat key=value file).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Model seed, overriding model.seed in the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Print only the essential result lines.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint, history and evaluation report.
    Train,
    /// Evaluate a checkpoint on a data file, or on the configured test split.
    Eval {
        /// Checkpoint written by `train`
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Delimited data file to score instead of the configured test split
        #[arg(long, value_name = "PATH", requires = "schema")]
        data: Option<PathBuf>,
        /// Schema sidecar for --data
        #[arg(long, value_name = "PATH", requires = "data")]
        schema: Option<PathBuf>,
    },
    /// Compare analytic and central-difference gradients; exit 1 on failure.
    Gradcheck {
        #[arg(long, hide = true)]
        mutate_ss_grad: bool,
    },
    /// Train classical and SST models over the configured seeds.
    Bench,
    /// Zero out values in a dataset and write the sparse copy.
    Sparsify {
        /// Data file; defaults to data.path from the configuration.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Schema sidecar; defaults to data.schema from the configuration.
        #[arg(long, value_name = "PATH")]
        schema: Option<PathBuf>,
        /// Fraction of sequences to sparsify
        #[arg(long)]
        seq_fraction: Option<f64>,
        /// Fraction of values zeroed inside each sparse sequence
        #[arg(long)]
        value_fraction: Option<f64>,
    },
    /// Tabulate SF, SS, TF, ST and their derivatives over a grid.
    Curves {
        /// Grid start
        #[arg(long, allow_hyphen_values = true)]
        xmin: Option<f64>,
        /// Grid end
        #[arg(long, allow_hyphen_values = true)]
        xmax: Option<f64>,
        /// Number of grid points, endpoints included
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> Option<PathBuf> {
    cli.out.clone().or_else(|| cfg.output_dir.clone())
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Train => {
            let out = out_dir(cli, &cfg).unwrap_or_else(|| PathBuf::from("sst-out"));
            let r = cmd_train(&cfg, &out)?;
            if !cli.quiet {
                print!("{}", r.report.to_text());
                println!("outputs={}", out.display());
            }
        }
        Command::Eval { checkpoint, data, schema } => {
            let source = match (data, schema) {
                (Some(data), Some(schema)) => EvalData::File { data, schema },
                _ => EvalData::Config(&cfg),
            };
            let roc_dir = cli
                .out
                .clone()
                .unwrap_or_else(|| checkpoint.parent().unwrap_or(Path::new(".")).to_path_buf());
            print!("{}", cmd_eval(checkpoint, source, &roc_dir)?.to_text());
        }
        Command::Gradcheck { mutate_ss_grad } => {
            let report = cmd_gradcheck(&cfg, *mutate_ss_grad)?;
            let text = gradcheck_text(&report);
            if cli.quiet {
                print!("{}", text.lines().skip(report.groups.len()).collect::<Vec<_>>().join("\n") + "\n");
            } else {
                print!("{text}");
            }
            if !report.passes(GRADCHECK_TOLERANCE) {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
        Command::Bench => {
            let out = out_dir(cli, &cfg);
            let result = cmd_bench(&cfg, out.as_deref())?;
            if !cli.quiet {
                print!("{}", result.table());
            }
        }
        Command::Sparsify {
            input,
            schema,
            seq_fraction,
            value_fraction,
        } => {
            let (cfg_input, cfg_schema) = match &cfg.data.source {
                DataSource::File { path, schema } => (Some(path.clone()), Some(schema.clone())),
                _ => (None, None),
            };
            let input = input
                .clone()
                .or(cfg_input)
                .ok_or_else(|| Error::Config("sparsify needs --input or data.source=file".into()))?;
            let schema = schema
                .clone()
                .or(cfg_schema)
                .ok_or_else(|| Error::Config("sparsify needs --schema or data.schema".into()))?;
            let mut sparsity = cfg.sparsity;
            sparsity.seq_fraction = seq_fraction.unwrap_or(sparsity.seq_fraction);
            sparsity.value_fraction = value_fraction.unwrap_or(sparsity.value_fraction);
            let out = out_dir(cli, &cfg).unwrap_or_else(|| PathBuf::from("."));
            println!("{}", cmd_sparsify(&input, &schema, &sparsity, &out)?);
        }
        Command::Curves { xmin, xmax, steps } => {
            let (x0, x1, n) = cfg.curves;
            let table = cmd_curves(xmin.unwrap_or(x0), xmax.unwrap_or(x1), steps.unwrap_or(n))?;
            match out_dir(cli, &cfg) {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                    let path = dir.join("curves.tsv");
                    std::fs::write(&path, table).map_err(|e| Error::Io { path, source: e })?;
                }
                None => print!("{table}"),
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
