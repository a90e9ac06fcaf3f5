use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedadas::experiment::{self, ExperimentConfig, RunOptions, SweepAxis};
use fedadas::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "fedadas", version, about = "Federated distillation experiments on tabular data")]
struct Cli {
    /// Print nothing but errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its log, summary and report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "FEDADAS_OUT_DIR", default_value = "fedadas-runs")]
        out: PathBuf,
        /// Worker threads for per-client phases.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate finished runs (summary files or run directories).
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Also write the table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write one config per grid point, e.g. `--param num_clients=5,10`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        #[arg(long, env = "FEDADAS_OUT_DIR", default_value = "fedadas-runs")]
        out: PathBuf,
    },
    /// Emit long-format `round,client,metric,value` CSV for a finished run.
    PlotData {
        run: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> fedadas::Result<ExperimentConfig> {
    let mut config = experiment::parse_config(path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
        config.validate()?;
    }
    Ok(config)
}

fn run(cli: Cli) -> fedadas::Result<()> {
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            parallel,
        } => {
            let config = load(&config, seed)?;
            if parallel == 0 {
                return Err(Error::InvalidField {
                    field: "--parallel".into(),
                    constraint: "parallelism must be >= 1".into(),
                });
            }
            let result = experiment::run_to_dir(&config, &RunOptions { parallelism: parallel }, &out)?;
            let e = &result.evaluation;
            say(format!(
                "{} clients, {} rounds, {}: personalization {:.2}  generalization {:.2}  BAM {:.2}  comm {:.4} MB",
                config.num_clients, config.rounds, config.method, e.mean_personalization, e.mean_generalization, e.mean_bam,
                result.communication.total_mb
            ));
            say(format!("wrote {}", out.display()));
        }
        Command::Validate { config } => {
            let c = load(&config, None)?;
            say(format!("{}: ok ({}, {} clients, {} rounds)", config.display(), c.method, c.num_clients, c.rounds));
        }
        Command::Compare { runs, csv } => {
            let cmp = experiment::compare(&runs)?;
            if let Some(path) = csv {
                experiment::write_atomic(&path, cmp.to_csv()?.as_bytes())?;
            }
            say(cmp.to_text());
        }
        Command::Sweep { config, params, out } => {
            let base = load(&config, None)?;
            let axes = params.iter().map(|p| SweepAxis::parse(p)).collect::<fedadas::Result<Vec<_>>>()?;
            let files = experiment::write_sweep(&base, &axes, &out)?;
            for f in &files {
                say(f.display().to_string());
            }
        }
        Command::PlotData { run, out } => {
            let data = experiment::plot_data(&experiment::read_summary(&run)?)?;
            match out {
                Some(path) => experiment::write_atomic(&path, data.as_bytes())?,
                None => print!("{data}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
