use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imba_cli::config::FileConfig;
use imba_cli::error::CliError;
use imba_cli::plot::{discover_runs, emit_plot_data};
use imba_cli::runner::run_experiment;
use imba_cli::sweep::{run_sweep, SweepSpec};

#[derive(Parser, Debug)]
#[command(
    name = "imba",
    version,
    about = "Temperature-sampling experiments on multi-task sparse parity"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Experiment or sweep file (TOML, or a run's manifest.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root directory.
    #[arg(long, global = true, env = "IMBA_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Override the configured seed (a sweep then runs only this seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent runs in a sweep.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Overwrite existing run directories.
    #[arg(long, global = true)]
    force: bool,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one configuration.
    Run,
    /// Train every variant x seed of a sweep and write summary.csv.
    Sweep,
    /// Export one metric from run directories as long-format CSV.
    PlotData {
        /// Metrics column to export, e.g. `lrt_loss`.
        #[arg(long)]
        metric: String,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Run directories or directories containing them (default: the output root).
        paths: Vec<PathBuf>,
    },
    /// Check a config or sweep file without running it.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn require_config(opts: &GlobalOpts) -> Result<&Path, CliError> {
    opts.config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let opts = &cli.global;
    let say = |msg: String| {
        if !opts.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Run => {
            let mut file = FileConfig::load(require_config(opts)?)?;
            if let Some(seed) = opts.seed {
                file.seed = Some(seed);
            }
            let cfg = file.resolve()?;
            let (dir, records) = run_experiment(&cfg, &opts.out, opts.force)?;
            if let Some(last) = records.last() {
                say(format!(
                    "{}: step {} macro_loss {:.4} macro_acc {:.4} hrt_loss {:.4} lrt_loss {:.4}",
                    dir.display(),
                    last.step,
                    last.macro_loss,
                    last.macro_accuracy,
                    last.hrt_loss,
                    last.lrt_loss
                ));
            }
            Ok(())
        }
        Command::Sweep => {
            let spec = SweepSpec::load(require_config(opts)?)?;
            let quiet = opts.quiet;
            let progress = move |o: &imba_cli::sweep::RunOutcome| {
                if quiet {
                    return;
                }
                match &o.result {
                    Ok(r) => println!(
                        "{} seed{}: lrt_loss {:.4} macro_acc {:.4}",
                        o.variant, o.seed, r.lrt_loss, r.macro_accuracy
                    ),
                    Err(e) => println!("{} seed{}: FAILED {e}", o.variant, o.seed),
                }
            };
            let report = run_sweep(
                &spec, &opts.out, opts.seed, opts.jobs, opts.force, &progress,
            )?;
            say(format!("summary: {}", report.summary_path.display()));
            match report.failures() {
                0 => Ok(()),
                n => Err(CliError::Runtime(format!(
                    "{n} of {} runs failed; see {}",
                    report.outcomes.len(),
                    report.summary_path.display()
                ))),
            }
        }
        Command::PlotData {
            metric,
            output,
            paths,
        } => {
            let roots = if paths.is_empty() {
                vec![opts.out.clone()]
            } else {
                paths.clone()
            };
            let data = emit_plot_data(&discover_runs(&roots)?, metric)?;
            match output {
                Some(path) => std::fs::write(path, data)?,
                None if !opts.quiet => print!("{data}"),
                None => {}
            }
            Ok(())
        }
        Command::Validate => {
            let path = require_config(opts)?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let is_sweep = path.extension().is_some_and(|e| e == "toml")
                && toml::from_str::<toml::Table>(&text)
                    .map(|t| t.contains_key("variants"))
                    .unwrap_or(false);
            if is_sweep {
                let spec = SweepSpec::load(path)?;
                let runs = spec.runs(opts.seed)?;
                say(format!(
                    "ok: sweep `{}` with {} variants x {} seeds = {} runs",
                    spec.experiment,
                    spec.variants.len(),
                    runs.len() / spec.variants.len(),
                    runs.len()
                ));
            } else {
                let mut file = FileConfig::load(path)?;
                if let Some(seed) = opts.seed {
                    file.seed = Some(seed);
                }
                let cfg = file.resolve()?;
                let resolved = serde_json::to_string_pretty(&FileConfig::from_resolved(&cfg))
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                say(resolved);
            }
            Ok(())
        }
    }
}
