use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use helmtrial::domains::SamplingMeasure;
use helmtrial::training::GradScope;
use helmtrial_cli::{cmd_adf, cmd_compare, cmd_diagnose, cmd_oracle, cmd_solve, CliError, MethodKind, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "helmtrial", version, about = "Hard-constrained neural Helmholtz solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network per frequency and write report, checkpoint and field.
    Solve(RunArgs),
    /// Write reference fields from the closed forms or finite elements.
    Oracle(RunArgs),
    /// Relative L2 and max-abs error of field A against reference field B.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rasterise the distance fields and weights of the configured domain.
    Adf {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Like solve, also writing gradient histograms and spread statistics.
    Diagnose {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    AreaUniform,
    CoordUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    LastHidden,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file; built-in defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodKind>,
    /// Frequencies in Hz, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    freq: Vec<f64>,
    /// Seed for both the network initialisation and the collocation sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root, overriding the config file and the environment.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed multiplier, or the initial one for the dynamic schedule.
    #[arg(long)]
    lambda: Option<f64>,
    /// Smoothing factor of the dynamic multiplier.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    sampling: Option<MeasureArg>,
    /// Parameters whose gradients feed the dynamic multiplier.
    #[arg(long, value_enum)]
    lambda_grad_scope: Option<ScopeArg>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            method: self.method,
            frequencies: self.freq.clone(),
            seed: self.seed,
            out: self.out.clone(),
            lambda: self.lambda,
            alpha: self.alpha,
            sampling: self.sampling.map(|m| match m {
                MeasureArg::AreaUniform => SamplingMeasure::AreaUniform,
                MeasureArg::CoordUniform => SamplingMeasure::CoordUniform,
            }),
            grad_scope: self.lambda_grad_scope.map(|s| match s {
                ScopeArg::All => GradScope::All,
                ScopeArg::LastHidden => GradScope::LastHidden,
            }),
        })?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            for r in cmd_solve(&args.resolve()?)? {
                println!(
                    "{} Hz: {} after {} iterations, loss {:e} -> {}",
                    r.frequency,
                    r.summary.stop,
                    r.summary.iterations,
                    r.summary.final_loss.l_total,
                    r.dir.display()
                );
            }
        }
        Command::Diagnose { run, bins } => {
            for r in cmd_diagnose(&run.resolve()?, bins)? {
                println!("{} Hz: {} -> {}", r.frequency, r.summary.stop, r.dir.display());
            }
        }
        Command::Oracle(args) => {
            for (dir, s) in cmd_oracle(&args.resolve()?)? {
                let check = s
                    .crosscheck
                    .map(|c| format!(", fem relative L2 {:.3e}", c.relative_l2))
                    .unwrap_or_default();
                println!("{} Hz: {:?}{check} -> {}", s.frequency, s.method, dir.display());
            }
        }
        Command::Compare { a, b, out } => {
            let out = out.unwrap_or_else(|| RunConfig::default().output_root().join("compare"));
            let m = cmd_compare(&a, &b, &out)?;
            println!("relative L2 {:e}, max abs {:e} over {} points -> {}", m.relative_l2, m.max_abs, m.points, out.display());
        }
        Command::Adf { config, grid, out } => {
            let cfg = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            let out = out.unwrap_or_else(|| cfg.output_root().join(format!("adf-{}", cfg.domain.name())));
            let files = cmd_adf(&cfg.domain, cfg.trial.smoothness, grid, &out)?;
            println!("wrote {} rasters to {}", files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
