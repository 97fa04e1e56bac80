//! `qsvd`: reference integration, factor-flow runs, trajectory comparison.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 configuration or input
//! error, 3 numerical guard tripped, 4 reconstruction failure. Failures also
//! print a one-line JSON error record on stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsvd_core::pipeline::{
    compare, gnuplot_script, run_qsvd, run_reference, selftest, write_csv, RunConfig, Table, REFERENCE_HEADERS,
    TRAJECTORY_HEADERS,
};
use qsvd_core::qsim::Fidelity;
use qsvd_core::{ErrorClass, QsvdError, Result};

#[derive(Parser)]
#[command(name = "qsvd", version, about = "Factor-flow simulation of nonautonomous linear ODEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical RK2 trajectory on the output grid.
    Reference(RunArgs),
    /// Seed and step the SVD factors, reconstruct populations.
    Qsvd(RunArgs),
    /// Per-column deviations between two trajectory files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the metrics JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Classical,
    Exact,
    Sampled,
    Noisy,
}

impl From<Mode> for Fidelity {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Classical => Fidelity::Classical,
            Mode::Exact => Fidelity::Exact,
            Mode::Sampled => Fidelity::Sampled,
            Mode::Noisy => Fidelity::Noisy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Trajectory CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "noise-p1")]
    noise_p1: Option<f64>,
    #[arg(long = "noise-p2")]
    noise_p2: Option<f64>,
    #[arg(long = "noise-pro")]
    noise_pro: Option<f64>,
    /// Orthogonal projection of U and V after every step.
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "on")]
    project: Option<Switch>,
    /// Also write a gnuplot script for the trajectory.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_reader(File::open(p).map_err(|e| io_config(p, e))?)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.mode = m.into();
        }
        if let Some(n) = self.shots {
            cfg.n_shots = n;
        }
        if let Some(s) = self.seed {
            cfg.rng_seed = s;
        }
        if let Some(n) = self.steps {
            cfg.n_steps = n;
        }
        if let Some(p) = self.noise_p1 {
            cfg.noise.p1 = p;
        }
        if let Some(p) = self.noise_p2 {
            cfg.noise.p2 = p;
        }
        if let Some(p) = self.noise_pro {
            cfg.noise.p_ro = p;
        }
        if let Some(s) = self.project {
            cfg.project = matches!(s, Switch::On);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn io_config(p: &Path, e: io::Error) -> QsvdError {
    QsvdError::Config(format!("{}: {e}", p.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_config(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_gnuplot(args: &RunArgs, headers: &[&str]) -> Result<()> {
    if let Some(g) = &args.gnuplot {
        let data = args.out.as_deref().map_or("trajectory.csv".into(), |p| p.display().to_string());
        std::fs::write(g, gnuplot_script(&data, headers)).map_err(|e| io_config(g, e))?;
    }
    Ok(())
}

fn json_line(w: &mut dyn Write, value: serde_json::Result<serde_json::Value>) -> Result<()> {
    let text =
        value.and_then(|v| serde_json::to_string_pretty(&v)).map_err(|e| QsvdError::InvalidInput(e.to_string()))?;
    writeln!(w, "{text}").map_err(|e| QsvdError::InvalidInput(e.to_string()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Reference(args) => {
            let cfg = args.config()?;
            let rows = run_reference(&cfg)?;
            write_csv(output(args.out.as_deref())?, &rows)?;
            write_gnuplot(&args, &REFERENCE_HEADERS)?;
        }
        Command::Qsvd(args) => {
            let cfg = args.config()?;
            let run = run_qsvd(&cfg)?;
            write_csv(output(args.out.as_deref())?, &run.records)?;
            write_gnuplot(&args, &TRAJECTORY_HEADERS)?;
            // keep stdout clean for the CSV when no file was given
            if args.out.is_some() {
                json_line(&mut io::stdout().lock(), serde_json::to_value(&run.summary))?;
            } else {
                json_line(&mut io::stderr().lock(), serde_json::to_value(&run.summary))?;
            }
        }
        Command::Compare { a, b, out } => {
            let read = |p: &Path| Table::read(File::open(p).map_err(|e| io_config(p, e))?);
            let report = compare(&read(&a)?, &read(&b)?)?;
            json_line(&mut *output(out.as_deref())?, serde_json::to_value(&report))?;
        }
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &QsvdError) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::NumericalGuard => 3,
        ErrorClass::Reconstruction => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let class = match e.class() {
                ErrorClass::Config => "config",
                ErrorClass::NumericalGuard => "numerical-guard",
                ErrorClass::Reconstruction => "reconstruction",
            };
            let record = serde_json::json!({
                "error": e.kind(),
                "class": class,
                "step": e.step(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(exit_code(&e))
        }
    }
}
