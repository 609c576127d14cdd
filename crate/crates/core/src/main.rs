use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use attocell::config::{parse_methods, RunConfig};
use attocell::model::ReceiverPosition;
use attocell::sweep::{run_sums, run_sweep, run_validate};
use attocell::Error;

/// Coverage of randomly activated LiFi attocell networks.
#[derive(Debug, Parser)]
#[command(name = "attocell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute coverage curves and write CSV files plus manifest.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Output directory (overrides `sweep.out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare direct and series moment sums at one receiver position.
    Sums {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        zx: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        zy: f64,
        /// Series box size along x.
        #[arg(long)]
        j: Option<u32>,
        /// Series box size along y.
        #[arg(long)]
        l: Option<u32>,
    },
    /// Check Monte Carlo coverage against the analytic curves.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config, or a manifest.json from an earlier sweep.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per quadrature node.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated list: analytic, brute, montecarlo.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// Lattice truncation (rings of interferers).
    #[arg(long)]
    trunc: Option<u32>,
}

impl Common {
    fn load(&self) -> attocell::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.sweep.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.sweep.trials = trials;
        }
        if let Some(m) = &self.methods {
            cfg.sweep.methods = parse_methods(m)?;
        }
        if let Some(q) = self.quad_order {
            cfg.sweep.quad_order = q;
        }
        if let Some(t) = self.trunc {
            cfg.geometry.trunc = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Config { .. } | Error::Domain { .. } => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> attocell::Result<u8> {
    match cli.command {
        Command::Sweep { common, out } => {
            let mut cfg = common.load()?;
            if let Some(out) = out {
                cfg.sweep.out = out.to_string_lossy().into_owned();
            }
            let out = PathBuf::from(&cfg.sweep.out);
            let manifest = run_sweep(&cfg, &out, |name| eprintln!("wrote {name}"))?;
            for c in &manifest.comparisons {
                eprintln!(
                    "h/a = {}, p = {}: max |MC - analytic| = {:.4} at {} dB",
                    c.height_ratio, c.p, c.max_abs_diff, c.at_theta_db
                );
            }
            println!("{} curves written to {}", manifest.files.len(), out.display());
            Ok(0)
        }
        Command::Sums { common, zx, zy, j, l } => {
            let mut cfg = common.load()?;
            if let Some(j) = j {
                cfg.sweep.series_j = j;
            }
            if let Some(l) = l {
                cfg.sweep.series_l = l;
            }
            let report = run_sums(&cfg, ReceiverPosition::new(zx, zy))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print!("{report}");
            Ok(0)
        }
        Command::Validate { common } => {
            let cfg = common.load()?;
            let report = run_validate(&cfg, |line| eprintln!("{line}"))?;
            print!("{report}");
            if report.passed() {
                println!("PASS");
                Ok(0)
            } else {
                if let Some(w) = report.worst() {
                    println!(
                        "FAIL: max |MC - analytic| = {:.4} exceeds {} (h/a = {}, p = {})",
                        w.max_abs_diff, report.budget, w.height_ratio, w.p
                    );
                }
                Ok(EXIT_VALIDATION)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
