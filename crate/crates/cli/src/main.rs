//! Command-line front end: scenario simulation, efficiency sweeps,
//! condition checks and comb echo timing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use reqm::conditions::echo_time_afc;
use reqm::efficiency::{gamma_grid, optimal_gamma, sweep_gamma};
use reqm::io::write_atomic;
use reqm::{Error, Protocol, Scenario};

const EXIT_ERROR: u8 = 1;
const EXIT_CONDITIONS_UNMET: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "reqm", version, about = "Raman echo quantum memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run both stages of a scenario and write envelopes, summary and condition report.
    Simulate {
        scenario: PathBuf,
        /// Output directory (overrides the scenario's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse to simulate when a reversibility condition fails.
        #[arg(long)]
        strict: bool,
    },
    /// Closed-form efficiency against the dephasing rate.
    Sweep {
        #[arg(long, value_enum, default_value = "both")]
        protocol: ProtocolArg,
        /// Comma-separated optical depths.
        #[arg(long = "alpha0L", value_delimiter = ',', default_values_t = [50.0, 200.0, 1000.0])]
        alpha0_l: Vec<f64>,
        /// Range `start:stop:step`.
        #[arg(long, default_value = "0:1:0.001")]
        gamma: String,
        /// CSV file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the reversibility conditions of a scenario.
    Check { scenario: PathBuf },
    /// Recall wait of the comb protocol.
    EchoTime {
        #[arg(long)]
        f1: f64,
        #[arg(long)]
        f2: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        spacing: f64,
        #[arg(long, default_value_t = 1)]
        order: u32,
    },
    /// Print the built-in scenario as TOML.
    DumpDefaults {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Recrib,
    Reafc,
    Both,
}

impl ProtocolArg {
    fn protocols(self) -> &'static [Protocol] {
        match self {
            ProtocolArg::Recrib => &[Protocol::Recrib],
            ProtocolArg::Reafc => &[Protocol::Reafc],
            ProtocolArg::Both => &Protocol::BOTH,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let unmet = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::ConditionsUnmet(_)));
            ExitCode::from(if unmet { EXIT_CONDITIONS_UNMET } else { EXIT_ERROR })
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Simulate { scenario, out, strict } => simulate(&scenario, out, strict),
        Command::Sweep {
            protocol,
            alpha0_l,
            gamma,
            out,
        } => {
            let csv = sweep(protocol, &alpha0_l, &gamma)?;
            emit(out.as_deref(), &csv)?;
            Ok(0)
        }
        Command::Check { scenario } => {
            let report = Scenario::load(&scenario)?.resolve()?.report;
            println!("{report}");
            Ok(if report.overall() { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::EchoTime {
            f1,
            f2,
            t1,
            spacing,
            order,
        } => {
            println!("{:.16e}", echo_time_afc(f1, f2, t1, spacing, order)?);
            Ok(0)
        }
        Command::DumpDefaults { out } => {
            emit(out.as_deref(), &Scenario::recrib_ideal().to_toml())?;
            Ok(0)
        }
    }
}

fn simulate(path: &Path, out: Option<PathBuf>, strict: bool) -> anyhow::Result<u8> {
    let mut scenario = Scenario::load(path)?;
    scenario.protocol.strict |= strict;
    let result = scenario.run()?;
    let dir = out.unwrap_or_else(|| scenario.output.clone());
    result
        .write(&dir)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    println!("{}", reqm::EchoRecord::summary_header());
    println!("{}", result.record.summary_line());
    println!("{}", result.resolved.report);
    println!("audit_imbalance={:.3e}", result.audit.imbalance());
    println!("outputs={}", dir.display());
    Ok(0)
}

fn parse_range(text: &str) -> anyhow::Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("--gamma expects start:stop:step, got `{text}`");
    }
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("--gamma: `{s}` is not a number"));
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

fn sweep(protocol: ProtocolArg, depths: &[f64], gamma: &str) -> anyhow::Result<String> {
    if depths.is_empty() {
        bail!("--alpha0L needs at least one value");
    }
    let (start, stop, step) = parse_range(gamma)?;
    let gammas = gamma_grid(start, stop, step)?;
    let mut csv = String::from("protocol,alpha0L,gamma,epsilon\n");
    let mut optima = String::new();
    for &p in protocol.protocols() {
        for &a in depths {
            if a.is_nan() || a <= 0.0 {
                bail!("--alpha0L values must be positive, got {a}");
            }
            for pt in sweep_gamma(p, a, &gammas) {
                let _ = writeln!(csv, "{},{:.16e},{:.16e},{:.16e}", p.name(), a, pt.gamma, pt.epsilon);
            }
            let opt = optimal_gamma(p, a)?;
            let _ = writeln!(
                optima,
                "# optimum protocol={} alpha0L={:.16e} gamma={:.16e} epsilon={:.16e}{}",
                p.name(),
                a,
                opt.gamma,
                opt.epsilon,
                if opt.no_interior_maximum { " no_interior_maximum" } else { "" }
            );
        }
    }
    csv.push_str(&optima);
    Ok(csv)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
