use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modscatter::analyze::analyze_dir;
use modscatter::error::{CliError, CliResult, EXIT_OK, EXIT_VERIFY};
use modscatter::rundir::{load_config, run};
use modscatter::sweep::{parse_param, sweep};
use modscatter::verify::{format_criterion, verify, Profile};

#[derive(Parser)]
#[command(name = "modscatter", version, about = "Modified-scattering simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one config into a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write scattering, fit, resonance and quadrature reports for a run.
    Analyze { run_dir: PathBuf },
    /// Evaluate the acceptance criteria on self-generated runs.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        profile: Profile,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run and analyze a config for every combination of parameter values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `key=v1,v2,...`; dotted keys reach nested fields. Repeatable.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let config = load_config(&config)?;
            let outcome = run(&config, &out, true)?;
            let r = &outcome.record;
            println!(
                "{} snapshots to t = {}, mass drift {:.3e}, {:.1} s",
                r.snapshots, r.t_last, r.mass_drift, r.wall_time_s
            );
            match outcome.abort {
                Some(abort) => Err(CliError::Solver(abort)),
                None => Ok(EXIT_OK),
            }
        }
        Command::Analyze { run_dir } => {
            let a = analyze_dir(&run_dir)?;
            let s = &a.scattering.summary;
            for (key, why) in &s.degenerate {
                println!("degenerate {key}: {why}");
            }
            for (key, pass) in &s.pass_flags {
                println!("{key:<18} {}", if *pass { "pass" } else { "fail" });
            }
            Ok(EXIT_OK)
        }
        Command::Verify { profile, out } => {
            let outcome = verify(profile, &out, |c| eprintln!("{}", format_criterion(c)))?;
            println!("criteria ({:?}, config {}):", profile, &outcome.provenance.config_hash[..12]);
            for c in &outcome.criteria {
                println!("{}", format_criterion(c));
            }
            println!("overall: {}", if outcome.overall { "PASS" } else { "FAIL" });
            Ok(if outcome.overall { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Sweep { config, params, out } => {
            let params = params.iter().map(|p| parse_param(p)).collect::<CliResult<Vec<_>>>()?;
            let summary = sweep(&config, &params, &out)?;
            for p in &summary.points {
                match &p.message {
                    None => println!("{:<30} ok", p.name),
                    Some(m) => println!("{:<30} exit {}: {m}", p.name, p.exit_code),
                }
            }
            Ok(summary.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let code = match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
