use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use holoflow_core::expr::FieldError;

mod commands;
mod util;
mod verify;

use commands::{Common, DirArg, TransitArgs, Usage, VerdictFailure};

/// Equilibria, orbits, transit times and separatrices of holomorphic flows.
#[derive(Debug, Parser)]
#[command(name = "holoflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Locate and classify equilibria in the window.
    Equilibria {
        #[arg(allow_hyphen_values = true)]
        field: String,
        #[command(flatten)]
        common: Common,
    },
    /// Fate grid and sample orbits, rendered as SVG.
    Portrait {
        #[arg(allow_hyphen_values = true)]
        field: String,
        /// Sample orbits per axis.
        #[arg(long, default_value_t = 6)]
        orbits: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Trace one orbit and report its fates.
    Orbit {
        #[arg(allow_hyphen_values = true)]
        field: String,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, value_enum, default_value = "both")]
        dir: DirArg,
        #[command(flatten)]
        common: Common,
    },
    /// Transit times by clock, contour and residue integrals.
    Transit {
        #[arg(allow_hyphen_values = true)]
        field: String,
        #[command(flatten)]
        args: TransitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// One configuration report per basin and sector.
    Separatrices {
        #[arg(allow_hyphen_values = true)]
        field: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in corpus and print a pass/fail table.
    Verify {
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Separatrix configurations over a list of parameter values.
    Sweep {
        #[arg(allow_hyphen_values = true)]
        field: String,
        /// NAME=v1,v2,...
        #[arg(long)]
        param: String,
        #[command(flatten)]
        common: Common,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HOLOFLOW_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("HOLOFLOW_THREADS must be a positive integer, got `{v}`"))
            .map_err(|e| e.context(Usage))?;
        if n == 0 {
            return Err(anyhow::anyhow!("HOLOFLOW_THREADS must be positive").context(Usage));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run_verify(strict: bool, json: Option<PathBuf>) -> Result<()> {
    let rows = verify::run();
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &rows {
        println!(
            "{}  {:width$}  {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} of {} checks passed", rows.len() - failed, rows.len());
    if let Some(p) = json {
        let v: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| serde_json::json!({"name": r.name, "pass": r.pass, "detail": r.detail}))
            .collect();
        util::write_atomic(&p, &holoflow_core::report::to_json(&v))?;
    }
    if strict && failed > 0 {
        return Err(VerdictFailure(format!("{failed} corpus checks failed")).into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Equilibria { field, common } => commands::equilibria(&field, &common),
        Command::Portrait {
            field,
            orbits,
            common,
        } => commands::portrait(&field, &common, orbits),
        Command::Orbit {
            field,
            from,
            dir,
            common,
        } => commands::orbit(&field, &common, &from, dir),
        Command::Transit {
            field,
            args,
            common,
        } => commands::transit(&field, &common, &args),
        Command::Separatrices { field, common } => commands::separatrices(&field, &common),
        Command::Verify { strict, json } => run_verify(strict, json),
        Command::Sweep {
            field,
            param,
            common,
        } => commands::sweep(&field, &common, &param),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<VerdictFailure>().is_some() {
        3
    } else if e.downcast_ref::<Usage>().is_some() || e.downcast_ref::<FieldError>().is_some() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("holoflow: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
