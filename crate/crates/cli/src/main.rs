use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use clap::{Parser, Subcommand};
use horoflow::commands::{self, FlowOptions};
use horoflow::{init_threads, report, CliError, EXIT_OK};

#[derive(Parser)]
#[command(name = "horoflow", version, about = "Reduced Kähler-Ricci flow on horosymmetric Fano data")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Fano conditions and print the derived data as JSON.
    Validate { scenario: PathBuf },
    /// Solve for the soliton vector field and print it as JSON.
    Soliton { scenario: PathBuf },
    /// Run the reduced flow and write trace, checkpoints, report and plots.
    Flow {
        /// One or more scenario files; several run as child processes.
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        /// Points per axis.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Output directory (single scenario only).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep running to t_max after convergence.
        #[arg(long)]
        no_stop: bool,
        /// Stop after this many accepted steps (resumable with --resume).
        #[arg(long)]
        max_steps: Option<usize>,
        /// Concurrent child processes when several scenarios are given.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Summarize run directories; with two, print a side-by-side diff.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

fn print(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn fail(e: CliError) -> ExitCode {
    match &e {
        // the validation payload is a JSON report
        CliError::Validation(report) => {
            println!("{report}");
            eprintln!("horoflow: validation failed");
        }
        _ => eprintln!("horoflow: {e}"),
    }
    ExitCode::from(e.exit_code() as u8)
}

/// Runs each scenario as `horoflow flow <scenario> <args>` with at most `jobs` alive; returns the worst exit code.
fn run_children(scenarios: &[PathBuf], args: &[String], jobs: usize) -> Result<i32, CliError> {
    let exe = std::env::current_exe().map_err(|e| CliError::Io(e.to_string()))?;
    let mut pending = scenarios.iter();
    let mut running = Vec::new();
    let mut worst = EXIT_OK;
    loop {
        while running.len() < jobs.max(1) {
            let Some(s) = pending.next() else { break };
            let child = Command::new(&exe).arg("flow").arg(s).args(args).spawn().map_err(|e| CliError::Io(e.to_string()))?;
            running.push(child);
        }
        if running.is_empty() {
            return Ok(worst);
        }
        let mut child = running.remove(0);
        let status = child.wait().map_err(|e| CliError::Io(e.to_string()))?;
        worst = worst.max(status.code().unwrap_or(1));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let result = match cli.command {
        Cmd::Validate { scenario } => commands::cmd_validate(&scenario).map(|v| {
            print(&v);
            EXIT_OK
        }),
        Cmd::Soliton { scenario } => commands::cmd_soliton(&scenario).map(|v| {
            print(&v);
            EXIT_OK
        }),
        Cmd::Flow { scenarios, resume, grid, dt, t_max, tol, out, no_stop, max_steps, jobs } => {
            if scenarios.len() > 1 {
                if out.is_some() {
                    return fail(CliError::Schema("--out needs a single scenario".into()));
                }
                let mut args: Vec<String> = Vec::new();
                if resume {
                    args.push("--resume".into());
                }
                if no_stop {
                    args.push("--no-stop".into());
                }
                for (flag, v) in [
                    ("--grid", grid.map(|g| g.to_string())),
                    ("--dt", dt.map(|x| x.to_string())),
                    ("--t-max", t_max.map(|x| x.to_string())),
                    ("--tol", tol.map(|x| x.to_string())),
                    ("--max-steps", max_steps.map(|x| x.to_string())),
                ] {
                    if let Some(v) = v {
                        args.extend([flag.to_string(), v]);
                    }
                }
                run_children(&scenarios, &args, jobs)
            } else {
                let opts = FlowOptions { resume, grid, dt, t_max, tol, out, no_stop, max_steps };
                commands::cmd_flow(&scenarios[0], &opts).map(|o| {
                    print(&serde_json::json!({
                        "directory": o.dir.display().to_string(),
                        "converged": o.report["converged"],
                        "exit_code": o.exit_code,
                        "final": o.report["final"],
                    }));
                    o.exit_code
                })
            }
        }
        Cmd::Report { dirs } => {
            let refs: Vec<&Path> = dirs.iter().map(PathBuf::as_path).collect();
            report::cmd_report(&refs).map(|v| {
                print(&v);
                EXIT_OK
            })
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(e),
    }
}
