//! Command-line front end: `solve`, `verify` and `demo`.
//!
//! Exit status: 0 on success, 1 on a validation or I/O error, 2 when the
//! instance is infeasible, 3 when `verify` finds a gap above tolerance.

pub mod emit;
pub mod report;
pub mod scenario;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::curves::DEFAULT_RESOLUTION;
use crate::Error;
use report::Solved;
use scenario::{demo_scenario, Format, Scenario, DEMO_NAMES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_GAP: i32 = 3;

const DEFAULT_GRID: &str = "400x400";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "eh-sched",
    version,
    about = "Throughput-optimal transmit schedules for energy-harvesting transmitters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for the report, schedule and plot files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Files to write into --out.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Samples used to integrate continuous harvest profiles.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Seed for the random dominance check.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Oracle grid as TIMESxLEVELS.
    #[arg(long, global = true)]
    grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario file.
    Solve { scenario: PathBuf },
    /// Solve and compare against the brute-force oracle. The target is a
    /// scenario file or `demo NAME`.
    Verify {
        #[arg(num_args = 1..=2, required = true)]
        target: Vec<String>,
    },
    /// Run a built-in scenario.
    Demo { name: String },
}

/// Parses `TxL`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::InvalidArgument(format!("grid must look like 400x400, got {s:?}"));
    let (t, l) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let t: usize = t.trim().parse().map_err(|_| bad())?;
    let l: usize = l.trim().parse().map_err(|_| bad())?;
    if t < 2 || l < 2 {
        return Err(bad());
    }
    Ok((t, l))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } | Error::NonZeroStart(_) => EXIT_INFEASIBLE,
        _ => EXIT_INVALID,
    }
}

struct Job {
    name: String,
    scenario: Scenario,
    verify: bool,
}

fn load(cmd: &Command) -> Result<Job, String> {
    let from_file = |path: &Path| -> Result<(String, String), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        Ok((stem, text))
    };
    let from_demo = |name: &str| -> Result<(String, String), String> {
        demo_scenario(name)
            .map(|t| (name.to_string(), t.to_string()))
            .ok_or_else(|| {
                format!(
                    "unknown demo {name:?}; available: {}",
                    DEMO_NAMES.join(", ")
                )
            })
    };
    let ((name, text), verify) = match cmd {
        Command::Solve { scenario } => (from_file(scenario)?, false),
        Command::Demo { name } => (from_demo(name)?, false),
        Command::Verify { target } => match target.as_slice() {
            [kw, name] if kw == "demo" => (from_demo(name)?, true),
            [path] => (from_file(Path::new(path))?, true),
            _ => return Err("verify takes a scenario file or `demo NAME`".into()),
        },
    };
    let scenario = Scenario::parse(&text).map_err(|e| e.to_string())?;
    Ok(Job {
        name,
        scenario,
        verify,
    })
}

fn write_outputs(dir: &Path, solved: &Solved, formats: &[Format]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = &solved.report.name;
    let mut written = Vec::new();
    for format in formats {
        let (file, body) = match format {
            Format::Json => (format!("{stem}.report.json"), emit::json(&solved.report)),
            Format::Csv => (format!("{stem}.schedule.csv"), emit::csv(&solved.report)),
            Format::Svg => (
                format!("{stem}.svg"),
                emit::svg(&solved.report, &solved.plot),
            ),
        };
        let path = dir.join(file);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs the CLI and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let job = match load(&cli.command) {
        Ok(job) => job,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    let opts = &job.scenario.output;
    let resolution = cli
        .resolution
        .or(opts.resolution)
        .unwrap_or(DEFAULT_RESOLUTION);
    let seed = cli.seed.or(opts.seed).unwrap_or(DEFAULT_SEED);
    let grid = cli.grid.clone().or_else(|| opts.grid.clone());
    let formats = cli
        .format
        .clone()
        .or_else(|| opts.formats.clone())
        .unwrap_or_else(|| vec![Format::Json, Format::Csv, Format::Svg]);

    let fail = |e: Error| {
        eprintln!("error: {e}");
        exit_code(&e)
    };
    let problem = match job.scenario.build(resolution) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let mut solved = match report::solve(&job.name, &problem) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let mut status = EXIT_OK;
    if job.verify {
        let (slots, levels) = match parse_grid(grid.as_deref().unwrap_or(DEFAULT_GRID)) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        match report::verify(&problem, &solved, slots, levels, seed) {
            Ok(v) => {
                if !v.passed {
                    status = EXIT_GAP;
                }
                solved.report.verification = Some(v);
            }
            Err(e) => return fail(e),
        }
    } else if grid.is_some() && cli.grid.is_some() {
        eprintln!("warning: --grid only applies to verify");
    }

    print!("{}", report::summary(&solved.report));
    if let Some(dir) = &cli.out {
        match write_outputs(dir, &solved, &formats) {
            Ok(paths) => {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return EXIT_INVALID;
            }
        }
    }
    status
}
