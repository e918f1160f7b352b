//! `trajforge`: command-line front end to the trajectoid pipeline.
//!
//! Exit status: 0 success, 1 I/O fault, 2 invalid configuration or domain
//! error (details in `error.json`), 3 verification ran but a check failed,
//! 64 usage error.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;
use trajectoid_forge::io::{read_json, write_json};
use trajectoid_forge::Error;

use config::{invalid, validate, Invalid, RunConfig};
use run::Failure;

const EXIT_IO: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_CHECKS: u8 = 3;
const EXIT_USAGE: u8 = 64;
const DEFAULT_OUT: &str = "trajforge-out";

#[derive(Parser)]
#[command(name = "trajforge", version, about = "Design rolling bodies that follow planar curves")]
struct Cli {
    /// Output directory.
    #[arg(long, env = "TRAJFORGE_OUT", global = true)]
    out: Option<PathBuf>,
    /// JSON file with RunConfig fields; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 keeps results bit-reproducible.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a planar curve onto a sphere of radius r.
    Lift(RunConfig),
    /// Find a radius at which rotated lifted periods close into a simple loop.
    Close(RunConfig),
    /// Carve the groove of a certified loop into a ball.
    Carve(RunConfig),
    /// Roll a body down the inclined plane along the target curve.
    Simulate(RunConfig),
    /// Sample curvature controls against the constant one.
    Mob(RunConfig),
    /// Run a suite of quantitative checks.
    Verify(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::Lift(c) => ("lift", c),
            Command::Close(c) => ("close", c),
            Command::Carve(c) => ("carve", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Mob(c) => ("mob", c),
            Command::Verify(c) => ("verify", c),
        }
    }
}

fn error_json(kind: &str, message: &str, field: Option<&str>) -> serde_json::Value {
    let mut v = json!({ "error": kind, "message": message });
    if let Some(f) = field {
        v["field"] = json!(f);
    }
    v
}

fn exit_with(code: u8, report: &serde_json::Value, out: Option<&Path>) -> ExitCode {
    eprintln!("{report}");
    if let Some(dir) = out {
        // best effort: the report is already on stderr
        let _ = write_json(&dir.join("error.json"), report);
    }
    ExitCode::from(code)
}

fn invalid_exit(e: &Invalid, out: Option<&Path>) -> ExitCode {
    exit_with(EXIT_DOMAIN, &error_json("InvalidConfig", &e.message, Some(e.field)), out)
}

fn domain_exit(e: &Error, out: Option<&Path>) -> ExitCode {
    let code = if e.is_io() { EXIT_IO } else { EXIT_DOMAIN };
    exit_with(code, &error_json(e.kind(), &e.to_string(), None), out)
}

/// Creates the directory and proves it writable before any compute. A stale
/// `error.json` from an earlier run is removed.
fn prepare_out(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".trajforge-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(probe)?;
    match std::fs::remove_file(dir.join("error.json")) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let (stage, mut flags) = cli.command.split();
    flags.command = Some(stage.to_string());
    flags.out = cli.out;
    flags.threads = cli.threads;

    let file = match &cli.config {
        Some(path) => match read_json::<RunConfig>(path) {
            Ok(c) => c,
            Err(e) if e.is_io() => return domain_exit(&e, None),
            Err(e) => return invalid_exit(&invalid("config", e.to_string()), None),
        },
        None => RunConfig::default(),
    };
    let mut cfg = flags.or(&file);
    let out = cfg.out.get_or_insert_with(|| DEFAULT_OUT.into()).clone();
    let threads = *cfg.threads.get_or_insert(1);
    if let Err(e) = validate(&cfg) {
        return invalid_exit(&e, None);
    }
    if let Err(e) = prepare_out(&out) {
        let report = error_json("Io", &format!("{}: {e}", out.display()), Some("out"));
        return exit_with(EXIT_IO, &report, None);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        return invalid_exit(&invalid("threads", e.to_string()), Some(&out));
    }

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let result = run::run(stage, &mut cfg, &out);
    let (status, code, artifacts) = match &result {
        Ok(o) if o.pass => ("ok", 0, o.artifacts.clone()),
        Ok(o) => ("checks-failed", EXIT_CHECKS, o.artifacts.clone()),
        Err(Failure::Invalid(_)) => ("invalid-config", EXIT_DOMAIN, vec![]),
        Err(Failure::Domain(e)) if e.is_io() => ("io-error", EXIT_IO, vec![]),
        Err(Failure::Domain(_)) => ("domain-error", EXIT_DOMAIN, vec![]),
    };
    let manifest = json!({
        "tool": "trajforge",
        "versions": { "trajforge": env!("CARGO_PKG_VERSION"), "manifest": 1 },
        "command": stage,
        "config": cfg,
        "started_unix": started,
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "status": status,
        "exit_code": code,
        "artifacts": artifacts,
    });
    if let Err(e) = write_json(&out.join("run.json"), &manifest) {
        return domain_exit(&e, None);
    }
    match result {
        Ok(_) => ExitCode::from(code),
        Err(Failure::Invalid(e)) => invalid_exit(&e, Some(&out)),
        Err(Failure::Domain(e)) => domain_exit(&e, Some(&out)),
    }
}
