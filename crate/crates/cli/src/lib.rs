//! The `peergroup` command line: one subcommand per pipeline step, each
//! writing its outputs and a manifest into a run directory.

pub mod commands;
pub mod io;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use peergroup_core::error::{Error, Result};

use commands::cluster::ClusterArgs;
use commands::dissim::DissimArgs;
use commands::explain::ExplainArgs;
use commands::fingerprint::FingerprintArgs;
use commands::preprocess::PreprocessArgs;
use commands::reallocate::ReallocateArgs;
use commands::sweep::SweepArgs;
use manifest::{perform, replay, RunManifest, Step};

pub const RUN_DIR_ENV: &str = "PEERGROUP_RUN_DIR";
const DEFAULT_RUN_DIR: &str = "peergroup-run";

#[derive(Debug, Parser)]
#[command(name = "peergroup", version, about = "Size- and stability-constrained peer groups")]
pub struct Cli {
    /// Run directory for outputs and manifests
    #[arg(long, global = true, env = RUN_DIR_ENV)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Preprocess(PreprocessArgs),
    Dissim(DissimArgs),
    Cluster(ClusterArgs),
    Sweep(SweepArgs),
    Reallocate(ReallocateArgs),
    Explain(ExplainArgs),
    Fingerprint(FingerprintArgs),
    /// Re-run a manifest and check that its outputs are reproduced exactly
    Replay {
        manifest: PathBuf,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invariant(_) => EXIT_INTERNAL,
        _ => EXIT_USER,
    }
}

fn replay_any(path: &Path, out: Option<PathBuf>) -> Result<RunManifest> {
    let recorded = RunManifest::read(path)?;
    let out = out.unwrap_or_else(|| PathBuf::from(&recorded.run_dir));
    match recorded.command.as_str() {
        PreprocessArgs::NAME => replay::<PreprocessArgs>(&recorded, &out),
        DissimArgs::NAME => replay::<DissimArgs>(&recorded, &out),
        ClusterArgs::NAME => replay::<ClusterArgs>(&recorded, &out),
        SweepArgs::NAME => replay::<SweepArgs>(&recorded, &out),
        ReallocateArgs::NAME => replay::<ReallocateArgs>(&recorded, &out),
        ExplainArgs::NAME => replay::<ExplainArgs>(&recorded, &out),
        FingerprintArgs::NAME => replay::<FingerprintArgs>(&recorded, &out),
        other => Err(Error::Config(format!("manifest names unknown command `{other}`"))),
    }
}

pub fn run(cli: Cli) -> Result<RunManifest> {
    let out = || cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_RUN_DIR));
    match cli.command {
        Command::Preprocess(a) => perform(a, &out()),
        Command::Dissim(a) => perform(a, &out()),
        Command::Cluster(a) => perform(a, &out()),
        Command::Sweep(a) => perform(a, &out()),
        Command::Reallocate(a) => perform(a, &out()),
        Command::Explain(a) => perform(a, &out()),
        Command::Fingerprint(a) => perform(a, &out()),
        Command::Replay { ref manifest } => {
            let m = replay_any(manifest, cli.out.clone())?;
            println!("replay: {} outputs of `{}` reproduced", m.outputs.len(), m.command);
            Ok(m)
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(m) => {
            println!("wrote {} files to {}", m.outputs.len(), m.run_dir);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
