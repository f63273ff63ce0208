//! `surfspec`: translational levels, Franck–Condon factors, level rates and
//! weak-field excitation spectra of an atom near a dielectric surface.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or
//! arguments, 3 numerical failure, 4 corrupt cache entry (the entry is
//! removed, so a rerun recomputes it).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surfspec::potential::StateLabel;
use surfspec::Error;

use crate::config::RunConfig;

/// Environment variable naming the cache root when neither `--cache-dir`
/// nor the config sets one.
pub const CACHE_ENV: &str = "SURFSPEC_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "surfspec", version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; every section is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Eigenstate cache root [default: config cache_dir, $SURFSPEC_CACHE_DIR, then ./cache].
    #[arg(long, global = true, value_name = "PATH")]
    cache_dir: Option<PathBuf>,
    /// Worker threads for level solves, overlap fills and sweeps.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Primary CSV output [default: output.csv from the config, else stdout].
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Internal state whose basis `--nu` overrides (and that solve-levels lists).
    #[arg(long, global = true, value_enum)]
    state: Option<StateArg>,
    /// Inclusive node-count range such as `280..295`, or a single level.
    #[arg(long, global = true, value_name = "LO..HI", value_parser = parse_range)]
    nu: Option<[usize; 2]>,
    /// Angular momentum projection for the centrifugal radius.
    #[arg(long, global = true, value_name = "L")]
    lz: Option<i64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum StateArg {
    Ground,
    Excited,
}

impl From<StateArg> for StateLabel {
    fn from(s: StateArg) -> Self {
        match s {
            StateArg::Ground => StateLabel::Ground,
            StateArg::Excited => StateLabel::Excited,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wall position, well depth, level capacity, centrifugal radius and
    /// reflection coefficient: `state,x_wall_nm,x_min_nm,V_min_Hz,capacity,r_c_nm,R`.
    Validity,
    /// Bound levels of one state: `nu,energy_MHz,x_outer_nm`.
    SolveLevels,
    /// Overlaps over the excited × ground bases:
    /// `nu_a,nu_b,Re_F,Im_F,absF2` (or `E_b_MHz` for a thermal mixture).
    FcMatrix,
    /// Excited-level decay rates: `nu_a,gamma_a_MHz,gamma_channel_MHz`.
    LevelRates,
    /// Scattering-rate sweep `delta_MHz,Gamma_Hz` plus a JSON sidecar.
    Spectrum,
    /// Density-matrix integration against the adiabatic populations:
    /// `delta_MHz,level,rho_ode,rho_adiabatic,rel_error`.
    DynamicsCheck,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad level `{t}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (lo, hi) = (parse(a)?, parse(b)?);
            if hi < lo {
                return Err(format!("empty range {s}"));
            }
            Ok([lo, hi])
        }
        None => {
            let v = parse(s)?;
            Ok([v, v])
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Parameter(_)
        | Error::Domain(_)
        | Error::Range { .. }
        | Error::Consistency(_)
        | Error::Format(_)
        | Error::Json(_) => 2,
        Error::Numerical(_) | Error::DegeneratePotential(_) => 3,
        Error::CacheCorrupt(_) => 4,
    }
}

fn build_config(common: &Common) -> surfspec::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.state {
        cfg.state = s.into();
    }
    if let Some(range) = common.nu {
        cfg.basis.set(cfg.state, range);
    }
    if let Some(l) = common.lz {
        cfg.validity.l_z = l;
    }
    if let Some(out) = &common.out {
        cfg.output.csv = Some(out.clone());
        cfg.output.sidecar = None;
    }
    if let Some(dir) = &common.cache_dir {
        cfg.cache_dir = Some(dir.clone());
    } else if cfg.cache_dir.is_none() {
        cfg.cache_dir = Some(std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| "cache".into()));
    }
    cfg.resolve()?;
    Ok(cfg)
}

fn run(cli: Cli) -> surfspec::Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::Parameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(format!("cannot size thread pool: {e}")))?;
    }
    let cfg = build_config(&cli.common)?;
    match cli.command {
        Command::Validity => commands::validity(&cfg),
        Command::SolveLevels => commands::solve_levels(&cfg),
        Command::FcMatrix => commands::fc_matrix(&cfg),
        Command::LevelRates => commands::level_rates(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::DynamicsCheck => commands::dynamics_check(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("280..295"), Ok([280, 295]));
        assert_eq!(parse_range("280..=295"), Ok([280, 295]));
        assert_eq!(parse_range("7"), Ok([7, 7]));
        assert!(parse_range("9..3").is_err());
        assert!(parse_range("a..3").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Parameter(String::new())), 2);
        assert_eq!(exit_code(&Error::Numerical(String::new())), 3);
        assert_eq!(exit_code(&Error::CacheCorrupt(String::new())), 4);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
