use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crit3_lab::config::{parse_masses, ExperimentConfig};
use crit3_lab::manifest::Run;
use crit3_lab::{commands, CliError};

#[derive(Parser)]
#[command(name = "lab", version, about = "Threshold dynamics lab for the three-wave Schrodinger system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of radial nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Outer radius of the grid.
    #[arg(long)]
    rmax: Option<f64>,
    /// Masses as `m1,m2,m3`.
    #[arg(long, value_parser = parse_masses)]
    masses: Option<[f64; 3]>,
    /// Seed for the random perturbation suites.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state functionals, Pohozaev and Gagliardo-Nirenberg checks.
    GroundState(Common),
    /// Unstable eigenpair of the linearized operator and its grid convergence.
    Spectrum(Common),
    /// Time evolution from a scaled (and optionally perturbed) ground state.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Special threshold solution for amplitude `a`, forward and backward.
    Special {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        amplitude: Option<f64>,
    },
    /// Virial identity defects over a lattice of mass triples.
    VirialScan(Common),
    /// Modulation decompositions: comparability suite, round trips and snapshot inputs.
    Modulate {
        #[command(flatten)]
        common: Common,
        /// Snapshot file to decompose (repeatable).
        #[arg(long)]
        input: Vec<PathBuf>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(n) = common.n {
        cfg.grid.n = n;
        cfg.virial.scan.n = n;
        cfg.modulate.grid.n = n;
    }
    if let Some(r) = common.rmax {
        cfg.grid.r_max = r;
        cfg.virial.scan.r_max = r;
        cfg.modulate.grid.r_max = r;
    }
    if let Some(m) = common.masses {
        cfg.masses = m;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

type Handler = fn(&mut Run) -> Result<(), CliError>;

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (name, common, handler, tweak): (&str, Common, Handler, Box<dyn FnOnce(&mut ExperimentConfig)>) = match cli.command {
        Command::GroundState(c) => ("ground-state", c, commands::ground_state_cmd, Box::new(|_| {})),
        Command::Spectrum(c) => ("spectrum", c, commands::spectrum_cmd, Box::new(|_| {})),
        Command::Evolve { common, scale, t_end } => (
            "evolve",
            common,
            commands::evolve_cmd,
            Box::new(move |cfg| {
                if let Some(s) = scale {
                    cfg.evolve.scale = s;
                }
                if let Some(t) = t_end {
                    cfg.evolve.run.t_end = t;
                }
            }),
        ),
        Command::Special { common, amplitude } => (
            "special",
            common,
            commands::special_cmd,
            Box::new(move |cfg| {
                if let Some(a) = amplitude {
                    cfg.special.amplitude = a;
                }
            }),
        ),
        Command::VirialScan(c) => ("virial-scan", c, commands::virial_scan_cmd, Box::new(|_| {})),
        Command::Modulate { common, input } => (
            "modulate",
            common,
            commands::modulate_cmd,
            Box::new(move |cfg| cfg.modulate.inputs.extend(input)),
        ),
    };
    let mut cfg = load(&common)?;
    tweak(&mut cfg);
    let mut run = Run::new(name, cfg)?;
    let outcome = handler(&mut run);
    let written = run.finish(&outcome);
    outcome.and(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
