//! `glg`: command-line front end for the glg-core experiments.
//!
//! Every subcommand writes a JSON report (and, with `--csv`, field dumps) into
//! the output directory and prints one PASS/FAIL line. Exit status is 0 on
//! pass, 2 when the experiment fails and 1 on usage or configuration errors.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "glg", version, about = "Numerical experiments on gauged Landau-Ginzburg models")]
struct Cli {
    /// Worker threads for parallel experiments (all cores when unset).
    #[arg(long, global = true, env = "GLG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
pub struct OutArgs {
    /// Experiment parameters as JSON; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for reports and CSV files.
    #[arg(long, default_value = "glg-out")]
    pub out: PathBuf,
    /// Also write CSV field dumps.
    #[arg(long)]
    pub csv: bool,
    /// Print the full report JSON to stdout.
    #[arg(long)]
    pub print: bool,
}

#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    /// Preset (vortex, xy, fundamental, z2) or path to a model JSON file.
    #[arg(long, default_value = "fundamental")]
    pub model: String,
    /// Coupling of the fundamental preset.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Critical point as JSON `[[re, im], ...]`; searched for when absent.
    #[arg(long)]
    pub point: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pointwise identities at random points.
    CheckIdentities(commands::IdentitiesCmd),
    /// Critical points, Morse-Bott check and extended-Hessian spectrum.
    Stability(commands::StabilityCmd),
    /// Solve the gauged Witten equations on a strip with stable-manifold boundary data.
    SolveWitten(commands::SolveCmd),
    /// Finite-energy solutions on a disc are trivial.
    Triviality(commands::TrivialityCmd),
    /// Exponential decay on a half-strip against the spectral gap.
    Decay(commands::DecayCmd),
    /// Bochner identities under grid refinement.
    Bochner(commands::IdentityCheckCmd),
    /// Holomorphy of the covariant s-derivative under grid refinement.
    Holomorphy(commands::IdentityCheckCmd),
    /// Action-functional gradient against finite differences; gauge invariance.
    ActionCheck(commands::ActionCmd),
    /// Downward gradient flow of L; conservation of H.
    Flowline(commands::FlowCmd),
    /// Radial vortex profile, energy and decay.
    Vortex(commands::VortexCmd),
    /// Kazdan-Warner equation on a periodic torus grid.
    KwSolve(commands::KwCmd),
    /// Constant critical spinors on the flat torus.
    TorusCrit(commands::TorusCritCmd),
    /// Number of critical orbits on a (punctured) surface.
    CountOrbits(commands::CountCmd),
    /// Zeros of a meromorphic form on a punctured sphere.
    SphereZeros(commands::SphereCmd),
    /// Goodness of a torus H-surface.
    Goodness(commands::GoodnessCmd),
    /// Acceptance battery with a JSON scorecard.
    Suite(commands::SuiteCmd),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid thread count {n}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.cmd {
        Cmd::CheckIdentities(c) => c.run(),
        Cmd::Stability(c) => c.run(),
        Cmd::SolveWitten(c) => c.run(),
        Cmd::Triviality(c) => c.run(),
        Cmd::Decay(c) => c.run(),
        Cmd::Bochner(c) => c.run(false),
        Cmd::Holomorphy(c) => c.run(true),
        Cmd::ActionCheck(c) => c.run(),
        Cmd::Flowline(c) => c.run(),
        Cmd::Vortex(c) => c.run(),
        Cmd::KwSolve(c) => c.run(),
        Cmd::TorusCrit(c) => c.run(),
        Cmd::CountOrbits(c) => c.run(),
        Cmd::SphereZeros(c) => c.run(),
        Cmd::Goodness(c) => c.run(),
        Cmd::Suite(c) => c.run(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(output::exit_code(&e))
        }
    }
}
