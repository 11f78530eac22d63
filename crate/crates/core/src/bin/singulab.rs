use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use singulab::cli::{self, Command, RunOptions};

#[derive(Parser)]
#[command(name = "singulab", version, about = "Numerical checks of index, curvature and kinematic identities on polynomial germs")]
struct Args {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run one check (or all) on germ files or directories of .germ files.
    Run {
        command: CommandArg,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta_ratio: Option<f64>,
        #[arg(long)]
        eta_ratio: Option<f64>,
        /// Monte-Carlo sample count.
        #[arg(short = 'N', long)]
        samples: Option<usize>,
        /// Number of random linear forms for the le-greuel sweep.
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Level k for sigma and kinematic.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        /// Treat unstable Euler characteristics as failures instead of resampling.
        #[arg(long)]
        strict: bool,
        /// Write wall_ms = 0 so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    LeGreuel,
    Corollary,
    LemmaLink,
    GaussBonnet,
    Sigma,
    Kinematic,
    CurvLink,
    Density,
    All,
}

impl CommandArg {
    fn commands(self) -> Vec<Command> {
        match self {
            CommandArg::LeGreuel => vec![Command::LeGreuel],
            CommandArg::Corollary => vec![Command::Corollary],
            CommandArg::LemmaLink => vec![Command::LemmaLink],
            CommandArg::GaussBonnet => vec![Command::GaussBonnet],
            CommandArg::Sigma => vec![Command::Sigma],
            CommandArg::Kinematic => vec![Command::Kinematic],
            CommandArg::CurvLink => vec![Command::CurvLink],
            CommandArg::Density => vec![Command::Density],
            CommandArg::All => Command::ALL.to_vec(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("SINGULAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let Action::Run {
        command,
        paths,
        epsilon,
        delta_ratio,
        eta_ratio,
        samples,
        directions,
        seed,
        k,
        out,
        strict,
        no_timing,
    } = Args::parse().action;
    let opts = RunOptions {
        epsilon,
        delta_ratio,
        eta_ratio,
        samples,
        directions,
        seed,
        k,
        out,
        strict,
        timing: !no_timing,
        ..RunOptions::new(command.commands(), paths)
    };
    match cli::run(&opts) {
        Ok(outcomes) => {
            let mut failed = 0;
            for o in &outcomes {
                let r = &o.report;
                let status = if r.pass { "PASS" } else { "FAIL" };
                match &r.error {
                    Some(e) => println!("{status} {} {}: {e}", r.germ, r.theorem),
                    None => println!(
                        "{status} {} {}: lhs = {} ± {}, rhs = {} ± {} -> {}",
                        r.germ,
                        r.theorem,
                        r.lhs,
                        r.stderr_lhs,
                        r.rhs,
                        r.stderr_rhs,
                        o.report_file.display()
                    ),
                }
                if !r.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                println!("{failed} of {} checks failed", outcomes.len());
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("singulab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
