use std::path::PathBuf;
use std::process::ExitCode;

use bpg::{KernelKind, Regularizer};
use bpg_cli::run::EXIT_SOLVER_DIAGNOSTIC;
use bpg_cli::{generate_instance, run_check, run_from_spec, CheckSpec, GenerateParams, LambdaSpec, MeasurementKind, RunSpec};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bpg", version, about = "Bregman proximal gradient solver for sparse quadratic inverse problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegKind {
    L1,
    L0,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Quartic,
    Energy,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance with a planted sparse solution.
    Generate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        #[arg(long = "s-true")]
        s_true: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "rank-one")]
        kind: MeasurementKind,
        /// Output instance file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance from one or more starting points.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Override the regularizer stored in the instance.
        #[arg(long, value_enum)]
        reg: Option<RegKind>,
        #[arg(long, required_if_eq("reg", "l1"))]
        theta: Option<f64>,
        #[arg(long, required_if_eq("reg", "l0"))]
        s: Option<usize>,
        #[arg(long, value_enum, default_value = "quartic")]
        kernel: KernelArg,
        /// Smooth adaptability constant; required with the energy kernel.
        #[arg(long = "smad-l")]
        smad_l: Option<f64>,
        /// Step size, or `auto` for 0.99/L.
        #[arg(long, default_value = "auto")]
        lambda: LambdaSpec,
        #[arg(long = "max-iters", default_value_t = bpg::solver::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long = "tol-step", default_value_t = bpg::solver::DEFAULT_TOL_STEP)]
        tol_step: f64,
        /// Also stop once the subgradient witness norm falls below this value.
        #[arg(long = "tol-residual")]
        tol_residual: Option<f64>,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write 0 in the timing column so traces are reproducible byte for byte.
        #[arg(long = "no-timing")]
        no_timing: bool,
    },
    /// Verify the smad certificate of an instance on sampled pairs.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constant to test instead of the analytic one.
        #[arg(long = "smad-l")]
        smad_l: Option<f64>,
    },
}

fn execute(cli: Cli) -> bpg_cli::Result<u8> {
    match cli.command {
        Command::Generate { d, m, s_true, noise, seed, kind, out } => {
            let file = generate_instance(&GenerateParams { d, m, s_true, noise, seed, kind })?;
            file.write(&out)?;
            Ok(0)
        }
        Command::Solve {
            instance,
            reg,
            theta,
            s,
            kernel,
            smad_l,
            lambda,
            max_iters,
            tol_step,
            tol_residual,
            starts,
            seed,
            out,
            no_timing,
        } => {
            let mut spec = RunSpec::new(instance, out);
            spec.regularizer = match reg {
                Some(RegKind::L1) => Some(Regularizer::L1 { theta: theta.expect("enforced by clap") }),
                Some(RegKind::L0) => Some(Regularizer::L0Ball { s: s.expect("enforced by clap") }),
                None => None,
            };
            spec.kernel = match kernel {
                KernelArg::Quartic => KernelKind::QuarticPlusQuadratic,
                KernelArg::Energy => KernelKind::Energy,
            };
            spec.smad_override = smad_l;
            spec.lambda = lambda;
            spec.max_iters = max_iters;
            spec.tol_step = tol_step;
            spec.tol_residual = tol_residual;
            spec.starts = starts;
            spec.seed = seed;
            spec.record_timing = !no_timing;
            let outcome = run_from_spec(&spec)?;
            for start in &outcome.starts {
                match &start.result {
                    Ok(r) => println!(
                        "start {:3}: {} after {} iterations, psi = {:e}",
                        start.index,
                        r.termination.as_str(),
                        r.iterations(),
                        r.final_psi()
                    ),
                    Err(e) => println!("start {:3}: error: {e}", start.index),
                }
            }
            if let Some(best) = outcome.best {
                println!("best start: {best}");
            }
            Ok(outcome.exit_code as u8)
        }
        Command::Check { instance, samples, radius, seed, smad_l } => {
            let spec = CheckSpec { instance, samples, radius, seed, smad_override: smad_l };
            let outcome = run_check(&spec)?;
            print!("{}", outcome.render());
            Ok(if outcome.report.passed { 0 } else { EXIT_SOLVER_DIAGNOSTIC as u8 })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
