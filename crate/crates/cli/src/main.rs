// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! `qpair`: compile, simulate, verify and estimate Q-Pair schedules.
//!
//! Every command writes tab-separated text with a one-line header to stdout
//! or `--out`. Exit status is 0 on success, 1 when a check or schedule
//! validation fails, 2 on bad input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use qpair_core::blockade::Method;
use qpair_core::checks::{self, Check};
use qpair_core::compiler::{
    compile, estimate_resources, qft3_reference_schedule, simulate_schedule, validate_schedule,
    LayoutPolicy, LogicalCircuit, Schedule,
};
use qpair_core::noise::{haar_average_fidelity, log_space, NoiseParams, Protocol};
use qpair_core::oracle::{bit_reverse, qft_matrix};
use qpair_core::C64;

#[derive(Parser, Debug)]
#[command(
    name = "qpair",
    version,
    about = "Q-Pair pulse schedules for globally driven neutral-atom arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a circuit into a validated schedule trace.
    Compile {
        #[command(flatten)]
        io: CircuitIo,
    },
    /// Final-state amplitudes of a circuit, or Haar-averaged fidelities with `--noise`.
    Simulate(SimulateArgs),
    /// Run the pulse, wire-gate, noise and preset self-checks.
    Verify(VerifyArgs),
    /// Atom count, duration and fidelity estimate of a compiled circuit.
    Estimate {
        #[command(flatten)]
        io: CircuitIo,
        /// `key=value` noise and timing parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Simulate the reference three-qubit QFT schedule against the DFT.
    #[command(name = "qft3-demo")]
    Qft3Demo {
        /// Also write the schedule trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CircuitIo {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Required without `--noise`.
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Haar-averaged fidelity sweep instead of noiseless amplitudes.
    #[arg(long)]
    noise: bool,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// `lo:hi:steps`, log-spaced.
    #[arg(long, value_parser = parse_sweep)]
    p_sweep: Option<Sweep>,
    #[arg(long, default_value = "qpair")]
    protocol: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2026)]
    seed: u64,
    /// Haar-random states per translation kind.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance; for exercising the failure path.
    #[arg(long, default_value_t = 1.0, hide = true)]
    tolerance_scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Sweep {
    lo: f64,
    hi: f64,
    steps: usize,
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err("expected lo:hi:steps".into());
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    let steps: usize = steps
        .parse()
        .map_err(|_| format!("bad step count {steps:?}"))?;
    if !(lo > 0.0 && hi >= lo && hi < 1.0 && steps >= 1) {
        return Err("need 0 < lo <= hi < 1 and steps >= 1".into());
    }
    Ok(Sweep { lo, hi, steps })
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    Failed,
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_circuit(path: &Path) -> anyhow::Result<LogicalCircuit> {
    LogicalCircuit::load(path).with_context(|| format!("reading circuit {}", path.display()))
}

fn load_params(path: Option<&Path>) -> anyhow::Result<NoiseParams> {
    match path {
        Some(p) => NoiseParams::load(p).with_context(|| format!("reading params {}", p.display())),
        None => Ok(NoiseParams::default()),
    }
}

/// Compiles and validates; diagnostics go to stderr.
fn compiled(circuit: &LogicalCircuit) -> anyhow::Result<(Schedule, bool)> {
    let schedule = compile(circuit, &LayoutPolicy::Identity)?;
    let diagnostics = validate_schedule(&schedule);
    for d in &diagnostics {
        eprintln!("validation: {d}");
    }
    Ok((schedule, diagnostics.is_empty()))
}

fn cmd_compile(io: &CircuitIo) -> anyhow::Result<Outcome> {
    let (schedule, valid) = compiled(&load_circuit(&io.circuit)?)?;
    emit(io.out.as_deref(), &schedule.to_trace())?;
    Ok(if valid { Outcome::Ok } else { Outcome::Failed })
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<Outcome> {
    if args.noise {
        let protocol: Protocol = args.protocol.parse()?;
        let ps = match args.p_sweep {
            Some(s) => log_space(s.lo, s.hi, s.steps),
            None => vec![load_params(args.params.as_deref())?.p],
        };
        let mut text = String::from("p\tmean_F\tstderr\n");
        for p in ps {
            let (mean, se) = haar_average_fidelity(protocol, p, args.samples as usize, args.seed)?;
            writeln!(text, "{p:.6e}\t{mean:.12}\t{se:.3e}")?;
        }
        emit(args.out.as_deref(), &text)?;
        return Ok(Outcome::Ok);
    }
    let Some(path) = &args.circuit else {
        bail!("--circuit is required without --noise");
    };
    let circuit = load_circuit(path)?;
    let (schedule, valid) = compiled(&circuit)?;
    if !valid {
        return Ok(Outcome::Failed);
    }
    let n = circuit.qubit_count();
    let mut input = DVector::zeros(1 << n);
    input[0] = C64::new(1.0, 0.0);
    let (out, leakage) = simulate_schedule(&schedule, &input, Method::ExactExponential)?;
    let mut text = String::from("index\tbits\tre\tim\tprob\n");
    for (k, a) in out.iter().enumerate() {
        // qubit 0 is the rightmost bit
        let bits: String = (0..n)
            .rev()
            .map(|q| if k >> q & 1 == 1 { '1' } else { '0' })
            .collect();
        writeln!(
            text,
            "{k}\t{bits}\t{:.12}\t{:.12}\t{:.12}",
            a.re,
            a.im,
            a.norm_sqr()
        )?;
    }
    emit(args.out.as_deref(), &text)?;
    if leakage > 1e-10 {
        eprintln!("population {leakage:.3e} left outside the data qubits");
        return Ok(Outcome::Failed);
    }
    Ok(Outcome::Ok)
}

fn verify_checks(seed: u64, states: usize) -> anyhow::Result<Vec<Check>> {
    let mut out = checks::composite_identities();
    out.extend(checks::cz_mediator()?);
    out.push(checks::teleportation(states, seed)?);
    out.push(checks::collective_enhancement()?);
    out.push(checks::cnot_truth_table()?);
    for q in 1..=3 {
        out.push(checks::cphase(q)?);
    }
    out.push(checks::qft3()?);
    out.push(checks::noise_closed_form(100, seed)?);
    out.extend(checks::resource_presets());
    Ok(out)
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let results: Vec<Check> = verify_checks(args.seed, args.samples as usize)?
        .into_iter()
        .map(|c| {
            if args.tolerance_scale == 1.0 {
                c
            } else {
                c.rescaled(args.tolerance_scale)
            }
        })
        .collect();
    let mut text = String::from("group\tcheck\tmax_error\ttolerance\tstatus\n");
    for c in &results {
        let status = if c.passed { "pass" } else { "FAIL" };
        writeln!(
            text,
            "{}\t{}\t{:.3e}\t{:.3e}\t{status}",
            c.criterion, c.name, c.value, c.tolerance
        )?;
    }
    emit(args.out.as_deref(), &text)?;
    Ok(if results.iter().all(|c| c.passed) {
        Outcome::Ok
    } else {
        Outcome::Failed
    })
}

fn cmd_estimate(io: &CircuitIo, params: Option<&Path>) -> anyhow::Result<Outcome> {
    let params = load_params(params)?;
    let (schedule, valid) = compiled(&load_circuit(&io.circuit)?)?;
    let r = estimate_resources(&schedule, &params)?;
    let mut text = String::from("quantity\tvalue\n");
    writeln!(text, "atoms\t{}", r.atom_count)?;
    writeln!(text, "temporal_modes\t{}", r.temporal_modes)?;
    writeln!(text, "translations\t{}", r.translations)?;
    writeln!(text, "steps\t{}", r.steps)?;
    writeln!(text, "pulses\t{}", r.pulses)?;
    writeln!(text, "move_steps\t{}", r.move_steps)?;
    writeln!(text, "tau_s\t{:.6e}", r.total_time)?;
    writeln!(text, "p\t{}", short(r.p))?;
    writeln!(text, "p_exact\t{:.6e}", r.p)?;
    writeln!(text, "P_d\t{:.6e}", r.bit_flip_probability)?;
    writeln!(text, "F_T\t{:.5}", r.translation_fidelity)?;
    writeln!(text, "fidelity_product\t{:.6}", r.end_to_end_fidelity)?;
    emit(io.out.as_deref(), &text)?;
    Ok(if valid { Outcome::Ok } else { Outcome::Failed })
}

/// One significant digit, plain decimal.
fn short(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let digits = (-x.abs().log10().floor()).max(0.0) as usize;
    format!("{x:.digits$}")
}

fn cmd_qft3(trace: Option<&Path>, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let schedule = qft3_reference_schedule();
    if let Some(path) = trace {
        std::fs::write(path, schedule.to_trace())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let q = qft_matrix(3)?;
    let mut text = String::from("input\tinfidelity\tleakage\n");
    let mut ok = validate_schedule(&schedule).is_empty();
    for x in 0..8 {
        let mut input = DVector::zeros(8);
        input[x] = C64::new(1.0, 0.0);
        let (v, leak) = simulate_schedule(&schedule, &input, Method::ExactExponential)?;
        let f: C64 = (0..8)
            .map(|j| q[(bit_reverse(j, 3), x)].conj() * v[j])
            .sum();
        let infidelity = (1.0 - f.norm_sqr()).max(0.0);
        ok &= infidelity < 1e-8 && leak < 1e-10;
        writeln!(text, "{x:03b}\t{infidelity:.3e}\t{leak:.3e}")?;
    }
    emit(out, &text)?;
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Compile { io } => cmd_compile(io),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Estimate { io, params } => cmd_estimate(io, params.as_deref()),
        Command::Qft3Demo { trace, out } => cmd_qft3(trace.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
