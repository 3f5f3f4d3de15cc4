//! Command-line surface: build polynomial networks, run them, verify the
//! runtime error bound, inspect the monomial readouts and the clock, and
//! export unfolded feed-forward equivalents.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use polyrnn::poly::{self, PolynomialSpec};
use polyrnn::powers::{self, epsilon};
use polyrnn::{clock_rnn, decay_curve, RnnWeights};

#[derive(Parser)]
#[command(
    name = "polyrnn",
    version,
    about = "Polynomial approximation by fixed-weight ReLU recurrences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the network for a polynomial and serialize it.
    Build(BuildArgs),
    /// Run a serialized network on one input and print the outputs over time.
    Run(RunArgs),
    /// Rebuild from coefficients, sweep the error curve, and assert the bound.
    Verify(VerifyArgs),
    /// Print the monomial readout at a dyadic time and the error table.
    Powers(PowersArgs),
    /// Export the weight-shared feed-forward unfolding of a network.
    Unfold(UnfoldArgs),
    /// Print the clock pulse schedule.
    Clock(ClockArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Coefficients a0,a1,... (constant term first).
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    coeffs: Vec<f64>,
    /// Domain bound D; the network is valid on [-D, D].
    #[arg(long, default_value_t = 1.0)]
    domain: f64,
    /// Output path for the serialized network.
    #[arg(long, default_value = "net.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    net: PathBuf,
    /// Input value.
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
    /// Number of time steps.
    #[arg(long)]
    steps: usize,
    /// Also print the hidden state at every step.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    coeffs: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    domain: f64,
    #[arg(long)]
    steps: usize,
    /// Uniform grid resolution (the grid is augmented with dyadic points).
    #[arg(long, default_value_t = 2000)]
    grid: usize,
    /// Optional CSV output for the error curve.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PowersArgs {
    /// Number of doubling levels L; the readout carries x, x^2, ..., x^(2^L).
    #[arg(long)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    domain: f64,
    /// Readout index: the vector is read at t = 2^k - 2.
    #[arg(long)]
    k: usize,
    /// Input value.
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
}

#[derive(Args)]
struct UnfoldArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value = "ffn.json")]
    out: PathBuf,
    /// Re-evaluate both forms on a grid and require bit-exact agreement.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ClockArgs {
    #[arg(long)]
    steps: usize,
}

/// On-disk network format: the weights plus the construction metadata
/// needed to interpret and re-verify them.
#[derive(Serialize, Deserialize)]
struct NetFile {
    weights: RnnWeights,
    metadata: NetMetadata,
}

#[derive(Serialize, Deserialize)]
struct NetMetadata {
    coeffs: Vec<f64>,
    domain: f64,
    clip_bound: f64,
    c1: f64,
    c2: f64,
    t_min: usize,
    inner_m: usize,
    smoothed: bool,
}

fn load_net(path: &Path) -> Result<NetFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Build(args) => build(args),
        Command::Run(args) => run_net(args),
        Command::Verify(args) => verify(args),
        Command::Powers(args) => powers_cmd(args),
        Command::Unfold(args) => unfold(args),
        Command::Clock(args) => clock(args),
    }
}

fn build(args: BuildArgs) -> Result<bool> {
    let spec = PolynomialSpec::new(args.coeffs, args.domain)?;
    let (net, model) = poly::build_poly_rnn(&spec)?;
    let file = NetFile {
        metadata: NetMetadata {
            coeffs: spec.coeffs.clone(),
            domain: spec.domain,
            clip_bound: net.clip_bound,
            c1: model.c1,
            c2: model.c2,
            t_min: model.t_min,
            inner_m: net.inner_m,
            smoothed: net.smoothed,
        },
        weights: net.weights,
    };
    std::fs::write(&args.out, serde_json::to_string_pretty(&file)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("m = {}", file.weights.hidden_dim());
    println!("B = {}", file.metadata.clip_bound);
    println!("C1 = {}", file.metadata.c1);
    println!("C2 = {}", file.metadata.c2);
    println!("t_min = {}", file.metadata.t_min);
    println!("wrote {}", args.out.display());
    Ok(true)
}

fn run_net(args: RunArgs) -> Result<bool> {
    let file = load_net(&args.net)?;
    let trace = file.weights.run_delta(&[args.x], args.steps)?;
    for t in 0..=args.steps {
        let out: Vec<String> = trace.outputs[t].iter().map(f64::to_string).collect();
        if args.trace {
            let h: Vec<String> = trace.states[t].iter().map(f64::to_string).collect();
            println!("t={t} out=[{}] h=[{}]", out.join(","), h.join(","));
        } else {
            println!("t={t} out=[{}]", out.join(","));
        }
    }
    Ok(true)
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let spec = PolynomialSpec::new(args.coeffs, args.domain)?;
    let (net, model) = poly::build_poly_rnn(&spec)?;
    let curve = decay_curve(&net.weights, &spec, args.steps, args.grid)?;
    if let Some(path) = &args.csv {
        std::fs::write(path, curve.to_csv())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    let mut failures = 0usize;
    for row in &curve.rows {
        match row.bound {
            Some(bound) if row.sup_error > bound => {
                failures += 1;
                println!(
                    "FAIL t={} sup_error={} > bound={}",
                    row.t, row.sup_error, bound
                );
            }
            _ => {}
        }
        if model.exact && row.sup_error != 0.0 {
            failures += 1;
            println!(
                "FAIL t={} exact polynomial but sup_error={}",
                row.t, row.sup_error
            );
        }
    }
    let last = curve.rows.last().expect("curve is nonempty");
    println!(
        "checked t=0..={}: sup_error(t={}) = {}, bound valid from t_min = {}",
        args.steps, last.t, last.sup_error, model.t_min
    );
    if failures == 0 {
        println!("PASS: error within bound at every valid t");
        Ok(true)
    } else {
        println!("{failures} bound violations");
        Ok(false)
    }
}

fn powers_cmd(args: PowersArgs) -> Result<bool> {
    let pw = powers::powers_rnn(args.domain, args.levels)?;
    if args.k < pw.min_k {
        bail!(
            "readout index {} is below the first valid index {}",
            args.k,
            pw.min_k
        );
    }
    if args.x.abs() > args.domain {
        bail!(
            "input {} is outside [-{}, {}]",
            args.x,
            args.domain,
            args.domain
        );
    }
    let t = (1usize << args.k) - 2;
    let out = pw.weights()?.output_at(&[args.x], t)?;
    println!("m = {}", pw.hidden_dim());
    println!("readout at t = 2^{} - 2 = {t} for x = {}:", args.k, args.x);
    for (i, v) in out.iter().enumerate() {
        println!("  x^{:<2} ~ {v}", i + 1);
    }
    println!("error table (level l bounds coordinates 2^(l-1)+1 ..= 2^l):");
    for level in 1..=args.levels {
        let mut cells = Vec::new();
        for k in pw.min_k..=args.k {
            cells.push(format!("k={k}: {:.3e}", epsilon(args.domain, level, k)?));
        }
        println!("  l={level}: {}", cells.join("  "));
    }
    Ok(true)
}

fn unfold(args: UnfoldArgs) -> Result<bool> {
    let file = load_net(&args.net)?;
    let ffn = file.weights.unfold(args.steps)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&ffn)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} ({} layers, {} shared)",
        args.out.display(),
        ffn.layer_count(),
        ffn.shared_count
    );
    if args.check {
        if file.weights.input_dim() != 1 {
            bail!("--check expects a scalar-input network");
        }
        let d = file.metadata.domain;
        let mut mismatches = 0usize;
        for i in 0..=100 {
            let x = -d + 2.0 * d * i as f64 / 100.0;
            let a = ffn.eval(&[x])?;
            let b = file.weights.run_delta(&[x], args.steps)?.outputs[args.steps].clone();
            if a != b {
                mismatches += 1;
                println!("FAIL x={x}: unfolded {a:?} != recurrent {b:?}");
            }
        }
        if mismatches > 0 {
            println!("{mismatches} grid points differ");
            return Ok(false);
        }
        println!("PASS: unfolded network matches the recurrence bit-exactly on 101 grid points");
    }
    Ok(true)
}

fn clock(args: ClockArgs) -> Result<bool> {
    let clock = clock_rnn();
    let trace = clock.run_delta(&[], args.steps)?;
    let pulses: Vec<usize> = (0..=args.steps)
        .filter(|&t| trace.states[t][0] == 1.0)
        .collect();
    println!("pulses within t <= {}: {:?}", args.steps, pulses);
    let max = trace
        .states
        .iter()
        .flat_map(|h| h.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    println!("max |h| = {max}");
    Ok(true)
}
