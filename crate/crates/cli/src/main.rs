use std::path::PathBuf;
use std::process::ExitCode;

use bowen_cli::{apply_overrides, execute, load_config, CliError, Command, Overrides};
use clap::{Parser, Subcommand};

/// Hausdorff-dimension estimates for non-autonomous conformal systems.
#[derive(Parser)]
#[command(name = "bowen", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Structural hypotheses and the justification they support.
    Check(Args),
    /// Pressure curves over a grid of exponents.
    Pressure(Args),
    /// Bracket for the zero of the pressure.
    Dimension(Args),
    /// Sample points of the limit set.
    Sample(Args),
    /// Box-counting dimension of a sample.
    Boxdim(Args),
    /// Build the configured subsystem or re-blocking.
    Subsystem(Args),
    /// Everything above.
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Bundled system name or path to a JSON configuration.
    config: String,
    /// Output directory; falls back to BOWEN_OUTPUT_DIR, then `bowen-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// auto, enumerate-exact, matrix-exact or bdp-bracket.
    #[arg(long)]
    strategy: Option<String>,
    /// tail-slope or tail-min.
    #[arg(long)]
    proxy: Option<String>,
    #[arg(long)]
    budget: Option<u128>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_points: Option<usize>,
    /// exhaustive or random.
    #[arg(long)]
    sample: Option<String>,
    /// `lo,hi`.
    #[arg(long, value_parser = pair::<f64>)]
    t_bracket: Option<(f64, f64)>,
    /// Comma-separated exponents.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// `k_min,k_max` for dyadic scales.
    #[arg(long, value_parser = pair::<u32>)]
    scale_window: Option<(u32, u32)>,
    /// Justification the run must meet; exit code 4 when it does not.
    #[arg(long)]
    theorem: Option<String>,
}

fn pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(format!("cannot parse `{s}`")),
    }
}

fn run(command: Command, args: Args) -> Result<i32, CliError> {
    let mut loaded = load_config(&args.config)?;
    let overrides = Overrides {
        n_max: args.n_max,
        tol: args.tol,
        seed: args.seed,
        strategy: args.strategy,
        proxy: args.proxy,
        budget: args.budget,
        depth: args.depth,
        max_points: args.max_points,
        sample: args.sample,
        t_bracket: args.t_bracket,
        t_grid: args.t_grid,
        scale_window: args.scale_window,
        theorem: args.theorem,
    };
    apply_overrides(&mut loaded, &overrides)?;
    let out = args
        .out
        .or_else(|| std::env::var_os("BOWEN_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bowen-out"));
    let outcome = execute(command, &loaded, &out)?;
    for f in &outcome.files {
        println!("{}", out.join(f).display());
    }
    if let Some(note) = outcome.summary.get("advisory").and_then(|v| v.as_str()) {
        eprintln!("advisory: {note}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("BOWEN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (command, args) = match cli.command {
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Pressure(a) => (Command::Pressure, a),
        Cmd::Dimension(a) => (Command::Dimension, a),
        Cmd::Sample(a) => (Command::Sample, a),
        Cmd::Boxdim(a) => (Command::Boxdim, a),
        Cmd::Subsystem(a) => (Command::Subsystem, a),
        Cmd::Report(a) => (Command::Report, a),
    };
    match run(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("bowen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
