use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bqe_grover::circuit::Circuit;
use bqe_grover::experiment::{
    capacity_report, compile_report, compile_system, compress_report, load_system, success_heatmap, sweep_split,
    write_corpus, CompileConfig, CostChoice, Format, GenConfig, HeatmapConfig, PlanChoice, Report, SolveConfig,
    SweepConfig,
};
use bqe_grover::grover::DiffusionMode;
use bqe_grover::oracle::OracleStyle;
use bqe_grover::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "bqe-grover", version, about = "Grover search for boolean quadratic equation systems")]
struct Cli {
    /// Master seed; all randomness is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (a directory for `gen`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StyleArg {
    Recursive,
    Stack,
    Product,
}

impl From<StyleArg> for OracleStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Recursive => OracleStyle::Recursive,
            StyleArg::Stack => OracleStyle::Stack,
            StyleArg::Product => OracleStyle::Product,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CostArg {
    Default,
    Unit,
    Decomposed,
}

impl From<CostArg> for CostChoice {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Default => CostChoice::Default,
            CostArg::Unit => CostChoice::Unit,
            CostArg::Decomposed => CostChoice::Decomposed,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Single,
    Cyclic,
    Random,
}

impl From<StrategyArg> for PlanChoice {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Single => PlanChoice::Single,
            StrategyArg::Cyclic => PlanChoice::Cyclic,
            StrategyArg::Random => PlanChoice::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DiffusionArg {
    Exact,
    Circuit,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equation capacity F(l, m) of recursive oracles.
    Capacity {
        #[arg(long, default_value_t = 10)]
        lmax: usize,
        #[arg(long, default_value_t = 10)]
        mmax: usize,
    },
    /// Random systems with a bounded solution count, one JSON file each.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        min_solutions: u64,
        #[arg(long, default_value_t = 1)]
        max_solutions: u64,
        #[arg(long, default_value_t = 15)]
        count: usize,
    },
    /// Builds oracles and reports their depth before and after compression.
    Compile {
        /// System JSON files.
        #[arg(long = "system", required = true, num_args = 1..)]
        systems: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        level: usize,
        /// Ancilla count; the smallest that fits by default.
        #[arg(long)]
        ancillas: Option<usize>,
        #[arg(long, value_enum, default_value_t = StyleArg::Recursive)]
        style: StyleArg,
        #[arg(long)]
        compress: bool,
        #[arg(long, value_enum, default_value_t = CostArg::Default)]
        cost: CostArg,
        /// Writes the (compressed) circuit of a single system here.
        #[arg(long)]
        circuit_out: Option<PathBuf>,
    },
    /// Compresses a circuit file; the circuit goes to --out.
    Compress {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum, default_value_t = CostArg::Default)]
        cost: CostArg,
        /// Where to write the depth report; stderr when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Runs the randomized search on one system and writes a run record.
    Solve {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long)]
        ancillas: Option<usize>,
        #[arg(long, value_enum, default_value_t = StyleArg::Recursive)]
        style: StyleArg,
        #[arg(long, value_enum, default_value_t = StrategyArg::Single)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1.0)]
        split_factor: f64,
        /// Number of cyclic groups (overrides --split-factor).
        #[arg(long)]
        groups: Option<usize>,
        /// Target success probability 1 - epsilon.
        #[arg(long, default_value_t = 0.999)]
        nominal: f64,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, default_value_t = 1024)]
        j_max: u64,
        #[arg(long, default_value_t = 1000)]
        k_max: u64,
        /// Plan with this solution count instead of counting by brute force.
        #[arg(long)]
        assume_m: Option<u64>,
        #[arg(long, value_enum, default_value_t = DiffusionArg::Exact)]
        diffusion: DiffusionArg,
        #[arg(long, value_enum, default_value_t = CostArg::Default)]
        cost: CostArg,
        /// Records wall time (the output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Relative total depth against split factor.
    SweepSplit {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1.0,1.25,1.5,1.75,2.0")]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 15)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long, default_value_t = 0.999)]
        nominal: f64,
        #[arg(long, default_value_t = 1024)]
        j_max: u64,
        #[arg(long, default_value_t = 1000)]
        k_max: u64,
        #[arg(long, default_value_t = 3)]
        draws: usize,
        #[arg(long, value_enum, default_value_t = CostArg::Default)]
        cost: CostArg,
    },
    /// Observed success rate per (n, M, shots).
    SuccessHeatmap {
        #[arg(long, value_delimiter = ',', default_value = "6,7,8,9,10")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,64,256")]
        shots: Vec<u64>,
        #[arg(long, default_value_t = 0.8)]
        nominal: f64,
        #[arg(long, default_value_t = 15)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Random)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1.5)]
        split_factor: f64,
        #[arg(long, default_value_t = 1)]
        min_solutions: u64,
        #[arg(long, default_value_t = 1)]
        max_solutions: u64,
        #[arg(long, default_value_t = 1000)]
        k_max: u64,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_report(out: Option<&Path>, format: Format, report: &Report) -> Result<()> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit(out, &report.render(format)?)
}

fn run(cli: Cli) -> Result<()> {
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let out = cli.out.as_deref();
    match cli.command {
        Command::Capacity { lmax, mmax } => emit_report(out, format, &capacity_report(lmax, mmax)?),
        Command::Gen { n, min_solutions, max_solutions, count } => {
            let dir = out.ok_or_else(|| Error::Input("gen needs --out DIR for the system files".into()))?;
            let cfg = GenConfig { n, min_solutions, max_solutions, count, seed: cli.seed };
            for path in write_corpus(&cfg, dir)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Compile { systems, level, ancillas, style, compress, cost, circuit_out } => {
            let cfg = CompileConfig { level, ancillas, style: style.into(), compress, cost: cost.into() };
            let loaded = systems
                .iter()
                .map(|p| Ok((p.display().to_string(), load_system(p)?)))
                .collect::<Result<Vec<_>>>()?;
            if let Some(path) = circuit_out {
                if loaded.len() != 1 {
                    return Err(Error::Input("--circuit-out needs exactly one --system".into()));
                }
                std::fs::write(path, compile_system(&loaded[0].1, &cfg)?.output().to_text())?;
            }
            emit_report(out, format, &compile_report(&loaded, &cfg)?)
        }
        Command::Compress { circuit, cost, report } => {
            let parsed = Circuit::from_text(&std::fs::read_to_string(&circuit)?)?;
            let (compressed, rep) = compress_report(&circuit.display().to_string(), &parsed, cost.into())?;
            emit(out, &compressed.to_text())?;
            let text = rep.render(format)?;
            match report {
                Some(path) => std::fs::write(path, text)?,
                None => eprint!("{text}"),
            }
            Ok(())
        }
        Command::Solve {
            system,
            level,
            ancillas,
            style,
            strategy,
            split_factor,
            groups,
            nominal,
            shots,
            iterations,
            j_max,
            k_max,
            assume_m,
            diffusion,
            cost,
            timing,
        } => {
            let cfg = SolveConfig {
                level,
                ancillas,
                style: style.into(),
                strategy: strategy.into(),
                split_factor,
                groups,
                nominal,
                shots,
                iterations,
                j_max,
                k_max,
                assume_m,
                diffusion: match diffusion {
                    DiffusionArg::Exact => DiffusionMode::Exact,
                    DiffusionArg::Circuit => DiffusionMode::Circuit,
                },
                cost: cost.into(),
                seed: cli.seed,
                timing,
            };
            let record = bqe_grover::experiment::solve(&load_system(&system)?, &cfg)?;
            for w in &record.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "K = {}, J = {}, success = {} ({} verified candidate(s))",
                record.iterations,
                record.shots,
                record.success,
                record.verified.len()
            );
            emit(out, &record.render(format)?)
        }
        Command::SweepSplit { n, factors, samples, level, nominal, j_max, k_max, draws, cost } => {
            let cfg = SweepConfig { n, factors, samples, seed: cli.seed, level, nominal, j_max, k_max, draws, cost: cost.into() };
            let report = sweep_split(&cfg)?;
            match (report.summary.get("slope"), report.summary.get("slope_ci_low"), report.summary.get("slope_ci_high")) {
                (Some(s), Some(lo), Some(hi)) => eprintln!("slope = {s}, 95% CI [{lo}, {hi}]"),
                _ => eprintln!("too few points for a regression"),
            }
            emit_report(out, format, &report)
        }
        Command::SuccessHeatmap {
            n,
            shots,
            nominal,
            samples,
            level,
            strategy,
            split_factor,
            min_solutions,
            max_solutions,
            k_max,
        } => {
            let cfg = HeatmapConfig {
                n_values: n,
                shots,
                nominal,
                samples,
                seed: cli.seed,
                level,
                strategy: strategy.into(),
                split_factor,
                min_solutions,
                max_solutions,
                k_max,
            };
            emit_report(out, format, &success_heatmap(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
