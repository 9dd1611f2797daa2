use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecdlp_lab::cli::{
    cmd_analyze, cmd_attack, cmd_exact, cmd_rank_qubits, AnalyzeConfig, CliError, KeySpec, Preset, RunConfig,
    DEFAULT_SHOTS,
};
use ecdlp_lab::postprocess::DEFAULT_TOP_N;

#[derive(Debug, Parser)]
#[command(name = "ecdlp-lab", version)]
#[command(about = "Simulate and analyze a Shor-style attack on a toy elliptic-curve discrete log")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Bits per register; the subgroup has order 2^bits.
    #[arg(long, default_value_t = 5)]
    bits: u32,

    /// Secret scalar k; Q = kP is computed on the curve.
    #[arg(long, conflicts_with = "q_index", required_unless_present = "q_index")]
    k: Option<u64>,

    /// Public point index, taken verbatim (e.g. 23 for the published run).
    #[arg(long)]
    q_index: Option<u64>,

    #[arg(long, default_value_t = 1)]
    p_index: u64,

    /// Defaults to `consistent` with --k and `paper-compat` with --q-index.
    #[arg(long, value_enum)]
    preset: Option<Preset>,

    /// Curve fixture JSON ({p, a, b, generator, order}).
    #[arg(long)]
    curve: Option<PathBuf>,

    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate, sample, and recover the key
    Attack {
        #[command(flatten)]
        run: RunArgs,

        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: u64,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Depolarizing mix weight in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        noise_eps: f64,

        /// Independent per-bit readout flip probability.
        #[arg(long, default_value_t = 0.0)]
        readout_flip: f64,

        #[arg(long, default_value_t = DEFAULT_TOP_N)]
        top: usize,

        /// Calibration CSV used to fill `physical_qubits`.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Rebuild candidates and figure datasets from a results JSON
    Analyze {
        input: PathBuf,

        /// Key to look for; defaults to the one recorded in the document.
        #[arg(long)]
        k: Option<u64>,

        #[arg(long, value_enum)]
        preset: Option<Preset>,

        #[arg(long, default_value_t = DEFAULT_TOP_N)]
        top: usize,

        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the exact outcome distribution next to the analytic ridge
    Exact {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rank physical qubits from a calibration CSV
    RankQubits {
        csv: PathBuf,

        #[arg(long, default_value_t = 15)]
        n: usize,
    },
}

impl RunArgs {
    fn into_config(self) -> RunConfig {
        let key = match (self.k, self.q_index) {
            (Some(k), _) => KeySpec::Secret(k),
            (None, Some(q)) => KeySpec::QIndex(q),
            (None, None) => unreachable!("clap requires one of --k / --q-index"),
        };
        let preset = self.preset.unwrap_or(match key {
            KeySpec::Secret(_) => Preset::Consistent,
            KeySpec::QIndex(_) => Preset::PaperCompat,
        });
        RunConfig {
            n: self.bits,
            key,
            p_index: self.p_index,
            preset,
            out_dir: self.out,
            curve: self.curve,
            ..RunConfig::published(PathBuf::new())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Attack { run, shots, seed, noise_eps, readout_flip, top, calibration } => {
            let config =
                RunConfig { shots, seed, noise_eps, readout_flip, top_n: top, calibration, ..run.into_config() };
            let outcome = cmd_attack(&config)?;
            print!("{}", outcome.report);
            eprintln!("results saved \u{2192} {}", outcome.results_path.display());
            Ok(outcome.exit_code())
        }
        Command::Analyze { input, k, preset, top, out } => {
            let config = AnalyzeConfig { preset, k, top_n: top, out_dir: out };
            let outcome = cmd_analyze(&input, &config)?;
            print!("{}", outcome.report);
            eprintln!("{} figure datasets written under {}", outcome.figures.len(), config.out_dir.display());
            Ok(outcome.exit_code())
        }
        Command::Exact { run } => {
            let config = run.into_config();
            let outcome = cmd_exact(&config)?;
            match outcome.max_abs_diff {
                Some(d) => println!("max |exact - analytic| = {d:e}"),
                None => println!("no closed-form ridge for this instance and convention"),
            }
            Ok(0)
        }
        Command::RankQubits { csv, n } => {
            let ranked = cmd_rank_qubits(&csv, n)?;
            println!("Best physical qubits: {ranked:?}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
