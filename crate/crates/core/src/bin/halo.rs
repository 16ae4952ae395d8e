use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use halo_core::experiment::{report, run, ExperimentConfig};
use halo_core::Error;

#[derive(Parser)]
#[command(name = "halo", version, about = "Halo sets and Tauberian constants of geometric maximal operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Halo sets and ratios of one set at several thresholds.
    Halo(RunArgs),
    /// Calderón–Zygmund decomposition of a set in a dyadic root.
    Czdec(RunArgs),
    /// John rectangles of convex bodies with a sampled sandwich check.
    John(RunArgs),
    /// Halo embedding checks over a corpus of sets.
    Embed(RunArgs),
    /// Tauberian constant table over a threshold grid.
    Tauberian(RunArgs),
    /// Exponent fit, Hölder quotient and halo function of a table.
    Fit(RunArgs),
    /// Largest embedding constant that passes a corpus.
    Calibrate(RunArgs),
    /// Summary of the experiment directories under DIR.
    Report {
        dir: PathBuf,
        /// Also write report.csv and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &RunArgs, kind: &str, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let bytes = fs::read(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&bytes)?;
    if config.kind() != kind {
        return Err(Error::Config(format!(
            "config is for `{}`, not `{kind}`",
            config.kind()
        )));
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), Error> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let (kind, args) = match &cli.command {
        Command::Halo(a) => ("halo", a),
        Command::Czdec(a) => ("czdec", a),
        Command::John(a) => ("john", a),
        Command::Embed(a) => ("embed", a),
        Command::Tauberian(a) => ("tauberian", a),
        Command::Fit(a) => ("fit", a),
        Command::Calibrate(a) => ("calibrate", a),
        Command::Report { dir, out } => {
            let r = report(dir)?;
            if let Some(out) = out {
                fs::create_dir_all(out)?;
                fs::write(out.join("report.csv"), &r.csv)?;
                fs::write(out.join("report.txt"), &r.text)?;
            }
            print!("{}", r.text);
            return Ok(());
        }
    };
    let config = load(args, kind, cli.seed)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let manifest = run(&config, &args.out, base)?;
    eprintln!(
        "{kind}: {} outputs in {} ({:.2} s)",
        manifest.outputs.len(),
        args.out.display(),
        manifest.timing.wall_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
