use clap::Parser;
use shearspec_cli::config::Overrides;
use shearspec_cli::error::CliError;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral experiments for shear flows.
#[derive(Debug, Parser)]
#[command(name = "shearspec", version)]
struct Args {
    /// One of spectrum, dos, evolve, ergodic, fiber.
    task: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per fiber axis.
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SHEARSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SHEARSPEC_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let overrides = Overrides { out: args.out, seed: args.seed, grid_n: args.grid_n, sigma: args.sigma };
    let result = threads().and_then(|_| shearspec_cli::execute(&args.task, &args.config, &overrides));
    match result {
        Ok(s) => {
            // a closed stdout must not turn a finished run into a failure
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{} [{}]: {}", s.task, &s.config_hash[..12], s.message);
            for p in &s.written {
                let _ = writeln!(out, "  wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("shearspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
