use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qgraph::counting::CountOptions;
use qgraph_cli::commands::{self, Check, EXAMPLES};
use qgraph_cli::scenario::Scenario;
use qgraph_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "qgraph", version, about = "Evans functions and eigenvalue counts on star graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Evans functions of the full problem and its pieces.
    Evans {
        #[arg(long)]
        scenario: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count eigenvalues and check the splitting identity.
    Count {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of sign-change grid points over the interval.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Tabulate identity residuals over the sweep.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// single, double, minors, resolvent, projections, ugamma or abel.
        #[arg(long)]
        which: String,
        /// Seed for the random forcing and evaluation points (default 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write scenario, curves and plot scales of a reference problem.
    Example {
        /// barrier_end, barrier_interior, two_wire or all.
        #[arg(default_value = "all")]
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        },
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Evans { scenario, out } => {
            let p = Scenario::load(&scenario)?.problem()?;
            emit(&commands::evans_table(&p)?.render(), out.as_deref())
        }
        Command::Count { scenario, grid } => {
            let s = Scenario::load(&scenario)?;
            let p = s.problem()?;
            let mut opts = CountOptions::default();
            if let Some(g) = grid.or(s.options.grid) {
                if g == 0 {
                    return Err(CliError::Invalid("--grid must be positive".into()));
                }
                opts = opts.with_grid(g);
            }
            let outcome = commands::count(&p, &opts)?;
            let json = serde_json::to_string_pretty(&outcome.json).expect("json");
            emit(&format!("{}{json}\n", outcome.text), None)?;
            if outcome.holds() {
                Ok(())
            } else {
                let eq = outcome.identity.map(|i| i.equation()).unwrap_or_default();
                Err(CliError::VerificationFailed(format!("counting identity does not hold: {eq}")))
            }
        }
        Command::Verify { scenario, which, seed, out } => {
            let check: Check = which.parse()?;
            let s = Scenario::load(&scenario)?;
            let p = s.problem()?;
            let seed = seed.or(s.options.seed).unwrap_or(0);
            let (table, ok) = commands::verify(&p, check, &which, seed)?;
            emit(&table.render(), out.as_deref())?;
            if ok {
                Ok(())
            } else {
                Err(CliError::VerificationFailed(format!("'{which}' residuals above tolerance")))
            }
        }
        Command::Example { name, out, samples } => {
            let names: Vec<&str> = if name == "all" { EXAMPLES.to_vec() } else { vec![name.as_str()] };
            std::fs::create_dir_all(&out)?;
            for n in names {
                for (file, text) in commands::example(n, samples)? {
                    std::fs::write(out.join(&file), text)?;
                    eprintln!("wrote {}", out.join(&file).display());
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = commands::thread_pool();
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
