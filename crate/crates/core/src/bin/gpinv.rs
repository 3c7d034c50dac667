use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gp_inverse::experiments::run_config_file;

#[derive(Parser)]
#[command(name = "gpinv", version, about = "GP surrogate experiments for Bayesian inverse problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `[experiment] seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for replication loops (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Log level: error, warn, info or debug.
        #[arg(long, default_value = "info", value_parser = parse_level)]
        log: log::LevelFilter,
    },
}

fn parse_level(s: &str) -> Result<log::LevelFilter, String> {
    s.parse().map_err(|_| format!("unknown log level `{s}`"))
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("[{}] {}", record.level(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn main() -> ExitCode {
    let Cli {
        command: Command::Run {
            config,
            out,
            seed,
            threads,
            log: level,
        },
    } = Cli::parse();
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(level);

    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run_config_file(&config, &out, seed) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
