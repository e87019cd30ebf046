//! Config-driven command line for verifying and simulating exact solutions
//! of multitime reaction-diffusion equations.
//!
//! The command itself lives in the config document (`verify`, `simulate`,
//! `transform`, `profile`, `catalog-list`); flags select the config file,
//! output directory, sampling seed, and verbosity.
//!
//! Exit codes: 0 all checks passed, 1 verification failed, 2 config error,
//! 3 numeric error. Errors are printed to stderr as JSON with a
//! machine-readable `code`.

use clap::Parser;

mod config;
mod report;
mod run;

#[derive(Parser)]
#[command(
    name = "multitime",
    version,
    about = "Construct and machine-verify exact solutions of multitime reaction-diffusion PDEs"
)]
struct Cli {
    /// Path to the JSON config document
    #[arg(long)]
    config: std::path::PathBuf,

    /// Directory for report.json and CSV artifacts
    #[arg(long, default_value = ".")]
    out: std::path::PathBuf,

    /// Seed for randomized sample points (round-trip checks)
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Suppress the text summary on stdout
    #[arg(long)]
    quiet: bool,
}

fn main() {
    let cli = Cli::parse();
    let opts = run::Options {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let code = match run::run(&opts) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprint!("{}", e.to_stderr_json());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
