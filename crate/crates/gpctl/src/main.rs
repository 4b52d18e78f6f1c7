use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gpmemory::cli::{parse_config, run};

/// Run a heat-with-memory analysis described by a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "gpctl", version)]
struct Args {
    /// Run configuration (JSON).
    config: PathBuf,

    /// Output directory; defaults to the config's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; defaults to the config's `threads`, then all cores.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..=1024))]
    threads: Option<u16>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gpctl: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out =
        args.out.or_else(|| config.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    match run(&config, &out, args.threads.map(usize::from)) {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, out.join(&f.name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gpctl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
