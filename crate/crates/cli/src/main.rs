use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ddlab::run::{out_dir_under, DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_VAR};
use ddlab::{builtin, parse_config_as, run, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "ddlab", version, about = "Run density-evolution experiments from a config file")]
struct Cli {
    /// Experiment kind: map-iterate, dde-ensemble, gaussian, brownian, kicked or compare.
    kind: String,

    #[arg(long)]
    config: PathBuf,

    /// Worker threads (overrides the config's `threads`).
    #[arg(long)]
    threads: Option<usize>,

    /// Validate the config and write the manifest without computing.
    #[arg(long)]
    dry_run: bool,

    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, env = OUTPUT_ROOT_VAR, default_value = DEFAULT_OUTPUT_ROOT)]
    output_root: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match go(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ddlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn go(cli: &Cli) -> Result<(), RunError> {
    if builtin().experiment(&cli.kind).is_none() {
        return Err(RunError::invalid(format!(
            "unknown kind `{}`; expected one of {}",
            cli.kind,
            builtin().kinds().join(", ")
        )));
    }
    if cli.threads == Some(0) {
        return Err(RunError::invalid("--threads must be positive"));
    }
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| RunError::Io(format!("{}: {e}", cli.config.display())))?;
    let cfg = parse_config_as(&text, Some(&cli.kind))?;
    let dir = cli.out.clone().unwrap_or_else(|| out_dir_under(&cfg, &cli.output_root));
    let opts = RunOptions {
        threads: cli.threads,
        dry_run: cli.dry_run,
        out_dir: Some(dir.clone()),
    };
    let manifest = run(&cfg, &opts)?;
    println!("{}", dir.display());
    for (name, hash) in &manifest.outputs {
        println!("  {name}  {hash}");
    }
    Ok(())
}
