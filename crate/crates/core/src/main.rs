use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lipperturb::scenario::{self, demo_catalog, exit_code_for, Report, RunOptions};
use lipperturb::Error;

/// Lipschitz perturbation scenarios: bounds, certified inversion, frames and
/// atomic decompositions.
#[derive(Debug, Parser)]
#[command(name = "lipperturb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: RunFlags,
    },
    /// Run a built-in demo scenario.
    Demo {
        name: String,
        #[command(flatten)]
        opts: RunFlags,
    },
    /// List the built-in demos.
    Demos,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Replace the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for `<name>.json` reports when `--out` is absent.
    #[arg(long, env = "LIPPERTURB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Print only the JSON report.
    #[arg(long)]
    json_only: bool,
    /// Tolerance of expectations that give none.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        None | Some(Command::Demos) => {
            print_catalog();
            0
        }
        Some(Command::Run { file, opts }) => {
            let text = std::fs::read_to_string(&file).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", file.display())))
            });
            finish(text.and_then(|t| scenario::run_text(&t, &opts.run_options())), &opts)
        }
        Some(Command::Demo { name, opts }) => finish(
            scenario::demo(&name).and_then(|sc| scenario::run_scenario(sc, &opts.run_options())),
            &opts,
        ),
    };
    ExitCode::from(code as u8)
}

impl RunFlags {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            tolerance: self.tolerance,
        }
    }
}

fn print_catalog() {
    let cat = demo_catalog();
    let wn = cat.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let wv = cat.iter().map(|e| e.validates.len()).max().unwrap_or(0);
    let mut text = format!("{} built-in demos (run with `lipperturb demo <name>`):\n", cat.len());
    for e in &cat {
        text.push_str(&format!("  {:<wn$}  {:<wv$}  {}\n", e.name, e.validates, e.description));
    }
    emit(&text);
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn finish(outcome: lipperturb::Result<Report>, flags: &RunFlags) -> i32 {
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let json = report.to_json();
    if flags.json_only {
        emit(&format!("{json}\n"));
    } else {
        emit(&scenario::text_summary(&report));
    }
    let target = flags
        .out
        .clone()
        .or_else(|| flags.out_dir.as_ref().map(|d| d.join(format!("{}.json", report.report.name))));
    if let Some(path) = target {
        if let Err(e) = write_report(&path, &json) {
            eprintln!("error: {}: {e}", path.display());
            return 3;
        }
        if !flags.json_only {
            emit(&format!("report written to {}\n", path.display()));
        }
    }
    report.exit_code()
}

fn write_report(path: &Path, json: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, format!("{json}\n"))
}
