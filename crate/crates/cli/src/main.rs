mod failure;
mod pipeline;
mod report;
mod scenario;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nashfee::reproduce::{self, Suite};

use failure::Failure;
use pipeline::{analyze, Options};
use scenario::Scenario;

/// Environment variable capping the worker threads.
const THREADS_VAR: &str = "NASHFEE_THREADS";

#[derive(Parser)]
#[command(name = "nashfee", version, about = "Upstream merger effects on negotiated fees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one scenario file.
    Analyze {
        file: PathBuf,
        /// Also write the machine-readable report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optimizer seed, overriding the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Add Shapley-value fees.
        #[arg(long)]
        shapley: bool,
        /// Print the JSON report instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// Recompute published numbers: appendix-a, appendix-b, prop1 or hin.
    Reproduce { suite: String },
    /// Evaluate a scenario template over a parameter grid.
    Sweep {
        template: PathBuf,
        /// `path=start:end:count`, e.g. `model.eq7.gamma=-0.7:0.7:15`; repeatable.
        #[arg(long = "range", required = true)]
        ranges: Vec<String>,
        /// Predicate evaluated per node, e.g. `gross=complements && delta<0`.
        #[arg(long)]
        predicate: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        max_nodes: usize,
    },
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::validation(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::validation(format!("{THREADS_VAR}: {e}")))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { file, out, seed, shapley, json } => {
            let scenario = Scenario::parse(&read(&file)?)?;
            let r = analyze(&scenario, Options { seed, shapley })?;
            let machine = report::to_json(&r);
            if let Some(path) = out {
                write(&path, &machine)?;
            }
            if json {
                print!("{machine}");
            } else {
                print!("{}", report::render(&r));
            }
            Ok(0)
        }
        Command::Reproduce { suite } => {
            let suite: Suite = suite.parse()?;
            let r = reproduce::run(suite)?;
            println!("{:<45} {:>10} {:>18} {:>16}  result", format!("{suite}"), "reference", "computed", "check");
            for row in &r.rows {
                println!(
                    "{:<45} {:>10} {:>18.12} {:>16}  {}",
                    row.label,
                    row.reference,
                    row.computed,
                    row.check.to_string(),
                    if row.pass { "PASS" } else { "FAIL" }
                );
            }
            Ok(if r.passed() { 0 } else { 1 })
        }
        Command::Sweep { template, ranges, predicate, out, seed, max_nodes } => {
            let text = read(&template)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("{}: {e}", template.display())))?;
            let ranges = ranges.iter().map(|r| sweep::Range::parse(r)).collect::<Result<Vec<_>, _>>()?;
            let rep = sweep::sweep(value, ranges, predicate.as_deref(), max_nodes, seed)?;
            write(&out, &report::to_json(&rep))?;
            let failed = rep.rows.iter().filter(|r| r.error.is_some()).count();
            let matched = rep.rows.iter().filter(|r| r.matches == Some(true)).count();
            for row in &rep.rows {
                let params: Vec<String> = row.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                match (&row.error, row.gap) {
                    (Some(e), _) => println!("{}  error: {e}", params.join(" ")),
                    (None, Some(gap)) => println!(
                        "{}  gap {gap:+.6}  {}{}",
                        params.join(" "),
                        row.verdict.as_deref().unwrap_or("?"),
                        if row.matches == Some(true) { "  *" } else { "" }
                    ),
                    _ => {}
                }
            }
            print!("{} nodes, {failed} failed", rep.rows.len());
            if rep.predicate.is_some() {
                print!(", {matched} match the predicate");
            }
            println!();
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
