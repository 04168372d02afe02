use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orbitframe::diagnose::{diagnose_measure, diagnose_weight};
use orbitframe::measures::{Measure, MeasureKind};
use orbitframe::scenario;
use orbitframe::weights::{Preset, Weight};
use orbitframe::Error;
use serde_json::json;

const EXIT_VERDICT: u8 = 2;
const EXIT_INPUT: u8 = 1;

#[derive(Parser)]
#[command(name = "orbitframe", version, about = "Operator-orbit frames, Kaczmarz sequences and weight audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write report.json plus CSV artifacts.
    Run {
        file: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify exponentials over a weight (preset name or CSV file) or a
    /// measure (JSON file).
    Diagnose {
        spec: String,
        #[arg(long, default_value_t = 10)]
        depth: u32,
        #[arg(long = "max-m", default_value_t = 64)]
        max_m: usize,
    },
    /// Weight presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn run(file: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<bool, Error> {
    let sc = scenario::load(file)?;
    let base = file.parent().unwrap_or(Path::new("."));
    let outcome = scenario::run(&sc, base, seed)?;
    let dir = out.unwrap_or_else(|| Path::new("out").join(&sc.name));
    fs::create_dir_all(&dir)?;
    for (name, contents) in &outcome.artifacts {
        fs::write(dir.join(name), contents)?;
    }
    let report = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    fs::write(dir.join("report.json"), report + "\n")?;
    for check in outcome.report["checks"].as_array().into_iter().flatten() {
        let pass = check["pass"].as_bool().unwrap_or(false);
        println!(
            "{} {}: {} (requires {})",
            if pass { "PASS" } else { "FAIL" },
            check["name"].as_str().unwrap_or("?"),
            check["observed"],
            check["requirement"].as_str().unwrap_or("?")
        );
    }
    println!("{}: {} -> {}", sc.name, if outcome.passed { "passed" } else { "failed" }, dir.display());
    Ok(outcome.passed)
}

fn diagnose(spec: &str, depth: u32, max_m: usize) -> Result<(), Error> {
    let path = Path::new(spec);
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let report = if let Ok(p) = Preset::parse(spec) {
        let w = Weight::preset(p, (4 * max_m).max(1024))?;
        json!(diagnose_weight(&w, depth, max_m)?)
    } else if ext == "csv" {
        let file = fs::File::open(path).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
        let w = Weight::from_csv(file)?.with_label(spec);
        json!(diagnose_weight(&w, depth, max_m)?)
    } else if ext == "json" {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
        let m = Measure::from_json(&text)?;
        match m.kind() {
            MeasureKind::GridWeight { weight } => json!(diagnose_weight(&Weight::new(weight.clone())?, depth, max_m)?),
            _ => json!(diagnose_measure(&m, max_m)?),
        }
    } else {
        return Err(Error::Parameter {
            field: "spec".into(),
            reason: format!("`{spec}` is neither a preset name nor a .csv weight or .json measure"),
        });
    };
    let envelope = json!({
        "version": scenario::VERSION,
        "modules": scenario::modules(),
        "spec": spec,
        "depth": depth,
        "max_m": max_m,
        "diagnosis": report,
    });
    emit(&serde_json::to_string_pretty(&envelope).expect("report serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { file, out, seed } => run(&file, out, seed).map(|passed| {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERDICT)
            }
        }),
        Command::Diagnose { spec, depth, max_m } => diagnose(&spec, depth, max_m).map(|_| ExitCode::SUCCESS),
        Command::Presets { action: PresetAction::List } => {
            let lines: Vec<String> = Preset::ALL.iter().map(|p| format!("{:<16}{}", p.name(), p.formula())).collect();
            emit(&lines.join("\n"));
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INPUT)
    })
}
