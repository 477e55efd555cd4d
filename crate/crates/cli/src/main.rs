mod config;
mod output;
mod run;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::{load_plan, seed_from_env, ConfigError, Mode, FAMILIES};

#[derive(Parser)]
#[command(name = "evgrow", version, about = "GROW e-variables, concentration bounds and NML regret for exponential families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment configuration and write its CSV (and SVG) output.
    Run { config: PathBuf },
    /// Run the property suite on a configuration, or on the shipped suite.
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
        config: Option<PathBuf>,
    },
    /// List the built-in families and their parameters.
    Families,
}

enum Failure {
    Config(ConfigError),
    Falsified(String),
    Downstream(anyhow::Error),
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Failure::Config(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(1)
            }
            Failure::Falsified(msg) => {
                eprintln!("falsified: {msg}");
                ExitCode::from(2)
            }
            Failure::Downstream(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(path: &Path) -> Result<(), Failure> {
    let seed = seed_from_env().map_err(Failure::Config)?;
    let plan = load_plan(path, seed).map_err(Failure::Config)?;
    if plan.experiments.iter().any(|e| e.mode == Mode::Verify) {
        if plan.experiments.iter().any(|e| e.mode != Mode::Verify) {
            return Err(Failure::Config(ConfigError {
                message: "verify experiments cannot be mixed with other modes".into(),
                family_invariant: false,
            }));
        }
        return verify_plan(&[(path.display().to_string(), fs::read_to_string(path).unwrap_or_default())], seed);
    }
    let outcomes: Vec<anyhow::Result<run::Outcome>> = plan.experiments.par_iter().map(run::execute).collect();
    let outcomes = outcomes.into_iter().collect::<anyhow::Result<Vec<_>>>().map_err(Failure::Downstream)?;
    let results: Vec<_> = plan.experiments.iter().zip(&outcomes).collect();

    let mut buf = Vec::new();
    output::write_csv(&mut buf, &results).map_err(Failure::Downstream)?;
    match &plan.csv {
        Some(p) => write_file(p, &buf).map_err(Failure::Downstream)?,
        None => io::stdout().write_all(&buf).map_err(|e| Failure::Downstream(e.into()))?,
    }
    if let Some(p) = &plan.svg {
        write_file(p, output::svg(&results).as_bytes()).map_err(Failure::Downstream)?;
    }
    let violations: Vec<&String> = outcomes.iter().flat_map(|o| &o.violations).collect();
    if !violations.is_empty() {
        let list: Vec<&str> = violations.iter().map(|s| s.as_str()).collect();
        return Err(Failure::Falsified(list.join("; ")));
    }
    Ok(())
}

fn verify_plan(docs: &[(String, String)], seed: Option<u64>) -> Result<(), Failure> {
    let mut passed = 0;
    let mut failed = 0;
    for (label, text) in docs {
        let label = Path::new(label)
            .file_stem()
            .map_or(label.clone(), |s| s.to_string_lossy().into_owned());
        let checks = verify::verify_config(text, &label, seed).map_err(Failure::Config)?;
        for c in checks {
            println!("{}", c.line());
            if c.pass {
                passed += 1;
            } else {
                failed += 1;
            }
        }
    }
    println!("summary passed={passed} failed={failed}");
    if failed > 0 {
        return Err(Failure::Falsified(format!("{failed} properties failed")));
    }
    Ok(())
}

fn verify(suite: &str, config: Option<&Path>) -> Result<(), Failure> {
    let seed = seed_from_env().map_err(Failure::Config)?;
    let docs: Vec<(String, String)> = match config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                Failure::Config(ConfigError {
                    message: format!("cannot read {}: {e}", p.display()),
                    family_invariant: false,
                })
            })?;
            vec![(p.display().to_string(), text)]
        }
        None if suite == "default" => verify::DEFAULT_SUITE
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect(),
        None => {
            return Err(Failure::Config(ConfigError {
                message: format!("unknown suite `{suite}` (only `default` is built in)"),
                family_invariant: false,
            }))
        }
    };
    verify_plan(&docs, seed)
}

fn families() {
    for (name, aliases, doc) in FAMILIES {
        println!("{name:<18} aliases: {:<28} {doc}", aliases.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::Verify { suite, config } => verify(suite, config.as_deref()),
        Command::Families => {
            families();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
