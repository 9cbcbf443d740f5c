use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use backlund_cli::{parse_config, run, summary_line, Config, RunError, COMMANDS};
use clap::error::ErrorKind;
use clap::Parser;

/// Bäcklund-transform experiments for sine-Gordon and the Toda lattice.
#[derive(Debug, Parser)]
#[command(name = "backlund", version)]
struct Args {
    /// One of: sg-kink, sg-evolve, sg-bt, sg-bt-inverse, sg-stability,
    /// toda-soliton, toda-evolve, toda-bt, toda-multisoliton, toda-bt-inverse,
    /// toda-stability, dichotomy-check, conjugation-check.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(COMMANDS))]
    subcommand: String,

    /// Configuration file; repeat together with --batch.
    #[arg(long = "config", value_name = "FILE")]
    configs: Vec<PathBuf>,

    /// Output directory; overrides `out_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// `key=value` or `section.key=value`, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Run every --config concurrently, each into `<out>/<file stem>`.
    #[arg(long)]
    batch: bool,
}

fn load(path: Option<&Path>, sets: &[String]) -> Result<Config, RunError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?
        }
        None => Config::default(),
    };
    for s in sets {
        cfg.apply_override(s)
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    Ok(cfg)
}

/// Runs one experiment and reports it; returns the exit code.
fn single(command: &str, cfg: Result<Config, RunError>, out: Option<PathBuf>) -> u8 {
    let outcome = cfg.and_then(|cfg| {
        let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.out_dir));
        run(command, &cfg, &dir)
    });
    match outcome {
        Ok((summary, o)) => {
            println!("{}", summary_line(&summary, &o));
            if summary.pass {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("{command}: {e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if !args.batch {
        if args.configs.len() > 1 {
            eprintln!("several --config files need --batch");
            return ExitCode::from(1);
        }
        let cfg = load(args.configs.first().map(PathBuf::as_path), &args.sets);
        return ExitCode::from(single(&args.subcommand, cfg, args.out));
    }

    let base = args
        .out
        .unwrap_or_else(|| PathBuf::from(Config::default().output.out_dir));
    let mut stems = BTreeSet::new();
    let mut jobs = Vec::new();
    for path in &args.configs {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        match stem {
            Some(s) if stems.insert(s.clone()) => jobs.push((path.clone(), base.join(s))),
            _ => {
                eprintln!("{}: batch configs need distinct file names", path.display());
                return ExitCode::from(1);
            }
        }
    }
    let codes: Vec<u8> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(path, dir)| {
                let command = args.subcommand.as_str();
                let sets = &args.sets;
                scope.spawn(move || single(command, load(Some(&path), sets), Some(dir)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(2)).collect()
    });
    ExitCode::from(codes.into_iter().max().unwrap_or(0))
}
