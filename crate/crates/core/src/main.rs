use std::path::{Path, PathBuf};
use std::process::ExitCode;

use symprox::cli::{
    bundled_configs, load_config, load_config_for, run, CliError, ExperimentConfig,
};
use symprox::io::load_measure;

const USAGE: &str = "\
symprox <subcommand> [flags]

subcommands:
  run          --config <file> | --bundled <name>   [--out <dir>]
  list-configs
  prox         --penalty <file> --input <csv>       [--tol <t>] [--out <dir>]
  scalar-rep   --penalty <file> --prior <file> --tau <t> [--m <n>] [--out <dir>]
  seq-sim      --config <file> --out <dir>
  fixed-point  --config <file> [--out <dir>]
  lm-sim       --config <file> --out <dir>
  risk         --prior <file> --tau <t> [--m <n>] [--out <dir>]
  tau-sep      --prior <file> --sigma <s> --delta <d> [--out <dir>]
  adapt-check  --family <dir> [--max-cycle <n>] [--out <dir>]

global flags:
  --threads <n>   cap worker threads (env SYMPROX_THREADS)

config files are TOML or JSON by extension; penalties and priors are JSON
(priors also CSV with header atom,weight). exit codes: 0 ok, 2 validation,
3 no convergence / no solution, 4 i/o.";

struct Flags {
    values: Vec<(String, String)>,
    positional: Vec<String>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Flags, CliError> {
        let mut values = Vec::new();
        let mut positional = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let a = &args[i];
            if let Some(name) = a.strip_prefix("--") {
                let v = args
                    .get(i + 1)
                    .ok_or_else(|| CliError::Usage(format!("flag --{name} needs a value")))?;
                values.push((name.to_string(), v.clone()));
                i += 2;
            } else {
                positional.push(a.clone());
                i += 1;
            }
        }
        Ok(Flags { values, positional })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{name}")))
    }

    fn parse_f64(&self, name: &str) -> Result<f64, CliError> {
        self.require(name)?
            .parse()
            .map_err(|_| CliError::Usage(format!("--{name} must be a number")))
    }
}

fn out_dir(flags: &Flags, default: &str) -> PathBuf {
    PathBuf::from(flags.get("out").unwrap_or(default))
}

fn load_penalty(path: &str) -> Result<symprox::penalties::PenaltySpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    if path.ends_with(".toml") {
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{path}: {e}")))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{path}: {e}")))
    }
}

fn run_and_print(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let summary = run(config, out)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(())
}

fn real_main() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(sub) = args.first().cloned() else {
        return Err(CliError::Usage(USAGE.into()));
    };
    let flags = Flags::parse(&args[1..])?;
    if !flags.positional.is_empty() {
        return Err(CliError::Usage(format!(
            "unexpected argument {:?}\n\n{USAGE}",
            flags.positional[0]
        )));
    }

    let threads = flags
        .get("threads")
        .map(|s| s.to_string())
        .or_else(|| std::env::var("SYMPROX_THREADS").ok());
    if let Some(t) = threads {
        let n: usize = t
            .parse()
            .map_err(|_| CliError::Usage("--threads must be a positive integer".into()))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .ok();
        }
    }

    match sub.as_str() {
        "run" => {
            let config = match (flags.get("config"), flags.get("bundled")) {
                (Some(path), None) => load_config(Path::new(path))?,
                (None, Some(name)) => bundled_configs()
                    .into_iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, c)| c)
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown bundled config {name:?}; see list-configs"
                        ))
                    })?,
                _ => {
                    return Err(CliError::Usage(
                        "run needs exactly one of --config or --bundled".into(),
                    ))
                }
            };
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        "list-configs" => {
            for (name, cfg) in bundled_configs() {
                println!("{name}  ({})", cfg.kind_name());
            }
            Ok(())
        }
        "prox" => {
            let penalty = load_penalty(flags.require("penalty")?)?;
            let input = flags.require("input")?;
            let (header, rows) = symprox::io::read_csv(Path::new(input))?;
            if header.first().map(|h| h.trim()) != Some("y") {
                return Err(CliError::Validation(format!(
                    "{input}: expected a CSV with header y"
                )));
            }
            let mut y = Vec::with_capacity(rows.len());
            for row in rows {
                let v: f64 = row[0].trim().parse().map_err(|_| {
                    CliError::Validation(format!("{input}: not a number: {:?}", row[0]))
                })?;
                y.push(v);
            }
            let tol = match flags.get("tol") {
                Some(t) => t
                    .parse()
                    .map_err(|_| CliError::Usage("--tol must be a number".into()))?,
                None => symprox::penalties::DEFAULT_PROX_TOL,
            };
            let config = ExperimentConfig::Prox(symprox::cli::ProxConfig { penalty, y, tol });
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        "scalar-rep" => {
            let config = ExperimentConfig::ScalarRep(symprox::cli::ScalarRepConfig {
                penalty: load_penalty(flags.require("penalty")?)?,
                prior: load_measure(Path::new(flags.require("prior")?))?,
                tau: flags.parse_f64("tau")?,
                grid_size: match flags.get("m") {
                    Some(m) => m
                        .parse()
                        .map_err(|_| CliError::Usage("--m must be an integer".into()))?,
                    None => 4096,
                },
                prox_tol: symprox::penalties::DEFAULT_PROX_TOL,
            });
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        "seq-sim" | "fixed-point" | "lm-sim" => {
            let config = load_config_for(Path::new(flags.require("config")?), &sub)?;
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        "risk" => {
            let config = ExperimentConfig::Risk(symprox::cli::RiskConfig {
                prior: load_measure(Path::new(flags.require("prior")?))?,
                tau: flags.parse_f64("tau")?,
                grid_size: match flags.get("m") {
                    Some(m) => m
                        .parse()
                        .map_err(|_| CliError::Usage("--m must be an integer".into()))?,
                    None => 4096,
                },
            });
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        "tau-sep" => {
            let config = ExperimentConfig::TauSep(symprox::cli::TauSepConfig {
                prior: load_measure(Path::new(flags.require("prior")?))?,
                sigma: flags.parse_f64("sigma")?,
                delta: flags.parse_f64("delta")?,
            });
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        "adapt-check" => {
            let max_cycle = match flags.get("max-cycle") {
                Some(m) => m
                    .parse()
                    .map_err(|_| CliError::Usage("--max-cycle must be an integer".into()))?,
                None => 3,
            };
            let config = ExperimentConfig::AdaptCheck(symprox::cli::AdaptCheckConfig {
                family_dir: Some(PathBuf::from(flags.require("family")?)),
                couplings: None,
                max_cycle,
            });
            run_and_print(&config, &out_dir(&flags, "symprox-out"))
        }
        other => Err(CliError::Usage(format!(
            "unknown subcommand {other:?}\n\n{USAGE}"
        ))),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
