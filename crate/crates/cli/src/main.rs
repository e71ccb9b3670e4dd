use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nlqw::config::{self, ExperimentKind};
use nlqw::experiments::{self, Summary};
use nlqw::presets;
use serde_json::Value;

/// Nonlinear quantum walk experiments.
#[derive(Debug, Parser)]
#[command(name = "nlqw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment. Precedence: preset < config file < --override < --out.
    Run {
        /// JSON config file; its `experiment` field picks the preset it extends.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from this preset (used when the config names no experiment).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value` with a dotted key; the value is parsed as JSON, else taken as a string.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Growth-rate maps of both steady-state branches.
    StabilityMap {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta0_t: Option<f64>,
        #[arg(long)]
        alpha_t: Option<f64>,
        /// Grid points per axis.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Fit A sech^2(beta (x - x0)) to the `x_phys`, `P` columns of a profile CSV.
    Fit {
        #[arg(long)]
        profile: PathBuf,
    },
    /// List the experiment presets.
    ListPresets,
}

fn read_config(path: Option<&Path>) -> Result<Option<Value>> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Some(value))
}

fn parse_preset(name: Option<&str>) -> Result<Option<ExperimentKind>> {
    name.map(|n| {
        ExperimentKind::from_name(n).with_context(|| format!("unknown preset `{n}`; see `nlqw list-presets`"))
    })
    .transpose()
}

fn report(summary: &Summary) {
    for run in &summary.runs {
        for c in &run.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            println!("{status} {}/{}: {} ({})", run.label, c.name, c.value, c.criterion);
        }
    }
    for c in &summary.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {} ({})", c.name, c.value, c.criterion);
    }
}

fn exit_for(summary: &Summary) -> ExitCode {
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            overrides,
        } => {
            let file = read_config(config.as_deref())?;
            let mut cfg = config::resolve(file, parse_preset(preset.as_deref())?, &overrides)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let dir = cfg.output_dir.clone();
            let summary = experiments::run_experiment(&cfg, dir.as_deref())?;
            report(&summary);
            if let Some(d) = &dir {
                println!("outputs in {}", d.display());
            }
            Ok(exit_for(&summary))
        }
        Command::StabilityMap {
            config,
            out,
            theta0_t,
            alpha_t,
            points,
            mut overrides,
        } => {
            let file = read_config(config.as_deref())?;
            // flags are applied before explicit overrides
            let mut flags = Vec::new();
            if let Some(v) = theta0_t {
                flags.push(format!("continuum.theta0_t={v}"));
            }
            if let Some(v) = alpha_t {
                flags.push(format!("continuum.alpha_t={v}"));
            }
            if let Some(v) = points {
                flags.push(format!("stability_grid.points={v}"));
            }
            flags.append(&mut overrides);
            let mut value = config::resolve_value(file, Some(ExperimentKind::Fig8StabilityMap), &flags)?;
            // derive the lattice angles from the continuum ones so the two stay consistent
            let eps = value["epsilon"].as_f64();
            let (t, a) = (value["continuum"]["theta0_t"].as_f64(), value["continuum"]["alpha_t"].as_f64());
            if let (Some(eps), Some(t), Some(a)) = (eps, t, a) {
                value["theta0"] = (eps * t).into();
                value["alpha"] = (eps * a).into();
            }
            let cfg = config::from_value(value)?;
            let summary = experiments::stability_map_files(&cfg, &out)?;
            report(&summary);
            Ok(exit_for(&summary))
        }
        Command::Fit { profile } => {
            let file = fs::File::open(&profile).with_context(|| format!("opening {}", profile.display()))?;
            let (x, p) = nlqw_core::io::read_profile(file)?;
            let fit = nlqw_core::fit_sech2(&x, &p)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::ListPresets => {
            for k in ExperimentKind::ALL {
                println!("{:<24} {}", k.name(), presets::describe(k));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
