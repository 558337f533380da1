use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use semihelix::commands::{cmd_build, cmd_fit_direction, cmd_reconstruct, cmd_trace, cmd_verify, CommandOutput};
use semihelix::config::{parse_config_with, RunConfig};

/// Build, certify, trace and reconstruct semi-helix hypersurfaces.
///
/// Presets for `base`/`surface`: plane, circle(ρ), sphere(ρ), cylinder(ρ),
/// torus(R,ρ), graph(A).
#[derive(Parser, Debug)]
#[command(name = "semihelix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the chart to CSV (and OBJ when n = 3).
    Build(Common),
    /// Certify the angle window; exits nonzero on failure.
    Verify(Common),
    /// Trace one integral curve and fit its circle.
    Trace(Common),
    /// Recover the local product structure; exits nonzero on failure.
    Reconstruct(Common),
    /// Fit the axis to an oriented point cloud.
    FitDirection(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (flat key = value).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Samples per chart axis, `N` or `N,M,...`.
    #[arg(long)]
    grid: Option<String>,
    /// Chart coordinates, e.g. "0.5,0.1".
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Curve parameter span (negative traces backwards).
    #[arg(long, allow_hyphen_values = true)]
    span: Option<f64>,
    /// Integration step.
    #[arg(long)]
    step: Option<f64>,
    /// Seed for sampled point clouds.
    #[arg(long)]
    seed: Option<u64>,
    /// Oriented point cloud CSV (`x1..xn,n1..nn`).
    #[arg(long)]
    cloud: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let text = fs::read_to_string(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        let mut overrides: Vec<(&str, String)> = Vec::new();
        if let Some(out) = &self.out {
            overrides.push(("out", out.display().to_string()));
        }
        if let Some(g) = &self.grid {
            overrides.push(("grid", g.clone()));
        }
        if let Some(s) = &self.start {
            overrides.push(("start", s.clone()));
        }
        if let Some(s) = self.span {
            overrides.push(("span", s.to_string()));
        }
        if let Some(h) = self.step {
            overrides.push(("step", h.to_string()));
        }
        if let Some(k) = self.seed {
            overrides.push(("seed", k.to_string()));
        }
        if let Some(c) = &self.cloud {
            overrides.push(("cloud", c.display().to_string()));
        }
        parse_config_with(&text, &overrides).with_context(|| format!("in {}", self.config.display()))
    }
}

fn write_outputs(dir: &Path, output: &CommandOutput) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for file in &output.files {
        let path = dir.join(&file.name);
        fs::write(&path, &file.contents).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    for notice in &output.notices {
        eprintln!("note: {notice}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (common, kind) = match &cli.command {
        Command::Build(c) => (c, "build"),
        Command::Verify(c) => (c, "verify"),
        Command::Trace(c) => (c, "trace"),
        Command::Reconstruct(c) => (c, "reconstruct"),
        Command::FitDirection(c) => (c, "fit-direction"),
    };
    let cfg = common.load()?;
    let output = match kind {
        "build" => cmd_build(&cfg)?,
        "verify" => cmd_verify(&cfg)?,
        "trace" => cmd_trace(&cfg)?,
        "reconstruct" => cmd_reconstruct(&cfg)?,
        _ => {
            let text = match &cfg.cloud {
                Some(path) => Some(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?),
                None => None,
            };
            cmd_fit_direction(&cfg, text.as_deref())?
        }
    };
    write_outputs(&cfg.out, &output)?;
    Ok(match output.pass {
        Some(false) => {
            eprintln!("{kind}: FAIL");
            ExitCode::FAILURE
        }
        Some(true) => {
            println!("{kind}: PASS");
            ExitCode::SUCCESS
        }
        None => ExitCode::SUCCESS,
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
