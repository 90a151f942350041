//! `structmerge-bench`: replays merge scenarios with two tools and reports
//! where they disagree.
//!
//! ```text
//! structmerge-bench run --scenarios DIR --tool-a CMD --tool-b CMD --out report.tsv
//! ```
//!
//! A tool is either a shell command, called as `CMD BASE LEFT RIGHT -o OUT`,
//! or one of the built-in drivers: `builtin:line`, `builtin:structured`,
//! `builtin:auto`, `builtin:structured-permissive`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use structmerge::driver::{DriverConfig, Mode};
use structmerge::harness::{
    report_text, report_tsv, run_suite, Classifier, CommandTool, DriverTool, MergeTool, Scenario,
};
use structmerge::langconfig::ProfileSet;
use structmerge::merge::MergeOptions;
use structmerge::par::Parallelism;
use structmerge::parser::Registry;

#[derive(Debug, Parser)]
#[command(
    name = "structmerge-bench",
    version,
    about = "Compare two merge tools on recorded scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run both tools on every scenario under DIR.
    Run {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long = "tool-a")]
        tool_a: String,
        #[arg(long = "tool-b")]
        tool_b: String,
        /// TSV report destination; the text summary goes to stdout.
        #[arg(long)]
        out: PathBuf,
        /// Scratch directory for tool outputs (default: a temporary one).
        #[arg(long)]
        work_dir: Option<PathBuf>,
        /// Extra directory of *.profile files used for equivalence checks.
        #[arg(long = "profile-path")]
        profile_paths: Vec<PathBuf>,
        /// Run scenarios one at a time.
        #[arg(long)]
        sequential: bool,
    },
}

fn tool(spec: &str) -> Result<Box<dyn MergeTool>> {
    let Some(name) = spec.strip_prefix("builtin:") else {
        return Ok(Box::new(CommandTool::new(spec)));
    };
    let t = match name {
        "line" => DriverTool::for_mode(Mode::Line),
        "structured" => DriverTool::for_mode(Mode::Structured),
        "auto" => DriverTool::for_mode(Mode::Auto),
        "structured-permissive" => DriverTool::new(
            spec,
            DriverConfig {
                mode: Mode::Structured,
                merge: MergeOptions {
                    strict_delete_edit: false,
                    ..MergeOptions::default()
                },
                ..DriverConfig::default()
            },
        ),
        other => bail!("unknown built-in tool `{other}`"),
    };
    Ok(Box::new(t))
}

fn run(cli: Cli) -> Result<()> {
    let Command::Run {
        scenarios,
        tool_a,
        tool_b,
        out,
        work_dir,
        profile_paths,
        sequential,
    } = cli.command;
    let suite = Scenario::load_suite(&scenarios).with_context(|| format!("loading {}", scenarios.display()))?;
    let (a, b) = (tool(&tool_a)?, tool(&tool_b)?);
    let mut profiles = ProfileSet::bundled();
    for dir in &profile_paths {
        profiles.load_dir(dir)?;
    }
    let registry = Registry::with_builtins();
    let tmp;
    let work = match work_dir {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            dir
        }
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    let classifier = Classifier {
        registry: &registry,
        profiles: &profiles,
        work_dir: &work,
    };
    let mode = if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Rayon
    };
    let result = run_suite(&suite, a.as_ref(), b.as_ref(), &classifier, mode);
    fs::write(&out, report_tsv(&result.reports)).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", report_text(&result));
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("structmerge-bench: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
