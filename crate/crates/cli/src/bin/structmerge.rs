//! `structmerge`: a git merge driver.
//!
//! ```text
//! structmerge [OPTIONS] BASE LEFT RIGHT     # git: %O %A %B
//! structmerge [OPTIONS] --batch LISTFILE
//! ```
//!
//! Exit status 0 means a clean merge, 1 means the output contains conflict
//! markers, 2 means something went wrong and nothing was written.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use structmerge::driver::{merge_texts, resolve_profile, DriverConfig, Mode, Outcome};
use structmerge::langconfig::ProfileSet;
use structmerge::merge::MergeOptions;
use structmerge::par::{self, Parallelism};
use structmerge::parser::Registry;
use structmerge::render::RenderOptions;

/// Profile directories, one per line, relative to the working directory
/// (the repository root when git runs the driver).
const PROFILE_PATHS_FILE: &str = ".structmerge.profile-paths";

#[derive(Debug, Parser)]
#[command(name = "structmerge", version, about = "Structured three-way merge driver")]
struct Args {
    /// Common ancestor (git's %O).
    #[arg(required_unless_present = "batch")]
    base: Option<PathBuf>,
    /// Current version (git's %A); overwritten unless -o is given.
    #[arg(required_unless_present = "batch")]
    left: Option<PathBuf>,
    /// Other version (git's %B).
    #[arg(required_unless_present = "batch")]
    right: Option<PathBuf>,

    /// Write the result here instead of over LEFT.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,

    #[arg(long, default_value = "auto", value_parser = parse_mode)]
    mode: Mode,

    /// Language profile name; overrides extension mapping.
    #[arg(long)]
    profile: Option<String>,

    /// Extra directory of *.profile files (repeatable).
    #[arg(long = "profile-path")]
    profile_paths: Vec<PathBuf>,

    /// Path of the file in the repository (git's %P), used for extension
    /// mapping. Defaults to LEFT.
    #[arg(long)]
    path: Option<String>,

    /// Conflict marker length (git's %L).
    #[arg(long, default_value_t = 7)]
    marker_size: usize,

    /// Silently accept deletions of subtrees the other side edited.
    #[arg(long)]
    no_strict_delete_edit: bool,

    /// Print matched node pairs to stderr.
    #[arg(long)]
    dump_matching: bool,

    /// Print the steps taken to stderr.
    #[arg(short, long)]
    verbose: bool,

    /// Write `class<TAB>base_line<TAB>summary` lines for each conflict.
    #[arg(long)]
    conflict_report: Option<PathBuf>,

    /// Merge many files; each line holds `BASE LEFT RIGHT [OUT]`.
    #[arg(long)]
    batch: Option<PathBuf>,

    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

struct Job {
    base: PathBuf,
    left: PathBuf,
    right: PathBuf,
    out: PathBuf,
    path: String,
}

fn load_profiles(args: &Args) -> Result<ProfileSet> {
    let mut set = ProfileSet::bundled();
    let mut dirs = args.profile_paths.clone();
    let config = Path::new(PROFILE_PATHS_FILE);
    if config.is_file() {
        let text = fs::read_to_string(config).with_context(|| format!("reading {PROFILE_PATHS_FILE}"))?;
        dirs.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(PathBuf::from),
        );
    }
    for dir in dirs {
        set.load_dir(&dir)
            .with_context(|| format!("loading profiles from {}", dir.display()))?;
    }
    Ok(set)
}

fn config(args: &Args) -> DriverConfig {
    DriverConfig {
        mode: args.mode,
        merge: MergeOptions {
            strict_delete_edit: !args.no_strict_delete_edit,
            ..MergeOptions::default()
        },
        render: RenderOptions::default().with_marker_size(args.marker_size),
        dump_matching: args.dump_matching,
        parallelism: if args.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Rayon
        },
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn run_job(job: &Job, args: &Args, profiles: &ProfileSet, registry: &Registry, cfg: &DriverConfig) -> Result<Outcome> {
    let (base, left, right) = (read(&job.base)?, read(&job.left)?, read(&job.right)?);
    let profile = resolve_profile(profiles, args.profile.as_deref(), &job.path)?;
    let outcome = merge_texts(&base, &left, &right, profile, registry, cfg)?;
    fs::write(&job.out, &outcome.text).with_context(|| format!("cannot write {}", job.out.display()))?;
    Ok(outcome)
}

fn report(job: &Job, args: &Args, outcome: &Outcome) -> Result<()> {
    for w in &outcome.warnings {
        eprintln!("structmerge: warning: {}: {w}", job.path);
    }
    if args.verbose {
        for t in &outcome.trace {
            eprintln!("structmerge: {}: {t}", job.path);
        }
    }
    if let Some(dump) = &outcome.matching_dump {
        eprint!("{dump}");
    }
    if let Some(path) = &args.conflict_report {
        fs::write(path, &outcome.conflict_report).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn batch_jobs(list: &Path) -> Result<Vec<Job>> {
    let text = read(list)?;
    let mut jobs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        if !(3..=4).contains(&fields.len()) {
            bail!("{}:{}: expected `BASE LEFT RIGHT [OUT]`", list.display(), n + 1);
        }
        let left = PathBuf::from(fields[1]);
        jobs.push(Job {
            base: fields[0].into(),
            out: fields.get(3).map_or_else(|| left.clone(), PathBuf::from),
            path: fields[1].to_string(),
            left,
            right: fields[2].into(),
        });
    }
    Ok(jobs)
}

fn run(args: &Args) -> Result<u8> {
    let profiles = load_profiles(args)?;
    let registry = Registry::with_builtins();
    let cfg = config(args);

    if let Some(list) = &args.batch {
        let jobs = batch_jobs(list)?;
        let results = par::map(cfg.parallelism, &jobs, |job| {
            run_job(job, args, &profiles, &registry, &cfg)
        });
        let mut status = 0u8;
        for (job, r) in jobs.iter().zip(results) {
            match r {
                Ok(outcome) => {
                    for w in &outcome.warnings {
                        eprintln!("structmerge: warning: {}: {w}", job.path);
                    }
                    if !outcome.is_clean() {
                        eprintln!("structmerge: {}: {} conflict(s)", job.path, outcome.conflicts);
                        status = status.max(1);
                    }
                }
                Err(e) => {
                    eprintln!("structmerge: error: {}: {e:#}", job.path);
                    status = 2;
                }
            }
        }
        return Ok(status);
    }

    let (Some(base), Some(left), Some(right)) = (&args.base, &args.left, &args.right) else {
        bail!("BASE, LEFT and RIGHT are required");
    };
    let job = Job {
        base: base.clone(),
        left: left.clone(),
        right: right.clone(),
        out: args.output.clone().unwrap_or_else(|| left.clone()),
        path: args.path.clone().unwrap_or_else(|| left.to_string_lossy().into_owned()),
    };
    let outcome = run_job(&job, args, &profiles, &registry, &cfg)?;
    report(&job, args, &outcome)?;
    Ok(outcome.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("structmerge: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
