//! Merge of one file: line, structured or auto mode.
//!
//! Auto mode runs the line merge first and only parses when it conflicts.
//! Structured mode falls back to the line merge when a revision does not
//! parse or the three roots disagree.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cst::Origin;
use crate::langconfig::{LanguageProfile, ProfileSet};
use crate::linemerge::diff3_merge;
use crate::matching::compute_matchings;
use crate::merge::{three_way_merge, MergeOptions};
use crate::par::Parallelism;
use crate::parser::Registry;
use crate::render::{render, RenderOptions};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    Line,
    Structured,
    #[default]
    Auto,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Mode::Line),
            "structured" => Ok(Mode::Structured),
            "auto" => Ok(Mode::Auto),
            other => Err(format!("unknown mode `{other}` (expected line, structured or auto)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Line => "line",
            Mode::Structured => "structured",
            Mode::Auto => "auto",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct DriverConfig {
    pub mode: Mode,
    pub merge: MergeOptions,
    pub render: RenderOptions,
    pub dump_matching: bool,
    pub parallelism: Parallelism,
}

/// Which merge produced the output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Line,
    Structured,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub text: String,
    pub conflicts: usize,
    pub strategy: Strategy,
    /// `class<TAB>base_line<TAB>summary` lines; structured merges only.
    pub conflict_report: String,
    /// Steps taken, for `--verbose`.
    pub trace: Vec<String>,
    pub warnings: Vec<String>,
    /// `idA idB score` lines per revision pair, when requested.
    pub matching_dump: Option<String>,
}

impl Outcome {
    pub fn is_clean(&self) -> bool {
        self.conflicts == 0
    }

    /// Merge-driver exit status: 0 clean, 1 conflicts.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.is_clean())
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("no language profile claims `{0}`; pass --profile or use --mode line")]
    NoProfile(String),
}

/// Explicit name wins, then the longest extension match on `path`. An
/// unknown explicit name is an error; an unmapped path is `Ok(None)`.
pub fn resolve_profile<'p>(
    profiles: &'p ProfileSet,
    explicit: Option<&str>,
    path: &str,
) -> Result<Option<&'p LanguageProfile>, DriverError> {
    match explicit {
        Some(name) => profiles
            .get(name)
            .map(Some)
            .ok_or_else(|| DriverError::UnknownProfile(name.to_string())),
        None => Ok(profiles.for_file(path)),
    }
}

fn line_outcome(
    base: &str,
    left: &str,
    right: &str,
    cfg: &DriverConfig,
    trace: Vec<String>,
    warnings: Vec<String>,
) -> Outcome {
    let m = diff3_merge(base, left, right, &cfg.render);
    Outcome {
        text: m.text,
        conflicts: m.conflict_count,
        strategy: Strategy::Line,
        conflict_report: String::new(),
        trace,
        warnings,
        matching_dump: None,
    }
}

/// Structured merge, or `Err(reason)` when it cannot be applied.
fn structured(
    base: &str,
    left: &str,
    right: &str,
    profile: &LanguageProfile,
    registry: &Registry,
    cfg: &DriverConfig,
    trace: &mut Vec<String>,
) -> Result<Outcome, String> {
    trace.push(format!("parse: base, left, right with profile `{}`", profile.name));
    let parse = |src: &str, origin: Origin| {
        registry
            .parse_revision(src, profile, origin)
            .map_err(|e| format!("{origin} does not parse: {e}"))
    };
    let b = parse(base, Origin::Base)?;
    let l = parse(left, Origin::Left)?;
    let r = parse(right, Origin::Right)?;
    trace.push(format!(
        "match: {} / {} / {} nodes",
        b.node_count(),
        l.node_count(),
        r.node_count()
    ));
    let matchings = compute_matchings(&b, &l, &r, cfg.parallelism);
    let dump = cfg.dump_matching.then(|| {
        format!(
            "# base-left\n{}# base-right\n{}# left-right\n{}",
            matchings.base_left.dump(),
            matchings.base_right.dump(),
            matchings.left_right.dump()
        )
    });
    let merged = three_way_merge(&b, &l, &r, &matchings, cfg.merge).map_err(|e| e.to_string())?;
    trace.push(format!("structured merge: {} conflict(s)", merged.conflicts.len()));
    Ok(Outcome {
        text: render(&merged, &cfg.render),
        conflicts: merged.conflicts.len(),
        strategy: Strategy::Structured,
        conflict_report: merged.report(),
        trace: Vec::new(),
        warnings: Vec::new(),
        matching_dump: dump,
    })
}

/// Merges three texts. `profile` is `None` when no profile claims the file;
/// structured mode then fails, auto mode keeps the line result.
pub fn merge_texts(
    base: &str,
    left: &str,
    right: &str,
    profile: Option<&LanguageProfile>,
    registry: &Registry,
    cfg: &DriverConfig,
) -> Result<Outcome, DriverError> {
    let mut trace = vec![format!("mode: {}", cfg.mode)];
    let mut warnings = Vec::new();
    match cfg.mode {
        Mode::Line => {
            trace.push("line merge".into());
            Ok(line_outcome(base, left, right, cfg, trace, warnings))
        }
        Mode::Structured => {
            let profile = profile.ok_or_else(|| DriverError::NoProfile("input".into()))?;
            match structured(base, left, right, profile, registry, cfg, &mut trace) {
                Ok(mut out) => {
                    out.trace = trace;
                    Ok(out)
                }
                Err(reason) => {
                    warnings.push(format!("falling back to line merge: {reason}"));
                    trace.push("line merge (fallback)".into());
                    Ok(line_outcome(base, left, right, cfg, trace, warnings))
                }
            }
        }
        Mode::Auto => {
            let line = diff3_merge(base, left, right, &cfg.render);
            trace.push(format!("line merge: {} conflict(s)", line.conflict_count));
            let line_result = |trace, warnings| Outcome {
                text: line.text.clone(),
                conflicts: line.conflict_count,
                strategy: Strategy::Line,
                conflict_report: String::new(),
                trace,
                warnings,
                matching_dump: None,
            };
            if line.clean {
                return Ok(line_result(trace, warnings));
            }
            let Some(profile) = profile else {
                warnings.push("no language profile for this file; keeping the line merge".into());
                return Ok(line_result(trace, warnings));
            };
            match structured(base, left, right, profile, registry, cfg, &mut trace) {
                Ok(mut out) => {
                    trace.push(format!(
                        "emitting structured result ({} vs {} line conflict(s))",
                        out.conflicts, line.conflict_count
                    ));
                    out.trace = trace;
                    Ok(out)
                }
                Err(reason) => {
                    warnings.push(format!("falling back to line merge: {reason}"));
                    Ok(line_result(trace, warnings))
                }
            }
        }
    }
}
