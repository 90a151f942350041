//! Scenario replay: run two merge tools on recorded merges, classify their
//! disagreements and time them.
//!
//! A scenario directory looks like
//!
//! ```text
//! <id>/scenario.meta          {"id": "...", "profile": "...", "test_command": "..."}
//! <id>/base/...   <id>/left/...   <id>/right/...   <id>/merged/...
//! ```
//!
//! where the four subtrees mirror each other. Only files changed on both
//! sides are merged.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cst::subtree_size;
use crate::driver::{merge_texts, DriverConfig, Mode};
use crate::langconfig::{LanguageProfile, ProfileSet};
use crate::matching::MatchingStore;
use crate::par::{self, Parallelism};
use crate::parser::{self, Registry};
use crate::render::normalize_with;

/// Runs per file; the first one is a warm-up and is not averaged.
pub const RUNS: usize = 10;
pub const WARMUP: usize = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed scenario.meta: {message}")]
    Meta { path: PathBuf, message: String },
    #[error("scenario `{0}` has no file modified on both sides")]
    NoMutualChanges(String),
    #[error("tool `{tool}` failed on {file}: {message}")]
    ToolFailed {
        tool: String,
        file: String,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub id: String,
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub test_command: Option<String>,
}

/// One mutually modified file. `rel` is relative to each revision root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileTriple {
    pub rel: PathBuf,
    pub base: PathBuf,
    pub left: PathBuf,
    pub right: PathBuf,
    pub expected: PathBuf,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub root: PathBuf,
    pub meta: ScenarioMeta,
    pub files: Vec<FileTriple>,
}

fn relative_files(root: &Path) -> Result<BTreeSet<PathBuf>, HarnessError> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeSet<PathBuf>) -> Result<(), HarnessError> {
        if !dir.exists() {
            return Ok(());
        }
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.insert(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = BTreeSet::new();
    walk(root, root, &mut out)?;
    Ok(out)
}

fn read(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(io_err(path))
}

impl Scenario {
    pub fn load(dir: &Path) -> Result<Scenario, HarnessError> {
        let meta_path = dir.join("scenario.meta");
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: ScenarioMeta = serde_json::from_str(&text).map_err(|e| HarnessError::Meta {
            path: meta_path.clone(),
            message: e.to_string(),
        })?;
        let mut files = Vec::new();
        for rel in relative_files(&dir.join("base"))? {
            let t = FileTriple {
                base: dir.join("base").join(&rel),
                left: dir.join("left").join(&rel),
                right: dir.join("right").join(&rel),
                expected: dir.join("merged").join(&rel),
                rel,
            };
            if !t.left.is_file() || !t.right.is_file() {
                continue;
            }
            let (b, l, r) = (read(&t.base)?, read(&t.left)?, read(&t.right)?);
            if l != b && r != b {
                files.push(t);
            }
        }
        if files.is_empty() {
            return Err(HarnessError::NoMutualChanges(meta.id));
        }
        Ok(Scenario {
            root: dir.to_path_buf(),
            meta,
            files,
        })
    }

    /// Every subdirectory holding a `scenario.meta`, sorted by name.
    pub fn load_suite(dir: &Path) -> Result<Vec<Scenario>, HarnessError> {
        let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("scenario.meta").is_file())
            .collect();
        dirs.sort();
        dirs.iter().map(|d| Scenario::load(d)).collect()
    }
}

/// What a tool reported for one file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToolStatus {
    Clean,
    Conflicts,
}

/// A merge procedure under comparison. Implementations follow the merge
/// driver contract: write the result to `out`, report clean or conflicts,
/// anything else is a failure.
pub trait MergeTool: Send + Sync {
    fn name(&self) -> &str;
    fn run(&self, base: &Path, left: &Path, right: &Path, out: &Path) -> Result<ToolStatus, String>;
}

/// An external command run as `CMD BASE LEFT RIGHT -o OUT` through `sh`.
#[derive(Clone, Debug)]
pub struct CommandTool {
    pub name: String,
    pub command: String,
}

impl CommandTool {
    pub fn new(command: impl Into<String>) -> Self {
        let command = command.into();
        CommandTool {
            name: command.clone(),
            command,
        }
    }
}

impl MergeTool for CommandTool {
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, base: &Path, left: &Path, right: &Path, out: &Path) -> Result<ToolStatus, String> {
        let output = Command::new("sh")
            .arg("-c")
            .arg(format!("{} \"$@\"", self.command))
            .arg("sh")
            .arg(base)
            .arg(left)
            .arg(right)
            .arg("-o")
            .arg(out)
            .output()
            .map_err(|e| format!("cannot start: {e}"))?;
        match output.status.code() {
            Some(0) => Ok(ToolStatus::Clean),
            Some(1) => Ok(ToolStatus::Conflicts),
            Some(code) => Err(format!(
                "exit status {code}: {}",
                String::from_utf8_lossy(&output.stderr).trim()
            )),
            None => Err("killed by a signal".into()),
        }
    }
}

/// An in-process tool, mostly for tests and benchmarks.
pub struct FnTool<F> {
    pub name: String,
    pub f: F,
}

impl<F> FnTool<F>
where
    F: Fn(&Path, &Path, &Path, &Path) -> Result<ToolStatus, String> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnTool { name: name.into(), f }
    }
}

impl<F> MergeTool for FnTool<F>
where
    F: Fn(&Path, &Path, &Path, &Path) -> Result<ToolStatus, String> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, base: &Path, left: &Path, right: &Path, out: &Path) -> Result<ToolStatus, String> {
        (self.f)(base, left, right, out)
    }
}

/// The built-in merge driver as a tool. Profiles are resolved from the
/// file extension.
#[derive(Clone, Debug)]
pub struct DriverTool {
    pub name: String,
    pub config: DriverConfig,
    pub profiles: ProfileSet,
    pub registry: Registry,
}

impl DriverTool {
    pub fn new(name: impl Into<String>, config: DriverConfig) -> Self {
        DriverTool {
            name: name.into(),
            config,
            profiles: ProfileSet::bundled(),
            registry: Registry::with_builtins(),
        }
    }

    /// `line`, `structured` or `auto`, with default options.
    pub fn for_mode(mode: Mode) -> Self {
        let config = DriverConfig {
            mode,
            ..DriverConfig::default()
        };
        DriverTool::new(format!("builtin:{mode}"), config)
    }
}

impl MergeTool for DriverTool {
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, base: &Path, left: &Path, right: &Path, out: &Path) -> Result<ToolStatus, String> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
        let (b, l, r) = (read(base)?, read(left)?, read(right)?);
        let profile = self.profiles.for_file(&left.to_string_lossy());
        let outcome = merge_texts(&b, &l, &r, profile, &self.registry, &self.config).map_err(|e| e.to_string())?;
        fs::write(out, &outcome.text).map_err(|e| format!("{}: {e}", out.display()))?;
        Ok(if outcome.is_clean() {
            ToolStatus::Clean
        } else {
            ToolStatus::Conflicts
        })
    }
}

/// Runs `f` `runs` times back to back and returns the first result and the
/// mean wall time in milliseconds of the runs after the first `warmup`.
pub fn timed_mean<T, E>(runs: usize, warmup: usize, mut f: impl FnMut() -> Result<T, E>) -> Result<(T, f64), E> {
    assert!(runs > warmup, "need at least one measured run");
    let mut first = None;
    let mut total = 0.0;
    for i in 0..runs {
        let start = Instant::now();
        let r = f()?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        if i >= warmup {
            total += ms;
        }
        if first.is_none() {
            first = Some(r);
        }
    }
    Ok((first.expect("runs > 0"), total / (runs - warmup) as f64))
}

/// A tool's result on a scenario.
#[derive(Clone, Debug)]
pub struct ToolRun {
    pub conflicts: bool,
    /// Output path per file, in scenario file order.
    pub outputs: Vec<PathBuf>,
    /// Sum over files of the per-file mean.
    pub ms: f64,
}

/// Runs `tool` on every file of the scenario with the timing protocol.
/// Outputs go under `out_dir`.
pub fn measure(tool: &dyn MergeTool, scenario: &Scenario, out_dir: &Path) -> Result<ToolRun, HarnessError> {
    let mut run = ToolRun {
        conflicts: false,
        outputs: Vec::new(),
        ms: 0.0,
    };
    for f in &scenario.files {
        let out = out_dir.join(&f.rel);
        if let Some(parent) = out.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let (status, ms) =
            timed_mean(RUNS, WARMUP, || tool.run(&f.base, &f.left, &f.right, &out)).map_err(|message| {
                HarnessError::ToolFailed {
                    tool: tool.name().to_string(),
                    file: f.rel.display().to_string(),
                    message,
                }
            })?;
        run.conflicts |= status == ToolStatus::Conflicts;
        run.outputs.push(out);
        run.ms += ms;
    }
    Ok(run)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    None,
    AfpA,
    AfpB,
    AfnA,
    AfnB,
    Unresolved(String),
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::None => "none",
            Classification::AfpA => "aFP(A)",
            Classification::AfpB => "aFP(B)",
            Classification::AfnA => "aFN(A)",
            Classification::AfnB => "aFN(B)",
            Classification::Unresolved(_) => "unresolved",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parses both texts, normalizes them and checks that their roots match
/// completely.
pub fn check_equivalent(
    registry: &Registry,
    a: &str,
    b: &str,
    profile: &LanguageProfile,
) -> Result<bool, parser::Error> {
    let a = registry.parse(&normalize_with(registry, a, profile)?, profile)?;
    let b = registry.parse(&normalize_with(registry, b, profile)?, profile)?;
    let mut store = MatchingStore::new(&a, &b);
    let score = store.match_roots();
    Ok(score == subtree_size(a.root()) && score == subtree_size(b.root()))
}

/// [`check_equivalent`] with parse failures counted as "not equivalent".
pub fn syntactic_equivalent(a: &str, b: &str, profile: &LanguageProfile) -> bool {
    check_equivalent(&Registry::with_builtins(), a, b, profile).unwrap_or(false)
}

/// Compares files that no profile claims: identical up to trailing
/// whitespace on each line.
fn plain_equivalent(a: &str, b: &str) -> bool {
    fn lines(s: &str) -> Vec<&str> {
        s.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect()
    }
    lines(a) == lines(b)
}

/// Context for [`classify`].
pub struct Classifier<'c> {
    pub registry: &'c Registry,
    pub profiles: &'c ProfileSet,
    /// Scratch space for staged test runs.
    pub work_dir: &'c Path,
}

fn copy_tree(from: &Path, to: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(to).map_err(io_err(to))?;
    for rel in relative_files(from)? {
        let dst = to.join(&rel);
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::copy(from.join(&rel), &dst).map_err(io_err(&dst))?;
    }
    Ok(())
}

impl Classifier<'_> {
    fn profile_for(&self, scenario: &Scenario, rel: &Path) -> Option<&LanguageProfile> {
        match &scenario.meta.profile {
            Some(name) => self.profiles.get(name),
            None => self.profiles.for_file(&rel.to_string_lossy()),
        }
    }

    fn outputs_match_expected(&self, scenario: &Scenario, outputs: &[PathBuf]) -> bool {
        scenario.files.iter().zip(outputs).all(|(f, out)| {
            let (Ok(got), Ok(want)) = (fs::read_to_string(out), fs::read_to_string(&f.expected)) else {
                return false;
            };
            match self.profile_for(scenario, &f.rel) {
                Some(p) => check_equivalent(self.registry, &got, &want, p).unwrap_or(false),
                None => plain_equivalent(&got, &want),
            }
        })
    }

    /// Copies the expected merge tree, overlays the clean tool's outputs and
    /// runs the test command there. `Ok(true)` on success.
    fn run_tests(&self, scenario: &Scenario, command: &str, outputs: &[PathBuf]) -> Result<bool, String> {
        let stage = self.work_dir.join(format!("stage-{}", scenario.meta.id));
        if stage.exists() {
            fs::remove_dir_all(&stage).map_err(|e| e.to_string())?;
        }
        copy_tree(&scenario.root.join("merged"), &stage).map_err(|e| e.to_string())?;
        for (f, out) in scenario.files.iter().zip(outputs) {
            let dst = stage.join(&f.rel);
            if let Some(parent) = dst.parent() {
                fs::create_dir_all(parent).map_err(|e| e.to_string())?;
            }
            fs::copy(out, &dst).map_err(|e| e.to_string())?;
        }
        let status = Command::new("sh")
            .arg("-c")
            .arg(command)
            .current_dir(&stage)
            .output()
            .map_err(|e| format!("test command did not start: {e}"))?;
        match status.status.code() {
            Some(0) => Ok(true),
            Some(126 | 127) => Err(format!(
                "test command could not run: {}",
                String::from_utf8_lossy(&status.stderr).trim()
            )),
            Some(_) => Ok(false),
            None => Err("test command crashed (killed by a signal)".into()),
        }
    }

    /// Decides who was wrong when exactly one of the tools conflicted.
    pub fn classify(&self, scenario: &Scenario, a: &ToolRun, b: &ToolRun) -> Classification {
        if a.conflicts == b.conflicts {
            return Classification::None;
        }
        let a_conflicts = a.conflicts;
        let clean = if a_conflicts { b } else { a };
        let (afp_conflicting, afn_clean) = if a_conflicts {
            (Classification::AfpA, Classification::AfnB)
        } else {
            (Classification::AfpB, Classification::AfnA)
        };
        if self.outputs_match_expected(scenario, &clean.outputs) {
            return afp_conflicting;
        }
        let Some(command) = &scenario.meta.test_command else {
            return Classification::Unresolved("output differs from the merge and no test command".into());
        };
        match self.run_tests(scenario, command, &clean.outputs) {
            Ok(true) => afp_conflicting,
            Ok(false) => afn_clean,
            Err(diagnostic) => Classification::Unresolved(diagnostic),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub id: String,
    pub a_conflicts: bool,
    pub b_conflicts: bool,
    pub agreement: bool,
    pub classification: Classification,
    pub a_ms: f64,
    pub b_ms: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteResult {
    pub reports: Vec<ScenarioReport>,
    /// Scenarios dropped because a tool failed, with the reason.
    pub excluded: Vec<(String, String)>,
}

/// Runs both tools on every scenario and classifies the outcome. Scenarios
/// may run concurrently; the timing loop of each file stays sequential.
pub fn run_suite(
    scenarios: &[Scenario],
    tool_a: &dyn MergeTool,
    tool_b: &dyn MergeTool,
    classifier: &Classifier<'_>,
    mode: Parallelism,
) -> SuiteResult {
    let results = par::map(mode, scenarios, |s| {
        let dir = classifier.work_dir.join(&s.meta.id);
        let a = measure(tool_a, s, &dir.join("a"))?;
        let b = measure(tool_b, s, &dir.join("b"))?;
        let classification = classifier.classify(s, &a, &b);
        Ok::<_, HarnessError>(ScenarioReport {
            id: s.meta.id.clone(),
            a_conflicts: a.conflicts,
            b_conflicts: b.conflicts,
            agreement: a.conflicts == b.conflicts,
            classification,
            a_ms: a.ms,
            b_ms: b.ms,
        })
    });
    let mut out = SuiteResult::default();
    for (s, r) in scenarios.iter().zip(results) {
        match r {
            Ok(r) => out.reports.push(r),
            Err(e) => out.excluded.push((s.meta.id.clone(), e.to_string())),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TimingSummary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl TimingSummary {
    pub fn of(values: &[f64]) -> TimingSummary {
        if values.is_empty() {
            return TimingSummary::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        TimingSummary {
            min: v[0],
            median,
            mean: v.iter().sum::<f64>() / n as f64,
            max: v[n - 1],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub scenarios: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub afp_a: usize,
    pub afp_b: usize,
    pub afn_a: usize,
    pub afn_b: usize,
    pub unresolved: usize,
    pub a_timing: TimingSummary,
    pub b_timing: TimingSummary,
}

impl Summary {
    pub fn of(reports: &[ScenarioReport]) -> Summary {
        let count = |c: &Classification| reports.iter().filter(|r| &r.classification == c).count();
        let a: Vec<f64> = reports.iter().map(|r| r.a_ms).collect();
        let b: Vec<f64> = reports.iter().map(|r| r.b_ms).collect();
        Summary {
            scenarios: reports.len(),
            agreements: reports.iter().filter(|r| r.agreement).count(),
            disagreements: reports.iter().filter(|r| !r.agreement).count(),
            afp_a: count(&Classification::AfpA),
            afp_b: count(&Classification::AfpB),
            afn_a: count(&Classification::AfnA),
            afn_b: count(&Classification::AfnB),
            unresolved: reports
                .iter()
                .filter(|r| matches!(r.classification, Classification::Unresolved(_)))
                .count(),
            a_timing: TimingSummary::of(&a),
            b_timing: TimingSummary::of(&b),
        }
    }

    fn pct(&self, n: usize) -> f64 {
        if self.scenarios == 0 {
            0.0
        } else {
            100.0 * n as f64 / self.scenarios as f64
        }
    }

    pub fn agreement_pct(&self) -> f64 {
        self.pct(self.agreements)
    }

    pub fn disagreement_pct(&self) -> f64 {
        self.pct(self.disagreements)
    }
}

pub const TSV_HEADER: &str = "scenario_id\ta_conflicts\tb_conflicts\tclassification\ta_ms\tb_ms";

pub fn report_tsv(reports: &[ScenarioReport]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.3}\t{:.3}",
            r.id, r.a_conflicts, r.b_conflicts, r.classification, r.a_ms, r.b_ms
        );
    }
    out
}

pub fn report_text(result: &SuiteResult) -> String {
    let s = Summary::of(&result.reports);
    let mut out = String::new();
    let _ = writeln!(out, "scenarios: {}", s.scenarios);
    let _ = writeln!(
        out,
        "agreement: {} ({:.2}%)   disagreement: {} ({:.2}%)",
        s.agreements,
        s.agreement_pct(),
        s.disagreements,
        s.disagreement_pct()
    );
    let _ = writeln!(out, "aFP(A): {}   aFN(A): {}", s.afp_a, s.afn_a);
    let _ = writeln!(out, "aFP(B): {}   aFN(B): {}", s.afp_b, s.afn_b);
    let _ = writeln!(out, "unresolved: {}", s.unresolved);
    for (name, t) in [("A", s.a_timing), ("B", s.b_timing)] {
        let _ = writeln!(
            out,
            "time {name} (ms): min {:.3}  median {:.3}  mean {:.3}  max {:.3}",
            t.min, t.median, t.mean, t.max
        );
    }
    for r in &result.reports {
        if let Classification::Unresolved(why) = &r.classification {
            let _ = writeln!(out, "unresolved {}: {why}", r.id);
        }
    }
    for (id, why) in &result.excluded {
        let _ = writeln!(out, "excluded {id}: {why}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    fn write(path: &Path, text: &str) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    fn scenario(root: &Path, id: &str, files: &[(&str, &str, &str, &str, &str)], test: Option<&str>) -> Scenario {
        let dir = root.join(id);
        for (rel, b, l, r, m) in files {
            write(&dir.join("base").join(rel), b);
            write(&dir.join("left").join(rel), l);
            write(&dir.join("right").join(rel), r);
            write(&dir.join("merged").join(rel), m);
        }
        let meta = ScenarioMeta {
            id: id.into(),
            profile: None,
            test_command: test.map(String::from),
        };
        write(&dir.join("scenario.meta"), &serde_json::to_string(&meta).unwrap());
        Scenario::load(&dir).unwrap()
    }

    #[test]
    fn warmup_is_discarded() {
        let calls = AtomicUsize::new(0);
        let (_, ms) = timed_mean(RUNS, WARMUP, || {
            let first = calls.fetch_add(1, Ordering::SeqCst) == 0;
            std::thread::sleep(Duration::from_millis(if first { 60 } else { 4 }));
            Ok::<_, ()>(())
        })
        .unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 10);
        assert!(ms < 10.0, "{ms}");
    }

    #[test]
    fn only_mutual_changes_count() {
        let tmp = tempfile::tempdir().unwrap();
        let s = scenario(
            tmp.path(),
            "s",
            &[
                ("a.txt", "x\n", "y\n", "z\n", "y\n"),
                ("b.txt", "x\n", "x\n", "z\n", "z\n"),
            ],
            None,
        );
        assert_eq!(s.files.len(), 1);
        assert_eq!(s.files[0].rel, PathBuf::from("a.txt"));

        let dir = tmp.path().join("none");
        write(&dir.join("base/a.txt"), "x");
        write(&dir.join("left/a.txt"), "x");
        write(&dir.join("right/a.txt"), "y");
        write(&dir.join("scenario.meta"), r#"{"id": "none"}"#);
        assert!(matches!(Scenario::load(&dir), Err(HarnessError::NoMutualChanges(_))));
        write(&dir.join("scenario.meta"), r#"{"id": "none", "bogus": 1}"#);
        assert!(matches!(Scenario::load(&dir), Err(HarnessError::Meta { .. })));
    }

    #[test]
    fn equivalence_ignores_layout_and_member_order() {
        let p = LanguageProfile::minilang();
        let a = "class A { int x; void f() { a(); } }";
        let b = "class A {\n  void f() {\n    a();\n  }\n  int x;\n}\n";
        assert!(syntactic_equivalent(a, b, &p));
        assert!(syntactic_equivalent(b, a, &p));
        assert!(syntactic_equivalent(a, a, &p));
        assert!(!syntactic_equivalent(a, "class A { int x; void f() { b(); } }", &p));
        assert!(!syntactic_equivalent(a, "class {", &p));
    }

    #[test]
    fn command_tool_contract() {
        let tmp = tempfile::tempdir().unwrap();
        let s = scenario(tmp.path(), "s", &[("a.txt", "x\n", "y\n", "z\n", "y\n")], None);
        let f = &s.files[0];
        let out = tmp.path().join("out.txt");
        let ok = CommandTool::new("f() { cp \"$2\" \"$5\"; }; f");
        assert_eq!(ok.run(&f.base, &f.left, &f.right, &out), Ok(ToolStatus::Clean));
        assert_eq!(fs::read_to_string(&out).unwrap(), "y\n");
        let conflict = CommandTool::new("f() { exit 1; }; f");
        assert_eq!(
            conflict.run(&f.base, &f.left, &f.right, &out),
            Ok(ToolStatus::Conflicts)
        );
        assert!(CommandTool::new("f() { exit 3; }; f")
            .run(&f.base, &f.left, &f.right, &out)
            .is_err());
    }

    #[test]
    fn failing_tool_excludes_scenario() {
        let tmp = tempfile::tempdir().unwrap();
        let s = scenario(tmp.path(), "s", &[("a.txt", "x\n", "y\n", "z\n", "y\n")], None);
        let good = FnTool::new("good", |_: &Path, l: &Path, _: &Path, o: &Path| {
            fs::copy(l, o).map(|_| ToolStatus::Clean).map_err(|e| e.to_string())
        });
        let bad = FnTool::new("bad", |_: &Path, _: &Path, _: &Path, _: &Path| Err("boom".to_string()));
        let registry = Registry::with_builtins();
        let profiles = ProfileSet::bundled();
        let work = tmp.path().join("work");
        let c = Classifier {
            registry: &registry,
            profiles: &profiles,
            work_dir: &work,
        };
        let r = run_suite(&[s], &good, &bad, &c, Parallelism::Sequential);
        assert!(r.reports.is_empty());
        assert_eq!(r.excluded.len(), 1);
        assert!(report_text(&r).contains("excluded s"));
    }

    #[test]
    fn empty_report_is_valid() {
        let s = Summary::of(&[]);
        assert_eq!(s.scenarios, 0);
        assert_eq!(report_tsv(&[]), format!("{TSV_HEADER}\n"));
        assert!(report_text(&SuiteResult::default()).starts_with("scenarios: 0\n"));
    }

    #[test]
    fn timing_summary() {
        let t = TimingSummary::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(
            t,
            TimingSummary {
                min: 1.0,
                median: 2.5,
                mean: 2.5,
                max: 4.0
            }
        );
    }
}
