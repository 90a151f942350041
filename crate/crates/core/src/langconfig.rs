//! Declarative per-language configuration.
//!
//! A [`LanguageProfile`] tells the merge engine which node kinds may have
//! their children permuted, how to compute sibling-unique identifiers, which
//! post-parse handlers to run and which kinds to treat as opaque text.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cst::{CstError, Node, NodeContent, Span, Tree};
use crate::parser::Registry;

const MINILANG_PROFILE: &str = include_str!("../profiles/minilang.profile");
const MINILANG_NAMES_PROFILE: &str = include_str!("../profiles/minilang-names.profile");

/// Bundled profile documents as `(file name, contents)`.
pub const BUNDLED_PROFILES: [(&str, &str); 2] = [
    ("minilang.profile", MINILANG_PROFILE),
    ("minilang-names.profile", MINILANG_NAMES_PROFILE),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed profile {origin}: {message}")]
    Malformed { origin: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown handler `{0}`")]
    UnknownHandler(String),
    #[error("unknown parser backend `{0}`")]
    UnknownBackend(String),
    #[error("kind `{kind}` is listed in {list} but backend `{backend}` only produces it as a Terminal")]
    TerminalKind {
        kind: String,
        list: &'static str,
        backend: String,
    },
    #[error("extension `{extension}` is claimed by both `{first}` and `{second}`")]
    DuplicateExtension {
        extension: String,
        first: String,
        second: String,
    },
    #[error("duplicate profile name `{0}`")]
    DuplicateProfile(String),
    #[error(
        "identifier `{identifier}` is not unique under `{parent}`: {}:{} and {}:{}",
        first.0, first.1, second.0, second.1
    )]
    IdentifierCollision {
        identifier: String,
        parent: String,
        /// `(line, column)` of each occurrence.
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error(transparent)]
    Tree(#[from] CstError),
}

/// Which children a capture step descends into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Occurrence {
    Nth(usize),
    All,
}

impl Serialize for Occurrence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Occurrence::Nth(n) => s.serialize_u64(*n as u64),
            Occurrence::All => s.serialize_str("*"),
        }
    }
}

impl<'de> Deserialize<'de> for Occurrence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Nth(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Nth(n) => Ok(Occurrence::Nth(n)),
            Raw::Text(t) if t == "*" => Ok(Occurrence::All),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "index must be a number or \"*\", got {t:?}"
            ))),
        }
    }
}

/// One step of a capture path: the `index`-th child of kind `kind`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    pub kind: String,
    pub index: Occurrence,
}

/// What to do when two siblings compose the same identifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionPolicy {
    /// Reject the tree.
    #[default]
    Error,
    /// Suffix every identifier with `#k`, its occurrence among siblings
    /// sharing the same composed text.
    Ordinal,
}

/// Computes an identifier for nodes of `target_kind`.
///
/// Each capture path yields the Terminal values it reaches (joined with
/// `,` when a step selects all occurrences); `compose` splices them into
/// `{0}`, `{1}`, ... placeholders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRule", into = "RawRule")]
pub struct IdentifierRule {
    pub target_kind: String,
    pub captures: Vec<Vec<Selector>>,
    pub compose: String,
    pub on_collision: CollisionPolicy,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    target_kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capture_path: Option<Vec<Selector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capture_paths: Option<Vec<Vec<Selector>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compose: Option<String>,
    #[serde(default)]
    on_collision: CollisionPolicy,
}

impl TryFrom<RawRule> for IdentifierRule {
    type Error = String;

    fn try_from(raw: RawRule) -> Result<Self, String> {
        let captures = match (raw.capture_path, raw.capture_paths) {
            (Some(p), None) => vec![p],
            (None, Some(ps)) => ps,
            (None, None) => Vec::new(),
            (Some(_), Some(_)) => {
                return Err(format!(
                    "rule for `{}` sets both capture_path and capture_paths",
                    raw.target_kind
                ))
            }
        };
        let compose = raw.compose.unwrap_or_else(|| "{0}".to_string());
        for placeholder in placeholders(&compose) {
            if placeholder >= captures.len() {
                return Err(format!(
                    "rule for `{}` uses {{{placeholder}}} but has {} capture(s)",
                    raw.target_kind,
                    captures.len()
                ));
            }
        }
        Ok(IdentifierRule {
            target_kind: raw.target_kind,
            captures,
            compose,
            on_collision: raw.on_collision,
        })
    }
}

impl From<IdentifierRule> for RawRule {
    fn from(rule: IdentifierRule) -> Self {
        let (capture_path, capture_paths) = if rule.captures.len() == 1 {
            (rule.captures.into_iter().next(), None)
        } else {
            (None, Some(rule.captures))
        };
        RawRule {
            target_kind: rule.target_kind,
            capture_path,
            capture_paths,
            compose: Some(rule.compose),
            on_collision: rule.on_collision,
        }
    }
}

fn placeholders(template: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                if let Ok(n) = after[..close].parse() {
                    out.push(n);
                }
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

impl IdentifierRule {
    /// Composed identifier for `node`, or `None` when a numbered capture is
    /// missing or the result is empty.
    pub fn apply(&self, node: &Node) -> Option<String> {
        let mut values = Vec::with_capacity(self.captures.len());
        for path in &self.captures {
            let mut current = vec![node];
            for step in path {
                let mut next = Vec::new();
                for n in current {
                    let matching = n.children().iter().filter(|c| c.kind == step.kind);
                    match step.index {
                        Occurrence::Nth(i) => next.extend(matching.skip(i).take(1)),
                        Occurrence::All => next.extend(matching),
                    }
                }
                current = next;
            }
            if current.is_empty() && path.iter().all(|s| s.index != Occurrence::All) {
                return None;
            }
            let captured: Vec<String> = current.into_iter().map(captured_text).collect();
            values.push(captured.join(","));
        }
        let mut out = String::new();
        let mut rest = self.compose.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            match after
                .find('}')
                .and_then(|c| after[..c].parse::<usize>().ok().map(|n| (c, n)))
            {
                Some((close, n)) => {
                    out.push_str(&values[n]);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        (!out.is_empty()).then_some(out)
    }
}

fn captured_text(node: &Node) -> String {
    match node.value() {
        Some(v) => v.to_string(),
        None => node.descendants().filter_map(Node::value).collect::<Vec<_>>().join(" "),
    }
}

fn default_backend() -> String {
    String::new()
}

/// A language description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageProfile {
    pub name: String,
    /// Parser backend; defaults to `name`.
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub extensions: Vec<String>,
    #[serde(default)]
    pub unordered_kinds: BTreeSet<String>,
    #[serde(default)]
    pub identifier_rules: Vec<IdentifierRule>,
    #[serde(default)]
    pub handlers: Vec<String>,
    #[serde(default)]
    pub flatten_kinds: BTreeSet<String>,
}

impl LanguageProfile {
    /// Parses and validates a profile document against the built-in
    /// backends and handlers.
    pub fn from_document(text: &str, origin: &str) -> Result<Self, ConfigError> {
        Self::from_document_with(text, origin, &Registry::with_builtins())
    }

    pub fn from_document_with(text: &str, origin: &str, registry: &Registry) -> Result<Self, ConfigError> {
        let mut profile: LanguageProfile = serde_json::from_str(text).map_err(|e| ConfigError::Malformed {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        if profile.backend.is_empty() {
            profile.backend = profile.name.clone();
        }
        profile.validate(registry)?;
        Ok(profile)
    }

    /// The bundled MiniLang profile.
    pub fn minilang() -> Self {
        Self::from_document(MINILANG_PROFILE, "minilang.profile").expect("bundled profile is valid")
    }

    /// MiniLang with name-only method identifiers (overloads disambiguated
    /// by position).
    pub fn minilang_names() -> Self {
        Self::from_document(MINILANG_NAMES_PROFILE, "minilang-names.profile").expect("bundled profile is valid")
    }

    pub fn validate(&self, registry: &Registry) -> Result<(), ConfigError> {
        for h in &self.handlers {
            if !registry.handlers().contains(h) {
                return Err(ConfigError::UnknownHandler(h.clone()));
            }
        }
        let backend = registry
            .backend(&self.backend)
            .ok_or_else(|| ConfigError::UnknownBackend(self.backend.clone()))?;
        let terminal_only = backend.terminal_kinds();
        for (list, kinds) in [
            ("unordered_kinds", &self.unordered_kinds),
            ("flatten_kinds", &self.flatten_kinds),
        ] {
            if let Some(kind) = kinds.iter().find(|k| terminal_only.contains(&k.as_str())) {
                return Err(ConfigError::TerminalKind {
                    kind: kind.clone(),
                    list,
                    backend: self.backend.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn rule_for(&self, kind: &str) -> Option<&IdentifierRule> {
        self.identifier_rules.iter().find(|r| r.target_kind == kind)
    }

    pub fn claims(&self, file_name: &str) -> bool {
        self.extensions.iter().any(|ext| file_name.ends_with(ext.as_str()))
    }
}

/// Reads and validates a profile file.
pub fn load_profile(path: &Path) -> Result<LanguageProfile, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    LanguageProfile::from_document(&text, &path.display().to_string())
}

/// A set of profiles with unique names and extension claims.
#[derive(Clone, Debug, Default)]
pub struct ProfileSet {
    profiles: Vec<LanguageProfile>,
}

impl ProfileSet {
    /// The bundled profiles.
    pub fn bundled() -> Self {
        let mut set = ProfileSet::default();
        for (name, text) in BUNDLED_PROFILES {
            set.add(LanguageProfile::from_document(text, name).expect("bundled profile is valid"))
                .expect("bundled profiles do not clash");
        }
        set
    }

    pub fn add(&mut self, profile: LanguageProfile) -> Result<(), ConfigError> {
        if self.get(&profile.name).is_some() {
            return Err(ConfigError::DuplicateProfile(profile.name));
        }
        for ext in &profile.extensions {
            if let Some(other) = self.profiles.iter().find(|p| p.extensions.contains(ext)) {
                return Err(ConfigError::DuplicateExtension {
                    extension: ext.clone(),
                    first: other.name.clone(),
                    second: profile.name.clone(),
                });
            }
        }
        self.profiles.push(profile);
        Ok(())
    }

    /// Adds every `*.profile` file in `dir`, in file-name order.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), ConfigError> {
        let io = |source| ConfigError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "profile"))
            .collect();
        paths.sort();
        for path in paths {
            self.add(load_profile(&path)?)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&LanguageProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    /// Profile claiming the longest matching suffix of `file_name`.
    pub fn for_file(&self, file_name: &str) -> Option<&LanguageProfile> {
        self.profiles
            .iter()
            .flat_map(|p| p.extensions.iter().map(move |e| (p, e)))
            .filter(|(_, e)| file_name.ends_with(e.as_str()))
            .max_by_key(|(_, e)| e.len())
            .map(|(p, _)| p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LanguageProfile> {
        self.profiles.iter()
    }
}

/// A handler rewrites a parsed tree. It receives the root and the source.
pub type Handler = fn(Node, &str) -> Node;

#[derive(Clone, Debug)]
pub struct HandlerRegistry {
    handlers: BTreeMap<String, Handler>,
}

impl HandlerRegistry {
    pub fn with_builtins() -> Self {
        let mut handlers: BTreeMap<String, Handler> = BTreeMap::new();
        handlers.insert("group_imports".into(), group_imports);
        HandlerRegistry { handlers }
    }

    pub fn register(&mut self, name: impl Into<String>, handler: Handler) {
        self.handlers.insert(name.into(), handler);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.handlers.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<Handler> {
        self.handlers.get(name).copied()
    }
}

/// Runs the profile's handlers in listed order.
pub fn apply_handlers(tree: Tree, profile: &LanguageProfile, handlers: &HandlerRegistry) -> Result<Tree, ConfigError> {
    let mut tree = tree;
    for name in &profile.handlers {
        let handler = handlers
            .get(name)
            .ok_or_else(|| ConfigError::UnknownHandler(name.clone()))?;
        tree = tree.map_root(handler)?;
    }
    Ok(tree)
}

/// Wraps the first contiguous run of `import_decl` children of the root in
/// an unordered `import_group` node.
pub fn group_imports(mut root: Node, source: &str) -> Node {
    let origin = root.origin;
    let Some(children) = root.children_mut() else {
        return root;
    };
    let Some(first) = children.iter().position(|c| c.kind == "import_decl") else {
        return root;
    };
    let len = children[first..].iter().take_while(|c| c.kind == "import_decl").count();
    let imports: Vec<Node> = children.drain(first..first + len).collect();
    let start = imports[0].span;
    let end = imports[len - 1].span;
    let span = Span {
        start_byte: start.start_byte,
        start_line: start.start_line,
        start_col: start.start_col,
        end_byte: end.end_byte,
        end_line: end.end_line,
        end_col: end.end_col,
    };
    debug_assert!(span.end_byte <= source.len());
    let mut group = Node::non_terminal("import_group", imports, span);
    group.origin = origin;
    group.set_unordered(true);
    children.insert(first, group);
    root
}

/// Computes identifiers for every node whose kind has a rule and clears
/// them everywhere else.
pub fn assign_identifiers(tree: Tree, profile: &LanguageProfile) -> Result<Tree, ConfigError> {
    let mut error = None;
    let (root, source, language) = tree.into_parts();
    let root = assign_rec(root, profile, &mut error);
    // report our own collision before the tree's generic check does
    match error {
        Some(e) => Err(e),
        None => Ok(Tree::new(root, source, language)?),
    }
}

fn assign_rec(mut node: Node, profile: &LanguageProfile, error: &mut Option<ConfigError>) -> Node {
    node.identifier = profile.rule_for(&node.kind).and_then(|r| r.apply(&node));
    let kind = node.kind.clone();
    if let NodeContent::NonTerminal { children, .. } = &mut node.content {
        let taken = std::mem::take(children);
        *children = taken.into_iter().map(|c| assign_rec(c, profile, error)).collect();
        let mut ordinals: BTreeMap<String, usize> = BTreeMap::new();
        for child in children.iter_mut() {
            let ordinal = profile
                .rule_for(&child.kind)
                .is_some_and(|r| r.on_collision == CollisionPolicy::Ordinal);
            if let (true, Some(id)) = (ordinal, &child.identifier) {
                let k = ordinals.entry(format!("{}\u{0}{}", child.kind, id)).or_insert(0);
                child.identifier = Some(format!("{id}#{k}"));
                *k += 1;
            }
        }
        if error.is_none() {
            let mut seen: BTreeMap<&str, &Node> = BTreeMap::new();
            for child in children.iter() {
                if let Some(id) = &child.identifier {
                    if let Some(first) = seen.insert(id, child) {
                        *error = Some(ConfigError::IdentifierCollision {
                            identifier: id.clone(),
                            parent: kind.clone(),
                            first: (first.span.start_line, first.span.start_col),
                            second: (child.span.start_line, child.span.start_col),
                        });
                        break;
                    }
                }
            }
        }
    }
    node
}

/// Replaces every node whose kind is in `flatten_kinds` by a Terminal
/// holding its exact source text.
pub fn flatten(tree: Tree, profile: &LanguageProfile) -> Result<Tree, ConfigError> {
    if profile.flatten_kinds.is_empty() {
        return Ok(tree);
    }
    Ok(tree.map_root(|root, source| flatten_rec(root, &profile.flatten_kinds, source))?)
}

fn flatten_rec(mut node: Node, kinds: &BTreeSet<String>, source: &str) -> Node {
    if kinds.contains(&node.kind) && !node.is_terminal() {
        let value = node.text(source).to_string();
        node.content = NodeContent::Terminal { value };
        return node;
    }
    if let Some(children) = node.children_mut() {
        let taken = std::mem::take(children);
        *children = taken.into_iter().map(|c| flatten_rec(c, kinds, source)).collect();
    }
    node
}

/// Sets the unordered flag on NonTerminals of the profile's unordered kinds.
pub fn mark_unordered(tree: Tree, profile: &LanguageProfile) -> Result<Tree, ConfigError> {
    fn rec(node: &mut Node, kinds: &BTreeSet<String>) {
        let flag = kinds.contains(&node.kind);
        node.set_unordered(flag);
        if let Some(children) = node.children_mut() {
            for c in children {
                rec(c, kinds);
            }
        }
    }
    Ok(tree.map_root(|mut root, _| {
        rec(&mut root, &profile.unordered_kinds);
        root
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cst::deep_equal;
    use crate::parser::parse_minilang;
    use proptest::prelude::*;

    const ACCOUNT_BASE: &str = "class Account { int debit(int amount) { balance -= amount; return balance; } }";

    fn find<'a>(tree: &'a Tree, kind: &str) -> &'a Node {
        tree.root().descendants().find(|n| n.kind == kind).unwrap()
    }

    #[test]
    fn class_name_becomes_identifier() {
        let profile = LanguageProfile::minilang();
        let tree = assign_identifiers(parse_minilang(ACCOUNT_BASE).unwrap(), &profile).unwrap();
        assert_eq!(find(&tree, "class_decl").identifier.as_deref(), Some("Account"));
        assert_eq!(find(&tree, "method_decl").identifier.as_deref(), Some("debit(int)"));
        assert_eq!(find(&tree, "block").identifier, None);
    }

    #[test]
    fn signatures_join_parameter_types() {
        let profile = LanguageProfile::minilang();
        let src = "class A { void f() { } void f(int a, List<String> b) { } }";
        let tree = assign_identifiers(parse_minilang(src).unwrap(), &profile).unwrap();
        let ids: Vec<_> = tree
            .root()
            .descendants()
            .filter(|n| n.kind == "method_decl")
            .map(|n| n.identifier.clone().unwrap())
            .collect();
        assert_eq!(ids, ["f()", "f(int,List<String>)"]);
    }

    #[test]
    fn name_only_rule_numbers_overloads() {
        let profile = LanguageProfile::minilang_names();
        let src = "class A { void init() { } void init(long s) { } int x; }";
        let tree = assign_identifiers(parse_minilang(src).unwrap(), &profile).unwrap();
        let ids: Vec<_> = find(&tree, "class_body")
            .children()
            .iter()
            .map(|n| n.identifier.clone().unwrap())
            .collect();
        assert_eq!(ids, ["init#0", "init#1", "x"]);
    }

    #[test]
    fn collision_names_both_spans() {
        let profile = LanguageProfile::minilang();
        let err = assign_identifiers(parse_minilang("class A {\n int x;\n int x;\n}").unwrap(), &profile).unwrap_err();
        match err {
            ConfigError::IdentifierCollision {
                identifier,
                first,
                second,
                ..
            } => {
                assert_eq!(identifier, "x");
                assert_eq!((first.0, second.0), (2, 3));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_numbered_capture_yields_no_identifier() {
        let rule: IdentifierRule =
            serde_json::from_str(r#"{"target_kind": "class_decl", "capture_path": [{"kind": "nope", "index": 0}]}"#)
                .unwrap();
        let tree = parse_minilang(ACCOUNT_BASE).unwrap();
        assert_eq!(rule.apply(find(&tree, "class_decl")), None);
    }

    #[test]
    fn group_imports_keeps_position_and_members() {
        let src = "class Z { }\nimport a.A;\nimport b.B;\nimport c.C;\nclass Y { }\n";
        let tree = parse_minilang(src).unwrap();
        let handled = apply_handlers(tree, &LanguageProfile::minilang(), &HandlerRegistry::with_builtins()).unwrap();
        let kinds: Vec<&str> = handled.root().children().iter().map(|c| c.kind.as_str()).collect();
        assert_eq!(kinds, ["class_decl", "import_group", "class_decl"]);
        let group = &handled.root().children()[1];
        assert!(group.is_unordered());
        assert_eq!(group.children().len(), 3);
        assert_eq!(group.text(src), "import a.A;\nimport b.B;\nimport c.C;");
    }

    #[test]
    fn empty_handler_list_is_identity() {
        let mut profile = LanguageProfile::minilang();
        profile.handlers.clear();
        let src = "import a.A;\nclass Y { }";
        let tree = parse_minilang(src).unwrap();
        let before = tree.dump();
        let after = apply_handlers(tree, &profile, &HandlerRegistry::with_builtins()).unwrap();
        assert_eq!(before, after.dump());
    }

    #[test]
    fn unknown_handler_is_rejected_at_apply_time() {
        let mut profile = LanguageProfile::minilang();
        profile.handlers = vec!["foo".into()];
        let err = apply_handlers(parse_minilang("").unwrap(), &profile, &HandlerRegistry::with_builtins()).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownHandler(ref h) if h == "foo"));
    }

    #[test]
    fn flatten_block_keeps_text() {
        let mut profile = LanguageProfile::minilang();
        profile.flatten_kinds.insert("block".into());
        let tree = flatten(parse_minilang(ACCOUNT_BASE).unwrap(), &profile).unwrap();
        let block = find(&tree, "block");
        assert!(block.is_terminal());
        assert_eq!(block.value(), Some("{ balance -= amount; return balance; }"));
        assert_eq!(tree.root().text(tree.source()), ACCOUNT_BASE);
    }

    #[test]
    fn flatten_nothing_is_identity() {
        let tree = parse_minilang(ACCOUNT_BASE).unwrap();
        let before = tree.dump();
        let after = flatten(tree, &LanguageProfile::minilang()).unwrap();
        assert_eq!(before, after.dump());
    }

    #[test]
    fn bundled_profile_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("minilang.profile");
        fs::write(&path, MINILANG_PROFILE).unwrap();
        let profile = load_profile(&path).unwrap();
        let kinds: Vec<&str> = profile.unordered_kinds.iter().map(String::as_str).collect();
        assert_eq!(kinds, ["class_body", "import_group", "modifiers"]);
        assert_eq!(profile, LanguageProfile::minilang());
    }

    #[test]
    fn unknown_handler_in_file_is_named() {
        let err = LanguageProfile::from_document(
            r#"{"name": "x", "backend": "minilang", "handlers": ["foo"]}"#,
            "x.profile",
        )
        .unwrap_err();
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn empty_unordered_kinds_is_valid() {
        let profile = LanguageProfile::from_document(
            r#"{"name": "flat", "backend": "minilang", "unordered_kinds": []}"#,
            "flat.profile",
        )
        .unwrap();
        let tree = crate::parser::parse("class A { public static int x; }", &profile).unwrap();
        assert!(tree.root().descendants().all(|n| !n.is_unordered()));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        for doc in [
            "",
            "{",
            r#"{"name": 3}"#,
            r#"{"name": "x", "backend": "minilang", "colour": "red"}"#,
            r#"{"name": "x", "backend": "minilang", "identifier_rules": [{"target_kind": "a", "compose": "{1}"}]}"#,
            r#"{"name": "x", "backend": "minilang", "identifier_rules": [{"target_kind": "a", "capture_path": [{"kind": "b", "index": "first"}]}]}"#,
        ] {
            assert!(
                matches!(
                    LanguageProfile::from_document(doc, "t"),
                    Err(ConfigError::Malformed { .. })
                ),
                "{doc}"
            );
        }
    }

    #[test]
    fn terminal_kinds_cannot_be_unordered() {
        let err = LanguageProfile::from_document(
            r#"{"name": "x", "backend": "minilang", "unordered_kinds": ["stmt"]}"#,
            "t",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::TerminalKind { .. }));
    }

    #[test]
    fn duplicate_extensions_are_rejected() {
        let mut set = ProfileSet::bundled();
        let mut clone = LanguageProfile::minilang();
        clone.name = "other".into();
        let err = set.add(clone).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateExtension { .. }));
        assert_eq!(set.for_file("src/Account.mini").unwrap().name, "minilang");
        assert!(set.for_file("README.md").is_none());
    }

    #[test]
    fn rules_serialize_back_to_documents() {
        let profile = LanguageProfile::minilang();
        let text = serde_json::to_string_pretty(&profile).unwrap();
        assert_eq!(LanguageProfile::from_document(&text, "t").unwrap(), profile);
    }

    fn arb_program() -> impl Strategy<Value = String> {
        let member = prop_oneof![
            "[a-e]".prop_map(|n| format!("int {n};")),
            ("[a-e]", "[a-e]").prop_map(|(n, s)| format!("public void {n}() {{ {s}(); }}")),
        ];
        (
            prop::collection::vec("[a-d]", 0..4),
            prop::collection::vec(member, 0..5),
        )
            .prop_map(|(imports, members)| {
                let mut src = String::new();
                let mut seen = BTreeSet::new();
                for i in imports {
                    src.push_str(&format!("import p.{i};\n"));
                }
                src.push_str("class K {\n");
                for m in members {
                    if seen.insert(m.split('(').next().unwrap().split(';').next().unwrap().to_string()) {
                        src.push_str(&format!("  {m}\n"));
                    }
                }
                src.push_str("}\n");
                src
            })
    }

    proptest! {
        #[test]
        fn handlers_preserve_round_trip(src in arb_program()) {
            let tree = parse_minilang(&src).unwrap();
            let handled = apply_handlers(tree, &LanguageProfile::minilang(), &HandlerRegistry::with_builtins()).unwrap();
            prop_assert_eq!(handled.root().text(handled.source()), src.as_str());
            let rendered = crate::render::render_tree(&handled);
            prop_assert_eq!(rendered, src);
        }

        #[test]
        fn identifier_assignment_is_idempotent(src in arb_program()) {
            let profile = LanguageProfile::minilang();
            if let Ok(once) = assign_identifiers(parse_minilang(&src).unwrap(), &profile) {
                let twice = assign_identifiers(once.clone(), &profile).unwrap();
                prop_assert!(deep_equal(once.root(), twice.root()));
            }
        }
    }
}
