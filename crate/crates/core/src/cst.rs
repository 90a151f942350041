//! Generic concrete syntax trees.
//!
//! A [`Node`] is either a Terminal carrying source text or a NonTerminal
//! carrying an ordered list of children. Whitespace and comments are not
//! stored as nodes; they live in the gaps between node spans and are
//! recovered from the original source when rendering.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Byte range plus 1-based line/column bounds into the originating source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start_byte: usize,
    pub end_byte: usize,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end_byte - self.start_byte
    }

    pub fn is_empty(&self) -> bool {
        self.start_byte == self.end_byte
    }

    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        &source[self.start_byte..self.end_byte]
    }
}

/// Maps byte offsets to 1-based line and column numbers.
#[derive(Clone, Debug)]
pub struct LineIndex {
    line_starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(source: &str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(source.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { line_starts }
    }

    /// Returns `(line, col)`, both 1-based; columns count bytes.
    pub fn position(&self, offset: usize) -> (usize, usize) {
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (line + 1, offset - self.line_starts[line] + 1)
    }

    pub fn span(&self, start_byte: usize, end_byte: usize) -> Span {
        let (start_line, start_col) = self.position(start_byte);
        let (end_line, end_col) = self.position(end_byte);
        Span {
            start_byte,
            end_byte,
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }
}

/// Pre-order index of a node within its tree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Which revision a node was parsed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Origin {
    #[default]
    Base,
    Left,
    Right,
    Synthetic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Base => "base",
            Origin::Left => "left",
            Origin::Right => "right",
            Origin::Synthetic => "synthetic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arity {
    Terminal,
    NonTerminal,
}

#[derive(Clone, Debug)]
pub enum NodeContent {
    Terminal { value: String },
    NonTerminal { children: Vec<Node>, unordered: bool },
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub kind: String,
    pub identifier: Option<String>,
    pub span: Span,
    pub origin: Origin,
    pub content: NodeContent,
}

impl Node {
    pub fn terminal(kind: impl Into<String>, value: impl Into<String>, span: Span) -> Self {
        Node {
            id: NodeId::default(),
            kind: kind.into(),
            identifier: None,
            span,
            origin: Origin::default(),
            content: NodeContent::Terminal { value: value.into() },
        }
    }

    pub fn non_terminal(kind: impl Into<String>, children: Vec<Node>, span: Span) -> Self {
        Node {
            id: NodeId::default(),
            kind: kind.into(),
            identifier: None,
            span,
            origin: Origin::default(),
            content: NodeContent::NonTerminal {
                children,
                unordered: false,
            },
        }
    }

    pub fn with_identifier(mut self, identifier: impl Into<String>) -> Self {
        self.identifier = Some(identifier.into());
        self
    }

    pub fn arity(&self) -> Arity {
        match self.content {
            NodeContent::Terminal { .. } => Arity::Terminal,
            NodeContent::NonTerminal { .. } => Arity::NonTerminal,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.arity() == Arity::Terminal
    }

    pub fn value(&self) -> Option<&str> {
        match &self.content {
            NodeContent::Terminal { value } => Some(value),
            NodeContent::NonTerminal { .. } => None,
        }
    }

    pub fn children(&self) -> &[Node] {
        match &self.content {
            NodeContent::Terminal { .. } => &[],
            NodeContent::NonTerminal { children, .. } => children,
        }
    }

    pub fn children_mut(&mut self) -> Option<&mut Vec<Node>> {
        match &mut self.content {
            NodeContent::Terminal { .. } => None,
            NodeContent::NonTerminal { children, .. } => Some(children),
        }
    }

    pub fn is_unordered(&self) -> bool {
        matches!(self.content, NodeContent::NonTerminal { unordered: true, .. })
    }

    /// Sets the unordered flag. Has no effect on Terminals.
    pub fn set_unordered(&mut self, flag: bool) {
        if let NodeContent::NonTerminal { unordered, .. } = &mut self.content {
            *unordered = flag;
        }
    }

    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        self.span.text(source)
    }

    /// Pre-order iterator over the subtree rooted here.
    pub fn descendants(&self) -> Descendants<'_> {
        Descendants { stack: vec![self] }
    }

    /// `kind` plus identifier, for diagnostics.
    pub fn label(&self) -> String {
        match &self.identifier {
            Some(id) => format!("{} {}", self.kind, id),
            None => self.kind.clone(),
        }
    }
}

pub struct Descendants<'a> {
    stack: Vec<&'a Node>,
}

impl<'a> Iterator for Descendants<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children().iter().rev());
        Some(node)
    }
}

/// Number of nodes in the subtree rooted at `node`, including itself.
pub fn subtree_size(node: &Node) -> usize {
    1 + node.children().iter().map(subtree_size).sum::<usize>()
}

/// Structural equality ignoring spans, node ids and origins.
pub fn deep_equal(a: &Node, b: &Node) -> bool {
    if a.kind != b.kind || a.identifier != b.identifier {
        return false;
    }
    match (&a.content, &b.content) {
        (NodeContent::Terminal { value: va }, NodeContent::Terminal { value: vb }) => va == vb,
        (
            NodeContent::NonTerminal {
                children: ca,
                unordered: ua,
            },
            NodeContent::NonTerminal {
                children: cb,
                unordered: ub,
            },
        ) => ua == ub && ca.len() == cb.len() && ca.iter().zip(cb).all(|(x, y)| deep_equal(x, y)),
        _ => false,
    }
}

/// 64-bit digest over kind, arity, identifier, value, unordered flag and children.
pub fn structural_hash(node: &Node) -> u64 {
    let child_hashes: Vec<u64> = node.children().iter().map(structural_hash).collect();
    combine_hash(node, &child_hashes)
}

fn combine_hash(node: &Node, child_hashes: &[u64]) -> u64 {
    let mut h = DefaultHasher::new();
    node.kind.hash(&mut h);
    node.identifier.hash(&mut h);
    match &node.content {
        NodeContent::Terminal { value } => {
            0u8.hash(&mut h);
            value.hash(&mut h);
        }
        NodeContent::NonTerminal { unordered, .. } => {
            1u8.hash(&mut h);
            unordered.hash(&mut h);
            child_hashes.hash(&mut h);
        }
    }
    h.finish()
}

/// True when neither subtree can be told apart by kind, identifier or
/// values, and both print the same text.
pub fn same_text_and_structure(a: &Node, a_src: &str, b: &Node, b_src: &str) -> bool {
    a.text(a_src) == b.text(b_src) && deep_equal(a, b)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CstError {
    #[error(
        "identifier `{identifier}` appears twice under `{parent}` (bytes {first_start}..{first_end} and {second_start}..{second_end})"
    )]
    IdentifierCollision {
        identifier: String,
        parent: String,
        first_start: usize,
        first_end: usize,
        second_start: usize,
        second_end: usize,
    },
    #[error("span {start}..{end} of `{kind}` lies outside the source ({len} bytes)")]
    SpanOutOfRange {
        kind: String,
        start: usize,
        end: usize,
        len: usize,
    },
}

/// A parsed revision: root node plus the text it was parsed from.
///
/// Construction renumbers nodes in pre-order and caches per-node sizes and
/// digests, so the tree should be treated as immutable afterwards.
#[derive(Clone, Debug)]
pub struct Tree {
    root: Node,
    source: String,
    language: String,
    sizes: Vec<u32>,
    hashes: Vec<u64>,
}

impl Tree {
    pub fn new(mut root: Node, source: impl Into<String>, language: impl Into<String>) -> Result<Tree, CstError> {
        let source = source.into();
        check_node(&root, source.len())?;
        let mut next = 0u32;
        renumber(&mut root, &mut next);
        let mut sizes = vec![0u32; next as usize];
        let mut hashes = vec![0u64; next as usize];
        fill_tables(&root, &mut sizes, &mut hashes);
        Ok(Tree {
            root,
            source,
            language: language.into(),
            sizes,
            hashes,
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn node_count(&self) -> usize {
        self.sizes.len()
    }

    /// Cached subtree size for a node of this tree.
    pub fn size_of(&self, id: NodeId) -> usize {
        self.sizes[id.index()] as usize
    }

    /// Cached structural digest for a node of this tree.
    pub fn hash_of(&self, id: NodeId) -> u64 {
        self.hashes[id.index()]
    }

    /// Returns the tree with every node tagged as coming from `origin`.
    pub fn with_origin(mut self, origin: Origin) -> Tree {
        fn tag(node: &mut Node, origin: Origin) {
            node.origin = origin;
            if let Some(children) = node.children_mut() {
                for child in children {
                    tag(child, origin);
                }
            }
        }
        tag(&mut self.root, origin);
        self
    }

    /// Rebuilds a tree after a transformation of the root.
    pub fn map_root(self, f: impl FnOnce(Node, &str) -> Node) -> Result<Tree, CstError> {
        let Tree {
            root, source, language, ..
        } = self;
        let root = f(root, &source);
        Tree::new(root, source, language)
    }

    pub fn into_parts(self) -> (Node, String, String) {
        (self.root, self.source, self.language)
    }

    /// S-expression dump: `(kind[:identifier] child…)`, Terminals as `"value"`.
    pub fn dump(&self) -> String {
        dump(&self.root)
    }
}

fn check_node(node: &Node, len: usize) -> Result<(), CstError> {
    if node.span.start_byte > node.span.end_byte || node.span.end_byte > len {
        return Err(CstError::SpanOutOfRange {
            kind: node.kind.clone(),
            start: node.span.start_byte,
            end: node.span.end_byte,
            len,
        });
    }
    let mut seen: HashMap<&str, &Node> = HashMap::new();
    for child in node.children() {
        if let Some(id) = &child.identifier {
            if let Some(first) = seen.insert(id, child) {
                return Err(CstError::IdentifierCollision {
                    identifier: id.clone(),
                    parent: node.kind.clone(),
                    first_start: first.span.start_byte,
                    first_end: first.span.end_byte,
                    second_start: child.span.start_byte,
                    second_end: child.span.end_byte,
                });
            }
        }
        check_node(child, len)?;
    }
    Ok(())
}

fn renumber(node: &mut Node, next: &mut u32) {
    node.id = NodeId(*next);
    *next += 1;
    if let Some(children) = node.children_mut() {
        for child in children {
            renumber(child, next);
        }
    }
}

fn fill_tables(node: &Node, sizes: &mut [u32], hashes: &mut [u64]) {
    let mut size = 1;
    let mut child_hashes = Vec::with_capacity(node.children().len());
    for child in node.children() {
        fill_tables(child, sizes, hashes);
        size += sizes[child.id.index()];
        child_hashes.push(hashes[child.id.index()]);
    }
    sizes[node.id.index()] = size;
    hashes[node.id.index()] = combine_hash(node, &child_hashes);
}

pub fn dump(node: &Node) -> String {
    let mut out = String::new();
    dump_into(node, &mut out);
    out
}

fn dump_into(node: &Node, out: &mut String) {
    match &node.content {
        NodeContent::Terminal { value } => {
            out.push('"');
            for c in value.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        NodeContent::NonTerminal { children, .. } => {
            out.push('(');
            out.push_str(&node.kind);
            if let Some(id) = &node.identifier {
                let _ = write!(out, ":{id}");
            }
            for child in children {
                out.push(' ');
                dump_into(child, out);
            }
            out.push(')');
        }
    }
}


#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn sizes_of_small_trees() {
        assert_eq!(subtree_size(&t("literal", "1")), 1);
        assert_eq!(subtree_size(&nt("pair", vec![t("a", "x"), t("b", "y")])), 3);
    }

    #[test]
    fn deep_equal_ignores_spans() {
        let a = t("modifier", "public");
        let mut b = a.clone();
        b.span = Span {
            start_byte: 5,
            end_byte: 11,
            ..Span::default()
        };
        assert!(deep_equal(&a, &b));
        assert!(!deep_equal(&t("modifier", "public"), &t("modifier", "static")));
    }

    #[test]
    fn deep_equal_checks_identifier_and_order() {
        let a = nt("f", vec![t("x", "1"), t("x", "2")]);
        let b = nt("f", vec![t("x", "2"), t("x", "1")]);
        assert!(!deep_equal(&a, &b));
        assert!(!deep_equal(&a, &a.clone().with_identifier("f")));
        let mut c = a.clone();
        c.set_unordered(true);
        assert!(!deep_equal(&a, &c));
    }

    #[test]
    fn terminal_never_equals_non_terminal() {
        assert!(!deep_equal(&t("k", ""), &nt("k", vec![])));
        assert_ne!(structural_hash(&t("k", "")), structural_hash(&nt("k", vec![])));
    }

    #[test]
    fn collisions_are_rejected() {
        let root = nt(
            "class_body",
            vec![
                t("field_decl", "a").with_identifier("x"),
                t("field_decl", "b").with_identifier("x"),
            ],
        );
        let err = Tree::new(root, "", "test").unwrap_err();
        assert!(matches!(err, CstError::IdentifierCollision { ref identifier, .. } if identifier == "x"));
    }

    #[test]
    fn tree_numbers_nodes_in_preorder() {
        let root = nt("r", vec![nt("a", vec![t("x", "1")]), t("y", "2")]);
        let tree = Tree::new(root, "", "test").unwrap();
        let ids: Vec<u32> = tree.root().descendants().map(|n| n.id.0).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(tree.size_of(NodeId(0)), 4);
        assert_eq!(tree.size_of(NodeId(1)), 2);
        assert_eq!(tree.hash_of(NodeId(0)), structural_hash(tree.root()));
    }

    #[test]
    fn dump_format() {
        let root = nt(
            "program",
            vec![nt("class_decl", vec![t("name", "A")]).with_identifier("A")],
        );
        assert_eq!(dump(&root), r#"(program (class_decl:A "A"))"#);
        assert_eq!(dump(&t("stmt", "say \"hi\";")), r#""say \"hi\";""#);
    }

    #[test]
    fn line_index_positions() {
        let idx = LineIndex::new("ab\ncd\n");
        assert_eq!(idx.position(0), (1, 1));
        assert_eq!(idx.position(2), (1, 3));
        assert_eq!(idx.position(3), (2, 1));
        assert_eq!(idx.position(6), (3, 1));
    }

    pub(crate) fn arb_node() -> impl Strategy<Value = Node> {
        let leaf = (0..3u8, 0..4u8).prop_map(|(k, v)| t(&format!("k{k}"), &format!("v{v}")));
        leaf.prop_recursive(3, 12, 3, |inner| {
            (0..3u8, prop::collection::vec(inner, 0..3), any::<bool>()).prop_map(|(k, children, unord)| {
                let mut n = nt(&format!("n{k}"), children);
                n.set_unordered(unord);
                n
            })
        })
    }

    proptest! {
        #[test]
        fn deep_equal_is_an_equivalence(a in arb_node(), b in arb_node(), c in arb_node()) {
            prop_assert!(deep_equal(&a, &a));
            prop_assert_eq!(deep_equal(&a, &b), deep_equal(&b, &a));
            if deep_equal(&a, &b) && deep_equal(&b, &c) {
                prop_assert!(deep_equal(&a, &c));
            }
        }

        #[test]
        fn equal_trees_hash_equal(a in arb_node(), b in arb_node()) {
            prop_assert_eq!(structural_hash(&a), structural_hash(&a.clone()));
            if deep_equal(&a, &b) {
                prop_assert_eq!(structural_hash(&a), structural_hash(&b));
            }
        }

        #[test]
        fn root_size_counts_distinct_ids(a in arb_node()) {
            let tree = Tree::new(a, "", "test").unwrap();
            let ids: HashSet<NodeId> = tree.root().descendants().map(|n| n.id).collect();
            prop_assert_eq!(subtree_size(tree.root()), ids.len());
            prop_assert_eq!(tree.node_count(), ids.len());
        }
    }

    #[test]
    fn no_collisions_among_distinct_random_trees() {
        use proptest::strategy::ValueTree;
        use proptest::test_runner::TestRunner;

        let mut runner = TestRunner::deterministic();
        let strategy = arb_node();
        let mut distinct: Vec<Node> = Vec::new();
        let mut attempts = 0;
        while distinct.len() < 1000 && attempts < 200_000 {
            attempts += 1;
            let node = strategy.new_tree(&mut runner).unwrap().current();
            if !distinct.iter().any(|d| deep_equal(d, &node)) {
                distinct.push(node);
            }
        }
        assert_eq!(distinct.len(), 1000);
        let digests: HashSet<u64> = distinct.iter().map(structural_hash).collect();
        assert_eq!(digests.len(), distinct.len());
    }
}
