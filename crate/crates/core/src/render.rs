//! Printing merged trees back to text.
//!
//! Nodes print the exact bytes of their span in the revision they came
//! from. The text between nodes (whitespace, comments, punctuation that is
//! not part of any node) is taken from the gaps of the original parents:
//! a NonTerminal contributes a prefix before its first child, one gap
//! before every later child and a tail after its last child.

use crate::cst::{Node, NodeContent, Origin, Tree};
use crate::langconfig::LanguageProfile;
use crate::merge::{Conflict, MergedNode, MergedTree};
use crate::parser::{self, Registry};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    pub marker_size: usize,
    pub base_label: String,
    pub left_label: String,
    pub right_label: String,
    pub show_base_in_conflicts: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            marker_size: 7,
            base_label: "base".into(),
            left_label: "left".into(),
            right_label: "right".into(),
            show_base_in_conflicts: true,
        }
    }
}

impl RenderOptions {
    pub const MIN_MARKER_SIZE: usize = 3;

    /// Marker size clamped to the minimum.
    pub fn markers(&self) -> usize {
        self.marker_size.max(Self::MIN_MARKER_SIZE)
    }

    pub fn with_marker_size(mut self, n: usize) -> Self {
        self.marker_size = n.max(Self::MIN_MARKER_SIZE);
        self
    }
}

/// `"\r\n"` if the text uses CRLF line ends, else `"\n"`.
pub fn newline_style(text: &str) -> &'static str {
    if text.contains("\r\n") {
        "\r\n"
    } else {
        "\n"
    }
}

/// Writes one diff3-style marker block. Each part must be empty or end
/// with a newline.
pub fn write_conflict_block(out: &mut String, opts: &RenderOptions, nl: &str, left: &str, base: &str, right: &str) {
    let n = opts.markers();
    let line = |out: &mut String, c: char, label: &str| {
        out.extend(std::iter::repeat_n(c, n));
        if !label.is_empty() {
            out.push(' ');
            out.push_str(label);
        }
        out.push_str(nl);
    };
    line(out, '<', &opts.left_label);
    out.push_str(left);
    if opts.show_base_in_conflicts {
        line(out, '|', &opts.base_label);
        out.push_str(base);
    }
    line(out, '=', "");
    out.push_str(right);
    line(out, '>', &opts.right_label);
}

/// Number of marker blocks in `text` for the given marker size.
pub fn count_marker_blocks(text: &str, marker_size: usize) -> usize {
    let open: String = "<".repeat(marker_size);
    text.lines()
        .filter(|l| {
            l.strip_prefix(open.as_str())
                .is_some_and(|rest| rest.is_empty() || rest.starts_with(' '))
        })
        .count()
}

/// Text before the first child, or the whole text of a childless node.
fn prefix<'s>(node: &Node, src: &'s str) -> &'s str {
    match node.children().first() {
        Some(c) => &src[node.span.start_byte..c.span.start_byte],
        None => node.text(src),
    }
}

fn tail<'s>(node: &Node, src: &'s str) -> &'s str {
    match node.children().last() {
        Some(c) => &src[c.span.end_byte..node.span.end_byte],
        None => "",
    }
}

/// Text between child `i - 1` and child `i`; `i` must be at least 1.
fn gap<'s>(node: &Node, i: usize, src: &'s str) -> &'s str {
    let cs = node.children();
    &src[cs[i - 1].span.end_byte..cs[i].span.start_byte]
}

fn trailing_whitespace(s: &str) -> &str {
    &s[s.trim_end().len()..]
}

/// Prints an unmodified tree. Equals the tree's source for every tree
/// produced by the parser.
pub fn render_tree(tree: &Tree) -> String {
    let src = tree.source();
    let root = tree.root();
    let mut out = String::with_capacity(src.len());
    out.push_str(&src[..root.span.start_byte]);
    print_node(root, src, &mut out);
    out.push_str(&src[root.span.end_byte..]);
    out
}

fn print_node(node: &Node, src: &str, out: &mut String) {
    match &node.content {
        NodeContent::Terminal { .. } => out.push_str(node.text(src)),
        NodeContent::NonTerminal { children, .. } => {
            out.push_str(prefix(node, src));
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(gap(node, i, src));
                }
                print_node(c, src, out);
            }
            out.push_str(tail(node, src));
        }
    }
}

const ORIGINS: [Origin; 3] = [Origin::Base, Origin::Left, Origin::Right];

fn slot(origin: Origin) -> usize {
    match origin {
        Origin::Left => 1,
        Origin::Right => 2,
        _ => 0,
    }
}

struct Renderer<'m, 'a> {
    merged: &'m MergedTree<'a>,
    opts: &'m RenderOptions,
    nl: &'static str,
    out: String,
    after_marker: bool,
}

/// Prints a merged tree, with marker blocks for its conflicts.
pub fn render(merged: &MergedTree<'_>, opts: &RenderOptions) -> String {
    let base_src = merged.base.source();
    let mut r = Renderer {
        merged,
        opts,
        nl: newline_style(base_src),
        out: String::with_capacity(base_src.len()),
        after_marker: false,
    };
    // text outside the roots comes from the revision whose root is printed
    let (outer, outer_origin) = match &merged.root {
        MergedNode::Exact { origin, node } => (*node, *origin),
        _ => (merged.base.root(), Origin::Base),
    };
    let src = merged.source(outer_origin);
    r.emit(&src[..outer.span.start_byte]);
    r.node(&merged.root);
    r.emit(&src[outer.span.end_byte..]);
    r.out
}

impl<'m, 'a> Renderer<'m, 'a> {
    fn emit(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        let mut text = text;
        if self.after_marker {
            // the marker block already ended the line
            text = text.trim_start_matches([' ', '\t']);
            text = text
                .strip_prefix("\r\n")
                .or_else(|| text.strip_prefix('\n'))
                .unwrap_or(text);
            if text.is_empty() {
                return;
            }
            self.after_marker = false;
        }
        self.out.push_str(text);
    }

    fn node(&mut self, n: &MergedNode<'a>) {
        match n {
            MergedNode::Exact { origin, node } => {
                let src = self.merged.source(*origin);
                self.emit(node.text(src));
            }
            MergedNode::Mixed { parents, children } => self.mixed(parents, children),
            MergedNode::Conflict(i) => self.conflict(&self.merged.conflicts[*i]),
            MergedNode::Deletion(_) => {}
        }
    }

    fn src(&self, origin: Origin) -> &'a str {
        self.merged.source(origin)
    }

    fn choose_frame(&self, parents: &[&'a Node; 3], want_children: bool) -> Origin {
        let base = parents[0];
        let bsrc = self.src(Origin::Base);
        let (bp, bt) = (prefix(base, bsrc), tail(base, bsrc));
        let usable = |o: Origin| !want_children || !parents[slot(o)].children().is_empty();
        for o in [Origin::Left, Origin::Right] {
            let n = parents[slot(o)];
            let s = self.src(o);
            if usable(o) && (prefix(n, s) != bp || tail(n, s) != bt) {
                return o;
            }
        }
        ORIGINS.into_iter().find(|&o| usable(o)).unwrap_or(Origin::Base)
    }

    fn mixed(&mut self, parents: &[&'a Node; 3], children: &[MergedNode<'a>]) {
        let items: Vec<&MergedNode<'a>> = children
            .iter()
            .filter(|c| !matches!(c, MergedNode::Deletion(_)))
            .collect();
        let frame = self.choose_frame(parents, !items.is_empty());
        let fnode = parents[slot(frame)];
        let fsrc = self.src(frame);
        self.emit(prefix(fnode, fsrc));
        for (i, item) in items.iter().enumerate() {
            if i > 0 && !matches!(item, MergedNode::Conflict(_)) {
                let g = self.gap_for(item, i, parents, frame);
                self.emit(g);
            }
            self.node(item);
        }
        self.emit(tail(fnode, fsrc));
    }

    /// The gap to print before output child `i > 0`.
    fn gap_for(&self, item: &MergedNode<'a>, i: usize, parents: &[&'a Node; 3], frame: Origin) -> &'a str {
        let own: Vec<(Origin, &'a Node)> = match item {
            MergedNode::Exact { origin, node } => vec![(*origin, *node)],
            MergedNode::Mixed { parents: ps, .. } => {
                vec![(Origin::Left, ps[1]), (Origin::Right, ps[2]), (Origin::Base, ps[0])]
            }
            _ => vec![],
        };
        let index_in = |o: Origin, n: &Node| parents[slot(o)].children().iter().position(|c| c.id == n.id);
        let mut ordered = own.clone();
        ordered.sort_by_key(|&(o, _)| o != frame);
        for &(o, n) in &ordered {
            if let Some(k) = index_in(o, n).filter(|&k| k > 0) {
                return gap(parents[slot(o)], k, self.src(o));
            }
        }
        let mut others = vec![frame];
        others.extend(ORIGINS.into_iter().filter(|&o| o != frame));
        for o in others {
            let p = parents[slot(o)];
            let len = p.children().len();
            if len >= 2 {
                return gap(p, i.min(len - 1), self.src(o));
            }
        }
        for &(o, n) in &own {
            if index_in(o, n) == Some(0) {
                let ws = trailing_whitespace(prefix(parents[slot(o)], self.src(o)));
                if !ws.is_empty() {
                    return ws;
                }
            }
        }
        " "
    }

    fn part_text(&self, nodes: &[&Node], origin: Origin) -> String {
        let Some(first) = nodes.first() else {
            return String::new();
        };
        let last = nodes[nodes.len() - 1];
        let src = self.src(origin);
        let start = first.span.start_byte;
        let line_start = src[..start].rfind('\n').map_or(0, |p| p + 1);
        let indent = &src[line_start..start];
        let mut text = String::new();
        if indent.chars().all(|c| c == ' ' || c == '\t') {
            text.push_str(indent);
        }
        text.push_str(&src[start..last.span.end_byte.max(start)]);
        if !text.ends_with('\n') {
            text.push_str(self.nl);
        }
        text
    }

    fn conflict(&mut self, c: &Conflict<'a>) {
        let trimmed = self.out.trim_end_matches([' ', '\t']).len();
        self.out.truncate(trimmed);
        if !self.out.is_empty() && !self.out.ends_with('\n') {
            self.out.push_str(self.nl);
        }
        let left = self.part_text(&c.left_part, Origin::Left);
        let base = self.part_text(&c.base_part, Origin::Base);
        let right = self.part_text(&c.right_part, Origin::Right);
        write_conflict_block(&mut self.out, self.opts, self.nl, &left, &base, &right);
        self.after_marker = true;
    }
}

/// Canonical layout of `text`: single spaces between tokens, one statement
/// or member per line, four-space indentation by brace depth.
pub fn normalize(text: &str, profile: &LanguageProfile) -> Result<String, parser::Error> {
    normalize_with(&Registry::with_builtins(), text, profile)
}

pub fn normalize_with(registry: &Registry, text: &str, profile: &LanguageProfile) -> Result<String, parser::Error> {
    let tree = registry.parse(text, profile)?;
    let backend = registry
        .backend(&profile.backend)
        .ok_or_else(|| parser::Error::UnknownBackend(profile.backend.clone()))?;
    let mut units = Vec::new();
    let src = tree.source();
    let mut gap_units = |s: &str, units: &mut Vec<String>| units.extend(backend.canonical_tokens(s));
    gap_units(&src[..tree.root().span.start_byte], &mut units);
    collect_units(tree.root(), src, &mut units, &mut gap_units);
    gap_units(&src[tree.root().span.end_byte..], &mut units);
    Ok(layout(&units))
}

fn collect_units(node: &Node, src: &str, units: &mut Vec<String>, gap_units: &mut impl FnMut(&str, &mut Vec<String>)) {
    match &node.content {
        NodeContent::Terminal { value } => units.push(value.clone()),
        NodeContent::NonTerminal { children, .. } => {
            gap_units(prefix(node, src), units);
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    gap_units(gap(node, i, src), units);
                }
                collect_units(c, src, units, gap_units);
            }
            gap_units(tail(node, src), units);
        }
    }
}

fn word_end(s: &str) -> bool {
    s.chars()
        .last()
        .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '$' || c == '>' || c == ']')
}

fn layout(units: &[String]) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    let mut parens = 0usize;
    let mut line_start = true;
    let mut prev: Option<&str> = None;
    for u in units {
        let u = u.as_str();
        if u == "}" {
            depth = depth.saturating_sub(1);
            if !line_start {
                out.push('\n');
                line_start = true;
            }
        }
        if line_start {
            out.push_str(&"    ".repeat(depth));
        } else {
            let glue = matches!(u, ";" | "," | ")" | "]" | ".")
                || prev.is_some_and(|p| matches!(p, "(" | "[" | "."))
                || (u == "(" && prev.is_some_and(word_end));
            if !glue {
                out.push(' ');
            }
        }
        out.push_str(u);
        line_start = false;
        match u {
            "(" => parens += 1,
            ")" => parens = parens.saturating_sub(1),
            "{" => depth += 1,
            _ => {}
        }
        let breaks = u == "{" || u == "}" || (parens == 0 && u.ends_with(';'));
        if breaks {
            out.push('\n');
            line_start = true;
        }
        prev = Some(u);
    }
    if !line_start {
        out.push('\n');
    }
    out
}
