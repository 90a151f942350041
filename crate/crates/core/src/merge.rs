//! Three-way amalgamation of matched trees.
//!
//! The base tree is walked depth-first. Each base node is looked up in the
//! left and right matchings and the three versions are merged according to
//! whether the node survived on each side and whether either side changed
//! it. Unordered children are unioned; ordered children go through a list
//! merge anchored on the base children that survived on both sides.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::cst::{deep_equal, same_text_and_structure, Node, NodeId, Origin, Span, Tree};
use crate::matching::{Matching, Matchings};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeOptions {
    /// Report a conflict when one side deletes a subtree whose content the
    /// other side edited.
    pub strict_delete_edit: bool,
    /// Accept reorderings of unordered children without conflict.
    pub resolve_by_reorder: bool,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions {
            strict_delete_edit: true,
            resolve_by_reorder: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConflictClass {
    InsertInsert,
    ModifyModify,
    ModifyDelete,
    DeleteEdit,
}

impl fmt::Display for ConflictClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictClass::InsertInsert => "InsertInsert",
            ConflictClass::ModifyModify => "ModifyModify",
            ConflictClass::ModifyDelete => "ModifyDelete",
            ConflictClass::DeleteEdit => "DeleteEdit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Conflict<'a> {
    pub class: ConflictClass,
    /// Base nodes involved; empty for insertions.
    pub base_part: Vec<&'a Node>,
    pub left_part: Vec<&'a Node>,
    pub right_part: Vec<&'a Node>,
    /// Where the conflict sits in base. Insertions use an empty span at the
    /// insertion point.
    pub location: Span,
}

impl Conflict<'_> {
    /// Short human description, e.g. `method_decl init()`.
    pub fn summary(&self) -> String {
        let first = self
            .base_part
            .first()
            .or(self.left_part.first())
            .or(self.right_part.first());
        let what = first.map_or_else(|| "(empty)".to_string(), |n| n.label());
        format!(
            "{what}: base {} / left {} / right {} node(s)",
            self.base_part.len(),
            self.left_part.len(),
            self.right_part.len()
        )
    }

    /// `class<TAB>base_line<TAB>summary`
    pub fn report_line(&self) -> String {
        format!("{}\t{}\t{}", self.class, self.location.start_line, self.summary())
    }
}

/// A deletion that was accepted although the surviving side edited the
/// deleted subtree's content.
#[derive(Clone, Copy, Debug)]
pub struct EditedDeletion<'a> {
    pub base: &'a Node,
    pub survivor: &'a Node,
    pub survivor_side: Origin,
}

/// A node of the merged tree.
#[derive(Clone, Debug)]
pub enum MergedNode<'a> {
    /// A whole subtree taken verbatim from one revision.
    Exact { origin: Origin, node: &'a Node },
    /// A NonTerminal whose children were merged. `parents` holds the base,
    /// left and right versions, in that order.
    Mixed {
        parents: [&'a Node; 3],
        children: Vec<MergedNode<'a>>,
    },
    /// Index into [`MergedTree::conflicts`].
    Conflict(usize),
    /// Index into [`MergedTree::edited_deletions`]; prints nothing.
    Deletion(usize),
}

impl<'a> MergedNode<'a> {
    pub fn kind(&self) -> Option<&'a str> {
        match self {
            MergedNode::Exact { node, .. } => Some(&node.kind),
            MergedNode::Mixed { parents, .. } => Some(&parents[0].kind),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MergedTree<'a> {
    pub base: &'a Tree,
    pub left: &'a Tree,
    pub right: &'a Tree,
    pub root: MergedNode<'a>,
    /// In output order.
    pub conflicts: Vec<Conflict<'a>>,
    pub edited_deletions: Vec<EditedDeletion<'a>>,
}

impl<'a> MergedTree<'a> {
    pub fn is_clean(&self) -> bool {
        self.conflicts.is_empty()
    }

    pub fn count(&self, class: ConflictClass) -> usize {
        self.conflicts.iter().filter(|c| c.class == class).count()
    }

    /// One [`Conflict::report_line`] per conflict, newline-terminated.
    pub fn report(&self) -> String {
        self.conflicts.iter().map(|c| c.report_line() + "\n").collect()
    }

    pub fn source(&self, origin: Origin) -> &'a str {
        match origin {
            Origin::Left => self.left.source(),
            Origin::Right => self.right.source(),
            Origin::Base | Origin::Synthetic => self.base.source(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("root kinds differ: base `{base}`, left `{left}`, right `{right}`")]
    RootMismatch { base: String, left: String, right: String },
}

/// Subtrees with the same kinds, identifiers and child counts all the way
/// down; Terminal values may differ.
pub fn same_shape(a: &Node, b: &Node) -> bool {
    a.kind == b.kind
        && a.identifier == b.identifier
        && a.arity() == b.arity()
        && a.is_unordered() == b.is_unordered()
        && a.children().len() == b.children().len()
        && a.children().iter().zip(b.children()).all(|(x, y)| same_shape(x, y))
}

pub fn three_way_merge<'a>(
    base: &'a Tree,
    left: &'a Tree,
    right: &'a Tree,
    matchings: &Matchings<'_>,
    opts: MergeOptions,
) -> Result<MergedTree<'a>, MergeError> {
    let (b, l, r) = (base.root(), left.root(), right.root());
    if b.kind != l.kind || b.kind != r.kind || b.arity() != l.arity() || b.arity() != r.arity() {
        return Err(MergeError::RootMismatch {
            base: b.kind.clone(),
            left: l.kind.clone(),
            right: r.kind.clone(),
        });
    }
    let mut m = Merger {
        base,
        left,
        right,
        bl: matchings.base_left.matching(),
        br: matchings.base_right.matching(),
        lr: matchings.left_right.matching(),
        opts,
        conflicts: Vec::new(),
        deletions: Vec::new(),
    };
    let mut root = m.merge_node(b, l, r);

    if opts.strict_delete_edit {
        let upgraded: Vec<usize> = m
            .deletions
            .iter()
            .map(|d| {
                let (left_part, right_part) = match d.survivor_side {
                    Origin::Left => (vec![d.survivor], vec![]),
                    _ => (vec![], vec![d.survivor]),
                };
                m.conflicts.push(Conflict {
                    class: ConflictClass::DeleteEdit,
                    base_part: vec![d.base],
                    left_part,
                    right_part,
                    location: d.base.span,
                });
                m.conflicts.len() - 1
            })
            .collect();
        replace_deletions(&mut root, &upgraded);
    }

    // renumber conflicts in output order
    let mut order = Vec::new();
    collect_conflicts(&root, &mut order);
    let mut remap = vec![usize::MAX; m.conflicts.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    renumber_conflicts(&mut root, &remap);
    let mut slots: Vec<Option<Conflict<'a>>> = m.conflicts.into_iter().map(Some).collect();
    let conflicts = order
        .iter()
        .map(|&old| slots[old].take().expect("each conflict placed once"))
        .collect();

    Ok(MergedTree {
        base,
        left,
        right,
        root,
        conflicts,
        edited_deletions: m.deletions,
    })
}

fn replace_deletions(node: &mut MergedNode<'_>, upgraded: &[usize]) {
    match node {
        MergedNode::Deletion(k) => *node = MergedNode::Conflict(upgraded[*k]),
        MergedNode::Mixed { children, .. } => {
            for c in children {
                replace_deletions(c, upgraded);
            }
        }
        _ => {}
    }
}

fn collect_conflicts(node: &MergedNode<'_>, out: &mut Vec<usize>) {
    match node {
        MergedNode::Conflict(i) => out.push(*i),
        MergedNode::Mixed { children, .. } => {
            for c in children {
                collect_conflicts(c, out);
            }
        }
        _ => {}
    }
}

fn renumber_conflicts(node: &mut MergedNode<'_>, remap: &[usize]) {
    match node {
        MergedNode::Conflict(i) => *i = remap[*i],
        MergedNode::Mixed { children, .. } => {
            for c in children {
                renumber_conflicts(c, remap);
            }
        }
        _ => {}
    }
}

struct Merger<'a> {
    base: &'a Tree,
    left: &'a Tree,
    right: &'a Tree,
    bl: Matching,
    br: Matching,
    lr: Matching,
    opts: MergeOptions,
    conflicts: Vec<Conflict<'a>>,
    deletions: Vec<EditedDeletion<'a>>,
}

fn exact(origin: Origin, node: &Node) -> MergedNode<'_> {
    MergedNode::Exact { origin, node }
}

fn by_id(nodes: &[Node]) -> HashMap<NodeId, usize> {
    nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
}

fn seq_equal(a: &[Node], b: &[Node]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| deep_equal(x, y))
}

fn seq_text_equal(a: &[Node], a_src: &str, b: &[Node], b_src: &str) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| same_text_and_structure(x, a_src, y, b_src))
}

fn cover(nodes: &[Node]) -> Span {
    let (first, last) = (&nodes[0].span, &nodes[nodes.len() - 1].span);
    Span {
        start_byte: first.start_byte,
        start_line: first.start_line,
        start_col: first.start_col,
        end_byte: last.end_byte,
        end_line: last.end_line,
        end_col: last.end_col,
    }
}

fn point(span: &Span, at_end: bool) -> Span {
    let (byte, line, col) = if at_end {
        (span.end_byte, span.end_line, span.end_col)
    } else {
        (span.start_byte, span.start_line, span.start_col)
    };
    Span {
        start_byte: byte,
        end_byte: byte,
        start_line: line,
        start_col: col,
        end_line: line,
        end_col: col,
    }
}

impl<'a> Merger<'a> {
    fn merge_node(&mut self, b: &'a Node, l: &'a Node, r: &'a Node) -> MergedNode<'a> {
        let (bs, ls, rs) = (self.base.source(), self.left.source(), self.right.source());
        if same_text_and_structure(b, bs, r, rs) {
            return exact(Origin::Left, l);
        }
        if same_text_and_structure(b, bs, l, ls) {
            return exact(Origin::Right, r);
        }
        if deep_equal(l, r) {
            return exact(Origin::Left, l);
        }
        if b.is_terminal() {
            // matched Terminals carry equal values; prefer whichever text moved
            return if l.text(ls) != b.text(bs) {
                exact(Origin::Left, l)
            } else {
                exact(Origin::Right, r)
            };
        }
        // without reorder resolution, unordered lists merge like ordered ones
        let children = if b.is_unordered() && self.opts.resolve_by_reorder {
            self.merge_unordered(b, l, r)
        } else {
            self.merge_ordered(b, l, r)
        };
        MergedNode::Mixed {
            parents: [b, l, r],
            children,
        }
    }

    fn push_conflict(&mut self, c: Conflict<'a>, out: &mut Vec<MergedNode<'a>>) {
        self.conflicts.push(c);
        out.push(MergedNode::Conflict(self.conflicts.len() - 1));
    }

    /// `b` survives only on `side` as `survivor`; the other side deleted it.
    fn one_sided_delete(&mut self, b: &'a Node, side: Origin, survivor: &'a Node, out: &mut Vec<MergedNode<'a>>) {
        if deep_equal(b, survivor) {
            return;
        }
        if same_shape(b, survivor) {
            self.deletions.push(EditedDeletion {
                base: b,
                survivor,
                survivor_side: side,
            });
            out.push(MergedNode::Deletion(self.deletions.len() - 1));
            return;
        }
        let (left_part, right_part) = if side == Origin::Left {
            (vec![survivor], vec![])
        } else {
            (vec![], vec![survivor])
        };
        self.push_conflict(
            Conflict {
                class: ConflictClass::ModifyDelete,
                base_part: vec![b],
                left_part,
                right_part,
                location: b.span,
            },
            out,
        );
    }

    fn merge_unordered(&mut self, b: &'a Node, l: &'a Node, r: &'a Node) -> Vec<MergedNode<'a>> {
        let (lc, rc) = (l.children(), r.children());
        let (lpos, rpos) = (by_id(lc), by_id(rc));
        let mut used_l = vec![false; lc.len()];
        let mut used_r = vec![false; rc.len()];
        let mut out = Vec::new();

        for bc in b.children() {
            let li = self.bl.forward(bc.id).and_then(|id| lpos.get(&id).copied());
            let ri = self.br.forward(bc.id).and_then(|id| rpos.get(&id).copied());
            if let Some(i) = li {
                used_l[i] = true;
            }
            if let Some(i) = ri {
                used_r[i] = true;
            }
            match (li, ri) {
                (Some(i), Some(j)) => {
                    let merged = self.merge_node(bc, &lc[i], &rc[j]);
                    out.push(merged);
                }
                (Some(i), None) => self.one_sided_delete(bc, Origin::Left, &lc[i], &mut out),
                (None, Some(j)) => self.one_sided_delete(bc, Origin::Right, &rc[j], &mut out),
                (None, None) => {}
            }
        }

        let added_r: Vec<usize> = (0..rc.len()).filter(|&j| !used_r[j]).collect();
        for (i, lnode) in lc.iter().enumerate() {
            if used_l[i] {
                continue;
            }
            let by_identifier = lnode.identifier.as_ref().and_then(|id| {
                added_r
                    .iter()
                    .copied()
                    .find(|&j| !used_r[j] && rc[j].kind == lnode.kind && rc[j].identifier.as_ref() == Some(id))
            });
            let partner = by_identifier.or_else(|| {
                self.lr
                    .forward(lnode.id)
                    .and_then(|id| rpos.get(&id).copied())
                    .filter(|&j| !used_r[j])
            });
            match partner {
                Some(j) if deep_equal(lnode, &rc[j]) => {
                    used_r[j] = true;
                    out.push(exact(Origin::Left, lnode));
                }
                Some(j) if lnode.identifier.is_some() && lnode.identifier == rc[j].identifier => {
                    used_r[j] = true;
                    self.push_conflict(
                        Conflict {
                            class: ConflictClass::InsertInsert,
                            base_part: vec![],
                            left_part: vec![lnode],
                            right_part: vec![&rc[j]],
                            location: point(&b.span, true),
                        },
                        &mut out,
                    );
                }
                _ => out.push(exact(Origin::Left, lnode)),
            }
        }
        for j in added_r {
            if !used_r[j] {
                out.push(exact(Origin::Right, &rc[j]));
            }
        }
        out
    }

    fn merge_ordered(&mut self, b: &'a Node, l: &'a Node, r: &'a Node) -> Vec<MergedNode<'a>> {
        let (bc, lc, rc) = (b.children(), l.children(), r.children());
        let (lpos, rpos) = (by_id(lc), by_id(rc));

        // base children kept on both sides, strictly increasing on each side
        let mut anchors: Vec<(usize, usize, usize)> = Vec::new();
        for (bi, node) in bc.iter().enumerate() {
            let li = self.bl.forward(node.id).and_then(|id| lpos.get(&id).copied());
            let ri = self.br.forward(node.id).and_then(|id| rpos.get(&id).copied());
            if let (Some(li), Some(ri)) = (li, ri) {
                let increasing = anchors.last().is_none_or(|&(_, pl, pr)| li > pl && ri > pr);
                if increasing {
                    anchors.push((bi, li, ri));
                }
            }
        }

        let mut out = Vec::new();
        let (mut pb, mut pl, mut pr) = (0, 0, 0);
        for &(bi, li, ri) in &anchors {
            let at = point(&bc[bi].span, false);
            self.merge_region(&bc[pb..bi], &lc[pl..li], &rc[pr..ri], at, &mut out);
            let merged = self.merge_node(&bc[bi], &lc[li], &rc[ri]);
            out.push(merged);
            (pb, pl, pr) = (bi + 1, li + 1, ri + 1);
        }
        let at = match bc.last() {
            Some(last) => point(&last.span, true),
            None => point(&b.span, false),
        };
        self.merge_region(&bc[pb..], &lc[pl..], &rc[pr..], at, &mut out);
        out
    }

    fn merge_region(
        &mut self,
        bs: &'a [Node],
        ls: &'a [Node],
        rs: &'a [Node],
        at: Span,
        out: &mut Vec<MergedNode<'a>>,
    ) {
        if bs.is_empty() && ls.is_empty() && rs.is_empty() {
            return;
        }
        let take = |origin: Origin, nodes: &'a [Node], out: &mut Vec<MergedNode<'a>>| {
            out.extend(nodes.iter().map(|n| exact(origin, n)));
        };
        let (bsrc, lsrc) = (self.base.source(), self.left.source());
        let left_same = seq_equal(bs, ls);
        let right_same = seq_equal(bs, rs);
        if left_same && right_same {
            if seq_text_equal(bs, bsrc, ls, lsrc) {
                take(Origin::Right, rs, out);
            } else {
                take(Origin::Left, ls, out);
            }
            return;
        }
        if left_same {
            return take(Origin::Right, rs, out);
        }
        if right_same || seq_equal(ls, rs) {
            return take(Origin::Left, ls, out);
        }
        if bs.is_empty() {
            let c = Conflict {
                class: ConflictClass::InsertInsert,
                base_part: vec![],
                left_part: ls.iter().collect(),
                right_part: rs.iter().collect(),
                location: at,
            };
            return self.push_conflict(c, out);
        }
        if ls.is_empty() || rs.is_empty() {
            let (side, survivors, matching) = if rs.is_empty() {
                (Origin::Left, ls, &self.bl)
            } else {
                (Origin::Right, rs, &self.br)
            };
            let base_ids: HashSet<NodeId> = bs.iter().map(|n| n.id).collect();
            let all_kept = survivors
                .iter()
                .all(|s| matching.backward(s.id).is_some_and(|id| base_ids.contains(&id)));
            if all_kept {
                let spos = by_id(survivors);
                let pairs: Vec<(&'a Node, Option<&'a Node>)> = bs
                    .iter()
                    .map(|bn| {
                        let s = matching
                            .forward(bn.id)
                            .and_then(|id| spos.get(&id))
                            .map(|&i| &survivors[i]);
                        (bn, s)
                    })
                    .collect();
                for (bn, s) in pairs {
                    if let Some(s) = s {
                        self.one_sided_delete(bn, side, s, out);
                    }
                }
                return;
            }
            let (left_part, right_part) = if side == Origin::Left {
                (ls.iter().collect(), vec![])
            } else {
                (vec![], rs.iter().collect())
            };
            let c = Conflict {
                class: ConflictClass::ModifyDelete,
                base_part: bs.iter().collect(),
                left_part,
                right_part,
                location: cover(bs),
            };
            return self.push_conflict(c, out);
        }
        let c = Conflict {
            class: ConflictClass::ModifyModify,
            base_part: bs.iter().collect(),
            left_part: ls.iter().collect(),
            right_part: rs.iter().collect(),
            location: cover(bs),
        };
        self.push_conflict(c, out);
    }
}
