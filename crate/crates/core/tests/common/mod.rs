//! Test oracles and random input generators shared by integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use structmerge::cst::{subtree_size, Node, Span, Tree};
use structmerge::matching::root_matchable;

// ---------------------------------------------------------------------------
// exhaustive matching

/// Maximum over every order-preserving partial pairing of `xs` and `ys`,
/// enumerated one pairing at a time.
pub fn brute_ordered(xs: &[Node], ys: &[Node], score: &dyn Fn(&Node, &Node) -> usize) -> usize {
    fn go(xs: &[Node], ys: &[Node], i: usize, next_j: usize, score: &dyn Fn(&Node, &Node) -> usize) -> usize {
        if i == xs.len() {
            return 0;
        }
        let mut best = go(xs, ys, i + 1, next_j, score);
        for j in next_j..ys.len() {
            let s = score(&xs[i], &ys[j]);
            if s > 0 {
                best = best.max(s + go(xs, ys, i + 1, j + 1, score));
            }
        }
        best
    }
    go(xs, ys, 0, 0, score)
}

/// Maximum over every injective partial map from `xs` into `ys`.
pub fn brute_unordered(xs: &[Node], ys: &[Node], score: &dyn Fn(&Node, &Node) -> usize) -> usize {
    fn go(xs: &[Node], ys: &[Node], i: usize, used: &mut Vec<bool>, score: &dyn Fn(&Node, &Node) -> usize) -> usize {
        if i == xs.len() {
            return 0;
        }
        let mut best = go(xs, ys, i + 1, used, score);
        for j in 0..ys.len() {
            if used[j] {
                continue;
            }
            let s = score(&xs[i], &ys[j]);
            if s > 0 {
                used[j] = true;
                best = best.max(s + go(xs, ys, i + 1, used, score));
                used[j] = false;
            }
        }
        best
    }
    go(xs, ys, 0, &mut vec![false; ys.len()], score)
}

/// Maximum level-wise matching by exhaustive search, no memoization.
pub fn oracle_match(a: &Node, b: &Node) -> usize {
    if !root_matchable(a, b) {
        return 0;
    }
    if a.is_terminal() {
        return usize::from(a.value() == b.value());
    }
    let children = if a.is_unordered() {
        brute_unordered(a.children(), b.children(), &oracle_match)
    } else {
        brute_ordered(a.children(), b.children(), &oracle_match)
    };
    1 + children
}

// ---------------------------------------------------------------------------
// random generic trees

const TERMINAL_KINDS: [&str; 2] = ["t", "u"];
const VALUES: [&str; 3] = ["a", "b", "c"];
/// `q` is always unordered, `p` and `r` always ordered.
const NT_KINDS: [&str; 3] = ["p", "q", "r"];
const IDENTIFIERS: [&str; 2] = ["x", "y"];

fn nonterminal(kind: &str, children: Vec<Node>) -> Node {
    let mut n = Node::non_terminal(kind, children, Span::default());
    n.set_unordered(kind == "q");
    n
}

fn terminal(rng: &mut StdRng) -> Node {
    Node::terminal(
        *TERMINAL_KINDS.choose(rng).unwrap(),
        *VALUES.choose(rng).unwrap(),
        Span::default(),
    )
}

/// Drops identifiers that repeat among siblings.
fn dedupe_identifiers(children: &mut [Node]) {
    let mut seen = Vec::new();
    for c in children {
        if let Some(id) = c.identifier.clone() {
            if seen.contains(&id) {
                c.identifier = None;
            } else {
                seen.push(id);
            }
        }
    }
}

/// A random tree of at most `budget` nodes and at most `max_children`
/// children per node.
pub fn random_node(rng: &mut StdRng, budget: usize, max_children: usize) -> Node {
    if budget <= 1 || rng.gen_bool(0.3) {
        return terminal(rng);
    }
    let kind = *NT_KINDS.choose(rng).unwrap();
    let mut left = budget - 1;
    let k = rng.gen_range(0..=left.min(max_children));
    let mut children = Vec::with_capacity(k);
    for i in 0..k {
        let remaining_slots = k - i - 1;
        let max_here = left - remaining_slots;
        let size = rng.gen_range(1..=max_here);
        let child = random_node(rng, size, max_children);
        left -= subtree_size(&child);
        children.push(child);
    }
    dedupe_identifiers(&mut children);
    let mut node = nonterminal(kind, children);
    if rng.gen_bool(0.25) {
        node.identifier = Some(IDENTIFIERS.choose(rng).unwrap().to_string());
    }
    node
}

fn all_paths(node: &Node, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(path.clone());
    for (i, c) in node.children().iter().enumerate() {
        path.push(i);
        all_paths(c, path, out);
        path.pop();
    }
}

fn at_mut<'n>(node: &'n mut Node, path: &[usize]) -> &'n mut Node {
    let mut cur = node;
    for &i in path {
        cur = &mut cur.children_mut().expect("path through NonTerminals")[i];
    }
    cur
}

/// A copy of `node` with a few random edits, at most `limit` nodes.
pub fn mutate(rng: &mut StdRng, node: &Node, limit: usize) -> Node {
    loop {
        let mut out = node.clone();
        for _ in 0..rng.gen_range(1..=3) {
            let mut paths = Vec::new();
            all_paths(&out, &mut Vec::new(), &mut paths);
            let path = paths.choose(rng).unwrap().clone();
            let target = at_mut(&mut out, &path);
            match rng.gen_range(0..5) {
                0 => {
                    if target.is_terminal() {
                        *target = Node::terminal(target.kind.clone(), *VALUES.choose(rng).unwrap(), Span::default());
                    }
                }
                1 => {
                    if let Some(ch) = target.children_mut().filter(|c| !c.is_empty()) {
                        let i = rng.gen_range(0..ch.len());
                        ch.remove(i);
                    }
                }
                2 => {
                    let new = random_node(rng, 3, 3);
                    if let Some(ch) = target.children_mut() {
                        let i = rng.gen_range(0..=ch.len());
                        ch.insert(i, new);
                        dedupe_identifiers(ch);
                    }
                }
                3 => {
                    if let Some(ch) = target.children_mut().filter(|c| c.len() >= 2) {
                        let i = rng.gen_range(0..ch.len());
                        let j = rng.gen_range(0..ch.len());
                        ch.swap(i, j);
                    }
                }
                _ => {
                    if !target.is_terminal() && !path.is_empty() {
                        target.identifier = if rng.gen_bool(0.5) {
                            Some(IDENTIFIERS.choose(rng).unwrap().to_string())
                        } else {
                            None
                        };
                        let parent = at_mut(&mut out, &path[..path.len() - 1]);
                        dedupe_identifiers(parent.children_mut().unwrap());
                    }
                }
            }
        }
        if subtree_size(&out) <= limit {
            return out;
        }
    }
}

pub fn tree(root: Node) -> Tree {
    Tree::new(root, "", "generic").expect("generated trees are valid")
}

/// Pairs of small trees: half unrelated, half one a mutation of the other.
pub fn random_pair(rng: &mut StdRng, limit: usize) -> (Tree, Tree) {
    let a = random_node(rng, limit, 6);
    let b = if rng.gen_bool(0.5) {
        mutate(rng, &a, limit)
    } else {
        random_node(rng, limit, 6)
    };
    (tree(a), tree(b))
}

/// A root of the given kind over `k ≤ max` random children of depth ≤ 3.
pub fn random_children(rng: &mut StdRng, kind: &str, max: usize) -> Node {
    let k = rng.gen_range(0..=max);
    let mut children: Vec<Node> = (0..k).map(|_| random_node(rng, 7, 2)).collect();
    dedupe_identifiers(&mut children);
    nonterminal(kind, children)
}

/// Like [`random_children`], but with children drawn partly from `other`.
pub fn related_children(rng: &mut StdRng, other: &Node, max: usize) -> Node {
    let mut children: Vec<Node> = Vec::new();
    for c in other.children() {
        match rng.gen_range(0..4) {
            0 => {}
            1 => children.push(mutate(rng, c, 7)),
            _ => children.push(c.clone()),
        }
    }
    while children.len() < max && rng.gen_bool(0.4) {
        let i = rng.gen_range(0..=children.len());
        children.insert(i, random_node(rng, 7, 2));
    }
    children.shuffle(rng);
    children.truncate(max);
    dedupe_identifiers(&mut children);
    nonterminal(&other.kind, children)
}

// ---------------------------------------------------------------------------
// random MiniLang programs

const TYPES: [&str; 4] = ["int", "long", "String", "boolean"];
const MODS: [&str; 4] = ["public", "private", "static", "final"];
const STMTS: [&str; 10] = [
    "count++;",
    "reset();",
    "total += step;",
    "log(total);",
    "if (ready) { start(); }",
    "return total;",
    "x = y * 2;",
    "flush();",
    "while (busy) { wait(); }",
    "check(a, b);",
];

#[derive(Clone, Debug)]
pub enum Member {
    Field {
        mods: Vec<&'static str>,
        ty: &'static str,
        name: String,
        init: Option<String>,
    },
    Method {
        mods: Vec<&'static str>,
        ty: &'static str,
        name: String,
        params: Vec<(&'static str, String)>,
        body: Vec<String>,
    },
}

impl Member {
    fn key(&self) -> String {
        match self {
            Member::Field { name, .. } => name.clone(),
            Member::Method { name, params, .. } => {
                let tys: Vec<&str> = params.iter().map(|p| p.0).collect();
                format!("{name}({})", tys.join(","))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    pub imports: Vec<String>,
    pub class: String,
    pub members: Vec<Member>,
}

impl Program {
    pub fn print(&self) -> String {
        let mut s = String::new();
        for i in &self.imports {
            s.push_str(&format!("import {i};\n"));
        }
        if !self.imports.is_empty() {
            s.push('\n');
        }
        s.push_str(&format!("class {} {{\n", self.class));
        for m in &self.members {
            match m {
                Member::Field { mods, ty, name, init } => {
                    s.push_str("    ");
                    for m in mods {
                        s.push_str(m);
                        s.push(' ');
                    }
                    s.push_str(&format!("{ty} {name}"));
                    if let Some(e) = init {
                        s.push_str(&format!(" = {e}"));
                    }
                    s.push_str(";\n");
                }
                Member::Method {
                    mods,
                    ty,
                    name,
                    params,
                    body,
                } => {
                    s.push_str("\n    ");
                    for m in mods {
                        s.push_str(m);
                        s.push(' ');
                    }
                    let ps: Vec<String> = params.iter().map(|(t, n)| format!("{t} {n}")).collect();
                    s.push_str(&format!("{ty} {name}({}) {{\n", ps.join(", ")));
                    for st in body {
                        s.push_str(&format!("        {st}\n"));
                    }
                    s.push_str("    }\n");
                }
            }
        }
        s.push_str("}\n");
        s
    }

    fn fresh_member(&self, rng: &mut StdRng) -> Member {
        loop {
            let m = if rng.gen_bool(0.5) {
                Member::Field {
                    mods: random_mods(rng),
                    ty: TYPES.choose(rng).unwrap(),
                    name: format!("f{}", rng.gen_range(0..12)),
                    init: rng.gen_bool(0.3).then(|| rng.gen_range(0..100).to_string()),
                }
            } else {
                let n_params = rng.gen_range(0..3);
                Member::Method {
                    mods: random_mods(rng),
                    ty: TYPES.choose(rng).unwrap(),
                    name: format!("m{}", rng.gen_range(0..12)),
                    params: (0..n_params)
                        .map(|i| (*TYPES.choose(rng).unwrap(), format!("p{i}")))
                        .collect(),
                    body: (0..rng.gen_range(0..4))
                        .map(|_| STMTS.choose(rng).unwrap().to_string())
                        .collect(),
                }
            };
            if self.members.iter().all(|x| x.key() != m.key()) {
                return m;
            }
        }
    }

    pub fn random(rng: &mut StdRng, members: usize) -> Program {
        let mut p = Program {
            imports: (0..rng.gen_range(0..3)).map(|i| format!("lib{i}.Type{i}")).collect(),
            class: "Sample".into(),
            members: Vec::new(),
        };
        for _ in 0..members {
            let m = p.fresh_member(rng);
            p.members.push(m);
        }
        p
    }

    /// A copy with one to three random edits.
    pub fn mutate(&self, rng: &mut StdRng) -> Program {
        let mut p = self.clone();
        for _ in 0..rng.gen_range(1..=3) {
            let n = p.members.len();
            match rng.gen_range(0..10) {
                0 => {
                    let m = p.fresh_member(rng);
                    let at = rng.gen_range(0..=n);
                    p.members.insert(at, m);
                }
                1 if n > 0 => {
                    p.members.remove(rng.gen_range(0..n));
                }
                2 if n > 1 => {
                    let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    p.members.swap(i, j);
                }
                3 => {
                    let i = p.imports.len();
                    let name = format!("extra{}.T{}", rng.gen_range(0..4), i);
                    if !p.imports.contains(&name) {
                        p.imports.push(name);
                    }
                }
                4 if !p.imports.is_empty() => {
                    let i = rng.gen_range(0..p.imports.len());
                    p.imports.remove(i);
                }
                _ if n > 0 => {
                    let i = rng.gen_range(0..n);
                    edit_member(rng, &mut p.members[i]);
                }
                _ => {}
            }
        }
        p
    }
}

fn random_mods(rng: &mut StdRng) -> Vec<&'static str> {
    let mut mods: Vec<&'static str> = MODS.iter().copied().filter(|_| rng.gen_bool(0.2)).collect();
    mods.dedup();
    mods
}

fn edit_member(rng: &mut StdRng, m: &mut Member) {
    match m {
        Member::Field { mods, ty, init, .. } => match rng.gen_range(0..3) {
            0 => *ty = TYPES.choose(rng).unwrap(),
            1 => toggle_mod(rng, mods),
            _ => *init = rng.gen_bool(0.5).then(|| rng.gen_range(0..100).to_string()),
        },
        Member::Method { mods, body, .. } => match rng.gen_range(0..4) {
            0 => toggle_mod(rng, mods),
            1 => {
                let at = rng.gen_range(0..=body.len());
                body.insert(at, STMTS.choose(rng).unwrap().to_string());
            }
            2 if !body.is_empty() => {
                body.remove(rng.gen_range(0..body.len()));
            }
            _ if !body.is_empty() => {
                let i = rng.gen_range(0..body.len());
                body[i] = STMTS.choose(rng).unwrap().to_string();
            }
            _ => body.push(STMTS.choose(rng).unwrap().to_string()),
        },
    }
}

fn toggle_mod(rng: &mut StdRng, mods: &mut Vec<&'static str>) {
    let m = *MODS.choose(rng).unwrap();
    if let Some(i) = mods.iter().position(|x| *x == m) {
        mods.remove(i);
    } else {
        mods.push(m);
    }
}

/// A class with roughly `target` nodes in its parse tree.
pub fn large_program(rng: &mut StdRng, target: usize) -> Program {
    let mut p = Program {
        imports: vec!["lib.Big".into()],
        class: "Big".into(),
        members: Vec::new(),
    };
    let mut i = 0;
    // about 13 nodes per method; the margin covers a few deletions
    while p.members.len() * 13 < target + 100 {
        p.members.push(Member::Method {
            mods: vec!["public"],
            ty: "int",
            name: format!("op{i}"),
            params: vec![("int", "v".into())],
            body: (0..3).map(|_| STMTS.choose(rng).unwrap().to_string()).collect(),
        });
        i += 1;
    }
    p
}
