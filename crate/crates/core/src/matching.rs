//! Maximum tree matching.
//!
//! Two nodes may only be paired when they have the same arity and kind and
//! do not carry different identifiers. Terminals match when their values
//! are identical. NonTerminals score one plus the best matching of their
//! children, computed level-wise: ordered children by a longest-common-
//! subsequence style dynamic program over the child grid, unordered children
//! by an optimal assignment (Hungarian method, cubic time).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::cst::{deep_equal, Node, NodeId, Tree};
use crate::par::{self, Parallelism};

/// True iff `a` and `b` may be paired at all.
pub fn root_matchable(a: &Node, b: &Node) -> bool {
    a.arity() == b.arity()
        && a.kind == b.kind
        && !matches!((&a.identifier, &b.identifier), (Some(x), Some(y)) if x != y)
}

/// How the children of a scored pair line up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Alignment {
    /// The subtrees are deep-equal; children pair up index by index, all
    /// the way down.
    Exact,
    /// Child index pairs `(i, j)` with a positive score.
    Pairs(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub score: usize,
    pub alignment: Alignment,
}

/// Scores for node pairs of one tree pair, keyed `(node in a, node in b)`.
#[derive(Clone, Debug)]
pub struct MatchingStore<'t> {
    a: &'t Tree,
    b: &'t Tree,
    entries: HashMap<(NodeId, NodeId), Entry>,
}

impl<'t> MatchingStore<'t> {
    pub fn new(a: &'t Tree, b: &'t Tree) -> Self {
        MatchingStore {
            a,
            b,
            entries: HashMap::new(),
        }
    }

    pub fn tree_a(&self) -> &'t Tree {
        self.a
    }

    pub fn tree_b(&self) -> &'t Tree {
        self.b
    }

    pub fn entry(&self, a: NodeId, b: NodeId) -> Option<&Entry> {
        self.entries.get(&(a, b))
    }

    /// Stored score, 0 when the pair was never scored positively.
    pub fn score(&self, a: NodeId, b: NodeId) -> usize {
        self.entry(a, b).map_or(0, |e| e.score)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All stored `(a, b, score)` triples, sorted.
    pub fn triples(&self) -> Vec<(NodeId, NodeId, usize)> {
        let mut out: Vec<_> = self.entries.iter().map(|(&(a, b), e)| (a, b, e.score)).collect();
        out.sort();
        out
    }

    /// Tab-separated `idA idB score` lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (a, b, s) in self.triples() {
            let _ = writeln!(out, "{a}\t{b}\t{s}");
        }
        out
    }

    /// Scores the two roots and returns the root score.
    pub fn match_roots(&mut self) -> usize {
        let (a, b) = (self.a, self.b);
        match_trees(a.root(), b.root(), self)
    }

    /// One-to-one node pairing read off the stored alignments, starting at
    /// the roots.
    pub fn matching(&self) -> Matching {
        let mut m = Matching::new(self.a.node_count(), self.b.node_count());
        let (ra, rb) = (self.a.root(), self.b.root());
        if self.score(ra.id, rb.id) > 0 {
            self.collect(ra, rb, &mut m);
        }
        m
    }

    fn collect(&self, a: &Node, b: &Node, m: &mut Matching) {
        m.insert(a.id, b.id);
        match self.entry(a.id, b.id).map(|e| &e.alignment) {
            Some(Alignment::Exact) => pair_exact(a, b, m),
            Some(Alignment::Pairs(pairs)) => {
                for &(i, j) in pairs {
                    self.collect(&a.children()[i], &b.children()[j], m);
                }
            }
            None => {}
        }
    }
}

fn pair_exact(a: &Node, b: &Node, m: &mut Matching) {
    m.insert(a.id, b.id);
    for (x, y) in a.children().iter().zip(b.children()) {
        pair_exact(x, y, m);
    }
}

/// Bidirectional node pairing between two trees.
#[derive(Clone, Debug, Default)]
pub struct Matching {
    a_to_b: Vec<Option<NodeId>>,
    b_to_a: Vec<Option<NodeId>>,
}

impl Matching {
    pub fn new(a_nodes: usize, b_nodes: usize) -> Self {
        Matching {
            a_to_b: vec![None; a_nodes],
            b_to_a: vec![None; b_nodes],
        }
    }

    fn insert(&mut self, a: NodeId, b: NodeId) {
        self.a_to_b[a.index()] = Some(b);
        self.b_to_a[b.index()] = Some(a);
    }

    pub fn forward(&self, a: NodeId) -> Option<NodeId> {
        self.a_to_b.get(a.index()).copied().flatten()
    }

    pub fn backward(&self, b: NodeId) -> Option<NodeId> {
        self.b_to_a.get(b.index()).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.a_to_b.iter().filter(|x| x.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same pairing viewed from the other tree.
    pub fn reversed(&self) -> Matching {
        Matching {
            a_to_b: self.b_to_a.clone(),
            b_to_a: self.a_to_b.clone(),
        }
    }
}

/// Size of the maximum matching between the subtrees at `a` and `b`.
/// `a` must belong to `store.tree_a()` and `b` to `store.tree_b()`.
pub fn match_trees(a: &Node, b: &Node, store: &mut MatchingStore<'_>) -> usize {
    if !root_matchable(a, b) {
        return 0;
    }
    if let Some(e) = store.entries.get(&(a.id, b.id)) {
        return e.score;
    }
    let entry = score_pair(a, b, store);
    let score = entry.as_ref().map_or(0, |e| e.score);
    if let Some(entry) = entry {
        store.entries.insert((a.id, b.id), entry);
    }
    score
}

fn score_pair(a: &Node, b: &Node, store: &mut MatchingStore<'_>) -> Option<Entry> {
    if a.is_terminal() {
        return (a.value() == b.value()).then_some(Entry {
            score: 1,
            alignment: Alignment::Pairs(Vec::new()),
        });
    }
    if store.a.hash_of(a.id) == store.b.hash_of(b.id) && deep_equal(a, b) {
        return Some(Entry {
            score: store.a.size_of(a.id),
            alignment: Alignment::Exact,
        });
    }
    let (value, pairs) = if a.is_unordered() {
        match_children_unordered(a.children(), b.children(), store)
    } else {
        match_children_ordered(a.children(), b.children(), store)
    };
    Some(Entry {
        score: 1 + value,
        alignment: Alignment::Pairs(pairs),
    })
}

fn weights(xs: &[Node], ys: &[Node], store: &mut MatchingStore<'_>) -> Vec<Vec<usize>> {
    xs.iter()
        .map(|x| ys.iter().map(|y| match_trees(x, y, store)).collect())
        .collect()
}

/// Best order-preserving pairing of two child sequences.
///
/// Returns the total matched-node count and the chosen `(i, j)` pairs in
/// increasing order. Among optimal alignments the traceback prefers
/// diagonal steps, then skipping from `xs`, so ties resolve towards the
/// leftmost pairs.
pub fn match_children_ordered(xs: &[Node], ys: &[Node], store: &mut MatchingStore<'_>) -> (usize, Vec<(usize, usize)>) {
    let w = weights(xs, ys, store);
    let (n, m) = (xs.len(), ys.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            d[i][j] = d[i - 1][j].max(d[i][j - 1]).max(d[i - 1][j - 1] + w[i - 1][j - 1]);
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        let wij = w[i - 1][j - 1];
        if wij > 0 && d[i][j] == d[i - 1][j - 1] + wij {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if d[i][j] == d[i - 1][j] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    (d[n][m], pairs)
}

/// Best one-to-one pairing of two child sets, ignoring order.
///
/// Pairs with score 0 are dropped. Ties between optimal assignments favour
/// deep-equal pairs.
pub fn match_children_unordered(
    xs: &[Node],
    ys: &[Node],
    store: &mut MatchingStore<'_>,
) -> (usize, Vec<(usize, usize)>) {
    if xs.is_empty() || ys.is_empty() {
        return (0, Vec::new());
    }
    let w = weights(xs, ys, store);
    let bonus_scale = xs.len().min(ys.len()) as i64 + 1;
    let mut weighted: Vec<Vec<i64>> = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        let mut row = Vec::with_capacity(ys.len());
        for (j, y) in ys.iter().enumerate() {
            let s = w[i][j] as i64;
            let exact = s > 0 && store.a.hash_of(x.id) == store.b.hash_of(y.id) && deep_equal(x, y);
            row.push(s * bonus_scale + i64::from(exact));
        }
        weighted.push(row);
    }
    let assignment = max_weight_assignment(&weighted);
    let mut pairs: Vec<(usize, usize)> = assignment.into_iter().filter(|&(i, j)| w[i][j] > 0).collect();
    pairs.sort_unstable();
    let value = pairs.iter().map(|&(i, j)| w[i][j]).sum();
    (value, pairs)
}

/// Maximum-weight assignment on a rectangular non-negative matrix; returns
/// one `(row, col)` pair per row or column, whichever is fewer.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<(usize, usize)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let max = weights.iter().flatten().copied().max().unwrap_or(0);
    if rows <= cols {
        let cost: Vec<Vec<i64>> = weights.iter().map(|r| r.iter().map(|w| max - w).collect()).collect();
        hungarian(&cost).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<i64>> = (0..cols)
            .map(|j| (0..rows).map(|i| max - weights[i][j]).collect())
            .collect();
        hungarian(&cost).into_iter().enumerate().map(|(j, i)| (i, j)).collect()
    }
}

/// Minimum-cost assignment of every row to a distinct column (rows ≤
/// columns), using potentials and shortest augmenting paths. O(n²m).
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    // p[j]: row assigned to column j (1-based, 0 = none)
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Stores for the three revision pairs of a merge.
#[derive(Debug)]
pub struct Matchings<'t> {
    pub base_left: MatchingStore<'t>,
    pub base_right: MatchingStore<'t>,
    pub left_right: MatchingStore<'t>,
}

impl<'t> Matchings<'t> {
    pub fn root_scores(&self) -> (usize, usize, usize) {
        let score = |s: &MatchingStore<'_>| s.score(s.a.root().id, s.b.root().id);
        (score(&self.base_left), score(&self.base_right), score(&self.left_right))
    }
}

/// Matches (base, left), (base, right) and (left, right). The three pairs
/// share nothing mutable and run concurrently under [`Parallelism::Rayon`].
pub fn compute_matchings<'t>(base: &'t Tree, left: &'t Tree, right: &'t Tree, mode: Parallelism) -> Matchings<'t> {
    let run = |a: &'t Tree, b: &'t Tree| {
        let mut store = MatchingStore::new(a, b);
        store.match_roots();
        store
    };
    let (base_left, base_right, left_right) =
        par::join3(mode, || run(base, left), || run(base, right), || run(left, right));
    Matchings {
        base_left,
        base_right,
        left_right,
    }
}
