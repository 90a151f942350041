//! diff3 line merge.
//!
//! Both sides are aligned against base with a Myers diff. Base lines that
//! are matched on both sides and line up in all three files form stable
//! regions; everything in between is an unstable region resolved by the
//! usual diff3 rules. Changes with no stable line between them land in the
//! same unstable region and conflict.

use similar::{capture_diff_slices, Algorithm, DiffOp};

use crate::render::{newline_style, write_conflict_block, RenderOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineMergeResult {
    pub text: String,
    pub conflict_count: usize,
    pub clean: bool,
}

/// One region of a three-way line merge, as line ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Chunk {
    Stable {
        base: (usize, usize),
    },
    Changed {
        base: (usize, usize),
        left: (usize, usize),
        right: (usize, usize),
    },
}

/// Splits after every `\n`, keeping the terminators.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

/// `(base_start, other_start, len)` runs of equal lines.
fn matching_runs(base: &[&str], other: &[&str]) -> Vec<(usize, usize, usize)> {
    capture_diff_slices(Algorithm::Myers, base, other)
        .into_iter()
        .filter_map(|op| match op {
            DiffOp::Equal {
                old_index,
                new_index,
                len,
            } => Some((old_index, new_index, len)),
            _ => None,
        })
        .collect()
}

/// Base ranges matched on both sides, with the corresponding left and
/// right starts. A zero-length sentinel at the three ends closes the list.
fn sync_regions(base: &[&str], left: &[&str], right: &[&str]) -> Vec<(usize, usize, usize, usize)> {
    let a = matching_runs(base, left);
    let b = matching_runs(base, right);
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let (abase, aleft, alen) = a[i];
        let (bbase, bright, blen) = b[j];
        let start = abase.max(bbase);
        let end = (abase + alen).min(bbase + blen);
        if start < end {
            out.push((start, aleft + (start - abase), bright + (start - bbase), end - start));
        }
        if abase + alen < bbase + blen {
            i += 1;
        } else {
            j += 1;
        }
    }
    out.push((base.len(), left.len(), right.len(), 0));
    out
}

/// The diff3 chunking of three line sequences.
pub fn chunks(base: &[&str], left: &[&str], right: &[&str]) -> Vec<Chunk> {
    let mut out = Vec::new();
    let (mut bz, mut lz, mut rz) = (0, 0, 0);
    for (bs, ls, rs, len) in sync_regions(base, left, right) {
        if bz < bs || lz < ls || rz < rs {
            out.push(Chunk::Changed {
                base: (bz, bs),
                left: (lz, ls),
                right: (rz, rs),
            });
        }
        if len > 0 {
            out.push(Chunk::Stable { base: (bs, bs + len) });
        }
        (bz, lz, rz) = (bs + len, ls + len, rs + len);
    }
    out
}

fn push_block(out: &mut String, lines: &[&str], nl: &str) {
    for l in lines {
        out.push_str(l);
    }
    if !out.is_empty() && !out.ends_with('\n') {
        out.push_str(nl);
    }
}

fn block(lines: &[&str], nl: &str) -> String {
    let mut s = String::new();
    push_block(&mut s, lines, nl);
    s
}

pub fn diff3_merge(base: &str, left: &str, right: &str, opts: &RenderOptions) -> LineMergeResult {
    let (b, l, r) = (split_lines(base), split_lines(left), split_lines(right));
    let nl = newline_style(base);
    let mut text = String::with_capacity(left.len().max(right.len()));
    let mut conflict_count = 0;
    for chunk in chunks(&b, &l, &r) {
        match chunk {
            Chunk::Stable { base: (s, e) } => text.extend(b[s..e].iter().copied()),
            Chunk::Changed {
                base: (bs, be),
                left: (ls, le),
                right: (rs, re),
            } => {
                let (bb, ll, rr) = (&b[bs..be], &l[ls..le], &r[rs..re]);
                if ll == bb {
                    text.extend(rr.iter().copied());
                } else if rr == bb || ll == rr {
                    text.extend(ll.iter().copied());
                } else {
                    conflict_count += 1;
                    if !text.is_empty() && !text.ends_with('\n') {
                        text.push_str(nl);
                    }
                    write_conflict_block(&mut text, opts, nl, &block(ll, nl), &block(bb, nl), &block(rr, nl));
                }
            }
        }
    }
    LineMergeResult {
        text,
        conflict_count,
        clean: conflict_count == 0,
    }
}
