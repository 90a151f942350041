//! Generic structured three-way merge.
//!
//! Source files are parsed into generic concrete syntax trees ([`cst`]),
//! adjusted by a language profile ([`langconfig`]), matched pairwise
//! ([`matching`]), amalgamated ([`merge`]) and printed back with the
//! original formatting ([`render`]). A diff3 line merge ([`linemerge`])
//! serves as a first pass and fallback.

pub mod cst;
pub mod driver;
pub mod harness;
pub mod langconfig;
pub mod linemerge;
pub mod matching;
pub mod merge;
pub mod par;
pub mod parser;
pub mod render;
