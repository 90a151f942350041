//! Source text to [`Tree`] conversion.
//!
//! A [`ParserBackend`] turns text into a raw tree. [`Registry::parse`] then
//! runs the profile pipeline on it: handlers, identifier rules, flattening
//! and finally the unordered flags.

pub mod minilang;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::cst::{Origin, Span, Tree};
use crate::langconfig::{self, ConfigError, HandlerRegistry, LanguageProfile};

pub use minilang::{parse_minilang, MiniLang};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("parse error at {}:{}: {message}", position.start_line, position.start_col)]
pub struct ParseError {
    pub position: Span,
    pub message: String,
}

/// A pluggable parser. Implementations must be deterministic and safe to
/// call from several threads at once.
pub trait ParserBackend: Send + Sync {
    fn name(&self) -> &str;

    fn parse(&self, source: &str, profile: &LanguageProfile) -> Result<Tree, ParseError>;

    /// Node kinds this backend only ever produces as Terminals.
    fn terminal_kinds(&self) -> &[&str];

    /// Splits text into tokens with all trivia dropped. Used by the
    /// canonical printer on the text between nodes.
    fn canonical_tokens(&self, text: &str) -> Vec<String>;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no parser backend named `{0}`")]
    UnknownBackend(String),
}

/// Backends keyed by name, plus the handler registry used by profiles.
#[derive(Clone)]
pub struct Registry {
    backends: BTreeMap<String, Arc<dyn ParserBackend>>,
    handlers: HandlerRegistry,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("backends", &self.backends.keys().collect::<Vec<_>>())
            .field("handlers", &self.handlers)
            .finish()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::with_builtins()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            backends: BTreeMap::new(),
            handlers: HandlerRegistry::with_builtins(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Registry::empty();
        r.register(Arc::new(MiniLang));
        r
    }

    pub fn register(&mut self, backend: Arc<dyn ParserBackend>) {
        self.backends.insert(backend.name().to_string(), backend);
    }

    pub fn backend(&self, name: &str) -> Option<&Arc<dyn ParserBackend>> {
        self.backends.get(name)
    }

    pub fn handlers(&self) -> &HandlerRegistry {
        &self.handlers
    }

    pub fn handlers_mut(&mut self) -> &mut HandlerRegistry {
        &mut self.handlers
    }

    /// Parses with the profile's backend and applies the profile pipeline.
    pub fn parse(&self, source: &str, profile: &LanguageProfile) -> Result<Tree, Error> {
        let backend = self
            .backend(&profile.backend)
            .ok_or_else(|| Error::UnknownBackend(profile.backend.clone()))?;
        let tree = backend.parse(source, profile)?;
        let tree = langconfig::apply_handlers(tree, profile, &self.handlers)?;
        let tree = langconfig::assign_identifiers(tree, profile)?;
        let tree = langconfig::flatten(tree, profile)?;
        Ok(langconfig::mark_unordered(tree, profile)?)
    }

    pub fn parse_revision(&self, source: &str, profile: &LanguageProfile, origin: Origin) -> Result<Tree, Error> {
        Ok(self.parse(source, profile)?.with_origin(origin))
    }
}

/// [`Registry::parse`] against the built-in backends.
pub fn parse(source: &str, profile: &LanguageProfile) -> Result<Tree, Error> {
    Registry::with_builtins().parse(source, profile)
}
