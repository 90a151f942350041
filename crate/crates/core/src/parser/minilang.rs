//! MiniLang: a small Java-flavoured language used for hermetic tests.
//!
//! ```text
//! program     := (import_decl | class_decl)*
//! import_decl := "import" dotted_name ";"
//! class_decl  := modifiers "class" NAME class_body
//! class_body  := "{" (field_decl | method_decl)* "}"
//! field_decl  := modifiers type NAME ("=" expr)? ";"
//! method_decl := modifiers type NAME "(" params ")" (block | ";")
//! params      := (param ("," param)*)?
//! param       := type NAME
//! block       := "{" stmt* "}"
//! ```
//!
//! Statements are kept whole: each one becomes a single `stmt` Terminal.
//! Terminal values are the token text re-joined with canonical spacing, so
//! they do not depend on the original layout.

use crate::cst::{LineIndex, Node, Span, Tree};
use crate::langconfig::LanguageProfile;
use crate::parser::{ParseError, ParserBackend};

pub const MODIFIERS: [&str; 6] = ["public", "private", "protected", "static", "final", "abstract"];

const TERMINAL_KINDS: [&str; 6] = ["dotted_name", "name", "type", "modifier", "expr", "stmt"];

const OPERATORS: [&str; 24] = [
    ">>>=", "<<=", ">>=", "...", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "->", "::", "<<", ">>",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TokKind {
    Word,
    Number,
    Str,
    Punct,
}

#[derive(Clone, Copy, Debug)]
struct Token<'s> {
    kind: TokKind,
    text: &'s str,
    start: usize,
    end: usize,
}

/// The built-in MiniLang backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct MiniLang;

impl ParserBackend for MiniLang {
    fn name(&self) -> &str {
        "minilang"
    }

    fn parse(&self, source: &str, profile: &LanguageProfile) -> Result<Tree, ParseError> {
        let root = parse_program(source)?;
        Tree::new(root, source, profile.name.clone()).map_err(|e| ParseError {
            position: Span::default(),
            message: e.to_string(),
        })
    }

    fn terminal_kinds(&self) -> &[&str] {
        &TERMINAL_KINDS
    }

    fn canonical_tokens(&self, text: &str) -> Vec<String> {
        match lex(text) {
            Ok(tokens) => tokens.iter().map(|t| t.text.to_string()).collect(),
            Err(_) => text.split_whitespace().map(str::to_string).collect(),
        }
    }
}

/// Parses MiniLang source into an untransformed tree (no identifiers, all
/// nodes ordered).
pub fn parse_minilang(source: &str) -> Result<Tree, ParseError> {
    let root = parse_program(source)?;
    Tree::new(root, source, "minilang").map_err(|e| ParseError {
        position: Span::default(),
        message: e.to_string(),
    })
}

fn parse_program(source: &str) -> Result<Node, ParseError> {
    let tokens = lex(source).map_err(|(offset, message)| ParseError {
        position: LineIndex::new(source).span(offset, offset),
        message,
    })?;
    let mut p = Parser {
        source,
        lines: LineIndex::new(source),
        tokens,
        pos: 0,
    };
    let mut children = Vec::new();
    while !p.at_end() {
        if p.peek_is("import") {
            children.push(p.import_decl()?);
        } else {
            children.push(p.class_decl()?);
        }
    }
    Ok(Node::non_terminal("program", children, p.lines.span(0, source.len())))
}

fn lex(source: &str) -> Result<Vec<Token<'_>>, (usize, String)> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < source.len() {
        let c = source[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if source[i..].starts_with("//") {
            i = source[i..].find('\n').map_or(source.len(), |n| i + n);
            continue;
        }
        if source[i..].starts_with("/*") {
            match source[i + 2..].find("*/") {
                Some(n) => i += n + 4,
                None => return Err((i, "unterminated block comment".into())),
            }
            continue;
        }
        let start = i;
        let kind = if c.is_alphabetic() || c == '_' || c == '$' {
            while let Some(c) = source[i..].chars().next() {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    i += c.len_utf8();
                } else {
                    break;
                }
            }
            TokKind::Word
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_') {
                i += 1;
            }
            TokKind::Number
        } else if c == '"' || c == '\'' {
            let quote = bytes[i];
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err((start, "unterminated literal".into())),
                    Some(b'\\') => i += 2,
                    Some(&b) if b == quote => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            if i > source.len() {
                return Err((start, "unterminated literal".into()));
            }
            TokKind::Str
        } else {
            let op = OPERATORS.iter().find(|op| source[i..].starts_with(**op));
            i += op.map_or(c.len_utf8(), |op| op.len());
            TokKind::Punct
        };
        tokens.push(Token {
            kind,
            text: &source[start..i],
            start,
            end: i,
        });
    }
    Ok(tokens)
}

const KEYWORDS_BEFORE_PAREN: [&str; 7] = ["if", "while", "for", "switch", "catch", "return", "synchronized"];

fn is_word_like(tok: &str) -> bool {
    tok.chars()
        .next()
        .is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '$' || c == '"' || c == '\'')
}

/// Joins tokens with single spaces, gluing punctuation that conventionally
/// has no surrounding space.
pub(crate) fn join_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for tok in tokens {
        if let Some(p) = prev {
            let glue = matches!(tok, ";" | "," | ")" | "]" | "." | "++" | "--")
                || matches!(p, "(" | "[" | "." | "!")
                || (matches!(tok, "(" | "[")
                    && !KEYWORDS_BEFORE_PAREN.contains(&p)
                    && (is_word_like(p) || matches!(p, ")" | "]" | ">")));
            if !glue {
                out.push(' ');
            }
        }
        out.push_str(tok);
        prev = Some(tok);
    }
    out
}

fn join_type_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for tok in tokens {
        if let Some(p) = prev {
            if p == "," || (is_word_like(p) && is_word_like(tok)) {
                out.push(' ');
            }
        }
        out.push_str(tok);
        prev = Some(tok);
    }
    out
}

struct Parser<'s> {
    source: &'s str,
    lines: LineIndex,
    tokens: Vec<Token<'s>>,
    pos: usize,
}

impl<'s> Parser<'s> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<Token<'s>> {
        self.tokens.get(self.pos).copied()
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text)
    }

    fn peek_at_is(&self, offset: usize, text: &str) -> bool {
        self.tokens.get(self.pos + offset).is_some_and(|t| t.text == text)
    }

    /// Start offset of the next token, or end of input.
    fn next_start(&self) -> usize {
        self.peek().map_or(self.source.len(), |t| t.start)
    }

    fn prev_end(&self) -> usize {
        self.tokens[self.pos - 1].end
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (start, end) = match self.peek() {
            Some(t) => (t.start, t.end),
            None => (self.source.len(), self.source.len()),
        };
        ParseError {
            position: self.lines.span(start, end),
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Token<'s> {
        let t = self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn expect(&mut self, text: &str) -> Result<Token<'s>, ParseError> {
        if self.peek_is(text) {
            Ok(self.bump())
        } else {
            let found = self.peek().map_or("end of input", |t| t.text);
            Err(self.error_here(format!("expected `{text}`, found `{found}`")))
        }
    }

    fn span(&self, start: usize, end: usize) -> Span {
        self.lines.span(start, end)
    }

    fn name(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(t)
                if t.kind == TokKind::Word && !MODIFIERS.contains(&t.text) && !matches!(t.text, "class" | "import") =>
            {
                self.bump();
                Ok(Node::terminal("name", t.text, self.span(t.start, t.end)))
            }
            _ => Err(self.error_here("expected a name")),
        }
    }

    fn import_decl(&mut self) -> Result<Node, ParseError> {
        let start = self.expect("import")?.start;
        let first = match self.peek() {
            Some(t) if t.kind == TokKind::Word => self.bump(),
            _ => return Err(self.error_here("expected an import path")),
        };
        let mut parts = vec![first.text];
        let mut end = first.end;
        while self.peek_is(".") {
            parts.push(self.bump().text);
            match self.peek() {
                Some(t) if t.kind == TokKind::Word || t.text == "*" => {
                    self.bump();
                    parts.push(t.text);
                    end = t.end;
                }
                _ => return Err(self.error_here("expected a name after `.`")),
            }
        }
        let dotted = Node::terminal("dotted_name", parts.concat(), self.span(first.start, end));
        let semi = self.expect(";")?;
        Ok(Node::non_terminal(
            "import_decl",
            vec![dotted],
            self.span(start, semi.end),
        ))
    }

    /// Modifier list. When non-empty its span runs up to the next token so
    /// that the whitespace after the last modifier belongs to the list.
    fn modifiers(&mut self) -> Node {
        let start = self.next_start();
        let mut mods = Vec::new();
        while let Some(t) = self.peek() {
            if !MODIFIERS.contains(&t.text) {
                break;
            }
            self.bump();
            mods.push(Node::terminal("modifier", t.text, self.span(t.start, t.end)));
        }
        let end = if mods.is_empty() { start } else { self.next_start() };
        Node::non_terminal("modifiers", mods, self.span(start, end))
    }

    fn class_decl(&mut self) -> Result<Node, ParseError> {
        let start = self.next_start();
        let modifiers = self.modifiers();
        self.expect("class")?;
        let name = self.name()?;
        let body = self.class_body()?;
        let end = body.span.end_byte;
        Ok(Node::non_terminal(
            "class_decl",
            vec![modifiers, name, body],
            self.span(start, end),
        ))
    }

    fn class_body(&mut self) -> Result<Node, ParseError> {
        let open = self.expect("{")?;
        let mut members = Vec::new();
        while !self.peek_is("}") {
            if self.at_end() {
                return Err(self.error_here("unclosed class body"));
            }
            members.push(self.member()?);
        }
        let close = self.bump();
        Ok(Node::non_terminal(
            "class_body",
            members,
            self.span(open.start, close.end),
        ))
    }

    fn type_ref(&mut self) -> Result<Node, ParseError> {
        let start = self.next_start();
        let mut parts: Vec<&str> = Vec::new();
        match self.peek() {
            Some(t)
                if t.kind == TokKind::Word && !MODIFIERS.contains(&t.text) && !matches!(t.text, "class" | "import") =>
            {
                parts.push(self.bump().text)
            }
            _ => return Err(self.error_here("expected a type")),
        }
        while self.peek_is(".") && self.tokens.get(self.pos + 1).is_some_and(|t| t.kind == TokKind::Word) {
            parts.push(self.bump().text);
            parts.push(self.bump().text);
        }
        if self.peek_is("<") {
            let mut depth: i32 = 0;
            loop {
                let t = match self.peek() {
                    Some(t) => t,
                    None => return Err(self.error_here("unclosed type arguments")),
                };
                match t.text {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    "," | "?" | "." | "[" | "]" | "&" => {}
                    _ if t.kind == TokKind::Word => {}
                    _ => return Err(self.error_here("unexpected token in type arguments")),
                }
                parts.push(self.bump().text);
                if depth < 0 {
                    return Err(self.error_here("unbalanced type arguments"));
                }
                if depth == 0 {
                    break;
                }
            }
        }
        while self.peek_is("[") && self.peek_at_is(1, "]") {
            parts.push(self.bump().text);
            parts.push(self.bump().text);
        }
        let end = self.prev_end();
        Ok(Node::terminal("type", join_type_tokens(parts), self.span(start, end)))
    }

    fn member(&mut self) -> Result<Node, ParseError> {
        let start = self.next_start();
        let modifiers = self.modifiers();
        let ty = self.type_ref()?;
        let name = self.name()?;
        if self.peek_is("(") {
            self.bump();
            let params = self.params()?;
            let close = self.expect(")")?;
            let mut children = vec![modifiers, ty, name, params];
            let end = if self.peek_is("{") {
                let block = self.block()?;
                let end = block.span.end_byte;
                children.push(block);
                end
            } else if self.peek_is(";") {
                self.bump().end
            } else {
                let _ = close;
                return Err(self.error_here("expected method body or `;`"));
            };
            Ok(Node::non_terminal("method_decl", children, self.span(start, end)))
        } else {
            let mut children = vec![modifiers, ty, name];
            if self.peek_is("=") {
                self.bump();
                children.push(self.expr()?);
            }
            let semi = self.expect(";")?;
            Ok(Node::non_terminal("field_decl", children, self.span(start, semi.end)))
        }
    }

    fn params(&mut self) -> Result<Node, ParseError> {
        let start = self.next_start();
        let mut params = Vec::new();
        if !self.peek_is(")") {
            loop {
                let ty = self.type_ref()?;
                let name = self.name()?;
                let span = self.span(ty.span.start_byte, name.span.end_byte);
                params.push(Node::non_terminal("param", vec![ty, name], span));
                if self.peek_is(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let end = if params.is_empty() { start } else { self.prev_end() };
        Ok(Node::non_terminal("params", params, self.span(start, end)))
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let start = self.next_start();
        let mut parts = Vec::new();
        let mut depth = 0i32;
        loop {
            let t = match self.peek() {
                Some(t) => t,
                None => return Err(self.error_here("unterminated initializer")),
            };
            match t.text {
                ";" if depth == 0 => break,
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(self.error_here("unbalanced initializer"));
                    }
                }
                _ => {}
            }
            parts.push(self.bump().text);
        }
        if parts.is_empty() {
            return Err(self.error_here("empty initializer"));
        }
        let end = self.prev_end();
        Ok(Node::terminal("expr", join_tokens(parts), self.span(start, end)))
    }

    fn block(&mut self) -> Result<Node, ParseError> {
        let open = self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.peek_is("}") {
            if self.at_end() {
                return Err(self.error_here("unclosed block"));
            }
            stmts.push(self.stmt()?);
        }
        let close = self.bump();
        Ok(Node::non_terminal("block", stmts, self.span(open.start, close.end)))
    }

    fn stmt(&mut self) -> Result<Node, ParseError> {
        let start = self.next_start();
        let mut parts = Vec::new();
        let mut parens = 0i32;
        let mut braces = 0i32;
        loop {
            let t = match self.peek() {
                Some(t) => t,
                None => return Err(self.error_here("unterminated statement")),
            };
            match t.text {
                "(" | "[" => parens += 1,
                ")" | "]" => {
                    parens -= 1;
                    if parens < 0 {
                        return Err(self.error_here("unbalanced parentheses"));
                    }
                }
                "{" => braces += 1,
                "}" => {
                    if braces == 0 {
                        return Err(self.error_here("expected `;`"));
                    }
                    braces -= 1;
                }
                _ => {}
            }
            parts.push(self.bump().text);
            if parens == 0 && braces == 0 {
                if t.text == ";" {
                    break;
                }
                if t.text == "}"
                    && !(self.peek_is("else")
                        || self.peek_is("catch")
                        || self.peek_is("finally")
                        || self.peek_is("while")
                        || self.peek_is(";"))
                {
                    break;
                }
            }
        }
        let end = self.prev_end();
        Ok(Node::terminal("stmt", join_tokens(parts), self.span(start, end)))
    }
}
