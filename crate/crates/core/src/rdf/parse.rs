//! Turtle subset parser.
//!
//! Grammar: `@prefix`/`PREFIX` directives, flat subject-predicate-object
//! statements with `;` and `,` continuation, `a` for `rdf:type`, single- or
//! double-quoted string literals (with optional `@lang` or `^^datatype`),
//! and bare integer/decimal/boolean literals. Comments run from `#` to end
//! of line.
//!
//! One deliberate extension over strict Turtle: after a `;`, a token
//! sequence that forms a full `subject predicate object` statement starts a
//! new subject. Model-emitted output in this domain routinely chains
//! subjects with `;` instead of closing the previous statement with `.`.

use super::{ns, Iri, Literal, PrefixMap, RdfError, RdfGraph, Term, Triple};

/// Parses Turtle text into a graph. `base_prefixes` supplies bindings for
/// prefixes the text uses without declaring; prefixes that are neither
/// declared nor in `base_prefixes` are errors.
pub fn parse_turtle(text: &str, base_prefixes: &PrefixMap) -> Result<RdfGraph, RdfError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        prefixes: base_prefixes.clone(),
        declared: PrefixMap::new(),
        graph: RdfGraph::new(),
    };
    parser.parse_document()?;
    let mut graph = parser.graph;
    let mut prefixes = base_prefixes.clone();
    prefixes.merge(&parser.declared);
    graph.prefixes = prefixes;
    Ok(graph)
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    IriRef(String),
    PName { prefix: String, local: String },
    A,
    Literal(Literal),
    AtPrefix,
    SparqlPrefix,
    Dot,
    Semicolon,
    Comma,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    text: &'a str,
}

fn lex(text: &str) -> Result<Vec<Token>, RdfError> {
    let mut lexer = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        text,
    };
    let mut tokens = Vec::new();
    loop {
        let token = lexer.next_token()?;
        let eof = token.kind == TokenKind::Eof;
        tokens.push(token);
        if eof {
            break;
        }
    }
    Ok(tokens)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> RdfError {
        RdfError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, RdfError> {
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let make = |kind| Token { kind, line, column };

        let Some(c) = self.peek() else {
            return Ok(make(TokenKind::Eof));
        };

        match c {
            '.' => {
                self.bump();
                Ok(make(TokenKind::Dot))
            }
            ';' => {
                self.bump();
                Ok(make(TokenKind::Semicolon))
            }
            ',' => {
                self.bump();
                Ok(make(TokenKind::Comma))
            }
            '<' => {
                self.bump();
                let mut value = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some(c) if c == '\n' => {
                            return Err(self.error("unterminated IRI reference"))
                        }
                        Some(c) => value.push(c),
                        None => return Err(self.error("unterminated IRI reference")),
                    }
                }
                Ok(make(TokenKind::IriRef(value)))
            }
            '\'' | '"' => {
                let literal = self.lex_string(c)?;
                Ok(make(TokenKind::Literal(literal)))
            }
            '@' => {
                self.bump();
                let word = self.lex_bare_word();
                if word.eq_ignore_ascii_case("prefix") {
                    Ok(make(TokenKind::AtPrefix))
                } else {
                    Err(self.error(format!("unsupported directive `@{word}`")))
                }
            }
            c if c.is_ascii_digit() || c == '+' || c == '-' => {
                let literal = self.lex_number()?;
                Ok(make(TokenKind::Literal(literal)))
            }
            _ => {
                let word = self.lex_bare_word();
                if let Some(rest) = self.peek() {
                    if rest == ':' {
                        self.bump();
                        let local = self.lex_local_name();
                        return Ok(make(TokenKind::PName {
                            prefix: word,
                            local,
                        }));
                    }
                }
                match word.as_str() {
                    "a" => Ok(make(TokenKind::A)),
                    "true" | "false" => Ok(make(TokenKind::Literal(Literal::typed(
                        word,
                        Iri::new(format!("{}boolean", ns::XSD)).expect("well-known IRI"),
                    )))),
                    "PREFIX" | "prefix" | "Prefix" => Ok(make(TokenKind::SparqlPrefix)),
                    "" => Err(self.error(format!("unexpected character `{c}`"))),
                    _ => Err(self.error(format!("unexpected bare word `{word}`"))),
                }
            }
        }
    }

    fn lex_bare_word(&mut self) -> String {
        let mut word = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                word.push(c);
                self.bump();
            } else {
                break;
            }
        }
        word
    }

    /// Local names: letters, digits, `_`, `-`. A trailing run of `-` is
    /// allowed mid-name; dots never belong to a name, so `x:y.` lexes as
    /// the name `x:y` followed by a statement terminator.
    fn lex_local_name(&mut self) -> String {
        let mut local = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        local
    }

    fn lex_string(&mut self, quote: char) -> Result<Literal, RdfError> {
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.bump() {
                Some(c) if c == quote => break,
                Some('\\') => match self.bump() {
                    Some('n') => value.push('\n'),
                    Some('t') => value.push('\t'),
                    Some('r') => value.push('\r'),
                    Some('\\') => value.push('\\'),
                    Some('\'') => value.push('\''),
                    Some('"') => value.push('"'),
                    Some(other) => {
                        return Err(self.error(format!("unsupported escape `\\{other}`")))
                    }
                    None => return Err(self.error("unterminated string literal")),
                },
                Some('\n') => return Err(self.error("unterminated string literal")),
                Some(c) => value.push(c),
                None => return Err(self.error("unterminated string literal")),
            }
        }

        // Optional @lang or ^^datatype suffix.
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return Err(self.error("empty language tag"));
                }
                Ok(Literal {
                    lexical: value,
                    language: Some(tag),
                    datatype: None,
                })
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.bump();
                self.bump();
                match self.peek() {
                    Some('<') => {
                        self.bump();
                        let mut iri = String::new();
                        loop {
                            match self.bump() {
                                Some('>') => break,
                                Some(c) => iri.push(c),
                                None => return Err(self.error("unterminated datatype IRI")),
                            }
                        }
                        let datatype =
                            Iri::new(iri.clone()).map_err(|_| self.error(format!("invalid datatype IRI <{iri}>")))?;
                        Ok(Literal::typed(value, datatype))
                    }
                    Some(_) => {
                        let prefix = self.lex_bare_word();
                        if self.peek() != Some(':') {
                            return Err(self.error("expected prefixed name after `^^`"));
                        }
                        self.bump();
                        let local = self.lex_local_name();
                        // Datatype prefixed names resolve later; encode as a
                        // placeholder the parser expands with its prefix map.
                        Ok(Literal {
                            lexical: value,
                            language: None,
                            datatype: Some(
                                Iri::new(format!("urn:ontoforge-pname:{prefix}:{local}"))
                                    .expect("placeholder IRI"),
                            ),
                        })
                    }
                    None => Err(self.error("unterminated datatype")),
                }
            }
            _ => Ok(Literal::plain(value)),
        }
    }

    fn lex_number(&mut self) -> Result<Literal, RdfError> {
        let mut value = String::new();
        if matches!(self.peek(), Some('+') | Some('-')) {
            value.push(self.bump().unwrap());
        }
        let mut saw_digit = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                saw_digit = true;
                value.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if !saw_digit {
            return Err(self.error("expected a digit"));
        }
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            decimal = true;
            value.push(self.bump().unwrap());
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    value.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let datatype = if decimal {
            format!("{}decimal", ns::XSD)
        } else {
            format!("{}integer", ns::XSD)
        };
        Ok(Literal::typed(
            value,
            Iri::new(datatype).expect("well-known IRI"),
        ))
    }

    #[allow(dead_code)]
    fn source(&self) -> &str {
        self.text
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    prefixes: PrefixMap,
    declared: PrefixMap,
    graph: RdfGraph,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        token
    }

    fn error_at(&self, token: &Token, message: impl Into<String>) -> RdfError {
        RdfError::Syntax {
            line: token.line,
            column: token.column,
            message: message.into(),
        }
    }

    fn parse_document(&mut self) -> Result<(), RdfError> {
        loop {
            match self.peek_kind() {
                TokenKind::Eof => return Ok(()),
                TokenKind::AtPrefix => self.parse_prefix_directive(true)?,
                TokenKind::SparqlPrefix => self.parse_prefix_directive(false)?,
                _ => self.parse_statement()?,
            }
        }
    }

    fn parse_prefix_directive(&mut self, dot_required: bool) -> Result<(), RdfError> {
        self.bump();
        let token = self.bump();
        let prefix = match token.kind {
            TokenKind::PName { prefix, local } if local.is_empty() => prefix,
            _ => return Err(self.error_at(&token, "expected `prefix:` after prefix directive")),
        };
        let token = self.bump();
        let namespace = match token.kind {
            TokenKind::IriRef(iri) => iri,
            _ => return Err(self.error_at(&token, "expected namespace IRI in prefix directive")),
        };
        Iri::new(namespace.clone())?;
        if dot_required {
            let token = self.bump();
            if token.kind != TokenKind::Dot {
                return Err(self.error_at(&token, "expected `.` after @prefix directive"));
            }
        } else if self.peek_kind() == &TokenKind::Dot {
            self.bump();
        }
        self.prefixes.insert(prefix.clone(), namespace.clone());
        self.declared.insert(prefix, namespace);
        Ok(())
    }

    fn resolve_pname(&self, token: &Token, prefix: &str, local: &str) -> Result<Iri, RdfError> {
        let Some(namespace) = self.prefixes.get(prefix) else {
            return Err(RdfError::UndefinedPrefix {
                prefix: prefix.to_string(),
                line: token.line,
            });
        };
        if local.is_empty() {
            return Err(self.error_at(token, format!("prefixed name `{prefix}:` has no local part")));
        }
        Iri::new(format!("{namespace}{local}"))
    }

    fn resolve_literal(&self, token: &Token, literal: Literal) -> Result<Literal, RdfError> {
        let Some(datatype) = &literal.datatype else {
            return Ok(literal);
        };
        let Some(encoded) = datatype.as_str().strip_prefix("urn:ontoforge-pname:") else {
            return Ok(literal);
        };
        let (prefix, local) = encoded
            .split_once(':')
            .ok_or_else(|| self.error_at(token, "malformed datatype"))?;
        let datatype = self.resolve_pname(token, prefix, local)?;
        Ok(Literal {
            lexical: literal.lexical,
            language: None,
            datatype: Some(datatype),
        })
    }

    /// Parses one term; IRIs only (no literals) when `iri_only`.
    fn parse_term(&mut self, iri_only: bool) -> Result<Term, RdfError> {
        let token = self.bump();
        match token.kind.clone() {
            TokenKind::IriRef(iri) => Ok(Term::Iri(Iri::new(iri)?)),
            TokenKind::PName { prefix, local } => {
                Ok(Term::Iri(self.resolve_pname(&token, &prefix, &local)?))
            }
            TokenKind::Literal(lit) if !iri_only => {
                Ok(Term::Literal(self.resolve_literal(&token, lit)?))
            }
            other => Err(self.error_at(
                &token,
                format!("expected {} term, found {other:?}", if iri_only { "an IRI" } else { "a" }),
            )),
        }
    }

    fn looks_like_term(kind: &TokenKind) -> bool {
        matches!(
            kind,
            TokenKind::IriRef(_) | TokenKind::PName { .. } | TokenKind::Literal(_)
        )
    }

    fn parse_statement(&mut self) -> Result<(), RdfError> {
        let subject = match self.parse_term(true)? {
            Term::Iri(iri) => iri,
            Term::Literal(_) => unreachable!("iri_only term"),
        };
        self.parse_predicate_object_list(subject)
    }

    /// Parses `verb objects (; verb objects)* .` for `subject`, handing off
    /// to a new subject when a `;` is followed by a full statement.
    fn parse_predicate_object_list(&mut self, subject: Iri) -> Result<(), RdfError> {
        loop {
            let predicate = match self.peek_kind() {
                TokenKind::A => {
                    self.bump();
                    Iri::new(ns::RDF_TYPE).expect("well-known IRI")
                }
                _ => match self.parse_term(true)? {
                    Term::Iri(iri) => iri,
                    Term::Literal(_) => unreachable!("iri_only term"),
                },
            };

            loop {
                let object = self.parse_term(false)?;
                self.graph
                    .insert(Triple::new(subject.clone(), predicate.clone(), object));
                if self.peek_kind() == &TokenKind::Comma {
                    self.bump();
                } else {
                    break;
                }
            }

            match self.peek_kind().clone() {
                TokenKind::Dot => {
                    self.bump();
                    return Ok(());
                }
                TokenKind::Eof => return Ok(()),
                TokenKind::Semicolon => {
                    self.bump();
                    match self.peek_kind().clone() {
                        // Trailing `;` before the statement terminator.
                        TokenKind::Dot => {
                            self.bump();
                            return Ok(());
                        }
                        TokenKind::Eof => return Ok(()),
                        TokenKind::A => continue,
                        kind if Self::looks_like_term(&kind) => {
                            if self.starts_new_subject() {
                                return self.parse_statement();
                            }
                            continue;
                        }
                        _ => {
                            let token = self.peek().clone();
                            return Err(self.error_at(&token, "expected predicate after `;`"));
                        }
                    }
                }
                _ => {
                    let token = self.peek().clone();
                    return Err(self.error_at(
                        &token,
                        "expected `.`, `;`, or `,` after object",
                    ));
                }
            }
        }
    }

    /// Lookahead after `;`: `term term term…` or `term a …` resumes as a new
    /// subject; `term term` followed by punctuation continues the current
    /// predicate-object list.
    fn starts_new_subject(&self) -> bool {
        let first = &self.tokens[self.pos].kind;
        if matches!(first, TokenKind::Literal(_)) {
            return false; // literal verb is an error either way; let the parser report it
        }
        let second = self.tokens.get(self.pos + 1).map(|t| &t.kind);
        match second {
            Some(TokenKind::A) => true,
            Some(kind) if Self::looks_like_term(kind) => {
                let third = self.tokens.get(self.pos + 2).map(|t| &t.kind);
                matches!(third, Some(k) if Self::looks_like_term(k) || *k == TokenKind::A)
            }
            _ => false,
        }
    }
}
