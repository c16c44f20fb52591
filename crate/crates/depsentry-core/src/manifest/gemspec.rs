//! Shape-based gemspec recognition, without evaluating Ruby.
//!
//! Recognizes literal assignments to the spec receiver (`s.name = "x"`,
//! `s.extensions = ["extconf.rb"]`, `s.files = %w[...]`) and
//! `add_dependency`-family calls. Facts built from non-literal expressions
//! are out of static reach and only noted.

use crate::lexscan::{self, Language, TokenKind};
use crate::model::SourceSpan;

#[derive(Debug, Clone, Default)]
pub struct GemspecFacts {
    pub name: Option<String>,
    pub version: Option<String>,
    pub extensions: Vec<String>,
    /// Span of the `extensions = [...]` assignment, used as evidence.
    pub extensions_span: Option<SourceSpan>,
    pub files: Vec<String>,
    /// (name, constraint) from add_dependency / add_runtime_dependency /
    /// add_development_dependency.
    pub dependencies: Vec<(String, String)>,
    pub notes: Vec<String>,
}

pub fn extract_gemspec_facts(path: &str, source: &str) -> GemspecFacts {
    let mut facts = GemspecFacts::default();
    let file = lexscan::tokenize(path, source.as_bytes(), Some(Language::Ruby));
    facts.notes.extend(file.notes.iter().cloned());
    let tokens = &file.tokens;

    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        // receiver.field = value
        if t.kind == TokenKind::Identifier
            && tokens.get(i + 1).is_some_and(|d| d.kind == TokenKind::Other && d.text == ".")
            && tokens.get(i + 2).is_some_and(|f| f.kind == TokenKind::Identifier)
            && tokens
                .get(i + 3)
                .is_some_and(|a| a.kind == TokenKind::Assignment)
        {
            let field = tokens[i + 2].text.as_str();
            let value_idx = i + 4;
            match field {
                "name" | "version" => {
                    if let Some(v) = tokens
                        .get(value_idx)
                        .filter(|v| v.kind == TokenKind::StringLiteral)
                    {
                        if field == "name" {
                            facts.name = Some(v.text.clone());
                        } else {
                            facts.version = Some(v.text.clone());
                        }
                    }
                }
                "extensions" | "files" => {
                    let (values, literal) = string_list(tokens, value_idx);
                    if literal {
                        if field == "extensions" {
                            let end = list_end(tokens, value_idx);
                            facts.extensions_span = Some(SourceSpan::new(
                                file.path.clone(),
                                t.span.line_start,
                                tokens[end].span.line_end,
                                t.span.byte_start,
                                tokens[end].span.byte_end,
                            ));
                            facts.extensions.extend(values);
                        } else {
                            facts.files.extend(values);
                        }
                    } else {
                        facts.notes.push(format!(
                            "{path}: gemspec `{field}` assigned from a non-literal expression; \
                             value out of static reach"
                        ));
                    }
                }
                _ => {}
            }
            i += 4;
            continue;
        }
        // receiver.add_dependency("name", "constraint")
        if t.kind == TokenKind::Identifier
            && matches!(
                t.text.as_str(),
                "add_dependency" | "add_runtime_dependency" | "add_development_dependency"
            )
            && tokens
                .get(i + 1)
                .is_some_and(|p| p.kind == TokenKind::Other && p.text == "(")
        {
            let mut strings = Vec::new();
            let mut j = i + 2;
            while j < tokens.len() {
                let u = &tokens[j];
                if u.kind == TokenKind::Other && u.text == ")" {
                    break;
                }
                if u.kind == TokenKind::StringLiteral {
                    strings.push(u.text.clone());
                }
                j += 1;
            }
            if let Some(name) = strings.first() {
                facts
                    .dependencies
                    .push((name.clone(), strings.get(1).cloned().unwrap_or_default()));
            }
        }
        i += 1;
    }
    facts
}

/// Index of the token closing a literal list starting at `start`.
fn list_end(tokens: &[lexscan::Token], start: usize) -> usize {
    if tokens
        .get(start)
        .is_some_and(|t| t.kind == TokenKind::StringLiteral)
    {
        return start;
    }
    let mut j = start;
    while j < tokens.len() {
        let t = &tokens[j];
        if t.kind == TokenKind::Other && t.text == "]" {
            return j;
        }
        j += 1;
    }
    start
}

/// Parse a literal string list: `["a", "b"]` or a `%w[a b]` word literal
/// (tokenized as one string). Returns (values, was_literal).
fn string_list(tokens: &[lexscan::Token], start: usize) -> (Vec<String>, bool) {
    let Some(first) = tokens.get(start) else {
        return (Vec::new(), false);
    };
    if first.kind == TokenKind::StringLiteral {
        // %w[a b] came through as one literal; split on whitespace.
        if first.span.byte_end - first.span.byte_start > first.text.len() + 1
            || first.text.contains(' ')
        {
            return (
                first
                    .text
                    .split_whitespace()
                    .map(|s| s.to_string())
                    .collect(),
                true,
            );
        }
        return (vec![first.text.clone()], true);
    }
    if !(first.kind == TokenKind::Other && first.text == "[") {
        return (Vec::new(), false);
    }
    let mut values = Vec::new();
    let mut j = start + 1;
    while j < tokens.len() {
        let t = &tokens[j];
        if t.kind == TokenKind::Other && t.text == "]" {
            return (values, true);
        }
        match t.kind {
            TokenKind::StringLiteral => values.push(t.text.clone()),
            TokenKind::Other if t.text == "," => {}
            TokenKind::Comment => {}
            _ => return (Vec::new(), false), // identifiers, calls: non-literal
        }
        j += 1;
    }
    (Vec::new(), false)
}
