//! Shape-based recognition of setup.py, without evaluating it.
//!
//! Recognizes three patterns: statements at module top level that execute
//! code (anything with a call outside the `setup(...)` invocation),
//! `cmdclass={...}` overrides inside the setup call, and imports of
//! install/build command classes.

use super::DeclaredDependency;
use crate::lexscan::{self, call_sites, python_statements, Language, TokenKind};
use crate::model::SourceSpan;

#[derive(Debug, Clone, Default)]
pub struct SetupFacts {
    pub cmdclass_overrides: Vec<(String, String)>,
    pub top_level_statement_spans: Vec<SourceSpan>,
    pub imports_install_command: bool,
    pub cmdclass_span: Option<SourceSpan>,
    pub declared_name: Option<String>,
    pub declared_version: Option<String>,
    pub install_requires: Vec<DeclaredDependency>,
    pub notes: Vec<String>,
}

/// Token/shape recognition over setup.py source. Unrecognized constructs
/// yield empty results plus a note, never an error.
pub fn extract_setup_facts(path: &str, source: &str) -> SetupFacts {
    let mut facts = SetupFacts::default();
    let file = lexscan::tokenize(path, source.as_bytes(), Some(Language::Python));
    if file.tokens.is_empty() {
        if !file.notes.is_empty() {
            facts.notes.extend(file.notes.iter().cloned());
        }
        return facts;
    }
    facts.notes.extend(file.notes.iter().cloned());

    let statements = python_statements(&file);
    let sites = call_sites(&file);

    // Block context: a stack of (indent, inside_definition) so statements
    // nested under def/class are skipped while if/try/with suites still
    // count as executing at import.
    let mut stack: Vec<(usize, bool)> = Vec::new();

    for stmt in &statements {
        while stack.last().is_some_and(|(indent, _)| *indent >= stmt.indent) {
            stack.pop();
        }
        let in_definition = stack.iter().any(|(_, is_def)| *is_def);
        let tokens = &file.tokens[stmt.tokens.0..stmt.tokens.1];
        let Some(first) = tokens.iter().find(|t| t.kind != TokenKind::Comment) else {
            continue;
        };

        // Track block openers.
        if first.kind == TokenKind::Identifier {
            match first.text.as_str() {
                "def" | "class" => {
                    stack.push((stmt.indent, true));
                }
                "if" | "elif" | "else" | "try" | "except" | "finally" | "with" | "for"
                | "while" => {
                    stack.push((stmt.indent, false));
                }
                _ => {}
            }
        }
        if first.kind == TokenKind::TryBlock {
            stack.push((stmt.indent, false));
        }

        if in_definition {
            continue;
        }

        // The setup(...) call itself: harvest kwargs, never flag.
        let stmt_sites: Vec<_> = sites
            .iter()
            .filter(|s| s.first_token >= stmt.tokens.0 && s.first_token < stmt.tokens.1)
            .collect();
        let is_setup_call = stmt_sites.iter().any(|s| {
            s.is_call && (s.chain == "setup" || s.chain.ends_with(".setup"))
        });
        if is_setup_call {
            harvest_setup_kwargs(&file, stmt.tokens, &mut facts);
            continue;
        }

        match first.kind {
            TokenKind::ImportStmt => {
                let text = &first.text;
                if text.starts_with("from") && text.contains(".command") && text.contains(" import ")
                {
                    facts.imports_install_command = true;
                }
                // Compound one-liner: `import os; os.system(...)` leaves the
                // call tokens in the same logical statement.
                let has_call = stmt_sites.iter().any(|s| s.is_call);
                if has_call {
                    facts.top_level_statement_spans.push(stmt.span.clone());
                }
            }
            TokenKind::Identifier if matches!(first.text.as_str(), "def" | "class") => {}
            TokenKind::StringLiteral if tokens.len() == 1 => {} // docstring
            _ => {
                // Flag statements that perform a call.
                let has_call = stmt_sites.iter().any(|s| {
                    s.is_call
                        && !file
                            .language
                            .is_some_and(|l| l.is_keyword(s.chain.as_str()))
                });
                if has_call {
                    facts.top_level_statement_spans.push(stmt.span.clone());
                }
            }
        }
    }

    if facts.cmdclass_overrides.is_empty()
        && facts.top_level_statement_spans.is_empty()
        && facts.declared_name.is_none()
    {
        facts
            .notes
            .push(format!("{path}: no recognizable setup() facts (low confidence)"));
    }
    facts
}

/// Pull name/version/cmdclass/install_requires out of the setup call's
/// keyword arguments.
fn harvest_setup_kwargs(
    file: &lexscan::TokenFile,
    range: (usize, usize),
    facts: &mut SetupFacts,
) {
    let tokens = &file.tokens;
    let mut i = range.0;
    while i < range.1 {
        let t = &tokens[i];
        if t.kind == TokenKind::Identifier
            && tokens
                .get(i + 1)
                .is_some_and(|n| n.kind == TokenKind::Assignment)
        {
            match t.text.as_str() {
                "name" => {
                    if let Some(v) = tokens.get(i + 2).filter(|v| v.kind == TokenKind::StringLiteral)
                    {
                        facts.declared_name = Some(v.text.clone());
                    }
                }
                "version" => {
                    if let Some(v) = tokens.get(i + 2).filter(|v| v.kind == TokenKind::StringLiteral)
                    {
                        facts.declared_version = Some(v.text.clone());
                    }
                }
                "cmdclass" => {
                    let (overrides, end_idx) = parse_cmdclass_dict(tokens, i + 2, range.1);
                    if !overrides.is_empty() {
                        let end_token = &tokens[end_idx.min(tokens.len() - 1)];
                        facts.cmdclass_span = Some(SourceSpan::new(
                            file.path.clone(),
                            t.span.line_start,
                            end_token.span.line_end,
                            t.span.byte_start,
                            end_token.span.byte_end,
                        ));
                        facts.cmdclass_overrides.extend(overrides);
                    } else {
                        facts.notes.push(format!(
                            "{}: cmdclass present but not a literal dict of name: class pairs",
                            file.path
                        ));
                    }
                }
                "install_requires"
                    if tokens.get(i + 2).is_some_and(|v| {
                        v.kind == TokenKind::Other && (v.text == "[" || v.text == "(")
                    }) =>
                {
                    let mut j = i + 3;
                    while j < range.1 {
                        let u = &tokens[j];
                        if u.kind == TokenKind::Other && (u.text == "]" || u.text == ")") {
                            break;
                        }
                        if u.kind == TokenKind::StringLiteral {
                            let spec = u.text.clone();
                            let name_end = spec
                                .find(['=', '<', '>', '!', '~', ';', ' ', '['])
                                .unwrap_or(spec.len());
                            facts.install_requires.push(DeclaredDependency {
                                name: spec[..name_end].to_string(),
                                constraint: spec[name_end..].trim().to_string(),
                            });
                        }
                        j += 1;
                    }
                }
                _ => {}
            }
        }
        i += 1;
    }
}

/// Parse `{'install': ExampleClass, ...}` starting at `start` (expected to
/// be the `{` token). Returns the pairs and the index of the closing brace.
fn parse_cmdclass_dict(
    tokens: &[lexscan::Token],
    start: usize,
    limit: usize,
) -> (Vec<(String, String)>, usize) {
    let mut overrides = Vec::new();
    let Some(open) = tokens.get(start) else {
        return (overrides, start);
    };
    if !(open.kind == TokenKind::Other && open.text == "{") {
        return (overrides, start);
    }
    let mut i = start + 1;
    while i < limit {
        let t = &tokens[i];
        if t.kind == TokenKind::Other && t.text == "}" {
            return (overrides, i);
        }
        if t.kind == TokenKind::StringLiteral
            && tokens
                .get(i + 1)
                .is_some_and(|c| c.kind == TokenKind::Other && c.text == ":")
            && tokens
                .get(i + 2)
                .is_some_and(|v| v.kind == TokenKind::Identifier)
        {
            overrides.push((t.text.clone(), tokens[i + 2].text.clone()));
            i += 3;
            continue;
        }
        i += 1;
    }
    (Vec::new(), start)
}
