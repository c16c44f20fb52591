//! Detectors for the seven code-execution techniques: install hooks (I1),
//! build scripts (I2), build extensions (I3), import side effects (R1),
//! hot-method payloads (R2/R3), and build plugins (R4).
//!
//! All detectors are pure functions over the snapshot, its manifest facts,
//! and pre-tokenized files. Ecosystem gating follows the applicability
//! matrix: a detector never emits a technique finding for an ecosystem
//! where the technique does not apply.

use crate::config::{ApiClass, DangerousApiCatalog, LanguageApis, ScanConfig};
use crate::ingest::PackageSnapshot;
use crate::lexscan::{
    call_sites, python_statements, CallSite, Language, TokenFile, TokenKind,
};
use crate::model::{
    applicability, clip_evidence, Confidence, Ecosystem, Finding, FindingLocation, SourceSpan,
    TechniqueId,
};
use std::collections::BTreeMap;

/// Tokenized files of a snapshot, keyed by path.
pub type TokenIndex = BTreeMap<String, TokenFile>;

/// A dangerous-API reference: the matched catalog class and the call site.
#[derive(Debug, Clone)]
pub struct DangerousRef {
    pub class: ApiClass,
    pub site: CallSite,
}

/// Find every dangerous-API reference in a file. Call-shaped classes
/// require a call site; env-read patterns also match bare references.
pub fn dangerous_refs(file: &TokenFile, apis: &LanguageApis) -> Vec<DangerousRef> {
    let mut refs = Vec::new();
    for site in call_sites(file) {
        for class in [
            ApiClass::ProcessSpawn,
            ApiClass::CodeEval,
            ApiClass::Network,
            ApiClass::FilesystemSensitive,
            ApiClass::EnvRead,
            ApiClass::Decode,
        ] {
            if class != ApiClass::EnvRead && !site.is_call {
                continue;
            }
            if matches_any(&site.chain, apis.patterns(class)) {
                refs.push(DangerousRef {
                    class,
                    site: site.clone(),
                });
            }
        }
    }
    refs
}

/// Literal dotted-name or trailing-segment match, never a regex.
pub fn matches_any(chain: &str, patterns: &[String]) -> bool {
    patterns.iter().any(|p| {
        if p.contains('.') {
            chain == p || chain.ends_with(&format!(".{p}"))
        } else {
            chain == p || chain.rsplit('.').next() == Some(p.as_str())
        }
    })
}

/// What a brace/indent scope is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Class,
    /// Free function (not attached to a class/impl/receiver).
    Function,
    /// Function attached to a class, impl block, or receiver.
    Method,
    Constructor,
    StaticInit,
    InstanceInit,
    /// Go `func init()`.
    InitFn,
    Control,
    Other,
}

impl FrameKind {
    fn is_callable_body(self) -> bool {
        matches!(
            self,
            FrameKind::Function
                | FrameKind::Method
                | FrameKind::Constructor
                | FrameKind::StaticInit
                | FrameKind::InstanceInit
                | FrameKind::InitFn
        )
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub kind: FrameKind,
    pub name: String,
    /// Token index range (exclusive end) of the body.
    pub tokens: (usize, usize),
}

/// Compute the scope frames of a file, language-appropriately.
pub fn build_frames(file: &TokenFile) -> Vec<Frame> {
    match file.language {
        Some(Language::Python) => python_frames(file),
        Some(Language::Ruby) => ruby_frames(file),
        Some(_) => brace_frames(file),
        None => Vec::new(),
    }
}

/// Innermost callable frame containing the token index, if any.
pub fn enclosing_callable(frames: &[Frame], token_idx: usize) -> Option<&Frame> {
    frames
        .iter()
        .filter(|f| f.kind.is_callable_body() && f.tokens.0 <= token_idx && token_idx < f.tokens.1)
        .min_by_key(|f| f.tokens.1 - f.tokens.0)
}

fn token_is(t: &crate::lexscan::Token, text: &str) -> bool {
    t.kind == TokenKind::Other && t.text == text
}

fn brace_frames(file: &TokenFile) -> Vec<Frame> {
    let lang = file.language.unwrap();
    let tokens = &file.tokens;
    let mut frames = Vec::new();
    // (open token idx, kind, name)
    let mut stack: Vec<(usize, FrameKind, String)> = Vec::new();
    let mut pending: Option<(FrameKind, String)> = None;

    let class_kw: &[&str] = match lang {
        Language::Java => &["class", "interface", "enum", "record"],
        Language::JavaScript => &["class"],
        Language::Php => &["class", "interface", "trait", "enum"],
        Language::Rust => &["impl", "trait"],
        Language::Go => &[],
        _ => &["class"],
    };
    let fn_kw = match lang {
        Language::JavaScript | Language::Php => "function",
        Language::Rust => "fn",
        Language::Go => "func",
        _ => "\u{0}", // Java has no function keyword
    };

    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        match t.kind {
            TokenKind::Identifier => {
                let word = t.text.as_str();
                if class_kw.contains(&word) {
                    let name = next_identifier(tokens, i + 1).unwrap_or_default();
                    pending = Some((FrameKind::Class, name));
                } else if word == fn_kw {
                    let in_class = stack.iter().any(|(_, k, _)| *k == FrameKind::Class);
                    if lang == Language::Go {
                        pending = Some(go_func_decl(tokens, i));
                    } else {
                        let name = next_identifier(tokens, i + 1)
                            .unwrap_or_else(|| "<anonymous>".into());
                        pending = Some(classify_function(lang, &name, in_class, &stack));
                    }
                }
            }
            TokenKind::Other if t.text == "{" => {
                let (kind, name) = pending
                    .take()
                    .unwrap_or_else(|| classify_unlabeled_brace(lang, tokens, i, &stack));
                stack.push((i, kind, name));
            }
            TokenKind::Other if t.text == "}" => {
                if let Some((open, kind, name)) = stack.pop() {
                    frames.push(Frame {
                        kind,
                        name,
                        tokens: (open + 1, i),
                    });
                }
            }
            TokenKind::Other if t.text == ";" => {
                pending = None; // declaration without a body
            }
            _ => {}
        }
        i += 1;
    }
    frames
}

fn next_identifier(tokens: &[crate::lexscan::Token], mut idx: usize) -> Option<String> {
    while idx < tokens.len() {
        match tokens[idx].kind {
            TokenKind::Identifier => {
                let text = &tokens[idx].text;
                if text == "*" {
                    idx += 1;
                    continue;
                }
                return Some(text.clone());
            }
            TokenKind::Comment => idx += 1,
            TokenKind::Other if tokens[idx].text == "*" => idx += 1,
            _ => return None,
        }
    }
    None
}

fn classify_function(
    lang: Language,
    name: &str,
    in_class: bool,
    _stack: &[(usize, FrameKind, String)],
) -> (FrameKind, String) {
    let kind = match lang {
        Language::Php if in_class && name == "__construct" => FrameKind::Constructor,
        Language::Rust if in_class && name == "new" => FrameKind::Constructor,
        Language::JavaScript | Language::Php | Language::Rust if in_class => FrameKind::Method,
        _ => FrameKind::Function,
    };
    (kind, name.to_string())
}

fn go_func_decl(tokens: &[crate::lexscan::Token], func_idx: usize) -> (FrameKind, String) {
    // func name(...) or func (recv T) name(...)
    let mut j = func_idx + 1;
    while j < tokens.len() && tokens[j].kind == TokenKind::Comment {
        j += 1;
    }
    let mut receiver = false;
    if j < tokens.len() && token_is(&tokens[j], "(") {
        receiver = true;
        let mut depth = 0i32;
        while j < tokens.len() {
            if token_is(&tokens[j], "(") {
                depth += 1;
            } else if token_is(&tokens[j], ")") {
                depth -= 1;
                if depth == 0 {
                    j += 1;
                    break;
                }
            }
            j += 1;
        }
    }
    let name = next_identifier(tokens, j).unwrap_or_else(|| "<anonymous>".into());
    let kind = if receiver {
        FrameKind::Method
    } else if name == "init" {
        FrameKind::InitFn
    } else if name.strip_prefix("New").is_some_and(|rest| {
        rest.is_empty() || rest.chars().next().is_some_and(|c| c.is_uppercase())
    }) {
        // Constructor-shaped by Go convention.
        FrameKind::Constructor
    } else {
        FrameKind::Function
    };
    (kind, name)
}

/// Classify a `{` with no keyword-led declaration: class-body method
/// shorthand (Java, JS classes), initializer blocks, control braces, or
/// plain literals.
fn classify_unlabeled_brace(
    lang: Language,
    tokens: &[crate::lexscan::Token],
    open_idx: usize,
    stack: &[(usize, FrameKind, String)],
) -> (FrameKind, String) {
    let in_class_directly = stack
        .last()
        .is_some_and(|(_, kind, _)| *kind == FrameKind::Class);
    let class_name = stack
        .iter()
        .rev()
        .find(|(_, kind, _)| *kind == FrameKind::Class)
        .map(|(_, _, name)| name.clone())
        .unwrap_or_default();

    let mut j = open_idx;
    let prev = loop {
        if j == 0 {
            return (FrameKind::Other, String::new());
        }
        j -= 1;
        if tokens[j].kind != TokenKind::Comment {
            break &tokens[j];
        }
    };

    // Arrow function body.
    if lang == Language::JavaScript && token_is(prev, "=>") {
        return (FrameKind::Function, "<arrow>".into());
    }
    // Java/JS static initializer block.
    if prev.kind == TokenKind::Identifier && prev.text == "static" && in_class_directly {
        return (FrameKind::StaticInit, class_name);
    }
    // Control-flow braces and `do`/`else`/`finally`.
    if prev.kind == TokenKind::Identifier
        && matches!(prev.text.as_str(), "do" | "else" | "finally")
    {
        return (FrameKind::Control, String::new());
    }
    if prev.kind == TokenKind::TryBlock {
        return (FrameKind::Control, String::new());
    }
    if token_is(prev, ")") {
        // Walk back over a balanced paren group; also tolerate Java
        // `throws A, B` between the params and the brace.
        let mut k = j;
        let mut depth = 0i32;
        loop {
            if token_is(&tokens[k], ")") {
                depth += 1;
            } else if token_is(&tokens[k], "(") {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            if k == 0 {
                return (FrameKind::Other, String::new());
            }
            k -= 1;
        }
        // Token before the open paren.
        let mut m = k;
        let before = loop {
            if m == 0 {
                return (FrameKind::Other, String::new());
            }
            m -= 1;
            if tokens[m].kind != TokenKind::Comment {
                break &tokens[m];
            }
        };
        if before.kind == TokenKind::CatchBlock {
            return (FrameKind::Control, String::new());
        }
        if before.kind == TokenKind::Identifier {
            let name = before.text.clone();
            if matches!(
                name.as_str(),
                "if" | "for" | "while" | "switch" | "synchronized" | "match" | "foreach"
                    | "return" | "catch"
            ) {
                return (FrameKind::Control, String::new());
            }
            if in_class_directly && matches!(lang, Language::Java | Language::JavaScript) {
                if lang == Language::JavaScript && name == "constructor" {
                    return (FrameKind::Constructor, class_name);
                }
                if lang == Language::Java && name == class_name {
                    return (FrameKind::Constructor, name);
                }
                return (FrameKind::Method, name);
            }
        }
        return (FrameKind::Other, String::new());
    }
    // Bare `{` directly inside a Java class body: instance initializer.
    if lang == Language::Java
        && in_class_directly
        && (token_is(prev, "{") || token_is(prev, "}") || token_is(prev, ";"))
    {
        return (FrameKind::InstanceInit, class_name);
    }
    (FrameKind::Other, String::new())
}

fn python_frames(file: &TokenFile) -> Vec<Frame> {
    let statements = python_statements(file);
    let mut frames = Vec::new();
    // (indent, kind, name, body_start_token)
    let mut stack: Vec<(usize, FrameKind, String, usize)> = Vec::new();

    for stmt in &statements {
        while let Some((indent, kind, name, start)) = stack.last().cloned() {
            if indent >= stmt.indent {
                stack.pop();
                frames.push(Frame {
                    kind,
                    name,
                    tokens: (start, stmt.tokens.0),
                });
            } else {
                break;
            }
        }
        let tokens = &file.tokens[stmt.tokens.0..stmt.tokens.1];
        let Some(first) = tokens.iter().find(|t| t.kind != TokenKind::Comment) else {
            continue;
        };
        if first.kind == TokenKind::Identifier && (first.text == "def" || first.text == "class") {
            let name = tokens
                .iter()
                .skip(1)
                .find(|t| t.kind == TokenKind::Identifier)
                .map(|t| t.text.clone())
                .unwrap_or_default();
            let in_class = stack
                .iter()
                .rev()
                .find(|(_, k, _, _)| *k == FrameKind::Class || k.is_callable_body())
                .is_some_and(|(_, k, _, _)| *k == FrameKind::Class);
            let kind = if first.text == "class" {
                FrameKind::Class
            } else if in_class && name == "__init__" {
                FrameKind::Constructor
            } else if in_class {
                FrameKind::Method
            } else {
                FrameKind::Function
            };
            stack.push((stmt.indent, kind, name, stmt.tokens.1));
        }
    }
    let end = file.tokens.len();
    while let Some((_, kind, name, start)) = stack.pop() {
        frames.push(Frame {
            kind,
            name,
            tokens: (start, end),
        });
    }
    frames
}

fn ruby_frames(file: &TokenFile) -> Vec<Frame> {
    let tokens = &file.tokens;
    let mut frames = Vec::new();
    let mut stack: Vec<(usize, FrameKind, String)> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        match t.kind {
            TokenKind::TryBlock => stack.push((i, FrameKind::Control, String::new())),
            TokenKind::Identifier => match t.text.as_str() {
                "def" => {
                    let name = next_identifier(tokens, i + 1).unwrap_or_default();
                    let in_class = stack
                        .iter()
                        .rev()
                        .find(|(_, k, _)| *k == FrameKind::Class || k.is_callable_body())
                        .is_some_and(|(_, k, _)| *k == FrameKind::Class);
                    let kind = if in_class && name == "initialize" {
                        FrameKind::Constructor
                    } else if in_class {
                        FrameKind::Method
                    } else {
                        FrameKind::Function
                    };
                    stack.push((i, kind, name));
                }
                "class" | "module" => {
                    let name = next_identifier(tokens, i + 1).unwrap_or_default();
                    stack.push((i, FrameKind::Class, name));
                }
                "do" | "case" => stack.push((i, FrameKind::Control, String::new())),
                "if" | "unless" | "while" | "until" if t.line_first => {
                    stack.push((i, FrameKind::Control, String::new()));
                }
                "end" => {
                    if let Some((open, kind, name)) = stack.pop() {
                        frames.push(Frame {
                            kind,
                            name,
                            tokens: (open + 1, i),
                        });
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }
    frames
}

// --- install-time detectors (I1, I2, I3) ----------------------------------

/// Emit I1/I2/I3 findings from the extracted facts, raising confidence to
/// strong when the referenced script body contains a dangerous-API call.
pub fn detect_install_time(
    snapshot: &PackageSnapshot,
    tokens: &TokenIndex,
    catalog: &DangerousApiCatalog,
) -> Vec<Finding> {
    let eco = snapshot.coords.ecosystem;
    let facts = &snapshot.facts;
    let mut findings = Vec::new();

    // I1: one finding per declared install hook, on presence alone.
    if applicability(eco, TechniqueId::I1) {
        let manifest_file = snapshot.resolve(match eco {
            Ecosystem::Npm => "package.json",
            _ => "composer.json",
        });
        for (hook, command) in &facts.install_hooks {
            let mut finding = Finding::new(
                TechniqueId::I1,
                FindingLocation::manifest_key(&manifest_file, format!("scripts.{hook}")),
                command,
            );
            if catalog.has_shell_word(command) {
                finding = finding.with_confidence(Confidence::Strong);
            }
            findings.push(finding);
        }
    }

    // I2: build script that actually carries code (Python) or exists at all
    // (Cargo).
    if applicability(eco, TechniqueId::I2) {
        match eco {
            Ecosystem::PyPI => {
                if facts.build_script.is_some()
                    && (!facts.setup_top_level_statements.is_empty()
                        || !facts.cmdclass_overrides.is_empty())
                {
                    let setup_path = snapshot.resolve("setup.py");
                    let location = facts
                        .setup_top_level_statements
                        .first()
                        .or(facts.setup_cmdclass_span.as_ref())
                        .cloned()
                        .map(FindingLocation::Span)
                        .unwrap_or_else(|| {
                            FindingLocation::manifest_key(&setup_path, "setup")
                        });
                    let evidence = span_slice(tokens, &location).unwrap_or_default();
                    let mut finding = Finding::new(TechniqueId::I2, location, &evidence);
                    if file_has_dangerous_ref(tokens, &setup_path, catalog) {
                        finding = finding.with_confidence(Confidence::Strong);
                    }
                    findings.push(finding);
                }
            }
            Ecosystem::Cargo => {
                if let Some(script) = &facts.build_script {
                    let path = snapshot.resolve(script);
                    let (location, evidence, dangerous) =
                        script_callsite_evidence(tokens, &path, catalog);
                    let mut finding = Finding::new(TechniqueId::I2, location, &evidence);
                    if dangerous {
                        finding = finding.with_confidence(Confidence::Strong);
                    }
                    findings.push(finding);
                }
            }
            _ => {}
        }
    }

    // I3: one finding per declared gemspec extension.
    if applicability(eco, TechniqueId::I3) {
        for ext in &facts.build_extensions {
            let location = facts
                .gemspec_extensions_span
                .clone()
                .map(FindingLocation::Span)
                .unwrap_or_else(|| FindingLocation::manifest_key("gemspec", "extensions"));
            let evidence = span_slice(tokens, &location).unwrap_or_else(|| ext.clone());
            let mut finding = Finding::new(TechniqueId::I3, location, &evidence);
            let ext_path = snapshot.resolve(ext);
            if file_has_dangerous_ref(tokens, &ext_path, catalog) {
                finding = finding.with_confidence(Confidence::Strong);
            }
            findings.push(finding.with_context(format!("extension {ext}")));
        }
    }

    findings
}

fn span_slice(tokens: &TokenIndex, location: &FindingLocation) -> Option<String> {
    match location {
        FindingLocation::Span(span) => tokens
            .get(&span.path)
            .map(|tf| clip_evidence(tf.slice(span))),
        FindingLocation::ManifestKey { .. } => None,
    }
}

fn file_has_dangerous_ref(
    tokens: &TokenIndex,
    path: &str,
    catalog: &DangerousApiCatalog,
) -> bool {
    let Some(tf) = tokens.get(path) else {
        return false;
    };
    let Some(lang) = tf.language else { return false };
    let Some(apis) = catalog.for_language(lang.name()) else {
        return false;
    };
    !dangerous_refs(tf, apis).is_empty()
}

/// Location/evidence for a build script: the first dangerous call line when
/// present, the first line otherwise.
fn script_callsite_evidence(
    tokens: &TokenIndex,
    path: &str,
    catalog: &DangerousApiCatalog,
) -> (FindingLocation, String, bool) {
    if let Some(tf) = tokens.get(path) {
        if let Some(apis) = tf.language.and_then(|l| catalog.for_language(l.name())) {
            let refs = dangerous_refs(tf, apis);
            if let Some(first) = refs.first() {
                let line = first.site.span.line_start;
                let evidence = tf.line_text(line).trim().to_string();
                return (
                    FindingLocation::Span(first.site.span.clone()),
                    evidence,
                    true,
                );
            }
        }
        let evidence = tf.line_text(1).trim().to_string();
        let end = tf.source.lines().next().map(str::len).unwrap_or(0);
        return (
            FindingLocation::Span(SourceSpan::new(path.to_string(), 1, 1, 0, end)),
            evidence,
            false,
        );
    }
    (
        FindingLocation::manifest_key(path, "build"),
        path.to_string(),
        false,
    )
}

// --- import side effects (R1) ----------------------------------------------

/// R1: code that executes when the package is imported.
pub fn detect_import_side_effects(
    snapshot: &PackageSnapshot,
    tokens: &TokenIndex,
    catalog: &DangerousApiCatalog,
) -> Vec<Finding> {
    let eco = snapshot.coords.ecosystem;
    if !applicability(eco, TechniqueId::R1) {
        return Vec::new();
    }
    let facts = &snapshot.facts;
    let mut findings = Vec::new();

    match eco {
        Ecosystem::Npm => {
            for entry in &facts.entry_points {
                if let Some(finding) = top_level_dangerous(tokens, entry, catalog) {
                    findings.push(finding.with_context("npm main entry"));
                }
            }
        }
        Ecosystem::RubyGems => {
            for entry in &facts.entry_points {
                if let Some(finding) = top_level_dangerous(tokens, entry, catalog) {
                    findings.push(finding.with_context("gemspec-listed require target"));
                }
            }
        }
        Ecosystem::PyPI => {
            for entry in &facts.entry_points {
                if let Some(finding) = python_init_side_effects(tokens, entry, catalog) {
                    findings.push(finding);
                }
            }
        }
        Ecosystem::Go => {
            for span in &facts.go_init_functions {
                let evidence = evidence_line(tokens, span);
                let dangerous = init_body_dangerous(tokens, span, catalog);
                let mut finding = Finding::new(
                    TechniqueId::R1,
                    FindingLocation::Span(span.clone()),
                    &evidence,
                )
                .with_context("init() runs on import");
                if dangerous {
                    finding = finding.with_confidence(Confidence::Moderate);
                }
                findings.push(finding);
            }
            for blank in &facts.go_blank_imports {
                let evidence = evidence_line(tokens, &blank.span);
                findings.push(
                    Finding::new(
                        TechniqueId::R1,
                        FindingLocation::Span(blank.span.clone()),
                        &evidence,
                    )
                    .with_context(format!(
                        "blank import `_ \"{}\"` retains the dependency and runs its init",
                        blank.path
                    )),
                );
            }
            for span in &facts.go_var_anon_initializers {
                let evidence = evidence_line(tokens, span);
                findings.push(
                    Finding::new(TechniqueId::R1, FindingLocation::Span(span.clone()), &evidence)
                        .with_context("variable initialized with an anonymous function"),
                );
            }
        }
        _ => {}
    }
    findings
}

fn evidence_line(tokens: &TokenIndex, span: &SourceSpan) -> String {
    tokens
        .get(&span.path)
        .map(|tf| tf.line_text(span.line_start).trim().to_string())
        .unwrap_or_default()
}

/// One strong R1 finding when the file performs a dangerous call at top
/// level (outside every function/method body).
fn top_level_dangerous(
    tokens: &TokenIndex,
    path: &str,
    catalog: &DangerousApiCatalog,
) -> Option<Finding> {
    let tf = tokens.get(path)?;
    let lang = tf.language?;
    let apis = catalog.for_language(lang.name())?;
    let frames = build_frames(tf);
    let top_ref = dangerous_refs(tf, apis)
        .into_iter()
        .find(|r| enclosing_callable(&frames, r.site.first_token).is_none())?;
    let evidence = tf.line_text(top_ref.site.span.line_start).trim().to_string();
    Some(
        Finding::new(
            TechniqueId::R1,
            FindingLocation::Span(top_ref.site.span.clone()),
            &evidence,
        )
        .with_confidence(Confidence::Strong),
    )
}

/// R1 for `__init__.py`: any statement other than imports,
/// literal assignments, `__all__`, definitions, or docstrings.
fn python_init_side_effects(
    tokens: &TokenIndex,
    path: &str,
    catalog: &DangerousApiCatalog,
) -> Option<Finding> {
    let tf = tokens.get(path)?;
    let apis = catalog.for_language("python")?;
    let statements = python_statements(tf);
    let sites = call_sites(tf);
    let mut stack: Vec<(usize, bool)> = Vec::new();
    let mut flagged: Vec<SourceSpan> = Vec::new();

    for stmt in &statements {
        while stack.last().is_some_and(|(indent, _)| *indent >= stmt.indent) {
            stack.pop();
        }
        let in_definition = stack.iter().any(|(_, is_def)| *is_def);
        let stmt_tokens = &tf.tokens[stmt.tokens.0..stmt.tokens.1];
        let Some(first) = stmt_tokens.iter().find(|t| t.kind != TokenKind::Comment) else {
            continue;
        };
        if first.kind == TokenKind::Identifier {
            match first.text.as_str() {
                "def" | "class" => {
                    stack.push((stmt.indent, true));
                }
                "if" | "elif" | "else" | "try" | "except" | "finally" | "with" | "for"
                | "while" => stack.push((stmt.indent, false)),
                _ => {}
            }
        }
        if first.kind == TokenKind::TryBlock {
            stack.push((stmt.indent, false));
        }
        if in_definition {
            continue;
        }

        let allowed = match first.kind {
            TokenKind::ImportStmt => !stmt_has_call(&sites, stmt.tokens),
            TokenKind::Comment => true,
            TokenKind::StringLiteral if stmt_tokens.len() == 1 => true,
            TokenKind::TryBlock => true,
            TokenKind::CatchBlock => true,
            TokenKind::Identifier
                if matches!(
                    first.text.as_str(),
                    "def" | "class" | "pass" | "if" | "elif" | "else" | "except" | "finally"
                        | "with" | "for" | "while"
                ) =>
            {
                // Headers are containers; their suites are classified
                // statement by statement.
                !stmt_has_call(&sites, stmt.tokens)
            }
            _ => is_literal_assignment(stmt_tokens),
        };
        if !allowed {
            flagged.push(stmt.span.clone());
        }
    }

    let first = flagged.first()?;
    let evidence = tf.line_text(first.line_start).trim().to_string();
    let refs = dangerous_refs(tf, apis);
    let frames = build_frames(tf);
    let has_top_dangerous = refs
        .iter()
        .any(|r| enclosing_callable(&frames, r.site.first_token).is_none());
    let mut finding = Finding::new(
        TechniqueId::R1,
        FindingLocation::Span(first.clone()),
        &evidence,
    )
    .with_context("__init__.py executes on import");
    if has_top_dangerous {
        finding = finding.with_confidence(Confidence::Strong);
    }
    Some(finding)
}

fn stmt_has_call(sites: &[CallSite], range: (usize, usize)) -> bool {
    sites
        .iter()
        .any(|s| s.first_token >= range.0 && s.first_token < range.1 && s.is_call)
}

/// `NAME = <literal>` or `NAME: type = <literal>` where the right-hand side
/// contains only literals and punctuation.
fn is_literal_assignment(stmt_tokens: &[crate::lexscan::Token]) -> bool {
    let Some(assign_pos) = stmt_tokens
        .iter()
        .position(|t| t.kind == TokenKind::Assignment)
    else {
        return false;
    };
    // Left side: identifiers, dots, commas, subscripts.
    let lhs_ok = stmt_tokens[..assign_pos].iter().all(|t| {
        matches!(t.kind, TokenKind::Identifier | TokenKind::Comment)
            || matches!(t.kind, TokenKind::Other if matches!(t.text.as_str(), "." | "," | "[" | "]" | ":"))
    });
    let rhs_ok = stmt_tokens[assign_pos + 1..].iter().all(|t| match t.kind {
        TokenKind::StringLiteral | TokenKind::NumberArray | TokenKind::Comment => true,
        TokenKind::Identifier => matches!(t.text.as_str(), "True" | "False" | "None"),
        TokenKind::Other => {
            t.text.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '_' || c == 'x')
                || matches!(
                    t.text.as_str(),
                    "(" | ")" | "[" | "]" | "{" | "}" | "," | ":" | "-" | "+"
                )
        }
        _ => false,
    });
    lhs_ok && rhs_ok
}

fn init_body_dangerous(
    tokens: &TokenIndex,
    init_span: &SourceSpan,
    catalog: &DangerousApiCatalog,
) -> bool {
    let Some(tf) = tokens.get(&init_span.path) else {
        return false;
    };
    let Some(apis) = catalog.for_language("go") else {
        return false;
    };
    let frames = build_frames(tf);
    let init_frame = frames.iter().find(|f| {
        f.kind == FrameKind::InitFn
            && tf
                .tokens
                .get(f.tokens.0)
                .is_some_and(|t| t.span.byte_start >= init_span.byte_start)
    });
    let Some(frame) = init_frame else { return false };
    dangerous_refs(tf, apis)
        .iter()
        .any(|r| r.site.first_token >= frame.tokens.0 && r.site.first_token < frame.tokens.1)
}

// --- hot-method payloads (R2, R3) ------------------------------------------

/// R2/R3: dangerous call sites inside commonly-invoked bodies. Methods of
/// classes (or impl blocks / receivers) yield R2; constructor-shaped bodies
/// and Java static/instance initializers yield R3. Build scripts and build
/// extensions are install-time surfaces and excluded here.
pub fn detect_hot_method_payloads(
    snapshot: &PackageSnapshot,
    tokens: &TokenIndex,
    catalog: &DangerousApiCatalog,
) -> Vec<Finding> {
    let eco = snapshot.coords.ecosystem;
    let facts = &snapshot.facts;
    let mut findings = Vec::new();
    if !applicability(eco, TechniqueId::R2) && !applicability(eco, TechniqueId::R3) {
        return findings;
    }

    let mut excluded: Vec<String> = Vec::new();
    if let Some(script) = &facts.build_script {
        excluded.push(snapshot.resolve(script));
    }
    for ext in &facts.build_extensions {
        excluded.push(snapshot.resolve(ext));
    }

    for (path, tf) in tokens {
        if excluded.iter().any(|e| e == path) {
            continue;
        }
        let Some(lang) = tf.language else { continue };
        let Some(apis) = catalog.for_language(lang.name()) else {
            continue;
        };
        let refs = dangerous_refs(tf, apis);
        if refs.is_empty() {
            continue;
        }
        let frames = build_frames(tf);
        let mut seen_spans: Vec<SourceSpan> = Vec::new();
        for r in refs {
            let Some(frame) = enclosing_callable(&frames, r.site.first_token) else {
                continue;
            };
            if seen_spans.contains(&r.site.span) {
                continue;
            }
            let evidence = tf.line_text(r.site.span.line_start).trim().to_string();
            let (id, context) = match frame.kind {
                FrameKind::Constructor => (
                    TechniqueId::R3,
                    format!("in constructor `{}`", frame.name),
                ),
                FrameKind::StaticInit => (
                    TechniqueId::R3,
                    format!("in static initializer of `{}`", frame.name),
                ),
                FrameKind::InstanceInit => (
                    TechniqueId::R3,
                    format!("in instance initializer of `{}`", frame.name),
                ),
                FrameKind::Method => (TechniqueId::R2, format!("in method `{}`", frame.name)),
                _ => continue, // free functions, init(): R1's domain
            };
            if !applicability(eco, id) {
                continue;
            }
            seen_spans.push(r.site.span.clone());
            findings.push(
                Finding::new(id, FindingLocation::Span(r.site.span.clone()), &evidence)
                    .with_context(context),
            );
        }
    }
    findings
}

// --- build plugins (R4) ------------------------------------------------------

/// R4: pom.xml build plugins outside the group allowlist; well-known plugin
/// names under a foreign group are shadowing and score strong confidence.
pub fn detect_build_plugin(
    snapshot: &PackageSnapshot,
    tokens: &TokenIndex,
    config: &ScanConfig,
) -> Vec<Finding> {
    let eco = snapshot.coords.ecosystem;
    if !applicability(eco, TechniqueId::R4) {
        return Vec::new();
    }
    let mut findings = Vec::new();
    for plugin in &snapshot.facts.plugins {
        if config
            .maven_plugin_allowlist
            .iter()
            .any(|allowed| allowed == &plugin.group)
        {
            continue;
        }
        let shadows = config
            .maven_wellknown_plugins
            .iter()
            .any(|known| known == &plugin.artifact);
        let location = plugin
            .span
            .clone()
            .map(FindingLocation::Span)
            .unwrap_or_else(|| {
                FindingLocation::manifest_key(snapshot.resolve("pom.xml"), "build.plugins")
            });
        let evidence = plugin
            .artifact_span
            .as_ref()
            .and_then(|span| tokens.get(&span.path).map(|tf| clip_evidence(tf.slice(span))))
            .unwrap_or_else(|| format!("{}:{}", plugin.group, plugin.artifact));
        let phases = if plugin.phases.is_empty() {
            "no explicit phase binding".to_string()
        } else {
            format!("bound phases: {}", plugin.phases.join(", "))
        };
        let mut finding = Finding::new(TechniqueId::R4, location, &evidence).with_context(
            if shadows {
                format!(
                    "well-known plugin name under foreign group {}; {phases}",
                    plugin.group
                )
            } else {
                format!("plugin group {} outside allowlist; {phases}", plugin.group)
            },
        );
        if shadows {
            finding = finding.with_confidence(Confidence::Strong);
        }
        findings.push(finding);
    }
    findings
}
