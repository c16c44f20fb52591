//! Language-profile lexical scanner.
//!
//! Produces the token streams (string literals, identifiers, comments,
//! numeric array literals, try/catch keywords, import statements,
//! assignment operators) that the detectors consume, for JavaScript,
//! Python, Ruby, PHP, Rust, Go, and Java sources.
//!
//! The scanner is deliberately not a parser: it is total over arbitrary
//! byte input, degrades malformed regions to `Other` tokens, and never
//! evaluates anything. Non-token bytes are always whitespace, so the raw
//! token texts plus inter-token gaps reconstruct the input.

use crate::model::SourceSpan;
use serde::{Deserialize, Serialize};

/// Source languages with a lexical profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    JavaScript,
    Python,
    Ruby,
    Php,
    Rust,
    Go,
    Java,
}

impl Language {
    /// Fixed extension table; files without a profile are skipped by all
    /// token-based detectors.
    pub fn from_path(path: &str) -> Option<Language> {
        let lower = path.to_ascii_lowercase();
        let ext = lower.rsplit('.').next()?;
        match ext {
            "js" | "mjs" | "cjs" => Some(Language::JavaScript),
            "py" => Some(Language::Python),
            "rb" | "gemspec" => Some(Language::Ruby),
            "php" => Some(Language::Php),
            "rs" => Some(Language::Rust),
            "go" => Some(Language::Go),
            "java" => Some(Language::Java),
            _ => None,
        }
    }

    /// Key into the dangerous-API catalog.
    pub fn name(&self) -> &'static str {
        match self {
            Language::JavaScript => "javascript",
            Language::Python => "python",
            Language::Ruby => "ruby",
            Language::Php => "php",
            Language::Rust => "rust",
            Language::Go => "go",
            Language::Java => "java",
        }
    }

    pub fn has_try_catch(&self) -> bool {
        !matches!(self, Language::Rust | Language::Go)
    }

    fn line_comment_starts(&self) -> &'static [&'static str] {
        match self {
            Language::Python | Language::Ruby => &["#"],
            Language::Php => &["//", "#"],
            _ => &["//"],
        }
    }

    fn has_block_comments(&self) -> bool {
        !matches!(self, Language::Python | Language::Ruby)
    }

    fn import_keywords(&self) -> &'static [&'static str] {
        match self {
            Language::JavaScript => &["import"],
            Language::Python => &["import", "from"],
            Language::Ruby => &["require", "require_relative", "load"],
            Language::Php => &["use", "require", "require_once", "include", "include_once"],
            Language::Rust => &["use"],
            Language::Go => &["import"],
            Language::Java => &["import"],
        }
    }

    fn keywords(&self) -> &'static [&'static str] {
        match self {
            Language::JavaScript => &[
                "break", "case", "catch", "class", "const", "continue", "debugger", "default",
                "delete", "do", "else", "export", "extends", "finally", "for", "function", "if",
                "import", "in", "instanceof", "let", "new", "of", "return", "static", "super",
                "switch", "this", "throw", "try", "typeof", "var", "void", "while", "with",
                "yield", "async", "await",
            ],
            Language::Python => &[
                "and", "as", "assert", "async", "await", "break", "class", "continue", "def",
                "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
                "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise",
                "return", "try", "while", "with", "yield", "None", "True", "False",
            ],
            Language::Ruby => &[
                "alias", "and", "begin", "break", "case", "class", "def", "defined?", "do",
                "else", "elsif", "end", "ensure", "false", "for", "if", "in", "module", "next",
                "nil", "not", "or", "redo", "rescue", "retry", "return", "self", "super", "then",
                "true", "undef", "unless", "until", "when", "while", "yield",
            ],
            Language::Php => &[
                "abstract", "and", "array", "as", "break", "callable", "case", "catch", "class",
                "clone", "const", "continue", "declare", "default", "do", "echo", "else",
                "elseif", "empty", "enddeclare", "endfor", "endforeach", "endif", "endswitch",
                "endwhile", "extends", "final", "finally", "fn", "for", "foreach", "function",
                "global", "goto", "if", "implements", "include", "include_once", "instanceof",
                "insteadof", "interface", "isset", "list", "match", "namespace", "new", "or",
                "print", "private", "protected", "public", "readonly", "require",
                "require_once", "return", "static", "switch", "throw", "trait", "try", "unset",
                "use", "var", "while", "xor", "yield",
            ],
            Language::Rust => &[
                "as", "async", "await", "break", "const", "continue", "crate", "dyn", "else",
                "enum", "extern", "false", "fn", "for", "if", "impl", "in", "let", "loop",
                "match", "mod", "move", "mut", "pub", "ref", "return", "self", "Self", "static",
                "struct", "super", "trait", "true", "type", "unsafe", "use", "where", "while",
            ],
            Language::Go => &[
                "break", "case", "chan", "const", "continue", "default", "defer", "else",
                "fallthrough", "for", "func", "go", "goto", "if", "import", "interface", "map",
                "package", "range", "return", "select", "struct", "switch", "type", "var",
            ],
            Language::Java => &[
                "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char",
                "class", "const", "continue", "default", "do", "double", "else", "enum",
                "extends", "final", "finally", "float", "for", "if", "implements", "import",
                "instanceof", "int", "interface", "long", "native", "new", "package", "private",
                "protected", "public", "return", "short", "static", "strictfp", "super",
                "switch", "synchronized", "this", "throw", "throws", "transient", "try", "void",
                "volatile", "while", "record", "var",
            ],
        }
    }

    pub fn is_keyword(&self, word: &str) -> bool {
        self.keywords().contains(&word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    StringLiteral,
    Identifier,
    Comment,
    NumberArray,
    TryBlock,
    CatchBlock,
    ImportStmt,
    Assignment,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
    /// Decoded literal value for string literals, raw text otherwise.
    pub text: String,
    /// Parsed element values for `NumberArray` tokens.
    pub numbers: Vec<i64>,
    /// Interpolation regions inside template/format strings.
    pub sub_spans: Vec<SourceSpan>,
    /// Whether this is the first token on its starting line.
    pub line_first: bool,
}

/// A tokenized file plus the bookkeeping detectors need (line table, raw
/// text, notes about degraded regions).
#[derive(Debug, Clone)]
pub struct TokenFile {
    pub path: String,
    pub language: Option<Language>,
    pub tokens: Vec<Token>,
    pub notes: Vec<String>,
    /// Byte offset of the start of each (1-based) line.
    pub line_starts: Vec<usize>,
    /// Lossily decoded source text the spans refer to.
    pub source: String,
}

impl TokenFile {
    pub fn slice(&self, span: &SourceSpan) -> &str {
        &self.source[span.byte_start.min(self.source.len())..span.byte_end.min(self.source.len())]
    }

    /// 1-based line number of a byte offset.
    pub fn line_of(&self, byte: usize) -> u32 {
        match self.line_starts.binary_search(&byte) {
            Ok(idx) => idx as u32 + 1,
            Err(idx) => idx as u32,
        }
    }

    /// 0-based byte column of an offset within its line.
    pub fn col_of(&self, byte: usize) -> usize {
        let line = self.line_of(byte) as usize;
        byte - self.line_starts[line - 1]
    }

    /// Text of a 1-based line, without the trailing newline.
    pub fn line_text(&self, line: u32) -> &str {
        let start = self.line_starts[(line - 1) as usize];
        let end = self
            .line_starts
            .get(line as usize)
            .copied()
            .unwrap_or(self.source.len());
        self.source[start..end].trim_end_matches(['\n', '\r'])
    }

    pub fn span_for(&self, byte_start: usize, byte_end: usize) -> SourceSpan {
        SourceSpan::new(
            self.path.clone(),
            self.line_of(byte_start.min(self.source.len().saturating_sub(1))),
            self.line_of(byte_end.saturating_sub(1).min(self.source.len().saturating_sub(1)).max(byte_start)),
            byte_start,
            byte_end,
        )
    }
}

/// Tokenize one file. Total: malformed regions degrade to `Other` tokens,
/// binary files yield an empty token list plus a note.
pub fn tokenize(path: &str, bytes: &[u8], language: Option<Language>) -> TokenFile {
    let mut notes = Vec::new();

    // Binary sniff: NUL byte in the first 4 KiB.
    let sniff = &bytes[..bytes.len().min(4096)];
    if sniff.contains(&0) {
        let source = String::new();
        return TokenFile {
            path: path.to_string(),
            language,
            tokens: Vec::new(),
            notes: vec![format!("{path}: binary file, skipped by token scanners")],
            line_starts: vec![0],
            source,
        };
    }

    let source = match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => {
            notes.push(format!(
                "{path}: invalid UTF-8 decoded lossily; spans refer to the decoded text"
            ));
            String::from_utf8_lossy(bytes).into_owned()
        }
    };

    let mut line_starts = vec![0usize];
    for (i, b) in source.bytes().enumerate() {
        if b == b'\n' {
            line_starts.push(i + 1);
        }
    }

    let tokens = match language {
        Some(lang) => Scanner::new(&source, lang, &mut notes, path).run(),
        None => Vec::new(),
    };

    let mut file = TokenFile {
        path: path.to_string(),
        language,
        tokens,
        notes,
        line_starts,
        source,
    };
    mark_line_firsts(&mut file);
    file
}

fn mark_line_firsts(file: &mut TokenFile) {
    let mut last_line = 0u32;
    let line_starts = file.line_starts.clone();
    for token in &mut file.tokens {
        let line = match line_starts.binary_search(&token.span.byte_start) {
            Ok(idx) => idx as u32 + 1,
            Err(idx) => idx as u32,
        };
        token.line_first = line != last_line;
        last_line = file_line(&line_starts, token.span.byte_end.saturating_sub(1).max(token.span.byte_start));
    }
}

fn file_line(line_starts: &[usize], byte: usize) -> u32 {
    match line_starts.binary_search(&byte) {
        Ok(idx) => idx as u32 + 1,
        Err(idx) => idx as u32,
    }
}

struct Scanner<'a> {
    src: &'a str,
    bytes: &'a [u8],
    lang: Language,
    pos: usize,
    tokens: Vec<Token>,
    notes: &'a mut Vec<String>,
    path: &'a str,
    /// True when the next token starts a statement (after newline, `;`,
    /// `{`, `}` or file start).
    at_stmt_start: bool,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str, lang: Language, notes: &'a mut Vec<String>, path: &'a str) -> Self {
        Scanner {
            src,
            bytes: src.as_bytes(),
            lang,
            pos: 0,
            tokens: Vec::new(),
            notes,
            path,
            at_stmt_start: true,
        }
    }

    fn run(mut self) -> Vec<Token> {
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let c = self.cur_char();

            if c.is_whitespace() {
                if c == '\n' {
                    self.at_stmt_start = true;
                }
                self.pos += c.len_utf8();
                continue;
            }

            if self.try_comment() {
                continue;
            }
            if self.try_ruby_block_comment() {
                continue;
            }
            if self.try_string() {
                self.at_stmt_start = false;
                continue;
            }
            if self.try_number_array() {
                self.at_stmt_start = false;
                continue;
            }
            if self.is_ident_start(c) {
                self.read_word(start);
                continue;
            }
            if c.is_ascii_digit() {
                self.read_number(start);
                self.at_stmt_start = false;
                continue;
            }
            if c == '=' {
                self.read_equals(start);
                self.at_stmt_start = false;
                continue;
            }

            // Punctuation: `::` and `->` chain separators stay one token,
            // everything else is single-character.
            let two_char_sep = (c == ':' && self.char_at(self.pos + 1) == Some(':'))
                || (c == '-' && self.char_at(self.pos + 1) == Some('>'));
            if two_char_sep {
                self.pos += 2;
            } else {
                self.pos += c.len_utf8();
            }
            self.push_raw(TokenKind::Other, start, self.pos);
            self.at_stmt_start = matches!(c, ';' | '{' | '}');
        }
        self.tokens
    }

    fn cur_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or('\0')
    }

    fn char_at(&self, pos: usize) -> Option<char> {
        self.src.get(pos..).and_then(|s| s.chars().next())
    }

    fn starts_with(&self, pat: &str) -> bool {
        self.src[self.pos..].starts_with(pat)
    }

    fn push_raw(&mut self, kind: TokenKind, start: usize, end: usize) {
        self.push_token(kind, start, end, self.src[start..end].to_string());
    }

    fn push_token(&mut self, kind: TokenKind, start: usize, end: usize, text: String) {
        self.tokens.push(Token {
            kind,
            span: self.span(start, end),
            text,
            numbers: Vec::new(),
            sub_spans: Vec::new(),
            line_first: false,
        });
    }

    fn span(&self, start: usize, end: usize) -> SourceSpan {
        let line_start = count_lines(&self.bytes[..start]) + 1;
        let line_end = count_lines(&self.bytes[..end.max(start)]) + 1
            - if end > start && self.bytes.get(end - 1) == Some(&b'\n') {
                1
            } else {
                0
            };
        SourceSpan::new(
            self.path.to_string(),
            line_start,
            line_end.max(line_start),
            start,
            end,
        )
    }

    fn is_ident_start(&self, c: char) -> bool {
        if c.is_alphabetic() || c == '_' {
            return true;
        }
        match self.lang {
            Language::JavaScript => c == '$',
            Language::Php | Language::Ruby => c == '$' || c == '@',
            _ => false,
        }
    }

    fn is_ident_continue(&self, c: char) -> bool {
        if c.is_alphanumeric() || c == '_' {
            return true;
        }
        matches!(self.lang, Language::JavaScript | Language::Php) && c == '$'
    }

    // --- comments ---

    fn try_comment(&mut self) -> bool {
        let start = self.pos;
        for marker in self.lang.line_comment_starts() {
            if self.starts_with(marker) {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                self.push_raw(TokenKind::Comment, start, self.pos);
                return true;
            }
        }
        if self.lang.has_block_comments() && self.starts_with("/*") {
            self.pos += 2;
            let nests = self.lang == Language::Rust;
            let mut depth = 1;
            while self.pos < self.bytes.len() && depth > 0 {
                if self.starts_with("*/") {
                    depth -= 1;
                    self.pos += 2;
                } else if nests && self.starts_with("/*") {
                    depth += 1;
                    self.pos += 2;
                } else {
                    self.pos += self.cur_char().len_utf8().max(1);
                }
            }
            self.push_raw(TokenKind::Comment, start, self.pos);
            return true;
        }
        false
    }

    fn try_ruby_block_comment(&mut self) -> bool {
        if self.lang != Language::Ruby || !self.at_line_begin() || !self.starts_with("=begin") {
            return false;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() {
            if self.at_line_begin() && self.starts_with("=end") {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                break;
            }
            self.pos += 1;
        }
        self.push_raw(TokenKind::Comment, start, self.pos);
        true
    }

    fn at_line_begin(&self) -> bool {
        self.pos == 0 || self.bytes.get(self.pos - 1) == Some(&b'\n')
    }

    // --- strings ---

    fn try_string(&mut self) -> bool {
        match self.lang {
            Language::Python => self.try_python_string(),
            Language::JavaScript => self.try_js_string(),
            Language::Ruby => self.try_ruby_string(),
            Language::Php => self.try_php_string(),
            Language::Rust => self.try_rust_string(),
            Language::Go => self.try_go_string(),
            Language::Java => self.try_java_string(),
        }
    }

    fn try_python_string(&mut self) -> bool {
        let start = self.pos;
        let mut p = self.pos;
        let mut raw = false;
        let mut fstr = false;
        // Up to two prefix letters (r, b, f, u in any case/order).
        for _ in 0..2 {
            match self.char_at(p) {
                Some(c) if "rRbBfFuU".contains(c) => {
                    if c == 'r' || c == 'R' {
                        raw = true;
                    }
                    if c == 'f' || c == 'F' {
                        fstr = true;
                    }
                    p += 1;
                }
                _ => break,
            }
        }
        let quote = match self.char_at(p) {
            Some(q @ ('"' | '\'')) => q,
            _ => return false,
        };
        let triple = self.src[p..].starts_with(&quote.to_string().repeat(3));
        let open_len = if triple { 3 } else { 1 };
        let body_start = p + open_len;
        let closer = quote.to_string().repeat(open_len);
        let mut i = body_start;
        let mut value = String::new();
        let mut subs = Vec::new();
        let mut closed = false;
        while i < self.bytes.len() {
            if self.src[i..].starts_with(&closer) {
                closed = true;
                i += open_len;
                break;
            }
            let c = self.char_at(i).unwrap_or('\0');
            if !triple && c == '\n' {
                break; // unterminated single-line string
            }
            if c == '\\' && !raw {
                let (decoded, consumed) = decode_escape(&self.src[i..]);
                value.push_str(&decoded);
                i += consumed;
                continue;
            }
            if fstr && c == '{' {
                if self.char_at(i + 1) == Some('{') {
                    value.push('{');
                    i += 2;
                    continue;
                }
                let sub_start = i;
                let mut depth = 0usize;
                while i < self.bytes.len() {
                    let ic = self.char_at(i).unwrap_or('\0');
                    if ic == '{' {
                        depth += 1;
                    } else if ic == '}' {
                        depth -= 1;
                        if depth == 0 {
                            i += 1;
                            break;
                        }
                    }
                    i += ic.len_utf8();
                }
                value.push_str(&self.src[sub_start..i]);
                subs.push(self.span(sub_start, i));
                continue;
            }
            value.push(c);
            i += c.len_utf8();
        }
        if !closed && !triple && i >= self.bytes.len() {
            // Unterminated at EOF: degrade whole remainder to Other.
            self.notes
                .push(format!("{}: unterminated string at byte {start}", self.path));
            self.pos = self.bytes.len();
            self.push_raw(TokenKind::Other, start, self.pos);
            return true;
        }
        if !closed && !triple {
            // Unterminated before newline: degrade the slice to Other.
            self.notes
                .push(format!("{}: unterminated string at byte {start}", self.path));
            self.pos = i;
            self.push_raw(TokenKind::Other, start, self.pos);
            return true;
        }
        self.pos = i;
        let mut token = Token {
            kind: TokenKind::StringLiteral,
            span: self.span(start, self.pos),
            text: value,
            numbers: Vec::new(),
            sub_spans: subs,
            line_first: false,
        };
        if !closed {
            token.kind = TokenKind::Other;
            token.text = self.src[start..self.pos].to_string();
            self.notes
                .push(format!("{}: unterminated string at byte {start}", self.path));
        }
        self.tokens.push(token);
        true
    }

    fn try_js_string(&mut self) -> bool {
        let start = self.pos;
        match self.cur_char() {
            '\'' | '"' => {
                let quote = self.cur_char();
                self.simple_quoted(start, quote, true);
                true
            }
            '`' => {
                self.pos += 1;
                let mut value = String::new();
                let mut subs = Vec::new();
                while self.pos < self.bytes.len() {
                    let c = self.cur_char();
                    if c == '`' {
                        self.pos += 1;
                        break;
                    }
                    if c == '\\' {
                        let (decoded, consumed) = decode_escape(&self.src[self.pos..]);
                        value.push_str(&decoded);
                        self.pos += consumed;
                        continue;
                    }
                    if c == '$' && self.char_at(self.pos + 1) == Some('{') {
                        let sub_start = self.pos;
                        self.pos += 2;
                        let mut depth = 1usize;
                        while self.pos < self.bytes.len() && depth > 0 {
                            match self.cur_char() {
                                '{' => depth += 1,
                                '}' => depth -= 1,
                                _ => {}
                            }
                            self.pos += self.cur_char().len_utf8().max(1);
                        }
                        value.push_str(&self.src[sub_start..self.pos]);
                        subs.push(self.span(sub_start, self.pos));
                        continue;
                    }
                    value.push(c);
                    self.pos += c.len_utf8();
                }
                self.tokens.push(Token {
                    kind: TokenKind::StringLiteral,
                    span: self.span(start, self.pos),
                    text: value,
                    numbers: Vec::new(),
                    sub_spans: subs,
                    line_first: false,
                });
                true
            }
            _ => false,
        }
    }

    fn try_ruby_string(&mut self) -> bool {
        let start = self.pos;
        match self.cur_char() {
            '\'' => {
                self.simple_quoted(start, '\'', false);
                true
            }
            '"' | '`' => {
                let quote = self.cur_char();
                self.ruby_interpolated(start, quote);
                true
            }
            '%' => {
                // %q(..) %Q(..) %w[..] %i{..}; unsupported forms fall through.
                let kind_char = self.char_at(self.pos + 1);
                let (delim_pos, _literal_kind) = match kind_char {
                    Some(k @ ('q' | 'Q' | 'w' | 'W' | 'i' | 'I')) => (self.pos + 2, k),
                    Some(c) if "([{<".contains(c) => (self.pos + 1, '%'),
                    _ => return false,
                };
                let open = match self.char_at(delim_pos) {
                    Some(c @ ('(' | '[' | '{' | '<')) => c,
                    _ => return false,
                };
                let close = match open {
                    '(' => ')',
                    '[' => ']',
                    '{' => '}',
                    _ => '>',
                };
                let mut i = delim_pos + 1;
                let mut depth = 1usize;
                let body_start = i;
                while i < self.bytes.len() && depth > 0 {
                    let c = self.char_at(i).unwrap_or('\0');
                    if c == open {
                        depth += 1;
                    } else if c == close {
                        depth -= 1;
                    }
                    i += c.len_utf8();
                }
                let value = self.src[body_start..i.saturating_sub(1).max(body_start)].to_string();
                self.pos = i;
                self.push_token(TokenKind::StringLiteral, start, self.pos, value);
                true
            }
            _ => false,
        }
    }

    fn ruby_interpolated(&mut self, start: usize, quote: char) {
        self.pos += 1;
        let mut value = String::new();
        let mut subs = Vec::new();
        while self.pos < self.bytes.len() {
            let c = self.cur_char();
            if c == quote {
                self.pos += 1;
                break;
            }
            if c == '\\' {
                let (decoded, consumed) = decode_escape(&self.src[self.pos..]);
                value.push_str(&decoded);
                self.pos += consumed;
                continue;
            }
            if c == '#' && self.char_at(self.pos + 1) == Some('{') {
                let sub_start = self.pos;
                self.pos += 2;
                let mut depth = 1usize;
                while self.pos < self.bytes.len() && depth > 0 {
                    match self.cur_char() {
                        '{' => depth += 1,
                        '}' => depth -= 1,
                        _ => {}
                    }
                    self.pos += self.cur_char().len_utf8().max(1);
                }
                value.push_str(&self.src[sub_start..self.pos]);
                subs.push(self.span(sub_start, self.pos));
                continue;
            }
            value.push(c);
            self.pos += c.len_utf8();
        }
        self.tokens.push(Token {
            kind: TokenKind::StringLiteral,
            span: self.span(start, self.pos),
            text: value,
            numbers: Vec::new(),
            sub_spans: subs,
            line_first: false,
        });
    }

    fn try_php_string(&mut self) -> bool {
        let start = self.pos;
        match self.cur_char() {
            '\'' => {
                self.simple_quoted(start, '\'', false);
                true
            }
            '"' | '`' => {
                let quote = self.cur_char();
                self.simple_quoted(start, quote, true);
                true
            }
            '<' if self.starts_with("<<<") => {
                // Heredoc / nowdoc: <<<TAG ... TAG;
                let mut i = self.pos + 3;
                let mut tag = String::new();
                let quoted = matches!(self.char_at(i), Some('\'' | '"'));
                if quoted {
                    i += 1;
                }
                while let Some(c) = self.char_at(i) {
                    if c.is_alphanumeric() || c == '_' {
                        tag.push(c);
                        i += 1;
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return false;
                }
                if quoted {
                    i += 1; // closing quote of the tag
                }
                // Scan to a line whose trimmed start is the tag.
                let mut end = i;
                let mut value_start = None;
                while end < self.bytes.len() {
                    if self.bytes[end] == b'\n' {
                        if value_start.is_none() {
                            value_start = Some(end + 1);
                        }
                        let line_start = end + 1;
                        let rest = &self.src[line_start..];
                        let trimmed = rest.trim_start();
                        if trimmed.starts_with(&tag) {
                            let indent = rest.len() - trimmed.len();
                            let tag_end = line_start + indent + tag.len();
                            let value = self.src[value_start.unwrap()..end + 1]
                                .trim_end_matches('\n')
                                .to_string();
                            self.pos = tag_end;
                            self.push_token(TokenKind::StringLiteral, start, self.pos, value);
                            return true;
                        }
                    }
                    end += 1;
                }
                self.notes.push(format!(
                    "{}: unterminated heredoc at byte {start}, degraded",
                    self.path
                ));
                self.pos = self.bytes.len();
                self.push_raw(TokenKind::Other, start, self.pos);
                true
            }
            _ => false,
        }
    }

    fn try_rust_string(&mut self) -> bool {
        let start = self.pos;
        let c = self.cur_char();
        if c == 'r' || c == 'b' {
            // r"..", r#".."#, b"..", br"..".
            let mut p = self.pos + 1;
            if (c == 'b' && matches!(self.char_at(p), Some('r'))) || c == 'r' {
                if c == 'b' {
                    p += 1;
                }
                let mut hashes = 0;
                while self.char_at(p) == Some('#') {
                    hashes += 1;
                    p += 1;
                }
                if self.char_at(p) == Some('"') {
                    let body_start = p + 1;
                    let closer = format!("\"{}", "#".repeat(hashes));
                    let rel = self.src[body_start..].find(&closer);
                    let (value_end, token_end) = match rel {
                        Some(r) => (body_start + r, body_start + r + closer.len()),
                        None => (self.bytes.len(), self.bytes.len()),
                    };
                    let value = self.src[body_start..value_end].to_string();
                    self.pos = token_end;
                    self.push_token(TokenKind::StringLiteral, start, self.pos, value);
                    return true;
                }
                return false;
            }
            if c == 'b' && self.char_at(p) == Some('"') {
                self.pos = p;
                self.simple_quoted(start, '"', true);
                return true;
            }
            return false;
        }
        if c == '"' {
            self.simple_quoted(start, '"', true);
            return true;
        }
        if c == '\'' {
            return self.try_char_literal(start);
        }
        false
    }

    fn try_go_string(&mut self) -> bool {
        let start = self.pos;
        match self.cur_char() {
            '"' => {
                self.simple_quoted(start, '"', true);
                true
            }
            '`' => {
                self.pos += 1;
                let rel = self.src[self.pos..].find('`');
                let (value_end, token_end) = match rel {
                    Some(r) => (self.pos + r, self.pos + r + 1),
                    None => (self.bytes.len(), self.bytes.len()),
                };
                let value = self.src[self.pos..value_end].to_string();
                self.pos = token_end;
                self.push_token(TokenKind::StringLiteral, start, self.pos, value);
                true
            }
            '\'' => self.try_char_literal(start),
            _ => false,
        }
    }

    fn try_java_string(&mut self) -> bool {
        let start = self.pos;
        match self.cur_char() {
            '"' if self.starts_with("\"\"\"") => {
                let body_start = self.pos + 3;
                let rel = self.src[body_start..].find("\"\"\"");
                let (value_end, token_end) = match rel {
                    Some(r) => (body_start + r, body_start + r + 3),
                    None => (self.bytes.len(), self.bytes.len()),
                };
                let value = self.src[body_start..value_end].to_string();
                self.pos = token_end;
                self.push_token(TokenKind::StringLiteral, start, self.pos, value);
                true
            }
            '"' => {
                self.simple_quoted(start, '"', true);
                true
            }
            '\'' => self.try_char_literal(start),
            _ => false,
        }
    }

    /// `'x'` or `'\n'`; a lone quote (Rust lifetime) stays `Other`.
    fn try_char_literal(&mut self, start: usize) -> bool {
        let mut i = self.pos + 1;
        let c = match self.char_at(i) {
            Some(c) => c,
            None => return false,
        };
        let value;
        if c == '\\' {
            let (decoded, consumed) = decode_escape(&self.src[i..]);
            value = decoded;
            i += consumed;
        } else if c != '\'' && c != '\n' {
            value = c.to_string();
            i += c.len_utf8();
        } else {
            return false;
        }
        if self.char_at(i) == Some('\'') {
            self.pos = i + 1;
            self.push_token(TokenKind::StringLiteral, start, self.pos, value);
            true
        } else {
            false // lifetime or apostrophe: handled as Other punctuation
        }
    }

    /// Single-line quoted string with optional escape decoding.
    fn simple_quoted(&mut self, start: usize, quote: char, escapes: bool) {
        self.pos += 1; // opening quote
        let mut value = String::new();
        let mut closed = false;
        while self.pos < self.bytes.len() {
            let c = self.cur_char();
            if c == quote {
                self.pos += 1;
                closed = true;
                break;
            }
            if c == '\n' {
                break;
            }
            if c == '\\' && escapes {
                let (decoded, consumed) = decode_escape(&self.src[self.pos..]);
                value.push_str(&decoded);
                self.pos += consumed;
                continue;
            }
            if c == '\\' && !escapes {
                // Minimal escaping in single-quoted strings: \\ and \'.
                if let Some(next) = self.char_at(self.pos + 1) {
                    if next == '\\' || next == quote {
                        value.push(next);
                        self.pos += 1 + next.len_utf8();
                        continue;
                    }
                }
                value.push('\\');
                self.pos += 1;
                continue;
            }
            value.push(c);
            self.pos += c.len_utf8();
        }
        if closed {
            self.push_token(TokenKind::StringLiteral, start, self.pos, value);
        } else {
            self.notes
                .push(format!("{}: unterminated string at byte {start}", self.path));
            self.push_raw(TokenKind::Other, start, self.pos);
        }
    }

    // --- number arrays ---

    fn try_number_array(&mut self) -> bool {
        let open = self.cur_char();
        if open != '[' && open != '{' {
            return false;
        }
        let close = if open == '[' { ']' } else { '}' };
        let start = self.pos;
        let mut i = self.pos + 1;
        let mut numbers = Vec::new();
        let limit = self.bytes.len().min(self.pos + 256 * 1024);
        loop {
            // Skip whitespace and newlines.
            while i < limit && self.char_at(i).is_some_and(|c| c.is_whitespace()) {
                i += 1;
            }
            if i >= limit {
                return false;
            }
            let c = self.char_at(i).unwrap();
            if c == close {
                i += 1;
                break;
            }
            // Expect a number.
            let num_start = i;
            if c == '-' || c == '+' {
                i += 1;
            }
            if self.src[i..].starts_with("0x") || self.src[i..].starts_with("0X") {
                i += 2;
                while i < limit && self.char_at(i).is_some_and(|c| c.is_ascii_hexdigit()) {
                    i += 1;
                }
            } else {
                let digits_start = i;
                while i < limit && self.char_at(i).is_some_and(|c| c.is_ascii_digit()) {
                    i += 1;
                }
                if i == digits_start {
                    return false; // not a pure number list
                }
            }
            let raw = &self.src[num_start..i];
            let parsed = if let Some(hex) = raw
                .strip_prefix("0x")
                .or_else(|| raw.strip_prefix("0X"))
                .or_else(|| raw.strip_prefix("-0x").map(|_| &raw[3..]))
            {
                i64::from_str_radix(hex, 16).ok()
            } else {
                raw.parse::<i64>().ok()
            };
            match parsed {
                Some(n) => numbers.push(n),
                None => return false,
            }
            // Skip whitespace, expect comma or closer.
            while i < limit && self.char_at(i).is_some_and(|c| c.is_whitespace()) {
                i += 1;
            }
            match self.char_at(i) {
                Some(',') => i += 1,
                Some(c) if c == close => {}
                _ => return false,
            }
        }
        if numbers.len() < 2 {
            return false;
        }
        let text = self.src[start..i].to_string();
        self.tokens.push(Token {
            kind: TokenKind::NumberArray,
            span: self.span(start, i),
            text,
            numbers,
            sub_spans: Vec::new(),
            line_first: false,
        });
        self.pos = i;
        true
    }

    // --- words ---

    fn read_word(&mut self, start: usize) {
        self.pos += self.cur_char().len_utf8();
        while self.pos < self.bytes.len() && self.is_ident_continue(self.cur_char()) {
            self.pos += self.cur_char().len_utf8();
        }
        // Ruby method names may end with ? or !.
        if self.lang == Language::Ruby
            && matches!(self.char_at(self.pos), Some('?' | '!'))
            && self
                .char_at(self.pos + 1)
                .is_none_or(|c| !self.is_ident_continue(c) && c != '=')
        {
            self.pos += 1;
        }
        let word = &self.src[start..self.pos];
        let stmt_start = self.at_stmt_start;
        self.at_stmt_start = false;

        let after_dot = self
            .tokens
            .last()
            .is_some_and(|t| t.kind == TokenKind::Other && (t.text == "." || t.text == "::"));

        if !after_dot && stmt_start && self.lang.import_keywords().contains(&word) {
            self.read_import_stmt(start);
            return;
        }
        if !after_dot {
            let (try_kw, catch_kw): (&[&str], &[&str]) = match self.lang {
                Language::Python => (&["try"], &["except"]),
                Language::Ruby => (&["begin"], &["rescue"]),
                Language::JavaScript | Language::Java | Language::Php => (&["try"], &["catch"]),
                Language::Rust | Language::Go => (&[], &[]),
            };
            if try_kw.contains(&word) {
                self.push_raw(TokenKind::TryBlock, start, self.pos);
                return;
            }
            if catch_kw.contains(&word) {
                self.push_raw(TokenKind::CatchBlock, start, self.pos);
                return;
            }
        }
        self.push_raw(TokenKind::Identifier, start, self.pos);
    }

    /// Consume an import statement as one token. Go parenthesized imports
    /// run to the closing `)`, semicolon languages to `;`, the rest to end
    /// of line.
    fn read_import_stmt(&mut self, start: usize) {
        let to_semicolon = matches!(
            self.lang,
            Language::Php | Language::Rust | Language::Java | Language::JavaScript
        );
        // Peek for Go's parenthesized form.
        if self.lang == Language::Go {
            let mut p = self.pos;
            while self.char_at(p).is_some_and(|c| c == ' ' || c == '\t') {
                p += 1;
            }
            if self.char_at(p) == Some('(') {
                let rel = self.src[p..].find(')');
                self.pos = match rel {
                    Some(r) => p + r + 1,
                    None => self.bytes.len(),
                };
                self.push_raw(TokenKind::ImportStmt, start, self.pos);
                self.at_stmt_start = false;
                return;
            }
        }
        while self.pos < self.bytes.len() {
            let c = self.cur_char();
            if c == '\n' {
                break;
            }
            if c == ';' {
                if to_semicolon {
                    self.pos += 1;
                }
                break;
            }
            self.pos += c.len_utf8();
        }
        // Trim trailing spaces from the token.
        let mut end = self.pos;
        while end > start && self.bytes[end - 1].is_ascii_whitespace() {
            end -= 1;
        }
        let save = self.pos;
        self.pos = end;
        self.push_raw(TokenKind::ImportStmt, start, end);
        self.pos = save;
        self.at_stmt_start = false;
    }

    fn read_number(&mut self, start: usize) {
        if self.starts_with("0x") || self.starts_with("0X") {
            self.pos += 2;
            while self.pos < self.bytes.len()
                && (self.cur_char().is_ascii_hexdigit() || self.cur_char() == '_')
            {
                self.pos += 1;
            }
        } else {
            while self.pos < self.bytes.len()
                && (self.cur_char().is_ascii_alphanumeric()
                    || self.cur_char() == '_'
                    || self.cur_char() == '.')
            {
                // Stop a trailing dot that is not followed by a digit
                // (method call on a number stays punctuation).
                if self.cur_char() == '.'
                    && !self
                        .char_at(self.pos + 1)
                        .is_some_and(|c| c.is_ascii_digit())
                {
                    break;
                }
                self.pos += 1;
            }
        }
        self.push_raw(TokenKind::Other, start, self.pos);
    }

    fn read_equals(&mut self, start: usize) {
        let next = self.char_at(self.pos + 1);
        let prev = if start > 0 {
            self.src[..start].chars().next_back()
        } else {
            None
        };
        if matches!(next, Some('=' | '>' | '~')) {
            // ==, ===, =>, =~ are not assignments.
            self.pos += 1;
            while matches!(self.char_at(self.pos), Some('=' | '>' | '~')) {
                self.pos += 1;
            }
            self.push_raw(TokenKind::Other, start, self.pos);
            return;
        }
        if matches!(prev, Some('=' | '!' | '<' | '>')) {
            self.pos += 1;
            self.push_raw(TokenKind::Other, start, self.pos);
            return;
        }
        self.pos += 1;
        self.push_raw(TokenKind::Assignment, start, self.pos);
    }
}

fn count_lines(bytes: &[u8]) -> u32 {
    bytes.iter().filter(|&&b| b == b'\n').count() as u32
}

/// Decode one escape sequence starting at a backslash. Returns the decoded
/// text and the number of bytes consumed.
fn decode_escape(s: &str) -> (String, usize) {
    let mut chars = s.chars();
    chars.next(); // backslash
    let c = match chars.next() {
        Some(c) => c,
        None => return ("\\".to_string(), 1),
    };
    match c {
        'n' => ("\n".into(), 2),
        't' => ("\t".into(), 2),
        'r' => ("\r".into(), 2),
        '0' => ("\0".into(), 2),
        'a' => ("\x07".into(), 2),
        'b' => ("\x08".into(), 2),
        'f' => ("\x0c".into(), 2),
        'v' => ("\x0b".into(), 2),
        'x' => {
            let hex: String = s[2..].chars().take(2).collect();
            if hex.len() == 2 && hex.chars().all(|c| c.is_ascii_hexdigit()) {
                let byte = u8::from_str_radix(&hex, 16).unwrap();
                ((byte as char).to_string(), 4)
            } else {
                ("x".into(), 2)
            }
        }
        'u' => {
            if s[2..].starts_with('{') {
                // \u{XXXX}
                if let Some(end) = s[3..].find('}') {
                    let hex = &s[3..3 + end];
                    if let Ok(cp) = u32::from_str_radix(hex, 16) {
                        if let Some(ch) = char::from_u32(cp) {
                            return (ch.to_string(), 3 + end + 1);
                        }
                    }
                }
                ("u".into(), 2)
            } else {
                let hex: String = s[2..].chars().take(4).collect();
                if hex.len() == 4 && hex.chars().all(|c| c.is_ascii_hexdigit()) {
                    let cp = u32::from_str_radix(&hex, 16).unwrap();
                    match char::from_u32(cp) {
                        Some(ch) => (ch.to_string(), 6),
                        None => ("u".into(), 2),
                    }
                } else {
                    ("u".into(), 2)
                }
            }
        }
        '\n' => ("".into(), 2), // line continuation
        other => (other.to_string(), 1 + other.len_utf8()),
    }
}

/// A maximal dotted name (`a.b.c`, `A::b`, `$o->m`) with its token range.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSite {
    /// Chain normalized with `.` separators.
    pub chain: String,
    /// Token index of the first and last identifier of the chain.
    pub first_token: usize,
    pub last_token: usize,
    pub span: SourceSpan,
    /// Whether the chain is immediately followed by `(`.
    pub is_call: bool,
}

fn is_chain_sep(token: &Token) -> bool {
    token.kind == TokenKind::Other && (token.text == "." || token.text == "::" || token.text == "->")
}

/// Extract every maximal identifier chain in the file.
pub fn call_sites(file: &TokenFile) -> Vec<CallSite> {
    let tokens = &file.tokens;
    let mut sites = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind != TokenKind::Identifier {
            i += 1;
            continue;
        }
        // Skip identifiers linked to a preceding identifier (mid-chain;
        // handled by their head). A separator after `)`, `]`, or a literal
        // starts a fresh chain: `require('x').exec(...)`.
        if i > 1 && is_chain_sep(&tokens[i - 1]) && tokens[i - 2].kind == TokenKind::Identifier {
            i += 1;
            continue;
        }
        let first = i;
        let mut last = i;
        let mut chain = tokens[i].text.clone();
        let mut j = i + 1;
        while j + 1 < tokens.len()
            && is_chain_sep(&tokens[j])
            && tokens[j + 1].kind == TokenKind::Identifier
        {
            chain.push('.');
            chain.push_str(&tokens[j + 1].text);
            last = j + 1;
            j += 2;
        }
        let is_call = tokens
            .get(last + 1)
            .is_some_and(|t| t.kind == TokenKind::Other && t.text == "(");
        sites.push(CallSite {
            chain,
            first_token: first,
            last_token: last,
            span: SourceSpan::new(
                file.path.clone(),
                tokens[first].span.line_start,
                tokens[last].span.line_end,
                tokens[first].span.byte_start,
                tokens[last].span.byte_end,
            ),
            is_call,
        });
        i = last + 1;
    }
    sites
}

/// Chains separated by `::` or `->` keep their original separators in the
/// raw text; this helper also records the raw text for evidence.
pub fn chain_raw_text<'a>(file: &'a TokenFile, site: &CallSite) -> &'a str {
    let span = SourceSpan::new(
        file.path.clone(),
        0,
        0,
        file.tokens[site.first_token].span.byte_start,
        file.tokens[site.last_token].span.byte_end,
    );
    file.slice(&span)
}

/// One try/catch pairing with the emptiness of the handler body.
#[derive(Debug, Clone, PartialEq)]
pub struct CatchShape {
    pub try_span: SourceSpan,
    pub catch_span: SourceSpan,
    pub catch_body_is_empty: bool,
    /// Token range (inclusive start, exclusive end) of the guarded try body.
    pub try_body_tokens: (usize, usize),
}

/// Pair try/except/rescue keywords with their handlers and classify whether
/// each handler body is empty (whitespace, comments, `pass`-equivalents).
///
/// Languages without try/catch yield an empty list plus a note.
pub fn catch_shapes(file: &TokenFile) -> (Vec<CatchShape>, Vec<String>) {
    let mut notes = Vec::new();
    let lang = match file.language {
        Some(l) => l,
        None => return (Vec::new(), notes),
    };
    if !lang.has_try_catch() {
        notes.push(format!(
            "{}: {} has no try/catch construct",
            file.path,
            lang.name()
        ));
        return (Vec::new(), notes);
    }
    let shapes = match lang {
        Language::Python => python_catch_shapes(file),
        Language::Ruby => ruby_catch_shapes(file),
        _ => brace_catch_shapes(file),
    };
    (shapes, notes)
}

fn token_is(token: &Token, text: &str) -> bool {
    token.kind == TokenKind::Other && token.text == text
}

/// Find the matching close brace starting at `open_idx` (which must be `{`).
fn matching_brace(tokens: &[Token], open_idx: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in tokens.iter().enumerate().skip(open_idx) {
        if token_is(t, "{") {
            depth += 1;
        } else if token_is(t, "}") {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn next_significant(tokens: &[Token], mut idx: usize) -> Option<usize> {
    while idx < tokens.len() {
        if tokens[idx].kind != TokenKind::Comment {
            return Some(idx);
        }
        idx += 1;
    }
    None
}

fn brace_catch_shapes(file: &TokenFile) -> Vec<CatchShape> {
    let tokens = &file.tokens;
    let mut shapes = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::TryBlock {
            continue;
        }
        let mut idx = match next_significant(tokens, i + 1) {
            Some(n) => n,
            None => continue,
        };
        // Java try-with-resources: skip a parenthesized group.
        if token_is(&tokens[idx], "(") {
            let mut depth = 0i32;
            let mut j = idx;
            while j < tokens.len() {
                if token_is(&tokens[j], "(") {
                    depth += 1;
                } else if token_is(&tokens[j], ")") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                j += 1;
            }
            idx = match next_significant(tokens, j + 1) {
                Some(n) => n,
                None => continue,
            };
        }
        if !token_is(&tokens[idx], "{") {
            continue;
        }
        let try_close = match matching_brace(tokens, idx) {
            Some(c) => c,
            None => continue,
        };
        let try_body = (idx + 1, try_close);
        // One or more catch clauses follow.
        let mut cursor = try_close + 1;
        while let Some(ci) = next_significant(tokens, cursor) {
            if tokens[ci].kind != TokenKind::CatchBlock {
                break;
            }
            let catch_tok = &tokens[ci];
            let mut bi = match next_significant(tokens, ci + 1) {
                Some(n) => n,
                None => break,
            };
            if token_is(&tokens[bi], "(") {
                let mut depth = 0i32;
                let mut j = bi;
                while j < tokens.len() {
                    if token_is(&tokens[j], "(") {
                        depth += 1;
                    } else if token_is(&tokens[j], ")") {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    j += 1;
                }
                bi = match next_significant(tokens, j + 1) {
                    Some(n) => n,
                    None => break,
                };
            }
            if !token_is(&tokens[bi], "{") {
                break;
            }
            let close = match matching_brace(tokens, bi) {
                Some(c) => c,
                None => break,
            };
            let body_empty = tokens[bi + 1..close]
                .iter()
                .all(|t| t.kind == TokenKind::Comment || token_is(t, ";"));
            shapes.push(CatchShape {
                try_span: t.span.clone(),
                catch_span: catch_tok.span.clone(),
                catch_body_is_empty: body_empty,
                try_body_tokens: try_body,
            });
            cursor = close + 1;
        }
    }
    shapes
}

fn python_catch_shapes(file: &TokenFile) -> Vec<CatchShape> {
    let tokens = &file.tokens;
    let mut shapes = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::TryBlock || !t.line_first {
            continue;
        }
        let try_col = file.col_of(t.span.byte_start);
        // Try body: tokens after the try line until a line_first token at
        // column <= try_col.
        let mut body_end = tokens.len();
        let mut except_idxs = Vec::new();
        for (j, u) in tokens.iter().enumerate().skip(i + 1) {
            if !u.line_first || u.span.line_start == t.span.line_start {
                continue;
            }
            let col = file.col_of(u.span.byte_start);
            if col <= try_col {
                if u.kind == TokenKind::CatchBlock && col == try_col {
                    except_idxs.push(j);
                    continue;
                }
                if u.kind == TokenKind::Identifier
                    && (u.text == "finally" || u.text == "else")
                    && col == try_col
                {
                    continue;
                }
                body_end = j;
                break;
            }
        }
        let try_body_end = except_idxs.first().copied().unwrap_or(body_end);
        for (n, &ei) in except_idxs.iter().enumerate() {
            let handler_end = except_idxs.get(n + 1).copied().unwrap_or(body_end);
            // Handler body: tokens after the ':' of the except line.
            let mut body_tokens: Vec<&Token> = Vec::new();
            let mut seen_colon = false;
            for u in &tokens[ei + 1..handler_end] {
                if !seen_colon {
                    if token_is(u, ":") {
                        seen_colon = true;
                    }
                    continue;
                }
                body_tokens.push(u);
            }
            let body_empty = body_tokens.iter().all(|u| {
                u.kind == TokenKind::Comment
                    || (u.kind == TokenKind::Identifier && u.text == "pass")
                    || token_is(u, ".")
                    || token_is(u, ";")
            });
            shapes.push(CatchShape {
                try_span: t.span.clone(),
                catch_span: tokens[ei].span.clone(),
                catch_body_is_empty: body_empty,
                try_body_tokens: (i + 1, try_body_end),
            });
        }
    }
    shapes
}

fn ruby_catch_shapes(file: &TokenFile) -> Vec<CatchShape> {
    let tokens = &file.tokens;
    let mut shapes = Vec::new();
    // Nesting stack of openers; rescue attaches to the innermost begin/def.
    let mut stack: Vec<(usize, &str)> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        match t.kind {
            TokenKind::TryBlock => stack.push((i, "begin")),
            TokenKind::Identifier => {
                let w = t.text.as_str();
                match w {
                    "def" | "class" | "module" | "case" | "do" => stack.push((i, w)),
                    "if" | "unless" | "while" | "until" => {
                        if t.line_first {
                            stack.push((i, w));
                        }
                    }
                    "end" => {
                        stack.pop();
                    }
                    _ => {}
                }
            }
            TokenKind::CatchBlock => {
                let owner = stack
                    .iter()
                    .rev()
                    .find(|(_, kw)| *kw == "begin" || *kw == "def")
                    .map(|(idx, _)| *idx);
                let try_idx = owner.unwrap_or(i);
                // Handler body: until matching end/else/ensure/rescue at the
                // same stack depth.
                let depth_at_rescue = stack.len();
                let mut j = i + 1;
                // Skip the rest of the rescue line (exception class, => e).
                let rescue_line = t.span.line_start;
                while j < tokens.len() && tokens[j].span.line_start == rescue_line {
                    j += 1;
                }
                let body_start = j;
                let mut local_depth = depth_at_rescue;
                let mut body_end = tokens.len();
                while j < tokens.len() {
                    let u = &tokens[j];
                    match u.kind {
                        TokenKind::TryBlock => local_depth += 1,
                        TokenKind::CatchBlock if local_depth == depth_at_rescue => {
                            body_end = j;
                            break;
                        }
                        TokenKind::Identifier => match u.text.as_str() {
                            "def" | "class" | "module" | "case" | "do" => local_depth += 1,
                            "if" | "unless" | "while" | "until" if u.line_first => {
                                local_depth += 1
                            }
                            "end" => {
                                if local_depth <= depth_at_rescue {
                                    body_end = j;
                                    break;
                                }
                                local_depth -= 1;
                            }
                            "else" | "ensure" if local_depth == depth_at_rescue => {
                                body_end = j;
                                break;
                            }
                            _ => {}
                        },
                        _ => {}
                    }
                    j += 1;
                }
                let body_empty = tokens[body_start..body_end].iter().all(|u| {
                    u.kind == TokenKind::Comment
                        || (u.kind == TokenKind::Identifier && u.text == "nil")
                });
                let try_body_end = i;
                shapes.push(CatchShape {
                    try_span: tokens[try_idx].span.clone(),
                    catch_span: t.span.clone(),
                    catch_body_is_empty: body_empty,
                    try_body_tokens: (try_idx + 1, try_body_end),
                });
            }
            _ => {}
        }
        i += 1;
    }
    shapes
}

/// One top-level-or-nested logical Python statement.
#[derive(Debug, Clone)]
pub struct PyStatement {
    /// 0-based byte column of the first token.
    pub indent: usize,
    /// Token index range (inclusive, exclusive).
    pub tokens: (usize, usize),
    pub span: SourceSpan,
}

/// Split a Python token stream into logical statements: newline-separated
/// at bracket depth zero, with `;` also splitting. Comments are skipped.
pub fn python_statements(file: &TokenFile) -> Vec<PyStatement> {
    let tokens = &file.tokens;
    let mut stmts = Vec::new();
    let mut start: Option<usize> = None;
    let mut depth = 0i32;
    let mut last_line = 0u32;

    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokenKind::Comment {
            continue;
        }
        let opens = token_is(t, "(") || token_is(t, "[") || token_is(t, "{");
        let closes = token_is(t, ")") || token_is(t, "]") || token_is(t, "}");
        if let Some(s) = start {
            let new_line = t.span.line_start > last_line;
            if depth == 0 && new_line {
                stmts.push(make_stmt(file, s, i));
                start = Some(i);
            }
        } else {
            start = Some(i);
        }
        if opens {
            depth += 1;
        }
        if closes {
            depth -= 1;
        }
        last_line = t.span.line_end;
        if depth == 0 && token_is(t, ";") {
            // Semicolons stay inside the statement: compound one-liners are
            // classified as a whole.
        }
    }
    if let Some(s) = start {
        stmts.push(make_stmt(file, s, tokens.len()));
    }
    stmts
}

fn make_stmt(file: &TokenFile, start: usize, end: usize) -> PyStatement {
    let tokens = &file.tokens;
    let first = &tokens[start];
    let mut last_idx = end.saturating_sub(1);
    while last_idx > start && tokens[last_idx].kind == TokenKind::Comment {
        last_idx -= 1;
    }
    let last = &tokens[last_idx];
    PyStatement {
        indent: file.col_of(first.span.byte_start),
        tokens: (start, end),
        span: SourceSpan::new(
            file.path.clone(),
            first.span.line_start,
            last.span.line_end,
            first.span.byte_start,
            last.span.byte_end,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(path: &str, src: &str) -> TokenFile {
        tokenize(path, src.as_bytes(), Language::from_path(path))
    }

    #[test]
    fn extension_table_matches_profiles() {
        assert_eq!(Language::from_path("a/b.js"), Some(Language::JavaScript));
        assert_eq!(Language::from_path("x.mjs"), Some(Language::JavaScript));
        assert_eq!(Language::from_path("x.cjs"), Some(Language::JavaScript));
        assert_eq!(Language::from_path("setup.py"), Some(Language::Python));
        assert_eq!(Language::from_path("a.rb"), Some(Language::Ruby));
        assert_eq!(Language::from_path("pkg.gemspec"), Some(Language::Ruby));
        assert_eq!(Language::from_path("i.php"), Some(Language::Php));
        assert_eq!(Language::from_path("build.rs"), Some(Language::Rust));
        assert_eq!(Language::from_path("m.go"), Some(Language::Go));
        assert_eq!(Language::from_path("A.java"), Some(Language::Java));
        assert_eq!(Language::from_path("README.md"), None);
        assert_eq!(Language::from_path("noext"), None);
    }

    #[test]
    fn python_assignment_line_tokens() {
        let f = tok("t.py", "x = \"abc\" # hi");
        let kinds: Vec<_> = f.tokens.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Identifier,
                TokenKind::Assignment,
                TokenKind::StringLiteral,
                TokenKind::Comment
            ]
        );
        assert_eq!(f.tokens[0].text, "x");
        assert_eq!(f.tokens[2].text, "abc");
        assert_eq!(f.tokens[3].text, "# hi");
    }

    #[test]
    fn monkey_patch_listing_tokens() {
        let src = "import os, builtins\n\noriginal_print = print\ndef hacked_print(self):\n    original_print(self)\n    os.system(\"..COMMANDS..\")\nbuiltins.print = hacked_print\n";
        let f = tok("patch.py", src);
        let imports: Vec<_> = f
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::ImportStmt)
            .collect();
        assert_eq!(imports.len(), 1);
        assert_eq!(imports[0].text, "import os, builtins");
        let assigns: Vec<_> = f
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Assignment)
            .collect();
        assert_eq!(assigns.len(), 2);
        // The last assignment's statement reads builtins.print = hacked_print.
        let last = assigns[1];
        let line = f.line_text(last.span.line_start);
        assert_eq!(line, "builtins.print = hacked_print");
    }

    #[test]
    fn js_template_literal_records_interpolation_subspan() {
        // Hand-derived spans: source `a${b}c` starts at byte 8.
        let src = "let x = `a${b}c`;";
        let f = tok("t.js", src);
        let strings: Vec<_> = f
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::StringLiteral)
            .collect();
        assert_eq!(strings.len(), 1);
        let s = strings[0];
        assert_eq!(s.span.byte_start, 8);
        assert_eq!(s.span.byte_end, 16);
        assert_eq!(s.sub_spans.len(), 1);
        assert_eq!(s.sub_spans[0].byte_start, 10); // ${
        assert_eq!(s.sub_spans[0].byte_end, 14); // past }
        assert_eq!(s.text, "a${b}c");
    }

    #[test]
    fn binary_file_yields_no_tokens_and_a_note() {
        let mut bytes = b"regular text ".to_vec();
        bytes.push(0);
        bytes.extend_from_slice(b" more");
        let f = tokenize("bin.py", &bytes, Some(Language::Python));
        assert!(f.tokens.is_empty());
        assert_eq!(f.notes.len(), 1);
        assert!(f.notes[0].contains("binary"));
    }

    #[test]
    fn tokenization_is_total_on_malformed_input() {
        let f = tok("bad.py", "x = \"unterminated\nnext = 1");
        assert!(f.tokens.iter().any(|t| t.kind == TokenKind::Other));
        assert!(f.notes.iter().any(|n| n.contains("unterminated")));
        // Still tokenizes the following line.
        assert!(f
            .tokens
            .iter()
            .any(|t| t.kind == TokenKind::Identifier && t.text == "next"));
    }

    #[test]
    fn number_array_parses_values() {
        let f = tok("t.py", "payload = [104, 116, 0x74, 112]");
        let arr = f
            .tokens
            .iter()
            .find(|t| t.kind == TokenKind::NumberArray)
            .unwrap();
        assert_eq!(arr.numbers, vec![104, 116, 116, 112]);
        // Subscripts are not arrays.
        let f2 = tok("t.py", "x = data[0]");
        assert!(!f2.tokens.iter().any(|t| t.kind == TokenKind::NumberArray));
    }

    #[test]
    fn go_composite_byte_array_detected() {
        let f = tok("t.go", "var p = []byte{1, 2, 3, 4}");
        let arr = f
            .tokens
            .iter()
            .find(|t| t.kind == TokenKind::NumberArray)
            .unwrap();
        assert_eq!(arr.numbers, vec![1, 2, 3, 4]);
    }

    #[test]
    fn lossless_coverage_gaps_are_whitespace() {
        let sources: Vec<(&str, &str)> = vec![
            ("a.py", "import os\nx = [1,2,3]\ndef f():\n    return \"s\" # c\n"),
            ("b.js", "const x = `t${y}`; /* c */ function f() { return 1; }\n"),
            ("c.rb", "require \"mkmf\"\nexec(\"cmd\")\ns = %w[a b]\n"),
            ("d.php", "<?php $x = \"s\"; // c\neval(base64_decode($p));\n"),
            ("e.rs", "use std::process::Command;\nfn main() { let s = r#\"raw\"#; }\n"),
            ("f.go", "package main\nimport (\n\t\"os/exec\"\n)\nfunc init() {}\n"),
            ("g.java", "import java.util.*;\nclass A { static { int x = 1; } }\n"),
        ];
        for (path, src) in sources {
            let f = tok(path, src);
            let mut covered = vec![false; src.len()];
            for t in &f.tokens {
                for slot in covered
                    .iter_mut()
                    .take(t.span.byte_end)
                    .skip(t.span.byte_start)
                {
                    assert!(!*slot, "{path}: overlapping token at {:?}", t.span);
                    *slot = true;
                }
                // Raw slice matches the span.
                assert!(t.span.byte_end <= src.len());
            }
            for (i, c) in src.char_indices() {
                if !covered[i] {
                    assert!(
                        c.is_whitespace(),
                        "{path}: uncovered non-whitespace byte {i} ({c:?})"
                    );
                }
            }
            // Ordered and non-overlapping by construction.
            for w in f.tokens.windows(2) {
                assert!(w[0].span.byte_end <= w[1].span.byte_start);
            }
        }
    }

    #[test]
    fn tokenize_is_deterministic() {
        let src = "import os\nx = \"abc\"\n";
        let a = tok("t.py", src);
        let b = tok("t.py", src);
        assert_eq!(a.tokens, b.tokens);
    }

    #[test]
    fn python_empty_catch_shape() {
        let f = tok("t.py", "try:\n    f()\nexcept:\n    pass\n");
        let (shapes, _) = catch_shapes(&f);
        assert_eq!(shapes.len(), 1);
        assert!(shapes[0].catch_body_is_empty);
    }

    #[test]
    fn python_nonempty_catch_shape() {
        let f = tok("t.py", "try:\n    f()\nexcept ValueError as e:\n    log(e)\n");
        let (shapes, _) = catch_shapes(&f);
        assert_eq!(shapes.len(), 1);
        assert!(!shapes[0].catch_body_is_empty);
    }

    #[test]
    fn java_catch_with_statement_is_not_empty() {
        let src = "class A { void f() { try { g(); } catch (Exception e) { log(e); } } }";
        let f = tok("A.java", src);
        let (shapes, _) = catch_shapes(&f);
        assert_eq!(shapes.len(), 1);
        assert!(!shapes[0].catch_body_is_empty);
    }

    #[test]
    fn java_empty_catch_detected() {
        let src = "class A { void f() { try { g(); } catch (Exception e) { } } }";
        let f = tok("A.java", src);
        let (shapes, _) = catch_shapes(&f);
        assert_eq!(shapes.len(), 1);
        assert!(shapes[0].catch_body_is_empty);
    }

    #[test]
    fn rust_has_no_catch_and_notes_it() {
        let f = tok("t.rs", "fn main() {}");
        let (shapes, notes) = catch_shapes(&f);
        assert!(shapes.is_empty());
        assert_eq!(notes.len(), 1);
    }

    #[test]
    fn php_empty_catch_detected() {
        let src = "<?php\ntry {\n    exec($cmd);\n} catch (Exception $e) {\n}\n";
        let f = tok("t.php", src);
        let (shapes, _) = catch_shapes(&f);
        assert_eq!(shapes.len(), 1);
        assert!(shapes[0].catch_body_is_empty);
    }

    #[test]
    fn python_fstring_interpolation_subspans() {
        let f = tok("t.py", "x = f\"v={value}!\"\n");
        let s = f
            .tokens
            .iter()
            .find(|t| t.kind == TokenKind::StringLiteral)
            .unwrap();
        assert_eq!(s.sub_spans.len(), 1);
        assert_eq!(f.slice(&s.sub_spans[0]), "{value}");
    }

    #[test]
    fn ruby_empty_rescue() {
        let f = tok("t.rb", "begin\n  system(\"x\")\nrescue\nend\n");
        let (shapes, _) = catch_shapes(&f);
        assert_eq!(shapes.len(), 1);
        assert!(shapes[0].catch_body_is_empty);
        let f2 = tok("t.rb", "begin\n  system(\"x\")\nrescue => e\n  puts e\nend\n");
        let (shapes2, _) = catch_shapes(&f2);
        assert_eq!(shapes2.len(), 1);
        assert!(!shapes2[0].catch_body_is_empty);
    }

    #[test]
    fn call_sites_extract_dotted_chains() {
        let f = tok("t.py", "os.system(\"x\")\nvalue = os.environ\n");
        let sites = call_sites(&f);
        let sys = sites.iter().find(|s| s.chain == "os.system").unwrap();
        assert!(sys.is_call);
        let env = sites.iter().find(|s| s.chain == "os.environ").unwrap();
        assert!(!env.is_call);
    }

    #[test]
    fn rust_path_chain_normalized() {
        let f = tok("t.rs", "let output = Command::new(\"sh\");");
        let sites = call_sites(&f);
        assert!(sites.iter().any(|s| s.chain == "Command.new" && s.is_call));
    }

    #[test]
    fn go_import_block_is_one_token() {
        let f = tok("t.go", "package m\n\nimport (\n\t\"fmt\"\n\t_ \"net/http\"\n)\n\nfunc main() {}\n");
        let imports: Vec<_> = f
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::ImportStmt)
            .collect();
        assert_eq!(imports.len(), 1);
        assert!(imports[0].text.contains("net/http"));
    }

    #[test]
    fn python_statements_split_on_lines_and_track_indent() {
        let src = "import os\nx = 1\ndef f():\n    y = 2\n    return y\nsetup(\n    name='x',\n)\n";
        let f = tok("t.py", src);
        let stmts = python_statements(&f);
        let top: Vec<_> = stmts.iter().filter(|s| s.indent == 0).collect();
        // import, x=1, def, y.. are nested, setup(...) is one statement.
        assert_eq!(top.len(), 4);
        let setup_stmt = top.last().unwrap();
        assert_eq!(setup_stmt.span.line_start, 6);
        assert_eq!(setup_stmt.span.line_end, 8);
    }

    #[test]
    fn unicode_identifiers_are_tokenized() {
        let f = tok("t.py", "p\u{0430}nel = 1\n"); // Cyrillic a
        let ident = f
            .tokens
            .iter()
            .find(|t| t.kind == TokenKind::Identifier)
            .unwrap();
        assert_eq!(ident.text, "p\u{0430}nel");
    }

    #[test]
    fn php_heredoc_basic_support() {
        let src = "<?php\n$x = <<<EOT\npayload line\nEOT;\n";
        let f = tok("t.php", src);
        let s = f
            .tokens
            .iter()
            .find(|t| t.kind == TokenKind::StringLiteral)
            .unwrap();
        assert_eq!(s.text, "payload line");
    }

    proptest::proptest! {
        /// Lossless coverage: spans are ordered, non-overlapping, and every
        /// byte outside a token is whitespace — for arbitrary input.
        #[test]
        fn lossless_coverage_holds_for_arbitrary_input(
            src in "[ -~\n\t]{0,300}",
            lang_pick in 0usize..7,
        ) {
            let lang = [
                Language::JavaScript,
                Language::Python,
                Language::Ruby,
                Language::Php,
                Language::Rust,
                Language::Go,
                Language::Java,
            ][lang_pick];
            let f = tokenize("fuzz.src", src.as_bytes(), Some(lang));
            let mut covered = vec![false; src.len()];
            for t in &f.tokens {
                proptest::prop_assert!(t.span.byte_end <= src.len());
                for slot in covered
                    .iter_mut()
                    .take(t.span.byte_end)
                    .skip(t.span.byte_start)
                {
                    proptest::prop_assert!(!*slot, "overlap at {:?}", t.span);
                    *slot = true;
                }
            }
            for w in f.tokens.windows(2) {
                proptest::prop_assert!(w[0].span.byte_end <= w[1].span.byte_start);
            }
            for (i, c) in src.char_indices() {
                if !covered[i] {
                    proptest::prop_assert!(
                        c.is_whitespace(),
                        "uncovered non-whitespace byte {i} ({c:?})"
                    );
                }
            }
        }
    }

    #[test]
    fn import_after_dot_is_plain_identifier() {
        let f = tok("t.py", "x = importlib.import_module('y')\n");
        // `import_module` must not become an ImportStmt.
        assert!(!f.tokens.iter().any(|t| t.kind == TokenKind::ImportStmt));
    }
}
