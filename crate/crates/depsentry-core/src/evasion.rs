//! Detectors for evasion indicators: data obfuscation (encoded, compressed,
//! encrypted, binary-array, and split strings), static transformations
//! (identifier obfuscation, visual and Unicode deception, polyglot sources,
//! fragmented files, stagers), dynamic transformations (packed code,
//! steganography chains, monkey patching), and warning suppression.
//!
//! All detectors are pure, read nothing outside the snapshot, and emit
//! graded indicators rather than proofs.

use crate::ace::{dangerous_refs, TokenIndex};
use crate::config::{ApiClass, DangerousApiCatalog, Thresholds};
use crate::ingest::PackageSnapshot;
use crate::lexscan::{catch_shapes, Language, Token, TokenFile, TokenKind};
use crate::model::{
    clip_evidence, Confidence, Ecosystem, Finding, FindingLocation, Severity, SourceSpan,
    TechniqueId,
};
use base64::Engine;

/// Shannon entropy in bits per byte over byte frequencies. 0 for empty or
/// single-symbol input, exactly 8 for a 256-byte string holding each value
/// once.
pub fn shannon_entropy(data: &[u8]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut freq = [0usize; 256];
    for &b in data {
        freq[b as usize] += 1;
    }
    let n = data.len() as f64;
    let mut entropy = 0.0;
    for &count in freq.iter() {
        if count > 0 {
            let p = count as f64 / n;
            entropy -= p * p.log2();
        }
    }
    entropy
}

fn printable_ratio(bytes: &[u8]) -> f64 {
    if bytes.is_empty() {
        return 0.0;
    }
    let printable = bytes
        .iter()
        .filter(|&&b| b.is_ascii_graphic() || matches!(b, b' ' | b'\t' | b'\n' | b'\r'))
        .count();
    printable as f64 / bytes.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CharsetClass {
    Base64Like,
    HexLike,
    Printable,
    Mixed,
    BinaryIsh,
}

/// Classification of one string literal.
#[derive(Debug, Clone)]
pub struct StringClassification {
    pub literal: String,
    pub entropy_bits_per_byte: f64,
    pub charset_class: CharsetClass,
    pub decoded_preview: Option<String>,
    /// Raw decode output; printability/entropy checks run on these bytes.
    pub decoded_bytes: Option<Vec<u8>>,
}

/// Classify a string literal value: charset class, entropy, and a decoded
/// preview when it strictly decodes as base64 or hex. Hex wins over base64
/// for all-hex-digit strings (hex is a subset of the base64 charset).
pub fn classify_string(value: &str, thresholds: &Thresholds) -> StringClassification {
    let bytes = value.as_bytes();
    let entropy = shannon_entropy(bytes);
    let compact: String = value.chars().filter(|c| !c.is_whitespace()).collect();

    let hex_like = compact.len() >= thresholds.encoded_min_len
        && compact.len().is_multiple_of(2)
        && compact.bytes().all(|b| b.is_ascii_hexdigit());
    if hex_like {
        if let Ok(decoded) = hex::decode(&compact) {
            return StringClassification {
                literal: value.to_string(),
                entropy_bits_per_byte: entropy,
                charset_class: CharsetClass::HexLike,
                decoded_preview: Some(String::from_utf8_lossy(&decoded).into_owned()),
                decoded_bytes: Some(decoded),
            };
        }
    }
    let base64_like = compact.len() >= thresholds.encoded_min_len
        && compact
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'+' || b == b'/' || b == b'=');
    if base64_like {
        if let Ok(decoded) = base64::engine::general_purpose::STANDARD.decode(&compact) {
            return StringClassification {
                literal: value.to_string(),
                entropy_bits_per_byte: entropy,
                charset_class: CharsetClass::Base64Like,
                decoded_preview: Some(String::from_utf8_lossy(&decoded).into_owned()),
                decoded_bytes: Some(decoded),
            };
        }
    }
    let ratio = printable_ratio(bytes);
    let charset_class = if ratio >= 0.99 {
        CharsetClass::Printable
    } else if ratio >= 0.5 {
        CharsetClass::Mixed
    } else {
        CharsetClass::BinaryIsh
    };
    StringClassification {
        literal: value.to_string(),
        entropy_bits_per_byte: entropy,
        charset_class,
        decoded_preview: None,
        decoded_bytes: None,
    }
}

/// EV-DO-ENC for readable base64/hex payloads; EV-DO-CRY (opaque string)
/// for high-entropy blobs, including encoded blobs whose decode is not
/// readable.
pub fn classify_strings(file: &TokenFile, thresholds: &Thresholds) -> Vec<Finding> {
    let mut findings = Vec::new();
    for token in &file.tokens {
        if token.kind != TokenKind::StringLiteral {
            continue;
        }
        let value = &token.text;
        let classification = classify_string(value, thresholds);
        match classification.charset_class {
            CharsetClass::Base64Like | CharsetClass::HexLike => {
                let decoded = classification.decoded_bytes.as_deref().unwrap_or(&[]);
                if printable_ratio(decoded) >= thresholds.printable_ratio {
                    let preview = classification.decoded_preview.as_deref().unwrap_or("");
                    findings.push(
                        Finding::new(
                            TechniqueId::EvDoEnc,
                            FindingLocation::Span(token.span.clone()),
                            value,
                        )
                        .with_context(format!("decodes to {:?}", clip_evidence(preview))),
                    );
                } else if shannon_entropy(decoded) >= thresholds.opaque_entropy_min {
                    findings.push(
                        Finding::new(
                            TechniqueId::EvDoCry,
                            FindingLocation::Span(token.span.clone()),
                            value,
                        )
                        .with_context("encoded blob with high-entropy (opaque) payload"),
                    );
                }
            }
            _ => {
                if value.len() >= thresholds.opaque_min_len
                    && classification.entropy_bits_per_byte >= thresholds.opaque_entropy_min
                {
                    findings.push(
                        Finding::new(
                            TechniqueId::EvDoCry,
                            FindingLocation::Span(token.span.clone()),
                            value,
                        )
                        .with_context(format!(
                            "opaque string, entropy {:.2} bits/byte",
                            classification.entropy_bits_per_byte
                        )),
                    );
                }
            }
        }
    }
    findings
}

/// Paren-balanced token range of a call's argument list.
fn call_arg_range(file: &TokenFile, call_last_token: usize) -> Option<(usize, usize)> {
    let tokens = &file.tokens;
    let open = call_last_token + 1;
    if !tokens
        .get(open)
        .is_some_and(|t| t.kind == TokenKind::Other && t.text == "(")
    {
        return None;
    }
    let mut depth = 0i32;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.kind == TokenKind::Other {
            match t.text.as_str() {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some((open + 1, i));
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// EV-DY-PACK: decode/decompress/decrypt output flowing into eval within
/// the proximity window; EV-DO-CMP: decompression of embedded opaque data
/// without a nearby eval.
pub fn detect_pack_and_exec(
    file: &TokenFile,
    catalog: &DangerousApiCatalog,
    thresholds: &Thresholds,
) -> Vec<Finding> {
    let Some(apis) = file.language.and_then(|l| catalog.for_language(l.name())) else {
        return Vec::new();
    };
    let refs = dangerous_refs(file, apis);
    let decodes: Vec<_> = refs.iter().filter(|r| r.class == ApiClass::Decode).collect();
    let evals: Vec<_> = refs.iter().filter(|r| r.class == ApiClass::CodeEval).collect();
    let mut findings = Vec::new();

    for eval in &evals {
        let eval_line = eval.site.span.line_start;
        let Some(nearest) = decodes
            .iter()
            .filter(|d| d.site.span.line_start.abs_diff(eval_line) <= thresholds.proximity_lines)
            .min_by_key(|d| d.site.span.line_start.abs_diff(eval_line))
        else {
            continue;
        };
        // Strong when the decode call is nested in the eval argument list.
        let nested = call_arg_range(file, eval.site.last_token)
            .is_some_and(|(start, end)| {
                nearest.site.first_token >= start && nearest.site.last_token < end
            });
        let evidence = file.line_text(eval_line).trim().to_string();
        let mut finding = Finding::new(
            TechniqueId::EvDyPack,
            FindingLocation::Span(eval.site.span.clone()),
            &evidence,
        )
        .with_context(format!(
            "decode `{}` feeds eval `{}`",
            nearest.site.chain, eval.site.chain
        ));
        if nested {
            finding = finding.with_confidence(Confidence::Strong);
        }
        findings.push(finding);
    }

    // Decompression of embedded high-entropy data with no eval nearby.
    let decompress_words = ["gzip", "inflate", "zlib", "decompress", "unzip", "gunzip", "brotli"];
    for d in &decodes {
        let lowered = d.site.chain.to_ascii_lowercase();
        if !decompress_words.iter().any(|w| lowered.contains(w)) {
            continue;
        }
        let line = d.site.span.line_start;
        let eval_near = evals
            .iter()
            .any(|e| e.site.span.line_start.abs_diff(line) <= thresholds.proximity_lines);
        if eval_near {
            continue; // covered by EV-DY-PACK
        }
        let opaque_near = file.tokens.iter().any(|t| {
            t.kind == TokenKind::StringLiteral
                && t.span.line_start.abs_diff(line) <= thresholds.proximity_lines
                && t.text.len() >= thresholds.opaque_min_len
                && shannon_entropy(t.text.as_bytes()) >= 4.0
        });
        if opaque_near {
            let evidence = file.line_text(line).trim().to_string();
            findings.push(
                Finding::new(
                    TechniqueId::EvDoCmp,
                    FindingLocation::Span(d.site.span.clone()),
                    &evidence,
                )
                .with_context("decompression of embedded opaque data"),
            );
        }
    }
    findings
}

/// A reassembled string: the fragments, their covering span, and the join.
#[derive(Debug, Clone)]
pub struct AssembledString {
    pub joined: String,
    pub pieces: usize,
    pub span: SourceSpan,
    pub max_piece_len: usize,
}

/// Collect string-fragment assemblies: same-expression concatenation chains
/// and accumulation into one identifier across nearby lines.
pub fn assembled_strings(file: &TokenFile, thresholds: &Thresholds) -> Vec<AssembledString> {
    let tokens = &file.tokens;
    let mut assemblies = Vec::new();
    let concat_op = |t: &Token| {
        t.kind == TokenKind::Other
            && (t.text == "+" || (file.language == Some(Language::Php) && t.text == "."))
    };

    // Same-expression chains: "a" + "b" + ... (or adjacent literals in
    // Python).
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind != TokenKind::StringLiteral {
            i += 1;
            continue;
        }
        let start = i;
        let mut pieces = vec![tokens[i].text.clone()];
        let mut last = i;
        let mut j = i + 1;
        loop {
            // Optional operator then a string literal, or direct adjacency.
            let next = if j < tokens.len() && concat_op(&tokens[j]) {
                j + 1
            } else {
                j
            };
            if next < tokens.len()
                && tokens[next].kind == TokenKind::StringLiteral
                && tokens[next].span.line_start.abs_diff(tokens[last].span.line_end) <= 1
            {
                pieces.push(tokens[next].text.clone());
                last = next;
                j = next + 1;
            } else {
                break;
            }
        }
        if pieces.len() >= 2 {
            assemblies.push(AssembledString {
                joined: pieces.concat(),
                pieces: pieces.len(),
                max_piece_len: pieces.iter().map(|p| p.chars().count()).max().unwrap_or(0),
                span: SourceSpan::new(
                    file.path.clone(),
                    tokens[start].span.line_start,
                    tokens[last].span.line_end,
                    tokens[start].span.byte_start,
                    tokens[last].span.byte_end,
                ),
            });
        }
        i = last + 1;
    }

    // Accumulation into one identifier: x = "a"; x += "b"; x = x + "c".
    // Single-statement chains are already covered above, so only
    // multi-statement accumulations are emitted here.
    struct Accum {
        pieces: Vec<String>,
        first: SourceSpan,
        last_line: u32,
        last_byte: usize,
        max_piece: usize,
        statements: usize,
    }
    let mut accums: std::collections::BTreeMap<String, Accum> = Default::default();
    for (idx, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Assignment {
            continue;
        }
        // LHS: a single identifier, possibly through a compound operator
        // (`x += "s"` tokenizes as Identifier, Other(+), Assignment).
        let mut lhs_idx = match idx.checked_sub(1) {
            Some(k) => k,
            None => continue,
        };
        let mut compound = false;
        if tokens[lhs_idx].kind == TokenKind::Other
            && matches!(tokens[lhs_idx].text.as_str(), "+" | "." | "%")
        {
            compound = true;
            let Some(k) = lhs_idx.checked_sub(1) else { continue };
            lhs_idx = k;
        }
        let lhs = &tokens[lhs_idx];
        if lhs.kind != TokenKind::Identifier {
            continue;
        }
        if lhs_idx >= 1
            && tokens[lhs_idx - 1].kind == TokenKind::Other
            && (tokens[lhs_idx - 1].text == "." || tokens[lhs_idx - 1].text == "::")
        {
            continue; // attribute assignment, not a local accumulator
        }
        let line = t.span.line_start;
        let mut rhs_strings = Vec::new();
        let mut last_byte = t.span.byte_end;
        for u in &tokens[idx + 1..] {
            if u.span.line_start != line {
                break;
            }
            if u.kind == TokenKind::StringLiteral {
                rhs_strings.push(u.text.clone());
                last_byte = u.span.byte_end;
            }
        }
        if rhs_strings.is_empty() {
            accums.remove(&lhs.text);
            continue;
        }
        let self_ref = tokens[idx + 1..]
            .iter()
            .take_while(|u| u.span.line_start == line)
            .any(|u| u.kind == TokenKind::Identifier && u.text == lhs.text);
        match accums.get_mut(&lhs.text) {
            Some(acc)
                if (compound || self_ref)
                    && line.saturating_sub(acc.last_line) <= thresholds.concat_window_lines =>
            {
                for piece in &rhs_strings {
                    acc.max_piece = acc.max_piece.max(piece.chars().count());
                }
                acc.pieces.extend(rhs_strings);
                acc.last_line = line;
                acc.last_byte = last_byte;
                acc.statements += 1;
            }
            _ => {
                let max_piece = rhs_strings.iter().map(|p| p.chars().count()).max().unwrap();
                accums.insert(
                    lhs.text.clone(),
                    Accum {
                        pieces: rhs_strings,
                        first: t.span.clone(),
                        last_line: line,
                        last_byte,
                        max_piece,
                        statements: 1,
                    },
                );
            }
        }
    }
    for (_, acc) in accums {
        if acc.pieces.len() >= 2 && acc.statements >= 2 {
            assemblies.push(AssembledString {
                joined: acc.pieces.concat(),
                pieces: acc.pieces.len(),
                max_piece_len: acc.max_piece,
                span: SourceSpan::new(
                    file.path.clone(),
                    acc.first.line_start,
                    file.line_of(acc.last_byte.saturating_sub(1).max(acc.first.byte_start)),
                    acc.first.byte_start,
                    acc.last_byte,
                ),
            });
        }
    }
    assemblies
}

/// EV-DO-SPLIT: four or more short fragments reassembling a sensitive value
/// (URL, shell word, credential path).
pub fn detect_concat_assembly(
    file: &TokenFile,
    catalog: &DangerousApiCatalog,
    thresholds: &Thresholds,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    for assembly in assembled_strings(file, thresholds) {
        if assembly.pieces < thresholds.concat_min_pieces
            || assembly.max_piece_len > thresholds.concat_max_piece_len
        {
            continue;
        }
        if !catalog.is_sensitive_value(&assembly.joined) {
            continue;
        }
        let evidence = clip_evidence(file.slice(&assembly.span));
        findings.push(
            Finding::new(
                TechniqueId::EvDoSplit,
                FindingLocation::Span(assembly.span.clone()),
                &evidence,
            )
            .with_context(format!(
                "{} fragments assemble {:?}",
                assembly.pieces,
                clip_evidence(&assembly.joined)
            )),
        );
    }
    findings
}

/// EV-DO-BIN: numeric arrays decoding to readable bytes, or to a
/// catalog-sensitive word under a single-byte XOR.
pub fn detect_binary_array_payload(
    file: &TokenFile,
    catalog: &DangerousApiCatalog,
    thresholds: &Thresholds,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    for token in &file.tokens {
        if token.kind != TokenKind::NumberArray
            || token.numbers.len() < thresholds.binary_array_min_len
        {
            continue;
        }
        if !token.numbers.iter().all(|&n| (0..=255).contains(&n)) {
            continue;
        }
        let bytes: Vec<u8> = token.numbers.iter().map(|&n| n as u8).collect();
        let evidence = clip_evidence(&token.text);
        // Single-byte XOR sweep first so a masked sensitive word is
        // reported as such even when the masked bytes happen to be
        // printable.
        let mut xor_hit = None;
        for key in 1u8..=255 {
            let decoded: Vec<u8> = bytes.iter().map(|b| b ^ key).collect();
            if printable_ratio(&decoded) < thresholds.printable_ratio {
                continue;
            }
            let text = String::from_utf8_lossy(&decoded).to_ascii_lowercase();
            if catalog.is_sensitive_value(&text) {
                xor_hit = Some((key, decoded));
                break;
            }
        }
        if let Some((key, decoded)) = xor_hit {
            findings.push(
                Finding::new(
                    TechniqueId::EvDoBin,
                    FindingLocation::Span(token.span.clone()),
                    &evidence,
                )
                .with_confidence(Confidence::Weak)
                .with_context(format!(
                    "XOR key 0x{key:02x} decodes to {:?}",
                    clip_evidence(&String::from_utf8_lossy(&decoded))
                )),
            );
            continue;
        }
        if printable_ratio(&bytes) >= thresholds.printable_ratio {
            let preview = String::from_utf8_lossy(&bytes).into_owned();
            findings.push(
                Finding::new(
                    TechniqueId::EvDoBin,
                    FindingLocation::Span(token.span.clone()),
                    &evidence,
                )
                .with_context(format!("decodes to {:?}", clip_evidence(&preview))),
            );
        }
    }
    findings
}

const CONFUSION_ALPHABET: [char; 6] = ['l', '1', 'I', '_', 'O', '0'];

fn confusion_run(name: &str) -> usize {
    let mut best = 0;
    let mut current = 0;
    for c in name.chars() {
        if CONFUSION_ALPHABET.contains(&c) {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    best
}

/// EV-ST-ID: files dominated by low-diversity or confusion-alphabet
/// identifier names.
pub fn detect_identifier_obfuscation(file: &TokenFile, thresholds: &Thresholds) -> Vec<Finding> {
    let Some(lang) = file.language else {
        return Vec::new();
    };
    // Names introduced by imports don't count against the file.
    let mut imported: Vec<String> = Vec::new();
    for t in &file.tokens {
        if t.kind == TokenKind::ImportStmt {
            for word in t
                .text
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .filter(|w| !w.is_empty())
            {
                imported.push(word.to_string());
            }
        }
    }

    let mut distinct: Vec<&str> = Vec::new();
    let mut first_span: Option<SourceSpan> = None;
    for t in &file.tokens {
        if t.kind != TokenKind::Identifier {
            continue;
        }
        let name = t.text.as_str();
        if name.chars().count() < thresholds.ident_min_len
            || lang.is_keyword(name)
            || imported.iter().any(|i| i == name)
            || distinct.contains(&name)
        {
            continue;
        }
        distinct.push(name);
        if first_span.is_none() && is_confusable_name(name, thresholds) {
            first_span = Some(t.span.clone());
        }
    }
    if distinct.len() < thresholds.ident_min_count {
        return Vec::new();
    }
    let confusable = distinct
        .iter()
        .filter(|n| is_confusable_name(n, thresholds))
        .count();
    let score = confusable as f64 / distinct.len() as f64;
    if score < thresholds.ident_score_min {
        return Vec::new();
    }
    let span = first_span.unwrap_or_else(|| SourceSpan::new(file.path.clone(), 1, 1, 0, 0));
    let evidence = file.line_text(span.line_start).trim().to_string();
    vec![Finding::new(
        TechniqueId::EvStId,
        FindingLocation::Span(span),
        &evidence,
    )
    .with_context(format!(
        "{confusable}/{} identifiers look obfuscated (score {score:.2})",
        distinct.len()
    ))]
}

fn is_confusable_name(name: &str, thresholds: &Thresholds) -> bool {
    let mut chars: Vec<char> = name.chars().collect();
    chars.sort_unstable();
    chars.dedup();
    if chars.len() <= thresholds.ident_max_diversity {
        return true;
    }
    if name.chars().all(|c| CONFUSION_ALPHABET.contains(&c)) {
        return true;
    }
    confusion_run(name) >= thresholds.ident_confusion_run_min
}

/// EV-ST-VIS: interior whitespace runs hiding code, or code pushed past the
/// visible column range.
pub fn detect_visual_deception(file: &TokenFile, thresholds: &Thresholds) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (idx, _) in file.line_starts.iter().enumerate() {
        let line_no = idx as u32 + 1;
        let line = file.line_text(line_no);
        if line.is_empty() {
            continue;
        }
        let mut run = 0usize;
        let mut flagged = false;
        for (col, c) in line.chars().enumerate() {
            if c == ' ' || c == '\t' {
                run += 1;
            } else {
                if run >= thresholds.ws_run_min {
                    flagged = true;
                    break;
                }
                if col >= thresholds.code_col_max {
                    flagged = true;
                    break;
                }
                run = 0;
            }
        }
        if flagged {
            let start = file.line_starts[idx];
            let span = SourceSpan::new(
                file.path.clone(),
                line_no,
                line_no,
                start,
                start + line.len(),
            );
            let evidence = clip_evidence(line.trim_start());
            findings.push(
                Finding::new(TechniqueId::EvStVis, FindingLocation::Span(span), &evidence)
                    .with_context("whitespace run hides trailing code"),
            );
        }
    }
    findings
}

fn is_bidi_control(c: char) -> bool {
    matches!(c, '\u{202A}'..='\u{202E}' | '\u{2066}'..='\u{2069}')
}

fn is_zero_width(c: char) -> bool {
    matches!(c, '\u{200B}'..='\u{200D}')
}

/// Map common Cyrillic/Greek lookalikes to their Latin counterpart.
fn confusable_to_latin(c: char) -> Option<char> {
    let mapped = match c {
        '\u{0430}' => 'a', // а
        '\u{0435}' => 'e', // е
        '\u{043E}' => 'o', // о
        '\u{0440}' => 'p', // р
        '\u{0441}' => 'c', // с
        '\u{0443}' => 'y', // у
        '\u{0445}' => 'x', // х
        '\u{0456}' => 'i', // і
        '\u{0455}' => 's', // ѕ
        '\u{0458}' => 'j', // ј
        '\u{0410}' => 'A',
        '\u{0412}' => 'B',
        '\u{0415}' => 'E',
        '\u{041A}' => 'K',
        '\u{041C}' => 'M',
        '\u{041D}' => 'H',
        '\u{041E}' => 'O',
        '\u{0420}' => 'P',
        '\u{0421}' => 'C',
        '\u{0422}' => 'T',
        '\u{0425}' => 'X',
        '\u{03B1}' => 'a', // α
        '\u{03BF}' => 'o', // ο
        '\u{03BD}' => 'v', // ν
        '\u{03C1}' => 'p', // ρ
        '\u{0391}' => 'A',
        '\u{0392}' => 'B',
        '\u{0395}' => 'E',
        '\u{039F}' => 'O',
        '\u{03A1}' => 'P',
        '\u{03A4}' => 'T',
        _ => return None,
    };
    Some(mapped)
}

/// EV-ST-UNI: bidirectional-control and zero-width characters (critical);
/// mixed-script identifiers with confusable codepoints (moderate).
pub fn detect_unicode_tricks(file: &TokenFile) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (offset, c) in file.source.char_indices() {
        let critical = is_bidi_control(c)
            || is_zero_width(c)
            || (c == '\u{FEFF}' && offset > 0); // BOM only allowed at start
        if critical {
            let line_no = file.line_of(offset);
            let line = file.line_text(line_no);
            let span = SourceSpan::new(
                file.path.clone(),
                line_no,
                line_no,
                offset,
                offset + c.len_utf8(),
            );
            findings.push(
                Finding::new(
                    TechniqueId::EvStUni,
                    FindingLocation::Span(span),
                    line.trim(),
                )
                .with_severity(Severity::Critical)
                .with_confidence(Confidence::Strong)
                .with_context(format!("invisible/direction control U+{:04X}", c as u32)),
            );
        }
    }
    for t in &file.tokens {
        if t.kind != TokenKind::Identifier {
            continue;
        }
        let has_latin = t.text.chars().any(|c| c.is_ascii_alphabetic());
        let confusable: Vec<char> =
            t.text.chars().filter(|c| confusable_to_latin(*c).is_some()).collect();
        if has_latin && !confusable.is_empty() {
            findings.push(
                Finding::new(
                    TechniqueId::EvStUni,
                    FindingLocation::Span(t.span.clone()),
                    &t.text,
                )
                .with_confidence(Confidence::Moderate)
                .with_context(format!(
                    "identifier mixes scripts; U+{:04X} is confusable with `{}`",
                    confusable[0] as u32,
                    confusable_to_latin(confusable[0]).unwrap()
                )),
            );
        }
    }
    findings
}

/// EV-DY-MOD: assignments replacing built-in or foreign-module symbols,
/// prototype/global reassignment, and open-class redefinition of core
/// classes.
pub fn detect_dynamic_modification(
    file: &TokenFile,
    catalog: &DangerousApiCatalog,
) -> Vec<Finding> {
    let Some(lang) = file.language else {
        return Vec::new();
    };
    let tokens = &file.tokens;
    let mut findings = Vec::new();

    match lang {
        Language::Python | Language::JavaScript => {
            for (idx, t) in tokens.iter().enumerate() {
                if t.kind != TokenKind::Assignment {
                    continue;
                }
                // LHS dotted chain ending just before the operator.
                let mut segments: Vec<String> = Vec::new();
                let mut k = idx;
                while let Some(prev) = k.checked_sub(1) {
                    if tokens[prev].kind != TokenKind::Identifier {
                        break;
                    }
                    segments.push(tokens[prev].text.clone());
                    match prev.checked_sub(1) {
                        Some(sep)
                            if tokens[sep].kind == TokenKind::Other
                                && (tokens[sep].text == "." || tokens[sep].text == "::") =>
                        {
                            k = sep;
                        }
                        _ => break,
                    }
                }
                segments.reverse();
                if segments.len() < 2 {
                    continue; // assignment to a local name
                }
                let chain = segments.join(".");
                let hit = match lang {
                    Language::Python => {
                        let targets_builtins = segments[0] == "builtins"
                            || segments[0] == "__builtins__"
                            || catalog
                                .python_builtins
                                .iter()
                                .any(|b| b == segments.last().unwrap());
                        targets_builtins.then_some(Confidence::Strong)
                    }
                    Language::JavaScript => {
                        if segments.iter().any(|s| s == "prototype") {
                            Some(Confidence::Moderate)
                        } else if catalog.js_globals.iter().any(|g| g == &chain) {
                            Some(Confidence::Strong)
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                if let Some(confidence) = hit {
                    let line = t.span.line_start;
                    let evidence = file.line_text(line).trim().to_string();
                    findings.push(
                        Finding::new(
                            TechniqueId::EvDyMod,
                            FindingLocation::Span(t.span.clone()),
                            &evidence,
                        )
                        .with_confidence(confidence)
                        .with_context(format!("overwrites `{chain}`")),
                    );
                }
            }
        }
        Language::Ruby => {
            // Open-class redefinition of a core class containing a def.
            let frames = crate::ace::build_frames(file);
            for frame in &frames {
                if frame.kind != crate::ace::FrameKind::Class {
                    continue;
                }
                if !catalog.ruby_core_classes.iter().any(|c| c == &frame.name) {
                    continue;
                }
                let has_def = tokens[frame.tokens.0..frame.tokens.1]
                    .iter()
                    .any(|t| t.kind == TokenKind::Identifier && t.text == "def");
                if !has_def {
                    continue;
                }
                let header = &tokens[frame.tokens.0 - 1];
                let line = header.span.line_start;
                let evidence = file.line_text(line).trim().to_string();
                findings.push(
                    Finding::new(
                        TechniqueId::EvDyMod,
                        FindingLocation::Span(header.span.clone()),
                        &evidence,
                    )
                    .with_context(format!("reopens core class `{}`", frame.name)),
                );
            }
        }
        _ => {}
    }
    findings
}

/// EV-ST-STAGE2: a URL (literal or assembled) near a network fetch whose
/// result is written to an executable path or evaluated.
pub fn detect_second_stage(
    file: &TokenFile,
    catalog: &DangerousApiCatalog,
    thresholds: &Thresholds,
) -> Vec<Finding> {
    let Some(apis) = file.language.and_then(|l| catalog.for_language(l.name())) else {
        return Vec::new();
    };
    let refs = dangerous_refs(file, apis);
    let fetches: Vec<_> = refs.iter().filter(|r| r.class == ApiClass::Network).collect();
    if fetches.is_empty() {
        return Vec::new();
    }

    // URL sources: literals and assembled strings.
    let mut url_lines: Vec<u32> = file
        .tokens
        .iter()
        .filter(|t| {
            t.kind == TokenKind::StringLiteral
                && catalog
                    .url_prefixes
                    .iter()
                    .any(|p| t.text.to_ascii_lowercase().starts_with(p))
        })
        .map(|t| t.span.line_start)
        .collect();
    for assembly in assembled_strings(file, thresholds) {
        let lowered = assembly.joined.to_ascii_lowercase();
        if catalog.url_prefixes.iter().any(|p| lowered.starts_with(p)) {
            url_lines.push(assembly.span.line_start);
        }
    }
    if url_lines.is_empty() {
        return Vec::new();
    }

    let evals: Vec<u32> = refs
        .iter()
        .filter(|r| r.class == ApiClass::CodeEval)
        .map(|r| r.site.span.line_start)
        .collect();
    let spawns: Vec<u32> = refs
        .iter()
        .filter(|r| r.class == ApiClass::ProcessSpawn)
        .map(|r| r.site.span.line_start)
        .collect();
    // File writes targeting executable-suffix paths.
    let exec_writes: Vec<u32> = refs
        .iter()
        .filter(|r| r.class == ApiClass::FilesystemSensitive)
        .filter(|r| {
            let has_exec_string = |range: Option<(usize, usize)>| {
                range.is_some_and(|(start, end)| {
                    file.tokens[start..end].iter().any(|t| {
                        t.kind == TokenKind::StringLiteral
                            && catalog
                                .executable_suffixes
                                .iter()
                                .any(|s| t.text.to_ascii_lowercase().ends_with(s))
                    })
                })
            };
            has_exec_string(call_arg_range(file, r.site.last_token))
                || file.tokens.iter().any(|t| {
                    t.kind == TokenKind::StringLiteral
                        && t.span.line_start.abs_diff(r.site.span.line_start) <= 3
                        && catalog
                            .executable_suffixes
                            .iter()
                            .any(|s| t.text.to_ascii_lowercase().ends_with(s))
                })
        })
        .map(|r| r.site.span.line_start)
        .collect();

    let window = thresholds.proximity_lines;
    let mut findings = Vec::new();
    for fetch in &fetches {
        let line = fetch.site.span.line_start;
        if !url_lines.iter().any(|u| u.abs_diff(line) <= window) {
            continue;
        }
        let write_near = exec_writes.iter().any(|w| w.abs_diff(line) <= window);
        let eval_near = evals.iter().any(|e| e.abs_diff(line) <= window);
        let spawn_near = spawns.iter().any(|s| s.abs_diff(line) <= window);
        if !write_near && !eval_near {
            continue;
        }
        let evidence = file.line_text(line).trim().to_string();
        let mut finding = Finding::new(
            TechniqueId::EvStStage2,
            FindingLocation::Span(fetch.site.span.clone()),
            &evidence,
        )
        .with_context(format!(
            "remote fetch `{}` feeds {}",
            fetch.site.chain,
            if write_near { "an executable file write" } else { "code evaluation" },
        ));
        if write_near && (spawn_near || eval_near) {
            finding = finding.with_confidence(Confidence::Strong);
        }
        findings.push(finding);
        break; // one stager finding per file
    }
    findings
}

fn native_language(eco: Ecosystem) -> Language {
    match eco {
        Ecosystem::Npm => Language::JavaScript,
        Ecosystem::PyPI => Language::Python,
        Ecosystem::Composer => Language::Php,
        Ecosystem::RubyGems => Language::Ruby,
        Ecosystem::Cargo => Language::Rust,
        Ecosystem::Go => Language::Go,
        Ecosystem::Maven => Language::Java,
    }
}

fn media_magic(bytes: &[u8]) -> Option<&'static str> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        Some("png")
    } else if bytes.starts_with(b"\xFF\xD8\xFF") {
        Some("jpeg")
    } else if bytes.len() >= 12 && &bytes[0..4] == b"RIFF" && &bytes[8..12] == b"WAVE" {
        Some("wav")
    } else if bytes.starts_with(b"GIF8") {
        Some("gif")
    } else {
        None
    }
}

/// File-census indicators: polyglot sources (EV-ST-POLY), steganography
/// read chains (EV-DY-STEG), empty catch blocks around dangerous calls
/// (EV-WS), and fragmented/nested layouts (EV-ST-FILES).
pub fn census(
    snapshot: &PackageSnapshot,
    tokens: &TokenIndex,
    catalog: &DangerousApiCatalog,
    thresholds: &Thresholds,
) -> Vec<Finding> {
    let eco = snapshot.coords.ecosystem;
    let native = native_language(eco);
    let mut findings = Vec::new();
    let mut fragment_files = 0usize;

    for (path, tf) in tokens {
        let Some(lang) = tf.language else { continue };
        let Some(apis) = catalog.for_language(lang.name()) else {
            continue;
        };
        let refs = dangerous_refs(tf, apis);

        // Polyglot: foreign-language sources with dangerous tokens.
        if lang != native {
            if let Some(first) = refs.first() {
                let evidence = tf.line_text(first.site.span.line_start).trim().to_string();
                findings.push(
                    Finding::new(
                        TechniqueId::EvStPoly,
                        FindingLocation::Span(first.site.span.clone()),
                        &evidence,
                    )
                    .with_context(format!(
                        "{} source in a {} package uses `{}`",
                        lang.name(),
                        eco,
                        first.site.chain
                    )),
                );
            }
        }
        // Inline assembly markers.
        for (i, t) in tf.tokens.iter().enumerate() {
            let is_asm_macro = lang == Language::Rust
                && t.kind == TokenKind::Identifier
                && t.text == "asm"
                && tf.tokens.get(i + 1).is_some_and(|n| n.kind == TokenKind::Other && n.text == "!");
            let is_asm_builtin = t.kind == TokenKind::Identifier
                && (t.text == "__asm__" || t.text == "__asm");
            if is_asm_macro || is_asm_builtin {
                let evidence = tf.line_text(t.span.line_start).trim().to_string();
                findings.push(
                    Finding::new(
                        TechniqueId::EvStPoly,
                        FindingLocation::Span(t.span.clone()),
                        &evidence,
                    )
                    .with_context("inline assembly marker"),
                );
            }
        }

        // Warning suppression: empty handler around a dangerous call.
        let (shapes, _) = catch_shapes(tf);
        for shape in shapes {
            if !shape.catch_body_is_empty {
                continue;
            }
            let (start, end) = shape.try_body_tokens;
            let guarded = refs
                .iter()
                .find(|r| r.site.first_token >= start && r.site.first_token < end);
            if let Some(r) = guarded {
                let evidence = tf.line_text(r.site.span.line_start).trim().to_string();
                findings.push(
                    Finding::new(
                        TechniqueId::EvWs,
                        FindingLocation::Span(shape.catch_span.clone()),
                        &evidence,
                    )
                    .with_context(format!(
                        "empty handler silences failures of `{}`",
                        r.site.chain
                    )),
                );
            }
        }

        // Fragmentation census input.
        let line_count = tf.line_starts.len();
        if line_count <= thresholds.fragment_file_max_lines && !refs.is_empty() {
            fragment_files += 1;
        }
        let _ = path;
    }

    // Steganography: media file referenced by code with a decode+eval chain.
    let media_files: Vec<(&String, &'static str)> = snapshot
        .files
        .iter()
        .filter_map(|(path, content)| {
            content.bytes().and_then(media_magic).map(|kind| (path, kind))
        })
        .collect();
    for (media_path, kind) in &media_files {
        let basename = media_path.rsplit('/').next().unwrap_or(media_path);
        for tf in tokens.values() {
            let Some(apis) = tf.language.and_then(|l| catalog.for_language(l.name())) else {
                continue;
            };
            let mention = tf
                .tokens
                .iter()
                .find(|t| t.kind == TokenKind::StringLiteral && t.text.contains(basename));
            let Some(mention) = mention else { continue };
            let refs = dangerous_refs(tf, apis);
            let line = mention.span.line_start;
            let decode_near = refs.iter().any(|r| {
                r.class == ApiClass::Decode
                    && r.site.span.line_start.abs_diff(line) <= thresholds.proximity_lines
            });
            let eval_near = refs.iter().any(|r| {
                r.class == ApiClass::CodeEval
                    && r.site.span.line_start.abs_diff(line) <= thresholds.proximity_lines
            });
            if decode_near && eval_near {
                let evidence = tf.line_text(line).trim().to_string();
                findings.push(
                    Finding::new(
                        TechniqueId::EvDySteg,
                        FindingLocation::Span(mention.span.clone()),
                        &evidence,
                    )
                    .with_context(format!(
                        "{kind} file `{media_path}` read into a decode/eval chain"
                    )),
                );
            }
        }
    }

    // Fragmented sources / nested archives roll-up.
    let nested = snapshot.nested_archive_count();
    if nested > 0 || fragment_files >= thresholds.fragment_min_files {
        let mut parts = Vec::new();
        if nested > 0 {
            parts.push(format!("{nested} nested archive(s) bundled"));
        }
        if fragment_files >= thresholds.fragment_min_files {
            parts.push(format!(
                "{fragment_files} files of <= {} lines carry dangerous calls",
                thresholds.fragment_file_max_lines
            ));
        }
        let anchor = snapshot
            .files
            .keys()
            .next()
            .cloned()
            .unwrap_or_else(|| "package".to_string());
        findings.push(
            Finding::new(
                TechniqueId::EvStFiles,
                FindingLocation::manifest_key(anchor, "file-census"),
                "",
            )
            .with_context(parts.join("; ")),
        );
    }

    findings
}

/// Run every per-file evasion detector over one tokenized file.
pub fn detect_file_evasions(
    file: &TokenFile,
    catalog: &DangerousApiCatalog,
    thresholds: &Thresholds,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    findings.extend(classify_strings(file, thresholds));
    findings.extend(detect_pack_and_exec(file, catalog, thresholds));
    findings.extend(detect_concat_assembly(file, catalog, thresholds));
    findings.extend(detect_binary_array_payload(file, catalog, thresholds));
    findings.extend(detect_identifier_obfuscation(file, thresholds));
    findings.extend(detect_visual_deception(file, thresholds));
    findings.extend(detect_unicode_tricks(file));
    findings.extend(detect_dynamic_modification(file, catalog));
    findings.extend(detect_second_stage(file, catalog, thresholds));
    findings
}
