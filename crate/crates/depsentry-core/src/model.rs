//! Core domain types: ecosystems, technique identifiers, findings, and the
//! technique catalog with its per-ecosystem applicability matrix.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The seven package ecosystems the scanner understands.
///
/// Declaration order doubles as the tie-break precedence used by ecosystem
/// detection (earlier wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ecosystem {
    Npm,
    #[serde(rename = "pypi")]
    PyPI,
    Composer,
    RubyGems,
    Cargo,
    Go,
    Maven,
}

impl Ecosystem {
    pub const ALL: [Ecosystem; 7] = [
        Ecosystem::Npm,
        Ecosystem::PyPI,
        Ecosystem::Composer,
        Ecosystem::RubyGems,
        Ecosystem::Cargo,
        Ecosystem::Go,
        Ecosystem::Maven,
    ];

    /// Canonical lowercase name, also used for the deps-store directory layout.
    pub fn name(&self) -> &'static str {
        match self {
            Ecosystem::Npm => "npm",
            Ecosystem::PyPI => "pypi",
            Ecosystem::Composer => "composer",
            Ecosystem::RubyGems => "rubygems",
            Ecosystem::Cargo => "cargo",
            Ecosystem::Go => "go",
            Ecosystem::Maven => "maven",
        }
    }
}

impl fmt::Display for Ecosystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ecosystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "npm" | "javascript" | "js" => Ok(Ecosystem::Npm),
            "pypi" | "pip" | "python" => Ok(Ecosystem::PyPI),
            "composer" | "php" => Ok(Ecosystem::Composer),
            "rubygems" | "gem" | "ruby" => Ok(Ecosystem::RubyGems),
            "cargo" | "rust" | "crates" => Ok(Ecosystem::Cargo),
            "go" | "golang" => Ok(Ecosystem::Go),
            "maven" | "mvn" | "java" => Ok(Ecosystem::Maven),
            other => Err(format!("unknown ecosystem: {other}")),
        }
    }
}

/// Identifier of a detection technique.
///
/// `I1..I3` and `R1..R4` are the install-time and runtime code-execution
/// techniques; `EvXx` variants are the evasion indicators. Declaration order
/// is the canonical sort order for findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TechniqueId {
    #[serde(rename = "I1")]
    I1,
    #[serde(rename = "I2")]
    I2,
    #[serde(rename = "I3")]
    I3,
    #[serde(rename = "R1")]
    R1,
    #[serde(rename = "R2")]
    R2,
    #[serde(rename = "R3")]
    R3,
    #[serde(rename = "R4")]
    R4,
    #[serde(rename = "EV-DO-ENC")]
    EvDoEnc,
    #[serde(rename = "EV-DO-CMP")]
    EvDoCmp,
    #[serde(rename = "EV-DO-CRY")]
    EvDoCry,
    #[serde(rename = "EV-DO-BIN")]
    EvDoBin,
    #[serde(rename = "EV-DO-SPLIT")]
    EvDoSplit,
    #[serde(rename = "EV-ST-ID")]
    EvStId,
    #[serde(rename = "EV-ST-FILES")]
    EvStFiles,
    #[serde(rename = "EV-ST-STAGE2")]
    EvStStage2,
    #[serde(rename = "EV-ST-DEPTREE")]
    EvStDeptree,
    #[serde(rename = "EV-ST-VIS")]
    EvStVis,
    #[serde(rename = "EV-ST-UNI")]
    EvStUni,
    #[serde(rename = "EV-ST-POLY")]
    EvStPoly,
    #[serde(rename = "EV-DY-PACK")]
    EvDyPack,
    #[serde(rename = "EV-DY-STEG")]
    EvDySteg,
    #[serde(rename = "EV-DY-MOD")]
    EvDyMod,
    #[serde(rename = "EV-WS")]
    EvWs,
}

impl TechniqueId {
    pub const ALL: [TechniqueId; 23] = [
        TechniqueId::I1,
        TechniqueId::I2,
        TechniqueId::I3,
        TechniqueId::R1,
        TechniqueId::R2,
        TechniqueId::R3,
        TechniqueId::R4,
        TechniqueId::EvDoEnc,
        TechniqueId::EvDoCmp,
        TechniqueId::EvDoCry,
        TechniqueId::EvDoBin,
        TechniqueId::EvDoSplit,
        TechniqueId::EvStId,
        TechniqueId::EvStFiles,
        TechniqueId::EvStStage2,
        TechniqueId::EvStDeptree,
        TechniqueId::EvStVis,
        TechniqueId::EvStUni,
        TechniqueId::EvStPoly,
        TechniqueId::EvDyPack,
        TechniqueId::EvDySteg,
        TechniqueId::EvDyMod,
        TechniqueId::EvWs,
    ];

    /// The seven code-execution techniques (the applicability matrix domain).
    pub const ACE: [TechniqueId; 7] = [
        TechniqueId::I1,
        TechniqueId::I2,
        TechniqueId::I3,
        TechniqueId::R1,
        TechniqueId::R2,
        TechniqueId::R3,
        TechniqueId::R4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TechniqueId::I1 => "I1",
            TechniqueId::I2 => "I2",
            TechniqueId::I3 => "I3",
            TechniqueId::R1 => "R1",
            TechniqueId::R2 => "R2",
            TechniqueId::R3 => "R3",
            TechniqueId::R4 => "R4",
            TechniqueId::EvDoEnc => "EV-DO-ENC",
            TechniqueId::EvDoCmp => "EV-DO-CMP",
            TechniqueId::EvDoCry => "EV-DO-CRY",
            TechniqueId::EvDoBin => "EV-DO-BIN",
            TechniqueId::EvDoSplit => "EV-DO-SPLIT",
            TechniqueId::EvStId => "EV-ST-ID",
            TechniqueId::EvStFiles => "EV-ST-FILES",
            TechniqueId::EvStStage2 => "EV-ST-STAGE2",
            TechniqueId::EvStDeptree => "EV-ST-DEPTREE",
            TechniqueId::EvStVis => "EV-ST-VIS",
            TechniqueId::EvStUni => "EV-ST-UNI",
            TechniqueId::EvStPoly => "EV-ST-POLY",
            TechniqueId::EvDyPack => "EV-DY-PACK",
            TechniqueId::EvDySteg => "EV-DY-STEG",
            TechniqueId::EvDyMod => "EV-DY-MOD",
            TechniqueId::EvWs => "EV-WS",
        }
    }

    pub fn is_install_time(&self) -> bool {
        matches!(self, TechniqueId::I1 | TechniqueId::I2 | TechniqueId::I3)
    }

    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            TechniqueId::R1 | TechniqueId::R2 | TechniqueId::R3 | TechniqueId::R4
        )
    }

    pub fn is_evasion(&self) -> bool {
        !self.is_install_time() && !self.is_runtime()
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TechniqueId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TechniqueId::ALL
            .iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown technique id: {s}"))
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    #[default]
    Info,
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
            Severity::Critical => "critical",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "info" => Ok(Severity::Info),
            "low" => Ok(Severity::Low),
            "medium" => Ok(Severity::Medium),
            "high" => Ok(Severity::High),
            "critical" => Ok(Severity::Critical),
            other => Err(format!("unknown severity: {other}")),
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    #[default]
    Weak,
    Moderate,
    Strong,
}

impl Confidence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Confidence::Weak => "weak",
            Confidence::Moderate => "moderate",
            Confidence::Strong => "strong",
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Package identity. `version` may be empty for directory scans where no
/// manifest declares one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PackageCoordinates {
    pub ecosystem: Ecosystem,
    pub name: String,
    pub version: String,
}

impl PackageCoordinates {
    pub fn new(ecosystem: Ecosystem, name: impl Into<String>, version: impl Into<String>) -> Self {
        PackageCoordinates {
            ecosystem,
            name: name.into(),
            version: version.into(),
        }
    }
}

impl fmt::Display for PackageCoordinates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.version.is_empty() {
            write!(f, "{}:{}", self.ecosystem, self.name)
        } else {
            write!(f, "{}:{}@{}", self.ecosystem, self.name, self.version)
        }
    }
}

/// A byte- and line-addressed region of one file in a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub path: String,
    pub line_start: u32,
    pub line_end: u32,
    pub byte_start: usize,
    pub byte_end: usize,
}

impl SourceSpan {
    pub fn new(
        path: impl Into<String>,
        line_start: u32,
        line_end: u32,
        byte_start: usize,
        byte_end: usize,
    ) -> Self {
        debug_assert!(byte_start <= byte_end);
        debug_assert!(line_start <= line_end);
        SourceSpan {
            path: path.into(),
            line_start,
            line_end,
            byte_start,
            byte_end,
        }
    }
}

/// Where a finding points: either a span of a source file or a key path
/// inside a manifest (e.g. `package.json#scripts.pre-install`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FindingLocation {
    Span(SourceSpan),
    ManifestKey { path: String, key: String },
}

impl FindingLocation {
    pub fn manifest_key(path: impl Into<String>, key: impl Into<String>) -> Self {
        FindingLocation::ManifestKey {
            path: path.into(),
            key: key.into(),
        }
    }

    /// File the location belongs to.
    pub fn path(&self) -> &str {
        match self {
            FindingLocation::Span(s) => &s.path,
            FindingLocation::ManifestKey { path, .. } => path,
        }
    }

    /// Byte offset used for deterministic ordering; manifest keys sort first
    /// within their file.
    pub fn sort_offset(&self) -> usize {
        match self {
            FindingLocation::Span(s) => s.byte_start,
            FindingLocation::ManifestKey { .. } => 0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FindingLocation::Span(s) => format!("{}:{}", s.path, s.line_start),
            FindingLocation::ManifestKey { path, key } => format!("{path}#{key}"),
        }
    }
}

/// Maximum number of characters kept in a finding's evidence excerpt.
pub const EVIDENCE_MAX_CHARS: usize = 200;

/// Truncate `text` to [`EVIDENCE_MAX_CHARS`] characters; truncating a
/// verbatim excerpt keeps it verbatim.
pub fn clip_evidence(text: &str) -> String {
    text.chars().take(EVIDENCE_MAX_CHARS).collect()
}

/// One detection, pointing at the technique, the place, and the excerpt
/// that justifies it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub id: TechniqueId,
    pub severity: Severity,
    pub confidence: Confidence,
    pub location: FindingLocation,
    pub evidence: String,
    pub remediation_ref: String,
    /// Extra context that is not part of the verbatim evidence, e.g. the
    /// enclosing method name for runtime findings.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub context: Option<String>,
    /// Coordinates of the package the finding was found in; filled by
    /// dependency-tree scans.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub package: Option<PackageCoordinates>,
    /// Hop count from the scan root; filled by dependency-tree scans.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub depth: Option<u32>,
}

impl Finding {
    /// Build a finding with the catalog defaults for `id`.
    pub fn new(id: TechniqueId, location: FindingLocation, evidence: &str) -> Self {
        let entry = catalog_entry(id);
        Finding {
            id,
            severity: entry.severity,
            confidence: entry.confidence,
            location,
            evidence: clip_evidence(evidence),
            remediation_ref: entry.remediation_ref.to_string(),
            context: None,
            package: None,
            depth: None,
        }
    }

    pub fn with_confidence(mut self, confidence: Confidence) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn with_severity(mut self, severity: Severity) -> Self {
        self.severity = severity;
        self
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }

    /// Deterministic ordering key: (path, byte offset, technique id).
    pub fn sort_key(&self) -> (String, usize, TechniqueId) {
        (
            self.location.path().to_string(),
            self.location.sort_offset(),
            self.id,
        )
    }
}

/// Sort findings by (package, path, byte offset, id) so report output is
/// stable across runs and scan orderings.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        let pa = a.package.as_ref().map(|c| c.to_string()).unwrap_or_default();
        let pb = b.package.as_ref().map(|c| c.to_string()).unwrap_or_default();
        pa.cmp(&pb)
            .then_with(|| a.sort_key().cmp(&b.sort_key()))
            .then_with(|| a.evidence.cmp(&b.evidence))
    });
}

/// `true` exactly for the ecosystem/technique pairs where the technique is
/// achievable, per the comparative analysis of the seven package managers.
///
/// Total over all inputs; evasion ids are not part of the matrix and return
/// `false`.
pub fn applicability(ecosystem: Ecosystem, technique: TechniqueId) -> bool {
    use Ecosystem::*;
    use TechniqueId::*;
    matches!(
        (ecosystem, technique),
        (Npm, I1 | R1 | R2 | R3)
            | (PyPI, I2 | R1 | R2 | R3)
            | (Composer, I1 | R2 | R3)
            | (RubyGems, I3 | R1 | R2 | R3)
            | (Cargo, I2 | R2 | R3)
            | (Go, R1 | R2 | R3)
            | (Maven, R2 | R3 | R4)
    )
}

/// One row of the technique catalog.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: TechniqueId,
    pub title: &'static str,
    pub section: &'static str,
    pub severity: Severity,
    pub confidence: Confidence,
    pub remediation_ref: &'static str,
    pub remediation: &'static str,
}

const CATALOG: [CatalogEntry; 23] = [
    CatalogEntry {
        id: TechniqueId::I1,
        title: "Run command/scripts leveraging install-hooks",
        section: "install-time",
        severity: Severity::High,
        confidence: Confidence::Moderate,
        remediation_ref: "review-install-hooks",
        remediation: "Review every install hook command of direct and transitive dependencies. For npm, `npm install --ignore-scripts` skips all scripts; composer has no flag to skip pre/post-install-cmd, so hook contents must be reviewed, and dist packages should be preferred.",
    },
    CatalogEntry {
        id: TechniqueId::I2,
        title: "Run code in build script",
        section: "install-time",
        severity: Severity::High,
        confidence: Confidence::Moderate,
        remediation_ref: "review-build-scripts",
        remediation: "Prefer pre-built distributions (Python wheels via `pip install --only-binary :all:`). When source distributions are required, review setup.py; for Rust crates, review build.rs or the `build` path set in Cargo.toml for every dependency.",
    },
    CatalogEntry {
        id: TechniqueId::I3,
        title: "Run code in build extension(s)",
        section: "install-time",
        severity: Severity::High,
        confidence: Confidence::Moderate,
        remediation_ref: "review-build-extensions",
        remediation: "gem install has no option to skip extensions. Check whether the gemspec declares extensions and review each extension script (e.g. extconf.rb) before installing or building, for direct and transitive gems.",
    },
    CatalogEntry {
        id: TechniqueId::R1,
        title: "Insert code in methods/scripts executed when importing a module",
        section: "runtime",
        severity: Severity::Medium,
        confidence: Confidence::Weak,
        remediation_ref: "review-import-side-effects",
        remediation: "Review code executed at import time: the npm `main` entry script, Python `__init__.py` files, Ruby files loaded via require, and Go `init()` functions, blank imports, and variable initializers.",
    },
    CatalogEntry {
        id: TechniqueId::R2,
        title: "Insert code in commonly-used methods",
        section: "runtime",
        severity: Severity::Medium,
        confidence: Confidence::Weak,
        remediation_ref: "review-popular-methods",
        remediation: "Review the bodies of frequently invoked methods imported from third-party packages, especially where they spawn processes, evaluate code, or open network connections.",
    },
    CatalogEntry {
        id: TechniqueId::R3,
        title: "Insert code in constructor methods (of popular classes)",
        section: "runtime",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-constructors",
        remediation: "Review constructors and Java static/instance initializer blocks of third-party classes; they run on instantiation or class initialization and are attractive carriers for malicious code.",
    },
    CatalogEntry {
        id: TechniqueId::R4,
        title: "Run code of 3rd-party dependency as build plugin",
        section: "runtime",
        severity: Severity::Medium,
        confidence: Confidence::Weak,
        remediation_ref: "review-build-plugins",
        remediation: "Audit build plugins declared in pom.xml: verify the group id is the canonical publisher, and treat well-known plugin names under foreign groups as suspect.",
    },
    CatalogEntry {
        id: TechniqueId::EvDoEnc,
        title: "Encoding",
        section: "data-obfuscation",
        severity: Severity::Low,
        confidence: Confidence::Moderate,
        remediation_ref: "inspect-encoded-strings",
        remediation: "Decode base64/hex string literals and review the decoded content for URLs, commands, or sensitive paths.",
    },
    CatalogEntry {
        id: TechniqueId::EvDoCmp,
        title: "Compression",
        section: "data-obfuscation",
        severity: Severity::Low,
        confidence: Confidence::Weak,
        remediation_ref: "inspect-compressed-strings",
        remediation: "Decompress embedded data fed to inflate/gunzip calls and review its content.",
    },
    CatalogEntry {
        id: TechniqueId::EvDoCry,
        title: "Encryption",
        section: "data-obfuscation",
        severity: Severity::Low,
        confidence: Confidence::Weak,
        remediation_ref: "inspect-opaque-strings",
        remediation: "High-entropy opaque strings may be encrypted or compressed payloads; locate the decryption routine and key handling to recover the plaintext.",
    },
    CatalogEntry {
        id: TechniqueId::EvDoBin,
        title: "Binary Arrays",
        section: "data-obfuscation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "inspect-binary-arrays",
        remediation: "Reverse-engineer numeric byte arrays: decode them (including single-byte XOR variants) and check for hidden strings such as URLs or shell commands.",
    },
    CatalogEntry {
        id: TechniqueId::EvDoSplit,
        title: "Reordering of Data",
        section: "data-obfuscation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "inspect-string-assembly",
        remediation: "Join string fragments concatenated at runtime and review the assembled value; fragment assembly of URLs, commands, or credential paths defeats naive string scanning.",
    },
    CatalogEntry {
        id: TechniqueId::EvStId,
        title: "Renaming Identifiers",
        section: "static-transformation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-obfuscated-identifiers",
        remediation: "Treat files dominated by non-readable identifier names as obfuscated; review them manually or deobfuscate before use.",
    },
    CatalogEntry {
        id: TechniqueId::EvStFiles,
        title: "Split Code into Multiple Files",
        section: "static-transformation",
        severity: Severity::Info,
        confidence: Confidence::Weak,
        remediation_ref: "review-file-layout",
        remediation: "Review packages whose suspicious logic is fragmented across many tiny files or hidden in nested archives.",
    },
    CatalogEntry {
        id: TechniqueId::EvStStage2,
        title: "Second-Stage Payload",
        section: "static-transformation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-stagers",
        remediation: "Code that downloads remote content and writes it to an executable path or evaluates it is a stager; review the remote endpoint and the execution path.",
    },
    CatalogEntry {
        id: TechniqueId::EvStDeptree,
        title: "Hide Code into Dependency Tree",
        section: "static-transformation",
        severity: Severity::Low,
        confidence: Confidence::Weak,
        remediation_ref: "scan-transitive-deps",
        remediation: "Scan transitive dependencies with the same rigor as direct ones; code-execution findings deep in the tree deserve extra scrutiny.",
    },
    CatalogEntry {
        id: TechniqueId::EvStVis,
        title: "Visual Deception",
        section: "static-transformation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-whitespace-tricks",
        remediation: "Inspect lines with long whitespace runs or code pushed beyond the visible column range; such layout hides code from manual review.",
    },
    CatalogEntry {
        id: TechniqueId::EvStUni,
        title: "Unicode Homoglyphs/Control Characters",
        section: "static-transformation",
        severity: Severity::Medium,
        confidence: Confidence::Strong,
        remediation_ref: "review-unicode",
        remediation: "Remove or justify bidirectional-control and zero-width characters and mixed-script identifiers; they can make displayed code differ from compiled code.",
    },
    CatalogEntry {
        id: TechniqueId::EvStPoly,
        title: "Polyglot Malwares and In-Line Assembly",
        section: "static-transformation",
        severity: Severity::Low,
        confidence: Confidence::Weak,
        remediation_ref: "review-foreign-sources",
        remediation: "Review source files written in languages foreign to the ecosystem and any inline assembly; they complicate analysis and may carry the payload.",
    },
    CatalogEntry {
        id: TechniqueId::EvDyPack,
        title: "Encoding, Compression and Encryption",
        section: "dynamic-transformation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-packed-code",
        remediation: "Decode/decompress the data flowing into eval-like calls to recover the packed code before assessing the package.",
    },
    CatalogEntry {
        id: TechniqueId::EvDySteg,
        title: "Steganography",
        section: "dynamic-transformation",
        severity: Severity::Low,
        confidence: Confidence::Weak,
        remediation_ref: "review-media-reads",
        remediation: "Review code that reads bundled media files and feeds the content into decoding or evaluation; media files can carry hidden payloads.",
    },
    CatalogEntry {
        id: TechniqueId::EvDyMod,
        title: "Dynamic Code Modification",
        section: "dynamic-transformation",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-monkey-patching",
        remediation: "Audit assignments that replace built-in functions, prototypes, or core classes; hijacked built-ins execute attacker code from apparently harmless call sites.",
    },
    CatalogEntry {
        id: TechniqueId::EvWs,
        title: "Warning Suppression",
        section: "remarks",
        severity: Severity::Medium,
        confidence: Confidence::Moderate,
        remediation_ref: "review-empty-catch",
        remediation: "Empty catch/except blocks around sensitive calls silence failures; review what the guarded code does and why errors are discarded.",
    },
];

/// The full technique catalog: 7 code-execution techniques plus 16 evasion
/// indicators.
pub fn technique_catalog() -> &'static [CatalogEntry] {
    &CATALOG
}

/// Catalog row for `id`. Total: every [`TechniqueId`] has an entry.
pub fn catalog_entry(id: TechniqueId) -> &'static CatalogEntry {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .expect("catalog covers every technique id")
}

/// Serialize the catalog as a standalone JSON document for downstream tools.
pub fn catalog_json() -> String {
    let rows: Vec<serde_json::Value> = CATALOG
        .iter()
        .map(|e| {
            serde_json::json!({
                "id": e.id.as_str(),
                "title": e.title,
                "section": e.section,
                "severity": e.severity.as_str(),
                "confidence": e.confidence.as_str(),
                "remediation_ref": e.remediation_ref,
                "remediation": e.remediation,
            })
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("catalog serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn applicability_matches_comparison_table() {
        // All 49 cells, 24 true.
        let expected_true: [(Ecosystem, TechniqueId); 24] = [
            (Ecosystem::Npm, TechniqueId::I1),
            (Ecosystem::Npm, TechniqueId::R1),
            (Ecosystem::Npm, TechniqueId::R2),
            (Ecosystem::Npm, TechniqueId::R3),
            (Ecosystem::PyPI, TechniqueId::I2),
            (Ecosystem::PyPI, TechniqueId::R1),
            (Ecosystem::PyPI, TechniqueId::R2),
            (Ecosystem::PyPI, TechniqueId::R3),
            (Ecosystem::Composer, TechniqueId::I1),
            (Ecosystem::Composer, TechniqueId::R2),
            (Ecosystem::Composer, TechniqueId::R3),
            (Ecosystem::RubyGems, TechniqueId::I3),
            (Ecosystem::RubyGems, TechniqueId::R1),
            (Ecosystem::RubyGems, TechniqueId::R2),
            (Ecosystem::RubyGems, TechniqueId::R3),
            (Ecosystem::Cargo, TechniqueId::I2),
            (Ecosystem::Cargo, TechniqueId::R2),
            (Ecosystem::Cargo, TechniqueId::R3),
            (Ecosystem::Go, TechniqueId::R1),
            (Ecosystem::Go, TechniqueId::R2),
            (Ecosystem::Go, TechniqueId::R3),
            (Ecosystem::Maven, TechniqueId::R2),
            (Ecosystem::Maven, TechniqueId::R3),
            (Ecosystem::Maven, TechniqueId::R4),
        ];
        let mut true_count = 0;
        for eco in Ecosystem::ALL {
            for tech in TechniqueId::ACE {
                let expected = expected_true.contains(&(eco, tech));
                assert_eq!(
                    applicability(eco, tech),
                    expected,
                    "cell ({eco}, {tech}) mismatch"
                );
                if applicability(eco, tech) {
                    true_count += 1;
                }
            }
        }
        assert_eq!(true_count, 24);
    }

    #[test]
    fn applicability_spot_checks() {
        assert!(applicability(Ecosystem::Npm, TechniqueId::I1));
        assert!(!applicability(Ecosystem::Go, TechniqueId::I1));
        assert!(applicability(Ecosystem::Maven, TechniqueId::R4));
    }

    #[test]
    fn catalog_has_23_entries_with_expected_titles() {
        let catalog = technique_catalog();
        assert_eq!(catalog.len(), 23);
        assert_eq!(
            catalog_entry(TechniqueId::I1).title,
            "Run command/scripts leveraging install-hooks"
        );
        assert_eq!(
            catalog_entry(TechniqueId::R4).title,
            "Run code of 3rd-party dependency as build plugin"
        );
        let ace = catalog.iter().filter(|e| !e.id.is_evasion()).count();
        let evasion = catalog.iter().filter(|e| e.id.is_evasion()).count();
        assert_eq!(ace, 7);
        assert_eq!(evasion, 16);
    }

    #[test]
    fn catalog_severity_defaults_follow_policy() {
        for entry in technique_catalog() {
            if entry.id.is_install_time() {
                assert_eq!(entry.severity, Severity::High, "{}", entry.id);
            } else if entry.id.is_runtime() {
                assert_eq!(entry.severity, Severity::Medium, "{}", entry.id);
            } else {
                assert!(
                    matches!(
                        entry.severity,
                        Severity::Info | Severity::Low | Severity::Medium
                    ),
                    "{}",
                    entry.id
                );
            }
        }
    }

    #[test]
    fn catalog_json_round_trips() {
        let json = catalog_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let arr = parsed.as_array().unwrap();
        assert_eq!(arr.len(), 23);
        assert_eq!(arr[0]["id"], "I1");
        assert!(arr.iter().all(|row| {
            row.get("title").is_some()
                && row.get("section").is_some()
                && row.get("severity").is_some()
                && row.get("confidence").is_some()
                && row.get("remediation").is_some()
        }));
    }

    #[test]
    fn technique_id_round_trips_through_strings() {
        for id in TechniqueId::ALL {
            assert_eq!(id.as_str().parse::<TechniqueId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
            let back: TechniqueId = serde_json::from_str(&json).unwrap();
            assert_eq!(back, id);
        }
    }

    #[test]
    fn evidence_is_clipped_to_limit() {
        let long = "x".repeat(500);
        assert_eq!(clip_evidence(&long).chars().count(), EVIDENCE_MAX_CHARS);
        assert_eq!(clip_evidence("short"), "short");
    }

    #[test]
    fn findings_sort_deterministically() {
        let mut findings = vec![
            Finding::new(
                TechniqueId::R1,
                FindingLocation::Span(SourceSpan::new("b.py", 1, 1, 10, 20)),
                "later",
            ),
            Finding::new(
                TechniqueId::I1,
                FindingLocation::manifest_key("a.json", "scripts.install"),
                "first",
            ),
            Finding::new(
                TechniqueId::I2,
                FindingLocation::Span(SourceSpan::new("b.py", 1, 1, 5, 9)),
                "mid",
            ),
        ];
        sort_findings(&mut findings);
        let ids: Vec<_> = findings.iter().map(|f| f.id).collect();
        assert_eq!(ids, vec![TechniqueId::I1, TechniqueId::I2, TechniqueId::R1]);
    }
}
