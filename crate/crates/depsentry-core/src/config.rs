//! Scan configuration: detector thresholds, the dangerous-API catalog, the
//! Maven plugin allowlist, and registry URL templates.
//!
//! Everything here is overridable from a JSON config file and from
//! `DEPSENTRY_*` environment variables.

use crate::model::Ecosystem;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Numeric knobs for the evasion detectors. The defaults are calibrated so
/// the benign fixture corpus produces zero findings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Entropy floor (bits/byte) for the opaque-string indicator.
    pub opaque_entropy_min: f64,
    /// Length floor for the opaque-string indicator.
    pub opaque_min_len: usize,
    /// Length floor for base64-like / hex-like classification.
    pub encoded_min_len: usize,
    /// Fraction of decoded bytes that must be printable to call a decode
    /// readable.
    pub printable_ratio: f64,
    /// Proximity window (lines) for decode+eval and stager detection.
    pub proximity_lines: u32,
    /// Minimum fragment count for string-assembly detection.
    pub concat_min_pieces: usize,
    /// Maximum fragment length for string-assembly detection.
    pub concat_max_piece_len: usize,
    /// Window (lines) for accumulation-style string assembly.
    pub concat_window_lines: u32,
    /// Minimum numeric-array length considered a potential byte payload.
    pub binary_array_min_len: usize,
    /// Minimum identifier length counted by the identifier-obfuscation score.
    pub ident_min_len: usize,
    /// Minimum eligible identifiers before the score fires.
    pub ident_min_count: usize,
    /// Score threshold for the identifier-obfuscation finding.
    pub ident_score_min: f64,
    /// Maximum distinct characters for the low-diversity identifier rule.
    pub ident_max_diversity: usize,
    /// Minimum run of confusable characters ({l,1,I,_,O,0}) in an identifier.
    pub ident_confusion_run_min: usize,
    /// Minimum run of spaces/tabs before code for visual deception.
    pub ws_run_min: usize,
    /// Column beyond which code counts as visually hidden.
    pub code_col_max: usize,
    /// Fragmented-source census: files no longer than this many lines...
    pub fragment_file_max_lines: usize,
    /// ...and at least this many of them carrying dangerous calls.
    pub fragment_min_files: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            opaque_entropy_min: 4.5,
            opaque_min_len: 24,
            encoded_min_len: 16,
            printable_ratio: 0.75,
            proximity_lines: 40,
            concat_min_pieces: 4,
            concat_max_piece_len: 8,
            concat_window_lines: 20,
            binary_array_min_len: 16,
            ident_min_len: 6,
            ident_min_count: 10,
            ident_score_min: 0.4,
            ident_max_diversity: 3,
            ident_confusion_run_min: 4,
            ws_run_min: 40,
            code_col_max: 500,
            fragment_file_max_lines: 15,
            fragment_min_files: 5,
        }
    }
}

/// Classes of dangerous API usage the detectors look for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApiClass {
    ProcessSpawn,
    CodeEval,
    Network,
    FilesystemSensitive,
    EnvRead,
    Decode,
}

/// Call-site name patterns for one language. Patterns are literal dotted
/// names (`os.system`) matched exactly, or bare names (`eval`) matched
/// against the last segment of a dotted chain. Never regular expressions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LanguageApis {
    pub process_spawn: Vec<String>,
    pub code_eval: Vec<String>,
    pub network: Vec<String>,
    pub filesystem_sensitive: Vec<String>,
    pub env_read: Vec<String>,
    /// base64/inflate/decrypt style calls whose output may feed eval.
    pub decode: Vec<String>,
}

impl LanguageApis {
    pub fn patterns(&self, class: ApiClass) -> &[String] {
        match class {
            ApiClass::ProcessSpawn => &self.process_spawn,
            ApiClass::CodeEval => &self.code_eval,
            ApiClass::Network => &self.network,
            ApiClass::FilesystemSensitive => &self.filesystem_sensitive,
            ApiClass::EnvRead => &self.env_read,
            ApiClass::Decode => &self.decode,
        }
    }
}

/// The dangerous-API catalog plus the sensitive-word lists shared by the
/// data-obfuscation detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DangerousApiCatalog {
    /// Keyed by language profile name: javascript, python, ruby, php, rust,
    /// go, java.
    pub languages: BTreeMap<String, LanguageApis>,
    /// Shell words that raise confidence when seen in hook commands.
    pub shell_words: Vec<String>,
    /// URL scheme prefixes considered sensitive when assembled or decoded.
    pub url_prefixes: Vec<String>,
    /// Filesystem paths whose appearance in assembled strings is sensitive.
    pub credential_paths: Vec<String>,
    /// Python built-ins whose reassignment counts as monkey patching.
    pub python_builtins: Vec<String>,
    /// JavaScript globals whose reassignment counts as monkey patching.
    pub js_globals: Vec<String>,
    /// Ruby core classes whose open-class redefinition counts as monkey
    /// patching.
    pub ruby_core_classes: Vec<String>,
    /// File suffixes treated as executable payloads for stager detection.
    pub executable_suffixes: Vec<String>,
}

/// Mirror of [`DangerousApiCatalog`] with all fields required, used to parse
/// the embedded default without re-entering `Default::default()`.
#[derive(Deserialize)]
struct RawCatalog {
    languages: BTreeMap<String, LanguageApis>,
    shell_words: Vec<String>,
    url_prefixes: Vec<String>,
    credential_paths: Vec<String>,
    python_builtins: Vec<String>,
    js_globals: Vec<String>,
    ruby_core_classes: Vec<String>,
    executable_suffixes: Vec<String>,
}

impl Default for DangerousApiCatalog {
    fn default() -> Self {
        let raw: RawCatalog =
            serde_json::from_str(DEFAULT_CATALOG_JSON).expect("embedded catalog is valid");
        DangerousApiCatalog {
            languages: raw.languages,
            shell_words: raw.shell_words,
            url_prefixes: raw.url_prefixes,
            credential_paths: raw.credential_paths,
            python_builtins: raw.python_builtins,
            js_globals: raw.js_globals,
            ruby_core_classes: raw.ruby_core_classes,
            executable_suffixes: raw.executable_suffixes,
        }
    }
}

impl DangerousApiCatalog {
    pub fn for_language(&self, language: &str) -> Option<&LanguageApis> {
        self.languages.get(language)
    }

    /// Whether `text` contains one of the catalog shell words (word match,
    /// case-insensitive).
    pub fn has_shell_word(&self, text: &str) -> bool {
        let lowered = text.to_ascii_lowercase();
        self.shell_words.iter().any(|word| {
            lowered
                .split(|c: char| !(c.is_ascii_alphanumeric() || c == '.' || c == '/' || c == '-'))
                .any(|token| token == word)
        })
    }

    /// Whether `joined` looks like a sensitive assembled value: a URL, a
    /// shell word, or a credential path.
    pub fn is_sensitive_value(&self, joined: &str) -> bool {
        let lowered = joined.to_ascii_lowercase();
        self.url_prefixes.iter().any(|p| lowered.starts_with(p))
            || self.has_shell_word(&lowered)
            || self
                .credential_paths
                .iter()
                .any(|p| lowered.contains(&p.to_ascii_lowercase()))
    }
}

/// Registry endpoints for one ecosystem. Templates take `{name}` and
/// `{version}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryTemplate {
    pub url_template: String,
    /// Optional URL returning the artifact digest, `sha256:<hex>` or bare
    /// hex; when present the downloaded bytes are verified against it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub digest_template: Option<String>,
}

fn default_registries() -> BTreeMap<String, RegistryTemplate> {
    let mut map = BTreeMap::new();
    map.insert(
        Ecosystem::Npm.name().to_string(),
        RegistryTemplate {
            url_template: "https://registry.npmjs.org/{name}/-/{name}-{version}.tgz".into(),
            digest_template: None,
        },
    );
    map.insert(
        Ecosystem::PyPI.name().to_string(),
        RegistryTemplate {
            url_template: "https://pypi.org/packages/source/{name0}/{name}/{name}-{version}.tar.gz"
                .into(),
            digest_template: None,
        },
    );
    map.insert(
        Ecosystem::Composer.name().to_string(),
        RegistryTemplate {
            url_template: "https://repo.packagist.org/p2/{name}.json".into(),
            digest_template: None,
        },
    );
    map.insert(
        Ecosystem::RubyGems.name().to_string(),
        RegistryTemplate {
            url_template: "https://rubygems.org/downloads/{name}-{version}.gem".into(),
            digest_template: None,
        },
    );
    map.insert(
        Ecosystem::Cargo.name().to_string(),
        RegistryTemplate {
            url_template: "https://crates.io/api/v1/crates/{name}/{version}/download".into(),
            digest_template: None,
        },
    );
    map.insert(
        Ecosystem::Maven.name().to_string(),
        RegistryTemplate {
            url_template:
                "https://repo1.maven.org/maven2/{group_path}/{name}/{version}/{name}-{version}.jar"
                    .into(),
            digest_template: None,
        },
    );
    // Go has no centralized registry; modules are scanned from local
    // directories only.
    map
}

/// Top-level scan configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub thresholds: Thresholds,
    pub dangerous_api: DangerousApiCatalog,
    /// Plugin groups that never produce build-plugin findings.
    pub maven_plugin_allowlist: Vec<String>,
    /// Well-known Maven plugin artifact ids; the same name under a foreign
    /// group is treated as shadowing.
    pub maven_wellknown_plugins: Vec<String>,
    /// Per-ecosystem registry download templates.
    pub registries: BTreeMap<String, RegistryTemplate>,
    /// Files larger than this are recorded by path/size but not scanned.
    pub max_file_bytes: u64,
    /// Nested archives are extracted up to this depth; depth 1 means the
    /// top-level archive only.
    pub max_archive_depth: u32,
    /// Scan package files in parallel. Output ordering is identical either
    /// way.
    pub parallel: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            thresholds: Thresholds::default(),
            dangerous_api: DangerousApiCatalog::default(),
            maven_plugin_allowlist: vec!["org.apache.maven.plugins".into()],
            maven_wellknown_plugins: vec![
                "maven-compiler-plugin".into(),
                "maven-surefire-plugin".into(),
                "maven-jar-plugin".into(),
                "maven-resources-plugin".into(),
                "maven-install-plugin".into(),
                "maven-deploy-plugin".into(),
                "maven-clean-plugin".into(),
                "maven-site-plugin".into(),
                "maven-shade-plugin".into(),
                "maven-assembly-plugin".into(),
            ],
            registries: default_registries(),
            max_file_bytes: 16 * 1024 * 1024,
            max_archive_depth: 1,
            parallel: true,
        }
    }
}

impl ScanConfig {
    /// Load a JSON config file; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        let cfg: ScanConfig = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse(path.display().to_string(), e.to_string()))?;
        Ok(cfg)
    }

    /// Apply `DEPSENTRY_*` environment overrides for the scalar knobs.
    ///
    /// Key mapping: `DEPSENTRY_MAX_ARCHIVE_DEPTH` -> `max_archive_depth`,
    /// `DEPSENTRY_PROXIMITY_LINES` -> `thresholds.proximity_lines`, etc.
    pub fn apply_env_overrides<F>(&mut self, get: F) -> Vec<String>
    where
        F: Fn(&str) -> Option<String>,
    {
        let mut applied = Vec::new();
        macro_rules! scalar {
            ($env:literal, $slot:expr) => {
                if let Some(raw) = get($env) {
                    match raw.parse() {
                        Ok(v) => {
                            $slot = v;
                            applied.push(format!("{}={}", $env, raw));
                        }
                        Err(_) => applied.push(format!("{}: ignored unparseable value", $env)),
                    }
                }
            };
        }
        scalar!("DEPSENTRY_MAX_FILE_BYTES", self.max_file_bytes);
        scalar!("DEPSENTRY_MAX_ARCHIVE_DEPTH", self.max_archive_depth);
        scalar!("DEPSENTRY_PARALLEL", self.parallel);
        scalar!(
            "DEPSENTRY_OPAQUE_ENTROPY_MIN",
            self.thresholds.opaque_entropy_min
        );
        scalar!("DEPSENTRY_OPAQUE_MIN_LEN", self.thresholds.opaque_min_len);
        scalar!("DEPSENTRY_ENCODED_MIN_LEN", self.thresholds.encoded_min_len);
        scalar!("DEPSENTRY_PROXIMITY_LINES", self.thresholds.proximity_lines);
        scalar!("DEPSENTRY_WS_RUN_MIN", self.thresholds.ws_run_min);
        scalar!("DEPSENTRY_CODE_COL_MAX", self.thresholds.code_col_max);
        scalar!("DEPSENTRY_IDENT_SCORE_MIN", self.thresholds.ident_score_min);
        applied
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("cannot parse config {0}: {1}")]
    Parse(String, String),
}

/// Embedded default dangerous-API catalog. Users can replace or extend it
/// through the JSON config file.
pub const DEFAULT_CATALOG_JSON: &str = include_str!("default_api_catalog.json");
