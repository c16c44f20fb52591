//! Manifest fact extraction: normalize each ecosystem's manifest and
//! configuration files into [`ManifestFacts`], and parse lockfiles into
//! dependency edges.
//!
//! Extraction is purely syntactic. gemspec and setup.py are dynamic-language
//! files, so their facts come from token-shape recognizers, never from
//! evaluating them.

mod gemspec;
pub mod lockfile;
mod setup_py;

pub use gemspec::extract_gemspec_facts;
pub use lockfile::{parse_lockfile, LockfileError, LockfileParse};
pub use setup_py::{extract_setup_facts, SetupFacts};

use crate::ingest::{ArchiveFormat, PackageSnapshot};
use crate::lexscan::{self, Language, TokenKind};
use crate::model::{Ecosystem, PackageCoordinates, SourceSpan};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// npm install hooks recognized by the scanner, in execution order.
/// `prepublish` is deprecated but still recognized and flagged.
pub const NPM_HOOKS: [&str; 7] = [
    "pre-install",
    "install",
    "post-install",
    "preprepare",
    "prepare",
    "postprepare",
    "prepublish",
];

/// composer install hooks recognized by the scanner.
pub const COMPOSER_HOOKS: [&str; 6] = [
    "pre-install-cmd",
    "post-install-cmd",
    "pre-autoload-dump",
    "post-autoload-dump",
    "pre-update-cmd",
    "post-update-cmd",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Source,
    Prebuilt,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MavenPlugin {
    pub group: String,
    pub artifact: String,
    pub version: Option<String>,
    /// Phases the plugin's executions bind to.
    pub phases: Vec<String>,
    /// Span of the `<plugin>` element in pom.xml.
    pub span: Option<SourceSpan>,
    /// Span of the `<artifactId>` element, used as finding evidence.
    pub artifact_span: Option<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoBlankImport {
    pub path: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredDependency {
    pub name: String,
    pub constraint: String,
}

/// Normalized, ecosystem-agnostic manifest facts. Fields irrelevant to the
/// snapshot's ecosystem stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestFacts {
    /// Whitelisted install hooks (npm / composer) and their command text.
    pub install_hooks: BTreeMap<String, String>,
    /// setup.py, build.rs, or the Cargo `build` field value.
    pub build_script: Option<String>,
    /// gemspec `extensions` entries.
    pub build_extensions: Vec<String>,
    /// npm `main`, Python `__init__.py` files, Ruby require targets from the
    /// gemspec `files` list. Paths are full snapshot paths.
    pub entry_points: Vec<String>,
    /// (command name, symbol) pairs from setup.py `cmdclass={...}`.
    pub cmdclass_overrides: Vec<(String, String)>,
    /// Top-level statements in setup.py outside the setup() call.
    pub setup_top_level_statements: Vec<SourceSpan>,
    /// Whether setup.py imports an install/build command class.
    pub setup_imports_install_command: bool,
    /// Span of the cmdclass argument, used as finding evidence.
    pub setup_cmdclass_span: Option<SourceSpan>,
    /// Span of the gemspec `extensions` assignment, used as evidence.
    pub gemspec_extensions_span: Option<SourceSpan>,
    /// pom.xml `<build><plugins>` entries.
    pub plugins: Vec<MavenPlugin>,
    pub go_init_functions: Vec<SourceSpan>,
    pub go_blank_imports: Vec<GoBlankImport>,
    pub go_var_anon_initializers: Vec<SourceSpan>,
    pub declared_dependencies: Vec<DeclaredDependency>,
    pub lockfile_present: bool,
    pub distribution_kind: DistributionKind,
    pub declared_name: Option<String>,
    pub declared_version: Option<String>,
    /// Parse errors, unrecognized script keys, non-literal assignments, and
    /// similar observations; attached to the report, never a hard abort.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Direct,
    Transitive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub from: PackageCoordinates,
    pub to: PackageCoordinates,
    pub kind: EdgeKind,
}

/// Extract all facts for the snapshot's ecosystem. Pure and total: parse
/// failures surface as notes on the returned facts.
pub fn extract_facts(snapshot: &PackageSnapshot) -> ManifestFacts {
    match snapshot.coords.ecosystem {
        Ecosystem::Npm => extract_npm(snapshot),
        Ecosystem::PyPI => extract_pypi(snapshot),
        Ecosystem::Composer => extract_composer(snapshot),
        Ecosystem::RubyGems => extract_rubygems(snapshot),
        Ecosystem::Cargo => extract_cargo(snapshot),
        Ecosystem::Go => extract_go(snapshot),
        Ecosystem::Maven => extract_maven(snapshot),
    }
}

fn extract_npm(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts {
        distribution_kind: DistributionKind::Source,
        ..Default::default()
    };
    let Some(text) = snapshot.file_text("package.json") else {
        facts.notes.push("package.json missing or unreadable".into());
        return facts;
    };
    let doc: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            facts.notes.push(format!("manifest unparseable: package.json: {e}"));
            return facts;
        }
    };
    facts.declared_name = doc["name"].as_str().map(String::from);
    facts.declared_version = doc["version"].as_str().map(String::from);

    if let Some(scripts) = doc["scripts"].as_object() {
        let mut unrecognized = Vec::new();
        for (key, value) in scripts {
            let command = match value.as_str() {
                Some(s) => s.to_string(),
                None => {
                    facts
                        .notes
                        .push(format!("scripts.{key}: non-string value ignored"));
                    continue;
                }
            };
            if NPM_HOOKS.contains(&key.as_str()) {
                facts.install_hooks.insert(key.clone(), command);
            } else {
                unrecognized.push(key.clone());
            }
        }
        if !unrecognized.is_empty() {
            unrecognized.sort();
            facts.notes.push(format!(
                "unrecognized scripts (not install hooks): {}",
                unrecognized.join(", ")
            ));
        }
    }
    if facts.install_hooks.contains_key("prepublish") {
        facts
            .notes
            .push("prepublish hook is deprecated but still recognized".into());
    }

    let main = doc["main"].as_str().unwrap_or("index.js");
    let main_path = snapshot.resolve(main.trim_start_matches("./"));
    if snapshot.files.contains_key(&main_path) {
        facts.entry_points.push(main_path);
    }

    for section in ["dependencies", "devDependencies"] {
        if let Some(deps) = doc[section].as_object() {
            for (name, constraint) in deps {
                facts.declared_dependencies.push(DeclaredDependency {
                    name: name.clone(),
                    constraint: constraint.as_str().unwrap_or("").to_string(),
                });
            }
        }
    }
    facts.lockfile_present = snapshot.file("package-lock.json").is_some();
    facts
}

fn extract_composer(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts::default();
    facts.distribution_kind = if snapshot.source_format == Some(ArchiveFormat::Zip) {
        facts
            .notes
            .push("zip input treated as composer dist (pre-built) package".into());
        DistributionKind::Prebuilt
    } else {
        DistributionKind::Source
    };
    let Some(text) = snapshot.file_text("composer.json") else {
        facts.notes.push("composer.json missing or unreadable".into());
        return facts;
    };
    let doc: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            facts
                .notes
                .push(format!("manifest unparseable: composer.json: {e}"));
            return facts;
        }
    };
    facts.declared_name = doc["name"].as_str().map(String::from);
    facts.declared_version = doc["version"].as_str().map(String::from);

    if let Some(scripts) = doc["scripts"].as_object() {
        let mut unrecognized = Vec::new();
        for (key, value) in scripts {
            let command = match value {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .filter_map(|v| v.as_str())
                    .collect::<Vec<_>>()
                    .join(" && "),
                _ => {
                    facts
                        .notes
                        .push(format!("scripts.{key}: unsupported value shape ignored"));
                    continue;
                }
            };
            if COMPOSER_HOOKS.contains(&key.as_str()) {
                facts.install_hooks.insert(key.clone(), command);
            } else {
                unrecognized.push(key.clone());
            }
        }
        if !unrecognized.is_empty() {
            unrecognized.sort();
            facts.notes.push(format!(
                "unrecognized scripts (not install hooks): {}",
                unrecognized.join(", ")
            ));
        }
    }

    for section in ["require", "require-dev"] {
        if let Some(deps) = doc[section].as_object() {
            for (name, constraint) in deps {
                if !name.contains('/') {
                    continue; // php / ext-* platform requirements
                }
                facts.declared_dependencies.push(DeclaredDependency {
                    name: name.clone(),
                    constraint: constraint.as_str().unwrap_or("").to_string(),
                });
            }
        }
    }
    facts.lockfile_present = snapshot.file("composer.lock").is_some();
    facts
}

fn extract_pypi(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts::default();

    let is_wheel = snapshot
        .files
        .keys()
        .any(|p| p.split('/').any(|seg| seg.ends_with(".dist-info")));
    if is_wheel {
        // bdists carry no installation script and execute nothing at
        // install time.
        facts.distribution_kind = DistributionKind::Prebuilt;
        facts.notes.push("python wheel (pre-built distribution)".into());
        if let Some(metadata) = wheel_metadata(snapshot) {
            facts.declared_name = metadata.0;
            facts.declared_version = metadata.1;
        }
        collect_python_entry_points(snapshot, &mut facts);
        return facts;
    }

    if let Some(source) = snapshot.file_text("setup.py") {
        facts.distribution_kind = DistributionKind::Source;
        facts.build_script = Some("setup.py".into());
        let setup = extract_setup_facts(&snapshot.resolve("setup.py"), &source);
        facts.cmdclass_overrides = setup.cmdclass_overrides;
        facts.setup_top_level_statements = setup.top_level_statement_spans;
        facts.setup_imports_install_command = setup.imports_install_command;
        facts.setup_cmdclass_span = setup.cmdclass_span;
        facts.declared_name = setup.declared_name;
        facts.declared_version = setup.declared_version;
        for req in setup.install_requires {
            facts.declared_dependencies.push(req);
        }
        facts.notes.extend(setup.notes);
    }

    if let Some(pyproject) = snapshot.file_text("pyproject.toml") {
        if facts.build_script.is_none() {
            facts.distribution_kind = DistributionKind::Source;
        }
        match pyproject.parse::<toml::Table>() {
            Ok(table) => {
                if let Some(backend) = table
                    .get("build-system")
                    .and_then(|bs| bs.get("build-backend"))
                    .and_then(|b| b.as_str())
                {
                    if !backend.starts_with("setuptools") && !backend.starts_with("flit_core") {
                        facts.notes.push(format!(
                            "non-standard build-backend declared: {backend}"
                        ));
                    }
                }
                if let Some(project) = table.get("project") {
                    if facts.declared_name.is_none() {
                        facts.declared_name = project
                            .get("name")
                            .and_then(|v| v.as_str())
                            .map(String::from);
                    }
                    if facts.declared_version.is_none() {
                        facts.declared_version = project
                            .get("version")
                            .and_then(|v| v.as_str())
                            .map(String::from);
                    }
                }
            }
            Err(e) => facts
                .notes
                .push(format!("manifest unparseable: pyproject.toml: {e}")),
        }
    }

    collect_python_entry_points(snapshot, &mut facts);
    facts.lockfile_present = snapshot.file("requirements.txt").is_some();
    facts
}

fn wheel_metadata(snapshot: &PackageSnapshot) -> Option<(Option<String>, Option<String>)> {
    let path = snapshot
        .files
        .keys()
        .find(|p| p.ends_with(".dist-info/METADATA"))?;
    let text = String::from_utf8_lossy(snapshot.files[path].bytes()?).into_owned();
    let mut name = None;
    let mut version = None;
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("Name: ") {
            name = Some(v.trim().to_string());
        } else if let Some(v) = line.strip_prefix("Version: ") {
            version = Some(v.trim().to_string());
        }
        if line.is_empty() {
            break;
        }
    }
    Some((name, version))
}

fn collect_python_entry_points(snapshot: &PackageSnapshot, facts: &mut ManifestFacts) {
    for path in snapshot.files.keys() {
        if path.ends_with("__init__.py") && !path.contains("!/") {
            facts.entry_points.push(path.clone());
        }
    }
}

fn extract_rubygems(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts {
        distribution_kind: DistributionKind::Source,
        ..Default::default()
    };
    // Shallowest gemspec wins.
    let gemspec_path = snapshot
        .files
        .keys()
        .filter(|p| p.ends_with(".gemspec") && !p.contains("!/"))
        .min_by_key(|p| (p.matches('/').count(), p.as_str()));
    let Some(gemspec_path) = gemspec_path else {
        facts.notes.push("gemspec missing".into());
        return facts;
    };
    let Some(source) = snapshot
        .files
        .get(gemspec_path)
        .and_then(|c| c.bytes())
        .map(|b| String::from_utf8_lossy(b).into_owned())
    else {
        facts.notes.push("gemspec unreadable".into());
        return facts;
    };
    let gem = extract_gemspec_facts(gemspec_path, &source);
    facts.declared_name = gem.name;
    facts.declared_version = gem.version;
    facts.build_extensions = gem.extensions;
    facts.gemspec_extensions_span = gem.extensions_span;
    facts.notes.extend(gem.notes);
    let prefix = match gemspec_path.rsplit_once('/') {
        Some((dir, _)) => format!("{dir}/"),
        None => String::new(),
    };
    for file in gem.files {
        if file.ends_with(".rb") {
            let full = format!("{prefix}{file}");
            if snapshot.files.contains_key(&full) {
                facts.entry_points.push(full);
            }
        }
    }
    for (name, constraint) in gem.dependencies {
        facts
            .declared_dependencies
            .push(DeclaredDependency { name, constraint });
    }
    facts.lockfile_present = snapshot.file("Gemfile.lock").is_some();
    facts
}

fn extract_cargo(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts {
        distribution_kind: DistributionKind::Source,
        ..Default::default()
    };
    let Some(text) = snapshot.file_text("Cargo.toml") else {
        facts.notes.push("Cargo.toml missing or unreadable".into());
        return facts;
    };
    let table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            facts
                .notes
                .push(format!("manifest unparseable: Cargo.toml: {e}"));
            return facts;
        }
    };
    let package = table.get("package").and_then(|p| p.as_table());
    if let Some(pkg) = package {
        facts.declared_name = pkg.get("name").and_then(|v| v.as_str()).map(String::from);
        facts.declared_version = pkg
            .get("version")
            .and_then(|v| v.as_str())
            .map(String::from);
        match pkg.get("build") {
            Some(toml::Value::String(path)) => facts.build_script = Some(path.clone()),
            Some(toml::Value::Boolean(false)) => {
                facts
                    .notes
                    .push("Cargo.toml declares build = false; build.rs ignored".into());
            }
            _ => {
                if snapshot.file("build.rs").is_some() {
                    facts.build_script = Some("build.rs".into());
                }
            }
        }
    } else if snapshot.file("build.rs").is_some() {
        facts.build_script = Some("build.rs".into());
    }
    if let Some(deps) = table.get("dependencies").and_then(|d| d.as_table()) {
        for (name, value) in deps {
            let constraint = match value {
                toml::Value::String(s) => s.clone(),
                toml::Value::Table(t) => t
                    .get("version")
                    .and_then(|v| v.as_str())
                    .unwrap_or("")
                    .to_string(),
                _ => String::new(),
            };
            facts.declared_dependencies.push(DeclaredDependency {
                name: name.clone(),
                constraint,
            });
        }
    }
    facts.lockfile_present = snapshot.file("Cargo.lock").is_some();
    facts
}

fn extract_go(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts {
        distribution_kind: DistributionKind::Source,
        ..Default::default()
    };
    if let Some(gomod) = snapshot.file_text("go.mod") {
        for line in gomod.lines() {
            let line = line.trim();
            if let Some(module) = line.strip_prefix("module ") {
                facts.declared_name = Some(module.trim().to_string());
            } else if line.starts_with("require ") && !line.contains('(') {
                if let Some((name, version)) = parse_go_require(line.trim_start_matches("require "))
                {
                    facts
                        .declared_dependencies
                        .push(DeclaredDependency { name, constraint: version });
                }
            }
        }
        // require ( ... ) blocks
        if let Some(start) = gomod.find("require (") {
            for line in gomod[start..].lines().skip(1) {
                let line = line.trim();
                if line.starts_with(')') {
                    break;
                }
                if let Some((name, version)) = parse_go_require(line) {
                    facts
                        .declared_dependencies
                        .push(DeclaredDependency { name, constraint: version });
                }
            }
        }
    }

    for (path, content) in &snapshot.files {
        if !path.ends_with(".go") || path.contains("!/") {
            continue;
        }
        if path.ends_with("_test.go") {
            continue; // test routines are outside the scanned lifecycle
        }
        let Some(bytes) = content.bytes() else { continue };
        let file = lexscan::tokenize(path, bytes, Some(Language::Go));
        scan_go_tokens(&file, &mut facts);
    }
    facts.lockfile_present = snapshot.file("go.sum").is_some();
    facts
}

fn parse_go_require(line: &str) -> Option<(String, String)> {
    let mut parts = line.split_whitespace();
    let name = parts.next()?.to_string();
    let version = parts.next().unwrap_or("").to_string();
    if name.is_empty() || name.starts_with("//") {
        return None;
    }
    Some((name, version))
}

fn scan_go_tokens(file: &lexscan::TokenFile, facts: &mut ManifestFacts) {
    let tokens = &file.tokens;
    for (i, t) in tokens.iter().enumerate() {
        match t.kind {
            TokenKind::Identifier if t.text == "func" => {
                // func init() { ... }
                if let (Some(name), Some(paren)) = (tokens.get(i + 1), tokens.get(i + 2)) {
                    if name.kind == TokenKind::Identifier
                        && name.text == "init"
                        && paren.kind == TokenKind::Other
                        && paren.text == "("
                    {
                        facts.go_init_functions.push(SourceSpan::new(
                            file.path.clone(),
                            t.span.line_start,
                            name.span.line_end,
                            t.span.byte_start,
                            name.span.byte_end,
                        ));
                    }
                }
            }
            TokenKind::Identifier if t.text == "var" && t.line_first => {
                // var x = func(...) ... on one logical line
                let line = t.span.line_start;
                let mut saw_assign = false;
                for u in &tokens[i + 1..] {
                    if u.span.line_start != line {
                        break;
                    }
                    if u.kind == TokenKind::Assignment {
                        saw_assign = true;
                    }
                    if saw_assign && u.kind == TokenKind::Identifier && u.text == "func" {
                        facts.go_var_anon_initializers.push(SourceSpan::new(
                            file.path.clone(),
                            line,
                            u.span.line_end,
                            t.span.byte_start,
                            u.span.byte_end,
                        ));
                        break;
                    }
                }
            }
            TokenKind::ImportStmt => {
                for segment in t.text.split(['\n', ';']) {
                    let segment = segment.trim().trim_start_matches("import").trim();
                    if let Some(rest) = segment.strip_prefix('_') {
                        let rest = rest.trim();
                        if rest.starts_with('"') {
                            let path = rest.trim_matches('"');
                            facts.go_blank_imports.push(GoBlankImport {
                                path: path.to_string(),
                                span: t.span.clone(),
                            });
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

fn extract_maven(snapshot: &PackageSnapshot) -> ManifestFacts {
    let mut facts = ManifestFacts {
        distribution_kind: DistributionKind::Source,
        ..Default::default()
    };
    let Some(text) = snapshot.file_text("pom.xml") else {
        facts.notes.push("pom.xml missing or unreadable".into());
        return facts;
    };
    let pom_path = snapshot.resolve("pom.xml");
    let doc = match roxmltree::Document::parse(&text) {
        Ok(d) => d,
        Err(e) => {
            facts.notes.push(format!("manifest unparseable: pom.xml: {e}"));
            return facts;
        }
    };
    let root = doc.root_element();
    let child_text = |node: roxmltree::Node, name: &str| -> Option<String> {
        node.children()
            .find(|c| c.is_element() && c.tag_name().name() == name)
            .and_then(|c| c.text())
            .map(|s| s.trim().to_string())
    };

    let parent = root
        .children()
        .find(|c| c.is_element() && c.tag_name().name() == "parent");
    let group = child_text(root, "groupId")
        .or_else(|| parent.and_then(|p| child_text(p, "groupId")));
    let artifact = child_text(root, "artifactId");
    facts.declared_name = match (&group, &artifact) {
        (Some(g), Some(a)) => Some(format!("{g}:{a}")),
        (None, Some(a)) => Some(a.clone()),
        _ => None,
    };
    facts.declared_version = child_text(root, "version")
        .or_else(|| parent.and_then(|p| child_text(p, "version")));

    let span_of = |node: roxmltree::Node| -> SourceSpan {
        let range = node.range();
        let line_start = text[..range.start].matches('\n').count() as u32 + 1;
        let line_end = text[..range.end].matches('\n').count() as u32 + 1;
        SourceSpan::new(pom_path.clone(), line_start, line_end, range.start, range.end)
    };

    for plugin in root.descendants().filter(|n| {
        n.is_element()
            && n.tag_name().name() == "plugin"
            && n.ancestors()
                .any(|a| a.is_element() && a.tag_name().name() == "plugins")
            && n.ancestors()
                .any(|a| a.is_element() && a.tag_name().name() == "build")
    }) {
        // Maven defaults an omitted plugin groupId to the canonical group.
        let group = child_text(plugin, "groupId")
            .unwrap_or_else(|| "org.apache.maven.plugins".to_string());
        let artifact = child_text(plugin, "artifactId").unwrap_or_default();
        let version = child_text(plugin, "version");
        let mut phases = Vec::new();
        for phase in plugin
            .descendants()
            .filter(|n| n.is_element() && n.tag_name().name() == "phase")
        {
            if let Some(p) = phase.text() {
                phases.push(p.trim().to_string());
            }
        }
        let artifact_span = plugin
            .children()
            .find(|c| c.is_element() && c.tag_name().name() == "artifactId")
            .map(span_of);
        facts.plugins.push(MavenPlugin {
            group,
            artifact,
            version,
            phases,
            span: Some(span_of(plugin)),
            artifact_span,
        });
    }

    for dep in root.descendants().filter(|n| {
        n.is_element()
            && n.tag_name().name() == "dependency"
            && n.ancestors()
                .any(|a| a.is_element() && a.tag_name().name() == "dependencies")
            && !n
                .ancestors()
                .any(|a| a.is_element() && a.tag_name().name() == "plugin")
    }) {
        let g = child_text(dep, "groupId").unwrap_or_default();
        let a = child_text(dep, "artifactId").unwrap_or_default();
        let v = child_text(dep, "version").unwrap_or_default();
        if !a.is_empty() {
            facts.declared_dependencies.push(DeclaredDependency {
                name: format!("{g}:{a}"),
                constraint: v,
            });
        }
    }
    facts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScanConfig;
    use crate::ingest;
    use std::collections::BTreeMap;

    fn snapshot_from(files: &[(&str, &str)]) -> PackageSnapshot {
        let mut map = BTreeMap::new();
        for (path, content) in files {
            map.insert(
                path.to_string(),
                crate::ingest::FileContent::Loaded(content.as_bytes().to_vec()),
            );
        }
        let (eco, marker, _) =
            ingest::detect_ecosystem(map.keys().map(|s| s.as_str())).unwrap();
        let root_prefix = match marker.rsplit_once('/') {
            Some((dir, _)) => format!("{dir}/"),
            None => String::new(),
        };
        PackageSnapshot {
            coords: crate::model::PackageCoordinates::new(eco, "", ""),
            files: map,
            facts: ManifestFacts::default(),
            root_prefix,
            notes: Vec::new(),
            source_format: None,
        }
    }

    const LISTING1_PACKAGE_JSON: &str = r#"{
    "name": "example",
    "version": "1.0.0",
    "scripts": {
        "pre-install": "** COMMANDS **"
    }
}
"#;

    #[test]
    fn npm_install_hook_extracted() {
        let snap = snapshot_from(&[("package.json", LISTING1_PACKAGE_JSON)]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.install_hooks.len(), 1);
        assert_eq!(facts.install_hooks["pre-install"], "** COMMANDS **");
        assert_eq!(facts.declared_name.as_deref(), Some("example"));
        assert_eq!(facts.distribution_kind, DistributionKind::Source);
    }

    #[test]
    fn npm_minimal_manifest_has_no_hooks() {
        let snap = snapshot_from(&[("package.json", r#"{"name":"x","version":"0.1.0"}"#)]);
        let facts = extract_facts(&snap);
        assert!(facts.install_hooks.is_empty());
        assert!(facts.entry_points.is_empty());
        assert_eq!(facts.distribution_kind, DistributionKind::Source);
    }

    #[test]
    fn npm_unrecognized_scripts_noted_not_whitelisted() {
        let manifest = r#"{"name":"x","scripts":{"test":"jest","build":"tsc","postinstall":"echo hi"}}"#;
        let snap = snapshot_from(&[("package.json", manifest)]);
        let facts = extract_facts(&snap);
        assert!(facts.install_hooks.is_empty());
        let note = facts
            .notes
            .iter()
            .find(|n| n.contains("unrecognized scripts"))
            .unwrap();
        assert!(note.contains("postinstall"));
        assert!(note.contains("test"));
    }

    #[test]
    fn npm_main_entry_point_resolved() {
        let snap = snapshot_from(&[
            ("package.json", r#"{"name":"x","main":"./lib/index.js"}"#),
            ("lib/index.js", "module.exports = 1;"),
        ]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.entry_points, vec!["lib/index.js".to_string()]);
    }

    #[test]
    fn npm_default_main_index_js() {
        let snap = snapshot_from(&[
            ("package.json", r#"{"name":"x"}"#),
            ("index.js", "console.log(1);"),
        ]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.entry_points, vec!["index.js".to_string()]);
    }

    #[test]
    fn composer_hooks_and_lockfile() {
        let manifest = r#"{
            "name": "vendor/pkg",
            "scripts": {
                "pre-install-cmd": "echo pre",
                "post-install-cmd": ["echo a", "echo b"],
                "custom-task": "echo no"
            }
        }"#;
        let snap = snapshot_from(&[
            ("composer.json", manifest),
            ("composer.lock", r#"{"packages":[]}"#),
        ]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.install_hooks.len(), 2);
        assert_eq!(facts.install_hooks["post-install-cmd"], "echo a && echo b");
        assert!(facts.lockfile_present);
        assert!(facts.notes.iter().any(|n| n.contains("custom-task")));
    }

    #[test]
    fn cargo_build_rs_discovered_without_build_key() {
        let snap = snapshot_from(&[
            ("Cargo.toml", "[package]\nname = \"c\"\nversion = \"0.1.0\"\n"),
            ("build.rs", "fn main() {}\n"),
        ]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.build_script.as_deref(), Some("build.rs"));
    }

    #[test]
    fn cargo_build_field_overrides_and_false_disables() {
        let snap = snapshot_from(&[(
            "Cargo.toml",
            "[package]\nname = \"c\"\nversion = \"0.1.0\"\nbuild = \"scripts/build.rs\"\n",
        )]);
        assert_eq!(
            extract_facts(&snap).build_script.as_deref(),
            Some("scripts/build.rs")
        );

        let snap2 = snapshot_from(&[
            (
                "Cargo.toml",
                "[package]\nname = \"c\"\nversion = \"0.1.0\"\nbuild = false\n",
            ),
            ("build.rs", "fn main() {}\n"),
        ]);
        let facts2 = extract_facts(&snap2);
        assert!(facts2.build_script.is_none());
        assert!(facts2.notes.iter().any(|n| n.contains("build = false")));
    }

    #[test]
    fn gemspec_extensions_listing() {
        let gemspec = "Gem::Specification.new do |s|\n  s.name        = \"example\"\n  s.version     = \"1.0.0\"\n  s.summary     = \"example\"\n  s.extensions  = [\"extconf.rb\"]\nend\n";
        let snap = snapshot_from(&[("example.gemspec", gemspec)]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.build_extensions, vec!["extconf.rb".to_string()]);
        assert_eq!(facts.declared_name.as_deref(), Some("example"));
    }

    #[test]
    fn go_init_and_blank_import_facts() {
        let gofile = "package evil\n\nimport (\n\t\"os/exec\"\n\t_ \"embed\"\n)\n\nfunc init() {\n\texec.Command(\"true\")\n}\n\nvar hook = func() int { return 1 }()\n";
        let snap = snapshot_from(&[
            ("go.mod", "module example.com/evil\n\ngo 1.21\n"),
            ("main.go", gofile),
        ]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.go_init_functions.len(), 1);
        assert_eq!(facts.go_blank_imports.len(), 1);
        assert_eq!(facts.go_blank_imports[0].path, "embed");
        assert_eq!(facts.go_var_anon_initializers.len(), 1);
        assert_eq!(facts.declared_name.as_deref(), Some("example.com/evil"));
    }

    #[test]
    fn go_test_files_skipped() {
        let snap = snapshot_from(&[
            ("go.mod", "module m\n"),
            ("a_test.go", "package m\n\nfunc init() {}\n"),
        ]);
        let facts = extract_facts(&snap);
        assert!(facts.go_init_functions.is_empty());
    }

    #[test]
    fn wheel_is_prebuilt_without_build_script() {
        let snap = snapshot_from(&[
            ("pkg-1.0.dist-info/METADATA", "Name: pkg\nVersion: 1.0\n\n"),
            ("pkg/__init__.py", ""),
            ("setup.py", "import os; os.system('x')\n"),
        ]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.distribution_kind, DistributionKind::Prebuilt);
        assert!(facts.build_script.is_none());
        assert!(facts.setup_top_level_statements.is_empty());
        assert_eq!(facts.declared_name.as_deref(), Some("pkg"));
    }

    #[test]
    fn maven_plugins_with_phases() {
        let pom = r#"<?xml version="1.0"?>
<project xmlns="http://maven.apache.org/POM/4.0.0">
  <groupId>com.example</groupId>
  <artifactId>demo</artifactId>
  <version>1.0</version>
  <build>
    <plugins>
      <plugin>
        <groupId>com.github.codingandcoding</groupId>
        <artifactId>maven-compiler-plugin</artifactId>
        <version>3.9.0</version>
        <executions>
          <execution>
            <phase>compile</phase>
          </execution>
        </executions>
      </plugin>
      <plugin>
        <artifactId>maven-surefire-plugin</artifactId>
      </plugin>
    </plugins>
  </build>
</project>
"#;
        let snap = snapshot_from(&[("pom.xml", pom)]);
        let facts = extract_facts(&snap);
        assert_eq!(facts.plugins.len(), 2);
        assert_eq!(facts.plugins[0].group, "com.github.codingandcoding");
        assert_eq!(facts.plugins[0].artifact, "maven-compiler-plugin");
        assert_eq!(facts.plugins[0].phases, vec!["compile".to_string()]);
        // Omitted groupId defaults to the canonical group.
        assert_eq!(facts.plugins[1].group, "org.apache.maven.plugins");
        assert_eq!(facts.declared_name.as_deref(), Some("com.example:demo"));
    }

    #[test]
    fn malformed_manifest_yields_note_not_abort() {
        let snap = snapshot_from(&[("package.json", "{not json")]);
        let facts = extract_facts(&snap);
        assert!(facts
            .notes
            .iter()
            .any(|n| n.contains("manifest unparseable")));
        assert!(facts.install_hooks.is_empty());
    }

    #[test]
    fn extraction_is_pure() {
        let snap = snapshot_from(&[("package.json", LISTING1_PACKAGE_JSON)]);
        assert_eq!(extract_facts(&snap), extract_facts(&snap));
    }

    #[test]
    fn hooks_only_ever_from_whitelist_fuzz() {
        // Arbitrary script keys must never leak into install_hooks.
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let strategy = proptest::collection::btree_map(
            "[a-z-]{1,20}",
            "[ -~]{0,30}",
            0..8,
        );
        runner
            .run(&strategy, |scripts| {
                let mut manifest = serde_json::json!({"name": "f", "scripts": {}});
                for (k, v) in &scripts {
                    manifest["scripts"][k] = serde_json::Value::String(v.clone());
                }
                let snap = snapshot_from(&[("package.json", &manifest.to_string())]);
                let facts = extract_facts(&snap);
                for key in facts.install_hooks.keys() {
                    prop_assert!(NPM_HOOKS.contains(&key.as_str()));
                }
                // Composer side with the same keys.
                let mut cmanifest = serde_json::json!({"name": "v/p", "scripts": {}});
                for (k, v) in &scripts {
                    cmanifest["scripts"][k] = serde_json::Value::String(v.clone());
                }
                let csnap = snapshot_from(&[("composer.json", &cmanifest.to_string())]);
                let cfacts = extract_facts(&csnap);
                for key in cfacts.install_hooks.keys() {
                    prop_assert!(COMPOSER_HOOKS.contains(&key.as_str()));
                }
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn npm_tarball_prefix_manifest_found() {
        // Ensure prefix resolution works end to end through ingest.
        let mut builder = tar::Builder::new(Vec::new());
        let content = LISTING1_PACKAGE_JSON.as_bytes();
        let mut header = tar::Header::new_gnu();
        header.set_size(content.len() as u64);
        header.set_mode(0o644);
        header.set_cksum();
        builder
            .append_data(&mut header, "package/package.json", content)
            .unwrap();
        let bytes = builder.into_inner().unwrap();
        let snap =
            ingest::open_archive(&bytes, ingest::ArchiveFormat::Tar, &ScanConfig::default())
                .unwrap();
        let facts = extract_facts(&snap);
        assert_eq!(facts.install_hooks.len(), 1);
    }
}
