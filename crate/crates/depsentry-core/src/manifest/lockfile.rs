//! Lockfile parsing into dependency edges.
//!
//! Supported formats: package-lock.json (v1-v3), composer.lock,
//! Gemfile.lock, Cargo.lock, go.sum (names and versions only), and flat
//! requirements.txt. Direct vs transitive is distinguished where the format
//! encodes it; otherwise all edges are marked direct with a note.

use super::{DependencyEdge, EdgeKind};
use crate::model::{Ecosystem, PackageCoordinates};

#[derive(Debug, thiserror::Error)]
pub enum LockfileError {
    #[error("lockfile unparseable: {0}")]
    Unparseable(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LockfileParse {
    pub edges: Vec<DependencyEdge>,
    pub notes: Vec<String>,
}

/// The synthetic root used for edges whose requiring side is the scanned
/// package itself; tree building replaces it with the real coordinates.
pub fn root_placeholder(ecosystem: Ecosystem) -> PackageCoordinates {
    PackageCoordinates::new(ecosystem, "", "")
}

/// Parse the ecosystem's lockfile format.
pub fn parse_lockfile(ecosystem: Ecosystem, bytes: &[u8]) -> Result<LockfileParse, LockfileError> {
    let text = String::from_utf8_lossy(bytes);
    if text.trim().is_empty() {
        return Err(LockfileError::Unparseable("empty file".into()));
    }
    match ecosystem {
        Ecosystem::Npm => parse_package_lock(&text),
        Ecosystem::Composer => parse_composer_lock(&text),
        Ecosystem::RubyGems => parse_gemfile_lock(&text),
        Ecosystem::Cargo => parse_cargo_lock(&text),
        Ecosystem::Go => parse_go_sum(&text),
        Ecosystem::PyPI => parse_requirements(&text),
        Ecosystem::Maven => Err(LockfileError::Unparseable(
            "maven has no supported lockfile format".into(),
        )),
    }
}

fn parse_package_lock(text: &str) -> Result<LockfileParse, LockfileError> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LockfileError::Unparseable(e.to_string()))?;
    let mut parse = LockfileParse::default();
    let root = root_placeholder(Ecosystem::Npm);

    if let Some(packages) = doc["packages"].as_object() {
        // v2/v3: keys are install paths; resolve each requirer's deps by
        // walking up the node_modules hierarchy.
        let coords_of = |key: &str| -> Option<PackageCoordinates> {
            if key.is_empty() {
                return Some(root.clone());
            }
            let name = key.rsplit("node_modules/").next()?;
            let version = packages[key]["version"].as_str().unwrap_or("");
            Some(PackageCoordinates::new(Ecosystem::Npm, name, version))
        };
        let resolve = |from_key: &str, dep: &str| -> Option<String> {
            let mut base = from_key.to_string();
            loop {
                let candidate = if base.is_empty() {
                    format!("node_modules/{dep}")
                } else {
                    format!("{base}/node_modules/{dep}")
                };
                if packages.contains_key(&candidate) {
                    return Some(candidate);
                }
                match base.rfind("/node_modules/") {
                    Some(idx) => base.truncate(idx),
                    None => {
                        if base.is_empty() {
                            return None;
                        }
                        base.clear();
                    }
                }
            }
        };
        for (key, entry) in packages {
            let Some(from) = coords_of(key) else { continue };
            let kind = if key.is_empty() {
                EdgeKind::Direct
            } else {
                EdgeKind::Transitive
            };
            for section in ["dependencies", "devDependencies"] {
                let Some(deps) = entry[section].as_object() else {
                    continue;
                };
                for dep in deps.keys() {
                    let Some(target_key) = resolve(key, dep) else {
                        parse
                            .notes
                            .push(format!("unresolved lock entry: {key} -> {dep}"));
                        continue;
                    };
                    let Some(to) = coords_of(&target_key) else { continue };
                    if from != to {
                        parse.edges.push(DependencyEdge {
                            from: from.clone(),
                            to,
                            kind,
                        });
                    }
                }
            }
        }
        return Ok(parse);
    }

    if let Some(deps) = doc["dependencies"].as_object() {
        // v1: nested dependency objects.
        fn walk(
            deps: &serde_json::Map<String, serde_json::Value>,
            from: &PackageCoordinates,
            kind: EdgeKind,
            edges: &mut Vec<DependencyEdge>,
        ) {
            for (name, entry) in deps {
                let version = entry["version"].as_str().unwrap_or("");
                let to = PackageCoordinates::new(Ecosystem::Npm, name, version);
                if *from != to {
                    edges.push(DependencyEdge {
                        from: from.clone(),
                        to: to.clone(),
                        kind,
                    });
                }
                if let Some(nested) = entry["dependencies"].as_object() {
                    walk(nested, &to, EdgeKind::Transitive, edges);
                }
            }
        }
        walk(deps, &root, EdgeKind::Direct, &mut parse.edges);
        return Ok(parse);
    }

    Err(LockfileError::Unparseable(
        "package-lock.json has neither packages nor dependencies".into(),
    ))
}

fn parse_composer_lock(text: &str) -> Result<LockfileParse, LockfileError> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LockfileError::Unparseable(e.to_string()))?;
    let mut parse = LockfileParse::default();
    let root = root_placeholder(Ecosystem::Composer);

    let mut locked: Vec<(String, String, Vec<String>)> = Vec::new();
    for section in ["packages", "packages-dev"] {
        if let Some(packages) = doc[section].as_array() {
            for pkg in packages {
                let Some(name) = pkg["name"].as_str() else { continue };
                let version = pkg["version"].as_str().unwrap_or("");
                let requires = pkg["require"]
                    .as_object()
                    .map(|reqs| {
                        reqs.keys()
                            .filter(|k| k.contains('/'))
                            .cloned()
                            .collect::<Vec<_>>()
                    })
                    .unwrap_or_default();
                locked.push((name.to_string(), version.to_string(), requires));
            }
        }
    }
    if locked.is_empty() {
        return Err(LockfileError::Unparseable(
            "composer.lock lists no packages".into(),
        ));
    }
    let coords = |name: &str| -> Option<PackageCoordinates> {
        locked
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(n, v, _)| PackageCoordinates::new(Ecosystem::Composer, n.clone(), v.clone()))
    };
    let mut required_by_other: Vec<&str> = Vec::new();
    for (name, version, requires) in &locked {
        let from = PackageCoordinates::new(Ecosystem::Composer, name.clone(), version.clone());
        for req in requires {
            if let Some(to) = coords(req) {
                if from != to {
                    required_by_other.push(req.as_str());
                    parse.edges.push(DependencyEdge {
                        from: from.clone(),
                        to,
                        kind: EdgeKind::Transitive,
                    });
                }
            }
        }
    }
    // Packages nothing else requires hang off the root as direct deps.
    for (name, version, _) in &locked {
        if !required_by_other.contains(&name.as_str()) {
            parse.edges.push(DependencyEdge {
                from: root.clone(),
                to: PackageCoordinates::new(Ecosystem::Composer, name.clone(), version.clone()),
                kind: EdgeKind::Direct,
            });
        }
    }
    Ok(parse)
}

fn parse_gemfile_lock(text: &str) -> Result<LockfileParse, LockfileError> {
    let mut parse = LockfileParse::default();
    let root = root_placeholder(Ecosystem::RubyGems);
    let mut in_specs = false;
    let mut in_dependencies = false;
    let mut versions: Vec<(String, String)> = Vec::new();
    let mut spec_edges: Vec<(String, String)> = Vec::new();
    let mut current_pkg: Option<String> = None;
    let mut direct: Vec<String> = Vec::new();

    for line in text.lines() {
        let trimmed = line.trim_end();
        if trimmed == "DEPENDENCIES" {
            in_dependencies = true;
            in_specs = false;
            continue;
        }
        if !trimmed.starts_with(' ') {
            in_specs = false;
            in_dependencies = false;
            continue;
        }
        if trimmed.trim() == "specs:" {
            in_specs = true;
            continue;
        }
        if in_specs {
            let indent = trimmed.len() - trimmed.trim_start().len();
            let body = trimmed.trim_start();
            if indent == 4 {
                let (name, version) = split_gem_spec(body);
                current_pkg = Some(name.clone());
                versions.push((name, version));
            } else if indent >= 6 {
                if let Some(pkg) = &current_pkg {
                    let (dep, _) = split_gem_spec(body);
                    spec_edges.push((pkg.clone(), dep));
                }
            }
        } else if in_dependencies {
            let body = trimmed.trim_start();
            let (name, _) = split_gem_spec(body);
            direct.push(name.trim_end_matches('!').to_string());
        }
    }
    if versions.is_empty() {
        return Err(LockfileError::Unparseable(
            "Gemfile.lock lists no specs".into(),
        ));
    }
    let version_of = |name: &str| -> String {
        versions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .unwrap_or_default()
    };
    for name in &direct {
        parse.edges.push(DependencyEdge {
            from: root.clone(),
            to: PackageCoordinates::new(Ecosystem::RubyGems, name.clone(), version_of(name)),
            kind: EdgeKind::Direct,
        });
    }
    for (from_name, to_name) in &spec_edges {
        let from = PackageCoordinates::new(
            Ecosystem::RubyGems,
            from_name.clone(),
            version_of(from_name),
        );
        let to =
            PackageCoordinates::new(Ecosystem::RubyGems, to_name.clone(), version_of(to_name));
        if from != to {
            parse.edges.push(DependencyEdge {
                from,
                to,
                kind: EdgeKind::Transitive,
            });
        }
    }
    Ok(parse)
}

fn split_gem_spec(body: &str) -> (String, String) {
    match body.split_once(" (") {
        Some((name, rest)) => (
            name.trim().to_string(),
            rest.trim_end_matches(')').to_string(),
        ),
        None => (body.trim().to_string(), String::new()),
    }
}

fn parse_cargo_lock(text: &str) -> Result<LockfileParse, LockfileError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| LockfileError::Unparseable(e.to_string()))?;
    let mut parse = LockfileParse::default();
    let root = root_placeholder(Ecosystem::Cargo);
    let packages = table
        .get("package")
        .and_then(|p| p.as_array())
        .ok_or_else(|| LockfileError::Unparseable("Cargo.lock lists no packages".into()))?;

    struct Entry {
        name: String,
        version: String,
        deps: Vec<String>,
    }
    let mut entries = Vec::new();
    for pkg in packages {
        let name = pkg
            .get("name")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let version = pkg
            .get("version")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let deps = pkg
            .get("dependencies")
            .and_then(|d| d.as_array())
            .map(|arr| {
                arr.iter()
                    .filter_map(|v| v.as_str())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default();
        entries.push(Entry { name, version, deps });
    }
    if entries.is_empty() {
        return Err(LockfileError::Unparseable(
            "Cargo.lock lists no packages".into(),
        ));
    }

    let coords = |spec: &str| -> PackageCoordinates {
        // Spec is "name" or "name version".
        let mut parts = spec.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let version = parts.next().map(String::from).unwrap_or_else(|| {
            entries
                .iter()
                .find(|e| e.name == name)
                .map(|e| e.version.clone())
                .unwrap_or_default()
        });
        PackageCoordinates::new(Ecosystem::Cargo, name, version)
    };

    let mut depended_on: Vec<String> = Vec::new();
    for entry in &entries {
        let from = PackageCoordinates::new(Ecosystem::Cargo, &entry.name, &entry.version);
        for dep in &entry.deps {
            let to = coords(dep);
            depended_on.push(to.name.clone());
            if from != to {
                parse.edges.push(DependencyEdge {
                    from: from.clone(),
                    to,
                    kind: EdgeKind::Transitive,
                });
            }
        }
    }
    for entry in &entries {
        if !depended_on.contains(&entry.name) {
            let to = PackageCoordinates::new(Ecosystem::Cargo, &entry.name, &entry.version);
            parse.edges.push(DependencyEdge {
                from: root.clone(),
                to,
                kind: EdgeKind::Direct,
            });
        }
    }
    Ok(parse)
}

fn parse_go_sum(text: &str) -> Result<LockfileParse, LockfileError> {
    let mut parse = LockfileParse::default();
    let root = root_placeholder(Ecosystem::Go);
    let mut seen: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let (Some(module), Some(version)) = (parts.next(), parts.next()) else {
            continue;
        };
        let version = version.trim_end_matches("/go.mod").to_string();
        let pair = (module.to_string(), version);
        if !seen.contains(&pair) {
            seen.push(pair);
        }
    }
    if seen.is_empty() {
        return Err(LockfileError::Unparseable("go.sum lists no modules".into()));
    }
    parse.notes.push(
        "go.sum records names and versions without graph structure; all edges marked direct"
            .into(),
    );
    for (module, version) in seen {
        parse.edges.push(DependencyEdge {
            from: root.clone(),
            to: PackageCoordinates::new(Ecosystem::Go, module, version),
            kind: EdgeKind::Direct,
        });
    }
    Ok(parse)
}

fn parse_requirements(text: &str) -> Result<LockfileParse, LockfileError> {
    let mut parse = LockfileParse::default();
    let root = root_placeholder(Ecosystem::PyPI);
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('-') {
            parse.notes.push(format!("requirements option skipped: {line}"));
            continue;
        }
        let spec = line.split(['#', ';']).next().unwrap_or("").trim();
        let name_end = spec
            .find(['=', '<', '>', '!', '~', ' ', '['])
            .unwrap_or(spec.len());
        let name = &spec[..name_end];
        if name.is_empty() {
            continue;
        }
        let version = spec
            .split_once("==")
            .map(|(_, v)| v.trim().to_string())
            .unwrap_or_default();
        parse.edges.push(DependencyEdge {
            from: root.clone(),
            to: PackageCoordinates::new(Ecosystem::PyPI, name, version),
            kind: EdgeKind::Direct,
        });
    }
    parse
        .notes
        .push("requirements.txt is flat; all edges marked direct".into());
    if parse.edges.is_empty() {
        return Err(LockfileError::Unparseable(
            "requirements.txt lists no requirements".into(),
        ));
    }
    Ok(parse)
}
