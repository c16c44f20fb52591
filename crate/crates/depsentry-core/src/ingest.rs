//! Package ingestion: turn a directory or archive into an immutable
//! [`PackageSnapshot`], detect the ecosystem, and (behind an explicit flag)
//! fetch archives from registries.
//!
//! Nothing in this module executes, evaluates, or imports content from the
//! scanned package.

use crate::config::ScanConfig;
use crate::manifest::ManifestFacts;
use crate::model::{Ecosystem, PackageCoordinates};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("no ecosystem marker file found")]
    NoEcosystemDetected,
    #[error("archive corrupt: {0}")]
    ArchiveCorrupt(String),
    #[error("path traversal rejected: {0}")]
    PathTraversalRejected(String),
    #[error("unsupported archive format: {0}")]
    UnsupportedFormat(String),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchiveFormat {
    Tar,
    TarGz,
    Zip,
}

impl ArchiveFormat {
    /// Infer the format from a file name; `.whl`, `.jar`, `.crate`, `.gem`
    /// map onto their container formats.
    pub fn from_name(name: &str) -> Option<ArchiveFormat> {
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(".tar.gz") || lower.ends_with(".tgz") || lower.ends_with(".crate") {
            Some(ArchiveFormat::TarGz)
        } else if lower.ends_with(".tar") || lower.ends_with(".gem") {
            Some(ArchiveFormat::Tar)
        } else if lower.ends_with(".zip")
            || lower.ends_with(".whl")
            || lower.ends_with(".jar")
            || lower.ends_with(".egg")
        {
            Some(ArchiveFormat::Zip)
        } else {
            None
        }
    }
}

/// File content, or just its size when it exceeded the scan cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileContent {
    Loaded(Vec<u8>),
    Skipped { size: u64 },
}

impl FileContent {
    pub fn bytes(&self) -> Option<&[u8]> {
        match self {
            FileContent::Loaded(b) => Some(b),
            FileContent::Skipped { .. } => None,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            FileContent::Loaded(b) => b.len() as u64,
            FileContent::Skipped { size } => *size,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Immutable view of one package: coordinates, a lexicographically ordered
/// file map, and the manifest facts filled in by the manifest module.
#[derive(Debug, Clone, PartialEq)]
pub struct PackageSnapshot {
    pub coords: PackageCoordinates,
    pub files: BTreeMap<String, FileContent>,
    pub facts: ManifestFacts,
    /// Directory prefix containing the ecosystem marker ("" or e.g.
    /// "package/"); manifest lookups are relative to it.
    pub root_prefix: String,
    /// Ingest observations: skipped files, symlinks, nested archives,
    /// ambiguous markers.
    pub notes: Vec<String>,
    /// Format of the archive the snapshot came from, if any.
    pub source_format: Option<ArchiveFormat>,
}

impl PackageSnapshot {
    /// Content of a path relative to the package root.
    pub fn file(&self, rel: &str) -> Option<&[u8]> {
        self.files
            .get(&self.resolve(rel))
            .and_then(|c| c.bytes())
    }

    pub fn file_text(&self, rel: &str) -> Option<String> {
        self.file(rel)
            .map(|b| String::from_utf8_lossy(b).into_owned())
    }

    /// Join a package-root-relative path onto the marker prefix.
    pub fn resolve(&self, rel: &str) -> String {
        let rel = rel.trim_start_matches("./");
        if self.root_prefix.is_empty() {
            rel.to_string()
        } else {
            format!("{}{}", self.root_prefix, rel)
        }
    }

    /// Paths under the package root, with the prefix stripped.
    pub fn root_relative_paths(&self) -> Vec<String> {
        self.files
            .keys()
            .filter_map(|p| p.strip_prefix(&self.root_prefix).map(|s| s.to_string()))
            .collect()
    }

    pub fn nested_archive_count(&self) -> usize {
        self.files
            .keys()
            .filter(|p| !p.contains("!/") && ArchiveFormat::from_name(p).is_some())
            .count()
    }
}

/// Normalize an archive/directory entry path. Rejects absolute paths and
/// any `..` escape instead of silently fixing them.
pub fn normalize_entry_path(raw: &str) -> Result<String, IngestError> {
    let unified = raw.replace('\\', "/");
    if unified.starts_with('/') || unified.chars().nth(1) == Some(':') {
        return Err(IngestError::PathTraversalRejected(raw.to_string()));
    }
    let mut parts: Vec<&str> = Vec::new();
    for part in unified.split('/') {
        match part {
            "" | "." => continue,
            ".." => {
                if parts.pop().is_none() {
                    return Err(IngestError::PathTraversalRejected(raw.to_string()));
                }
            }
            p => parts.push(p),
        }
    }
    if parts.is_empty() {
        return Err(IngestError::PathTraversalRejected(raw.to_string()));
    }
    Ok(parts.join("/"))
}

/// Pick the ecosystem whose marker file sits at the shallowest depth;
/// ties break by the fixed precedence npm > pypi > composer > rubygems >
/// cargo > go > maven. Returns the marker path and a note when the choice
/// was ambiguous.
pub fn detect_ecosystem<'a, I>(paths: I) -> Result<(Ecosystem, String, Option<String>), IngestError>
where
    I: IntoIterator<Item = &'a str>,
{
    fn marker_for(path: &str) -> Option<Ecosystem> {
        let base = path.rsplit('/').next().unwrap_or(path);
        match base {
            "package.json" => Some(Ecosystem::Npm),
            "setup.py" | "pyproject.toml" => Some(Ecosystem::PyPI),
            "composer.json" => Some(Ecosystem::Composer),
            "Cargo.toml" => Some(Ecosystem::Cargo),
            "go.mod" => Some(Ecosystem::Go),
            "pom.xml" => Some(Ecosystem::Maven),
            _ if base.ends_with(".gemspec") => Some(Ecosystem::RubyGems),
            "METADATA" | "WHEEL" => {
                // *.dist-info/METADATA marks a Python wheel.
                let parent = path.rsplit('/').nth(1)?;
                parent.ends_with(".dist-info").then_some(Ecosystem::PyPI)
            }
            _ => None,
        }
    }

    let mut best: Option<(usize, Ecosystem, String)> = None;
    let mut ambiguous: Vec<(usize, Ecosystem)> = Vec::new();
    for path in paths {
        if path.contains("!/") {
            continue; // nested-archive contents never pick the ecosystem
        }
        let Some(eco) = marker_for(path) else {
            continue;
        };
        let depth = path.matches('/').count();
        ambiguous.push((depth, eco));
        let better = match &best {
            None => true,
            Some((d, e, _)) => depth < *d || (depth == *d && eco < *e),
        };
        if better {
            best = Some((depth, eco, path.to_string()));
        }
    }
    let (depth, eco, marker) = best.ok_or(IngestError::NoEcosystemDetected)?;
    let rivals: Vec<Ecosystem> = {
        let mut set: Vec<Ecosystem> = ambiguous
            .iter()
            .filter(|(d, e)| *d == depth && *e != eco)
            .map(|(_, e)| *e)
            .collect();
        set.sort();
        set.dedup();
        set
    };
    let note = (!rivals.is_empty()).then(|| {
        format!(
            "ambiguous ecosystem markers at depth {depth}: chose {eco} over {}",
            rivals
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    });
    Ok((eco, marker, note))
}

/// Read a directory tree into a snapshot. Symlinks are recorded but never
/// followed; `.git` directories are skipped.
pub fn open_dir(path: &Path, config: &ScanConfig) -> Result<PackageSnapshot, IngestError> {
    let mut files = BTreeMap::new();
    let mut notes = Vec::new();
    for entry in walkdir::WalkDir::new(path)
        .follow_links(false)
        .sort_by_file_name()
    {
        let entry = entry.map_err(|e| {
            IngestError::Io(
                path.display().to_string(),
                e.into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walk error")),
            )
        })?;
        let rel = entry
            .path()
            .strip_prefix(path)
            .unwrap_or(entry.path())
            .to_string_lossy()
            .replace('\\', "/");
        if rel.is_empty() || rel.split('/').any(|p| p == ".git") {
            continue;
        }
        if entry.path_is_symlink() {
            notes.push(format!("symlink recorded but not followed: {rel}"));
            continue;
        }
        if !entry.file_type().is_file() {
            continue;
        }
        let size = entry.metadata().map(|m| m.len()).unwrap_or(0);
        if size > config.max_file_bytes {
            notes.push(format!("{rel}: {size} bytes exceeds scan cap, content skipped"));
            files.insert(rel, FileContent::Skipped { size });
            continue;
        }
        let bytes = std::fs::read(entry.path())
            .map_err(|e| IngestError::Io(rel.clone(), e))?;
        files.insert(rel, FileContent::Loaded(bytes));
    }
    finish_snapshot(files, notes, config, None, 1)
}

/// Open archive bytes with a format hint.
pub fn open_archive(
    bytes: &[u8],
    format: ArchiveFormat,
    config: &ScanConfig,
) -> Result<PackageSnapshot, IngestError> {
    let mut files = BTreeMap::new();
    let mut notes = Vec::new();
    extract_into(bytes, format, "", &mut files, &mut notes, config)?;
    finish_snapshot(files, notes, config, Some(format), 1)
}

/// Open a filesystem path: directories are walked, archive files are
/// extracted based on their extension.
pub fn open_path(path: &Path, config: &ScanConfig) -> Result<PackageSnapshot, IngestError> {
    let meta = std::fs::metadata(path)
        .map_err(|e| IngestError::Io(path.display().to_string(), e))?;
    if meta.is_dir() {
        return open_dir(path, config);
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let format = ArchiveFormat::from_name(&name)
        .ok_or_else(|| IngestError::UnsupportedFormat(name.clone()))?;
    let bytes =
        std::fs::read(path).map_err(|e| IngestError::Io(path.display().to_string(), e))?;
    open_archive(&bytes, format, config)
}

fn extract_into(
    bytes: &[u8],
    format: ArchiveFormat,
    prefix: &str,
    files: &mut BTreeMap<String, FileContent>,
    notes: &mut Vec<String>,
    config: &ScanConfig,
) -> Result<(), IngestError> {
    match format {
        ArchiveFormat::Tar => extract_tar(bytes, prefix, files, notes, config),
        ArchiveFormat::TarGz => {
            let mut decoder = flate2::read::GzDecoder::new(bytes);
            let mut decompressed = Vec::new();
            decoder
                .read_to_end(&mut decompressed)
                .map_err(|e| IngestError::ArchiveCorrupt(format!("gzip: {e}")))?;
            extract_tar(&decompressed, prefix, files, notes, config)
        }
        ArchiveFormat::Zip => extract_zip(bytes, prefix, files, notes, config),
    }
}

fn extract_tar(
    bytes: &[u8],
    prefix: &str,
    files: &mut BTreeMap<String, FileContent>,
    notes: &mut Vec<String>,
    config: &ScanConfig,
) -> Result<(), IngestError> {
    let mut archive = tar::Archive::new(bytes);
    let entries = archive
        .entries()
        .map_err(|e| IngestError::ArchiveCorrupt(format!("tar: {e}")))?;
    for entry in entries {
        let mut entry = entry.map_err(|e| IngestError::ArchiveCorrupt(format!("tar: {e}")))?;
        let raw_path = entry
            .path()
            .map_err(|e| IngestError::ArchiveCorrupt(format!("tar path: {e}")))?
            .to_string_lossy()
            .into_owned();
        match entry.header().entry_type() {
            tar::EntryType::Regular | tar::EntryType::Continuous | tar::EntryType::GNUSparse => {}
            tar::EntryType::Directory => continue,
            tar::EntryType::Symlink | tar::EntryType::Link => {
                notes.push(format!(
                    "symlink recorded but not followed: {prefix}{raw_path}"
                ));
                continue;
            }
            other => {
                notes.push(format!(
                    "unsupported tar entry type {other:?} skipped: {prefix}{raw_path}"
                ));
                continue;
            }
        }
        let normalized = normalize_entry_path(&raw_path)?;
        let path = format!("{prefix}{normalized}");
        let size = entry.header().size().unwrap_or(0);
        if size > config.max_file_bytes {
            notes.push(format!("{path}: {size} bytes exceeds scan cap, content skipped"));
            files.insert(path, FileContent::Skipped { size });
            continue;
        }
        let mut content = Vec::with_capacity(size as usize);
        entry
            .read_to_end(&mut content)
            .map_err(|e| IngestError::ArchiveCorrupt(format!("tar read: {e}")))?;
        files.insert(path, FileContent::Loaded(content));
    }
    Ok(())
}

fn extract_zip(
    bytes: &[u8],
    prefix: &str,
    files: &mut BTreeMap<String, FileContent>,
    notes: &mut Vec<String>,
    config: &ScanConfig,
) -> Result<(), IngestError> {
    let cursor = std::io::Cursor::new(bytes);
    let mut archive = zip::ZipArchive::new(cursor)
        .map_err(|e| IngestError::ArchiveCorrupt(format!("zip: {e}")))?;
    for i in 0..archive.len() {
        let mut entry = archive
            .by_index(i)
            .map_err(|e| IngestError::ArchiveCorrupt(format!("zip entry: {e}")))?;
        if entry.is_dir() {
            continue;
        }
        let raw_name = entry.name().to_string();
        if entry.is_symlink() {
            notes.push(format!(
                "symlink recorded but not followed: {prefix}{raw_name}"
            ));
            continue;
        }
        let normalized = normalize_entry_path(&raw_name)?;
        let path = format!("{prefix}{normalized}");
        let size = entry.size();
        if size > config.max_file_bytes {
            notes.push(format!("{path}: {size} bytes exceeds scan cap, content skipped"));
            files.insert(path, FileContent::Skipped { size });
            continue;
        }
        let mut content = Vec::with_capacity(size as usize);
        entry
            .read_to_end(&mut content)
            .map_err(|e| IngestError::ArchiveCorrupt(format!("zip read: {e}")))?;
        files.insert(path, FileContent::Loaded(content));
    }
    Ok(())
}

/// Handle nested archives, detect the ecosystem, and assemble the snapshot.
fn finish_snapshot(
    mut files: BTreeMap<String, FileContent>,
    mut notes: Vec<String>,
    config: &ScanConfig,
    source_format: Option<ArchiveFormat>,
    layers_used: u32,
) -> Result<PackageSnapshot, IngestError> {
    // Nested archives: extracted only while below max_archive_depth,
    // otherwise listed with a note (and reported by the file census).
    let mut depth = layers_used;
    loop {
        let nested: Vec<String> = files
            .keys()
            .filter(|p| !p.contains("!/") || p.rsplit("!/").next().is_some_and(|t| ArchiveFormat::from_name(t).is_some()))
            .filter(|p| ArchiveFormat::from_name(p).is_some())
            .filter(|p| p.matches("!/").count() as u32 == depth - layers_used)
            .cloned()
            .collect();
        if nested.is_empty() {
            break;
        }
        if depth >= config.max_archive_depth {
            for path in nested {
                notes.push(format!("nested archive listed but not extracted: {path}"));
            }
            break;
        }
        for path in nested {
            let format = ArchiveFormat::from_name(&path).unwrap();
            let Some(bytes) = files.get(&path).and_then(|c| c.bytes()).map(<[u8]>::to_vec) else {
                continue;
            };
            let prefix = format!("{path}!/");
            match extract_into(&bytes, format, &prefix, &mut files, &mut notes, config) {
                Ok(()) => notes.push(format!("nested archive extracted: {path}")),
                Err(e) => notes.push(format!("nested archive unreadable ({path}): {e}")),
            }
        }
        depth += 1;
    }

    let (ecosystem, marker, ambiguity) = detect_ecosystem(files.keys().map(|s| s.as_str()))?;
    if let Some(note) = ambiguity {
        notes.push(note);
    }
    let root_prefix = match marker.rsplit_once('/') {
        Some((dir, _)) => format!("{dir}/"),
        None => String::new(),
    };
    Ok(PackageSnapshot {
        coords: PackageCoordinates::new(ecosystem, "", ""),
        files,
        facts: ManifestFacts::default(),
        root_prefix,
        notes,
        source_format,
    })
}

// --- registry fetch -------------------------------------------------------

/// A registry endpoint to fetch from. Only used when the CLI explicitly
/// enables network access; the default mode is fully offline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrySource {
    pub ecosystem: Ecosystem,
    pub base_url: String,
    pub auth: Option<String>,
}

impl RegistrySource {
    pub fn new(ecosystem: Ecosystem, base_url: impl Into<String>) -> Self {
        RegistrySource {
            ecosystem,
            base_url: base_url.into(),
            auth: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("package not found in registry")]
    NotFound,
    #[error("network error: {0}")]
    NetworkError(String),
    #[error("checksum mismatch: expected {expected}, got {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("no registry template for ecosystem {0}")]
    NoTemplate(Ecosystem),
    #[error("fetching is not supported for ecosystem {0}")]
    Unsupported(Ecosystem),
}

/// Expand a URL template with the coordinate placeholders.
fn expand_template(template: &str, base: &str, coords: &PackageCoordinates) -> String {
    let name0 = coords.name.chars().next().map(String::from).unwrap_or_default();
    let group_path = coords
        .name
        .split(':')
        .next()
        .unwrap_or("")
        .replace('.', "/");
    template
        .replace("{base}", base.trim_end_matches('/'))
        .replace("{name0}", &name0)
        .replace("{group_path}", &group_path)
        .replace(
            "{name}",
            coords.name.split(':').next_back().unwrap_or(&coords.name),
        )
        .replace("{version}", &coords.version)
}

/// Download the published archive for `coords`. Performs no extraction and
/// no execution; Go is excluded (no centralized registry).
pub fn fetch_package(
    coords: &PackageCoordinates,
    source: &RegistrySource,
    config: &ScanConfig,
) -> Result<(Vec<u8>, ArchiveFormat), FetchError> {
    if coords.ecosystem == Ecosystem::Go {
        return Err(FetchError::Unsupported(Ecosystem::Go));
    }
    let template = config
        .registries
        .get(coords.ecosystem.name())
        .ok_or(FetchError::NoTemplate(coords.ecosystem))?;
    let url = expand_template(&template.url_template, &source.base_url, coords);
    let bytes = http_get(&url, source.auth.as_deref())?;

    if let Some(digest_template) = &template.digest_template {
        let digest_url = expand_template(digest_template, &source.base_url, coords);
        let digest_raw = http_get(&digest_url, source.auth.as_deref())?;
        let expected = String::from_utf8_lossy(&digest_raw)
            .trim()
            .trim_start_matches("sha256:")
            .to_ascii_lowercase();
        let actual = hex::encode(Sha256::digest(&bytes));
        if !expected.is_empty() && expected != actual {
            return Err(FetchError::ChecksumMismatch { expected, actual });
        }
    }

    let format = ArchiveFormat::from_name(&url).unwrap_or(match coords.ecosystem {
        Ecosystem::Npm | Ecosystem::Cargo | Ecosystem::PyPI => ArchiveFormat::TarGz,
        Ecosystem::RubyGems => ArchiveFormat::Tar,
        _ => ArchiveFormat::Zip,
    });
    Ok((bytes, format))
}

fn http_get(url: &str, auth: Option<&str>) -> Result<Vec<u8>, FetchError> {
    let mut request = ureq::get(url);
    if let Some(token) = auth {
        request = request.set("Authorization", &format!("Bearer {token}"));
    }
    match request.call() {
        Ok(response) => {
            let mut bytes = Vec::new();
            response
                .into_reader()
                .take(256 * 1024 * 1024)
                .read_to_end(&mut bytes)
                .map_err(|e| FetchError::NetworkError(e.to_string()))?;
            Ok(bytes)
        }
        Err(ureq::Error::Status(404, _)) => Err(FetchError::NotFound),
        Err(ureq::Error::Status(code, _)) => {
            Err(FetchError::NetworkError(format!("HTTP status {code}")))
        }
        Err(e) => Err(FetchError::NetworkError(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ScanConfig {
        ScanConfig::default()
    }

    fn tar_gz(entries: &[(&str, &str)]) -> Vec<u8> {
        let mut builder = tar::Builder::new(Vec::new());
        for (path, content) in entries {
            let mut header = tar::Header::new_gnu();
            header.set_size(content.len() as u64);
            header.set_mode(0o644);
            header.set_cksum();
            builder
                .append_data(&mut header, path, content.as_bytes())
                .unwrap();
        }
        let tar_bytes = builder.into_inner().unwrap();
        let mut encoder =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        std::io::Write::write_all(&mut encoder, &tar_bytes).unwrap();
        encoder.finish().unwrap()
    }

    fn zip_bytes(entries: &[(&str, &str)]) -> Vec<u8> {
        let mut writer = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
        let options = zip::write::SimpleFileOptions::default();
        for (path, content) in entries {
            writer.start_file(*path, options).unwrap();
            std::io::Write::write_all(&mut writer, content.as_bytes()).unwrap();
        }
        writer.finish().unwrap().into_inner()
    }

    #[test]
    fn detect_single_markers() {
        let (eco, marker, note) = detect_ecosystem(["package.json"]).unwrap();
        assert_eq!(eco, Ecosystem::Npm);
        assert_eq!(marker, "package.json");
        assert!(note.is_none());

        let (eco, _, _) = detect_ecosystem(["Cargo.toml", "build.rs"]).unwrap();
        assert_eq!(eco, Ecosystem::Cargo);

        let err = detect_ecosystem(["README.md"]).unwrap_err();
        assert!(matches!(err, IngestError::NoEcosystemDetected));
    }

    #[test]
    fn detect_prefers_shallowest_then_precedence() {
        // Deeper npm marker loses to shallower cargo marker.
        let (eco, _, _) = detect_ecosystem(["sub/package.json", "Cargo.toml"]).unwrap();
        assert_eq!(eco, Ecosystem::Cargo);
        // Equal depth: npm beats cargo by precedence, with a note.
        let (eco, _, note) = detect_ecosystem(["package.json", "Cargo.toml"]).unwrap();
        assert_eq!(eco, Ecosystem::Npm);
        assert!(note.unwrap().contains("cargo"));
    }

    #[test]
    fn detect_wheel_dist_info() {
        let (eco, _, _) =
            detect_ecosystem(["pkg/__init__.py", "pkg-1.0.dist-info/METADATA"]).unwrap();
        assert_eq!(eco, Ecosystem::PyPI);
    }

    #[test]
    fn detect_gemspec_suffix() {
        let (eco, _, _) = detect_ecosystem(["example.gemspec", "lib/example.rb"]).unwrap();
        assert_eq!(eco, Ecosystem::RubyGems);
    }

    #[test]
    fn open_tar_gz_sets_root_prefix() {
        let bytes = tar_gz(&[("package/package.json", r#"{"name":"x","version":"1.0.0"}"#)]);
        let snap = open_archive(&bytes, ArchiveFormat::TarGz, &config()).unwrap();
        assert_eq!(snap.coords.ecosystem, Ecosystem::Npm);
        assert_eq!(snap.files.len(), 1);
        assert_eq!(snap.root_prefix, "package/");
        assert!(snap.file("package.json").is_some());
    }

    #[test]
    fn zip_traversal_entry_is_rejected() {
        let bytes = zip_bytes(&[("../../etc/x", "boom"), ("package.json", "{}")]);
        let err = open_archive(&bytes, ArchiveFormat::Zip, &config()).unwrap_err();
        assert!(matches!(err, IngestError::PathTraversalRejected(_)));
    }

    #[test]
    fn tar_traversal_entry_is_rejected() {
        // The tar builder itself refuses `..` paths, so write the header
        // name bytes directly.
        let mut header = tar::Header::new_gnu();
        header.set_size(4);
        header.set_mode(0o644);
        {
            let gnu = header.as_gnu_mut().unwrap();
            let name = b"a/../../x";
            gnu.name[..name.len()].copy_from_slice(name);
        }
        header.set_cksum();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(header.as_bytes());
        let mut block = [0u8; 512];
        block[..4].copy_from_slice(b"boom");
        bytes.extend_from_slice(&block);
        bytes.extend_from_slice(&[0u8; 1024]);
        let err = open_archive(&bytes, ArchiveFormat::Tar, &config()).unwrap_err();
        assert!(matches!(err, IngestError::PathTraversalRejected(_)));
    }

    #[test]
    fn corrupt_archive_is_reported() {
        let err = open_archive(b"not an archive", ArchiveFormat::Zip, &config()).unwrap_err();
        assert!(matches!(err, IngestError::ArchiveCorrupt(_)));
        let err = open_archive(b"not gzip", ArchiveFormat::TarGz, &config()).unwrap_err();
        assert!(matches!(err, IngestError::ArchiveCorrupt(_)));
    }

    #[test]
    fn directory_scan_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("setup.py"), "from setuptools import setup\n").unwrap();
        std::fs::create_dir_all(dir.path().join("src/pkg")).unwrap();
        std::fs::write(dir.path().join("src/pkg/__init__.py"), "").unwrap();
        let snap = open_dir(dir.path(), &config()).unwrap();
        assert_eq!(snap.coords.ecosystem, Ecosystem::PyPI);
        assert_eq!(snap.files.len(), 2);
        assert!(snap.files.contains_key("src/pkg/__init__.py"));
    }

    #[test]
    fn oversized_file_is_skipped_with_note() {
        let mut cfg = config();
        cfg.max_file_bytes = 8;
        let bytes = tar_gz(&[
            ("package.json", "{}"),
            ("big.bin", "0123456789ABCDEF"),
        ]);
        let snap = open_archive(&bytes, ArchiveFormat::TarGz, &cfg).unwrap();
        assert!(matches!(
            snap.files.get("big.bin"),
            Some(FileContent::Skipped { size: 16 })
        ));
        assert!(snap.notes.iter().any(|n| n.contains("exceeds scan cap")));
    }

    #[test]
    fn open_is_idempotent() {
        let bytes = tar_gz(&[
            ("package/package.json", r#"{"name":"x"}"#),
            ("package/index.js", "module.exports = 1;"),
        ]);
        let a = open_archive(&bytes, ArchiveFormat::TarGz, &config()).unwrap();
        let b = open_archive(&bytes, ArchiveFormat::TarGz, &config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn file_map_is_lexicographically_ordered() {
        let bytes = tar_gz(&[
            ("z.txt", "z"),
            ("package.json", "{}"),
            ("a/b.txt", "ab"),
        ]);
        let snap = open_archive(&bytes, ArchiveFormat::TarGz, &config()).unwrap();
        let keys: Vec<&String> = snap.files.keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn nested_archive_listed_not_extracted_by_default() {
        let inner = zip_bytes(&[("inner.txt", "hello")]);
        let mut builder = tar::Builder::new(Vec::new());
        for (path, content) in [("package.json", b"{}".to_vec()), ("inner.zip", inner)] {
            let mut header = tar::Header::new_gnu();
            header.set_size(content.len() as u64);
            header.set_mode(0o644);
            header.set_cksum();
            builder
                .append_data(&mut header, path, content.as_slice())
                .unwrap();
        }
        let bytes = builder.into_inner().unwrap();

        let snap = open_archive(&bytes, ArchiveFormat::Tar, &config()).unwrap();
        assert!(snap.files.contains_key("inner.zip"));
        assert!(!snap.files.keys().any(|k| k.contains("!/")));
        assert!(snap
            .notes
            .iter()
            .any(|n| n.contains("listed but not extracted")));
        assert_eq!(snap.nested_archive_count(), 1);

        let mut deep = config();
        deep.max_archive_depth = 2;
        let snap2 = open_archive(&bytes, ArchiveFormat::Tar, &deep).unwrap();
        assert!(snap2.files.contains_key("inner.zip!/inner.txt"));
    }

    #[test]
    fn normalize_rejects_escapes_and_absolutes() {
        assert!(normalize_entry_path("../../etc/x").is_err());
        assert!(normalize_entry_path("/etc/x").is_err());
        assert_eq!(normalize_entry_path("./a/./b").unwrap(), "a/b");
        assert_eq!(normalize_entry_path("a//b").unwrap(), "a/b");
        assert_eq!(normalize_entry_path("a/c/../b").unwrap(), "a/b");
    }

    #[test]
    fn unsupported_format_for_unknown_extension() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("input.rar");
        std::fs::write(&file, b"whatever").unwrap();
        let err = open_path(&file, &config()).unwrap_err();
        assert!(matches!(err, IngestError::UnsupportedFormat(_)));
    }

    #[test]
    fn template_expansion() {
        let coords = PackageCoordinates::new(Ecosystem::Npm, "left-pad", "1.3.0");
        let url = expand_template("{base}/{name}/-/{name}-{version}.tgz", "http://h:1", &coords);
        assert_eq!(url, "http://h:1/left-pad/-/left-pad-1.3.0.tgz");
        let maven = PackageCoordinates::new(Ecosystem::Maven, "com.example:artifact", "2.0");
        let url = expand_template(
            "{base}/{group_path}/{name}/{version}/{name}-{version}.jar",
            "http://h:1/",
            &maven,
        );
        assert_eq!(url, "http://h:1/com/example/artifact/2.0/artifact-2.0.jar");
    }

    #[test]
    fn fetch_is_unsupported_for_go() {
        let coords = PackageCoordinates::new(Ecosystem::Go, "example.com/mod", "v1.0.0");
        let source = RegistrySource::new(Ecosystem::Go, "http://127.0.0.1:1");
        let err = fetch_package(&coords, &source, &config()).unwrap_err();
        assert!(matches!(err, FetchError::Unsupported(Ecosystem::Go)));
    }
}
