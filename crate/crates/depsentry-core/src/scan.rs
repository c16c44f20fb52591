//! Scan orchestration: tokenize a snapshot's files, run every detector, and
//! merge findings deterministically.
//!
//! Scanning never executes, evaluates, or imports anything from the package;
//! tokenization and detection are pure functions over the snapshot bytes.

use crate::ace::{self, TokenIndex};
use crate::config::ScanConfig;
use crate::evasion;
use crate::ingest::{self, PackageSnapshot};
use crate::lexscan::{self, Language};
use crate::manifest;
use crate::model::{sort_findings, Finding};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub files_scanned: usize,
    pub bytes_scanned: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Default)]
pub struct ScanOutcome {
    pub findings: Vec<Finding>,
    pub notes: Vec<String>,
    pub stats: ScanStats,
}

/// Fill in manifest facts and coordinates on a freshly ingested snapshot.
pub fn prepare_snapshot(snapshot: &mut PackageSnapshot) {
    snapshot.facts = manifest::extract_facts(snapshot);
    if let Some(name) = &snapshot.facts.declared_name {
        snapshot.coords.name = name.clone();
    }
    if let Some(version) = &snapshot.facts.declared_version {
        snapshot.coords.version = version.clone();
    }
}

/// Tokenize every profiled file of the snapshot.
pub fn tokenize_snapshot(snapshot: &PackageSnapshot, config: &ScanConfig) -> TokenIndex {
    let entries: Vec<(&String, &[u8])> = snapshot
        .files
        .iter()
        .filter_map(|(path, content)| content.bytes().map(|b| (path, b)))
        .collect();
    let tokenize_one = |(path, bytes): &(&String, &[u8])| {
        (
            (*path).clone(),
            lexscan::tokenize(path, bytes, Language::from_path(path)),
        )
    };
    if config.parallel {
        use rayon::prelude::*;
        entries.par_iter().map(tokenize_one).collect()
    } else {
        entries.iter().map(tokenize_one).collect()
    }
}

/// Run every detector over a prepared snapshot. Output ordering is
/// deterministic regardless of `config.parallel`.
pub fn scan_snapshot(snapshot: &PackageSnapshot, config: &ScanConfig) -> ScanOutcome {
    let started = std::time::Instant::now();
    let tokens = tokenize_snapshot(snapshot, config);
    let catalog = &config.dangerous_api;
    let thresholds = &config.thresholds;

    let mut findings: Vec<Finding> = Vec::new();
    findings.extend(ace::detect_install_time(snapshot, &tokens, catalog));
    findings.extend(ace::detect_import_side_effects(snapshot, &tokens, catalog));
    findings.extend(ace::detect_hot_method_payloads(snapshot, &tokens, catalog));
    findings.extend(ace::detect_build_plugin(snapshot, &tokens, config));

    let file_findings: Vec<Vec<Finding>> = if config.parallel {
        use rayon::prelude::*;
        tokens
            .values()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|tf| evasion::detect_file_evasions(tf, catalog, thresholds))
            .collect()
    } else {
        tokens
            .values()
            .map(|tf| evasion::detect_file_evasions(tf, catalog, thresholds))
            .collect()
    };
    for batch in file_findings {
        findings.extend(batch);
    }
    findings.extend(evasion::census(snapshot, &tokens, catalog, thresholds));

    sort_findings(&mut findings);

    let mut notes: Vec<String> = Vec::new();
    notes.extend(snapshot.notes.iter().cloned());
    notes.extend(snapshot.facts.notes.iter().cloned());
    for tf in tokens.values() {
        notes.extend(tf.notes.iter().cloned());
    }
    notes.sort();
    notes.dedup();

    let stats = ScanStats {
        files_scanned: snapshot.files.len(),
        bytes_scanned: snapshot.files.values().map(|c| c.len()).sum(),
        duration_ms: started.elapsed().as_millis() as u64,
    };

    ScanOutcome {
        findings,
        notes,
        stats,
    }
}

/// Open, prepare, and scan a directory or archive path.
pub fn scan_path(
    path: &Path,
    config: &ScanConfig,
) -> Result<(PackageSnapshot, ScanOutcome), ingest::IngestError> {
    let mut snapshot = ingest::open_path(path, config)?;
    prepare_snapshot(&mut snapshot);
    let outcome = scan_snapshot(&snapshot, config);
    Ok((snapshot, outcome))
}
