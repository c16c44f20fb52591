//! Deterministic report model and serialization (text, JSON, SARIF 2.1.0),
//! plus the exit-code policy.
//!
//! Two runs over identical inputs differ only in timestamp and duration;
//! findings are sorted by (package, path, byte offset, technique id).

use crate::manifest::DependencyEdge;
use crate::model::{
    catalog_entry, sort_findings, technique_catalog, Finding, FindingLocation,
    PackageCoordinates, Severity, TechniqueId,
};
use crate::scan::ScanStats;
use crate::trigger::TriggerTable;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub const TOOL_NAME: &str = "depsentry";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Sarif,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "sarif" => Ok(Format::Sarif),
            other => Err(format!("unknown format: {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: ToolInfo,
    /// RFC 3339 UTC; excluded from determinism comparisons.
    pub timestamp: String,
    pub target: PackageCoordinates,
    pub findings: Vec<Finding>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trigger_table: Option<TriggerTable>,
    pub dependency_edges: Vec<DependencyEdge>,
    pub notes: Vec<String>,
    pub stats: ScanStats,
}

impl Report {
    pub fn new(target: PackageCoordinates) -> Self {
        Report {
            tool: ToolInfo {
                name: TOOL_NAME.to_string(),
                version: TOOL_VERSION.to_string(),
            },
            timestamp: iso8601_now(),
            target,
            findings: Vec::new(),
            trigger_table: None,
            dependency_edges: Vec::new(),
            notes: Vec::new(),
            stats: ScanStats::default(),
        }
    }

    pub fn with_findings(mut self, mut findings: Vec<Finding>) -> Self {
        sort_findings(&mut findings);
        self.findings = findings;
        self
    }

    /// Highest severity present, if any finding exists.
    pub fn max_severity(&self) -> Option<Severity> {
        self.findings.iter().map(|f| f.severity).max()
    }
}

/// Current time as RFC 3339 UTC, without pulling in a date-time dependency.
pub fn iso8601_now() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    iso8601_from_unix(secs)
}

/// Civil-from-days conversion (Howard Hinnant's algorithm).
pub fn iso8601_from_unix(secs: u64) -> String {
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { y + 1 } else { y };
    format!("{year:04}-{month:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

/// Serialize the report. JSON has stable key order; SARIF is a 2.1.0 run
/// with one rule per technique id; text is a severity-grouped table.
pub fn render(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        Format::Sarif => render_sarif(report),
        Format::Text => render_text(report).into_bytes(),
    }
}

fn sarif_level(severity: Severity) -> &'static str {
    match severity {
        Severity::Info | Severity::Low => "note",
        Severity::Medium => "warning",
        Severity::High | Severity::Critical => "error",
    }
}

fn render_sarif(report: &Report) -> Vec<u8> {
    let rules: Vec<serde_json::Value> = technique_catalog()
        .iter()
        .map(|entry| {
            json!({
                "id": entry.id.as_str(),
                "name": entry.title,
                "shortDescription": { "text": entry.title },
                "fullDescription": { "text": entry.remediation },
                "defaultConfiguration": { "level": sarif_level(entry.severity) },
                "properties": {
                    "section": entry.section,
                    "default-confidence": entry.confidence.as_str(),
                }
            })
        })
        .collect();
    let rule_index = |id: TechniqueId| {
        technique_catalog()
            .iter()
            .position(|e| e.id == id)
            .unwrap_or(0)
    };
    let results: Vec<serde_json::Value> = report
        .findings
        .iter()
        .map(|finding| {
            let mut message = finding.evidence.clone();
            if let Some(context) = &finding.context {
                if message.is_empty() {
                    message = context.clone();
                } else {
                    message = format!("{message} ({context})");
                }
            }
            if message.is_empty() {
                message = catalog_entry(finding.id).title.to_string();
            }
            let location = match &finding.location {
                FindingLocation::Span(span) => json!({
                    "physicalLocation": {
                        "artifactLocation": { "uri": span.path },
                        "region": {
                            "startLine": span.line_start,
                            "endLine": span.line_end,
                            "byteOffset": span.byte_start,
                            "byteLength": span.byte_end.saturating_sub(span.byte_start),
                        }
                    }
                }),
                FindingLocation::ManifestKey { path, key } => json!({
                    "physicalLocation": {
                        "artifactLocation": { "uri": path },
                    },
                    "logicalLocations": [{ "name": key, "kind": "member" }]
                }),
            };
            json!({
                "ruleId": finding.id.as_str(),
                "ruleIndex": rule_index(finding.id),
                "level": sarif_level(finding.severity),
                "message": { "text": message },
                "locations": [location],
                "properties": {
                    "confidence": finding.confidence.as_str(),
                    "package": finding.package.as_ref().map(|p| p.to_string()),
                    "depth": finding.depth,
                }
            })
        })
        .collect();
    let doc = json!({
        "$schema": "https://raw.githubusercontent.com/oasis-tcs/sarif-spec/master/Schemata/sarif-schema-2.1.0.json",
        "version": "2.1.0",
        "runs": [{
            "tool": {
                "driver": {
                    "name": report.tool.name,
                    "version": report.tool.version,
                    "informationUri": "https://github.com/depsentry/depsentry",
                    "rules": rules,
                }
            },
            "results": results,
        }]
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("sarif serializes");
    out.push(b'\n');
    out
}

fn render_text(report: &Report) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} — scan of {}",
        report.tool.name, report.tool.version, report.target
    );
    let _ = writeln!(
        out,
        "files: {}  bytes: {}  findings: {}",
        report.stats.files_scanned,
        report.stats.bytes_scanned,
        report.findings.len()
    );
    if report.findings.is_empty() {
        let _ = writeln!(out, "\nno findings");
    }
    for severity in [
        Severity::Critical,
        Severity::High,
        Severity::Medium,
        Severity::Low,
        Severity::Info,
    ] {
        let group: Vec<&Finding> = report
            .findings
            .iter()
            .filter(|f| f.severity == severity)
            .collect();
        if group.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n[{}]", severity.as_str().to_uppercase());
        for finding in group {
            let title = catalog_entry(finding.id).title;
            let _ = writeln!(
                out,
                "  {:<13} {:<9} {}  {}",
                finding.id.as_str(),
                finding.confidence.as_str(),
                finding.location.describe(),
                title
            );
            if !finding.evidence.is_empty() {
                let _ = writeln!(out, "      evidence: {}", finding.evidence);
            }
            if let Some(context) = &finding.context {
                let _ = writeln!(out, "      context:  {context}");
            }
            if let (Some(pkg), Some(depth)) = (&finding.package, finding.depth) {
                let _ = writeln!(out, "      package:  {pkg} (depth {depth})");
            }
        }
    }
    if let Some(table) = &report.trigger_table {
        let _ = writeln!(out, "\npredicted executions ({:?}):", table.outcome);
        if table.rows.is_empty() {
            let _ = writeln!(out, "  none");
        }
        for row in &table.rows {
            let _ = writeln!(
                out,
                "  {:<16} {:<24} suppressible by: {}",
                format!("{:?}", row.execution.phase),
                row.execution.hook_or_file,
                TriggerTable::suppression_label(row)
            );
        }
    }
    if !report.notes.is_empty() {
        let _ = writeln!(out, "\nnotes:");
        for note in &report.notes {
            let _ = writeln!(out, "  - {note}");
        }
    }
    out
}

/// Exit-code policy: 0 when no finding reaches the threshold, 1 when one
/// does. 2 is reserved for operational errors and set by the CLI.
pub fn exit_code(report: &Report, fail_on: Severity) -> i32 {
    if report.findings.iter().any(|f| f.severity >= fail_on) {
        1
    } else {
        0
    }
}
