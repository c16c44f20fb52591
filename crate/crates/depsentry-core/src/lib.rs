//! depsentry: a multi-ecosystem static scanner and install-lifecycle
//! simulator for third-party packages.
//!
//! The crate detects the code-execution techniques malicious packages use
//! (install hooks, build scripts, build extensions, import side effects,
//! hot-method payloads, build plugins) and the evasion indicators that
//! typically accompany them (encoded data, packed code, identifier
//! obfuscation, visual and Unicode deception, monkey patching, stagers),
//! across npm, PyPI, Composer, RubyGems, Cargo, Go, and Maven packages.
//!
//! Scanning is fully static: no file from a scanned package is ever
//! executed, evaluated, or imported.

pub mod ace;
pub mod config;
pub mod deptree;
pub mod evasion;
pub mod fixtures;
pub mod ingest;
pub mod lexscan;
pub mod manifest;
pub mod model;
pub mod report;
pub mod scan;
pub mod trigger;

pub use config::{DangerousApiCatalog, ScanConfig, Thresholds};
pub use ingest::{open_path, PackageSnapshot};
pub use manifest::{DependencyEdge, ManifestFacts};
pub use model::{
    applicability, technique_catalog, Confidence, Ecosystem, Finding, FindingLocation,
    PackageCoordinates, Severity, SourceSpan, TechniqueId,
};
pub use report::{render, Format, Report};
pub use scan::{scan_path, scan_snapshot, ScanOutcome};
pub use trigger::{predict_executions, simulate_report, InstallContext, TriggeredExecution};
