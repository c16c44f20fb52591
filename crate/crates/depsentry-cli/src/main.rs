//! depsentry command-line interface.
//!
//! Commands map one-to-one onto the library's entry operations: `scan`
//! (detectors), `simulate` (trigger prediction), `tree` (dependency tree),
//! `fixtures` (corpus generator), and `rules` (technique catalog dump).
//!
//! Exit codes: 0 no finding at or above the threshold, 1 findings at or
//! above the threshold, 2 operational errors (unreadable input, bad flags).

use clap::{Parser, Subcommand, ValueEnum};
use depsentry_core::config::ScanConfig;
use depsentry_core::deptree::{self, DirStoreResolver, NullResolver, Resolver};
use depsentry_core::ingest::{self, RegistrySource};
use depsentry_core::model::{catalog_json, PackageCoordinates, Severity};
use depsentry_core::report::{exit_code, render, Format, Report};
use depsentry_core::trigger::{simulate_report, Command as TriggerCommand, InstallContext};
use depsentry_core::{fixtures, scan};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "depsentry",
    version,
    about = "Static scanner and install-lifecycle simulator for third-party packages"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
    Sarif,
}

impl From<OutputFormat> for Format {
    fn from(value: OutputFormat) -> Self {
        match value {
            OutputFormat::Text => Format::Text,
            OutputFormat::Json => Format::Json,
            OutputFormat::Sarif => Format::Sarif,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSeverity {
    Info,
    Low,
    Medium,
    High,
    Critical,
}

impl From<CliSeverity> for Severity {
    fn from(value: CliSeverity) -> Self {
        match value {
            CliSeverity::Info => Severity::Info,
            CliSeverity::Low => Severity::Low,
            CliSeverity::Medium => Severity::Medium,
            CliSeverity::High => Severity::High,
            CliSeverity::Critical => Severity::Critical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliCommand {
    Install,
    Update,
    Build,
}

impl From<CliCommand> for TriggerCommand {
    fn from(value: CliCommand) -> Self {
        match value {
            CliCommand::Install => TriggerCommand::Install,
            CliCommand::Update => TriggerCommand::Update,
            CliCommand::Build => TriggerCommand::Build,
        }
    }
}

#[derive(Subcommand)]
enum Commands {
    /// Scan a package directory or archive for code-execution techniques
    /// and evasion indicators.
    Scan {
        /// Directory, archive file, or (with --fetch) ecosystem:name@version.
        target: String,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
        /// Exit 1 when any finding reaches this severity.
        #[arg(long, value_enum, default_value = "low")]
        fail_on: CliSeverity,
        /// JSON configuration file overriding thresholds, catalogs,
        /// allowlists, and registry templates.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Local package store (<ecosystem>/<name>/<version>/) used to
        /// resolve and scan the dependency tree.
        #[arg(long)]
        deps_store: Option<PathBuf>,
        /// Allow network access to fetch the target from its registry.
        /// Off by default: CI scans must not phone home.
        #[arg(long)]
        fetch: bool,
        /// Registry base URL override for --fetch (defaults to the
        /// ecosystem's public registry).
        #[arg(long)]
        registry_base: Option<String>,
        /// Extract nested archives up to this depth.
        #[arg(long)]
        max_archive_depth: Option<u32>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict which package-provided code executes for a package-manager
    /// invocation, and which flags would suppress each entry.
    Simulate {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "install")]
        command: CliCommand,
        /// npm: skip all scripts.
        #[arg(long)]
        ignore_scripts: bool,
        /// pip: refuse source distributions.
        #[arg(long)]
        only_binary_all: bool,
        /// composer: skip autoload-dump hooks.
        #[arg(long)]
        no_autoloader: bool,
        /// composer: simulate with or without a lockfile (defaults to
        /// whether the package carries one).
        #[arg(long)]
        lockfile_present: Option<bool>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build and print the dependency tree of a package.
    Tree {
        path: PathBuf,
        #[arg(long)]
        deps_store: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate the safe fixture corpus (inert payloads only).
    Fixtures { outdir: PathBuf },
    /// Dump the technique catalog as JSON.
    Rules,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("depsentry: error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>, max_archive_depth: Option<u32>) -> Result<ScanConfig, String> {
    let mut config = match path {
        Some(p) => ScanConfig::from_file(p).map_err(|e| e.to_string())?,
        None => ScanConfig::default(),
    };
    let applied = config.apply_env_overrides(|key| std::env::var(key).ok());
    for entry in applied {
        eprintln!("depsentry: env override {entry}");
    }
    if let Some(depth) = max_archive_depth {
        config.max_archive_depth = depth;
    }
    Ok(config)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Commands::Scan {
            target,
            format,
            fail_on,
            config,
            deps_store,
            fetch,
            registry_base,
            max_archive_depth,
            out,
        } => {
            let config = load_config(config.as_deref(), max_archive_depth)?;
            let mut snapshot = obtain_snapshot(&target, fetch, registry_base.as_deref(), &config)?;
            scan::prepare_snapshot(&mut snapshot);

            let mut report = Report::new(snapshot.coords.clone());
            if let Some(store) = deps_store {
                let resolver = DirStoreResolver::new(store, &config);
                let tree = deptree::build_tree(snapshot, &resolver);
                report.dependency_edges = tree.edges.clone();
                let tree_scan = deptree::scan_tree(&tree, &config);
                report = report.with_findings(tree_scan.findings);
                report.notes = tree_scan.notes;
            } else {
                let outcome = scan::scan_snapshot(&snapshot, &config);
                report = report.with_findings(outcome.findings);
                report.notes = outcome.notes;
                report.stats = outcome.stats;
                report.dependency_edges = lock_edges(&snapshot);
            }

            emit(&render(&report, format.into()), out.as_deref())?;
            Ok(ExitCode::from(
                u8::try_from(exit_code(&report, fail_on.into())).unwrap_or(1),
            ))
        }
        Commands::Simulate {
            path,
            command,
            ignore_scripts,
            only_binary_all,
            no_autoloader,
            lockfile_present,
            format,
            config,
        } => {
            let config = load_config(config.as_deref(), None)?;
            let mut snapshot = ingest::open_path(&path, &config).map_err(|e| e.to_string())?;
            scan::prepare_snapshot(&mut snapshot);
            let ctx = InstallContext {
                command: command.into(),
                ignore_scripts,
                only_binary_all,
                no_autoloader,
                lockfile_present: lockfile_present.unwrap_or(snapshot.facts.lockfile_present),
            };
            let table = simulate_report(&snapshot, &ctx);
            let mut report = Report::new(snapshot.coords.clone());
            report.trigger_table = Some(table);
            emit(&render(&report, format.into()), None)?;
            Ok(ExitCode::SUCCESS)
        }
        Commands::Tree {
            path,
            deps_store,
            format,
            config,
        } => {
            let config = load_config(config.as_deref(), None)?;
            let mut snapshot = ingest::open_path(&path, &config).map_err(|e| e.to_string())?;
            scan::prepare_snapshot(&mut snapshot);
            let resolver: Box<dyn Resolver> = match &deps_store {
                Some(store) => Box::new(DirStoreResolver::new(store, &config)),
                None => Box::new(NullResolver),
            };
            let tree = deptree::build_tree(snapshot, resolver.as_ref());
            match Format::from(format) {
                Format::Text => {
                    let mut lines = Vec::new();
                    for (coords, depth) in &tree.depth {
                        let resolved = matches!(
                            tree.nodes.get(coords),
                            Some(deptree::Node::Resolved(_))
                        );
                        lines.push((*depth, coords.clone(), resolved));
                    }
                    lines.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                    for (depth, coords, resolved) in lines {
                        println!(
                            "{}{}{}",
                            "  ".repeat(depth as usize),
                            coords,
                            if resolved { "" } else { " (unresolved)" }
                        );
                    }
                    for note in &tree.notes {
                        eprintln!("note: {note}");
                    }
                }
                _ => {
                    let doc = serde_json::json!({
                        "root": tree.root,
                        "depth": tree.depth.iter().map(|(c, d)| {
                            serde_json::json!({"coords": c, "depth": d})
                        }).collect::<Vec<_>>(),
                        "edges": tree.edges,
                        "notes": tree.notes,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Commands::Fixtures { outdir } => {
            let manifest =
                fixtures::generate_fixtures(&outdir).map_err(|e| format!("fixtures: {e}"))?;
            println!(
                "wrote {} fixtures ({} technique, {} control) under {}",
                manifest.entries.len(),
                manifest.technique_count(),
                manifest.control_count(),
                outdir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Commands::Rules => {
            println!("{}", catalog_json());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Resolve the scan target: a filesystem path, or with --fetch a
/// coordinates spec `ecosystem:name@version` pulled from the registry.
fn obtain_snapshot(
    target: &str,
    fetch: bool,
    registry_base: Option<&str>,
    config: &ScanConfig,
) -> Result<ingest::PackageSnapshot, String> {
    let path = Path::new(target);
    if path.exists() {
        return ingest::open_path(path, config).map_err(|e| e.to_string());
    }
    if !fetch {
        return Err(format!(
            "{target}: no such file or directory (use --fetch to pull coordinates from a registry)"
        ));
    }
    let coords = parse_coords(target)?;
    let base = registry_base
        .map(String::from)
        .unwrap_or_else(|| default_registry_base(&coords));
    let source = RegistrySource::new(coords.ecosystem, base);
    let (bytes, format) =
        ingest::fetch_package(&coords, &source, config).map_err(|e| e.to_string())?;
    let mut snapshot = ingest::open_archive(&bytes, format, config).map_err(|e| e.to_string())?;
    snapshot.coords = coords;
    Ok(snapshot)
}

fn parse_coords(spec: &str) -> Result<PackageCoordinates, String> {
    let (eco_part, rest) = spec
        .split_once(':')
        .ok_or_else(|| format!("{spec}: expected ecosystem:name@version"))?;
    let ecosystem = depsentry_core::model::Ecosystem::from_str(eco_part)?;
    let (name, version) = rest
        .rsplit_once('@')
        .ok_or_else(|| format!("{spec}: expected ecosystem:name@version"))?;
    Ok(PackageCoordinates::new(ecosystem, name, version))
}

fn default_registry_base(coords: &PackageCoordinates) -> String {
    use depsentry_core::model::Ecosystem::*;
    match coords.ecosystem {
        Npm => "https://registry.npmjs.org",
        PyPI => "https://pypi.org",
        Composer => "https://repo.packagist.org",
        RubyGems => "https://rubygems.org",
        Cargo => "https://crates.io",
        Maven => "https://repo1.maven.org",
        Go => "",
    }
    .to_string()
}

fn lock_edges(snapshot: &ingest::PackageSnapshot) -> Vec<depsentry_core::manifest::DependencyEdge> {
    use depsentry_core::manifest::lockfile;
    let name = match snapshot.coords.ecosystem {
        depsentry_core::model::Ecosystem::Npm => "package-lock.json",
        depsentry_core::model::Ecosystem::Composer => "composer.lock",
        depsentry_core::model::Ecosystem::RubyGems => "Gemfile.lock",
        depsentry_core::model::Ecosystem::Cargo => "Cargo.lock",
        depsentry_core::model::Ecosystem::Go => "go.sum",
        depsentry_core::model::Ecosystem::PyPI => "requirements.txt",
        depsentry_core::model::Ecosystem::Maven => return Vec::new(),
    };
    snapshot
        .file(name)
        .and_then(|bytes| lockfile::parse_lockfile(snapshot.coords.ecosystem, bytes).ok())
        .map(|parse| parse.edges)
        .unwrap_or_default()
}
