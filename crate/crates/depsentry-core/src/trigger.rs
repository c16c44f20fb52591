//! Install-lifecycle simulator: given manifest facts and a package-manager
//! invocation, predict exactly which package-provided code executes, in
//! which phase, and which flag (if any) would suppress it.

use crate::ingest::PackageSnapshot;
use crate::manifest::{DistributionKind, ManifestFacts};
#[cfg(test)]
use crate::manifest::{COMPOSER_HOOKS, NPM_HOOKS};
use crate::model::Ecosystem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Install,
    Update,
    Build,
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "install" => Ok(Command::Install),
            "update" => Ok(Command::Update),
            "build" => Ok(Command::Build),
            other => Err(format!("unknown command: {other}")),
        }
    }
}

/// The simulated package-manager invocation. Flags irrelevant to the
/// ecosystem are ignored and recorded as unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct InstallContext {
    pub command: Command,
    /// npm: skip all scripts.
    pub ignore_scripts: bool,
    /// pip: refuse source distributions.
    pub only_binary_all: bool,
    /// composer: skip autoload-dump hooks.
    pub no_autoloader: bool,
    /// composer: a lockfile is present at install time.
    pub lockfile_present: bool,
}

/// Lifecycle phase of a predicted execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PreInstall,
    Install,
    PostInstall,
    PrepareFamily,
    BuildScript,
    BuildExtension,
    AutoloadDump,
    UpdateCmd,
}

/// One predicted execution of package-provided code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggeredExecution {
    pub phase: Phase,
    /// Hook name, script path, extension path, or plugin coordinate.
    pub hook_or_file: String,
    /// The command or file content reference that would run.
    pub command_text: String,
    /// Manifest key path or file path justifying the prediction.
    pub source: String,
}

/// Whether an install would succeed at all (pip `--only-binary :all:` with
/// no wheel available fails instead of executing anything).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InstallOutcome {
    #[default]
    Proceeds,
    InstallFails,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Prediction {
    pub executions: Vec<TriggeredExecution>,
    pub outcome: InstallOutcome,
    pub notes: Vec<String>,
}

/// npm hook firing order. The package manager documentation lists the hook
/// names without a full ordering; this fixed order is scanner policy, and
/// ordering does not affect which hooks fire. `prepublish` (deprecated)
/// runs last with a note.
const NPM_ORDER: [(&str, Phase); 7] = [
    ("pre-install", Phase::PreInstall),
    ("install", Phase::Install),
    ("post-install", Phase::PostInstall),
    ("preprepare", Phase::PrepareFamily),
    ("prepare", Phase::PrepareFamily),
    ("postprepare", Phase::PrepareFamily),
    ("prepublish", Phase::PrepareFamily),
];

const COMPOSER_ORDER: [(&str, Phase); 6] = [
    ("pre-install-cmd", Phase::PreInstall),
    ("post-install-cmd", Phase::PostInstall),
    ("pre-autoload-dump", Phase::AutoloadDump),
    ("post-autoload-dump", Phase::AutoloadDump),
    ("pre-update-cmd", Phase::UpdateCmd),
    ("post-update-cmd", Phase::UpdateCmd),
];

/// Maven default lifecycle; `build` reaches through `package`, `install`
/// through `install`.
pub const MAVEN_LIFECYCLE: [&str; 7] = [
    "validate", "compile", "test", "package", "verify", "install", "deploy",
];

/// Predict which package-provided code executes for this invocation.
/// Ordered deterministically; impossible flag/ecosystem combinations yield
/// notes, never failures.
pub fn predict_executions(
    facts: &ManifestFacts,
    ecosystem: Ecosystem,
    ctx: &InstallContext,
) -> Prediction {
    let mut p = Prediction::default();
    note_unused_flags(ecosystem, ctx, &mut p);
    match ecosystem {
        Ecosystem::Npm => predict_npm(facts, ctx, &mut p),
        Ecosystem::Composer => predict_composer(facts, ctx, &mut p),
        Ecosystem::PyPI => predict_pypi(facts, ctx, &mut p),
        Ecosystem::Cargo => predict_cargo(facts, ctx, &mut p),
        Ecosystem::RubyGems => predict_rubygems(facts, ctx, &mut p),
        Ecosystem::Go => {
            // Go runs no code on installation and has no install hooks.
            p.notes.push("go executes nothing at install time".into());
        }
        Ecosystem::Maven => predict_maven(facts, ctx, &mut p),
    }
    p
}

fn note_unused_flags(ecosystem: Ecosystem, ctx: &InstallContext, p: &mut Prediction) {
    let mut unused = Vec::new();
    if ctx.ignore_scripts && ecosystem != Ecosystem::Npm {
        unused.push("ignore_scripts");
    }
    if ctx.only_binary_all && ecosystem != Ecosystem::PyPI {
        unused.push("only_binary_all");
    }
    if ctx.no_autoloader && ecosystem != Ecosystem::Composer {
        unused.push("no_autoloader");
    }
    if !unused.is_empty() {
        p.notes.push(format!(
            "flags not applicable to {ecosystem} ignored: {}",
            unused.join(", ")
        ));
    }
}

fn predict_npm(facts: &ManifestFacts, ctx: &InstallContext, p: &mut Prediction) {
    match ctx.command {
        Command::Install | Command::Update => {}
        Command::Build => {
            p.notes
                .push("npm has no build phase that runs install hooks".into());
            return;
        }
    }
    if ctx.ignore_scripts {
        p.notes
            .push("--ignore-scripts suppresses every install script".into());
        return;
    }
    for (hook, phase) in NPM_ORDER {
        if let Some(command) = facts.install_hooks.get(hook) {
            p.executions.push(TriggeredExecution {
                phase,
                hook_or_file: hook.to_string(),
                command_text: command.clone(),
                source: format!("package.json#scripts.{hook}"),
            });
            if hook == "prepublish" {
                p.notes
                    .push("prepublish is deprecated but still executed by npm".into());
            }
        }
    }
}

fn predict_composer(facts: &ManifestFacts, ctx: &InstallContext, p: &mut Prediction) {
    if facts.distribution_kind == DistributionKind::Prebuilt {
        p.notes
            .push("composer dist package: installation skips the build and its hooks".into());
        return;
    }
    if ctx.command == Command::Build {
        p.notes
            .push("composer has no build command; hooks run on install/update".into());
        return;
    }
    for (hook, phase) in COMPOSER_ORDER {
        let Some(command) = facts.install_hooks.get(hook) else {
            continue;
        };
        let fires = match phase {
            Phase::AutoloadDump => !ctx.no_autoloader,
            Phase::UpdateCmd => match ctx.command {
                // The update-cmd pair always runs on `composer update`; on
                // install it is skipped when composer.lock exists.
                Command::Update => true,
                Command::Install => !ctx.lockfile_present,
                Command::Build => false,
            },
            // pre/post-install-cmd cannot be skipped by any flag, but only
            // run for the install command.
            _ => ctx.command == Command::Install,
        };
        if fires {
            p.executions.push(TriggeredExecution {
                phase,
                hook_or_file: hook.to_string(),
                command_text: command.clone(),
                source: format!("composer.json#scripts.{hook}"),
            });
        }
    }
}

fn predict_pypi(facts: &ManifestFacts, ctx: &InstallContext, p: &mut Prediction) {
    if ctx.command == Command::Update {
        // pip has no update verb for a single package being scanned;
        // upgrading reinstalls, so the install rules apply.
        p.notes
            .push("pip upgrade behaves like install for execution purposes".into());
    }
    match facts.distribution_kind {
        DistributionKind::Prebuilt => {
            p.notes
                .push("wheel (bdist): no installation script executes".into());
        }
        DistributionKind::Source | DistributionKind::Unknown => {
            let Some(script) = &facts.build_script else {
                p.notes.push("no setup.py present".into());
                return;
            };
            if ctx.only_binary_all {
                // No prebuilt distribution available for this snapshot.
                p.outcome = InstallOutcome::InstallFails;
                p.notes.push(
                    "--only-binary :all: with no binary distribution: install fails, nothing executes"
                        .into(),
                );
                return;
            }
            p.executions.push(TriggeredExecution {
                phase: Phase::BuildScript,
                hook_or_file: script.clone(),
                command_text: format!("{script} runs"),
                source: script.clone(),
            });
            for (command, symbol) in &facts.cmdclass_overrides {
                p.executions.push(TriggeredExecution {
                    phase: Phase::BuildScript,
                    hook_or_file: format!("cmdclass {command}"),
                    command_text: format!("{symbol}.run() replaces the {command} command"),
                    source: format!("{script}#cmdclass.{command}"),
                });
            }
        }
    }
}

fn predict_cargo(facts: &ManifestFacts, ctx: &InstallContext, p: &mut Prediction) {
    if ctx.command == Command::Update {
        p.notes
            .push("cargo update resolves versions without building".into());
        return;
    }
    if let Some(script) = &facts.build_script {
        // Compiled and executed just before the package itself is built.
        p.executions.push(TriggeredExecution {
            phase: Phase::BuildScript,
            hook_or_file: script.clone(),
            command_text: format!("{script} compiled and executed before the package build"),
            source: script.clone(),
        });
    }
}

fn predict_rubygems(facts: &ManifestFacts, ctx: &InstallContext, p: &mut Prediction) {
    // Extensions run on install and also when building the gem manually.
    if ctx.command == Command::Update {
        p.notes
            .push("gem update range not simulated; extensions run on install/build".into());
        return;
    }
    for ext in &facts.build_extensions {
        p.executions.push(TriggeredExecution {
            phase: Phase::BuildExtension,
            hook_or_file: ext.clone(),
            command_text: format!("{ext} executed during gem {}", match ctx.command {
                Command::Build => "build",
                _ => "install",
            }),
            source: format!("gemspec#extensions[{ext}]"),
        });
    }
}

fn predict_maven(facts: &ManifestFacts, ctx: &InstallContext, p: &mut Prediction) {
    let reachable_through = match ctx.command {
        Command::Build => "package",
        Command::Install => "install",
        Command::Update => {
            p.notes
                .push("maven dependency updates run no plugin executions".into());
            return;
        }
    };
    let limit = MAVEN_LIFECYCLE
        .iter()
        .position(|p| *p == reachable_through)
        .unwrap_or(0);
    for plugin in &facts.plugins {
        let coordinate = format!("{}:{}", plugin.group, plugin.artifact);
        if plugin.phases.is_empty() {
            p.notes.push(format!(
                "plugin {coordinate} has no explicit phase binding; goal-default bindings are not simulated"
            ));
            continue;
        }
        for phase in &plugin.phases {
            match MAVEN_LIFECYCLE.iter().position(|p| p == phase) {
                Some(idx) if idx <= limit => {
                    p.executions.push(TriggeredExecution {
                        phase: Phase::BuildScript,
                        hook_or_file: coordinate.clone(),
                        command_text: format!("plugin bound to {phase} phase"),
                        source: "pom.xml#build.plugins".into(),
                    });
                }
                Some(_) => {}
                None => {
                    p.notes.push(format!(
                        "plugin {coordinate} bound to unknown phase `{phase}`"
                    ));
                }
            }
        }
    }
}

/// Flag names that would suppress an execution, for the what-if column.
pub fn suppressible_by(ecosystem: Ecosystem, execution: &TriggeredExecution) -> Vec<String> {
    match ecosystem {
        Ecosystem::Npm => vec!["ignore_scripts".into()],
        Ecosystem::Composer => match execution.phase {
            Phase::AutoloadDump => vec!["no_autoloader".into()],
            Phase::UpdateCmd => vec!["lockfile_present".into()],
            _ => Vec::new(),
        },
        Ecosystem::PyPI => vec!["only_binary_all".into()],
        _ => Vec::new(),
    }
}

/// One row of the trigger table: a predicted execution plus the flags that
/// would suppress it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerRow {
    pub execution: TriggeredExecution,
    /// Suppressing flag names; empty means "none available".
    pub suppressible_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TriggerTable {
    pub ecosystem: Option<Ecosystem>,
    pub context: Option<InstallContext>,
    pub rows: Vec<TriggerRow>,
    pub outcome: InstallOutcome,
    pub notes: Vec<String>,
}

impl TriggerTable {
    /// Human-readable suppression column value.
    pub fn suppression_label(row: &TriggerRow) -> String {
        if row.suppressible_by.is_empty() {
            "none available".to_string()
        } else {
            row.suppressible_by.join(", ")
        }
    }
}

/// Deterministic what-if table of every predicted execution for the
/// snapshot under `ctx`.
pub fn simulate_report(snapshot: &PackageSnapshot, ctx: &InstallContext) -> TriggerTable {
    let ecosystem = snapshot.coords.ecosystem;
    let prediction = predict_executions(&snapshot.facts, ecosystem, ctx);
    TriggerTable {
        ecosystem: Some(ecosystem),
        context: Some(*ctx),
        rows: prediction
            .executions
            .into_iter()
            .map(|execution| {
                let suppressible = suppressible_by(ecosystem, &execution);
                TriggerRow {
                    execution,
                    suppressible_by: suppressible,
                }
            })
            .collect(),
        outcome: prediction.outcome,
        notes: prediction.notes,
    }
}
