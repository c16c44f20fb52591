//! Safe fixture corpus generator: one minimal package per applicable
//! (ecosystem, technique) cell, one benign control per ecosystem, and the
//! two obfuscation/monkey-patching exemplars.
//!
//! Every payload is strictly inert — an echo of a fixed marker string — and
//! nothing in this repository or the generated corpus ever executes them.

use crate::model::{Ecosystem, TechniqueId};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Marker string used by every fixture payload.
pub const FIXTURE_MARKER: &str = "echo depsentry-fixture";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Technique,
    Control,
    Evasion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureEntry {
    /// Directory of the generated package, relative to the corpus root.
    pub path: String,
    pub ecosystem: Ecosystem,
    pub kind: FixtureKind,
    /// Exactly the finding ids a scan of this fixture must produce.
    pub expected: Vec<TechniqueId>,
    /// Where the finding must point: `file#manifest.key` or `file:line`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected_location: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub marker: String,
    pub entries: Vec<FixtureEntry>,
}

impl CorpusManifest {
    pub fn technique_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == FixtureKind::Technique)
            .count()
    }

    pub fn control_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == FixtureKind::Control)
            .count()
    }
}

struct Fixture {
    rel_dir: &'static str,
    ecosystem: Ecosystem,
    kind: FixtureKind,
    expected: &'static [TechniqueId],
    expected_location: Option<&'static str>,
    files: &'static [(&'static str, &'static str)],
}

const LISTING7_SETUP_PY: &str = "import sys\nl1l_cringe_ = sys.version_info [0] == 2\nl1l1l_cringe_ = 2048\nl11_cringe_ = 7\ndef l111_cringe_ (l1ll_cringe_):\n    global l11l1_cringe_\n    l11l_cringe_ = ord (l1ll_cringe_ [-1])\n    ll_cringe_ = l1ll_cringe_ [:-1]\n    l1l1_cringe_ = l11l_cringe_\n    l1_cringe_ = ll_cringe_ [:l1l1_cringe_] + ll_cringe_ [l1l1_cringe_:]\n";

const LISTING8_PATCH_PY: &str = "import os, builtins\n\noriginal_print = print\ndef hacked_print(self):\n    original_print(self)\n    os.system(\"echo depsentry-fixture\")\nbuiltins.print = hacked_print\n";

const FIXTURES: &[Fixture] = &[
    // --- npm -------------------------------------------------------------
    Fixture {
        rel_dir: "npm/I1",
        expected_location: Some("package.json#scripts.pre-install"),
        ecosystem: Ecosystem::Npm,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::I1],
        files: &[(
            "package.json",
            "{\n    \"name\": \"i1-fixture\",\n    \"version\": \"1.0.0\",\n    \"scripts\": {\n        \"pre-install\": \"echo depsentry-fixture\"\n    }\n}\n",
        )],
    },
    Fixture {
        rel_dir: "npm/R1",
        expected_location: Some("index.js:1"),
        ecosystem: Ecosystem::Npm,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R1],
        files: &[
            (
                "package.json",
                "{\n    \"name\": \"r1-fixture\",\n    \"version\": \"1.0.0\",\n    \"main\": \"index.js\"\n}\n",
            ),
            (
                "index.js",
                "require('child_process').execSync('echo depsentry-fixture');\nmodule.exports = {};\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "npm/R2",
        expected_location: Some("index.js:3"),
        ecosystem: Ecosystem::Npm,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            (
                "package.json",
                "{\n    \"name\": \"r2-fixture\",\n    \"version\": \"1.0.0\",\n    \"main\": \"index.js\"\n}\n",
            ),
            (
                "index.js",
                "class Util {\n  fetchData() {\n    require('child_process').execSync('echo depsentry-fixture');\n    return null;\n  }\n}\nmodule.exports = Util;\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "npm/R3",
        expected_location: Some("index.js:3"),
        ecosystem: Ecosystem::Npm,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            (
                "package.json",
                "{\n    \"name\": \"r3-fixture\",\n    \"version\": \"1.0.0\",\n    \"main\": \"index.js\"\n}\n",
            ),
            (
                "index.js",
                "class Client {\n  constructor() {\n    require('child_process').execSync('echo depsentry-fixture');\n  }\n}\nmodule.exports = Client;\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "npm/control",
        expected_location: None,
        ecosystem: Ecosystem::Npm,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            (
                "package.json",
                "{\n    \"name\": \"npm-control\",\n    \"version\": \"1.0.0\",\n    \"main\": \"index.js\"\n}\n",
            ),
            (
                "index.js",
                "function add(a, b) {\n  return a + b;\n}\nmodule.exports = { add };\n",
            ),
        ],
    },
    // --- pypi ------------------------------------------------------------
    Fixture {
        rel_dir: "pypi/I2",
        expected_location: Some("setup.py:3"),
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::I2],
        files: &[(
            "setup.py",
            "from setuptools import setup\n\nimport os; os.system(\"echo depsentry-fixture\")\nsetup(name='i2-fixture', version='1.0.0')\n",
        )],
    },
    Fixture {
        rel_dir: "pypi/R1",
        expected_location: Some("r1_fixture/__init__.py:2"),
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R1],
        files: &[
            (
                "setup.py",
                "from setuptools import setup\n\nsetup(name='r1-fixture', version='1.0.0')\n",
            ),
            (
                "r1_fixture/__init__.py",
                "import os\nos.system(\"echo depsentry-fixture\")\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "pypi/R2",
        expected_location: Some("r2_fixture/util.py:5"),
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            (
                "setup.py",
                "from setuptools import setup\n\nsetup(name='r2-fixture', version='1.0.0')\n",
            ),
            ("r2_fixture/__init__.py", "from .util import Util\n"),
            (
                "r2_fixture/util.py",
                "import os\n\nclass Util:\n    def fetch(self):\n        os.system(\"echo depsentry-fixture\")\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "pypi/R3",
        expected_location: Some("r3_fixture/frame.py:5"),
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            (
                "setup.py",
                "from setuptools import setup\n\nsetup(name='r3-fixture', version='1.0.0')\n",
            ),
            ("r3_fixture/__init__.py", "from .frame import Dataframe\n"),
            (
                "r3_fixture/frame.py",
                "import os\n\nclass Dataframe:\n    def __init__(self):\n        os.system(\"echo depsentry-fixture\")\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "pypi/control",
        expected_location: None,
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            (
                "setup.py",
                "from setuptools import setup\n\nsetup(name='pypi-control', version='1.0.0')\n",
            ),
            ("pypi_control/__init__.py", "from .core import add\n__all__ = [\"add\"]\n"),
            ("pypi_control/core.py", "def add(a, b):\n    return a + b\n"),
        ],
    },
    // --- composer ----------------------------------------------------------
    Fixture {
        rel_dir: "composer/I1",
        expected_location: Some("composer.json#scripts.pre-install-cmd"),
        ecosystem: Ecosystem::Composer,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::I1],
        files: &[(
            "composer.json",
            "{\n    \"name\": \"depsentry/i1-fixture\",\n    \"version\": \"1.0.0\",\n    \"scripts\": {\n        \"pre-install-cmd\": \"echo depsentry-fixture\"\n    }\n}\n",
        )],
    },
    Fixture {
        rel_dir: "composer/R2",
        expected_location: Some("src/Util.php:4"),
        ecosystem: Ecosystem::Composer,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            (
                "composer.json",
                "{\n    \"name\": \"depsentry/r2-fixture\",\n    \"version\": \"1.0.0\"\n}\n",
            ),
            (
                "src/Util.php",
                "<?php\nclass Util {\n    public function fetch() {\n        exec('echo depsentry-fixture');\n    }\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "composer/R3",
        expected_location: Some("src/Client.php:4"),
        ecosystem: Ecosystem::Composer,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            (
                "composer.json",
                "{\n    \"name\": \"depsentry/r3-fixture\",\n    \"version\": \"1.0.0\"\n}\n",
            ),
            (
                "src/Client.php",
                "<?php\nclass Client {\n    public function __construct() {\n        exec('echo depsentry-fixture');\n    }\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "composer/control",
        expected_location: None,
        ecosystem: Ecosystem::Composer,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            (
                "composer.json",
                "{\n    \"name\": \"depsentry/composer-control\",\n    \"version\": \"1.0.0\"\n}\n",
            ),
            (
                "src/Math.php",
                "<?php\nclass Math {\n    public function add($a, $b) {\n        return $a + $b;\n    }\n}\n",
            ),
        ],
    },
    // --- rubygems ----------------------------------------------------------
    Fixture {
        rel_dir: "rubygems/I3",
        expected_location: Some("i3_fixture.gemspec:5"),
        ecosystem: Ecosystem::RubyGems,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::I3],
        files: &[
            (
                "i3_fixture.gemspec",
                "Gem::Specification.new do |s|\n  s.name        = \"i3-fixture\"\n  s.version     = \"1.0.0\"\n  s.summary     = \"fixture\"\n  s.extensions  = [\"extconf.rb\"]\nend\n",
            ),
            (
                "extconf.rb",
                "require \"mkmf\"\n\nexec(\"echo depsentry-fixture\")\n\ncreate_makefile(\"\")\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "rubygems/R1",
        expected_location: Some("lib/r1_fixture.rb:1"),
        ecosystem: Ecosystem::RubyGems,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R1],
        files: &[
            (
                "r1_fixture.gemspec",
                "Gem::Specification.new do |s|\n  s.name    = \"r1-fixture\"\n  s.version = \"1.0.0\"\n  s.summary = \"fixture\"\n  s.files   = [\"lib/r1_fixture.rb\"]\nend\n",
            ),
            (
                "lib/r1_fixture.rb",
                "system(\"echo depsentry-fixture\")\n\nmodule R1Fixture\nend\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "rubygems/R2",
        expected_location: Some("lib/r2_fixture.rb:3"),
        ecosystem: Ecosystem::RubyGems,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            (
                "r2_fixture.gemspec",
                "Gem::Specification.new do |s|\n  s.name    = \"r2-fixture\"\n  s.version = \"1.0.0\"\n  s.summary = \"fixture\"\n  s.files   = [\"lib/r2_fixture.rb\"]\nend\n",
            ),
            (
                "lib/r2_fixture.rb",
                "class Util\n  def fetch\n    system(\"echo depsentry-fixture\")\n  end\nend\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "rubygems/R3",
        expected_location: Some("lib/r3_fixture.rb:3"),
        ecosystem: Ecosystem::RubyGems,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            (
                "r3_fixture.gemspec",
                "Gem::Specification.new do |s|\n  s.name    = \"r3-fixture\"\n  s.version = \"1.0.0\"\n  s.summary = \"fixture\"\n  s.files   = [\"lib/r3_fixture.rb\"]\nend\n",
            ),
            (
                "lib/r3_fixture.rb",
                "class Client\n  def initialize\n    system(\"echo depsentry-fixture\")\n  end\nend\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "rubygems/control",
        expected_location: None,
        ecosystem: Ecosystem::RubyGems,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            (
                "control.gemspec",
                "Gem::Specification.new do |s|\n  s.name    = \"gem-control\"\n  s.version = \"1.0.0\"\n  s.summary = \"control\"\n  s.files   = [\"lib/control.rb\"]\nend\n",
            ),
            (
                "lib/control.rb",
                "class Control\n  def add(a, b)\n    a + b\n  end\nend\n",
            ),
        ],
    },
    // --- cargo -------------------------------------------------------------
    Fixture {
        rel_dir: "cargo/I2",
        expected_location: Some("build.rs:4"),
        ecosystem: Ecosystem::Cargo,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::I2],
        files: &[
            (
                "Cargo.toml",
                "[package]\nname = \"i2-fixture\"\nversion = \"1.0.0\"\nedition = \"2021\"\n",
            ),
            (
                "build.rs",
                "use std::process::Command;\n\nfn main() {\n    let output = Command::new(\"sh\")\n        .arg(\"-c\")\n        .arg(\"echo depsentry-fixture\")\n        .output();\n    let _ = output;\n}\n",
            ),
            ("src/lib.rs", "pub fn add(a: i32, b: i32) -> i32 {\n    a + b\n}\n"),
        ],
    },
    Fixture {
        rel_dir: "cargo/R2",
        expected_location: Some("src/lib.rs:7"),
        ecosystem: Ecosystem::Cargo,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            (
                "Cargo.toml",
                "[package]\nname = \"r2-fixture\"\nversion = \"1.0.0\"\nedition = \"2021\"\n",
            ),
            (
                "src/lib.rs",
                "use std::process::Command;\n\npub struct Util;\n\nimpl Util {\n    pub fn fetch(&self) {\n        let _ = Command::new(\"echo\").arg(\"depsentry-fixture\").status();\n    }\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "cargo/R3",
        expected_location: Some("src/lib.rs:7"),
        ecosystem: Ecosystem::Cargo,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            (
                "Cargo.toml",
                "[package]\nname = \"r3-fixture\"\nversion = \"1.0.0\"\nedition = \"2021\"\n",
            ),
            (
                "src/lib.rs",
                "use std::process::Command;\n\npub struct Client;\n\nimpl Client {\n    pub fn new() -> Self {\n        let _ = Command::new(\"echo\").arg(\"depsentry-fixture\").status();\n        Client\n    }\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "cargo/control",
        expected_location: None,
        ecosystem: Ecosystem::Cargo,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            (
                "Cargo.toml",
                "[package]\nname = \"cargo-control\"\nversion = \"1.0.0\"\nedition = \"2021\"\n",
            ),
            ("src/lib.rs", "pub fn add(a: i32, b: i32) -> i32 {\n    a + b\n}\n"),
        ],
    },
    // --- go ----------------------------------------------------------------
    Fixture {
        rel_dir: "go/R1",
        expected_location: Some("init.go:5"),
        ecosystem: Ecosystem::Go,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R1],
        files: &[
            ("go.mod", "module example.com/r1-fixture\n\ngo 1.21\n"),
            (
                "init.go",
                "package r1fixture\n\nimport \"os/exec\"\n\nfunc init() {\n\t_ = exec.Command(\"echo\", \"depsentry-fixture\").Run()\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "go/R2",
        expected_location: Some("client.go:8"),
        ecosystem: Ecosystem::Go,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            ("go.mod", "module example.com/r2-fixture\n\ngo 1.21\n"),
            (
                "client.go",
                "package r2fixture\n\nimport \"os/exec\"\n\ntype Client struct{}\n\nfunc (c *Client) Fetch() {\n\t_ = exec.Command(\"echo\", \"depsentry-fixture\").Run()\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "go/R3",
        expected_location: Some("new.go:8"),
        ecosystem: Ecosystem::Go,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            ("go.mod", "module example.com/r3-fixture\n\ngo 1.21\n"),
            (
                "new.go",
                "package r3fixture\n\nimport \"os/exec\"\n\ntype Client struct{}\n\nfunc NewClient() *Client {\n\t_ = exec.Command(\"echo\", \"depsentry-fixture\").Run()\n\treturn &Client{}\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "go/control",
        expected_location: None,
        ecosystem: Ecosystem::Go,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            ("go.mod", "module example.com/go-control\n\ngo 1.21\n"),
            (
                "add.go",
                "package gocontrol\n\nfunc Add(a, b int) int {\n\treturn a + b\n}\n",
            ),
        ],
    },
    // --- maven -------------------------------------------------------------
    Fixture {
        rel_dir: "maven/R2",
        expected_location: Some("src/main/java/Fixture.java:4"),
        ecosystem: Ecosystem::Maven,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R2],
        files: &[
            (
                "pom.xml",
                "<?xml version=\"1.0\"?>\n<project>\n  <groupId>com.example</groupId>\n  <artifactId>r2-fixture</artifactId>\n  <version>1.0.0</version>\n</project>\n",
            ),
            (
                "src/main/java/Fixture.java",
                "public class Fixture {\n    public void fetch() {\n        try {\n            Runtime.getRuntime().exec(\"echo depsentry-fixture\");\n        } catch (Exception e) {\n            throw new RuntimeException(e);\n        }\n    }\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "maven/R3",
        expected_location: Some("src/main/java/Loader.java:4"),
        ecosystem: Ecosystem::Maven,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R3],
        files: &[
            (
                "pom.xml",
                "<?xml version=\"1.0\"?>\n<project>\n  <groupId>com.example</groupId>\n  <artifactId>r3-fixture</artifactId>\n  <version>1.0.0</version>\n</project>\n",
            ),
            (
                "src/main/java/Loader.java",
                "public class Loader {\n    static {\n        try {\n            Runtime.getRuntime().exec(\"echo depsentry-fixture\");\n        } catch (Exception e) {\n            throw new RuntimeException(e);\n        }\n    }\n}\n",
            ),
        ],
    },
    Fixture {
        rel_dir: "maven/R4",
        expected_location: Some("pom.xml:8"),
        ecosystem: Ecosystem::Maven,
        kind: FixtureKind::Technique,
        expected: &[TechniqueId::R4],
        files: &[(
            "pom.xml",
            "<?xml version=\"1.0\"?>\n<project>\n  <groupId>com.example</groupId>\n  <artifactId>r4-fixture</artifactId>\n  <version>1.0.0</version>\n  <build>\n    <plugins>\n      <plugin>\n        <groupId>com.github.codingandcoding</groupId>\n        <artifactId>maven-compiler-plugin</artifactId>\n        <version>3.9.0</version>\n        <executions>\n          <execution>\n            <phase>compile</phase>\n          </execution>\n        </executions>\n      </plugin>\n    </plugins>\n  </build>\n</project>\n",
        )],
    },
    Fixture {
        rel_dir: "maven/control",
        expected_location: None,
        ecosystem: Ecosystem::Maven,
        kind: FixtureKind::Control,
        expected: &[],
        files: &[
            (
                "pom.xml",
                "<?xml version=\"1.0\"?>\n<project>\n  <groupId>com.example</groupId>\n  <artifactId>maven-control</artifactId>\n  <version>1.0.0</version>\n</project>\n",
            ),
            (
                "src/main/java/Control.java",
                "public class Control {\n    public int add(int a, int b) {\n        return a + b;\n    }\n}\n",
            ),
        ],
    },
    // --- evasion exemplars ----------------------------------------------------
    Fixture {
        rel_dir: "evasion/identifier-obfuscation",
        expected_location: Some("setup.py:2"),
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Evasion,
        expected: &[TechniqueId::EvStId],
        files: &[("setup.py", LISTING7_SETUP_PY)],
    },
    Fixture {
        rel_dir: "evasion/monkey-patch",
        expected_location: Some("patchpkg/patch.py:7"),
        ecosystem: Ecosystem::PyPI,
        kind: FixtureKind::Evasion,
        expected: &[TechniqueId::EvDyMod],
        files: &[
            (
                "setup.py",
                "from setuptools import setup\n\nsetup(name='monkey-patch-fixture', version='0.2.0')\n",
            ),
            ("patchpkg/__init__.py", "from . import patch\n"),
            ("patchpkg/patch.py", LISTING8_PATCH_PY),
        ],
    },
];

const CORPUS_README: &str = "# depsentry fixture corpus\n\nGenerated packages exercising each detectable technique per ecosystem,\nplus one benign control per ecosystem and two evasion exemplars.\n\nEvery payload is strictly inert: the only command any fixture carries is\n`echo depsentry-fixture`, and the scanner never executes it. The corpus\nexists to calibrate and regression-test detection, not to demonstrate\nattacks.\n\n`manifest.json` maps each fixture directory to the exact finding ids a\nscan must produce; controls must produce none.\n";

/// Write the corpus under `outdir` and return (and persist) its manifest.
pub fn generate_fixtures(outdir: &Path) -> std::io::Result<CorpusManifest> {
    let mut entries = Vec::new();
    for fixture in FIXTURES {
        let dir = outdir.join(fixture.rel_dir);
        std::fs::create_dir_all(&dir)?;
        for (rel, content) in fixture.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, content)?;
        }
        entries.push(FixtureEntry {
            path: fixture.rel_dir.to_string(),
            ecosystem: fixture.ecosystem,
            kind: fixture.kind,
            expected: fixture.expected.to_vec(),
            expected_location: fixture.expected_location.map(String::from),
        });
    }
    let manifest = CorpusManifest {
        marker: FIXTURE_MARKER.to_string(),
        entries,
    };
    std::fs::write(
        outdir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    std::fs::write(outdir.join("README.md"), CORPUS_README)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::applicability;

    #[test]
    fn corpus_has_33_entries_with_expected_split() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_fixtures(dir.path()).unwrap();
        assert_eq!(manifest.entries.len(), 33);
        assert_eq!(manifest.technique_count(), 24);
        assert_eq!(manifest.control_count(), 7);
        assert_eq!(
            manifest
                .entries
                .iter()
                .filter(|e| e.kind == FixtureKind::Evasion)
                .count(),
            2
        );
        assert!(dir.path().join("manifest.json").is_file());
        assert!(dir.path().join("README.md").is_file());
    }

    #[test]
    fn technique_fixtures_match_applicability_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_fixtures(dir.path()).unwrap();
        // Every technique fixture sits in an applicable cell...
        for entry in manifest
            .entries
            .iter()
            .filter(|e| e.kind == FixtureKind::Technique)
        {
            assert_eq!(entry.expected.len(), 1);
            assert!(
                applicability(entry.ecosystem, entry.expected[0]),
                "{}: {} not applicable",
                entry.path,
                entry.expected[0]
            );
        }
        // ...and every applicable cell has exactly one fixture.
        for eco in Ecosystem::ALL {
            for tech in TechniqueId::ACE {
                let count = manifest
                    .entries
                    .iter()
                    .filter(|e| {
                        e.kind == FixtureKind::Technique
                            && e.ecosystem == eco
                            && e.expected == vec![tech]
                    })
                    .count();
                let expected = usize::from(applicability(eco, tech));
                assert_eq!(count, expected, "cell ({eco}, {tech})");
            }
        }
    }

    #[test]
    fn go_set_has_no_install_time_fixtures() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_fixtures(dir.path()).unwrap();
        let go_ids: Vec<TechniqueId> = manifest
            .entries
            .iter()
            .filter(|e| e.ecosystem == Ecosystem::Go && e.kind == FixtureKind::Technique)
            .flat_map(|e| e.expected.clone())
            .collect();
        assert_eq!(
            go_ids,
            vec![TechniqueId::R1, TechniqueId::R2, TechniqueId::R3]
        );
    }

    #[test]
    fn all_payloads_are_inert_echoes() {
        for fixture in FIXTURES {
            for (_, content) in fixture.files {
                // No live commands: every shell-looking payload is the
                // fixed echo marker.
                for needle in ["curl", "wget", "bash -c", "| sh", "nc -"] {
                    assert!(
                        !content.contains(needle),
                        "{}: live-looking payload {needle:?}",
                        fixture.rel_dir
                    );
                }
            }
        }
    }
}
