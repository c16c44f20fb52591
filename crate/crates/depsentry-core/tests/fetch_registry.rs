//! Registry fetch tests against a loopback HTTP stub. The scanner's default
//! mode is fully offline; these exercise the opt-in fetch path end to end
//! without leaving 127.0.0.1.

use depsentry_core::config::{RegistryTemplate, ScanConfig};
use depsentry_core::ingest::{fetch_package, open_archive, FetchError, RegistrySource};
use depsentry_core::model::{Ecosystem, PackageCoordinates};
use depsentry_core::scan;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::TcpListener;

/// Minimal single-threaded HTTP/1.1 stub serving canned bodies.
fn spawn_stub(routes: HashMap<String, Vec<u8>>) -> (String, std::thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        // Serve until the test closes the listener side by dropping
        // connections; a fixed request budget keeps shutdown simple.
        for _ in 0..32 {
            let Ok((mut stream, _)) = listener.accept() else { break };
            let mut buf = [0u8; 4096];
            let n = stream.read(&mut buf).unwrap_or(0);
            let request = String::from_utf8_lossy(&buf[..n]);
            let path = request
                .lines()
                .next()
                .and_then(|line| line.split_whitespace().nth(1))
                .unwrap_or("/")
                .to_string();
            if path == "/__shutdown" {
                let _ = stream.write_all(b"HTTP/1.1 200 OK\r\ncontent-length: 0\r\n\r\n");
                break;
            }
            match routes.get(&path) {
                Some(body) => {
                    let header = format!(
                        "HTTP/1.1 200 OK\r\ncontent-length: {}\r\ncontent-type: application/octet-stream\r\n\r\n",
                        body.len()
                    );
                    let _ = stream.write_all(header.as_bytes());
                    let _ = stream.write_all(body);
                }
                None => {
                    let _ = stream
                        .write_all(b"HTTP/1.1 404 Not Found\r\ncontent-length: 0\r\n\r\n");
                }
            }
        }
    });
    (format!("http://{addr}"), handle)
}

fn shutdown_stub(base: &str) {
    let _ = ureq::get(&format!("{base}/__shutdown")).call();
}

fn stub_tarball() -> Vec<u8> {
    let mut builder = tar::Builder::new(Vec::new());
    let manifest = br#"{"name":"left-pad","version":"1.3.0","main":"index.js"}"#;
    for (path, content) in [
        ("package/package.json", manifest.as_slice()),
        ("package/index.js", b"module.exports = function leftPad(s) { return s; };\n"),
    ] {
        let mut header = tar::Header::new_gnu();
        header.set_size(content.len() as u64);
        header.set_mode(0o644);
        header.set_cksum();
        builder.append_data(&mut header, path, content).unwrap();
    }
    let tar_bytes = builder.into_inner().unwrap();
    let mut encoder = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    encoder.write_all(&tar_bytes).unwrap();
    encoder.finish().unwrap()
}

fn npm_config(digest_route: Option<&str>) -> ScanConfig {
    let mut config = ScanConfig::default();
    config.registries.insert(
        "npm".into(),
        RegistryTemplate {
            url_template: "{base}/{name}/-/{name}-{version}.tgz".into(),
            digest_template: digest_route.map(|r| format!("{{base}}{r}")),
        },
    );
    config
}

#[test]
fn fetch_stub_tarball_and_scan_it() {
    let tarball = stub_tarball();
    let mut routes = HashMap::new();
    routes.insert("/left-pad/-/left-pad-1.3.0.tgz".to_string(), tarball.clone());
    let (base, handle) = spawn_stub(routes);

    let coords = PackageCoordinates::new(Ecosystem::Npm, "left-pad", "1.3.0");
    let source = RegistrySource::new(Ecosystem::Npm, base.clone());
    let config = npm_config(None);
    let (bytes, format) = fetch_package(&coords, &source, &config).unwrap();
    assert_eq!(bytes, tarball);

    // Fetched bytes open and scan without any execution.
    let mut snapshot = open_archive(&bytes, format, &config).unwrap();
    scan::prepare_snapshot(&mut snapshot);
    assert_eq!(snapshot.coords.name, "left-pad");
    let outcome = scan::scan_snapshot(&snapshot, &config);
    assert!(outcome.findings.is_empty());

    shutdown_stub(&base);
    handle.join().unwrap();
}

#[test]
fn unknown_package_is_not_found() {
    let (base, handle) = spawn_stub(HashMap::new());
    let coords = PackageCoordinates::new(Ecosystem::Npm, "no-such-package", "0.0.1");
    let source = RegistrySource::new(Ecosystem::Npm, base.clone());
    let err = fetch_package(&coords, &source, &npm_config(None)).unwrap_err();
    assert!(matches!(err, FetchError::NotFound));
    shutdown_stub(&base);
    handle.join().unwrap();
}

#[test]
fn wrong_digest_is_checksum_mismatch() {
    let tarball = stub_tarball();
    let mut routes = HashMap::new();
    routes.insert("/left-pad/-/left-pad-1.3.0.tgz".to_string(), tarball.clone());
    routes.insert(
        "/digests/left-pad".to_string(),
        b"sha256:deadbeefdeadbeefdeadbeefdeadbeefdeadbeefdeadbeefdeadbeefdeadbeef".to_vec(),
    );
    let (base, handle) = spawn_stub(routes);

    let coords = PackageCoordinates::new(Ecosystem::Npm, "left-pad", "1.3.0");
    let source = RegistrySource::new(Ecosystem::Npm, base.clone());
    let config = npm_config(Some("/digests/left-pad"));
    let err = fetch_package(&coords, &source, &config).unwrap_err();
    match err {
        FetchError::ChecksumMismatch { expected, actual } => {
            assert!(expected.starts_with("deadbeef"));
            assert_eq!(actual, hex::encode(Sha256::digest(&tarball)));
        }
        other => panic!("expected checksum mismatch, got {other:?}"),
    }
    shutdown_stub(&base);
    handle.join().unwrap();
}

#[test]
fn matching_digest_passes() {
    let tarball = stub_tarball();
    let digest = hex::encode(Sha256::digest(&tarball));
    let mut routes = HashMap::new();
    routes.insert("/left-pad/-/left-pad-1.3.0.tgz".to_string(), tarball.clone());
    routes.insert(
        "/digests/left-pad".to_string(),
        format!("sha256:{digest}").into_bytes(),
    );
    let (base, handle) = spawn_stub(routes);

    let coords = PackageCoordinates::new(Ecosystem::Npm, "left-pad", "1.3.0");
    let source = RegistrySource::new(Ecosystem::Npm, base.clone());
    let config = npm_config(Some("/digests/left-pad"));
    let (bytes, _) = fetch_package(&coords, &source, &config).unwrap();
    assert_eq!(bytes, tarball);
    shutdown_stub(&base);
    handle.join().unwrap();
}
