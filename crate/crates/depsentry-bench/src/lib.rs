//! Benchmark crate: see `benches/scan.rs`. The library target exists only
//! so the workspace member builds as a normal crate.
