//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use threadtoc::ingest::Discussion;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn sample() -> Discussion {
    Discussion::from_path(fixture("sample/sample.json")).expect("bundled sample")
}
