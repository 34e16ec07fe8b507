#![allow(dead_code)]

use std::path::PathBuf;

use dezh_core::data::demo;
use dezh_core::mt_client::MockBackend;
use dezh_core::pipeline::{run_experiment, ExperimentConfig};

/// A session directory produced by the pipeline on the demo titles.
pub fn demo_session() -> (tempfile::TempDir, PathBuf) {
    session_for(demo::TITLES)
}

pub fn session_for(titles: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("titles.tsv");
    std::fs::write(&path, titles).unwrap();
    let out = dir.path().join("session");
    let mock = MockBackend::parse(demo::TITLES_DICT, "mock:titles_dict.tsv").unwrap();
    run_experiment(&ExperimentConfig::new(path, &out), &mock).unwrap();
    (dir, out)
}

pub const TS: &str = "2026-01-01T00:00:00.000Z";
