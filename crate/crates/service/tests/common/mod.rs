#![allow(dead_code)]

use std::path::Path;

use adaptrec::{ContextSource, EngineConfig};
use tempfile::TempDir;

pub const ALPHA: &str = "#krc 1
a1\tk,k2\ta2
a2\tk,k2\ta3
a3\tk\t
a4\tk2,k3\ta1
a5\tk3\t
a6\tk3\t
";

pub const BETA: &str = "#krc 1
b1\tk\tb2
b2\tk,k4\t
b3\tk4\tb2
";

pub fn source(dir: &Path, id: &str, text: &str) -> ContextSource {
    let path = dir.join(format!("{id}.krc"));
    std::fs::write(&path, text).unwrap();
    ContextSource {
        id: id.to_string(),
        records: path,
        min_keyword_frequency: 1,
        stem: false,
    }
}

/// Two small contexts written into a fresh directory.
pub fn two_contexts() -> (TempDir, EngineConfig) {
    let dir = tempfile::tempdir().unwrap();
    let config = EngineConfig {
        contexts: vec![source(dir.path(), "alpha", ALPHA), source(dir.path(), "beta", BETA)],
        ..EngineConfig::default()
    };
    (dir, config)
}

pub fn one_context() -> (TempDir, EngineConfig) {
    let (dir, mut config) = two_contexts();
    config.contexts.truncate(1);
    (dir, config)
}

pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
