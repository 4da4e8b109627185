#![allow(dead_code)]

use std::path::{Path, PathBuf};

use visolve::config::RunConfig;
use visolve::{ValidatedSpec, Vector};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join(format!("{name}.json"))
}

pub struct Fixture {
    pub name: String,
    pub config: RunConfig,
    pub spec: ValidatedSpec,
    /// Solution placed by construction.
    pub p: Vector,
}

pub fn load(name: &str) -> Fixture {
    let config = RunConfig::load(&fixture_path(name)).expect("fixture parses");
    let spec = ValidatedSpec::new(config.build_problem().expect("fixture builds")).expect("fixture validates");
    let p = config.reference_p.clone().expect("fixture records its solution");
    Fixture { name: name.to_string(), config, spec, p }
}

/// All bundled fixtures, in file-name order.
pub fn all() -> Vec<Fixture> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .filter_map(|e| {
            let path = e.ok()?.path();
            (path.extension()? == "json").then(|| path.file_stem()?.to_str().map(String::from))?
        })
        .collect();
    names.sort();
    names.iter().map(|n| load(n)).collect()
}

pub fn v(entries: &[f64]) -> Vector {
    Vector::new(entries.to_vec()).unwrap()
}
