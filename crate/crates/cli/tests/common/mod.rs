#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxydyn::synth::SyntheticSpec;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxydyn"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub struct Fixture {
    pub scene: PathBuf,
    pub pdg: PathBuf,
    pub pose: PathBuf,
}

/// Writes `spec` and runs `synth` on it inside `dir`.
pub fn synth_fixture(dir: &Path, spec: &SyntheticSpec) -> Fixture {
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(spec).unwrap()).unwrap();
    let out = dir.join("scene");
    let o = proxydyn_cli::commands::synth(&spec_path, &out).unwrap();
    Fixture {
        scene: o.scene,
        pdg: o.pdg,
        pose: o.pose,
    }
}
