#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn gaffect<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_gaffect"))
        .args(args)
        .output()
        .expect("spawn gaffect")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs a subcommand and panics with its stderr unless it exits 0.
pub fn ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let args: Vec<_> = args.into_iter().map(|a| a.as_ref().to_os_string()).collect();
    let out = gaffect(&args);
    assert_eq!(code(&out), 0, "gaffect {args:?}: {}", stderr(&out));
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// A config that shrinks the synthetic fixture and the forests for quick runs.
pub const SMALL_CONFIG: &str = r#"
[synth]
n_train = 60
n_validation = 30

[forests.rf_avgpool_rgb]
n_trees = 10
[forests.rf_avgpool_bgr]
n_trees = 10
[forests.rf_fc7_rgb]
n_trees = 10
[forests.rf_fc7_bgr]
n_trees = 10
[forests.rf_landmarks]
n_trees = 10
"#;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
    pub train: PathBuf,
    pub validation: PathBuf,
    pub bundle: PathBuf,
}

/// Small synthetic fixture with a trained bundle (weights still at defaults).
pub fn small_trained() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let data = dir.path().join("data");
    ok(["synth", "--out", p(&data), "--config", p(&config)]);
    let bundle = dir.path().join("bundle");
    let train = data.join("train.toml");
    ok(["train", "--manifest", p(&train), "--bundle", p(&bundle), "--config", p(&config)]);
    Fixture {
        validation: data.join("validation.toml"),
        dir,
        config,
        train,
        bundle,
    }
}
