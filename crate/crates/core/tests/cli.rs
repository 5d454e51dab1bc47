use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use cbf::cli::{parse_config, Mode};

const BASE: &str = r#"
seed = 7
snapshot_stride = 5

[grid]
dim = 2
n = 16

[params]
mu = 0.5
alpha = 1.0
beta = 1.0
r = 3.0
t_final = 0.05
dt = 0.005

[problem]
case = "decaying-vortex"
"#;

fn cbf(mode: &str, config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_cbf"))
        .arg(mode)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("CBF_THREADS", "2")
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Every artifact except the manifest, which carries wall-clock times.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn unknown_keys_are_named() {
    let err = parse_config(&format!("{BASE}\n[solver]\nbogus = 1\n")).unwrap_err();
    assert!(err.to_string().contains("bogus"), "{err}");
}

#[test]
fn mode_strings_round_trip() {
    for m in [Mode::Direct, Mode::Invert, Mode::VerifyEnergy, Mode::Stability, Mode::Admissibility] {
        assert_eq!(m.name().parse::<Mode>().unwrap(), m);
    }
    assert!("sideways".parse::<Mode>().is_err());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE);
    for mode in ["direct", "invert"] {
        let a = dir.path().join(format!("{mode}-a"));
        let b = dir.path().join(format!("{mode}-b"));
        assert_eq!(cbf(mode, &config, &a), 0);
        assert_eq!(cbf(mode, &config, &b), 0);
        let (fa, fb) = (artifacts(&a), artifacts(&b));
        assert!(fa.len() > 2, "{:?}", fa.keys());
        assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
        for (name, bytes) in &fa {
            assert!(bytes == &fb[name], "{mode}: {name} differs between runs");
        }
    }
}

#[test]
fn exit_codes_separate_errors_from_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &BASE.replace("r = 3.0", "r = 0.5"));
    let res = Command::new(env!("CARGO_BIN_EXE_cbf"))
        .args(["direct", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("params: r must be >= 1"));

    // An unforced problem has no source to perturb, so the sweep cannot
    // produce a constant and the check fails.
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("stability");
    assert_eq!(cbf("stability", &cfg, &out), 2);

    let out = dir.path().join("energy");
    assert_eq!(cbf("verify-energy", &cfg, &out), 0);
    assert!(out.join("energy_report.json").exists());
}
