use std::fs;
use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
format = "relaxchain-config/1"
seed = 4
eps = [0.05]

[model]
family = "linear"
velocities = [1.0, 0.0]
a = [1.0]
b = [1.0]

[domain]
x_left = -1.0
x_right = 2.0
dx = 0.02

[time]
t_end = 0.3
cfl = 0.9

[initial]
mode = "equilibrium"
total = { kind = "bump", center = 0.5, half_width = 0.4, height = 1.0 }

[audits]
matrix_samples = 20
"#;

fn relaxchain(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_relaxchain"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn subcommands_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    for (cmd, expect) in [
        ("run", "eps_0.05/audits.json"),
        ("sweep-eps", "sweep.csv"),
        ("refine", "refine.csv"),
        ("audit", "audits.json"),
    ] {
        let out = dir.path().join(cmd);
        let o = relaxchain(&[
            cmd,
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "2",
        ]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(
            o.status.success(),
            "{cmd}: {stdout}\n{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(
            stdout.contains("PASS") && !stdout.contains("FAIL"),
            "{cmd}: {stdout}"
        );
        assert!(out.join(expect).exists(), "{cmd}: missing {expect}");
        assert!(out.join("config.toml").exists());
    }
}

#[test]
fn seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("o");
    let o = relaxchain(&[
        "audit",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "123",
    ]);
    assert!(o.status.success());
    let echo = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 123"), "{echo}");
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 123"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("relaxchain-config/1", "v0"));
    let o = relaxchain(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsupported format"));
    let o = relaxchain(&["run", "--config", "/nonexistent.toml"]);
    assert_eq!(o.status.code(), Some(2));
}
