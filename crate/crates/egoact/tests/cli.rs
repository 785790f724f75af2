//! Exit-code and error-line contract of the command-line interface.

use std::process::Command;

fn egoact(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_egoact"))
        .args(args)
        .output()
        .expect("failed to spawn binary")
}

#[test]
fn missing_input_file_exits_2_with_io_class() {
    let out = egoact(&["sync", "/nonexistent/imu.txt", "/nonexistent/frames.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.starts_with("error: io.missing:"),
        "unexpected stderr: {stderr}"
    );
}

#[test]
fn unknown_config_key_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[train]\nlearning_rate = 0.1\n").unwrap();
    let out = egoact(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: config"), "unexpected stderr: {stderr}");
}

#[test]
fn simulate_writes_dataset_and_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let data = dir.path().join("data");
    std::fs::write(
        &cfg,
        format!(
            "[paths]\ndata_dir = {}\n\n[sim]\nn_episodes = 3\nepisode_len = 8\n",
            data.display()
        ),
    )
    .unwrap();
    let out = egoact(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for name in ["imu.txt", "frames.txt", "features.txt", "labels.txt", "manifest.txt"] {
        assert!(data.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn gradcheck_passes_from_the_cli() {
    let out = egoact(&["gradcheck"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gradcheck passed"), "unexpected stdout: {stdout}");
}
