use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
protocols = ["time_parity", "spatial_parity"]

[device]
preset = "be9_nist"

[init]
p0 = 0.5

[evolution]
omega_tilde = [0.04]
ct_final = 0.5
samples = 3

[integrator]
fock_cutoff = 40
dt = 0.0628

[output]
distributions_at = [-1]
x_points = 101

[measurement]
enabled = true
shots = 1000000

[flags]
shot_noise = true
seed = 7
"#;

fn ionparity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionparity"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_names_the_builtins() {
    let out = ionparity(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2_time_parity", "fig2_spatial_parity", "fig2_galilean_boost", "fig3_ca40", "fig4_be9"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn validate_names_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("preset = \"be9_nist\"", "preset = \"be9_nist\"\nheating = -1.0");
    let path = write(dir.path(), "bad.toml", &bad);
    let out = ionparity(&["validate", &path]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("device.heating"), "{err}");

    let good = write(dir.path(), "good.toml", SMALL);
    let out = ionparity(&["validate", &good]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("ok (2 runs)"));
}

#[test]
fn unknown_target_fails() {
    let out = ionparity(&["run", "no_such_scenario"]);
    assert!(!out.status.success());
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "small.toml", SMALL);
    let mut snapshots = Vec::new();
    for out_name in ["a", "b"] {
        let out_dir = dir.path().join(out_name);
        let out = ionparity(&["run", &path, "--out-dir", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files: Vec<_> = std::fs::read_dir(out_dir.join("small"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"summary.csv".to_string()));
        assert!(names.contains(&"time_parity_omega0p04_fidelity.csv".to_string()));
        assert!(names.contains(&"spatial_parity_omega0p04_readout.csv".to_string()));
        let bytes: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();
        snapshots.push((names, bytes));
    }
    assert_eq!(snapshots[0], snapshots[1]);

    let fid = std::fs::read_to_string(dir.path().join("a/small/time_parity_omega0p04_fidelity.csv")).unwrap();
    let mut lines = fid.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_over_nu,eta_omega_t,fidelity,x_mean_frame_a,x_mean_frame_b,corr_re,corr_im"
    );
    assert_eq!(lines.count(), 3);
}
