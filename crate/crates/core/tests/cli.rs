//! End-to-end checks of the command-line binary: output stability, exit
//! codes, and the run-record sidecar.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_satqkd"))
}

#[test]
fn point_csv_is_byte_stable() {
    let run = || bin().args(["point", "--loss", "30"]).output().unwrap();
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variable,scheme,mode,n_z,n_x,e_z,e_x,l_z,l_x,l_total,r_per_pair"
    );
    // both schemes x both modes
    assert_eq!(lines.count(), 4);
}

#[test]
fn scheme_both_is_union_of_single_runs() {
    let get = |scheme: &str| {
        let out = bin()
            .args(["sweep", "--start", "20", "--stop", "22", "--step", "1", "--scheme", scheme])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    let both = get("both");
    let one = get("1qm");
    let two = get("2qm");
    assert_eq!(both.len(), one.len() + two.len());
    for line in one.iter().chain(two.iter()) {
        assert!(both.contains(line), "missing row: {line}");
    }
}

#[test]
fn exit_codes() {
    // invalid input -> 1
    let out = bin().args(["point", "--loss=-3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // analytic "no result" hard checks -> 2
    let out = bin().args(["crossover", "--lo", "28", "--hi", "30"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["point", "--loss", "50", "--scheme", "1qm", "--mode", "finite", "--require-key"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // success -> 0
    let out = bin().args(["crossover"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_writes_sidecar_and_svg() {
    let dir = std::env::temp_dir().join(format!("satqkd-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out_csv = dir.join("fig.csv");
    let out_svg = dir.join("fig.svg");
    let status = bin()
        .args(["sweep", "--start", "25", "--stop", "27", "--step", "1"])
        .arg("--out")
        .arg(&out_csv)
        .arg("--svg")
        .arg(&out_svg)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_csv.exists());
    assert!(out_svg.exists());
    let sidecar = dir.join("fig.csv.run.json");
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert!(record["params"]["s"].as_f64().unwrap() > 0.0);
    assert!(record["outputs"].as_array().unwrap().len() > 0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_and_overrides() {
    let dir = std::env::temp_dir().join(format!("satqkd-cfg-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("params.toml");
    std::fs::write(&cfg, "e_m = 0.0\n").unwrap();

    let run = |extra: &[&str]| {
        let mut cmd = bin();
        cmd.args(["point", "--loss", "40", "--scheme", "2qm", "--mode", "finite"]);
        cmd.args(extra);
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{:?}", out);
        String::from_utf8(out.stdout).unwrap()
    };
    let defaults = run(&[]);
    let ideal = run(&["--config", cfg.to_str().unwrap()]);
    // e_m = 0 keeps a key at 40 dB where the default e_m = 0.05 does not
    assert!(defaults.contains("0.00000e0,0.00000e0,0.00000e0\n"), "{defaults}");
    assert!(!ideal.contains("0.00000e0,0.00000e0,0.00000e0\n"), "{ideal}");
    // a flag overrides the file back to the default behavior
    let overridden = run(&["--config", cfg.to_str().unwrap(), "--em", "0.05"]);
    assert_eq!(overridden, defaults);

    // unknown config keys are invalid input
    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    let out = bin()
        .args(["point", "--loss", "30", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}
