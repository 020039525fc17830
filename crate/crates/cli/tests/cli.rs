use std::path::Path;
use std::process::{Command, Output};

fn heli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heli-ident"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth_into(dir: &Path, extra: &[&str]) -> String {
    let path = dir.join("data.csv").to_str().unwrap().to_string();
    let mut args = vec![
        "synth",
        "--flap-sign",
        "symmetric",
        "--duration",
        "14",
        "--seed",
        "3",
        "--out",
        &path,
    ];
    args.extend_from_slice(extra);
    let out = heli(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

#[test]
fn help_and_version_succeed() {
    for args in [&["--help"][..], &["identify", "--help"], &["--version"]] {
        let out = heli(args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), &[]);
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["identify", "--data", &data, "--out", o, "--bogus"],
        vec!["identify", "--data", &data, "--out", o, "--method", "simplex"],
        vec!["identify", "--data", &data, "--out", o, "--trials", "0"],
        vec!["identify", "--data", &data, "--out", o, "--split", "1.5"],
        vec!["identify", "--data", &data, "--out", o, "--no-filter", "--cutoff", "3"],
        vec!["compare", "--data", &data, "--out", o, "--methods", ","],
        vec!["synth", "--truth", "builtin:table9", "--out", o],
        vec!["synth", "--duration", "-1", "--out", o],
    ];
    for args in cases {
        let out = heli(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "t,p\n0,1\n0.01,oops\n").unwrap();
    let garbage = garbage.to_str().unwrap();

    let missing = heli(&["identify", "--data", "/nonexistent/log.csv", "--out", o]);
    assert_eq!(code(&missing), 2);
    assert!(
        stderr(&missing).contains("/nonexistent/log.csv"),
        "{}",
        stderr(&missing)
    );

    let bad = heli(&["identify", "--data", garbage, "--out", o]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("line 3"), "{}", stderr(&bad));

    // the printed flap signs make the truth unstable enough to leave the guard band
    let printed = heli(&["synth", "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&printed), 2);
    assert!(stderr(&printed).contains("diverges"), "{}", stderr(&printed));

    let model = heli(&["export", "--model", garbage, "--data", garbage, "--out", o]);
    assert_eq!(code(&model), 2);
}

#[test]
fn synth_writes_requested_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth_into(dir.path(), &["--measured-only"]);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header[0], "t");
    for hidden in ["r_fb", "c", "d"] {
        assert!(!header.iter().any(|h| h == hidden), "{header:?}");
    }
    assert_eq!(header.len(), 1 + 10 + 4);
    assert_eq!(reader.records().count(), 1400);
}

#[test]
fn identify_writes_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), &[]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "identify",
            "--data",
            &data,
            "--out",
            out.to_str().unwrap(),
            "--method",
            "ga",
            "--trials",
            "2",
            "--iters",
            "3",
            "--seed",
            "42",
            "--flap-sign",
            "symmetric",
        ];
        let res = heli(&args);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        assert!(String::from_utf8_lossy(&res.stdout).contains("rho[p]"));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["report.json", "best_params.json", "parameters.csv"] {
        let (x, y) = (
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
        );
        assert_eq!(x, y, "{file}");
    }
    let params = std::fs::read_to_string(a.join("parameters.csv")).unwrap();
    assert_eq!(params.lines().count(), 41);
    assert!(params.lines().nth(1).unwrap().starts_with("X_u,"));
    assert_eq!(
        std::fs::read_to_string(a.join("timing.csv")).unwrap().lines().count(),
        3
    );

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "ga");
    assert_eq!(report["config"]["seed"], 42);
    assert!(report.get("wall_clock_s").is_none());
}

#[test]
fn compare_writes_one_column_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), &[]);
    let out = dir.path().join("cmp");
    let args = [
        "compare",
        "--data",
        &data,
        "--out",
        out.to_str().unwrap(),
        "--methods",
        "iwo,pem",
        "--trials",
        "1",
        "--iters",
        "2",
        "--flap-sign",
        "symmetric",
    ];
    let res = heli(&args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let csv = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "state,iwo,pem");
    let states: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(states, ["p", "q", "phi", "theta"]);
    assert!(out.join("comparison.txt").exists());
    assert!(out.join("comparison.json").exists());
}

#[test]
fn export_of_truth_overlays_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path(), &["--noise", "0"]);
    let truth = dir.path().join("truth.json");
    let text = serde_json::to_string(&reference_json()).unwrap();
    std::fs::write(&truth, text).unwrap();
    let out = dir.path().join("series");
    let args = [
        "export",
        "--model",
        truth.to_str().unwrap(),
        "--data",
        &data,
        "--out",
        out.to_str().unwrap(),
        "--flap-sign",
        "symmetric",
    ];
    let res = heli(&args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));

    let mut reader = csv::Reader::from_path(out.join("phi.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["t", "measured", "simulated"]);
    let mut n = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let m: f64 = rec[1].parse().unwrap();
        let s: f64 = rec[2].parse().unwrap();
        assert!((m - s).abs() < 1e-9, "row {n}");
        n += 1;
    }
    assert_eq!(n, 1400);

    // the validation segment only
    let half = dir.path().join("half");
    let res = heli(&[
        "export",
        "--model",
        truth.to_str().unwrap(),
        "--data",
        &data,
        "--out",
        half.to_str().unwrap(),
        "--flap-sign",
        "symmetric",
        "--segment",
        "validate",
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let rows = std::fs::read_to_string(half.join("p.csv")).unwrap().lines().count();
    assert_eq!(rows, 700 + 1);
}

/// The builtin truth written out by name, as a user would supply a model.
fn reference_json() -> serde_json::Value {
    #[rustfmt::skip]
    let names = [
        ("X_u", -0.32066), ("X_a", 40.21598), ("Y_v", -0.93658), ("Y_b", -16.1151),
        ("L_u", -0.00121), ("L_v", -0.47665), ("L_b", 133.6111), ("L_w", 0.0),
        ("M_u", 0.1), ("M_v", -0.09822), ("M_a", 104.9063), ("M_w", 0.0),
        ("tau_f", 0.093851), ("A_b", -0.19213), ("A_c", 0.061597), ("B_a", 0.083523), ("B_d", 0.984168),
        ("Z_a", 8.166105), ("Z_b", 1.028478), ("Z_w", 0.045724), ("Z_r", -1.39101),
        ("N_v", 0.009652), ("N_p", -8.23373), ("N_w", 0.0), ("N_r", -8.69927), ("N_rfb", 42.69381),
        ("K_r", 2.350899), ("K_rfb", -14.5913), ("tau_s", 0.134939),
        ("Y_ped", 0.0), ("M_col", 0.0),
        ("A_lat", -0.09993), ("A_lon", 0.701979), ("B_lat", -0.07779), ("B_lon", -0.09942),
        ("Z_col", -6.05944), ("N_ped", -27.4672), ("N_col", -3.22316),
        ("C_lon", -0.09815), ("D_lat", 0.793573),
    ];
    serde_json::Value::Object(
        names
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
            .collect(),
    )
}
