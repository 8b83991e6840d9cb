use std::path::Path;
use std::process::{Command, Output};

fn nlcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlcap"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("run nlcap")
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn help_lists_channel_defaults() {
    let out = nlcap(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["mi-sweep", "shaping-sweep", "capacity-sweep", "validate"] {
        assert!(text.contains(sub), "{sub}");
    }
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>()[..] == ["amax", "10", "saturation", "level", "of", "the", "tanh", "nonlinearity"]));
    assert!(text.lines().any(|l| l.trim_start().starts_with("sigma_z") && l.contains(" 1 ")));
}

#[test]
fn unknown_constellation_names_the_field() {
    let out = nlcap(&["shaping-sweep", "--constellation", "qam"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`constellation`"), "{err}");
}

#[test]
fn bad_config_line_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "amax = 10\nnoise = 2\n").unwrap();
    let out = nlcap(&["mi-sweep", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.cfg:2") && err.contains("`noise`"), "{err}");
}

#[test]
fn gaussian_peak_near_130() {
    let out = nlcap(&["mi-sweep", "--p-min", "130", "--p-max", "130"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows[0], "P,mi_bits,hy_bits,hyx_bits,err_est");
    let mi: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((mi - 2.44).abs() < 0.02, "{mi}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nsource = exponential\np_min = 1\np_max = 100\npoints_per_decade = 1\n").unwrap();
    let out_path = dir.path().join("mi.csv");
    let out = nlcap(&[
        "mi-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--p-max",
        "10",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&out_path);
    assert!(text.contains("# setting source = exponential"));
    assert!(text.contains("# setting p_max = 10\n"));
    assert_eq!(data_rows(&text).len(), 3);
}

#[test]
fn capacity_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = nlcap(&[
            "capacity-sweep",
            "--p-min",
            "1",
            "--p-max",
            "10",
            "--points-per-decade",
            "2",
            "--grid-points",
            "1025",
            "--max-n",
            "64",
            "--seed",
            "9",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        path
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(read(&a), read(&b));
    let dist_a = read(&dir.path().join("a.distributions.csv"));
    assert_eq!(dist_a, read(&dir.path().join("b.distributions.csv")));

    let text = read(&a);
    assert!(text.starts_with("# nlcap "));
    assert!(text.contains("# config_sha256: "));
    assert!(text.contains("# seed: 9\n"));
    let rows = data_rows(&text);
    assert_eq!(rows[0], "P,capacity_bits,n_particles,converged,restarts_used,seed");
    assert_eq!(rows.len(), 4);
    let c10: f64 = rows[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!((c10 - 1.61).abs() < 0.02, "{c10}");

    let dist = data_rows(&dist_a);
    assert_eq!(dist[0], "P,position,weight");
    let mass: f64 = dist[1..]
        .iter()
        .filter(|r| r.starts_with("10,"))
        .map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn shaping_sweep_runs() {
    let out = nlcap(&[
        "shaping-sweep",
        "--constellation",
        "ook",
        "--p-min",
        "1",
        "--p-max",
        "100",
        "--points-per-decade",
        "1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_rows(&text).len(), 4);
    assert!(text.contains("# command: shaping-sweep"));
}

#[test]
fn validate_passes_on_a_fresh_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checks.csv");
    let out = nlcap(&[
        "validate",
        "--p-min",
        "10",
        "--p-max",
        "1000",
        "--points-per-decade",
        "2",
        "--grid-points",
        "2049",
        "-o",
        path.to_str().unwrap(),
    ]);
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{report}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(report.contains("checks passed"));
    let text = read(&path);
    let rows = data_rows(&text);
    assert_eq!(rows[0], "check,parameter,observed,bound,pass");
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")), "{text}");
    for name in ["monotonicity", "running_max", "time_sharing", "mixture_power", "peak_power_remap"] {
        assert!(rows.iter().any(|r| r.starts_with(name)), "{name}");
    }
}
