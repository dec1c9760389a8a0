use std::path::Path;
use std::process::{Command, Output};

fn fdmac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdmac"))
        .args(args)
        .env_remove("FDMAC_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_reference_prints_derived_quantities() {
    let o = fdmac(&["validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    // 0.4 · (10^1.5)^0.02
    let want = 0.4 * 10f64.powf(1.5).powf(0.02);
    let line = out.lines().find(|l| l.starts_with("self_interference")).unwrap();
    let got: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((got - want).abs() < 1e-9, "{line}");
    assert!(out.contains("threshold_fd"));
    assert!(out.contains("prob_idle = 0.881856540084"));
}

#[test]
fn validate_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "fragment_time = \"50 ms\"\ntarget_detection_prob = 1.5\nwhatever = 3\n",
    );
    let o = fdmac(&["validate", "--config", &cfg]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("fragment_time"), "{err}");
    assert!(err.contains("target_detection_prob"), "{err}");
    assert!(err.contains("whatever"), "{err}");
}

#[test]
fn negative_db_is_converted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", "[radio]\npu_received_power = \"-20 dB\"\n");
    let o = fdmac(&["validate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("gamma_ps_hd = 0.01 (-20 dB)"));
}

#[test]
fn empty_sweep_writes_header_only() {
    let o = fdmac(&["sweep", "--param", "tx_power", "--values", ""]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("point,mode,protocol,param,value,num_su_pairs"));
}

#[test]
fn sweep_output_is_byte_stable_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        let o = fdmac(&[
            "--workers",
            workers,
            "sweep",
            "--param",
            "tx_power",
            "--values",
            "10 dB,15 dB",
            "--mode",
            "both",
            "--set",
            "mc_samples=20000",
            "--horizon",
            "100",
            "--replications",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("3", "b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bad_sweep_point_is_named() {
    let o = fdmac(&["sweep", "--param", "fragment_time", "--values", "10 ms,60 ms"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("sweep point 1 (fragment_time = 60 ms)"), "{err}");
}

#[test]
fn simulate_is_reproducible_and_seeded() {
    let args = ["simulate", "--horizon", "100", "--replications", "2", "--seed", "7"];
    let a = fdmac(&args);
    let b = fdmac(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = fdmac(&["simulate", "--horizon", "100", "--replications", "2", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(stdout(&a).lines().count(), 3);
}

#[test]
fn simulate_hd_with_fixed_sensing_time() {
    let o = fdmac(&[
        "simulate",
        "--protocol",
        "hd",
        "--sensing-time",
        "2 ms",
        "--horizon",
        "100",
        "--replications",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("0,"));
    assert!(row.contains(",hd,2,"), "{row}");
}

#[test]
fn crossval_small_scenario_agrees() {
    let o = fdmac(&[
        "crossval",
        "--set",
        "num_su_pairs=5",
        "--set",
        "integration_backend=quadrature",
        "--horizon",
        "300",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().ends_with(",true"), "{out}");
}

#[test]
fn optimize_writes_optimum_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = fdmac(&[
        "optimize",
        "--windows",
        "64",
        "--t-resolution",
        "2 ms",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    let nt: f64 = out.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(nt > 0.0);
    let t = std::fs::read_to_string(trace).unwrap();
    assert!(t.lines().count() > 10);
}

#[test]
fn wall_time_is_opt_in() {
    let plain = fdmac(&["analyze", "--set", "integration_backend=quadrature"]);
    assert!(!stdout(&plain).contains("wall_time_s"));
    let timed = fdmac(&["--wall-time", "analyze", "--set", "integration_backend=quadrature"]);
    assert!(stdout(&timed).lines().next().unwrap().ends_with("wall_time_s"));
}

#[test]
fn analyze_writes_terms() {
    let dir = tempfile::tempdir().unwrap();
    let terms = dir.path().join("terms.csv");
    let o = fdmac(&[
        "analyze",
        "--set",
        "integration_backend=quadrature",
        "--set",
        "contention_window=32",
        "--terms",
        terms.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = std::fs::read_to_string(terms).unwrap();
    assert_eq!(t.lines().count(), 33);
}
