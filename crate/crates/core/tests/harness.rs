use std::path::Path;
use std::process::Command;

use pushpull_sim::harness::{
    cli_main, meta_path, parse_config, read_csv, run_experiment, sweep_output_path, write_csv,
};

const CONFIG: &str = r#"{
    "n": 8, "p": 6, "d": 6, "seed": 3,
    "algo": "cpp", "compressor": "quantize:b=4", "gamma": 0.5, "alpha_prime": 0.3,
    "iters": 40,
    "objective": {"kind": "quadratic", "eig_min": 1, "eig_max": 5, "seed": 2}
}"#;

const DIVERGENT: &str = r#"{
    "n": 8, "p": 6, "d": 6, "algo": "pushpull", "alpha_prime": 5.0, "iters": 2000,
    "objective": {"kind": "quadratic", "eig_min": 1, "eig_max": 1000}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> i32 {
    cli_main(std::iter::once("cppsim").chain(args.iter().copied()))
}

#[test]
fn csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&parse_config(CONFIG).unwrap()).unwrap();
    assert_eq!(out.records.len(), 41);
    let path = dir.path().join("run.csv");
    write_csv(&out, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "iter,loss_gap,consensus_err,tracking_residual,bits"
    );
    assert_eq!(text.lines().count(), 42);
    assert_eq!(read_csv(&path).unwrap(), out.records);
    assert!(out.records.windows(2).all(|w| w[0].bits <= w[1].bits));

    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta_path(&path)).unwrap()).unwrap();
    let echoed = serde_json::to_string(&meta["config"]).unwrap();
    assert_eq!(parse_config(&echoed).unwrap(), out.config);
}

#[test]
fn three_records_make_four_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(CONFIG).unwrap();
    cfg.iters = 2;
    let path = dir.path().join("short.csv");
    write_csv(&run_experiment(&cfg).unwrap(), &path).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 4);
}

#[test]
fn same_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(CONFIG).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_csv(&run_experiment(&cfg).unwrap(), &a).unwrap();
    write_csv(&run_experiment(&cfg).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn longer_runs_extend_shorter_ones() {
    let mut cfg = parse_config(CONFIG).unwrap();
    cfg.algo = pushpull_sim::algorithms::Algorithm::Bcpp;
    cfg.gamma = 0.05;
    cfg.eta = Some(0.05);
    let long = run_experiment(&cfg).unwrap().records;
    cfg.iters = 15;
    let short = run_experiment(&cfg).unwrap().records;
    assert_eq!(&long[..16], &short[..]);
}

#[test]
fn identity_cpp_reproduces_pushpull_losses() {
    let mut cfg = parse_config(CONFIG).unwrap();
    cfg.compressor = "identity".parse().unwrap();
    cfg.gamma = 1.0;
    cfg.alpha_prime = Some(0.04);
    cfg.iters = 200;
    let cpp = run_experiment(&cfg).unwrap().records;
    cfg.algo = pushpull_sim::algorithms::Algorithm::PushPull;
    let pp = run_experiment(&cfg).unwrap().records;
    assert!(pp.last().unwrap().loss_gap < 1e-3);
    for (a, b) in cpp.iter().zip(&pp) {
        assert!((a.loss_gap - b.loss_gap).abs() <= 1e-10);
    }
}

#[test]
fn zero_iterations_record_the_start() {
    let mut cfg = parse_config(CONFIG).unwrap();
    cfg.iters = 0;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].iter, 0);
}

#[test]
fn qsar_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..30)
        .map(|r| {
            let fields: Vec<String> = (0..41)
                .map(|c| format!("{}", ((r * 41 + c) as f64 * 0.7).sin()))
                .collect();
            format!("{};{}\n", fields.join(";"), if r % 3 == 0 { "RB" } else { "NRB" })
        })
        .collect();
    let data = write(dir.path(), "qsar.csv", &rows);
    let cfg = format!(
        r#"{{"n": 5, "d": 2, "algo": "pushpull", "iters": 5,
            "objective": {{"kind": "logistic", "data": {{"source": "file", "path": "{data}", "per_agent": 4}}}}}}"#
    );
    let out = run_experiment(&parse_config(&cfg).unwrap()).unwrap();
    assert_eq!(out.records.len(), 6);

    let too_many = cfg.replace("\"per_agent\": 4", "\"per_agent\": 7");
    assert!(run_experiment(&parse_config(&too_many).unwrap()).is_err());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", CONFIG);
    let out = dir.path().join("out.csv");
    let out_s = out.to_string_lossy().into_owned();

    assert_eq!(cli(&[]), 1);
    assert_eq!(cli(&["--config", "/nonexistent/config.json"]), 1);
    assert_eq!(cli(&["--config", &write(dir.path(), "bad.json", "{\"n\": 2}")]), 1);
    assert_eq!(cli(&["--config", &good, "--compressor", "quantize:b=0"]), 1);

    assert_eq!(
        cli(&["--config", &good, "--out", &out_s, "--iters", "7", "--seed", "9"]),
        0
    );
    let records = read_csv(&out).unwrap();
    assert_eq!(records.len(), 8);

    assert_eq!(cli(&["--config", &write(dir.path(), "div.json", DIVERGENT)]), 2);
}

#[test]
fn cli_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", CONFIG);
    let out = dir.path().join("o.csv");
    let args = [
        "--config",
        &good,
        "--out",
        out.to_str().unwrap(),
        "--algo",
        "bcpp",
        "--compressor",
        "randk:k=2",
        "--iters",
        "3",
    ];
    assert_eq!(cli(&args), 0);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta_path(&out)).unwrap()).unwrap();
    assert_eq!(meta["config"]["algo"], "bcpp");
    assert_eq!(meta["config"]["compressor"], "randk:k=2");
    assert_eq!(meta["config"]["iters"], 3);
}

#[test]
fn sweep_writes_one_file_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", CONFIG);
    let base = dir.path().join("sweep.csv");
    assert_eq!(
        cli(&[
            "--config",
            &good,
            "--out",
            base.to_str().unwrap(),
            "sweep",
            "--gammas",
            "1,0.5"
        ]),
        0
    );
    for g in [1.0, 0.5] {
        let records = read_csv(sweep_output_path(&base, g)).unwrap();
        assert_eq!(records.len(), 41);
    }
    assert_eq!(cli(&["--config", &good, "sweep", "--gammas", "2"]), 1);
}

#[test]
fn binary_reports_divergence_with_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "div.json", DIVERGENT);
    let out = Command::new(env!("CARGO_BIN_EXE_cppsim"))
        .args(["--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("iteration"), "{stderr}");

    let usage = Command::new(env!("CARGO_BIN_EXE_cppsim")).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("usage"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            parse_config(&std::fs::read_to_string(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
