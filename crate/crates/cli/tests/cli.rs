use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ptfprg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptfprg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const DESK: &[&str] = &[
    "--n", "3", "--d", "2", "--eps", "0.2", "--set", "N=64", "--set", "k=8", "--set", "M=32",
];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn plan_reports_derived_k() {
    let out = ptfprg(&["plan", "--n", "4", "--d", "2", "--eps", "0.2", "--c", "4"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["body"]["params"]["k"], 256);
    assert_eq!(v["body"]["params"]["precision_capped"], true);
    assert_eq!(v["header"]["provenance"]["k"], "derived");
    assert_eq!(v["header"]["config"]["n"], "4");
    let p = &v["body"]["params"];
    let bits = 2 * p["N"].as_u64().unwrap() * p["k"].as_u64().unwrap() * p["w"].as_u64().unwrap();
    assert_eq!(v["body"]["layout"]["total_bits"].as_u64().unwrap(), bits);
}

#[test]
fn overrides_are_marked() {
    let out = ptfprg(&[
        "plan", "--n", "4", "--d", "2", "--eps", "0.2", "--set", "N=256", "--set", "k=16",
    ]);
    let v = json(&out);
    assert_eq!(v["body"]["params"]["N"], 256);
    assert_eq!(v["header"]["provenance"]["N"], "override");
    assert_eq!(v["header"]["provenance"]["k"], "override");
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n = 4\nd = 2\neps = 0.2\nN = 32\n").unwrap();
    let out = ptfprg(&["--config", cfg.to_str().unwrap(), "plan", "--n", "5"]);
    let v = json(&out);
    assert_eq!(v["body"]["params"]["n"], 5);
    assert_eq!(v["body"]["params"]["N"], 32);
}

#[test]
fn invalid_parameters_exit_2() {
    let out = ptfprg(&["plan", "--n", "4", "--d", "2", "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps"));
    assert_eq!(
        ptfprg(&["plan", "--n", "4", "--d", "2", "--eps", "0.2", "--set", "bogus=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ptfprg(&["plan", "--n", "4", "--d", "2", "--eps", "0.2", "--seed", "xyz"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gen_requires_capped_acknowledgement() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("x.bin");
    let args = [
        "gen",
        "--n",
        "3",
        "--d",
        "2",
        "--eps",
        "0.2",
        "--set",
        "N=8",
        "--set",
        "k=4",
        "--out",
        out_file.to_str().unwrap(),
    ];
    assert_eq!(ptfprg(&args).status.code(), Some(2));
    let acked = with(&args, &["--accept-capped-precision"]);
    assert!(ptfprg(&acked).status.success());
}

fn read_f64(path: &Path) -> Vec<f64> {
    std::fs::read(path)
        .unwrap()
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

#[test]
fn gen_is_reproducible_and_schedule_free() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    let c = dir.path().join("c.bin");
    let run = |p: &Path, extra: &[&str]| {
        let mut args = with(&["gen"], DESK);
        args.extend(["--count", "5000", "--out", p.to_str().unwrap()]);
        args.extend(extra);
        let out = ptfprg(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        // The output path is echoed back; everything else must match.
        let mut v = json(&out);
        v["header"]["config"].as_object_mut().unwrap().remove("out");
        v["body"].as_object_mut().unwrap().remove("out");
        v
    };
    let h1 = run(&a, &[]);
    let h2 = run(&b, &[]);
    run(&c, &["--sequential"]);
    assert_eq!(h1, h2);
    assert_eq!(h1["body"]["layout"]["total_bits"], 2 * 64 * 8 * 64);
    assert_eq!(h1["body"]["bytes"], 5000 * 3 * 8);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes, std::fs::read(&c).unwrap());

    // Another seed gives another stream.
    let mut args = with(&["gen"], DESK);
    let d = dir.path().join("d.bin");
    args.extend(["--count", "10", "--seed", "abcd", "--out", d.to_str().unwrap()]);
    assert!(ptfprg(&args).status.success());
    assert_ne!(std::fs::read(&d).unwrap()[..80], bytes[..80]);
}

#[test]
fn gen_draws_look_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.bin");
    let mut args = with(&["gen"], DESK);
    args.extend(["--count", "20000", "--out", path.to_str().unwrap()]);
    assert!(ptfprg(&args).status.success());
    let xs = read_f64(&path);
    let n = 3;
    let m = xs.len() / n;
    for i in 0..n {
        for j in 0..n {
            let cov = (0..m).map(|t| xs[t * n + i] * xs[t * n + j]).sum::<f64>() / m as f64;
            let want = if i == j { 1.0 } else { 0.0 };
            // 5 standard errors of an empirical second moment.
            assert!(
                (cov - want).abs() < 5.0 * (2.0 / m as f64).sqrt(),
                "cov[{i}][{j}] = {cov}"
            );
        }
    }
}

fn write_corpus(dir: &Path, n: &str, d: &str) -> String {
    let path = dir.join(format!("corpus-{n}-{d}.json"));
    let out = ptfprg(&[
        "corpus",
        "--n",
        n,
        "--d",
        d,
        "--corpus-size",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn fool_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "3", "2");
    let args = with(
        &[
            "fool",
            "--corpus",
            &corpus,
            "--draws-prg",
            "5000",
            "--draws-gauss",
            "5000",
            "--threshold",
            "0.1",
        ],
        DESK,
    );
    let a = ptfprg(&args);
    let b = ptfprg(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let reports = v["body"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    assert_eq!(a.status.code(), Some(if v["body"]["all_pass"] == true { 0 } else { 1 }));
    assert!(reports.iter().all(|r| r["gap"].as_f64().unwrap() >= 0.0));
}

#[test]
fn fool_rejects_degree_above_target() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "3", "3");
    let args = with(
        &[
            "fool",
            "--corpus",
            &corpus,
            "--draws-prg",
            "1000",
            "--draws-gauss",
            "1000",
        ],
        DESK,
    );
    let out = ptfprg(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degree"));
}

#[test]
fn fool_reads_text_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lin.txt");
    std::fs::write(
        &path,
        "# id=tilted\n# n=3\n0.5 1 0 0\n-1 0 0 1\n0.1 0 0 0\n---\n# id=axis\n# n=3\n1 0 1 0\n",
    )
    .unwrap();
    let args = with(
        &[
            "fool",
            "--corpus",
            path.to_str().unwrap(),
            "--draws-prg",
            "4000",
            "--draws-gauss",
            "1000",
        ],
        DESK,
    );
    let out = ptfprg(&args);
    let v = json(&out);
    let reports = v["body"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["id"], "tilted");
    assert_eq!(reports[0]["gauss_method"]["method"], "linear_threshold");
}

#[test]
fn lab_checks() {
    for check in ["annihilation", "semigroup", "relation"] {
        let out = ptfprg(&["lab", "--check", check]);
        assert!(
            out.status.success(),
            "{check}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let v = json(&out);
        assert_eq!(v["body"]["all_pass"], true);
        assert_eq!(v["header"]["command"], "lab");
    }
}

#[test]
fn lab_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("disc.csv");
    let out = ptfprg(&[
        "lab",
        "--check",
        "discretization",
        "--samples",
        "20000",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("M,c0,delta,freq,stderr,pass"));
}

#[test]
fn lab_unknown_check_exits_2() {
    let out = ptfprg(&["lab", "--check", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("annihilation"));
}
