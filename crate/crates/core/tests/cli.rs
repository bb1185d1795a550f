use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sfnr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfnr")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn list_presets() {
    let out = sfnr(&["list-presets"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rhpr1 = text.lines().find(|l| l.starts_with("rhpr-1")).unwrap();
    assert!(rhpr1.contains("t0=500000 W=1"), "{rhpr1}");
    for name in ["rhpr-2", "rhpr-3", "rhpr-4", "wine", "stock"] {
        assert!(text.contains(name));
    }
    assert!(text.contains("t0=333333 W=1, t0=750000 W=1"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&sfnr(&["run", "/definitely/missing.cfg"])), 1);
    assert_eq!(code(&sfnr(&[])), 1);
    assert_eq!(code(&sfnr(&["frobnicate"])), 1);
    assert_eq!(code(&sfnr(&["run"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "kmaxx = 4\n");
    let out = sfnr(&["run", &bad]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("kmaxx"));
}

#[test]
fn help_exits_zero() {
    let out = sfnr(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("list-presets"));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "stream = csv\npath = /no/such/data.csv\n");
    assert_eq!(code(&sfnr(&["run", &cfg])), 2);
}

#[test]
fn run_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "# quick run\nalgorithm = sfnr_adwin\nreport_every = 500\n");
    let out_path = dir.path().join("r.csv");
    let out = sfnr(&[
        "run",
        &cfg,
        "--seed",
        "3",
        "--length",
        "2000",
        "--window-size",
        "100",
        "--metric",
        "pagerank",
        "--delta",
        "0.05",
        "--kmax",
        "4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "algorithm,seed,instance_index,windowed_rmse,network_size,cumulative_drifts,elapsed_ns"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("sfnr_adwin,3,2000,"));

    let summary = sfnr(&["summarize", out_path.to_str().unwrap()]);
    assert_eq!(code(&summary), 0);
    assert!(stdout(&summary).contains("sfnr_adwin,1,"));
}

#[test]
fn run_without_out_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "algorithm = single_learner\nlength = 1000\n");
    let a = sfnr(&["run", &cfg]);
    let b = sfnr(&["run", &cfg]);
    assert_eq!(code(&a), 0);
    assert!(stdout(&a).starts_with("algorithm,seed,"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let out = sfnr(&["gen", "--length", "1000", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    let a = fs::read(&p1).unwrap();
    assert_eq!(a, fs::read(&p2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("x0,x1,x2,x3,x4,x5,x6,x7,x8,x9,y\n"));
    assert_eq!(text.lines().count(), 1001);
}

#[test]
fn gen_rejects_dataset_preset() {
    assert_eq!(code(&sfnr(&["gen", "--preset", "wine"])), 1);
}

#[test]
fn wine_and_stock_presets_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut wine = String::from("\"fixed acidity\";\"alcohol\";\"quality\"\n");
    for i in 0..300 {
        wine.push_str(&format!("{};{};{}\n", 7.0 + (i % 7) as f64 * 0.1, 9.0 + (i % 5) as f64, 5 + i % 3));
    }
    let wine_path = write(dir.path(), "wine.csv", &wine);
    let cfg = write(dir.path(), "w.cfg", &format!("preset = wine\npath = {wine_path}\nreport_every = 100\n"));
    let out = sfnr(&["run", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 4);

    let mut prices = String::from("Date,Open,High,Low,Close,Volume,Adj Close\n");
    for d in 0..200 {
        let p = 100.0 + (d as f64 * 0.1).sin() * 5.0;
        let date = chrono_free_date(d);
        prices.push_str(&format!("{date},{p},{},{},{p},1000,{p}\n", p + 1.0, p - 1.0));
    }
    let price_path = write(dir.path(), "prices.csv", &prices);
    let cfg = write(dir.path(), "s.cfg", &format!("preset = stock\npath = {price_path}\nalgorithm = ema\n"));
    let out = sfnr(&["run", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("ema,0,200,"));
}

/// Consecutive calendar days starting 2020-01-01, valid for d < 365.
fn chrono_free_date(d: u32) -> String {
    let months = [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let mut day = d;
    let mut month = 0;
    while day >= months[month] {
        day -= months[month];
        month += 1;
    }
    format!("2020-{:02}-{:02}", month + 1, day + 1)
}
