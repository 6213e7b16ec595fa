use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn wstate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wstate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .trim()
        .parse()
        .unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn prepare_writes_ideal_w_state() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "w4.txt");
    let o = wstate(&["prepare", "--n", "4", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(value(&stdout(&o), "fidelity") >= 1.0 - 1e-9);
    let rho = wstate::io::parse_density_matrix(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rho.dims(), &[2, 2, 2, 2]);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.txt");
    for args in [
        vec!["prepare", "--n", "0", "--out", &out],
        vec!["prepare", "--n", "13", "--out", &out],
        vec!["tomography", "--in", &out, "--shots", "0", "--out", &out],
        vec!["mc-errors", "--in", &out, "--trials", "1", "--out", &out],
    ] {
        let o = wstate(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn prepare_without_size_is_an_error() {
    let dir = TempDir::new().unwrap();
    let o = wstate(&["prepare", "--out", &path(&dir, "x.txt")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--n is required"));
}

#[test]
fn malformed_matrix_names_the_line() {
    let dir = TempDir::new().unwrap();
    let good = path(&dir, "good.txt");
    assert!(wstate(&["prepare", "--n", "2", "--out", &good])
        .status
        .success());
    let text = fs::read_to_string(&good).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let last = lines.len() - 1;
    lines[last] = "1.0 oops";
    let bad = path(&dir, "bad.txt");
    fs::write(&bad, lines.join("\n")).unwrap();
    let o = wstate(&["analyze", "--in", &bad, "--out", &path(&dir, "r.txt")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains(&format!("line {}", last + 1)),
        "{}",
        stderr(&o)
    );
}

#[test]
fn tomography_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "w3.txt");
    assert!(wstate(&["prepare", "--n", "3", "--out", &w])
        .status
        .success());
    let run = |name: &str| {
        let out = path(&dir, name);
        let o = wstate(&[
            "tomography",
            "--in",
            &w,
            "--shots",
            "100",
            "--seed",
            "7",
            "--out",
            &out,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(value(&stdout(&o), "fidelity") > 0.95);
        let dataset = Path::new(&out).with_extension("dataset.txt");
        (fs::read(&out).unwrap(), fs::read(dataset).unwrap())
    };
    assert_eq!(run("a.txt"), run("b.txt"));
}

#[test]
fn witness_gamma_lists_published_rows() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "gamma.txt");
    let o = wstate(&["witness-gamma", "--out", &table]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&table).unwrap();
    assert_eq!(text, stdout(&o));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let deviation: f64 = row.split_whitespace().last().unwrap().parse().unwrap();
        assert!(deviation.abs() <= 5e-4, "{row}");
    }
}

#[test]
fn analyze_reports_and_plots_w8() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "w8.txt");
    assert!(wstate(&["prepare", "--n", "8", "--out", &w])
        .status
        .success());
    let report = path(&dir, "report.txt");
    let o = wstate(&["analyze", "--in", &w, "--out", &report]);
    assert!(o.status.success(), "{}", stderr(&o));
    let kv = wstate::io::parse_key_values(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(kv["distillable"], "true");
    assert!(kv["advanced_witness"].parse::<f64>().unwrap() < 0.0);

    let plot = fs::read_to_string(Path::new(&report).with_extension("plot.txt")).unwrap();
    let heights: Vec<f64> = plot
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(heights.len(), 256 * 256);
    let weight_one: Vec<usize> = (0..8).map(|q| 1usize << q).collect();
    for &r in &weight_one {
        assert!((heights[r * 256 + r] - 0.125).abs() < 1e-9);
    }
    let total: f64 = heights.iter().sum();
    assert!((total - 8.0).abs() < 1e-9);
}

#[test]
fn mc_errors_reports_spreads() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "w3.txt");
    assert!(wstate(&["prepare", "--n", "3", "--out", &w])
        .status
        .success());
    let out = path(&dir, "mc.txt");
    let o = wstate(&["mc-errors", "--in", &w, "--trials", "10", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let kv = wstate::io::parse_key_values(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(kv["trials"], "10");
    assert!(kv.keys().any(|k| k.starts_with("fidelity")));
}

#[test]
fn noisy_prepare_reads_config() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "noise.cfg");
    fs::write(
        &cfg,
        "n = 3\naddressing_ratio = 0.05\nchannels = addressing\ntrials = 8\nseed = 2\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = path(&dir, name);
        let o = wstate(&["prepare", "--noise", &cfg, "--out", &out]);
        assert!(o.status.success(), "{}", stderr(&o));
        (stdout(&o), fs::read(&out).unwrap())
    };
    let (text, first) = run("a.txt");
    let f = value(&text, "fidelity");
    assert!(f < 1.0 && f > 0.8, "{f}");
    assert_eq!(first, run("b.txt").1);
    let o = wstate(&[
        "prepare",
        "--n",
        "4",
        "--noise",
        &cfg,
        "--out",
        &path(&dir, "c.txt"),
    ]);
    assert!(stderr(&o).contains("conflicts"));
}
