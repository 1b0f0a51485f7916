use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vwl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vwl")).args(args).current_dir(dir).output().expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines
        .map(|l| l.split(',').map(|v| if v.is_empty() { f64::NAN } else { v.parse().unwrap() }).collect())
        .collect();
    (header, body)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn zero_strength_run_is_constant_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = vwl(dir.path(), &["run", config("quiet.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, body) = rows(&dir.path().join("quiet.csv"));
    assert_eq!(header.len(), 16);
    assert_eq!(body.len(), 21);
    let (t, y1, a1) = (col(&header, "t"), col(&header, "y1"), col(&header, "inf_A1"));
    for w in body.windows(2) {
        assert!(w[1][t] > w[0][t]);
    }
    for r in &body {
        assert_eq!(r.len(), 16);
        assert_eq!(r[y1], -6.0);
        assert!((r[a1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn transition_run_stops_on_eta1_near_threshold_depth() {
    let dir = tempfile::tempdir().unwrap();
    let o = vwl(dir.path(), &["run", config("transition.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let (header, body) = rows(&dir.path().join("transition.csv"));
    let (y1, a1) = (col(&header, "y1"), col(&header, "inf_A1"));
    assert!(body.last().unwrap()[a1] <= -0.5);
    let w = body.windows(2).find(|w| w[0][a1] > 0.0 && w[1][a1] <= 0.0).expect("sign change recorded");
    let f = w[0][a1] / (w[0][a1] - w[1][a1]);
    let depth = (w[0][y1] + f * (w[1][y1] - w[0][y1])).abs();
    let target = 6.0 * 2f64.cbrt();
    assert!((depth - target).abs() <= 0.15 * target, "crossing at |y| = {depth}");
}

#[test]
fn gamma_and_lambda_together_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "vortex.gamma = 8\nvortex.lambda = 3\n").unwrap();
    let o = vwl(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("vortex.gamma") && e.contains("vortex.lambda"), "{e}");
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn malformed_value_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "# comment\nvortex.lambda = 1\ntime.dt = fast\n").unwrap();
    let o = vwl(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("time.dt"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_requested_rows_and_brackets_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let two = dir.path().join("two.csv");
    let o = vwl(
        dir.path(),
        &["sweep", "--gamma-min", "1", "--gamma-max", "2", "--steps", "2", "--x", "1", "--y", "-10", "--out", two.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(rows(&two).1.len(), 2);

    let o = vwl(
        dir.path(),
        &["sweep", "--gamma-min", "3.9", "--gamma-max", "4.1", "--steps", "9", "--x", "1e-3", "--y", "-10"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let inf: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert!(inf[0] > 0.0 && inf[inf.len() - 1] < 0.0);
}

#[test]
fn sweep_rejects_inverted_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = vwl(dir.path(), &["sweep", "--gamma-min", "5", "--gamma-max", "4", "--steps", "3", "--x", "1", "--y", "-10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn quick_verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = vwl(dir.path(), &["verify", "--quick"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    let b = vwl(dir.path(), &["verify", "--quick"]);
    // Timings differ between runs; the status and detail columns must not.
    let strip = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
            .map(|l| l.split_whitespace().take(2).collect::<Vec<_>>().join(" "))
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn injected_hilbert_sign_flip_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = vwl(dir.path(), &["verify", "--quick", "--mutate", "hilbert-sign"]);
    assert_eq!(o.status.code(), Some(1));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.starts_with("FAIL") && l.contains("eigenfunction")), "{out}");
}

#[test]
fn thread_count_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vwl"))
        .args(["sweep", "--gamma-min", "1", "--gamma-max", "2", "--steps", "2", "--x", "1", "--y", "-10"])
        .env("VWL_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("VWL_THREADS"));
}
