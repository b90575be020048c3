use std::path::Path;
use std::process::{Command, Output};

fn sosmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sosmp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const TRIANGLE: &str = r#"
[space]
lo = -1.0
hi = 1.0
points_per_unit = 10

[graph]
kind = "edges"
n = 3
edges = [[0, 1], [1, 2], [2, 0]]

[potentials]
source = "shared"
node = { type = "gaussian_mixture", weights = [1.0], means = [0.2], variances = [0.3] }
edge = { type = "gaussian_mixture_diff", weights = [1.0], variances = [0.5] }
"#;

#[test]
fn baseline_writes_coefficients_and_marginals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = sosmp(&["baseline", "--n", "4", "--r", "3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let coeffs = std::fs::read_to_string(dir.path().join("baseline_coeffs.csv")).unwrap();
    let mut lines = coeffs.lines();
    assert!(lines.next().unwrap().starts_with("# sosmp "));
    assert_eq!(lines.next().unwrap(), "edge_id,j,a_j");
    // 6 directed edges times 3 coefficients.
    assert_eq!(lines.count(), 18);
    assert!(dir.path().join("baseline_marginals.csv").exists());
}

#[test]
fn require_tree_rejects_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.toml", TRIANGLE);
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let o = sosmp(&["baseline", "--model", &model, "--require-tree", "--out", out]);
    assert_eq!(code(&o), 2);
    let o = sosmp(&["baseline", "--model", &model, "--r", "3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn too_few_sweeps_is_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = sosmp(&["baseline", "--n", "10", "--max-sweeps", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn zero_potential_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let model = TRIANGLE.replace(
        "node = { type = \"gaussian_mixture\", weights = [1.0], means = [0.2], variances = [0.3] }",
        "node = { type = \"grid_table\", values = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, \
         0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] }",
    );
    let model = write(dir.path(), "zero.toml", &model);
    let o = sosmp(&["baseline", "--model", &model, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = write(dir.path(), "bad.pgm", "P5\n4 4\n255\nxx");
    let o = sosmp(&["flow", "--first", &bad, "--second", &bad, "--out", out]);
    assert_eq!(code(&o), 2);
    let o = sosmp(&["chain-mixture", "--n", "3", "--r", "0", "--out", out]);
    assert_eq!(code(&o), 2);
    let o = sosmp(&["plan", "--decay", "polynomial", "--alpha", "0.5"]);
    assert_eq!(code(&o), 2);
    let o = sosmp(&["chain-mixture", "--gamma", "2.5", "--n", "3", "--out", out]);
    assert_eq!(code(&o), 2);
}

#[test]
fn plan_prints_csv_to_stdout() {
    let o = sosmp(&["plan", "--count", "3", "--delta", "0.01"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[1], "delta,r_star,sum_lambda_sq,ops_estimate");
    assert_eq!(rows.len(), 2 + 4);
    assert!(rows.iter().any(|r| r.starts_with("0.01,10,")));
}

#[test]
fn synth_frames_round_trip_through_flow() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    let frames_s = frames.to_str().unwrap();
    let o = sosmp(&["synth-frames", "--width", "12", "--height", "10", "--out", frames_s]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = std::fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 2, "{names:?}");
    let mut paths: Vec<String> = names.iter().map(|n| frames.join(n).to_string_lossy().into_owned()).collect();
    paths.sort();
    let out = dir.path().join("flow");
    let o = sosmp(&[
        "flow", "--first", &paths[0], "--second", &paths[1], "--iters", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("flow.csv")).unwrap();
    // Header comment, column names, one row per pixel.
    assert_eq!(csv.lines().count(), 2 + 12 * 10);
    assert!(out.join("flow_final.ppm").exists());
}
