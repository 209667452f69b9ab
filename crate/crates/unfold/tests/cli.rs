use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn unfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unfold")).args(args).env("UNFOLD_THREADS", "2").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = unfold(&["gen", "--model", "simons", "--res", "32", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["vertices"].as_u64().unwrap() > 1000);
    assert_eq!(manifest["has_sigma"], true);
    assert!(out.join("vertices.csv").exists() && out.join("edges.csv").exists());
    assert!(out.join("run_config.toml").exists());
}

#[test]
fn verify_simons_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = unfold(&["verify", "--all", "--model", "simons", "--res", "32", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for key in ["axiom", "lipschitz", "interpolation", "inequalities", "uniformity", "hyperbolicity", "whitney", "boundary", "tolerances"] {
        assert!(!report[key].is_null(), "section {key} missing");
    }
}

#[test]
fn corrupted_curvature_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert_eq!(code(&unfold(&["gen", "--model", "simons", "--res", "32", "--out", s(&g)])), 0);
    assert_eq!(code(&unfold(&["sigma", "--graph", s(&g), "--out", s(&g)])), 0);
    // Raise a on one vertex far above the stored b.
    let path = g.join("vertices.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "a").unwrap();
    let mut cells: Vec<String> = lines[100].split(',').map(String::from).collect();
    cells[col] = "1e6".into();
    lines[100] = cells.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let out = dir.path().join("v");
    let o = unfold(&["verify", "--graph", s(&g), "--sigma", s(&g.join("sigma.csv")), "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("axiom"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&unfold(&["frobnicate"])), 1);
    assert_eq!(code(&unfold(&["verify", "--res", "banana"])), 1);
    assert_eq!(code(&unfold(&["--help"])), 0);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&unfold(&["report", "--out", s(dir.path())])), 1);
}

#[test]
fn quad_mesh_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("quad.off");
    fs::write(&mesh, "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap();
    let o = unfold(&["gen", "--mesh", s(&mesh), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 7"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&unfold(&["verify", "--all", "--model", "simons", "--res", "32", "--out", s(out)])), 0);
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        let name = name.to_string_lossy().into_owned();
        if name.starts_with("run_config") {
            // Only the out path differs.
            let strip = |v: Vec<u8>| String::from_utf8(v).unwrap().lines().filter(|l| !l.contains("out")).collect::<Vec<_>>().join("\n");
            assert_eq!(strip(x), strip(y), "{name}");
        } else if name == "report.json" {
            let (mut x, mut y): (serde_json::Value, serde_json::Value) = (serde_json::from_slice(&x).unwrap(), serde_json::from_slice(&y).unwrap());
            x["run_config"]["out"] = serde_json::Value::Null;
            y["run_config"]["out"] = serde_json::Value::Null;
            assert_eq!(x, y);
        } else {
            assert!(x == y, "{name} differs");
        }
    }
}
