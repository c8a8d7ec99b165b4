use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elastica::io::{format_sig, parse_curve_file, parse_geodesic, parse_match};
use elastica::*;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastica"))
        .args(args)
        .current_dir(fixtures())
        .env("ELASTICA_THREADS", "1")
        .output()
        .unwrap()
}

fn curve(name: &str) -> SampledCurve {
    parse_curve_file(&std::fs::read(fixtures().join(name)).unwrap()).unwrap().to_curve().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    assert_eq!(cli(&["dist", "bump.json"]).status.code(), Some(1));
    assert_eq!(cli(&["dist", "bump.json", "missing.json"]).status.code(), Some(1));
    assert_eq!(cli(&["dist", "bump.json", "arc_a.json"]).status.code(), Some(1));
    assert_eq!(cli(&["geodesic", "arc_a.json", "arc_b.json", "--space", "s2-tsrv"]).status.code(), Some(1));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_elastica"))
        .args(["dist", "bump.json", "wave.json"])
        .current_dir(fixtures())
        .env("ELASTICA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));
    // an open segment cannot be closed without collapsing
    let o = cli(&["project-closed", "seg1.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn malformed_input_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0,0\n1,x\n").unwrap();
    let o = cli(&["dist", bad.to_str().unwrap(), "seg1.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains('2'), "{msg}");
}

#[test]
fn dist_is_a_thin_shell() {
    let (a, b) = (curve("bump.json"), curve("wave.json"));
    let o = cli(&["dist", "bump.json", "wave.json", "--mode", "param"]);
    assert_eq!(stdout(&o).trim(), format_sig(dist_param(&a, &b).unwrap(), 12));
    let o = cli(&["dist", "bump.json", "wave.json"]);
    let lib = dist_shape(&a, &b, &ShapeMatchOptions::default()).unwrap().distance;
    assert_eq!(stdout(&o).trim(), format_sig(lib, 12));
    let o = cli(&["dist", "bump.json", "wave.json", "--no-rotation", "--dp-width", "2", "--refine"]);
    let opts = ShapeMatchOptions {
        quotient_rotation: false,
        dp: DpConfig::with_width(2),
        refine: true,
        ..Default::default()
    };
    assert_eq!(stdout(&o).trim(), format_sig(dist_shape(&a, &b, &opts).unwrap().distance, 12));
}

#[test]
fn csv_and_json_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("seg1.json");
    let doc = elastica::io::CurveDocument::from_curve(elastica::io::SpaceName::Rd, &curve("seg1.csv"));
    std::fs::write(&json, elastica::io::write_curve(&doc)).unwrap();
    let a = cli(&["dist", "seg1.csv", "seg4.csv", "--mode", "param"]);
    let b = cli(&["dist", json.to_str().unwrap(), "seg4.csv", "--mode", "param"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).trim(), "1");
}

#[test]
fn geodesic_and_match_write_documents() {
    let o = cli(&["geodesic", "seg1.csv", "seg4.csv", "--steps", "2", "--mode", "param"]);
    let doc = parse_geodesic(&o.stdout).unwrap();
    assert_eq!(doc.times, vec![0.0, 0.5, 1.0]);
    assert!((doc.curves[1].to_curve().unwrap().length() - 2.25).abs() < 1e-13);

    let o = cli(&["match", "bump.json", "wave.json"]);
    let m = parse_match(&o.stdout).unwrap();
    let lib = dist_shape(&curve("bump.json"), &curve("wave.json"), &ShapeMatchOptions::default()).unwrap();
    assert_eq!(m.distance, lib.distance);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("distance "));
}

#[test]
fn matrix_lists_files_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["bump.json", "wave.json", "seg1.csv"] {
        let src = if name == "seg1.csv" { "seg4.csv" } else { name };
        std::fs::copy(fixtures().join(src), dir.path().join(name)).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let seg_resampled = ["--resample", "32", "--mode", "param"];
    let mut args = vec!["matrix", dir.path().to_str().unwrap()];
    args.extend(seg_resampled);
    let o = cli(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "bump.json,seg1.csv,wave.json");
    assert_eq!(rows.len(), 4);
    let first: Vec<f64> = rows[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    let (a, w) = (resample_arclength(&curve("bump.json"), 32).unwrap(), resample_arclength(&curve("wave.json"), 32).unwrap());
    assert_eq!(first[2], dist_param(&a, &w).unwrap());
}

#[test]
fn mean_of_segments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mean.json");
    let o = cli(&["mean", "seg1.csv", "seg4.csv", "--mode", "param", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mean = parse_curve_file(&std::fs::read(&out).unwrap()).unwrap().to_curve().unwrap();
    assert!((mean.length() - 2.25).abs() < 1e-12, "{}", mean.length());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("objective "));
    assert_eq!(cli(&["mean", "arc_a.json", "arc_b.json"]).status.code(), Some(1));
}

#[test]
fn project_closed_closes_a_nearly_closed_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("square.csv");
    std::fs::write(&input, "0,0\n1,0\n1,1\n0,1\n0.001,0.002\n").unwrap();
    let out = dir.path().join("closed.json");
    let o = cli(&["project-closed", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = parse_curve_file(&std::fs::read(&out).unwrap()).unwrap().to_curve().unwrap();
    assert!(c.closure_gap() < 1e-8);
    let lib = project_closed(&curve_from(&input), 1e-8, 100).unwrap();
    assert_eq!(c.as_slice(), lib.as_slice());
}

fn curve_from(path: &Path) -> SampledCurve {
    parse_curve_file(&std::fs::read(path).unwrap()).unwrap().to_curve().unwrap()
}

#[test]
fn sphere_space_flags() {
    let o = cli(&["dist", "arc_a.json", "arc_b.json", "--space", "s2-tsrv", "--mode", "param", "--ref-point", "0,0,2"]);
    assert_eq!(o.status.code(), Some(0));
    let (a, b) = (curve("arc_a.json"), curve("arc_b.json"));
    let (sa, sb) = (
        elastica::sphere::SphereCurve::new(a).unwrap(),
        elastica::sphere::SphereCurve::new(b).unwrap(),
    );
    assert_eq!(stdout(&o).trim(), format_sig(dist_tsrv(&sa, &sb, &[0.0, 0.0, 1.0]).unwrap(), 12));
    assert_eq!(cli(&["dist", "bump.json", "wave.json", "--ref-point", "0,0,1"]).status.code(), Some(1));
}
