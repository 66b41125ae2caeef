use std::fs;

use lattice_cli::run_with;
use lattice_cli::table::{fmt_num, Format, Meta, Table};
use proptest::prelude::*;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(std::iter::once("lattice-energy").chain(args.iter().copied()), &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

#[test]
fn threshold_of_square_lattice() {
    let r = run(&["threshold", "--lattice", "Z2", "--p", "6", "--q", "3", "--a", "1", "--b", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("lambda0(Z2) = 0.76286"), "{}", r.out);
}

#[test]
fn shells_of_triangular_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    let r = run(&["shells", "--lattice", "A2", "--r2", "1.1", "--out", p.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(fs::read_to_string(&p).unwrap(), "shell,r2,count\n1,1,6\n");
}

#[test]
fn sweep2d_writes_one_row_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("phases.csv");
    let svg = dir.path().join("phases.svg");
    let prof = dir.path().join("profile.svg");
    let r = run(&[
        "sweep2d",
        "--potential",
        "lj:6,3,1,2",
        "--lambda",
        "0.7:0.9:0.1",
        "--out",
        p.to_str().unwrap(),
        "--format",
        "",
        "--svg",
        svg.to_str().unwrap(),
        "--profile-svg",
        prof.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let text = fs::read_to_string(&p).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "lambda,t,label,energy");
    assert!(lines[1].starts_with("0.7,1.5707963267949,Square,"));
    assert!(lines[3].contains(",Rhombic2D,"));
    assert!(!text.contains('\r'));
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    assert!(fs::read_to_string(&prof).unwrap().contains("λ = 0.8"));
}

#[test]
fn emitted_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for fmt in ["csv", "json"] {
        let p = dir.path().join(format!("e.{fmt}"));
        let r = run(&["theta", "--lattice", "D3star", "--alpha", "0.5,1,2", "--format", fmt, "--out", p.to_str().unwrap()]);
        assert_eq!(r.code, 0, "{}", r.err);
        let text = fs::read_to_string(&p).unwrap();
        let back = match fmt {
            "csv" => {
                let meta = Meta { version: String::new(), command: String::new(), seed: None, tolerances: vec![] };
                Table::from_csv(&text, meta).unwrap()
            }
            _ => Table::from_json(&text).unwrap(),
        };
        assert_eq!(back.rows.len(), 3);
        assert_eq!(back.encode(Format::parse(fmt).unwrap()).unwrap(), text);
    }
}

#[test]
fn json_carries_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.json");
    let r = run(&["hessian", "--lattice", "Z3", "--seed", "5", "--format", "json", "--out", p.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["meta"]["command"], "hessian");
    assert_eq!(v["meta"]["seed"], 5);
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["rows"][0]["positive_definite"], "true");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["--version"]).code, 0);
    assert_eq!(run(&["frobnicate"]).code, 1);
    assert_eq!(run(&["energy", "--lattice", "Z2"]).code, 1);
    let r = run(&["energy", "--lattice", "Z2", "--potential", "lj:6,3"]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error:"), "{}", r.err);
    // s ≤ d is not summable: bad input, not a numerical failure
    assert_eq!(run(&["zeta", "--lattice", "Z3", "--s", "2"]).code, 1);
    assert_eq!(run(&["energy", "--lattice", "Z2", "--potential", "gauss:1", "--scale", "-1"]).code, 1);
    assert_eq!(run(&["sweep2d", "--potential", "gauss:1", "--lambda", "1:0.5:0.1"]).code, 1);
    assert_eq!(run(&["transitions", "--potential", "gauss:1", "--dim", "4"]).code, 1);
    // the vector budget is a numerical limit
    let r = run(&["shells", "--lattice", "Z3", "--r2", "1e6"]);
    assert_eq!(r.code, 2, "{}", r.err);
    let r = run(&["theta", "--lattice", "Z2", "--alpha", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("nonexistent-dir"));
}

#[test]
fn every_subcommand_documents_its_defaults() {
    let with_defaults = [
        "energy", "theta", "zeta", "shells", "eutaxy", "critical", "hessian", "threshold", "sweep2d", "sweep3d",
        "transitions", "global-opt", "classify",
    ];
    for cmd in with_defaults {
        let r = run(&[cmd, "--help"]);
        assert_eq!(r.code, 0, "{cmd}");
        assert!(r.out.contains("[default: csv]"), "{cmd} help lacks the format default:\n{}", r.out);
    }
    let r = run(&["sweep3d", "--help"]);
    assert!(r.out.contains("[default: 200]") && r.out.contains("[default: 1e-8]"), "{}", r.out);
    assert!(run(&["transitions", "--help"]).out.contains("1e-4 in 2D"));
}

#[test]
fn classify_family_points() {
    let r = run(&["classify", "--lattice", "family2d:1.5707963267948966"]);
    assert!(r.out.contains("Square"), "{}", r.out);
    let r = run(&["classify", "--lattice", "family3d:1.0471975511965979,0.6154797086703873,0.5235987755982989"]);
    assert!(r.out.contains("FCC"), "{}", r.out);
    let r = run(&["classify", "--lattice", "D3star"]);
    assert!(r.out.contains("BCC"), "{}", r.out);
    assert_eq!(run(&["classify", "--lattice", "A2"]).code, 1);
}

#[test]
fn thread_setting_from_environment() {
    let bin = env!("CARGO_BIN_EXE_lattice-energy");
    let status = |env: &str, extra: &[&str]| {
        std::process::Command::new(bin)
            .args(["theta", "--lattice", "Z2", "--alpha", "1"])
            .args(extra)
            .env("LATTICE_THREADS", env)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status("zero", &[]), Some(1));
    assert_eq!(status("2", &["--threads", "1"]), Some(0));
    assert_eq!(status("", &["--threads", "0"]), Some(1));
}

proptest! {
    #[test]
    fn number_format_is_stable(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let s = fmt_num(x);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(fmt_num(back), s.clone());
        prop_assert!(((back - x) / x.abs().max(f64::MIN_POSITIVE)).abs() < 1e-14 || x == 0.0, "{} -> {}", x, s);
    }
}
