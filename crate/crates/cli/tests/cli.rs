use std::fs;
use std::path::Path;
use std::process::Command;

use puf_ldpc::eval::read_curves_csv;
use puf_ldpc::geometry::build_eg;
use puf_ldpc::sketch::{CodeFile, Response};
use puf_ldpc::sparsemat::write_matrix;
use puf_ldpc_cli::{cmd_report, ExperimentSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_puf-ldpc"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_small_code_is_brute_force_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let (code, stdout, _) = run(&["construct", "--n", "16", "--k", "5", "--seed", "3", "--out", path(&out)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("k=5"));
    let file = CodeFile::read_from(fs::read(out.join("code.txt")).unwrap().as_slice()).unwrap();
    let r = Response::read_from(fs::read(out.join("response.txt")).unwrap().as_slice()).unwrap();
    let masks: Vec<u32> = file.h.rows().iter().map(|row| row.iter().fold(0, |m, &j| m | 1 << j)).collect();
    let count = (0..1u32 << 16)
        .filter(|v| masks.iter().all(|m| (m & v).count_ones() % 2 == 0))
        .count();
    assert_eq!(count, 1 << 5);
    assert!(file.h.is_codeword(r.bits()).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let (code, _, err) = run(&["construct", "--n", "17", "--k", "5", "--out", path(&out)]);
    assert_eq!(code, 1);
    assert!(err.contains("length 17"));
    let (code, _, err) = run(&["construct", "--n", "16", "--k", "2", "--sources", "eg:2:4", "--out", path(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("achieved k"));
    assert!(out.join("code.txt").exists());
    assert_eq!(run(&["construct", "--no-such-flag"]).0, 1);
    assert_eq!(run(&["construct", "--n", "16", "--k", "20", "--out", path(&out)]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn single_point_grid_gives_single_row_csv() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    let s = dir.path().join("s");
    assert_eq!(run(&["construct", "--n", "16", "--k", "7", "--out", path(&c)]).0, 0);
    let (code, _, err) = run(&[
        "simulate", "--from", path(&c), "--p-grid", "0.05", "--trials", "1", "--m", "1", "--out", path(&s),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(s.join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("p,p_block\n0.05,"));
    let curves = read_curves_csv(csv.as_bytes()).unwrap();
    assert_eq!(curves[0].points.len(), 1);
}

#[test]
fn written_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["construct", "--n", "128", "--k", "13", "--seed", "4", "--out", path(&a)]).0, 0);
    let cfg = a.join("construct.cfg");
    assert_eq!(run(&["construct", "--config", path(&cfg), "--out", path(&b)]).0, 0);
    assert_eq!(fs::read(a.join("code.txt")).unwrap(), fs::read(b.join("code.txt")).unwrap());
    assert_eq!(fs::read(&cfg).unwrap(), fs::read(b.join("construct.cfg")).unwrap());
}

#[test]
fn config_text_round_trip_and_errors() {
    let spec = ExperimentSpec::from_config("# comment\nn=256\ntarget_k=106\nbaseline=255:21,127:11\ntail_policy=truncated\n")
        .unwrap();
    assert_eq!(ExperimentSpec::from_config(&spec.to_config()).unwrap(), spec);
    let resolved = spec.resolved();
    assert_eq!((resolved.delta1, resolved.delta2), (Some(20), Some(12)));
    assert_eq!(ExperimentSpec::from_config(&resolved.to_config()).unwrap(), resolved);
    assert!(ExperimentSpec::from_config("colour=blue\n").is_err());
    assert!(ExperimentSpec::from_config("n\n").is_err());
    assert!(ExperimentSpec::from_config("baseline=12\n").is_err());
}

#[test]
fn report_lists_pairs_and_regularity() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("eg22.txt");
    write_matrix(&build_eg(2, 2).unwrap().incidence_matrix(), &p).unwrap();
    let text = cmd_report(&p, None).unwrap();
    assert!(text.contains("stored pairs: 12"));
    assert!(text.contains("regularity: ok"));

    let (code, stdout, _) = run(&["report", path(&p)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("code-offset helper           : 4"));

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    assert_eq!(run(&["report", path(&empty)]).0, 1);
    fs::write(&empty, "3 4 0\n").unwrap();
    assert_eq!(run(&["report", path(&empty)]).0, 1);
}

#[test]
fn report_on_code_offset_helper_at_128() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    assert_eq!(run(&["construct", "--n", "128", "--k", "56", "--out", path(&c)]).0, 0);
    let (code, stdout, _) = run(&["report", path(&c.join("code.txt"))]);
    assert_eq!(code, 0);
    assert!(stdout.contains("code-offset helper           : 128"));
}
