use std::fs;
use std::path::{Path, PathBuf};

use erx_core::dsl::print_spec;
use erx_core::fixtures::{self, AUTHORS_OVERRIDES};
use erx_core::gadgets::{horn_entails, HornInput};
use erx_core::{io, Database, Specification};
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn erx(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = erx_cli::run(std::iter::once("erx").chain(args.iter().copied()), &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("{e}: {}{}", r.stdout, r.stderr))
}

/// Writes `spec.erx`, `data/` and `sim.tsv` for an instance.
fn instance(dir: &Path, db: &Database, spec: &Specification, overrides: &str) -> Vec<String> {
    fs::write(dir.join("spec.erx"), print_spec(spec)).unwrap();
    io::write_database(db, &dir.join("data")).unwrap();
    fs::write(dir.join("sim.tsv"), overrides).unwrap();
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    vec![
        "--spec".into(),
        p("spec.erx"),
        "--data".into(),
        p("data"),
        "--sim-overrides".into(),
        p("sim.tsv"),
    ]
}

fn authors(dir: &Path) -> Vec<String> {
    let (db, spec, _) = fixtures::authors();
    instance(dir, &db, &spec, AUTHORS_OVERRIDES)
}

fn args<'a>(cmd: &'a str, base: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(base.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

fn solution_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("solution_"))
        .collect();
    v.sort();
    v
}

#[test]
fn ingest_counts_running_example() {
    let tmp = TempDir::new().unwrap();
    authors(tmp.path());
    let (_, spec, _) = fixtures::authors();
    let db = io::ingest(&tmp.path().join("data"), spec.schema()).unwrap();
    assert_eq!((db.facts().len(), db.objects().len(), db.cells().len()), (6, 3, 12));
}

#[test]
fn solve_running_example() {
    let tmp = TempDir::new().unwrap();
    let base = authors(tmp.path());
    let out = tmp.path().join("out");
    let r = erx(&args("solve", &base, &["--num", "5", "--out", out.to_str().unwrap()]));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let files = solution_files(&out);
    assert_eq!(files.len(), 1);
    assert_eq!(
        fs::read_to_string(&files[0]).unwrap(),
        "eqo\ta1\ta2\neqv\tt1\t2\tt2\t2\neqv\tt4\t2\tt5\t2\n"
    );
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "ok");
    assert_eq!(report["total_solutions"], 3);
    assert_eq!(report["stats"]["cells"], 12);
    assert_eq!(report["solutions"][0]["file"], "solution_001.tsv");
    assert!(report["timings"]["search_ms"].is_number());
}

#[test]
fn solve_separating_instance() {
    let tmp = TempDir::new().unwrap();
    let (db, spec) = fixtures::sets_vs_counts();
    let base = instance(tmp.path(), &db, &spec, "");
    for (crit, count) in [("maxES", 2), ("minAC", 1)] {
        let out = tmp.path().join(crit);
        let r = erx(&args(
            "solve",
            &base,
            &["--criterion", crit, "--num", "5", "--out", out.to_str().unwrap()],
        ));
        assert_eq!(r.code, 0);
        assert_eq!(solution_files(&out).len(), count, "{crit}");
    }
    let out = tmp.path().join("minAC");
    let text = fs::read_to_string(out.join("solution_001.tsv")).unwrap();
    assert_eq!(text, "eqo\tb1\tb2\neqo\tc1\tc2\n");
}

#[test]
fn solve_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let base = authors(tmp.path());
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let threads = if k == 0 { "1" } else { "3" };
        let r = erx(&args(
            "solve",
            &base,
            &["--criterion", "minVS", "--num", "9", "--threads", threads, "--out", out.to_str().unwrap()],
        ));
        assert_eq!(r.code, 0);
        let files: Vec<(PathBuf, Vec<u8>)> = solution_files(&out)
            .into_iter()
            .map(|p| (p.file_name().unwrap().into(), fs::read(&p).unwrap()))
            .collect();
        runs.push(files);
    }
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn budget_exhaustion_exits_inconclusive() {
    let tmp = TempDir::new().unwrap();
    let base = authors(tmp.path());
    let r = erx(&args("solve", &base, &["--pair-budget", "1"]));
    assert_eq!(r.code, 3);
    assert_eq!(json(&r)["verdict"], "inconclusive");
}

#[test]
fn unsatisfiable_instance_reports_no_solution() {
    let tmp = TempDir::new().unwrap();
    let spec = erx_core::parse_spec("schema U(a: obj).\ndc d: U(x).\n").unwrap();
    let mut b = erx_core::DatabaseBuilder::new(std::sync::Arc::new(spec.schema().clone()));
    b.add_auto("U", &["o"]).unwrap();
    let base = instance(tmp.path(), &b.build(), &spec, "");
    let r = erx(&args("solve", &base, &[]));
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["verdict"], "no-solution");
}

#[test]
fn check_names_violated_constraint() {
    let tmp = TempDir::new().unwrap();
    let base = authors(tmp.path());
    let sol = tmp.path().join("e1v0.tsv");
    fs::write(&sol, "eqo\ta1\ta2\n").unwrap();
    let r = erx(&args("check", &base, &["--solution", sol.to_str().unwrap()]));
    assert_eq!(r.code, 1);
    let v = json(&r);
    assert_eq!(v["solution"], false);
    assert_eq!(v["violated"], serde_json::json!(["d1"]));

    fs::write(&sol, "eqo\ta1\ta2\neqv\tt1\t2\tt2\t2\n").unwrap();
    let r = erx(&args("check", &base, &["--solution", sol.to_str().unwrap()]));
    assert_eq!(r.code, 0);

    fs::write(&sol, "eqo\ta1\n").unwrap();
    let r = erx(&args("check", &base, &["--solution", sol.to_str().unwrap()]));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("error"));
}

#[test]
fn recognize_engines() {
    let tmp = TempDir::new().unwrap();
    let base = authors(tmp.path());
    let sol = tmp.path().join("e1v1.tsv");
    fs::write(&sol, "eqo\ta1\ta2\neqv\tt1\t2\tt2\t2\n").unwrap();
    let witness = tmp.path().join("better.tsv");
    let r = erx(&args(
        "recognize",
        &base,
        &["--solution", sol.to_str().unwrap(), "--out", witness.to_str().unwrap()],
    ));
    assert_eq!(r.code, 0);
    assert_eq!(json(&r)["optimal"], false);
    assert_eq!(
        fs::read_to_string(&witness).unwrap(),
        "eqo\ta1\ta2\neqv\tt1\t2\tt2\t2\neqv\tt4\t2\tt5\t2\n"
    );
    let r = erx(&args(
        "recognize",
        &base,
        &["--solution", sol.to_str().unwrap(), "--engine", "restricted"],
    ));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("inequality"));
}

#[test]
fn gadget_round_trip_horn() {
    let tmp = TempDir::new().unwrap();
    for (k, text) in ["unit x1\nclause -x1 -x1 x2\nquery x2\n", "unit x1\nquery x2\n"].iter().enumerate() {
        let input = tmp.path().join(format!("h{k}.txt"));
        fs::write(&input, text).unwrap();
        let dir = tmp.path().join(format!("g{k}"));
        let r = erx(&["gadget", "--kind", "horn", "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let entailed = horn_entails(&HornInput::parse(text).unwrap()).unwrap();
        assert_eq!(json(&r)["oracle"], entailed);
        for rel in ["C", "W", "R"] {
            assert!(dir.join("data").join(format!("{rel}.tsv")).exists());
        }
        let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
        let r = erx(&[
            "recognize",
            "--spec",
            &p("spec.erx"),
            "--schema",
            &p("schema.erx"),
            "--data",
            &p("data"),
            "--solution",
            &p("baseline.tsv"),
            "--criterion",
            "minAS",
            "--engine",
            "restricted",
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(json(&r)["optimal"], entailed);
    }
}

#[test]
fn gadget_round_trip_unsat_cnf() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("phi.cnf");
    fs::write(&input, "p cnf 1 2\n1 1 1 0\n-1 -1 -1 0\n").unwrap();
    let dir = tmp.path().join("g");
    let r = erx(&["gadget", "--kind", "3sat", "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r)["oracle"], false);
    let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
    for crit in ["maxES", "maxEC", "maxSC", "minAS", "minAC", "minVS", "minVC"] {
        let r = erx(&[
            "recognize",
            "--spec",
            &p("spec.erx"),
            "--schema",
            &p("schema.erx"),
            "--data",
            &p("data"),
            "--solution",
            &p("baseline.tsv"),
            "--criterion",
            crit,
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(json(&r)["optimal"], true, "{crit}");
    }
}

#[test]
fn gadget_rejects_bad_cnf() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("g");
    for text in ["p cnf 1 0\n", "p cnf 2 1\n1 2 0\n"] {
        let input = tmp.path().join("bad.cnf");
        fs::write(&input, text).unwrap();
        let r = erx(&["gadget", "--kind", "3sat", "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(r.code, 2, "{text:?}");
    }
    let r = erx(&["gadget", "--kind", "4sat", "--input", "x", "--out", "y"]);
    assert_eq!(r.code, 2);
}

#[test]
fn eval_scores() {
    let tmp = TempDir::new().unwrap();
    let (db, spec) = fixtures::sets_vs_counts();
    let base = instance(tmp.path(), &db, &spec, "");
    let sol = tmp.path().join("sol.tsv");
    let truth = tmp.path().join("truth.tsv");
    fs::write(&sol, "eqo\tb1\tb2\n").unwrap();
    fs::write(&truth, "b1\tb2\n").unwrap();
    let r = erx(&args(
        "eval",
        &base,
        &["--solution", sol.to_str().unwrap(), "--truth", truth.to_str().unwrap()],
    ));
    assert_eq!(r.code, 0);
    assert_eq!(json(&r)["f1"], 1.0);
    fs::write(&truth, "b1\tb2\nc1\tc2\n").unwrap();
    let r = erx(&args(
        "eval",
        &base,
        &["--solution", sol.to_str().unwrap(), "--truth", truth.to_str().unwrap()],
    ));
    let v = json(&r);
    assert_eq!((v["precision"].as_f64(), v["recall"].as_f64()), (Some(1.0), Some(0.5)));
    assert!((v["f1"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn sim_store_is_written() {
    let tmp = TempDir::new().unwrap();
    let base = authors(tmp.path());
    let dest = tmp.path().join("store.tsv");
    let r = erx(&args("sim", &base, &["--out", dest.to_str().unwrap()]));
    assert_eq!(r.code, 0);
    let store = erx_core::SimilarityStore::parse_tsv(&fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(store.get("A. Turing", "Alan Turing"), 98);
    assert!(store.len() > 2);
}

#[test]
fn usage_errors() {
    assert_eq!(erx(&["solve"]).code, 2);
    assert_eq!(erx(&["solve", "--spec", "a", "--data", "b", "--criterion", "best"]).code, 2);
    let r = erx(&["solve", "--spec", "/nonexistent/spec.erx", "--data", "/nonexistent"]);
    assert_eq!(r.code, 2);
    assert_eq!(erx(&["--help"]).code, 0);
}
