//! Acceptance suite: one PASS/FAIL line per criterion, each with a pinned
//! time limit. Run with `cargo test -p erx-cli --test acceptance -- --nocapture`
//! to see the report.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use erx_core::dsl::print_spec;
use erx_core::fixtures::{self, objects, RandomParams};
use erx_core::gadgets::{
    gen_3sat, gen_3sat_restricted_max_e, gen_3sat_restricted_min_a, gen_horn, horn_entails, sat_oracle, Cnf3,
    Gadget, HornInput, HornItem, Literal,
};
use erx_core::metrics::f1;
use erx_core::query::{eval, eval_boolean, Query};
use erx_core::similarity::{jaro_winkler, levenshtein, tfidf_cosine};
use erx_core::solver::{enumerate_solutions, recognize_optimal_restricted, Enumeration, SearchConfig};
use erx_core::{io, Candidate, Criterion, Database, Engine, ExtendedDatabase, SimilarityStore, Specification};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

fn ok<T, E: Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn space(engine: &Engine) -> Result<Enumeration, String> {
    let s = ok(enumerate_solutions(engine, &SearchConfig::default()))?;
    ensure!(!s.partial, "enumeration hit the budget");
    Ok(s)
}

fn optimal_set(s: &Enumeration, c: Criterion) -> BTreeSet<Candidate> {
    s.optimal(c).into_iter().map(|i| s.solutions[i].clone()).collect()
}

// ---------------------------------------------------------------- 1

fn running_example() -> Check {
    let engine = fixtures::authors_engine();
    let db = engine.database().clone();
    let [e0v0, e1v0, e1v1, e1v2] = fixtures::author_candidates(&db);
    let s = space(&engine)?;
    let sols: BTreeSet<Candidate> = s.solutions.iter().cloned().collect();
    ensure!(
        sols == [e0v0, e1v1, e1v2.clone()].into(),
        "solutions differ: {} found",
        sols.len()
    );
    let check = ok(engine.check_solution(&e1v0))?;
    let named: Vec<&str> = check.violated.iter().map(|&d| engine.denial_label(d)).collect();
    ensure!(!check.is_solution() && named == ["d1"], "E1V0 not rejected via d1: {named:?}");
    let best = optimal_set(&s, Criterion::MaxES);
    ensure!(best == [e1v2].into(), "maxES optimum differs");
    Ok("3 solutions, E1V0 rejected by d1, maxES = {E1V2}".into())
}

// ---------------------------------------------------------------- 2

fn criteria_separation() -> Check {
    let checked = std::cell::Cell::new(0);
    let setup = |f: fn() -> (Database, Specification)| -> Result<(Engine, Enumeration), String> {
        let (db, spec) = f();
        let e = fixtures::engine(db, spec);
        let s = space(&e)?;
        Ok((e, s))
    };
    let expect = |s: &Enumeration, c: Criterion, want: &[&Candidate], fixture: &str| -> Result<(), String> {
        let want: BTreeSet<Candidate> = want.iter().map(|&c| c.clone()).collect();
        ensure!(optimal_set(s, c) == want, "{fixture}: {c} optima differ");
        checked.set(checked.get() + 1);
        Ok(())
    };
    let mut fixtures_checked = Vec::new();

    let (e, s) = setup(fixtures::sets_vs_counts)?;
    let db = e.database();
    let e1 = objects(db, &[("a1", "a2")]);
    let e2 = objects(db, &[("b1", "b2"), ("c1", "c2")]);
    for c in [Criterion::MaxES, Criterion::MinAS, Criterion::MinVS] {
        expect(&s, c, &[&e1, &e2], "sets_vs_counts")?;
    }
    for c in [Criterion::MaxEC, Criterion::MaxSC, Criterion::MinAC, Criterion::MinVC] {
        expect(&s, c, &[&e2], "sets_vs_counts")?;
    }
    fixtures_checked.push(s);

    let (e, s) = setup(fixtures::merges_vs_absence)?;
    let db = e.database();
    let id = Candidate::identity(db);
    let a = objects(db, &[("a1", "a2")]);
    expect(&s, Criterion::MaxES, &[&a], "merges_vs_absence")?;
    expect(&s, Criterion::MinAS, &[&id, &a], "merges_vs_absence")?;
    fixtures_checked.push(s);

    let (e, s) = setup(fixtures::absence_vs_violation)?;
    let db = e.database();
    let e1 = objects(db, &[("a1", "a2")]);
    ensure!(!optimal_set(&s, Criterion::MinAS).contains(&e1), "absence_vs_violation: E1 minAS-optimal");
    ensure!(optimal_set(&s, Criterion::MinVS).contains(&e1), "absence_vs_violation: E1 not minVS-optimal");
    checked.set(checked.get() + 2);
    fixtures_checked.push(s);

    let (e, s) = setup(fixtures::merge_counts)?;
    let db = e.database();
    let id = Candidate::identity(db);
    let a = objects(db, &[("a1", "a2")]);
    expect(&s, Criterion::MaxEC, &[&a], "merge_counts")?;
    expect(&s, Criterion::MinAC, &[&id, &a], "merge_counts")?;
    fixtures_checked.push(s);

    let (e, s) = setup(fixtures::support_counts)?;
    let db = e.database();
    let e1 = objects(db, &[("a1", "a2")]);
    let e2 = objects(db, &[("b1", "b2")]);
    expect(&s, Criterion::MaxEC, &[&e1, &e2], "support_counts")?;
    expect(&s, Criterion::MaxSC, &[&e2], "support_counts")?;
    fixtures_checked.push(s);

    let (e, s) = setup(fixtures::absence_count_vs_violation_count)?;
    let db = e.database();
    let e1 = objects(db, &[("b1", "b2"), ("c1", "c2")]);
    let e2 = objects(db, &[("a1", "a2"), ("b1", "b2")]);
    expect(&s, Criterion::MinAC, &[&e1, &e2], "absence_count_vs_violation_count")?;
    expect(&s, Criterion::MinVC, &[&e1], "absence_count_vs_violation_count")?;
    fixtures_checked.push(s);

    for s in &fixtures_checked {
        ensure!(
            s.optimal(Criterion::MaxES) == s.optimal(Criterion::MaxSS),
            "maxES and maxSS optima differ on a fixture"
        );
    }
    let mut rng = StdRng::seed_from_u64(101);
    let params = RandomParams {
        objects: 5,
        rules: 3,
        inequality: true,
        ..RandomParams::default()
    };
    for i in 0..100 {
        let (db, spec, store) = fixtures::random_instance(&mut rng, &params);
        let e = fixtures::engine_with(db, spec, &store);
        let s = space(&e)?;
        ensure!(
            s.optimal(Criterion::MaxES) == s.optimal(Criterion::MaxSS),
            "maxES and maxSS optima differ on random instance {i}"
        );
    }
    Ok(format!("{} optimum sets, maxES = maxSS on 6 fixtures + 100 random", checked.get()))
}

// ---------------------------------------------------------------- 3, 4

fn literals(n: usize) -> Vec<Literal> {
    (1..=n).flat_map(|v| [Literal::pos(v), Literal::neg(v)]).collect()
}

/// Clauses as multisets of three literals over `n` variables.
fn clauses(n: usize) -> Vec<[Literal; 3]> {
    let lits = literals(n);
    let mut out = Vec::new();
    for i in 0..lits.len() {
        for j in i..lits.len() {
            for k in j..lits.len() {
                out.push([lits[i], lits[j], lits[k]]);
            }
        }
    }
    out
}

/// Every formula with `n <= 2` variables and one or two clauses, plus 50
/// random three-variable formulas.
fn formulas() -> Vec<Cnf3> {
    let mut out = Vec::new();
    for n in 1..=2 {
        let cs = clauses(n);
        for i in 0..cs.len() {
            out.push(Cnf3::new(n, vec![cs[i]]).unwrap());
            for j in i..cs.len() {
                out.push(Cnf3::new(n, vec![cs[i], cs[j]]).unwrap());
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(303);
    let lits = literals(3);
    for _ in 0..50 {
        // clauses of one or two distinct literals make unsatisfiable draws common
        let m = rng.gen_range(2..=8);
        let cs = (0..m)
            .map(|_| {
                let a = lits[rng.gen_range(0..lits.len())];
                let b = if rng.gen_bool(0.5) { a } else { lits[rng.gen_range(0..lits.len())] };
                [a, b, a]
            })
            .collect();
        out.push(Cnf3::new(3, cs).unwrap());
    }
    out
}

fn gadget_verdicts(g: &Gadget, criteria: &[Criterion]) -> Result<Vec<bool>, String> {
    let e = ok(Engine::new(
        g.db.clone().into(),
        g.spec.clone().into(),
        &SimilarityStore::new(),
    ))?;
    let s = space(&e)?;
    criteria
        .iter()
        .map(|&c| ok(s.recognize(&e, &g.baseline, c)).map(|r| r.optimal))
        .collect()
}

fn sat_reduction() -> Check {
    let phis = formulas();
    let mut sat = 0;
    for phi in &phis {
        let s = ok(sat_oracle(phi))?;
        sat += s as usize;
        let g = ok(gen_3sat(phi))?;
        for (c, optimal) in Criterion::DISTINCT.iter().zip(gadget_verdicts(&g, &Criterion::DISTINCT)?) {
            ensure!(s == !optimal, "{c} disagrees on {:?}", phi.to_dimacs());
        }
    }
    Ok(format!("{} formulas ({sat} satisfiable) x 7 criteria", phis.len()))
}

fn restricted_sat_reductions() -> Check {
    let phis = formulas();
    for phi in &phis {
        let s = ok(sat_oracle(phi))?;
        let n = phi.vars();
        let g = ok(gen_3sat_restricted_min_a(phi))?;
        let e = ok(Engine::new(g.db.clone().into(), g.spec.clone().into(), &SimilarityStore::new()))?;
        let abs = ok(e.criterion_sets(&g.baseline))?.abs.len();
        ensure!(abs == n + 1, "|abs| = {abs}, want {}", n + 1);
        for optimal in gadget_verdicts(&g, &[Criterion::MinAC, Criterion::MinVC])? {
            ensure!(s == !optimal, "minA gadget disagrees on {:?}", phi.to_dimacs());
        }
        let g = ok(gen_3sat_restricted_max_e(phi))?;
        let pairs = g.baseline.pair_count();
        ensure!(pairs == 2 * (n + 1) * (n + 1) + 2, "pair_count = {pairs}");
        for optimal in gadget_verdicts(&g, &[Criterion::MaxEC, Criterion::MaxSC])? {
            ensure!(s == !optimal, "maxE gadget disagrees on {:?}", phi.to_dimacs());
        }
    }
    Ok(format!("{} formulas through both gadgets", phis.len()))
}

// ---------------------------------------------------------------- 5

fn horn_reduction() -> Check {
    let mut rng = StdRng::seed_from_u64(505);
    let mut entailed = 0;
    for _ in 0..100 {
        let vars = rng.gen_range(1..=6);
        let var = |rng: &mut StdRng| rng.gen_range(1..=vars);
        let items = (0..rng.gen_range(1..=6))
            .map(|_| {
                if rng.gen_bool(0.35) {
                    HornItem::Unit(var(&mut rng))
                } else {
                    HornItem::Clause(var(&mut rng), var(&mut rng), var(&mut rng))
                }
            })
            .collect();
        let h = ok(HornInput::new(items, var(&mut rng)))?;
        let want = ok(horn_entails(&h))?;
        entailed += want as usize;
        let g = ok(gen_horn(&h))?;
        let e = ok(Engine::new(g.db.clone().into(), g.spec.clone().into(), &SimilarityStore::new()))?;
        let fast = ok(recognize_optimal_restricted(&e, &g.baseline, Criterion::MinAS))?.optimal;
        ensure!(fast == want, "restricted minAS disagrees on\n{}", h.to_text());
        let slow = gadget_verdicts(&g, &[Criterion::MinAS])?[0];
        ensure!(fast == slow, "restricted and brute force disagree on\n{}", h.to_text());
    }
    let params = RandomParams {
        objects: 6,
        cells: 4,
        inequality: false,
        ..RandomParams::default()
    };
    let mut verdicts = 0;
    for i in 0..200 {
        let (db, spec, store) = fixtures::random_instance(&mut rng, &params);
        let e = fixtures::engine_with(db, spec, &store);
        let s = space(&e)?;
        let mut cands = s.solutions.clone();
        cands.push(Candidate::identity(e.database()));
        for c in [Criterion::MaxES, Criterion::MinAS, Criterion::MinVS] {
            for cand in &cands {
                let fast = ok(recognize_optimal_restricted(&e, cand, c))?.optimal;
                let slow = ok(s.recognize(&e, cand, c))?.optimal;
                ensure!(fast == slow, "instance {i}: {c} restricted {fast}, brute force {slow}");
                verdicts += 1;
            }
        }
    }
    Ok(format!(
        "100 Horn inputs ({entailed} entailed), {verdicts} verdicts on 200 random instances"
    ))
}

// ---------------------------------------------------------------- 6

fn evaluation_monotonicity() -> Check {
    let mut rng = StdRng::seed_from_u64(606);
    let mut steps = 0;
    for t in 0..500 {
        let (db, sim) = common::random_db(&mut rng);
        let (body, free) = common::random_query(&mut rng, false);
        let free: Vec<&str> = free.iter().map(String::as_str).collect();
        let q = ok(Query::compile(&db, &body, &free))?;
        let mut cand = Candidate::identity(&db);
        let ext = ok(ExtendedDatabase::new(&db, &cand))?;
        let mut answers = q.eval(&ext, &sim);
        let mut violated = ok(eval_boolean(&db, &body, &ext, &sim))?;
        for _ in 0..4 {
            let Some(p) = common::random_merge(&mut rng, &db) else { break };
            cand = ok(cand.with_pair(p))?;
            let ext = ok(ExtendedDatabase::new(&db, &cand))?;
            let next = q.eval(&ext, &sim);
            ensure!(answers.is_subset(&next), "triple {t}: answers shrank");
            let now = ok(eval_boolean(&db, &body, &ext, &sim))?;
            ensure!(!violated || now, "triple {t}: violation disappeared");
            answers = next;
            violated = now;
            steps += 1;
        }
    }
    let mut rng = StdRng::seed_from_u64(607);
    for t in 0..100 {
        let (db, sim) = common::random_db(&mut rng);
        let cand = common::random_candidate(&mut rng, &db);
        let ext = ok(ExtendedDatabase::new(&db, &cand))?;
        let (body, free) = common::random_query(&mut rng, true);
        let free: Vec<&str> = free.iter().map(String::as_str).collect();
        let got = ok(eval(&db, &body, &free, &ext, &sim))?;
        let want = common::Naive {
            ext: &ext,
            sim: &sim,
            body: &body,
        }
        .answers(&free);
        ensure!(got == want, "instance {t}: restricted evaluation differs from exhaustive search");
    }
    Ok(format!("500 triples ({steps} merge steps), 100 exhaustive comparisons"))
}

// ---------------------------------------------------------------- 7

fn metrics_row() -> Check {
    let got = f1(0.9939, 0.9914);
    ensure!((got - 0.9927).abs() < 5e-4, "F1 = {got}");
    Ok(format!("F1(0.9939, 0.9914) = {got:.4}"))
}

// ---------------------------------------------------------------- 8

fn similarity() -> Check {
    let mut rng = StdRng::seed_from_u64(808);
    let alphabet = ['a', 'b', 'c', 'd', 'é'];
    for _ in 0..1000 {
        let a = common::random_string(&mut rng, 6, &alphabet);
        let b = common::random_string(&mut rng, 6, &alphabet);
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        ensure!(levenshtein(&a, &b) == common::lev_rec(&ca, &cb), "levenshtein {a:?} {b:?}");
        let a = common::random_string(&mut rng, 10, &alphabet);
        let b = common::random_string(&mut rng, 10, &alphabet);
        let d = (jaro_winkler(&a, &b) - common::jw_direct(&a, &b)).abs();
        ensure!(d < 1e-9, "jaro_winkler {a:?} {b:?} off by {d}");
    }
    let words = ["alpha", "beta", "gamma", "Delta", "eps", "zeta"];
    let phrase = |rng: &mut StdRng| -> String {
        (0..rng.gen_range(0..=4))
            .map(|_| words[rng.gen_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    for _ in 0..1000 {
        let corpus: Vec<String> = (0..rng.gen_range(1..=6)).map(|_| phrase(&mut rng)).collect();
        let (a, b) = (phrase(&mut rng), phrase(&mut rng));
        let d = (tfidf_cosine(&a, &b, &corpus) - common::tfidf_dense(&a, &b, &corpus)).abs();
        ensure!(d < 1e-9, "tfidf {a:?} {b:?} off by {d}");
    }
    Ok("1000 pairs per measure".into())
}

// ---------------------------------------------------------------- 9

fn solve_files(dir: &Path, base: &Path, criterion: &str, threads: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |n: &str| base.join(n).to_str().unwrap().to_string();
    let args = [
        "erx".to_string(),
        "solve".into(),
        "--spec".into(),
        p("spec.erx"),
        "--data".into(),
        p("data"),
        "--sim-overrides".into(),
        p("sim.tsv"),
        "--criterion".into(),
        criterion.into(),
        "--num".into(),
        "50".into(),
        "--threads".into(),
        threads.into(),
        "--out".into(),
        dir.to_str().unwrap().into(),
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = erx_cli::run(args, &mut out, &mut err);
    ensure!(code == 0, "solve exited with {code}: {}", String::from_utf8_lossy(&err));
    let mut files: Vec<(String, Vec<u8>)> = ok(fs::read_dir(dir))?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "tsv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Check {
    let tmp = ok(tempfile::TempDir::new())?;
    let (fig_db, fig_spec, fig_sim) = fixtures::authors();
    let mut instances: Vec<(&str, Database, Specification, String)> = vec![("authors", fig_db, fig_spec, fig_sim.to_tsv())];
    for (name, f) in [
        ("sets_vs_counts", fixtures::sets_vs_counts as fn() -> (Database, Specification)),
        ("merges_vs_absence", fixtures::merges_vs_absence),
        ("absence_vs_violation", fixtures::absence_vs_violation),
        ("support_counts", fixtures::support_counts),
    ] {
        let (db, spec) = f();
        instances.push((name, db, spec, String::new()));
    }
    let mut runs = 0;
    for (name, db, spec, sim) in &instances {
        let base = tmp.path().join(name);
        ok(fs::create_dir_all(&base))?;
        ok(fs::write(base.join("spec.erx"), print_spec(spec)))?;
        ok(io::write_database(db, &base.join("data")))?;
        ok(fs::write(base.join("sim.tsv"), sim))?;
        for c in Criterion::ALL {
            let a = solve_files(&base.join(format!("{c}-a")), &base, c.name(), "1")?;
            let b = solve_files(&base.join(format!("{c}-b")), &base, c.name(), "4")?;
            ensure!(!a.is_empty(), "{name} {c}: no solution files");
            ensure!(a == b, "{name} {c}: runs differ");
            runs += 2;
        }
    }
    Ok(format!("{runs} solve runs over {} fixtures, byte-identical", instances.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, u64, fn() -> Check); 9] = [
        ("1 running example", 1, running_example),
        ("2 criteria separation", 10, criteria_separation),
        ("3 3SAT reduction", 120, sat_reduction),
        ("4 restricted 3SAT reductions", 120, restricted_sat_reductions),
        ("5 Horn reduction and restricted recognizer", 300, horn_reduction),
        ("6 evaluation lemmas", 60, evaluation_monotonicity),
        ("7 metrics arithmetic", 1, metrics_row),
        ("8 similarity oracles", 60, similarity),
        ("9 solve determinism", 60, determinism),
    ];
    let mut failed = Vec::new();
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let line = match &result {
            Ok(detail) if elapsed <= Duration::from_secs(limit) => {
                format!("PASS  {name:<45} {:>8.2}s  {detail}", elapsed.as_secs_f64())
            }
            Ok(_) => {
                failed.push(name);
                format!("FAIL  {name:<45} {:>8.2}s  over the {limit}s limit", elapsed.as_secs_f64())
            }
            Err(why) => {
                failed.push(name);
                format!("FAIL  {name:<45} {:>8.2}s  {why}", elapsed.as_secs_f64())
            }
        };
        println!("{line}");
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
