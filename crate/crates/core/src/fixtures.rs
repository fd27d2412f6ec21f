//! Small instances used by tests, examples and the command line: the
//! running author example, the separating instances for the criteria, and
//! a generator of random instances.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dsl::{parse_spec, Specification};
use crate::equiv::{Candidate, MergePair};
use crate::model::{Database, DatabaseBuilder};
use crate::semantics::Engine;
use crate::similarity::SimilarityStore;

pub const AUTHORS_SCHEMA: &str = "\
schema Author(aid: obj, name: val, dob: val, pob: val).
schema Awarded(aid: obj, awrd: val).
";

pub const AUTHORS_RULES: &str = "\
soft obj s1: Author[t1](x, n1, d, p), Author[t2](y, n2, d, p), sim(n1, n2) >= 95 => EqO(x, y).
hard val r1: Author[t1](a, n1, _, _), Author[t2](a, n2, _, _), sim(n1, n2) >= 95 => EqV(t1.2, t2.2).
soft val s2: Awarded[t1](a, z), Awarded[t2](a, w), sim(z, w) >= 95 => EqV(t1.2, t2.2).
dc d1: Author(a, n1, _, _), Author(a, n2, _, _), n1 != n2.
";

pub const AUTHORS_FACTS: &[(&str, &str, &[&str])] = &[
    ("Author", "t1", &["a1", "A. Turing", "23/07/1912", "London"]),
    ("Author", "t2", &["a2", "Alan Turing", "23/07/1912", "London"]),
    ("Author", "t3", &["a3", "Clerk Maxwell", "13/06/1831", "Edinburgh"]),
    ("Awarded", "t4", &["a1", "Smith's Prize(1936)"]),
    ("Awarded", "t5", &["a2", "Smith's Prize"]),
    ("Awarded", "t6", &["a3", "Smith's Prize"]),
];

pub const AUTHORS_OVERRIDES: &str = "\
A. Turing\tAlan Turing\t98
Smith's Prize\tSmith's Prize(1936)\t96
";

fn build(spec_text: &str, facts: &[(&str, &str, &[&str])]) -> (Database, Specification) {
    let spec = parse_spec(spec_text).expect("fixture specification parses");
    let mut b = DatabaseBuilder::new(Arc::new(spec.schema().clone()));
    for (rel, tid, args) in facts {
        b.add_fact(rel, tid, args).expect("fixture fact");
    }
    (b.build(), spec)
}

pub fn engine(db: Database, spec: Specification) -> Engine {
    engine_with(db, spec, &SimilarityStore::new())
}

pub fn engine_with(db: Database, spec: Specification, store: &SimilarityStore) -> Engine {
    Engine::new(Arc::new(db), Arc::new(spec), store).expect("fixture engine")
}

/// The author database with its specification and similarity overrides.
pub fn authors() -> (Database, Specification, SimilarityStore) {
    let (db, spec) = build(&format!("{AUTHORS_SCHEMA}{AUTHORS_RULES}"), AUTHORS_FACTS);
    let store = SimilarityStore::parse_tsv(AUTHORS_OVERRIDES).expect("overrides");
    (db, spec, store)
}

pub fn authors_engine() -> Engine {
    let (db, spec, store) = authors();
    engine_with(db, spec, &store)
}

/// `[E0V0, E1V0, E1V1, E1V2]` of the author example.
pub fn author_candidates(db: &Database) -> [Candidate; 4] {
    let a = MergePair::objects(db.object_by_text("a1").unwrap(), db.object_by_text("a2").unwrap());
    let cell = |t: &str| db.cell_by_tid(t, 2).unwrap();
    let names = MergePair::cells(cell("t1"), cell("t2"));
    let prizes = MergePair::cells(cell("t4"), cell("t5"));
    let id = Candidate::identity(db);
    let e1v0 = id.with_pair(a).unwrap();
    let e1v1 = e1v0.with_pair(names).unwrap();
    let e1v2 = e1v1.with_pair(prizes).unwrap();
    [id, e1v0, e1v1, e1v2]
}

/// Closes object pairs given by constant text.
pub fn objects(db: &Database, pairs: &[(&str, &str)]) -> Candidate {
    let ps = pairs.iter().map(|(a, b)| {
        MergePair::objects(
            db.object_by_text(a).unwrap_or_else(|| panic!("no object {a}")),
            db.object_by_text(b).unwrap_or_else(|| panic!("no object {b}")),
        )
    });
    Candidate::from_pairs(db, ps).unwrap()
}

const BINARY: &str = "(a: obj, b: obj).\n";

fn schema_of(names: &[&str]) -> String {
    names.iter().map(|n| format!("schema {n}{BINARY}")).collect()
}

pub fn sets_vs_counts() -> (Database, Specification) {
    let text = format!(
        "{}soft obj s: R(x, y) => EqO(x, y).
soft obj sp: Rp(x, y) => EqO(x, y).
dc d: R(y, y), Rp(z, z).
",
        schema_of(&["R", "Rp"])
    );
    build(
        &text,
        &[
            ("R", "f1", &["a1", "a2"]),
            ("Rp", "f2", &["b1", "b2"]),
            ("Rp", "f3", &["c1", "c2"]),
        ],
    )
}

pub fn merges_vs_absence() -> (Database, Specification) {
    let text = format!(
        "{}soft obj s: R(x, y) => EqO(x, y).
soft obj sp: R(z, z), Rp(x, y) => EqO(x, y).
dc d: R(y, y), Rp(z, z).
",
        schema_of(&["R", "Rp"])
    );
    build(&text, &[("R", "f1", &["a1", "a2"]), ("Rp", "f2", &["b1", "b2"])])
}

/// Also the instance separating `minAC` from `minVC`.
pub fn absence_vs_violation() -> (Database, Specification) {
    let text = format!(
        "{}soft obj sa: Ra(x, y) => EqO(x, y).
soft obj sb: Rb(x, y) => EqO(x, y).
soft obj sc: Rc(x, y) => EqO(x, y).
soft obj scp: Rb(z, z), Rc(x, y) => EqO(x, y).
dc d: Ra(y, y), Rc(z, z).
",
        schema_of(&["Ra", "Rb", "Rc"])
    );
    build(
        &text,
        &[
            ("Ra", "f1", &["a1", "a2"]),
            ("Rb", "f2", &["b1", "b2"]),
            ("Rc", "f3", &["c1", "c2"]),
        ],
    )
}

/// Separates `maxEC` from `minAC`; same instance as `merges_vs_absence`.
pub fn merge_counts() -> (Database, Specification) {
    merges_vs_absence()
}

pub fn support_counts() -> (Database, Specification) {
    let text = format!(
        "{}soft obj s: R(x, y) => EqO(x, y).
soft obj sp: Rp(x, y) => EqO(x, y).
soft obj spp: Rpp(x, y) => EqO(x, y).
dc d: R(y, y), Rp(z, z).
",
        schema_of(&["R", "Rp", "Rpp"])
    );
    build(
        &text,
        &[
            ("R", "f1", &["a1", "a2"]),
            ("Rp", "f2", &["b1", "b2"]),
            ("Rpp", "f3", &["b1", "b2"]),
        ],
    )
}

pub fn absence_count_vs_violation_count() -> (Database, Specification) {
    absence_vs_violation()
}

/// Size limits for [`random_instance`].
#[derive(Clone, Copy, Debug)]
pub struct RandomParams {
    pub objects: usize,
    pub cells: usize,
    pub rules: usize,
    pub denials: usize,
    /// Allow inequality atoms in denial constraints.
    pub inequality: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            objects: 6,
            cells: 4,
            rules: 3,
            denials: 2,
            inequality: false,
        }
    }
}

pub const RANDOM_SCHEMA: &str = "\
schema R(a: obj, b: obj).
schema P(a: obj, v: val).
schema U(a: obj).
";

const OBJECT_BODIES: &[&str] = &[
    "R(x, y)",
    "R(x, y), U(y)",
    "R(z, z), R(x, y)",
    "U(x), U(y)",
    "P(x, v), P(y, v)",
    "P(x, v), P(y, w), sim(v, w) >= 60",
    "R(x, z), R(y, z)",
    "R(x, y), P(x, v), P(y, w), sim(v, w) >= 40",
];

const VALUE_BODIES: &[&str] = &[
    "P[t](x, v), P[u](x, w)",
    "P[t](x, v), P[u](y, w), R(x, y), sim(v, w) >= 50",
    "P[t](x, _), P[u](y, _), R(x, y)",
    "P[t](x, v), P[u](y, w), sim(v, w) >= 70",
];

const PLAIN_DENIALS: &[&str] = &[
    "R(y, y), U(y)",
    "R(y, y)",
    "U(y), P(y, v), P(z, v), R(z, z)",
    "R(x, y), R(y, x), U(x)",
    "P(x, v), P(y, v), U(x), U(y), R(x, y)",
];

const INEQUALITY_DENIALS: &[&str] = &["P(x, v), P(x, w), v != w", "R(x, x), U(y), U(z), y != z"];

const VALUES: &[&str] = &["x", "y", "z", ""];

/// A random instance over a fixed three-relation schema. The returned
/// store holds random scores for every pair of the values in use.
pub fn random_instance<R: Rng>(rng: &mut R, p: &RandomParams) -> (Database, Specification, SimilarityStore) {
    let mut text = String::from(RANDOM_SCHEMA);
    let rule_count = rng.gen_range(1..=p.rules.max(1));
    for i in 0..rule_count {
        let kind = if rng.gen_bool(0.3) { "hard" } else { "soft" };
        if rng.gen_bool(0.7) {
            let body = OBJECT_BODIES.choose(rng).unwrap();
            text.push_str(&format!("{kind} obj r{i}: {body} => EqO(x, y).\n"));
        } else {
            let body = VALUE_BODIES.choose(rng).unwrap();
            text.push_str(&format!("{kind} val r{i}: {body} => EqV(t.2, u.2).\n"));
        }
    }
    let dc_count = rng.gen_range(0..=p.denials);
    for i in 0..dc_count {
        let body = if p.inequality && rng.gen_bool(0.5) {
            INEQUALITY_DENIALS.choose(rng).unwrap()
        } else {
            PLAIN_DENIALS.choose(rng).unwrap()
        };
        text.push_str(&format!("dc d{i}: {body}.\n"));
    }
    let spec = parse_spec(&text).expect("random specification parses");

    let pool: Vec<String> = (1..=p.objects.max(2)).map(|i| format!("o{i}")).collect();
    let mut b = DatabaseBuilder::new(Arc::new(spec.schema().clone()));
    let pick = |rng: &mut R| pool[rng.gen_range(0..pool.len())].clone();
    for _ in 0..rng.gen_range(1..=4) {
        let (a, c) = (pick(rng), pick(rng));
        b.add_auto("R", &[a, c]).unwrap();
    }
    for _ in 0..rng.gen_range(0..=p.cells) {
        let a = pick(rng);
        let v = VALUES.choose(rng).unwrap().to_string();
        b.add_auto("P", &[a, v]).unwrap();
    }
    for _ in 0..rng.gen_range(0..=2) {
        let a = pick(rng);
        b.add_auto("U", &[a]).unwrap();
    }
    let mut store = SimilarityStore::new();
    for (i, a) in VALUES[..3].iter().enumerate() {
        for c in &VALUES[i + 1..3] {
            store.insert(a, c, rng.gen_range(0..=100));
        }
    }
    (b.build(), spec, store)
}
