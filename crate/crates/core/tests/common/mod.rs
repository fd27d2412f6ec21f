//! Independent reference implementations shared by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use erx_core::dsl::{Atom, RelAtom, Term};
use erx_core::fixtures::{self, RandomParams};
use erx_core::model::{CellId, ConstId, FactId, ObjectId};
use erx_core::semantics::Engine;
use erx_core::similarity::SimIndex;
use erx_core::{AttrType, Candidate, Constant, Database, EquivRel, ExtendedDatabase, MergePair};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- queries

pub struct Naive<'a> {
    pub ext: &'a ExtendedDatabase<'a>,
    pub sim: &'a SimIndex,
    pub body: &'a [Atom],
}

impl Naive<'_> {
    fn db(&self) -> &Database {
        self.ext.database()
    }

    fn lookup(&self, text: &str, ty: Option<AttrType>) -> Option<ConstId> {
        let c = match ty {
            Some(AttrType::Obj) => Constant::object(text),
            _ => Constant::value(text),
        };
        self.db().lookup(&c)
    }

    fn rel_atoms(&self) -> Vec<&RelAtom> {
        self.body
            .iter()
            .filter_map(|a| match a {
                Atom::Rel(r) => Some(r),
                _ => None,
            })
            .collect()
    }

    /// `h` for one choice of facts, or `None` when some variable gets an
    /// empty set or a constant is missing from its position.
    fn h(&self, choice: &[FactId]) -> Option<HashMap<String, BTreeSet<ConstId>>> {
        let db = self.db();
        let null = db.null_id();
        let mut sets: HashMap<String, Vec<BTreeSet<ConstId>>> = HashMap::new();
        for (atom, &f) in self.rel_atoms().iter().zip(choice) {
            let fact = db.fact(f);
            sets.entry(atom.tid.clone()).or_default().push([fact.tid].into());
            for (i, arg) in atom.args.iter().enumerate() {
                let s: BTreeSet<ConstId> = self.ext.set(f, i + 1).iter().copied().collect();
                match arg {
                    Term::Var(v) => sets.entry(v.clone()).or_default().push(s),
                    Term::Const(c) => {
                        let ty = db.relation_of(f).type_at(i + 1);
                        if !self.lookup(c, ty).map(|k| s.contains(&k)).unwrap_or(false) {
                            return None;
                        }
                    }
                }
            }
        }
        let mut h = HashMap::new();
        for (v, occ) in sets {
            let mut acc = occ[0].clone();
            for s in &occ[1..] {
                acc = acc.intersection(s).copied().collect();
            }
            if occ.len() > 1 {
                if let Some(n) = null {
                    acc.remove(&n);
                }
            }
            if acc.is_empty() {
                return None;
            }
            h.insert(v, acc);
        }
        Some(h)
    }

    fn operand(&self, h: &HashMap<String, BTreeSet<ConstId>>, t: &Term, other: &Term) -> BTreeSet<ConstId> {
        match t {
            Term::Var(v) => h[v].clone(),
            Term::Const(c) => {
                // a constant takes the sort of the variable it is compared to
                let obj = match other {
                    Term::Var(v) => h[v].iter().any(|&k| self.db().constant(k).sort() == erx_core::Sort::Object),
                    _ => false,
                };
                let ty = if obj { Some(AttrType::Obj) } else { Some(AttrType::Val) };
                self.lookup(c, ty).into_iter().collect()
            }
        }
    }

    fn checks_hold(&self, h: &HashMap<String, BTreeSet<ConstId>>) -> bool {
        let db = self.db();
        let null = db.null_id();
        self.body.iter().all(|a| match a {
            Atom::Rel(_) => true,
            Atom::Neq(l, r) => {
                let a = self.operand(h, l, r);
                let b = self.operand(h, r, l);
                a.iter().filter(|&&k| Some(k) != null).all(|k| !b.contains(k))
            }
            Atom::Sim { left, right, threshold } => {
                let a = self.operand(h, left, right);
                let b = self.operand(h, right, left);
                a.iter().any(|&x| {
                    Some(x) != null && b.iter().any(|&y| Some(y) != null && self.sim.score(x, y) >= *threshold)
                })
            }
        })
    }

    pub fn answers(&self, free: &[&str]) -> BTreeSet<Vec<ConstId>> {
        let db = self.db();
        let atoms = self.rel_atoms();
        let per_atom: Vec<Vec<FactId>> = atoms
            .iter()
            .map(|a| db.facts_of(db.schema().get(&a.relation).unwrap()).to_vec())
            .collect();
        let domain: Vec<ConstId> = (0..db.constants().len()).map(|i| ConstId(i as u32)).collect();
        let mut out = BTreeSet::new();
        let mut choice = vec![FactId(0); atoms.len()];
        let mut odometer = vec![0usize; atoms.len()];
        if per_atom.iter().any(|f| f.is_empty()) {
            return out;
        }
        loop {
            for (k, &i) in odometer.iter().enumerate() {
                choice[k] = per_atom[k][i];
            }
            if let Some(h) = self.h(&choice) {
                for tuple in tuples(&domain, free.len()) {
                    let mut h2 = h.clone();
                    let ok = free.iter().zip(&tuple).all(|(v, c)| {
                        let s = h2.get_mut(*v).unwrap();
                        let keep = s.contains(c) && !db.constant(*c).is_null();
                        *s = [*c].into();
                        keep
                    });
                    if ok && self.checks_hold(&h2) {
                        out.insert(tuple);
                    }
                }
            }
            let mut k = 0;
            loop {
                if k == odometer.len() {
                    return out;
                }
                odometer[k] += 1;
                if odometer[k] < per_atom[k].len() {
                    break;
                }
                odometer[k] = 0;
                k += 1;
            }
        }
    }
}

pub fn tuples(domain: &[ConstId], n: usize) -> Vec<Vec<ConstId>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |&c| {
                    let mut t = t.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}

/// A random body over the fixture schema together with its answer
/// variables.
pub fn random_query(rng: &mut StdRng, with_neq: bool) -> (Vec<Atom>, Vec<String>) {
    let objs = ["x", "y", "z"];
    let vals = ["v", "w"];
    let mut body = Vec::new();
    let mut obj_used = BTreeSet::new();
    let mut val_used = BTreeSet::new();
    for i in 0..rng.gen_range(1..=3) {
        let obj = |rng: &mut StdRng, used: &mut BTreeSet<&'static str>| {
            if rng.gen_bool(0.1) {
                Term::Const("o1".into())
            } else {
                let v = *objs.choose(rng).unwrap();
                used.insert(v);
                Term::var(v)
            }
        };
        let (relation, args) = match rng.gen_range(0..3) {
            0 => ("R", vec![obj(rng, &mut obj_used), obj(rng, &mut obj_used)]),
            1 => {
                let o = obj(rng, &mut obj_used);
                let v = if rng.gen_bool(0.1) {
                    Term::Const("x".into())
                } else {
                    let v = *vals.choose(rng).unwrap();
                    val_used.insert(v);
                    Term::var(v)
                };
                ("P", vec![o, v])
            }
            _ => ("U", vec![obj(rng, &mut obj_used)]),
        };
        body.push(Atom::Rel(RelAtom {
            relation: relation.into(),
            tid: format!("t{i}"),
            args,
        }));
    }
    let vals: Vec<&str> = val_used.into_iter().collect();
    if vals.len() == 2 && rng.gen_bool(0.5) {
        body.push(Atom::Sim {
            left: Term::var(vals[0]),
            right: Term::var(vals[1]),
            threshold: rng.gen_range(0..=100),
        });
    }
    let objs: Vec<&str> = obj_used.into_iter().collect();
    if with_neq && rng.gen_bool(0.5) {
        if objs.len() >= 2 {
            body.push(Atom::Neq(Term::var(objs[0]), Term::var(objs[1])));
        } else if vals.len() == 2 {
            body.push(Atom::Neq(Term::var(vals[0]), Term::var(vals[1])));
        }
    }
    let mut free: Vec<String> = objs.iter().map(|s| s.to_string()).collect();
    free.shuffle(rng);
    free.truncate(rng.gen_range(0..=2));
    if rng.gen_bool(0.2) {
        free.push("t0".into());
    }
    (body, free)
}

pub fn random_merge(rng: &mut StdRng, db: &Database) -> Option<MergePair> {
    let no = db.objects().len() as u32;
    let nc = db.cells().len() as u32;
    if nc > 0 && (no < 2 || rng.gen_bool(0.4)) {
        Some(MergePair::cells(CellId(rng.gen_range(0..nc)), CellId(rng.gen_range(0..nc))))
    } else if no >= 2 {
        Some(MergePair::objects(ObjectId(rng.gen_range(0..no)), ObjectId(rng.gen_range(0..no))))
    } else {
        None
    }
}

pub fn random_db(rng: &mut StdRng) -> (Database, SimIndex) {
    let (db, _, store) = fixtures::random_instance(rng, &RandomParams::default());
    let sim = store.index(&db);
    (db, sim)
}

pub fn random_candidate(rng: &mut StdRng, db: &Database) -> Candidate {
    let mut c = Candidate::identity(db);
    for _ in 0..rng.gen_range(0..4) {
        if let Some(p) = random_merge(rng, db) {
            c = c.with_pair(p).unwrap();
        }
    }
    c
}

// ---------------------------------------------------------------- similarity

/// The recursive definition, exponential in the input length.
pub fn lev_rec(a: &[char], b: &[char]) -> usize {
    match (a.split_last(), b.split_last()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = lev_rec(ra, rb) + usize::from(x != y);
            sub.min(lev_rec(ra, b) + 1).min(lev_rec(a, rb) + 1)
        }
    }
}

pub fn jw_direct(s1: &str, s2: &str) -> f64 {
    let a: Vec<char> = s1.chars().collect();
    let b: Vec<char> = s2.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let range = ((a.len().max(b.len()) / 2) as i64 - 1).max(0);
    let mut flags_b = vec![false; b.len()];
    let mut idx_a = Vec::new();
    for i in 0..a.len() {
        let lo = (i as i64 - range).max(0);
        let hi = (i as i64 + range).min(b.len() as i64 - 1);
        let mut j = lo;
        while j <= hi {
            let ju = j as usize;
            if !flags_b[ju] && a[i] == b[ju] {
                flags_b[ju] = true;
                idx_a.push(i);
                break;
            }
            j += 1;
        }
    }
    let m = idx_a.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let idx_b: Vec<usize> = (0..b.len()).filter(|&j| flags_b[j]).collect();
    let mut half = 0.0;
    for k in 0..idx_a.len() {
        if a[idx_a[k]] != b[idx_b[k]] {
            half += 1.0;
        }
    }
    let t = half / 2.0;
    let jaro = (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0;
    let mut l = 0;
    while l < 4 && l < a.len() && l < b.len() && a[l] == b[l] {
        l += 1;
    }
    jaro + l as f64 * 0.1 * (1.0 - jaro)
}

pub fn tfidf_dense(a: &str, b: &str, corpus: &[String]) -> f64 {
    let toks = |s: &str| -> Vec<String> { s.split_whitespace().map(|t| t.to_lowercase()).collect() };
    let docs: Vec<Vec<String>> = corpus.iter().map(|d| toks(d)).collect();
    let mut vocab: Vec<String> = docs.iter().flatten().cloned().collect();
    vocab.extend(toks(a));
    vocab.extend(toks(b));
    vocab.sort();
    vocab.dedup();
    let n = docs.len() as f64;
    let vec_of = |s: &str| -> Vec<f64> {
        let ts = toks(s);
        vocab
            .iter()
            .map(|v| {
                let tf = ts.iter().filter(|t| *t == v).count() as f64;
                let df = docs.iter().filter(|d| d.contains(v)).count().max(1) as f64;
                tf * (n / df).ln()
            })
            .collect()
    };
    let (x, y) = (vec_of(a), vec_of(b));
    let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    let ny = y.iter().map(|p| p * p).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx * ny)
    }
}

pub fn random_string(rng: &mut StdRng, max: usize, alphabet: &[char]) -> String {
    (0..rng.gen_range(0..=max)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

// ---------------------------------------------------------------- solutions

/// Every set partition of `0..n`, as restricted growth strings.
pub fn partitions(n: usize) -> Vec<EquivRel> {
    fn go(i: usize, n: usize, labels: &mut Vec<u32>, out: &mut Vec<EquivRel>) {
        if i == n {
            let pairs = (0..n).flat_map(|a| (0..n).map(move |b| (a, b)));
            let pairs: Vec<(u32, u32)> = pairs
                .filter(|&(a, b)| labels[a] == labels[b])
                .map(|(a, b)| (a as u32, b as u32))
                .collect();
            out.push(EquivRel::close(n, pairs).unwrap());
            return;
        }
        let top = labels.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..=top {
            labels.push(l);
            go(i + 1, n, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// Derivation search: some sequence of single active-pair additions, each
/// staying inside `target`, leads from the identity to `target`.
pub fn derivable(engine: &Engine, target: &Candidate) -> bool {
    let start = Candidate::identity(engine.database());
    let mut seen: HashSet<Candidate> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        if s == *target {
            return true;
        }
        let ext = engine.extend(&s).unwrap();
        for e in engine.active_in(&ext) {
            if target.contains(e.pair) && !s.contains(e.pair) {
                let n = s.with_pair(e.pair).unwrap();
                if seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
    }
    false
}

pub fn solution_by_definition(engine: &Engine, cand: &Candidate) -> bool {
    if !derivable(engine, cand) {
        return false;
    }
    let ext = engine.extend(cand).unwrap();
    engine.hard_active_in(&ext).iter().all(|e| cand.contains(e.pair)) && engine.violated_in(&ext).is_empty()
}

pub fn universe(engine: &Engine) -> Vec<Candidate> {
    let db = engine.database();
    let objs = partitions(db.objects().len());
    let cells = partitions(db.cells().len());
    objs.iter()
        .flat_map(|o| cells.iter().map(move |c| Candidate::new(o.clone(), c.clone())))
        .collect()
}

