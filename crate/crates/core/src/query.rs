//! Conjunctive queries with similarity and inequality atoms, evaluated over
//! extended databases.
//!
//! A witness picks one extended fact per relational atom. The set `h(z)` of
//! a variable is the intersection of the sets at its occurrences. A variable
//! with two or more relational occurrences never binds through `Null`, so
//! empty cells do not join with each other. Inequality atoms require
//! disjoint sets once `Null` is removed; similarity atoms need one non-null
//! pair scoring at least the threshold.


type Emit<'a> = dyn FnMut(Vec<ConstId>, &dyn Fn() -> Witness) -> bool + 'a;
use std::collections::{BTreeSet, HashMap};

use crate::dsl::{variable_sorts, Atom, Term, VarSort};
use crate::error::{Error, Result};
use crate::extend::ExtendedDatabase;
use crate::model::{AttrType, ConstId, Constant, Database, FactId, RelId};
use crate::similarity::SimIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum QTerm {
    Var(usize),
    Const(ConstId),
    /// A constant absent from the database, by index into `Query::foreign`.
    Foreign(usize),
}

#[derive(Clone, Debug)]
enum Check {
    Neq(QTerm, QTerm),
    Sim(QTerm, QTerm, u8),
}

impl Check {
    fn terms(&self) -> [QTerm; 2] {
        match *self {
            Check::Neq(a, b) | Check::Sim(a, b, _) => [a, b],
        }
    }
}

#[derive(Clone, Debug)]
struct PAtom {
    rel: RelId,
    /// Position 0 is the tid.
    terms: Vec<QTerm>,
}

/// A query compiled against one database.
#[derive(Clone, Debug)]
pub struct Query {
    names: Vec<String>,
    multi: Vec<bool>,
    atoms: Vec<PAtom>,
    checks: Vec<Check>,
    /// Checks runnable once atom `i` is bound (no free variables involved).
    check_at: Vec<Vec<usize>>,
    /// Checks over constants only.
    check_first: Vec<usize>,
    /// Checks that mention a free variable; run per answer tuple.
    deferred: Vec<usize>,
    free: Vec<usize>,
    impossible: bool,
}

/// The sets chosen for each variable and the fact matched by each
/// relational atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub facts: Vec<FactId>,
    pub h: Vec<(String, Vec<ConstId>)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Plain,
    Anchored,
}

impl Query {
    /// Compiles `body` with answer variables `free` (in head order).
    pub fn compile(db: &Database, body: &[Atom], free: &[&str]) -> Result<Query> {
        let schema = db.schema();
        let sorts = variable_sorts(schema, body);
        let mut slots: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut occurrences: Vec<usize> = Vec::new();
        let mut slot = |v: &str, names: &mut Vec<String>, occ: &mut Vec<usize>| -> usize {
            *slots.entry(v.to_string()).or_insert_with(|| {
                names.push(v.to_string());
                occ.push(0);
                names.len() - 1
            })
        };
        let mut foreign: Vec<Constant> = Vec::new();
        let mut foreign_id = |c: Constant| -> usize {
            match foreign.iter().position(|x| *x == c) {
                Some(i) => i,
                None => {
                    foreign.push(c);
                    foreign.len() - 1
                }
            }
        };
        let mut atoms = Vec::new();
        let mut impossible = false;
        let mut last_atom: HashMap<usize, usize> = HashMap::new();
        for atom in body {
            let Atom::Rel(r) = atom else { continue };
            let rel = schema
                .get(&r.relation)
                .ok_or_else(|| Error::Spec(format!("unknown relation {}", r.relation)))?;
            let decl = schema.relation(rel);
            if decl.arity() != r.args.len() {
                return Err(Error::Spec(format!(
                    "relation {} has arity {}, atom has {} arguments",
                    r.relation,
                    decl.arity(),
                    r.args.len()
                )));
            }
            let idx = atoms.len();
            let mut terms = Vec::with_capacity(r.args.len() + 1);
            let s = slot(&r.tid, &mut names, &mut occurrences);
            occurrences[s] += 1;
            last_atom.insert(s, idx);
            terms.push(QTerm::Var(s));
            for (i, t) in r.args.iter().enumerate() {
                match t {
                    Term::Var(v) => {
                        let s = slot(v, &mut names, &mut occurrences);
                        occurrences[s] += 1;
                        last_atom.insert(s, idx);
                        terms.push(QTerm::Var(s));
                    }
                    Term::Const(text) => {
                        let c = match decl.attributes()[i].ty {
                            AttrType::Obj => Constant::object(text.as_str()),
                            AttrType::Val => Constant::value(text.as_str()),
                        };
                        match db.lookup(&c) {
                            Some(id) => terms.push(QTerm::Const(id)),
                            None => {
                                impossible = true;
                                terms.push(QTerm::Foreign(foreign_id(c)));
                            }
                        }
                    }
                }
            }
            atoms.push(PAtom { rel, terms });
        }
        let mut free_slots = Vec::new();
        for v in free {
            match slots.get(*v) {
                Some(&s) => free_slots.push(s),
                None => {
                    return Err(Error::UnsafeQuery(format!(
                        "answer variable {v} does not occur in a relational atom"
                    )))
                }
            }
        }
        let mut checks = Vec::new();
        for atom in body {
            let (a, b) = match atom {
                Atom::Rel(_) => continue,
                Atom::Sim { left, right, .. } | Atom::Neq(left, right) => (left, right),
            };
            // sort of a constant operand follows the other operand
            let other_sort = |t: &Term| -> Option<VarSort> {
                t.as_var().and_then(|v| sorts.get(v)).map(|s| s[0])
            };
            let mut resolve = |t: &Term, other: &Term| -> Result<QTerm> {
                match t {
                    Term::Var(v) => slots.get(v).map(|&s| QTerm::Var(s)).ok_or_else(|| {
                        Error::UnsafeQuery(format!("variable {v} does not occur in a relational atom"))
                    }),
                    Term::Const(text) => {
                        let c = match (atom, other_sort(other)) {
                            (Atom::Sim { .. }, _) => Constant::value(text.as_str()),
                            (_, Some(VarSort::Obj)) => Constant::object(text.as_str()),
                            (_, Some(VarSort::Tid)) => Constant::tid(text.as_str()),
                            _ => Constant::value(text.as_str()),
                        };
                        Ok(match db.lookup(&c) {
                            Some(id) => QTerm::Const(id),
                            None => QTerm::Foreign(foreign_id(c)),
                        })
                    }
                }
            };
            let qa = resolve(a, b)?;
            let qb = resolve(b, a)?;
            checks.push(match atom {
                Atom::Sim { threshold, .. } => Check::Sim(qa, qb, *threshold),
                _ => Check::Neq(qa, qb),
            });
        }
        let mut check_at = vec![Vec::new(); atoms.len()];
        let mut check_first = Vec::new();
        let mut deferred = Vec::new();
        for (ci, c) in checks.iter().enumerate() {
            let vars: Vec<usize> = c
                .terms()
                .iter()
                .filter_map(|t| match t {
                    QTerm::Var(s) => Some(*s),
                    _ => None,
                })
                .collect();
            if vars.iter().any(|s| free_slots.contains(s)) {
                deferred.push(ci);
            } else if let Some(at) = vars.iter().map(|s| last_atom[s]).max() {
                check_at[at].push(ci);
            } else {
                check_first.push(ci);
            }
        }
        let multi = occurrences.iter().map(|&n| n >= 2).collect();
        Ok(Query {
            names,
            multi,
            atoms,
            checks,
            check_at,
            check_first,
            deferred,
            free: free_slots,
            impossible,
        })
    }

    pub fn arity(&self) -> usize {
        self.free.len()
    }

    pub fn has_inequality(&self) -> bool {
        self.checks.iter().any(|c| matches!(c, Check::Neq(..)))
    }

    /// Answers per the set semantics: every tuple drawn from the sets of
    /// the answer variables of some witness.
    pub fn eval(&self, ext: &ExtendedDatabase, sim: &SimIndex) -> BTreeSet<Vec<ConstId>> {
        let mut out = BTreeSet::new();
        self.run(ext, sim, Mode::Plain, &mut |t, _| {
            out.insert(t);
            true
        });
        out
    }

    /// Answers whose constants are the ones stored at the answer
    /// variables' occurrences in the matched facts. This is the answer set
    /// used for rule activation: a merged class does not make every member
    /// an answer, only the original occupants of the matched positions.
    pub fn eval_anchored(&self, ext: &ExtendedDatabase, sim: &SimIndex) -> BTreeSet<Vec<ConstId>> {
        let mut out = BTreeSet::new();
        self.run(ext, sim, Mode::Anchored, &mut |t, _| {
            out.insert(t);
            true
        });
        out
    }

    pub fn eval_boolean(&self, ext: &ExtendedDatabase, sim: &SimIndex) -> bool {
        self.find_witness(ext, sim).is_some()
    }

    pub fn find_witness(&self, ext: &ExtendedDatabase, sim: &SimIndex) -> Option<Witness> {
        let mut found = None;
        self.run(ext, sim, Mode::Plain, &mut |_, w| {
            found = Some(w());
            false
        });
        found
    }

    fn run(
        &self,
        ext: &ExtendedDatabase,
        sim: &SimIndex,
        mode: Mode,
        emit: &mut Emit<'_>,
    ) {
        if self.impossible {
            return;
        }
        let mut st = State {
            q: self,
            ext,
            sim,
            null: ext.database().null_id(),
            h: vec![Vec::new(); self.names.len()],
            orig: vec![Vec::new(); self.names.len()],
            facts: Vec::with_capacity(self.atoms.len()),
            mode,
        };
        if !self.check_first.iter().all(|&c| st.check(c, &[])) {
            return;
        }
        st.search(0, emit);
    }
}

struct State<'q, 'e, 'd> {
    q: &'q Query,
    ext: &'e ExtendedDatabase<'d>,
    sim: &'e SimIndex,
    null: Option<ConstId>,
    h: Vec<Vec<ConstId>>,
    orig: Vec<Vec<ConstId>>,
    facts: Vec<FactId>,
    mode: Mode,
}

#[derive(Clone, Copy)]
enum Operand<'a> {
    Set(&'a [ConstId]),
    One(ConstId),
    Foreign(usize),
}

fn intersect(a: &[ConstId], b: &[ConstId]) -> Vec<ConstId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl State<'_, '_, '_> {
    fn operand(&self, t: QTerm, subst: &[(usize, ConstId)]) -> Operand<'_> {
        match t {
            QTerm::Var(s) => match subst.iter().find(|(x, _)| *x == s) {
                Some(&(_, c)) => Operand::One(c),
                None => Operand::Set(&self.h[s]),
            },
            QTerm::Const(c) => Operand::One(c),
            QTerm::Foreign(i) => Operand::Foreign(i),
        }
    }

    fn check(&self, ci: usize, subst: &[(usize, ConstId)]) -> bool {
        let null = self.null;
        let (a, b) = match self.q.checks[ci] {
            Check::Neq(a, b) | Check::Sim(a, b, _) => (a, b),
        };
        let (oa, ob) = (self.operand(a, subst), self.operand(b, subst));
        let (buf_a, buf_b);
        let sa: Result<&[ConstId], usize> = match oa {
            Operand::Set(s) => Ok(s),
            Operand::One(c) => {
                buf_a = [c];
                Ok(&buf_a)
            }
            Operand::Foreign(i) => Err(i),
        };
        let sb: Result<&[ConstId], usize> = match ob {
            Operand::Set(s) => Ok(s),
            Operand::One(c) => {
                buf_b = [c];
                Ok(&buf_b)
            }
            Operand::Foreign(i) => Err(i),
        };
        match self.q.checks[ci] {
            Check::Neq(..) => match (sa, sb) {
                (Err(x), Err(y)) => x != y,
                (Err(_), _) | (_, Err(_)) => true,
                (Ok(x), Ok(y)) => intersect(x, y).iter().all(|&c| Some(c) == null),
            },
            Check::Sim(_, _, theta) => match (sa, sb) {
                (Err(x), Err(y)) => x == y || theta == 0,
                (Err(_), Ok(s)) | (Ok(s), Err(_)) => theta == 0 && s.iter().any(|&c| Some(c) != null),
                (Ok(x), Ok(y)) => x.iter().filter(|&&c| Some(c) != null).any(|&c| {
                    y.iter()
                        .filter(|&&d| Some(d) != null)
                        .any(|&d| self.sim.score(c, d) >= theta)
                }),
            },
        }
    }

    fn search(&mut self, i: usize, emit: &mut Emit<'_>) -> bool {
        if i == self.q.atoms.len() {
            return self.answers(emit);
        }
        let q = self.q;
        let db = self.ext.database();
        let atom = &q.atoms[i];
        for &fid in db.facts_of(atom.rel) {
            let fact = db.fact(fid);
            let mut trail: Vec<(usize, Vec<ConstId>, usize)> = Vec::new();
            let mut ok = true;
            for (pos, &t) in atom.terms.iter().enumerate() {
                let tid_set = [fact.tid];
                let set: &[ConstId] = if pos == 0 { &tid_set } else { self.ext.set(fid, pos) };
                match t {
                    QTerm::Const(c) => {
                        if set.binary_search(&c).is_err() {
                            ok = false;
                        }
                    }
                    QTerm::Foreign(_) => ok = false,
                    QTerm::Var(s) => {
                        let mut next = if self.h[s].is_empty() {
                            set.to_vec()
                        } else {
                            intersect(&self.h[s], set)
                        };
                        if q.multi[s] {
                            if let Some(n) = self.null {
                                next.retain(|&c| c != n);
                            }
                        }
                        let old = std::mem::replace(&mut self.h[s], next);
                        let orig_len = self.orig[s].len();
                        if self.mode == Mode::Anchored {
                            self.orig[s].push(fact.at(pos));
                        }
                        trail.push((s, old, orig_len));
                        if self.h[s].is_empty() {
                            ok = false;
                        }
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok {
                ok = q.check_at[i].iter().all(|&c| self.check(c, &[]));
            }
            let mut go_on = true;
            if ok {
                self.facts.push(fid);
                go_on = self.search(i + 1, emit);
                self.facts.pop();
            }
            for (s, old, orig_len) in trail.into_iter().rev() {
                self.h[s] = old;
                self.orig[s].truncate(orig_len);
            }
            if !go_on {
                return false;
            }
        }
        true
    }

    fn answers(&mut self, emit: &mut Emit<'_>) -> bool {
        let q = self.q;
        let mut distinct: Vec<usize> = q.free.clone();
        distinct.sort();
        distinct.dedup();
        let choices: Vec<Vec<ConstId>> = distinct
            .iter()
            .map(|&s| match self.mode {
                Mode::Plain => self.h[s].clone(),
                Mode::Anchored => {
                    let mut o = self.orig[s].clone();
                    o.sort();
                    o.dedup();
                    o.retain(|c| self.h[s].binary_search(c).is_ok());
                    o
                }
            })
            .collect();
        let witness = || Witness {
            facts: self.facts.clone(),
            h: q.names
                .iter()
                .zip(&self.h)
                .filter(|(n, _)| !n.starts_with('_'))
                .map(|(n, s)| (n.clone(), s.clone()))
                .collect(),
        };
        let mut idx = vec![0usize; distinct.len()];
        if choices.iter().any(|c| c.is_empty()) {
            return true;
        }
        loop {
            let subst: Vec<(usize, ConstId)> = distinct
                .iter()
                .zip(&idx)
                .zip(&choices)
                .map(|((&s, &k), c)| (s, c[k]))
                .collect();
            if q.deferred.iter().all(|&c| self.check(c, &subst)) {
                let tuple: Vec<ConstId> = q
                    .free
                    .iter()
                    .map(|s| subst.iter().find(|(x, _)| x == s).unwrap().1)
                    .collect();
                if !emit(tuple, &witness) {
                    return false;
                }
            }
            // odometer over the answer-variable choices
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return true;
                }
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Compiles and evaluates in one step.
pub fn eval(
    db: &Database,
    body: &[Atom],
    free: &[&str],
    ext: &ExtendedDatabase,
    sim: &SimIndex,
) -> Result<BTreeSet<Vec<ConstId>>> {
    Ok(Query::compile(db, body, free)?.eval(ext, sim))
}

pub fn eval_boolean(db: &Database, body: &[Atom], ext: &ExtendedDatabase, sim: &SimIndex) -> Result<bool> {
    Ok(Query::compile(db, body, &[])?.eval_boolean(ext, sim))
}
