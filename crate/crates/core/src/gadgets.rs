//! Reduction instances from 3-CNF satisfiability and Horn entailment, with
//! exhaustive oracles for both source problems.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::dsl::{parse_spec, Specification};
use crate::equiv::{Candidate, MergePair};
use crate::error::{Error, Result};
use crate::model::{Database, DatabaseBuilder};

/// Largest variable count accepted by the oracles.
pub const ORACLE_MAX_VARS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    fn from_dimacs(n: i64) -> Self {
        Literal {
            var: n.unsigned_abs() as usize,
            positive: n > 0,
        }
    }

    fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf3 {
    vars: usize,
    clauses: Vec<[Literal; 3]>,
}

impl Cnf3 {
    pub fn new(vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::Validation("formula has no clauses".into()));
        }
        for c in &clauses {
            for l in c {
                if l.var == 0 || l.var > vars {
                    return Err(Error::Validation(format!(
                        "variable {} outside 1..={vars}",
                        l.var
                    )));
                }
            }
        }
        Ok(Cnf3 { vars, clauses })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    /// Reads DIMACS CNF. Every clause must have exactly three literals.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut declared: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<Literal> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let bad = || Error::Validation(format!("line {}: malformed problem line", ln + 1));
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(bad());
                }
                let n = parts[1].parse().map_err(|_| bad())?;
                let m = parts[2].parse().map_err(|_| bad())?;
                declared = Some((n, m));
                continue;
            }
            for tok in line.split_whitespace() {
                let n: i64 = tok
                    .parse()
                    .map_err(|_| Error::Validation(format!("line {}: bad literal {tok:?}", ln + 1)))?;
                if n == 0 {
                    let lits: [Literal; 3] = current.as_slice().try_into().map_err(|_| {
                        Error::Validation(format!(
                            "line {}: clause has {} literals, expected 3",
                            ln + 1,
                            current.len()
                        ))
                    })?;
                    clauses.push(lits);
                    current.clear();
                } else {
                    current.push(Literal::from_dimacs(n));
                }
            }
        }
        if !current.is_empty() {
            return Err(Error::Validation("last clause is not terminated by 0".into()));
        }
        let max_var = clauses.iter().flatten().map(|l| l.var).max().unwrap_or(0);
        let vars = match declared {
            Some((n, m)) => {
                if m != clauses.len() {
                    return Err(Error::Validation(format!(
                        "header declares {m} clauses, found {}",
                        clauses.len()
                    )));
                }
                n
            }
            None => max_var,
        };
        Cnf3::new(vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&format!("{} ", l.to_dimacs()));
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| assignment[l.var - 1] == l.positive))
    }
}

/// A Horn formula of units `x_h` and clauses `¬x_j ∨ ¬x_k ∨ x_h`, with a
/// query variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HornInput {
    vars: usize,
    items: Vec<HornItem>,
    query: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HornItem {
    Unit(usize),
    /// `(j, k, h)` for `¬x_j ∨ ¬x_k ∨ x_h`.
    Clause(usize, usize, usize),
}

impl HornInput {
    pub fn new(items: Vec<HornItem>, query: usize) -> Result<Self> {
        let mut vars = query;
        for it in &items {
            match *it {
                HornItem::Unit(h) => vars = vars.max(h),
                HornItem::Clause(j, k, h) => vars = vars.max(j).max(k).max(h),
            }
        }
        let zero = query == 0
            || items.iter().any(|it| match *it {
                HornItem::Unit(h) => h == 0,
                HornItem::Clause(j, k, h) => j == 0 || k == 0 || h == 0,
            });
        if zero {
            return Err(Error::Validation("variables are numbered from 1".into()));
        }
        Ok(HornInput { vars, items, query })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn items(&self) -> &[HornItem] {
        &self.items
    }

    pub fn query(&self) -> usize {
        self.query
    }

    /// Reads `unit x1`, `clause -x1 -x2 x3` and `query x2` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        let mut query = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Validation(format!("line {}: {m}", ln + 1));
            let var = |tok: &str| -> Result<(usize, bool)> {
                let (neg, rest) = match tok.strip_prefix('-') {
                    Some(r) => (true, r),
                    None => (false, tok),
                };
                let n = rest
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| err(&format!("bad variable {tok:?}")))?;
                Ok((n, neg))
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "unit" | "query" if toks.len() == 2 => {
                    let (n, neg) = var(toks[1])?;
                    if neg {
                        return Err(err("negated variable"));
                    }
                    if toks[0] == "unit" {
                        items.push(HornItem::Unit(n));
                    } else if query.replace(n).is_some() {
                        return Err(err("second query line"));
                    }
                }
                "clause" if toks.len() == 4 => {
                    let lits = toks[1..].iter().map(|t| var(t)).collect::<Result<Vec<_>>>()?;
                    let negs: Vec<usize> = lits.iter().filter(|l| l.1).map(|l| l.0).collect();
                    let pos: Vec<usize> = lits.iter().filter(|l| !l.1).map(|l| l.0).collect();
                    if negs.len() != 2 || pos.len() != 1 {
                        return Err(err("a clause needs two negative literals and one positive"));
                    }
                    items.push(HornItem::Clause(negs[0], negs[1], pos[0]));
                }
                _ => return Err(err(&format!("cannot read {line:?}"))),
            }
        }
        if items.is_empty() {
            return Err(Error::Validation("formula is empty".into()));
        }
        let query = query.ok_or_else(|| Error::Validation("missing query line".into()))?;
        HornInput::new(items, query)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for it in &self.items {
            match *it {
                HornItem::Unit(h) => out.push_str(&format!("unit x{h}\n")),
                HornItem::Clause(j, k, h) => out.push_str(&format!("clause -x{j} -x{k} x{h}\n")),
            }
        }
        out.push_str(&format!("query x{}\n", self.query));
        out
    }
}

/// Truth-table satisfiability.
pub fn sat_oracle(phi: &Cnf3) -> Result<bool> {
    if phi.vars > ORACLE_MAX_VARS {
        return Err(Error::Validation(format!(
            "oracle limited to {ORACLE_MAX_VARS} variables"
        )));
    }
    let mut assignment = vec![false; phi.vars];
    for bits in 0u32..(1 << phi.vars) {
        for (i, a) in assignment.iter_mut().enumerate() {
            *a = bits >> i & 1 == 1;
        }
        if phi.satisfied_by(&assignment) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Least-model entailment of the query variable.
pub fn horn_entails(input: &HornInput) -> Result<bool> {
    if input.vars > ORACLE_MAX_VARS {
        return Err(Error::Validation(format!(
            "oracle limited to {ORACLE_MAX_VARS} variables"
        )));
    }
    let mut model = vec![false; input.vars + 1];
    loop {
        let mut changed = false;
        for it in &input.items {
            let (ready, h) = match *it {
                HornItem::Unit(h) => (true, h),
                HornItem::Clause(j, k, h) => (model[j] && model[k], h),
            };
            if ready && !model[h] {
                model[h] = true;
                changed = true;
            }
        }
        if !changed {
            return Ok(model[input.query]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    Sat,
    SatMinA,
    SatMaxE,
    Horn,
}

impl FromStr for GadgetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3sat" => Ok(GadgetKind::Sat),
            "3sat-minA" => Ok(GadgetKind::SatMinA),
            "3sat-maxE" => Ok(GadgetKind::SatMaxE),
            "horn" => Ok(GadgetKind::Horn),
            _ => Err(Error::Validation(format!("unknown gadget kind {s}"))),
        }
    }
}

impl fmt::Display for GadgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GadgetKind::Sat => "3sat",
            GadgetKind::SatMinA => "3sat-minA",
            GadgetKind::SatMaxE => "3sat-maxE",
            GadgetKind::Horn => "horn",
        })
    }
}

/// A generated instance and its distinguished candidate.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub db: Database,
    pub spec: Specification,
    pub baseline: Candidate,
}

const SHAPES: [&str; 8] = ["fff", "fft", "ftf", "ftt", "tff", "tft", "ttf", "ttt"];

fn shape(c: &[Literal; 3]) -> String {
    c.iter().map(|l| if l.positive { 't' } else { 'f' }).collect()
}

fn var_name(i: usize) -> String {
    format!("x{i}")
}

fn primed(i: usize) -> String {
    format!("x{i}'")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SatVariant {
    Plain,
    MinA,
    MaxE,
}

fn sat_spec(variant: SatVariant) -> String {
    let mut t = String::from("schema V(a: obj).\nschema F(a: obj).\nschema T(a: obj).\nschema B(a: obj).\n");
    for s in SHAPES {
        t.push_str(&format!("schema R{s}(a: obj, b: obj, c: obj).\n"));
    }
    if variant != SatVariant::Plain {
        t.push_str("schema H(a: obj, b: obj).\n");
    }
    if variant == SatVariant::MaxE {
        t.push_str("schema Vp(a: obj).\nschema P(a: obj, b: obj).\n");
    }
    t.push_str("soft obj sigma: V(x), B(y) => EqO(x, y).\n");
    if variant != SatVariant::Plain {
        t.push_str("soft obj sigma1: H(x, y) => EqO(x, y).\n");
    }
    if variant == SatVariant::MaxE {
        t.push_str("soft obj sigma2: Vp(x), B(y) => EqO(x, y).\n");
    }
    t.push_str("dc d0: F(y), T(y).\n");
    for (i, s) in SHAPES.iter().enumerate() {
        let checks: Vec<String> = s
            .chars()
            .enumerate()
            .map(|(j, c)| format!("{}(y{})", if c == 'f' { 'T' } else { 'F' }, j + 1))
            .collect();
        let guard = if variant == SatVariant::Plain { "" } else { ", H(z, z)" };
        t.push_str(&format!("dc d{}: R{s}(y1, y2, y3), {}{guard}.\n", i + 1, checks.join(", ")));
    }
    match variant {
        SatVariant::Plain => t.push_str("dc d9: V(v), B(v), V(x), T(y), F(z), x != y, x != z.\n"),
        SatVariant::MinA => {}
        SatVariant::MaxE => t.push_str("dc d9: P(y, y).\n"),
    }
    t
}

fn sat_gadget(phi: &Cnf3, variant: SatVariant) -> Result<Gadget> {
    let spec = parse_spec(&sat_spec(variant))?;
    let mut b = DatabaseBuilder::new(Arc::new(spec.schema().clone()));
    for i in 1..=phi.vars {
        b.add_auto("V", &[var_name(i)])?;
    }
    b.add_auto("T", &["1"])?;
    b.add_auto("F", &["0"])?;
    b.add_auto("B", &["0"])?;
    b.add_auto("B", &["1"])?;
    for c in &phi.clauses {
        let args: Vec<String> = c.iter().map(|l| var_name(l.var)).collect();
        b.add_auto(&format!("R{}", shape(c)), &args)?;
    }
    if variant != SatVariant::Plain {
        b.add_auto("H", &["c1", "c2"])?;
    }
    if variant == SatVariant::MaxE {
        for i in 1..=phi.vars {
            b.add_auto("Vp", &[primed(i)])?;
        }
        for i in 1..=phi.vars {
            b.add_auto("P", &[var_name(i), primed(i)])?;
        }
    }
    let db = b.build();
    let obj = |t: &str| db.object_by_text(t).expect("gadget object");
    let mut pairs = Vec::new();
    if variant != SatVariant::Plain {
        for i in 1..=phi.vars {
            pairs.push(MergePair::objects(obj(&var_name(i)), obj("0")));
            if variant == SatVariant::MaxE {
                pairs.push(MergePair::objects(obj(&primed(i)), obj("1")));
            }
        }
    }
    let baseline = Candidate::from_pairs(&db, pairs)?;
    Ok(Gadget { db, spec, baseline })
}

/// The coNP-hardness instance: the identity is optimal under every
/// criterion iff `phi` is unsatisfiable.
pub fn gen_3sat(phi: &Cnf3) -> Result<Gadget> {
    sat_gadget(phi, SatVariant::Plain)
}

/// Inequality-free instance for `minAC`/`minVC`; the baseline merges every
/// variable with `0`.
pub fn gen_3sat_restricted_min_a(phi: &Cnf3) -> Result<Gadget> {
    sat_gadget(phi, SatVariant::MinA)
}

/// Inequality-free instance for `maxEC`/`maxSC`; the baseline merges every
/// variable with `0` and every copy with `1`.
pub fn gen_3sat_restricted_max_e(phi: &Cnf3) -> Result<Gadget> {
    sat_gadget(phi, SatVariant::MaxE)
}

pub const HORN_SPEC: &str = "\
schema R(l: obj, a: obj, b: obj, h: obj).
schema C(a: obj, b: obj).
schema W(a: obj, b: obj).
soft obj sigma: C(x, y) => EqO(x, y).
hard obj rho: R(zl, z1, z2, x), R(zl, z1, z2, y), C(z, z) => EqO(x, y).
dc d: W(y, y).
";

/// The PTIME-hardness instance: the identity is `minAS`-optimal iff the
/// formula entails the query variable.
pub fn gen_horn(input: &HornInput) -> Result<Gadget> {
    let spec = parse_spec(HORN_SPEC)?;
    let mut b = DatabaseBuilder::new(Arc::new(spec.schema().clone()));
    b.add_auto("C", &["c1", "c2"])?;
    b.add_auto("W", &[var_name(input.query), primed(input.query)])?;
    for (i, it) in input.items.iter().enumerate() {
        let l = format!("l{}", i + 1);
        match *it {
            HornItem::Unit(h) => {
                b.add_auto("R", &[l.clone(), "t".into(), "t".into(), var_name(h)])?;
                b.add_auto("R", &[l, "t".into(), "t".into(), primed(h)])?;
            }
            HornItem::Clause(j, k, h) => {
                b.add_auto("R", &[l.clone(), var_name(j), var_name(k), var_name(h)])?;
                b.add_auto("R", &[l, primed(j), primed(k), primed(h)])?;
            }
        }
    }
    let db = b.build();
    let baseline = Candidate::identity(&db);
    Ok(Gadget { db, spec, baseline })
}
