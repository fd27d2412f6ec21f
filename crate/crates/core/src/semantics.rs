//! Active pairs, candidate and solution checks, criterion sets and the
//! comparison of candidates under the eight criterion names.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::dsl::{validate_rule_shapes, Head, Specification};
use crate::equiv::{Candidate, MergePair};
use crate::error::{Error, Result};
use crate::extend::ExtendedDatabase;
use crate::model::{Cell, Database};
use crate::query::Query;
use crate::similarity::{SimIndex, SimilarityStore};

/// A pair together with the index of the rule that makes it active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveEntry {
    pub pair: MergePair,
    pub rule: usize,
}

/// `eq`, `supp`, `abs` and `viol` of a candidate. Reflexive pairs are
/// left out of the last three.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriterionSets {
    pub eq: Candidate,
    pub supp: BTreeSet<ActiveEntry>,
    pub abs: BTreeSet<MergePair>,
    pub viol: BTreeSet<ActiveEntry>,
}

impl CriterionSets {
    /// `|E| + |V|` counting ordered pairs, reflexive ones included.
    pub fn eq_count(&self) -> usize {
        self.eq.pair_count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    MaxES,
    MaxEC,
    MaxSS,
    MaxSC,
    MinAS,
    MinAC,
    MinVS,
    MinVC,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::MaxES,
        Criterion::MaxEC,
        Criterion::MaxSS,
        Criterion::MaxSC,
        Criterion::MinAS,
        Criterion::MinAC,
        Criterion::MinVS,
        Criterion::MinVC,
    ];

    /// The seven criteria with pairwise distinct optima; `maxSS` coincides
    /// with `maxES`.
    pub const DISTINCT: [Criterion; 7] = [
        Criterion::MaxES,
        Criterion::MaxEC,
        Criterion::MaxSC,
        Criterion::MinAS,
        Criterion::MinAC,
        Criterion::MinVS,
        Criterion::MinVC,
    ];

    pub fn is_set_based(self) -> bool {
        matches!(
            self,
            Criterion::MaxES | Criterion::MaxSS | Criterion::MinAS | Criterion::MinVS
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::MaxES => "maxES",
            Criterion::MaxEC => "maxEC",
            Criterion::MaxSS => "maxSS",
            Criterion::MaxSC => "maxSC",
            Criterion::MinAS => "minAS",
            Criterion::MinAC => "minAC",
            Criterion::MinVS => "minVS",
            Criterion::MinVC => "minVC",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown criterion {s}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    ABetter,
    BBetter,
    Equal,
    Incomparable,
}

fn by_inclusion<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>, bigger_wins: bool) -> Comparison {
    let order = if a == b {
        return Comparison::Equal;
    } else if a.is_subset(b) {
        std::cmp::Ordering::Less
    } else if b.is_subset(a) {
        std::cmp::Ordering::Greater
    } else {
        return Comparison::Incomparable;
    };
    by_order(order, bigger_wins)
}

fn by_order(order: std::cmp::Ordering, bigger_wins: bool) -> Comparison {
    use std::cmp::Ordering::*;
    match (order, bigger_wins) {
        (Equal, _) => Comparison::Equal,
        (Greater, true) | (Less, false) => Comparison::ABetter,
        _ => Comparison::BBetter,
    }
}

/// Compares two candidates of the same instance under `c`.
pub fn compare(a: &CriterionSets, b: &CriterionSets, c: Criterion) -> Comparison {
    match c {
        Criterion::MaxES => {
            let ab = a.eq.is_subset_of(&b.eq);
            let ba = b.eq.is_subset_of(&a.eq);
            match (ab, ba) {
                (true, true) => Comparison::Equal,
                (true, false) => Comparison::BBetter,
                (false, true) => Comparison::ABetter,
                (false, false) => Comparison::Incomparable,
            }
        }
        Criterion::MaxEC => by_order(a.eq_count().cmp(&b.eq_count()), true),
        Criterion::MaxSS => by_inclusion(&a.supp, &b.supp, true),
        Criterion::MaxSC => by_order(a.supp.len().cmp(&b.supp.len()), true),
        Criterion::MinAS => by_inclusion(&a.abs, &b.abs, false),
        Criterion::MinAC => by_order(a.abs.len().cmp(&b.abs.len()), false),
        Criterion::MinVS => by_inclusion(&a.viol, &b.viol, false),
        Criterion::MinVC => by_order(a.viol.len().cmp(&b.viol.len()), false),
    }
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Objects,
    Cells(usize, usize),
}

#[derive(Clone, Debug)]
struct CompiledRule {
    hard: bool,
    target: Target,
    query: Query,
}

#[derive(Clone, Debug)]
struct CompiledDenial {
    query: Query,
    inequality: bool,
}

/// Outcome of checking a candidate solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionCheck {
    pub candidate: bool,
    /// Hard-rule active pairs missing from the candidate.
    pub missing_hard: Vec<ActiveEntry>,
    /// Indices of violated denial constraints.
    pub violated: Vec<usize>,
}

impl SolutionCheck {
    pub fn is_solution(&self) -> bool {
        self.candidate && self.missing_hard.is_empty() && self.violated.is_empty()
    }
}

/// A database, a specification and similarity scores, with every rule body
/// and constraint compiled.
#[derive(Clone, Debug)]
pub struct Engine {
    db: Arc<Database>,
    spec: Arc<Specification>,
    sim: SimIndex,
    rules: Vec<CompiledRule>,
    denials: Vec<CompiledDenial>,
}

impl Engine {
    pub fn new(db: Arc<Database>, spec: Arc<Specification>, store: &SimilarityStore) -> Result<Self> {
        if let Some(d) = validate_rule_shapes(&spec).into_iter().next() {
            return Err(Error::Spec(d.to_string()));
        }
        for decl in spec.schema().relations() {
            let ok = db
                .schema()
                .get(decl.name())
                .map(|r| db.schema().relation(r) == decl)
                .unwrap_or(false);
            let same_types = db
                .schema()
                .get(decl.name())
                .map(|r| {
                    let other = db.schema().relation(r);
                    other.arity() == decl.arity()
                        && other
                            .attributes()
                            .iter()
                            .zip(decl.attributes())
                            .all(|(a, b)| a.ty == b.ty)
                })
                .unwrap_or(false);
            if !ok && !same_types {
                return Err(Error::Schema(format!(
                    "relation {} of the specification does not match the database schema",
                    decl.name()
                )));
            }
        }
        let mut rules = Vec::new();
        for rule in spec.rules() {
            let (x, y) = rule.head_vars();
            let target = match &rule.head {
                Head::Objects(..) => Target::Objects,
                Head::Cells { left, right } => Target::Cells(left.1, right.1),
            };
            rules.push(CompiledRule {
                hard: rule.is_hard(),
                target,
                query: Query::compile(&db, &rule.body, &[x, y])?,
            });
        }
        let mut denials = Vec::new();
        for d in spec.denials() {
            denials.push(CompiledDenial {
                query: Query::compile(&db, &d.body, &[])?,
                inequality: d.has_inequality(),
            });
        }
        let sim = store.index(&db);
        Ok(Engine {
            db,
            spec,
            sim,
            rules,
            denials,
        })
    }

    pub fn database(&self) -> &Arc<Database> {
        &self.db
    }

    pub fn spec(&self) -> &Arc<Specification> {
        &self.spec
    }

    pub fn sim_index(&self) -> &SimIndex {
        &self.sim
    }

    pub fn rule_label(&self, rule: usize) -> &str {
        &self.spec.rule(rule).label
    }

    pub fn denial_label(&self, denial: usize) -> &str {
        &self.spec.denials()[denial].label
    }

    pub fn extend<'a>(&'a self, cand: &Candidate) -> Result<ExtendedDatabase<'a>> {
        ExtendedDatabase::new(&self.db, cand)
    }

    fn rule_pairs(&self, ri: usize, ext: &ExtendedDatabase, out: &mut BTreeSet<ActiveEntry>) {
        let rule = &self.rules[ri];
        for tuple in rule.query.eval_anchored(ext, &self.sim) {
            let pair = match rule.target {
                Target::Objects => {
                    let (Some(a), Some(b)) = (self.db.object_id(tuple[0]), self.db.object_id(tuple[1])) else {
                        continue;
                    };
                    MergePair::objects(a, b)
                }
                Target::Cells(i, j) => {
                    let (Some(f), Some(g)) = (self.db.fact_by_tid(tuple[0]), self.db.fact_by_tid(tuple[1])) else {
                        continue;
                    };
                    let a = self.db.cell_id(Cell { fact: f, position: i });
                    let b = self.db.cell_id(Cell { fact: g, position: j });
                    let (Some(a), Some(b)) = (a, b) else { continue };
                    MergePair::cells(a, b)
                }
            };
            if !pair.is_reflexive() {
                out.insert(ActiveEntry { pair, rule: ri });
            }
        }
    }

    /// `actP` over an extended database, without reflexive pairs.
    pub fn active_in(&self, ext: &ExtendedDatabase) -> BTreeSet<ActiveEntry> {
        let mut out = BTreeSet::new();
        for ri in 0..self.rules.len() {
            self.rule_pairs(ri, ext, &mut out);
        }
        out
    }

    /// Active entries of hard rules only.
    pub fn hard_active_in(&self, ext: &ExtendedDatabase) -> BTreeSet<ActiveEntry> {
        let mut out = BTreeSet::new();
        for ri in 0..self.rules.len() {
            if self.rules[ri].hard {
                self.rule_pairs(ri, ext, &mut out);
            }
        }
        out
    }

    pub fn active_pairs(&self, cand: &Candidate) -> Result<BTreeSet<ActiveEntry>> {
        Ok(self.active_in(&self.extend(cand)?))
    }

    pub fn is_hard(&self, rule: usize) -> bool {
        self.rules[rule].hard
    }

    pub fn criterion_sets(&self, cand: &Candidate) -> Result<CriterionSets> {
        let act = self.active_pairs(cand)?;
        Ok(self.sets_from_active(cand, act))
    }

    pub(crate) fn sets_from_active(&self, cand: &Candidate, act: BTreeSet<ActiveEntry>) -> CriterionSets {
        let mut supp = BTreeSet::new();
        let mut viol = BTreeSet::new();
        let mut abs = BTreeSet::new();
        for e in act {
            if cand.contains(e.pair) {
                supp.insert(e);
            } else {
                abs.insert(e.pair);
                viol.insert(e);
            }
        }
        CriterionSets {
            eq: cand.clone(),
            supp,
            abs,
            viol,
        }
    }

    /// Candidate membership by saturation inside the target: repeatedly
    /// add every active pair the target contains.
    pub fn is_candidate(&self, target: &Candidate) -> Result<bool> {
        let mut state = Candidate::identity(&self.db);
        if state.objects.len() != target.objects.len() || state.cells.len() != target.cells.len() {
            return Err(Error::Domain("candidate universes do not match the database".into()));
        }
        loop {
            let ext = self.extend(&state)?;
            let add: Vec<MergePair> = self
                .active_in(&ext)
                .into_iter()
                .map(|e| e.pair)
                .filter(|&p| target.contains(p) && !state.contains(p))
                .collect();
            if add.is_empty() {
                return Ok(state == *target);
            }
            state = state.with_pairs(add)?;
        }
    }

    /// Indices of the denial constraints whose body holds in `ext`.
    pub fn violated_in(&self, ext: &ExtendedDatabase) -> Vec<usize> {
        self.denials
            .iter()
            .enumerate()
            .filter(|(_, d)| d.query.eval_boolean(ext, &self.sim))
            .map(|(i, _)| i)
            .collect()
    }

    /// True if an inequality-free constraint is violated; no extension of
    /// the candidate can then be a solution.
    pub fn blocked_in(&self, ext: &ExtendedDatabase) -> bool {
        self.denials
            .iter()
            .any(|d| !d.inequality && d.query.eval_boolean(ext, &self.sim))
    }

    pub fn check_solution(&self, cand: &Candidate) -> Result<SolutionCheck> {
        let candidate = self.is_candidate(cand)?;
        let ext = self.extend(cand)?;
        let missing_hard = self
            .hard_active_in(&ext)
            .into_iter()
            .filter(|e| !cand.contains(e.pair))
            .collect();
        Ok(SolutionCheck {
            candidate,
            missing_hard,
            violated: self.violated_in(&ext),
        })
    }

    pub fn is_solution(&self, cand: &Candidate) -> Result<bool> {
        Ok(self.check_solution(cand)?.is_solution())
    }

    /// One line per failed condition of `check`.
    pub fn explain(&self, check: &SolutionCheck) -> Vec<String> {
        let mut out = Vec::new();
        if !check.candidate {
            out.push("not derivable from the identity by rule applications".to_string());
        }
        for e in &check.missing_hard {
            out.push(format!(
                "hard rule {} requires {}",
                self.rule_label(e.rule),
                e.pair.render(&self.db)
            ));
        }
        for &d in &check.violated {
            out.push(format!("denial constraint {} is violated", self.denial_label(d)));
        }
        out
    }
}
