//! Solution enumeration, optimal solutions per criterion, and optimality
//! recognition (exhaustive, and the fixpoint procedure for specifications
//! whose constraints are free of inequalities).

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;

use crate::equiv::{Candidate, MergePair};
use crate::error::{Error, Result};
use crate::semantics::{compare, ActiveEntry, Comparison, Criterion, CriterionSets, Engine};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Number of solutions kept after sorting.
    pub max_solutions: usize,
    /// Cap on explored candidates.
    pub pair_budget: usize,
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_solutions: usize::MAX,
            pair_budget: 1_000_000,
            threads: 1,
        }
    }
}

/// Solutions found by [`enumerate_solutions`] in canonical order.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub solutions: Vec<Candidate>,
    pub sets: Vec<CriterionSets>,
    /// The budget ran out before the search space was exhausted.
    pub partial: bool,
    pub explored: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecognitionResult {
    pub optimal: bool,
    pub witness: Option<Candidate>,
}

struct Expanded {
    state: Candidate,
    solution: Option<CriterionSets>,
    next: Vec<Candidate>,
}

fn expand(engine: &Engine, state: Candidate) -> Result<Expanded> {
    let ext = engine.extend(&state)?;
    if engine.blocked_in(&ext) {
        // an inequality-free constraint stays violated under further merges
        return Ok(Expanded {
            state,
            solution: None,
            next: Vec::new(),
        });
    }
    let act = engine.active_in(&ext);
    let mut pending: BTreeSet<MergePair> = BTreeSet::new();
    let mut hard_ok = true;
    for e in &act {
        if !state.contains(e.pair) {
            pending.insert(e.pair);
            if engine.is_hard(e.rule) {
                hard_ok = false;
            }
        }
    }
    let solution = if hard_ok && engine.violated_in(&ext).is_empty() {
        Some(engine.sets_from_active(&state, act))
    } else {
        None
    };
    let mut next = Vec::with_capacity(pending.len());
    for p in pending {
        next.push(state.with_pair(p)?);
    }
    Ok(Expanded {
        state,
        solution,
        next,
    })
}

/// All solutions reachable from the identity by rule applications, i.e.
/// every solution of the instance when `partial` is false.
pub fn enumerate_solutions(engine: &Engine, cfg: &SearchConfig) -> Result<Enumeration> {
    if cfg.pair_budget == 0 || cfg.max_solutions == 0 {
        return Err(Error::Validation("search budgets must be positive".into()));
    }
    let start = Candidate::identity(engine.database());
    let mut visited: HashSet<Candidate> = HashSet::new();
    visited.insert(start.clone());
    let mut frontier = vec![start];
    let mut found: Vec<(Candidate, CriterionSets)> = Vec::new();
    let mut explored = 0usize;
    let mut partial = false;
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::Validation(format!("cannot start worker threads: {e}")))?,
        )
    } else {
        None
    };
    while !frontier.is_empty() {
        let room = cfg.pair_budget - explored;
        if frontier.len() > room {
            frontier.truncate(room);
            partial = true;
        }
        explored += frontier.len();
        let level: Vec<Expanded> = match &pool {
            Some(pool) => pool.install(|| {
                frontier
                    .into_par_iter()
                    .map(|s| expand(engine, s))
                    .collect::<Result<_>>()
            })?,
            None => frontier
                .into_iter()
                .map(|s| expand(engine, s))
                .collect::<Result<_>>()?,
        };
        let mut next_frontier = Vec::new();
        for ex in level {
            for n in ex.next {
                if !visited.contains(&n) {
                    visited.insert(n.clone());
                    next_frontier.push(n);
                }
            }
            if let Some(sets) = ex.solution {
                found.push((ex.state, sets));
            }
        }
        if partial {
            break;
        }
        frontier = next_frontier;
    }
    let db = engine.database();
    let mut keyed: Vec<(Vec<String>, Candidate, CriterionSets)> = found
        .into_iter()
        .map(|(c, s)| (c.sort_key(db), c, s))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.truncate(cfg.max_solutions);
    let (solutions, sets) = keyed.into_iter().map(|(_, c, s)| (c, s)).unzip();
    Ok(Enumeration {
        solutions,
        sets,
        partial,
        explored,
    })
}

impl Enumeration {
    /// Indices of the `c`-optimal solutions, in canonical order.
    pub fn optimal(&self, c: Criterion) -> Vec<usize> {
        (0..self.sets.len())
            .filter(|&i| self.better_than(&self.sets[i], c).is_none())
            .collect()
    }

    /// The first solution, in canonical order, strictly better than `sets`.
    pub fn better_than(&self, sets: &CriterionSets, c: Criterion) -> Option<usize> {
        (0..self.sets.len()).find(|&j| compare(&self.sets[j], sets, c) == Comparison::ABetter)
    }

    /// A `c`-optimal solution strictly better than `sets`, found by
    /// following [`Enumeration::better_than`] until it stops improving.
    pub fn optimal_witness(&self, sets: &CriterionSets, c: Criterion) -> Option<usize> {
        let mut best = self.better_than(sets, c)?;
        while let Some(j) = self.better_than(&self.sets[best], c) {
            best = j;
        }
        Some(best)
    }

    /// Recognition against an already enumerated solution space.
    pub fn recognize(&self, engine: &Engine, cand: &Candidate, c: Criterion) -> Result<RecognitionResult> {
        if self.partial {
            return Err(Error::Inconclusive(self.explored));
        }
        if !engine.is_solution(cand)? {
            return Ok(RecognitionResult {
                optimal: false,
                witness: None,
            });
        }
        let sets = engine.criterion_sets(cand)?;
        Ok(match self.optimal_witness(&sets, c) {
            Some(j) => RecognitionResult {
                optimal: false,
                witness: Some(self.solutions[j].clone()),
            },
            None => RecognitionResult {
                optimal: true,
                witness: None,
            },
        })
    }
}

/// `c`-optimal solutions in canonical order, at most `cfg.max_solutions`.
pub fn optimal_solutions(engine: &Engine, c: Criterion, cfg: &SearchConfig) -> Result<Vec<Candidate>> {
    let all = SearchConfig {
        max_solutions: usize::MAX,
        ..*cfg
    };
    let space = enumerate_solutions(engine, &all)?;
    if space.partial {
        return Err(Error::Inconclusive(space.explored));
    }
    Ok(space
        .optimal(c)
        .into_iter()
        .take(cfg.max_solutions)
        .map(|i| space.solutions[i].clone())
        .collect())
}

pub fn recognize_optimal_bruteforce(
    engine: &Engine,
    cand: &Candidate,
    c: Criterion,
    cfg: &SearchConfig,
) -> Result<RecognitionResult> {
    if !engine.is_solution(cand)? {
        return Ok(RecognitionResult {
            optimal: false,
            witness: None,
        });
    }
    let all = SearchConfig {
        max_solutions: usize::MAX,
        ..*cfg
    };
    enumerate_solutions(engine, &all)?.recognize(engine, cand, c)
}

/// Polynomial recognition for `maxES`, `maxSS`, `minAS` and `minVS` when no
/// denial constraint uses an inequality.
///
/// For every absent active pair `p`, the candidate is extended by `p` and
/// saturated with the active pairs it is forced to take: hard-rule pairs
/// always, and for `minAS` (`minVS`) any pair (entry) that would otherwise
/// enlarge `abs` (`viol`). A saturated state that satisfies every
/// constraint is a strictly better solution.
pub fn recognize_optimal_restricted(engine: &Engine, cand: &Candidate, c: Criterion) -> Result<RecognitionResult> {
    if !engine.spec().is_restricted() {
        return Err(Error::UnsupportedSetting);
    }
    if !matches!(
        c,
        Criterion::MaxES | Criterion::MaxSS | Criterion::MinAS | Criterion::MinVS
    ) {
        return Err(Error::UnsupportedCriterion(c.to_string()));
    }
    if !engine.is_solution(cand)? {
        return Ok(RecognitionResult {
            optimal: false,
            witness: None,
        });
    }
    let sets = engine.criterion_sets(cand)?;
    let forced = |e: &ActiveEntry| -> bool {
        engine.is_hard(e.rule)
            || match c {
                Criterion::MinAS => !sets.abs.contains(&e.pair),
                Criterion::MinVS => !sets.viol.contains(e),
                _ => false,
            }
    };
    for &p in &sets.abs {
        let mut state = cand.with_pair(p)?;
        loop {
            let ext = engine.extend(&state)?;
            if engine.blocked_in(&ext) {
                break;
            }
            let add: Vec<MergePair> = engine
                .active_in(&ext)
                .into_iter()
                .filter(|e| !state.contains(e.pair) && forced(e))
                .map(|e| e.pair)
                .collect();
            if add.is_empty() {
                if engine.violated_in(&ext).is_empty() {
                    return Ok(RecognitionResult {
                        optimal: false,
                        witness: Some(state),
                    });
                }
                break;
            }
            state = state.with_pairs(add)?;
        }
    }
    Ok(RecognitionResult {
        optimal: true,
        witness: None,
    })
}
