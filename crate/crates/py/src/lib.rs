#![allow(clippy::useless_conversion)]
//! Python bindings: `erx.Instance`, `erx.Solution` and helper functions.

use std::path::Path;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use erx_core::dsl::parse_schema;
use erx_core::gadgets::{self, Cnf3, GadgetKind, HornInput};
use erx_core::similarity::{build_sim_store, SimConfig};
use erx_core::solver::{enumerate_solutions, recognize_optimal_bruteforce, recognize_optimal_restricted};
use erx_core::{
    fixtures, io, metrics, parse_spec, parse_spec_with_schema, similarity, Candidate, Criterion, Database,
    DatabaseBuilder, Engine, Error, SearchConfig, SimilarityStore, Specification,
};

create_exception!(erx, ErxError, PyException);
create_exception!(erx, InconclusiveError, ErxError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Inconclusive(_) => InconclusiveError::new_err(e.to_string()),
        _ => ErxError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for erx_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn criterion(name: &str) -> PyResult<Criterion> {
    name.parse().py()
}

/// A candidate solution bound to the database it ranges over.
#[pyclass(module = "erx", frozen)]
#[derive(Clone)]
pub struct Solution {
    db: Arc<Database>,
    cand: Candidate,
}

#[pymethods]
impl Solution {
    /// Generators in the solution file format.
    fn to_text(&self) -> String {
        io::render_solution(&self.db, &self.cand)
    }

    fn generators(&self) -> Vec<String> {
        self.cand
            .canonical_generators(&self.db)
            .iter()
            .map(|p| p.render(&self.db))
            .collect()
    }

    /// Number of ordered merged pairs, reflexive ones included.
    #[getter]
    fn pair_count(&self) -> usize {
        self.cand.pair_count()
    }

    fn is_identity(&self) -> bool {
        self.cand.is_identity()
    }

    /// Whether two objects are merged.
    fn merged(&self, a: &str, b: &str) -> PyResult<bool> {
        let find = |t: &str| {
            self.db
                .object_by_text(t)
                .ok_or_else(|| ErxError::new_err(format!("unknown object {t}")))
        };
        Ok(self.cand.objects.related(find(a)?.0, find(b)?.0))
    }

    fn __eq__(&self, other: &Solution) -> bool {
        Arc::ptr_eq(&self.db, &other.db) && self.cand == other.cand
    }

    fn __repr__(&self) -> String {
        format!("Solution([{}])", self.generators().join(", "))
    }
}

/// A database with a specification and similarity scores.
#[pyclass(module = "erx", frozen)]
pub struct Instance {
    engine: Engine,
}

impl Instance {
    fn build(db: Database, spec: Specification, overrides: Option<&str>) -> PyResult<Self> {
        let mut store = build_sim_store(&db, &spec, &SimConfig::default());
        if let Some(text) = overrides {
            store.overlay(&SimilarityStore::parse_tsv(text).py()?);
        }
        Ok(Instance {
            engine: Engine::new(Arc::new(db), Arc::new(spec), &store).py()?,
        })
    }

    fn wrap(&self, cand: Candidate) -> Solution {
        Solution {
            db: self.engine.database().clone(),
            cand,
        }
    }

    fn config(threads: usize, pair_budget: usize) -> SearchConfig {
        SearchConfig {
            threads: threads.max(1),
            pair_budget,
            ..SearchConfig::default()
        }
    }
}

#[pymethods]
impl Instance {
    /// `spec` is the text of a specification. Facts come either from
    /// `facts`, a list of `(relation, tid, [args])`, or from `data_dir`.
    #[new]
    #[pyo3(signature = (spec, facts=None, data_dir=None, schema=None, sim=None))]
    fn new(
        spec: &str,
        facts: Option<Vec<(String, String, Vec<String>)>>,
        data_dir: Option<&str>,
        schema: Option<&str>,
        sim: Option<&str>,
    ) -> PyResult<Self> {
        let spec = match schema {
            Some(s) => parse_spec_with_schema(spec, &parse_schema(s).py()?).py()?,
            None => parse_spec(spec).py()?,
        };
        let db = match (facts, data_dir) {
            (Some(_), Some(_)) => return Err(ErxError::new_err("pass facts or data_dir, not both")),
            (Some(facts), None) => {
                let mut b = DatabaseBuilder::new(Arc::new(spec.schema().clone()));
                for (rel, tid, args) in facts {
                    b.add_fact(&rel, &tid, &args).py()?;
                }
                b.build()
            }
            (None, Some(dir)) => io::ingest(Path::new(dir), spec.schema()).py()?,
            (None, None) => Database::empty(Arc::new(spec.schema().clone())),
        };
        Instance::build(db, spec, sim)
    }

    /// The author example with two authors to merge.
    #[staticmethod]
    fn running_example() -> PyResult<Self> {
        let (db, spec, store) = fixtures::authors();
        Instance::build(db, spec, Some(&store.to_tsv()))
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let db = self.engine.database();
        let spec = self.engine.spec();
        let d = PyDict::new_bound(py);
        d.set_item("facts", db.facts().len())?;
        d.set_item("objects", db.objects().len())?;
        d.set_item("cells", db.cells().len())?;
        d.set_item("rules", spec.rule_count())?;
        d.set_item("denials", spec.denials().len())?;
        Ok(d)
    }

    fn identity(&self) -> Solution {
        self.wrap(Candidate::identity(self.engine.database()))
    }

    /// Reads a solution in the solution file format.
    fn parse_solution(&self, text: &str) -> PyResult<Solution> {
        Ok(self.wrap(io::parse_solution(self.engine.database(), text).py()?))
    }

    /// Every solution, in canonical order.
    #[pyo3(signature = (threads=1, pair_budget=1_000_000))]
    fn solutions(&self, py: Python<'_>, threads: usize, pair_budget: usize) -> PyResult<Vec<Solution>> {
        let space = py
            .allow_threads(|| enumerate_solutions(&self.engine, &Instance::config(threads, pair_budget)))
            .py()?;
        if space.partial {
            return Err(py_err(Error::Inconclusive(space.explored)));
        }
        Ok(space.solutions.into_iter().map(|c| self.wrap(c)).collect())
    }

    /// Up to `num` optimal solutions under `criterion`.
    #[pyo3(signature = (criterion="maxES", num=1, threads=1, pair_budget=1_000_000))]
    fn solve(
        &self,
        py: Python<'_>,
        criterion: &str,
        num: usize,
        threads: usize,
        pair_budget: usize,
    ) -> PyResult<Vec<Solution>> {
        let c = self::criterion(criterion)?;
        let cfg = SearchConfig {
            max_solutions: num.max(1),
            ..Instance::config(threads, pair_budget)
        };
        let best = py
            .allow_threads(|| erx_core::solver::optimal_solutions(&self.engine, c, &cfg))
            .py()?;
        Ok(best.into_iter().map(|c| self.wrap(c)).collect())
    }

    /// `(is_solution, reasons)`; reasons name failing rules and constraints.
    fn check(&self, solution: &Solution) -> PyResult<(bool, Vec<String>)> {
        let c = self.engine.check_solution(&solution.cand).py()?;
        Ok((c.is_solution(), self.engine.explain(&c)))
    }

    /// Sizes of the criterion sets: `eq`, `supp`, `abs`, `viol`.
    fn criterion_sets<'py>(&self, py: Python<'py>, solution: &Solution) -> PyResult<Bound<'py, PyDict>> {
        let s = self.engine.criterion_sets(&solution.cand).py()?;
        let d = PyDict::new_bound(py);
        d.set_item("eq", s.eq_count())?;
        d.set_item("supp", s.supp.len())?;
        d.set_item("abs", s.abs.len())?;
        d.set_item("viol", s.viol.len())?;
        Ok(d)
    }

    /// `(optimal, witness)`; the witness is a strictly better solution.
    #[pyo3(signature = (solution, criterion="maxES", engine="brute", threads=1, pair_budget=1_000_000))]
    fn recognize(
        &self,
        py: Python<'_>,
        solution: &Solution,
        criterion: &str,
        engine: &str,
        threads: usize,
        pair_budget: usize,
    ) -> PyResult<(bool, Option<Solution>)> {
        let c = self::criterion(criterion)?;
        let cfg = Instance::config(threads, pair_budget);
        let r = py
            .allow_threads(|| match engine {
                "brute" => recognize_optimal_bruteforce(&self.engine, &solution.cand, c, &cfg),
                "restricted" => recognize_optimal_restricted(&self.engine, &solution.cand, c),
                other => Err(Error::Validation(format!("unknown engine {other}"))),
            })
            .py()?;
        Ok((r.optimal, r.witness.map(|w| self.wrap(w))))
    }
}

/// Builds a reduction instance and its distinguished candidate from DIMACS
/// (`3sat`, `3sat-minA`, `3sat-maxE`) or Horn text (`horn`).
#[pyfunction]
fn gadget(kind: &str, text: &str) -> PyResult<(Instance, Solution)> {
    let kind: GadgetKind = kind.parse().py()?;
    let g = match kind {
        GadgetKind::Horn => gadgets::gen_horn(&HornInput::parse(text).py()?),
        GadgetKind::Sat => gadgets::gen_3sat(&Cnf3::parse_dimacs(text).py()?),
        GadgetKind::SatMinA => gadgets::gen_3sat_restricted_min_a(&Cnf3::parse_dimacs(text).py()?),
        GadgetKind::SatMaxE => gadgets::gen_3sat_restricted_max_e(&Cnf3::parse_dimacs(text).py()?),
    }
    .py()?;
    let inst = Instance::build(g.db, g.spec, None)?;
    let base = inst.wrap(g.baseline);
    Ok((inst, base))
}

#[pyfunction]
fn sat_oracle(dimacs: &str) -> PyResult<bool> {
    gadgets::sat_oracle(&Cnf3::parse_dimacs(dimacs).py()?).py()
}

#[pyfunction]
fn horn_entails(text: &str) -> PyResult<bool> {
    gadgets::horn_entails(&HornInput::parse(text).py()?).py()
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    similarity::levenshtein(a, b)
}

#[pyfunction]
fn jaro_winkler(a: &str, b: &str) -> f64 {
    similarity::jaro_winkler(a, b)
}

#[pyfunction]
fn tfidf_cosine(a: &str, b: &str, corpus: Vec<String>) -> f64 {
    similarity::tfidf_cosine(a, b, &corpus)
}

#[pyfunction]
fn f1(precision: f64, recall: f64) -> f64 {
    metrics::f1(precision, recall)
}

/// Precision, recall and F1 of predicted object merges against true ones.
#[pyfunction]
#[pyo3(signature = (predicted, truth, cells=false))]
fn score(predicted: &Solution, truth: &Solution, cells: bool) -> PyResult<(f64, f64, f64)> {
    if !Arc::ptr_eq(&predicted.db, &truth.db) {
        return Err(ErxError::new_err("solutions belong to different instances"));
    }
    let s = metrics::score_merges(&predicted.cand.merge_pairs(), &truth.cand.merge_pairs(), cells);
    Ok((s.precision, s.recall, s.f1))
}

#[pymodule]
fn erx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Solution>()?;
    m.add("ErxError", m.py().get_type_bound::<ErxError>())?;
    m.add("InconclusiveError", m.py().get_type_bound::<InconclusiveError>())?;
    m.add_function(wrap_pyfunction!(gadget, m)?)?;
    m.add_function(wrap_pyfunction!(sat_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(horn_entails, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(jaro_winkler, m)?)?;
    m.add_function(wrap_pyfunction!(tfidf_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add("CRITERIA", Criterion::ALL.map(|c| c.name()).to_vec())?;
    Ok(())
}
