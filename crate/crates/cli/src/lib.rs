//! The `erx` command line: solving, checking, optimality recognition,
//! gadget generation, similarity precomputation and evaluation.
//!
//! Exit status: 0 success, 1 no solution (or a rejected candidate), 2
//! invalid input, 3 search budget exhausted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use erx_core::dsl::{parse_schema, print_rules, print_schema};
use erx_core::gadgets::{
    gen_3sat, gen_3sat_restricted_max_e, gen_3sat_restricted_min_a, gen_horn, horn_entails, sat_oracle, Cnf3,
    GadgetKind, HornInput,
};
use erx_core::io;
use erx_core::metrics::score_merges;
use erx_core::similarity::{build_sim_store, SimConfig};
use erx_core::solver::{enumerate_solutions, recognize_optimal_bruteforce, recognize_optimal_restricted};
use erx_core::{
    parse_spec, parse_spec_with_schema, Candidate, Criterion, CriterionSets, Database, Engine, Error,
    SearchConfig, SimilarityStore, Specification,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_SOLUTION: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "erx", version, about = "Rule-based collective entity resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Rules and constraints, optionally preceded by schema statements.
    #[arg(long)]
    pub spec: PathBuf,
    /// Schema statements kept in a separate file.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Directory with one `<Relation>.tsv` per relation.
    #[arg(long)]
    pub data: PathBuf,
    /// Similarity scores (`a<TAB>b<TAB>score`) overriding computed ones.
    #[arg(long)]
    pub sim_overrides: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Maximum number of explored candidates.
    #[arg(long, default_value_t = 1_000_000)]
    pub pair_budget: usize,
}

impl SearchArgs {
    fn config(&self, max_solutions: usize) -> SearchConfig {
        SearchConfig {
            max_solutions,
            pair_budget: self.pair_budget,
            threads: self.threads.max(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Brute,
    Restricted,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write optimal solutions and a run report.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "maxES")]
        criterion: Criterion,
        /// Number of optimal solutions to write.
        #[arg(long, default_value_t = 1)]
        num: usize,
        #[command(flatten)]
        search: SearchArgs,
        /// Output directory for solution files and `report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether a solution file holds a solution.
    Check {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Decide whether a solution is optimal under a criterion.
    Recognize {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value = "maxES")]
        criterion: Criterion,
        #[arg(long, value_enum, default_value_t = EngineKind::Brute)]
        engine: EngineKind,
        #[command(flatten)]
        search: SearchArgs,
        /// Where to write a better solution, if one is found.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a reduction instance from a DIMACS or Horn input.
    Gadget {
        #[arg(long)]
        kind: GadgetKind,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute a similarity store for an instance.
    Sim {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Strings shorter than this use Jaro-Winkler, longer ones TF-IDF.
        #[arg(long, default_value_t = 25)]
        short_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a solution against ground-truth pairs.
    Eval {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Score cell merges as well as object merges.
        #[arg(long)]
        cells: bool,
    },
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct Stats {
    pub facts: usize,
    pub objects: usize,
    pub cells: usize,
    pub rules: usize,
    pub denials: usize,
}

#[derive(Serialize, Debug, Clone, Default)]
pub struct Timings {
    pub parse_ms: f64,
    pub saturate_ms: f64,
    pub search_ms: f64,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct SolutionSummary {
    pub file: Option<String>,
    pub pairs: usize,
    pub eq: usize,
    pub supp: usize,
    pub abs: usize,
    pub viol: usize,
    pub generators: Vec<String>,
}

#[derive(Serialize, Debug, Clone)]
pub struct RunReport {
    pub verdict: String,
    pub criterion: String,
    pub stats: Stats,
    pub explored: usize,
    pub partial: bool,
    pub total_solutions: usize,
    pub optimal_solutions: usize,
    pub solutions: Vec<SolutionSummary>,
    pub timings: Timings,
}

struct Loaded {
    engine: Engine,
    stats: Stats,
    parse_ms: f64,
    saturate_ms: f64,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn load_spec(args: &InstanceArgs) -> Result<Specification> {
    let text = io::read_text(&args.spec)?;
    Ok(match &args.schema {
        Some(path) => parse_spec_with_schema(&text, &parse_schema(&io::read_text(path)?)?)?,
        None => parse_spec(&text)?,
    })
}

fn load_raw(args: &InstanceArgs) -> Result<(Database, Specification)> {
    let spec = load_spec(args)?;
    let db = io::ingest(&args.data, spec.schema())?;
    Ok((db, spec))
}

fn load(args: &InstanceArgs) -> Result<Loaded> {
    let t = Instant::now();
    let (db, spec) = load_raw(args)?;
    let overrides = match &args.sim_overrides {
        Some(p) => SimilarityStore::parse_tsv(&io::read_text(p)?)?,
        None => SimilarityStore::new(),
    };
    let parse_ms = ms(t);
    let t = Instant::now();
    let mut store = build_sim_store(&db, &spec, &SimConfig::default());
    store.overlay(&overrides);
    let stats = Stats {
        facts: db.facts().len(),
        objects: db.objects().len(),
        cells: db.cells().len(),
        rules: spec.rule_count(),
        denials: spec.denials().len(),
    };
    let engine = Engine::new(Arc::new(db), Arc::new(spec), &store)?;
    Ok(Loaded {
        engine,
        stats,
        parse_ms,
        saturate_ms: ms(t),
    })
}

fn summary(db: &Database, cand: &Candidate, sets: &CriterionSets, file: Option<String>) -> SolutionSummary {
    SolutionSummary {
        file,
        pairs: cand.pair_count(),
        eq: sets.eq_count(),
        supp: sets.supp.len(),
        abs: sets.abs.len(),
        viol: sets.viol.len(),
        generators: cand.canonical_generators(db).iter().map(|p| p.render(db)).collect(),
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn solve(
    instance: &InstanceArgs,
    criterion: Criterion,
    num: usize,
    search: &SearchArgs,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    if num == 0 {
        return Err(Error::Validation("--num must be at least 1".into()).into());
    }
    let loaded = load(instance)?;
    let engine = &loaded.engine;
    let db = engine.database();
    let t = Instant::now();
    let space = enumerate_solutions(engine, &search.config(usize::MAX))?;
    let optimal = if space.partial { Vec::new() } else { space.optimal(criterion) };
    let search_ms = ms(t);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut solutions = Vec::new();
    for (k, &i) in optimal.iter().take(num).enumerate() {
        let file = match out_dir {
            Some(dir) => {
                let name = format!("solution_{:03}.tsv", k + 1);
                io::write_solution(db, &space.solutions[i], &dir.join(&name))?;
                Some(name)
            }
            None => None,
        };
        solutions.push(summary(db, &space.solutions[i], &space.sets[i], file));
    }
    let (verdict, code) = if space.partial {
        ("inconclusive", EXIT_INCONCLUSIVE)
    } else if space.solutions.is_empty() {
        ("no-solution", EXIT_NO_SOLUTION)
    } else {
        ("ok", EXIT_OK)
    };
    let report = RunReport {
        verdict: verdict.into(),
        criterion: criterion.to_string(),
        stats: loaded.stats.clone(),
        explored: space.explored,
        partial: space.partial,
        total_solutions: space.solutions.len(),
        optimal_solutions: optimal.len(),
        solutions,
        timings: Timings {
            parse_ms: loaded.parse_ms,
            saturate_ms: loaded.saturate_ms,
            search_ms,
        },
    };
    if let Some(dir) = out_dir {
        let path = dir.join("report.json");
        let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_json(&mut f, &report)?;
    }
    write_json(out, &report)?;
    Ok(code)
}

#[derive(Serialize)]
struct CheckReport {
    solution: bool,
    candidate: bool,
    missing_hard: Vec<String>,
    violated: Vec<String>,
    reasons: Vec<String>,
}

fn check(instance: &InstanceArgs, solution: &Path, out: &mut dyn Write) -> Result<i32> {
    let loaded = load(instance)?;
    let engine = &loaded.engine;
    let db = engine.database();
    let cand = io::read_solution(db, solution)?;
    let c = engine.check_solution(&cand)?;
    let report = CheckReport {
        solution: c.is_solution(),
        candidate: c.candidate,
        missing_hard: c
            .missing_hard
            .iter()
            .map(|e| format!("{} {}", engine.rule_label(e.rule), e.pair.render(db)))
            .collect(),
        violated: c.violated.iter().map(|&d| engine.denial_label(d).to_string()).collect(),
        reasons: engine.explain(&c),
    };
    write_json(out, &report)?;
    Ok(if report.solution { EXIT_OK } else { EXIT_NO_SOLUTION })
}

#[derive(Serialize)]
struct RecognizeReport {
    optimal: bool,
    criterion: String,
    engine: String,
    witness: Option<Vec<String>>,
}

#[allow(clippy::too_many_arguments)]
fn recognize(
    instance: &InstanceArgs,
    solution: &Path,
    criterion: Criterion,
    kind: EngineKind,
    search: &SearchArgs,
    witness_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let loaded = load(instance)?;
    let engine = &loaded.engine;
    let db = engine.database();
    let cand = io::read_solution(db, solution)?;
    let r = match kind {
        EngineKind::Brute => recognize_optimal_bruteforce(engine, &cand, criterion, &search.config(usize::MAX))?,
        EngineKind::Restricted => recognize_optimal_restricted(engine, &cand, criterion)?,
    };
    if let (Some(path), Some(w)) = (witness_out, &r.witness) {
        io::write_solution(db, w, path)?;
    }
    let report = RecognizeReport {
        optimal: r.optimal,
        criterion: criterion.to_string(),
        engine: match kind {
            EngineKind::Brute => "brute".into(),
            EngineKind::Restricted => "restricted".into(),
        },
        witness: r
            .witness
            .as_ref()
            .map(|w| w.canonical_generators(db).iter().map(|p| p.render(db)).collect()),
    };
    write_json(out, &report)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GadgetReport {
    kind: String,
    facts: usize,
    objects: usize,
    /// Oracle answer: satisfiable for CNF inputs, entailed for Horn inputs.
    /// Absent when the input is too large for the oracle.
    oracle: Option<bool>,
}

fn gadget(kind: GadgetKind, input: &Path, dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let text = io::read_text(input)?;
    let (g, oracle) = match kind {
        GadgetKind::Horn => {
            let h = HornInput::parse(&text)?;
            (gen_horn(&h)?, horn_entails(&h).ok())
        }
        _ => {
            let phi = Cnf3::parse_dimacs(&text)?;
            let g = match kind {
                GadgetKind::Sat => gen_3sat(&phi)?,
                GadgetKind::SatMinA => gen_3sat_restricted_min_a(&phi)?,
                _ => gen_3sat_restricted_max_e(&phi)?,
            };
            (g, sat_oracle(&phi).ok())
        }
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    io::write_text(&dir.join("schema.erx"), &print_schema(g.spec.schema()))?;
    io::write_text(&dir.join("spec.erx"), &print_rules(&g.spec))?;
    io::write_database(&g.db, &dir.join("data"))?;
    io::write_solution(&g.db, &g.baseline, &dir.join("baseline.tsv"))?;
    write_json(
        out,
        &GadgetReport {
            kind: kind.to_string(),
            facts: g.db.facts().len(),
            objects: g.db.objects().len(),
            oracle,
        },
    )?;
    Ok(EXIT_OK)
}

fn sim(instance: &InstanceArgs, short_len: usize, dest: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let (db, spec) = load_raw(instance)?;
    let mut store = build_sim_store(
        &db,
        &spec,
        &SimConfig {
            short_len_threshold: short_len,
        },
    );
    if let Some(p) = &instance.sim_overrides {
        store.overlay(&SimilarityStore::parse_tsv(&io::read_text(p)?)?);
    }
    match dest {
        Some(path) => io::write_text(path, &store.to_tsv())?,
        None => out.write_all(store.to_tsv().as_bytes())?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EvalReport {
    precision: f64,
    recall: f64,
    f1: f64,
}

fn eval(instance: &InstanceArgs, solution: &Path, truth: &Path, cells: bool, out: &mut dyn Write) -> Result<i32> {
    let (db, _) = load_raw(instance)?;
    let cand = io::read_solution(&db, solution)?;
    // ground truth lists entities as pairs; score against its closure
    let expected = Candidate::from_pairs(&db, io::read_truth(&db, truth)?)?;
    let s = score_merges(&cand.merge_pairs(), &expected.merge_pairs(), cells);
    write_json(
        out,
        &EvalReport {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        },
    )?;
    Ok(EXIT_OK)
}

/// Exit status for an error raised while running a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Inconclusive(_)) => EXIT_INCONCLUSIVE,
        _ => EXIT_INVALID,
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Solve {
            instance,
            criterion,
            num,
            search,
            out: dir,
        } => solve(&instance, criterion, num, &search, dir.as_deref(), out),
        Command::Check { instance, solution } => check(&instance, &solution, out),
        Command::Recognize {
            instance,
            solution,
            criterion,
            engine,
            search,
            out: witness,
        } => recognize(&instance, &solution, criterion, engine, &search, witness.as_deref(), out),
        Command::Gadget { kind, input, out: dir } => gadget(kind, &input, &dir, out),
        Command::Sim {
            instance,
            short_len,
            out: dest,
        } => sim(&instance, short_len, dest.as_deref(), out),
        Command::Eval {
            instance,
            solution,
            truth,
            cells,
        } => eval(&instance, &solution, &truth, cells, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Errors are reported on `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}
