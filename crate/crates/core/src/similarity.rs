//! String similarity measures and the score store behind `sim(u, v) >= θ`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::dsl::{Atom, Specification, Term};
use crate::error::{Error, Result};
use crate::model::{AttrType, ConstId, Constant, Database};

/// Edit distance with unit-cost insertions, deletions and substitutions,
/// over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_used = vec![false; b.len()];
    let mut a_matched = Vec::new();
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_used[j] && b[j] == *ca {
                b_used[j] = true;
                a_matched.push(*ca);
                break;
            }
        }
    }
    let m = a_matched.len();
    if m == 0 {
        return 0.0;
    }
    let b_matched = b.iter().zip(&b_used).filter(|(_, &u)| u).map(|(c, _)| *c);
    let half_t = a_matched.iter().zip(b_matched).filter(|(x, y)| *x != y).count();
    let t = half_t as f64 / 2.0;
    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro similarity with the Winkler boost for a common prefix of up to four
/// characters and scaling factor 0.1.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let j = jaro(a, b);
    let prefix = a
        .chars()
        .zip(b.chars())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    j + prefix as f64 * 0.1 * (1.0 - j)
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

/// Document frequencies of a corpus; each document is one string.
#[derive(Clone, Debug)]
pub struct TfIdfCorpus {
    docs: usize,
    df: HashMap<String, usize>,
}

impl TfIdfCorpus {
    pub fn new<I, S>(corpus: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut docs = 0;
        for doc in corpus {
            docs += 1;
            let set: BTreeSet<String> = tokens(doc.as_ref()).into_iter().collect();
            for t in set {
                *df.entry(t).or_default() += 1;
            }
        }
        TfIdfCorpus { docs, df }
    }

    /// `ln(N / df)`; tokens unseen in the corpus count as occurring once.
    pub fn idf(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(1).max(1);
        (self.docs.max(1) as f64 / df as f64).ln().max(0.0)
    }

    fn vector(&self, s: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens(s) {
            *tf.entry(t).or_default() += 1.0;
        }
        for (t, w) in tf.iter_mut() {
            *w *= self.idf(t);
        }
        tf
    }

    /// Cosine of raw-tf × idf vectors; 0 when either vector is all zero.
    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let va = self.vector(a);
        let vb = self.vector(b);
        let dot: f64 = va.iter().filter_map(|(t, w)| vb.get(t).map(|x| w * x)).sum();
        let na: f64 = va.values().map(|w| w * w).sum::<f64>().sqrt();
        let nb: f64 = vb.values().map(|w| w * w).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

pub fn tfidf_cosine<S: AsRef<str>>(a: &str, b: &str, corpus: &[S]) -> f64 {
    TfIdfCorpus::new(corpus.iter().map(|s| s.as_ref())).cosine(a, b)
}

pub fn is_numeric(s: &str) -> bool {
    let s = s.trim();
    let s = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |x: &str| x.chars().all(|c| c.is_ascii_digit());
    match frac {
        None => !int.is_empty() && digits(int),
        Some(f) => (!int.is_empty() || !f.is_empty()) && digits(int) && digits(f),
    }
}

/// Maps a unit-interval similarity to an integer score, rounding half up.
pub fn to_score(x: f64) -> u8 {
    (x * 100.0 + 0.5).floor().clamp(0.0, 100.0) as u8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    /// Strings shorter than this (in characters) use Jaro-Winkler, longer
    /// ones TF-IDF.
    pub short_len_threshold: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            short_len_threshold: 25,
        }
    }
}

/// Score of two values under the routing of `cfg`.
pub fn route_score(a: &str, b: &str, cfg: &SimConfig, corpus: &TfIdfCorpus) -> u8 {
    if a == b {
        return 100;
    }
    if is_numeric(a) && is_numeric(b) {
        let len = a.chars().count().max(b.chars().count());
        return to_score(1.0 - levenshtein(a, b) as f64 / len as f64);
    }
    if a.chars().count().max(b.chars().count()) < cfg.short_len_threshold {
        to_score(jaro_winkler(a, b))
    } else {
        to_score(corpus.cosine(a, b))
    }
}

/// Symmetric scores between value texts. Missing pairs score 0, identical
/// texts 100.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimilarityStore {
    scores: BTreeMap<(String, String), u8>,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SimilarityStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str, score: u8) {
        self.scores.insert(key(a, b), score.min(100));
    }

    pub fn get(&self, a: &str, b: &str) -> u8 {
        if a == b {
            return 100;
        }
        self.scores.get(&key(a, b)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.scores.iter().map(|((a, b), s)| (a.as_str(), b.as_str(), *s))
    }

    /// Entries of `other` replace those of `self`.
    pub fn overlay(&mut self, other: &SimilarityStore) {
        for ((a, b), s) in &other.scores {
            self.scores.insert((a.clone(), b.clone()), *s);
        }
    }

    /// Parses `value1 \t value2 \t score` lines; blank lines and `#`
    /// comments are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut store = SimilarityStore::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Data(format!(
                    "similarity line {}: expected 3 tab-separated columns",
                    i + 1
                )));
            }
            let score: u8 = cols[2]
                .trim()
                .parse()
                .ok()
                .filter(|s| *s <= 100)
                .ok_or_else(|| Error::Data(format!("similarity line {}: bad score {:?}", i + 1, cols[2])))?;
            if cols[0].is_empty() || cols[1].is_empty() {
                return Err(Error::Data(format!("similarity line {}: empty value", i + 1)));
            }
            store.insert(cols[0], cols[1], score);
        }
        Ok(store)
    }

    pub fn to_tsv(&self) -> String {
        self.iter().map(|(a, b, s)| format!("{a}\t{b}\t{s}\n")).collect()
    }

    /// Resolves texts to the value constants of `db`.
    pub fn index(&self, db: &Database) -> SimIndex {
        let mut scores = HashMap::new();
        for ((a, b), s) in &self.scores {
            if let (Some(x), Some(y)) = (
                db.lookup(&Constant::value(a.as_str())),
                db.lookup(&Constant::value(b.as_str())),
            ) {
                scores.insert(ordered(x, y), *s);
            }
        }
        SimIndex { scores }
    }
}

fn ordered(a: ConstId, b: ConstId) -> (ConstId, ConstId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A [`SimilarityStore`] keyed by the constants of one database.
#[derive(Clone, Debug, Default)]
pub struct SimIndex {
    scores: HashMap<(ConstId, ConstId), u8>,
}

impl SimIndex {
    pub fn score(&self, a: ConstId, b: ConstId) -> u8 {
        if a == b {
            return 100;
        }
        self.scores.get(&ordered(a, b)).copied().unwrap_or(0)
    }
}

/// Value texts a similarity operand can take in `db`.
fn operand_values(db: &Database, body: &[Atom], t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match t {
        Term::Const(c) => {
            out.insert(c.clone());
        }
        Term::Var(v) => {
            for atom in body {
                let Atom::Rel(r) = atom else { continue };
                let Some(rid) = db.schema().get(&r.relation) else { continue };
                let decl = db.schema().relation(rid);
                for (i, arg) in r.args.iter().enumerate() {
                    if arg.as_var() != Some(v) || decl.type_at(i + 1) != Some(AttrType::Val) {
                        continue;
                    }
                    for &f in db.facts_of(rid) {
                        let c = db.constant(db.fact(f).at(i + 1));
                        if !c.is_null() {
                            out.insert(c.text().to_string());
                        }
                    }
                }
            }
        }
    }
    out
}

/// Scores every pair of non-null values that can meet in some similarity
/// atom of `spec`.
pub fn build_sim_store(db: &Database, spec: &Specification, cfg: &SimConfig) -> SimilarityStore {
    let bodies = spec
        .rules()
        .map(|r| r.body.as_slice())
        .chain(spec.denials().iter().map(|d| d.body.as_slice()));
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    let mut corpus_docs: BTreeSet<String> = BTreeSet::new();
    for body in bodies {
        for atom in body {
            let Atom::Sim { left, right, .. } = atom else { continue };
            let l = operand_values(db, body, left);
            let r = operand_values(db, body, right);
            for a in &l {
                for b in &r {
                    if a != b {
                        pairs.insert(key(a, b));
                    }
                }
            }
            corpus_docs.extend(l);
            corpus_docs.extend(r);
        }
    }
    let corpus = TfIdfCorpus::new(&corpus_docs);
    let pairs: Vec<_> = pairs.into_iter().collect();
    let scored: Vec<((String, String), u8)> = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let s = route_score(&a, &b, cfg, &corpus);
            ((a, b), s)
        })
        .collect();
    SimilarityStore {
        scores: scored.into_iter().collect(),
    }
}
