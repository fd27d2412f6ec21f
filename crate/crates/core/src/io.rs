//! File formats: relation TSVs, solution files and ground truth.
//!
//! A data directory holds one `<Relation>.tsv` per relation. Its first line
//! is a header (`tid` followed by the attribute names), every further line
//! is one fact with the tid in the first column. Empty value fields are
//! read as `Null`.
//!
//! Solution files list generators, one per line:
//!
//! ```text
//! eqo<TAB>a1<TAB>a2
//! eqv<TAB>t1<TAB>2<TAB>t2<TAB>2
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::equiv::{Candidate, MergePair};
use crate::error::{Error, Result};
use crate::model::{Database, DatabaseBuilder, Schema};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Parses the TSV text of one relation into `b`.
pub fn ingest_tsv(b: &mut DatabaseBuilder, relation: &str, text: &str) -> Result<()> {
    let arity = {
        let schema = b.schema();
        let rel = schema
            .get(relation)
            .ok_or_else(|| Error::Data(format!("no relation {relation} in the schema")))?;
        schema.relation(rel).arity()
    };
    let mut rows = lines(text);
    match rows.next() {
        Some((_, header)) if header.split('\t').count() == arity + 1 => {}
        Some((n, _)) => {
            return Err(Error::Data(format!(
                "{relation}.tsv line {n}: header must have {} columns",
                arity + 1
            )))
        }
        None => return Ok(()),
    }
    for (n, row) in rows {
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != arity + 1 {
            return Err(Error::Data(format!(
                "{relation}.tsv line {n}: expected {} columns, found {}",
                arity + 1,
                cols.len()
            )));
        }
        b.add_fact(relation, cols[0], &cols[1..])
            .map_err(|e| Error::Data(format!("{relation}.tsv line {n}: {e}")))?;
    }
    Ok(())
}

/// Loads every `<Relation>.tsv` of `dir`. Relations without a file have no
/// facts; a TSV file naming no relation of the schema is an error.
pub fn ingest(dir: &Path, schema: &Schema) -> Result<Database> {
    let mut b = DatabaseBuilder::new(Arc::new(schema.clone()));
    if dir.exists() {
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("tsv") {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if schema.get(stem).is_none() {
                return Err(Error::Data(format!("{}: unknown relation {stem}", path.display())));
            }
        }
    } else if !schema.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        ));
    }
    for decl in schema.relations() {
        let path = dir.join(format!("{}.tsv", decl.name()));
        if path.exists() {
            ingest_tsv(&mut b, decl.name(), &read(&path)?)?;
        }
    }
    Ok(b.build())
}

/// Renders the facts of one relation in the ingest format.
pub fn relation_tsv(db: &Database, relation: &str) -> Result<String> {
    let schema = db.schema();
    let rel = schema
        .get(relation)
        .ok_or_else(|| Error::Data(format!("no relation {relation}")))?;
    let decl = schema.relation(rel);
    let mut out = String::from("tid");
    for a in decl.attributes() {
        out.push('\t');
        out.push_str(&a.name);
    }
    out.push('\n');
    for &f in db.facts_of(rel) {
        let fact = db.fact(f);
        out.push_str(db.constant(fact.tid).text());
        for &c in &fact.args {
            out.push('\t');
            let k = db.constant(c);
            if !k.is_null() {
                out.push_str(k.text());
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes one TSV per relation that has facts.
pub fn write_database(db: &Database, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for decl in db.schema().relations() {
        let rel = db.schema().get(decl.name()).expect("declared");
        if db.facts_of(rel).is_empty() {
            continue;
        }
        write(&dir.join(format!("{}.tsv", decl.name())), &relation_tsv(db, decl.name())?)?;
    }
    Ok(())
}

fn cell(db: &Database, tid: &str, pos: &str, n: usize) -> Result<crate::model::CellId> {
    let p: usize = pos
        .parse()
        .map_err(|_| Error::Validation(format!("line {n}: bad position {pos:?}")))?;
    db.cell_by_tid(tid, p)
        .ok_or_else(|| Error::Validation(format!("line {n}: no value cell {tid}.{p}")))
}

fn object(db: &Database, text: &str, n: usize) -> Result<crate::model::ObjectId> {
    db.object_by_text(text)
        .ok_or_else(|| Error::Validation(format!("line {n}: unknown object {text:?}")))
}

fn parse_pairs(db: &Database, text: &str, tagged: bool) -> Result<Vec<MergePair>> {
    let mut out = Vec::new();
    for (n, line) in lines(text) {
        let mut cols: Vec<&str> = line.split('\t').collect();
        let tag = if tagged {
            Some(cols.remove(0))
        } else {
            None
        };
        let pair = match (tag, cols.len()) {
            (Some("eqo") | None, 2) => MergePair::objects(object(db, cols[0], n)?, object(db, cols[1], n)?),
            (Some("eqv") | None, 4) => MergePair::cells(cell(db, cols[0], cols[1], n)?, cell(db, cols[2], cols[3], n)?),
            _ => return Err(Error::Validation(format!("line {n}: cannot read {line:?}"))),
        };
        out.push(pair);
    }
    Ok(out)
}

pub fn parse_solution(db: &Database, text: &str) -> Result<Candidate> {
    Candidate::from_pairs(db, parse_pairs(db, text, true)?)
}

pub fn render_solution(db: &Database, cand: &Candidate) -> String {
    let mut out = String::new();
    for p in cand.canonical_generators(db) {
        match p {
            MergePair::Objects(a, b) => {
                out.push_str(&format!("eqo\t{}\t{}\n", db.object_text(a), db.object_text(b)));
            }
            MergePair::Cells(a, b) => {
                let (ca, cb) = (db.cell(a), db.cell(b));
                out.push_str(&format!(
                    "eqv\t{}\t{}\t{}\t{}\n",
                    db.cell_tid_text(a),
                    ca.position,
                    db.cell_tid_text(b),
                    cb.position
                ));
            }
        }
    }
    out
}

pub fn read_solution(db: &Database, path: &Path) -> Result<Candidate> {
    parse_solution(db, &read(path)?)
}

pub fn write_solution(db: &Database, cand: &Candidate, path: &Path) -> Result<()> {
    write(path, &render_solution(db, cand))
}

/// Ground truth: two columns of objects, or four columns `tid pos tid pos`
/// for cell pairs.
pub fn parse_truth(db: &Database, text: &str) -> Result<BTreeSet<MergePair>> {
    Ok(parse_pairs(db, text, false)?.into_iter().collect())
}

pub fn read_truth(db: &Database, path: &Path) -> Result<BTreeSet<MergePair>> {
    parse_truth(db, &read(path)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    read(path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write(path, text)
}
