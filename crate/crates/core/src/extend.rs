//! Extended databases `D_{E,V}`: every object position holds the E-class of
//! its object, every value position the values of the V-class of its cell.

use std::collections::HashMap;

use crate::equiv::Candidate;
use crate::error::{Error, Result};
use crate::model::{AttrType, CellId, ConstId, Database, FactId};

/// Index of a constant set inside an [`ExtendedDatabase`].
pub type SetId = u32;

#[derive(Clone, Debug)]
pub struct ExtendedDatabase<'a> {
    db: &'a Database,
    sets: Vec<Vec<ConstId>>,
    /// Per fact, one set per position `1..=k`.
    positions: Vec<Vec<SetId>>,
}

impl<'a> ExtendedDatabase<'a> {
    pub fn new(db: &'a Database, cand: &Candidate) -> Result<Self> {
        if cand.objects.len() != db.objects().len() || cand.cells.len() != db.cells().len() {
            return Err(Error::Domain(format!(
                "candidate universes ({}, {}) do not match database ({}, {})",
                cand.objects.len(),
                cand.cells.len(),
                db.objects().len(),
                db.cells().len()
            )));
        }
        let mut sets: Vec<Vec<ConstId>> = Vec::new();
        let mut object_sets: HashMap<u32, SetId> = HashMap::new();
        let mut cell_sets: HashMap<u32, SetId> = HashMap::new();
        let mut positions = Vec::with_capacity(db.facts().len());
        for (fi, fact) in db.facts().iter().enumerate() {
            let decl = db.schema().relation(fact.relation);
            let mut row = Vec::with_capacity(fact.args.len());
            for (j, attr) in decl.attributes().iter().enumerate() {
                let id = match attr.ty {
                    AttrType::Obj => {
                        let o = db.object_id(fact.args[j]).expect("object indexed");
                        let r = cand.objects.rep(o.0);
                        *object_sets.entry(r).or_insert_with(|| {
                            let mut s: Vec<ConstId> = cand
                                .objects
                                .class_of(o.0)
                                .into_iter()
                                .map(|m| db.objects()[m as usize])
                                .collect();
                            s.sort();
                            sets.push(s);
                            sets.len() as SetId - 1
                        })
                    }
                    AttrType::Val => {
                        let c = db
                            .cell_id(crate::model::Cell {
                                fact: FactId(fi as u32),
                                position: j + 1,
                            })
                            .expect("cell indexed");
                        let r = cand.cells.rep(c.0);
                        *cell_sets.entry(r).or_insert_with(|| {
                            let mut s: Vec<ConstId> = cand
                                .cells
                                .class_of(c.0)
                                .into_iter()
                                .map(|m| db.cell_value(CellId(m)))
                                .collect();
                            s.sort();
                            s.dedup();
                            sets.push(s);
                            sets.len() as SetId - 1
                        })
                    }
                };
                row.push(id);
            }
            positions.push(row);
        }
        Ok(ExtendedDatabase { db, sets, positions })
    }

    pub fn database(&self) -> &'a Database {
        self.db
    }

    /// The set at 1-based position `pos` of `fact`; position 0 is the
    /// singleton tid and is not stored here.
    pub fn set(&self, fact: FactId, pos: usize) -> &[ConstId] {
        &self.sets[self.positions[fact.index()][pos - 1] as usize]
    }

    /// Renders an extended fact as `R({t}, {..}, ..)` for diagnostics.
    pub fn render_fact(&self, fact: FactId) -> String {
        let f = self.db.fact(fact);
        let decl = self.db.schema().relation(f.relation);
        let mut parts = vec![format!("{{{}}}", self.db.constant(f.tid))];
        for pos in 1..=decl.arity() {
            let mut texts: Vec<String> = self
                .set(fact, pos)
                .iter()
                .map(|&c| self.db.constant(c).to_string())
                .collect();
            texts.sort();
            parts.push(format!("{{{}}}", texts.join(", ")));
        }
        format!("{}({})", decl.name(), parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::MergePair;
    use crate::model::{AttrType, DatabaseBuilder, RelationDecl, Schema};
    use std::sync::Arc;

    #[test]
    fn singleton_fact() {
        let mut s = Schema::new();
        s.add(RelationDecl::with_types("R", &[AttrType::Obj, AttrType::Val]).unwrap())
            .unwrap();
        let mut b = DatabaseBuilder::new(Arc::new(s));
        b.add_fact("R", "t", &["o", "v"]).unwrap();
        let db = b.build();
        let ext = ExtendedDatabase::new(&db, &Candidate::identity(&db)).unwrap();
        assert_eq!(ext.render_fact(FactId(0)), "R({t}, {o}, {v})");
    }

    #[test]
    fn merged_cells_share_values() {
        let mut s = Schema::new();
        s.add(RelationDecl::with_types("R", &[AttrType::Obj, AttrType::Val]).unwrap())
            .unwrap();
        let mut b = DatabaseBuilder::new(Arc::new(s));
        b.add_fact("R", "t1", &["a", "x"]).unwrap();
        b.add_fact("R", "t2", &["b", "y"]).unwrap();
        b.add_fact("R", "t3", &["b", "x"]).unwrap();
        let db = b.build();
        let c1 = db.cell_by_tid("t1", 2).unwrap();
        let c2 = db.cell_by_tid("t2", 2).unwrap();
        let cand = Candidate::from_pairs(&db, [MergePair::cells(c1, c2)]).unwrap();
        let ext = ExtendedDatabase::new(&db, &cand).unwrap();
        assert_eq!(ext.render_fact(FactId(0)), "R({t1}, {a}, {x, y})");
        assert_eq!(ext.render_fact(FactId(1)), "R({t2}, {b}, {x, y})");
        // t3 keeps its own cell: local merges do not spread to equal values
        assert_eq!(ext.render_fact(FactId(2)), "R({t3}, {b}, {x})");
        let bad = Candidate::identity(&db).with_pair(MergePair::objects(
            crate::model::ObjectId(0),
            crate::model::ObjectId(1),
        ));
        let ext = ExtendedDatabase::new(&db, &bad.unwrap()).unwrap();
        assert_eq!(ext.render_fact(FactId(2)), "R({t3}, {a, b}, {x})");
    }
}
