//! Schemas, TID-annotated databases, constants and cells.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// The sort of a constant. Objects, values and tids are disjoint; `Null` is
/// the distinguished constant stored in empty value cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Object,
    Value,
    Tid,
    Null,
}

/// A database constant, compared by sort and canonical text.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant {
    sort: Sort,
    text: String,
}

impl Constant {
    pub fn object(text: impl Into<String>) -> Self {
        Constant {
            sort: Sort::Object,
            text: text.into(),
        }
    }

    pub fn value(text: impl Into<String>) -> Self {
        Constant {
            sort: Sort::Value,
            text: text.into(),
        }
    }

    pub fn tid(text: impl Into<String>) -> Self {
        Constant {
            sort: Sort::Tid,
            text: text.into(),
        }
    }

    pub fn null() -> Self {
        Constant {
            sort: Sort::Null,
            text: String::new(),
        }
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_null(&self) -> bool {
        self.sort == Sort::Null
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_null() {
            f.write_str("NULL")
        } else {
            f.write_str(&self.text)
        }
    }
}

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

index_type!(
    /// Interned constant of a [`Database`].
    ConstId
);
index_type!(
    /// Position of a relation in its [`Schema`].
    RelId
);
index_type!(
    /// Position of a fact in its [`Database`].
    FactId
);
index_type!(
    /// Index of an object in `Obj(D)`.
    ObjectId
);
index_type!(
    /// Index of a value cell in `Cells(D)`.
    CellId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttrType {
    Obj,
    Val,
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Obj => f.write_str("obj"),
            AttrType::Val => f.write_str("val"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub ty: AttrType,
}

/// A relation symbol with its type vector. Position 0 (the tid) is implicit;
/// attribute `i` (1-based) is `attributes[i - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    name: String,
    attributes: Vec<Attribute>,
}

impl RelationDecl {
    pub fn new(name: impl Into<String>, attributes: Vec<Attribute>) -> Result<Self> {
        let name = name.into();
        if attributes.is_empty() {
            return Err(Error::Schema(format!("relation {name} must have arity >= 1")));
        }
        Ok(RelationDecl { name, attributes })
    }

    /// Shorthand for tests and generators: attribute names are `a1..ak`.
    pub fn with_types(name: impl Into<String>, types: &[AttrType]) -> Result<Self> {
        let attributes = types
            .iter()
            .enumerate()
            .map(|(i, &ty)| Attribute {
                name: format!("a{}", i + 1),
                ty,
            })
            .collect();
        Self::new(name, attributes)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Type of the 1-based position `pos`, `None` for the tid position or
    /// out-of-range positions.
    pub fn type_at(&self, pos: usize) -> Option<AttrType> {
        if pos == 0 {
            None
        } else {
            self.attributes.get(pos - 1).map(|a| a.ty)
        }
    }

    pub fn value_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.ty == AttrType::Val)
            .map(|(i, _)| i + 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    relations: Vec<RelationDecl>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, decl: RelationDecl) -> Result<RelId> {
        if let Some(existing) = self.get(decl.name()) {
            if self.relation(existing) == &decl {
                return Ok(existing);
            }
            return Err(Error::Schema(format!(
                "relation {} declared twice with different signatures",
                decl.name()
            )));
        }
        self.relations.push(decl);
        Ok(RelId(self.relations.len() as u32 - 1))
    }

    pub fn get(&self, name: &str) -> Option<RelId> {
        self.relations
            .iter()
            .position(|r| r.name == name)
            .map(|i| RelId(i as u32))
    }

    pub fn relation(&self, id: RelId) -> &RelationDecl {
        &self.relations[id.index()]
    }

    pub fn relations(&self) -> &[RelationDecl] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub relation: RelId,
    pub tid: ConstId,
    pub args: Vec<ConstId>,
}

impl Fact {
    /// Constant at 1-based position `pos`; position 0 is the tid.
    pub fn at(&self, pos: usize) -> ConstId {
        if pos == 0 {
            self.tid
        } else {
            self.args[pos - 1]
        }
    }
}

/// A value cell `<t, i>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub fact: FactId,
    pub position: usize,
}

/// A TID-annotated database. Immutable once built; construct it with
/// [`DatabaseBuilder`].
#[derive(Clone, Debug)]
pub struct Database {
    schema: Arc<Schema>,
    constants: Vec<Constant>,
    lookup: HashMap<Constant, ConstId>,
    facts: Vec<Fact>,
    by_relation: Vec<Vec<FactId>>,
    tid_index: HashMap<ConstId, FactId>,
    objects: Vec<ConstId>,
    object_index: HashMap<ConstId, ObjectId>,
    cells: Vec<Cell>,
    cell_index: HashMap<Cell, CellId>,
}

impl Database {
    pub fn empty(schema: Arc<Schema>) -> Self {
        DatabaseBuilder::new(schema).build()
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn constant(&self, id: ConstId) -> &Constant {
        &self.constants[id.index()]
    }

    /// Every interned constant, indexed by [`ConstId`].
    pub fn constants(&self) -> &[Constant] {
        &self.constants
    }

    pub fn lookup(&self, c: &Constant) -> Option<ConstId> {
        self.lookup.get(c).copied()
    }

    pub fn null_id(&self) -> Option<ConstId> {
        self.lookup(&Constant::null())
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact(&self, id: FactId) -> &Fact {
        &self.facts[id.index()]
    }

    pub fn facts_of(&self, rel: RelId) -> &[FactId] {
        &self.by_relation[rel.index()]
    }

    pub fn fact_by_tid(&self, tid: ConstId) -> Option<FactId> {
        self.tid_index.get(&tid).copied()
    }

    pub fn fact_by_tid_text(&self, tid: &str) -> Option<FactId> {
        self.lookup(&Constant::tid(tid))
            .and_then(|id| self.fact_by_tid(id))
    }

    /// `Obj(D)` in first-occurrence order.
    pub fn objects(&self) -> &[ConstId] {
        &self.objects
    }

    pub fn object_id(&self, c: ConstId) -> Option<ObjectId> {
        self.object_index.get(&c).copied()
    }

    pub fn object_by_text(&self, text: &str) -> Option<ObjectId> {
        self.lookup(&Constant::object(text))
            .and_then(|c| self.object_id(c))
    }

    pub fn object_const(&self, o: ObjectId) -> ConstId {
        self.objects[o.index()]
    }

    pub fn object_text(&self, o: ObjectId) -> &str {
        self.constant(self.object_const(o)).text()
    }

    /// `Cells(D)` ordered by fact, then position.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> Cell {
        self.cells[id.index()]
    }

    pub fn cell_id(&self, cell: Cell) -> Option<CellId> {
        self.cell_index.get(&cell).copied()
    }

    pub fn cell_by_tid(&self, tid: &str, position: usize) -> Option<CellId> {
        let fact = self.fact_by_tid_text(tid)?;
        self.cell_id(Cell { fact, position })
    }

    pub fn cell_value(&self, id: CellId) -> ConstId {
        let cell = self.cell(id);
        self.fact(cell.fact).at(cell.position)
    }

    pub fn cell_tid_text(&self, id: CellId) -> &str {
        let cell = self.cell(id);
        self.constant(self.fact(cell.fact).tid).text()
    }

    /// `t.i` rendering of a cell.
    pub fn cell_label(&self, id: CellId) -> String {
        format!("{}.{}", self.cell_tid_text(id), self.cell(id).position)
    }

    pub fn relation_of(&self, fact: FactId) -> &RelationDecl {
        self.schema.relation(self.fact(fact).relation)
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

/// Incremental construction of a [`Database`].
#[derive(Debug)]
pub struct DatabaseBuilder {
    schema: Arc<Schema>,
    constants: Vec<Constant>,
    lookup: HashMap<Constant, ConstId>,
    facts: Vec<Fact>,
    tid_index: HashMap<ConstId, FactId>,
}

impl DatabaseBuilder {
    pub fn new(schema: Arc<Schema>) -> Self {
        DatabaseBuilder {
            schema,
            constants: Vec::new(),
            lookup: HashMap::new(),
            facts: Vec::new(),
            tid_index: HashMap::new(),
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn intern(&mut self, c: Constant) -> ConstId {
        if let Some(&id) = self.lookup.get(&c) {
            return id;
        }
        let id = ConstId(self.constants.len() as u32);
        self.constants.push(c.clone());
        self.lookup.insert(c, id);
        id
    }

    /// Adds `relation(tid, args...)`. Empty strings in value positions
    /// become `Null`; empty object fields are rejected.
    pub fn add_fact<S: AsRef<str>>(&mut self, relation: &str, tid: &str, args: &[S]) -> Result<FactId> {
        let rel = self
            .schema
            .get(relation)
            .ok_or_else(|| Error::Data(format!("unknown relation {relation}")))?;
        let decl = self.schema.relation(rel).clone();
        if args.len() != decl.arity() {
            return Err(Error::Data(format!(
                "relation {relation} has arity {} but fact {tid} has {} arguments",
                decl.arity(),
                args.len()
            )));
        }
        if tid.is_empty() {
            return Err(Error::Data(format!("empty tid in relation {relation}")));
        }
        let tid_id = self.intern(Constant::tid(tid));
        if self.tid_index.contains_key(&tid_id) {
            return Err(Error::Data(format!("duplicate tid {tid}")));
        }
        let mut ids = Vec::with_capacity(args.len());
        for (i, (arg, attr)) in args.iter().zip(decl.attributes()).enumerate() {
            let text = arg.as_ref();
            let c = match attr.ty {
                AttrType::Obj if text.is_empty() => {
                    return Err(Error::Data(format!(
                        "fact {tid}: empty object at position {}",
                        i + 1
                    )))
                }
                AttrType::Obj => Constant::object(text),
                AttrType::Val if text.is_empty() => Constant::null(),
                AttrType::Val => Constant::value(text),
            };
            ids.push(self.intern(c));
        }
        let id = FactId(self.facts.len() as u32);
        self.facts.push(Fact {
            relation: rel,
            tid: tid_id,
            args: ids,
        });
        self.tid_index.insert(tid_id, id);
        Ok(id)
    }

    /// Adds a fact under the next free tid of the form `f<n>`.
    pub fn add_auto<S: AsRef<str>>(&mut self, relation: &str, args: &[S]) -> Result<FactId> {
        let mut n = self.facts.len() + 1;
        loop {
            let tid = format!("f{n}");
            if !self.lookup.contains_key(&Constant::tid(tid.as_str())) {
                return self.add_fact(relation, &tid, args);
            }
            n += 1;
        }
    }

    pub fn build(self) -> Database {
        let mut by_relation = vec![Vec::new(); self.schema.len()];
        let mut objects = Vec::new();
        let mut object_index = HashMap::new();
        let mut cells = Vec::new();
        let mut cell_index = HashMap::new();
        for (i, fact) in self.facts.iter().enumerate() {
            let fid = FactId(i as u32);
            by_relation[fact.relation.index()].push(fid);
            let decl = self.schema.relation(fact.relation);
            for (j, attr) in decl.attributes().iter().enumerate() {
                match attr.ty {
                    AttrType::Obj => {
                        let c = fact.args[j];
                        if let std::collections::hash_map::Entry::Vacant(e) = object_index.entry(c) {
                            e.insert(ObjectId(objects.len() as u32));
                            objects.push(c);
                        }
                    }
                    AttrType::Val => {
                        let cell = Cell {
                            fact: fid,
                            position: j + 1,
                        };
                        cell_index.insert(cell, CellId(cells.len() as u32));
                        cells.push(cell);
                    }
                }
            }
        }
        Database {
            schema: self.schema,
            constants: self.constants,
            lookup: self.lookup,
            facts: self.facts,
            by_relation,
            tid_index: self.tid_index,
            objects,
            object_index,
            cells,
            cell_index,
        }
    }
}
