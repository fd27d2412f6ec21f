//! Equivalence relations over a finite universe `0..n`, merge pairs and
//! candidate pairs `<E, V>`.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{CellId, Database, ObjectId};

/// An equivalence relation over `0..len`, stored as a canonical
/// representative per element (the smallest member of its class). Two
/// relations are equal iff they denote the same partition.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EquivRel {
    rep: Vec<u32>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

impl EquivRel {
    pub fn identity(len: usize) -> Self {
        EquivRel {
            rep: (0..len as u32).collect(),
        }
    }

    /// Smallest equivalence relation on `0..len` containing `pairs`.
    pub fn close<I>(len: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        Self::identity(len).with_pairs(pairs)
    }

    /// Closure of `self` extended with `pairs`.
    pub fn with_pairs<I>(&self, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let len = self.rep.len();
        let mut parent = self.rep.clone();
        for (a, b) in pairs {
            if a as usize >= len || b as usize >= len {
                return Err(Error::Domain(format!(
                    "pair ({a}, {b}) outside universe of size {len}"
                )));
            }
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi as usize] = lo;
            }
        }
        for i in 0..len as u32 {
            let r = find(&mut parent, i);
            parent[i as usize] = r;
        }
        Ok(EquivRel { rep: parent })
    }

    pub fn with_pair(&self, a: u32, b: u32) -> Result<Self> {
        self.with_pairs([(a, b)])
    }

    /// Size of the universe.
    pub fn len(&self) -> usize {
        self.rep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rep.is_empty()
    }

    pub fn rep(&self, a: u32) -> u32 {
        self.rep[a as usize]
    }

    pub fn related(&self, a: u32, b: u32) -> bool {
        self.rep[a as usize] == self.rep[b as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.rep.iter().enumerate().all(|(i, &r)| r as usize == i)
    }

    /// Classes in order of their smallest member, members ascending.
    pub fn classes(&self) -> Vec<Vec<u32>> {
        let mut slot = vec![usize::MAX; self.rep.len()];
        let mut out: Vec<Vec<u32>> = Vec::new();
        for (i, &r) in self.rep.iter().enumerate() {
            if slot[r as usize] == usize::MAX {
                slot[r as usize] = out.len();
                out.push(Vec::new());
            }
            out[slot[r as usize]].push(i as u32);
        }
        out
    }

    pub fn class_of(&self, a: u32) -> Vec<u32> {
        let r = self.rep[a as usize];
        (0..self.rep.len() as u32)
            .filter(|&i| self.rep[i as usize] == r)
            .collect()
    }

    /// Number of ordered pairs, reflexive ones included.
    pub fn pair_count(&self) -> usize {
        let mut sizes = vec![0usize; self.rep.len()];
        for &r in &self.rep {
            sizes[r as usize] += 1;
        }
        sizes.iter().map(|s| s * s).sum()
    }

    /// Unordered non-reflexive pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for class in self.classes() {
            for (i, &a) in class.iter().enumerate() {
                for &b in &class[i + 1..] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Pairs `(rep, member)` spanning every class; closing them gives back
    /// `self`.
    pub fn generators(&self) -> Vec<(u32, u32)> {
        self.rep
            .iter()
            .enumerate()
            .filter(|(i, &r)| r as usize != *i)
            .map(|(i, &r)| (r, i as u32))
            .collect()
    }

    /// `self ⊆ other` as pair sets.
    pub fn is_subset_of(&self, other: &EquivRel) -> bool {
        self.rep.len() == other.rep.len()
            && self
                .rep
                .iter()
                .enumerate()
                .all(|(i, &r)| other.rep[i] == other.rep[r as usize])
    }

    /// Finest relation containing both.
    pub fn join(&self, other: &EquivRel) -> Result<EquivRel> {
        self.with_pairs(other.generators())
    }
}

impl fmt::Debug for EquivRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let classes: Vec<_> = self.classes().into_iter().filter(|c| c.len() > 1).collect();
        write!(f, "EquivRel({}; {:?})", self.rep.len(), classes)
    }
}

/// A pair of objects or of cells, stored unordered (smaller index first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MergePair {
    Objects(ObjectId, ObjectId),
    Cells(CellId, CellId),
}

impl MergePair {
    pub fn objects(a: ObjectId, b: ObjectId) -> Self {
        if a <= b {
            MergePair::Objects(a, b)
        } else {
            MergePair::Objects(b, a)
        }
    }

    pub fn cells(a: CellId, b: CellId) -> Self {
        if a <= b {
            MergePair::Cells(a, b)
        } else {
            MergePair::Cells(b, a)
        }
    }

    pub fn is_reflexive(&self) -> bool {
        match *self {
            MergePair::Objects(a, b) => a == b,
            MergePair::Cells(a, b) => a == b,
        }
    }

    pub fn is_object(&self) -> bool {
        matches!(self, MergePair::Objects(..))
    }

    /// Human-readable form: `(a1, a2)` or `(t1.2, t2.2)`, members in text
    /// order.
    pub fn render(&self, db: &Database) -> String {
        let (mut a, mut b) = match *self {
            MergePair::Objects(x, y) => (db.object_text(x).to_string(), db.object_text(y).to_string()),
            MergePair::Cells(x, y) => (db.cell_label(x), db.cell_label(y)),
        };
        if b < a {
            std::mem::swap(&mut a, &mut b);
        }
        format!("({a}, {b})")
    }
}

/// A pair `<E, V>` with `E` over `Obj(D)` and `V` over `Cells(D)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Candidate {
    pub objects: EquivRel,
    pub cells: EquivRel,
}

impl Candidate {
    pub fn identity(db: &Database) -> Self {
        Candidate {
            objects: EquivRel::identity(db.objects().len()),
            cells: EquivRel::identity(db.cells().len()),
        }
    }

    pub fn new(objects: EquivRel, cells: EquivRel) -> Self {
        Candidate { objects, cells }
    }

    /// Closes the given generator pairs over the universes of `db`.
    pub fn from_pairs<I>(db: &Database, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = MergePair>,
    {
        Candidate::identity(db).with_pairs(pairs)
    }

    pub fn with_pairs<I>(&self, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = MergePair>,
    {
        let mut obj = Vec::new();
        let mut cell = Vec::new();
        for p in pairs {
            match p {
                MergePair::Objects(a, b) => obj.push((a.0, b.0)),
                MergePair::Cells(a, b) => cell.push((a.0, b.0)),
            }
        }
        Ok(Candidate {
            objects: self.objects.with_pairs(obj)?,
            cells: self.cells.with_pairs(cell)?,
        })
    }

    pub fn with_pair(&self, p: MergePair) -> Result<Self> {
        self.with_pairs([p])
    }

    pub fn contains(&self, p: MergePair) -> bool {
        match p {
            MergePair::Objects(a, b) => self.objects.related(a.0, b.0),
            MergePair::Cells(a, b) => self.cells.related(a.0, b.0),
        }
    }

    /// `E ∪ V ⊆ E' ∪ V'`.
    pub fn is_subset_of(&self, other: &Candidate) -> bool {
        self.objects.is_subset_of(&other.objects) && self.cells.is_subset_of(&other.cells)
    }

    /// `|E| + |V|`, ordered pairs with reflexive ones.
    pub fn pair_count(&self) -> usize {
        self.objects.pair_count() + self.cells.pair_count()
    }

    pub fn is_identity(&self) -> bool {
        self.objects.is_identity() && self.cells.is_identity()
    }

    /// Non-reflexive merges of both relations.
    pub fn merge_pairs(&self) -> Vec<MergePair> {
        let mut out: Vec<MergePair> = self
            .objects
            .pairs()
            .into_iter()
            .map(|(a, b)| MergePair::Objects(ObjectId(a), ObjectId(b)))
            .collect();
        out.extend(
            self.cells
                .pairs()
                .into_iter()
                .map(|(a, b)| MergePair::Cells(CellId(a), CellId(b))),
        );
        out
    }

    /// Spanning generators in text order: each class is listed as pairs
    /// from its textually smallest member. Object pairs come first.
    pub fn canonical_generators(&self, db: &Database) -> Vec<MergePair> {
        let mut out = Vec::new();
        for class in self.objects.classes() {
            let mut members: Vec<(&str, u32)> =
                class.iter().map(|&o| (db.object_text(ObjectId(o)), o)).collect();
            members.sort();
            for &(_, o) in &members[1..] {
                out.push(MergePair::objects(ObjectId(members[0].1), ObjectId(o)));
            }
        }
        let mut obj_keys: Vec<(String, MergePair)> = out.drain(..).map(|p| (pair_key(db, p), p)).collect();
        obj_keys.sort();
        let mut cell_keys = Vec::new();
        for class in self.cells.classes() {
            let mut members: Vec<(String, u32)> = class
                .iter()
                .map(|&c| (db.cell_label(CellId(c)), c))
                .collect();
            members.sort();
            for (_, c) in &members[1..] {
                let p = MergePair::cells(CellId(members[0].1), CellId(*c));
                cell_keys.push((pair_key(db, p), p));
            }
        }
        cell_keys.sort();
        obj_keys
            .into_iter()
            .chain(cell_keys)
            .map(|(_, p)| p)
            .collect()
    }

    /// Ordering key used for deterministic output: the sorted list of
    /// canonical generator texts.
    pub fn sort_key(&self, db: &Database) -> Vec<String> {
        self.canonical_generators(db)
            .into_iter()
            .map(|p| pair_key(db, p))
            .collect()
    }
}

fn pair_key(db: &Database, p: MergePair) -> String {
    match p {
        MergePair::Objects(..) => format!("o {}", p.render(db)),
        MergePair::Cells(..) => format!("v {}", p.render(db)),
    }
}
