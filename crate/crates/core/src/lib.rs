//! Rule-based collective entity resolution with global object merges and
//! local value merges.
//!
//! A [`Specification`] of hard and soft merge rules plus denial constraints
//! is evaluated over a [`Database`]; an [`Engine`] computes active pairs,
//! checks candidate solutions, and the [`solver`] enumerates solutions and
//! decides optimality under each criterion.

pub mod dsl;
pub mod equiv;
pub mod error;
pub mod extend;
pub mod fixtures;
pub mod gadgets;
pub mod io;
pub mod metrics;
pub mod model;
pub mod query;
pub mod semantics;
pub mod similarity;
pub mod solver;

pub use dsl::{parse_spec, parse_spec_with_schema, validate_rule_shapes, Specification};
pub use equiv::{Candidate, EquivRel, MergePair};
pub use error::{Error, Result};
pub use extend::ExtendedDatabase;
pub use model::{AttrType, Constant, Database, DatabaseBuilder, RelationDecl, Schema, Sort};
pub use semantics::{ActiveEntry, Comparison, Criterion, CriterionSets, Engine};
pub use similarity::SimilarityStore;
pub use solver::{RecognitionResult, SearchConfig};
