//! Exact algebraic engine for stratified complex Lie algebras and their groups.

mod algebra;
mod bch;
mod group;
mod htype;

pub use algebra::{BracketSpec, GroupSpec, LawViolation, StratifiedAlgebra, StructureConstant};
pub use bch::{DynkinTable, DynkinWord, Letter};
pub use group::GroupElement;
pub use htype::{HTypeFailure, HTypeOutcome, HorizontalFrame, RealInnerProduct};
