//! Lie-Rinehart pairs over exact coefficient rings: obstruction classes for
//! lifting connections and truncated relative PBW isomorphisms.

pub mod algebroid;
pub mod catalog;
pub mod envelope;
pub mod error;
pub mod linalg;
pub mod modcat;
pub mod neighborhood;
pub mod obstruction;
pub mod oracle;
pub mod pbwiso;
pub mod rewrite;
pub mod ring;
pub mod validation;

pub use error::{Error, Result};
