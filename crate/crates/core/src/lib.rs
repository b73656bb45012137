//! Variational Poisson calculus over differential polynomial algebras.

pub mod complexes;
pub mod diffalg;
pub mod diffop;
pub mod error;
pub mod field;
pub mod lampoly;
pub mod lenard;
pub mod linsys;
pub mod polydiff;
pub mod pva;

pub use error::{Error, Result};
pub use field::FieldElem;
