//! Executable sheaf semantics over finite sites.
//!
//! Sheafification and W-types over finite Grothendieck sites, plus a universe of forcing
//! names with a Kripke–Joyal evaluator.

pub mod arrows;
pub mod category;
pub mod coverage;
pub mod exec;
pub mod gen;
pub mod io;
pub mod mvs;
pub mod names;
pub mod psh;
pub mod shf;
pub mod wty;

pub use arrows::ArrowSet;
pub use category::{Arr, FiniteCategory, Obj};
pub use coverage::{Sieve, Topology};
