//! Independent reference solutions used to check the main solvers.

pub mod enumeration;
pub mod heat;
pub mod ladder;
pub mod suite;

pub use enumeration::{check_enumeration, EnumerationReport, StageCheck};
pub use ladder::{max_relative_error, solve_ladder, Anchor, LadderSolution};
