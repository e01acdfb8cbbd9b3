//! Decimation (XOR-derivative) flows for Boolean functions.
//!
//! Decimating input `x_i` of `f` gives `f(x_i = 0) ^ f(x_i = 1)`, a function
//! of the remaining inputs. Repeating this sends a degree-`d` polynomial to
//! zero after `d + 1` steps, drives random tables towards density one half,
//! and keeps functions of the input sum (parity, majority, mod-p counters)
//! away from it. This crate provides the tables, the transforms, the flows,
//! a classifier built on them, near-polynomial detectors and the associated
//! counting bounds.

pub mod counting;
pub mod detector;
pub mod error;
pub mod families;
pub mod flow;
pub mod numeric;
pub mod rg;
pub mod symmetric;
pub mod truth_table;

pub use error::{Error, Result};
pub use rg::{annihilation_depth, decimate, decimate_seq, DecimationOrder};
pub use symmetric::SymmetricFunction;
pub use truth_table::{Anf, Density, Monomial, TruthTable, N_MAX};
