//! Correlations of arithmetic functions over F_q[x].

pub mod arith;
pub mod correlation;
pub mod error;
pub mod field;
pub mod gf2;
pub mod main_term;
pub mod sieve;
pub mod stats;

pub use arith::{AdditiveSpec, Flags, FunctionSpec};
pub use correlation::{correlate, crt_count, CorrelationReport, CorrelationSpec, Domain, RawSum};
pub use error::{Error, Result};
pub use field::{all_monic, enumerate_monic, parse_poly, FieldSpec, MonicRange, Poly};
pub use main_term::{Horizon, MainTermOptions, Mode, ShiftPair, TruncatedValue, Valuation};
pub use sieve::{Factorization, IrreducibleTable, NecklaceReport, Prime, PrimePower};
