pub mod arith;
pub mod bsd_oracle;
pub mod catalog;
pub mod error;
pub mod qseries;
pub mod sieve;
pub mod stats;
pub mod survey;
pub mod waldspurger;

pub use error::{Error, Result};
