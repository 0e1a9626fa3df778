pub mod deriv;
pub mod error;
pub mod exec;
pub mod gauss;
pub mod gf;
pub mod harness;
pub mod kwise;
pub mod poly;
pub mod prg;
pub mod report;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
