//! Text front end for `jumprelax-core`: the assembly dialect, listings,
//! scaling benchmarks and the `jumprelax` command.

pub mod bench;
pub mod cli;
pub mod listing;
pub mod parser;

pub use parser::{format, parse, ParseError};
