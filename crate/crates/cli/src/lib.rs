//! Command-line front end: the sequence DSL and the `aar` binary.

pub mod dsl;
