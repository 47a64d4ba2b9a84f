//! Cesàro averages of rearranged sequences: classification of reachable limits,
//! explicit rearrangement constructions, and exact verification tools.

pub mod interval;
pub mod num;
pub mod seq;
pub mod balance;
pub mod classify;
pub mod construct;
pub mod verify;
