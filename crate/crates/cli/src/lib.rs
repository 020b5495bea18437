//! Config parsing and run orchestration behind the `hesseig` binary.

pub mod config;
pub mod run;
