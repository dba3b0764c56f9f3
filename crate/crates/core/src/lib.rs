//! Clause-level semantic error detection and guided correction for
//! generated SQL.

pub mod aggregate;
pub mod catalog;
pub mod correct;
pub mod demo;
pub mod exec;
pub mod harness;
pub mod ident;
pub mod llm;
pub mod pipeline;
pub mod query;
pub mod report;
pub mod signals;
