//! Format-aware fuzzing from binary templates.
//!
//! A template is interpreted either as a generator, driven by a decision
//! seed, or as a parser that recovers the seed for a given file. Seeds can
//! then be mutated chunk by chunk.

pub mod decisionstream;
pub mod engine;
pub mod formats;
pub mod mutation;
pub mod runtime;
pub mod templatelang;
