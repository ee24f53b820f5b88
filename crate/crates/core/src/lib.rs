//! Maltsev conditions for finite algebras, and a symbolic engine that turns
//! Jónsson (or Gumm) chains into directed chains with replayable
//! certificates.

pub mod algebra;
pub mod cert;
pub mod chain;
pub mod cli;
pub mod deciders;
pub mod engine;
pub mod models;
pub mod term;
