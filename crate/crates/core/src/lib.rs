//! Ivy: question answering over Task-Method-Knowledge models.

pub mod classify;
pub mod cli;
pub mod eval;
pub mod generation;
pub mod prompts;
pub mod providers;
pub mod retrieval;
pub mod service;
pub mod sim;
pub mod text;
pub mod tmk;
