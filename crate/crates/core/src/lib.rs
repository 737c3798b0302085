//! Symbolic ReAct trajectory toolkit: first-order logic, finite-model
//! verification, trajectory parsing and Monte Carlo process supervision.

pub mod fol;
pub mod label;
pub mod llm;
pub mod problems;
pub mod rules;
pub mod semantics;
pub mod supervision;
pub mod trajectory;

pub use label::Label;
