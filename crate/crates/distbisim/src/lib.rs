//! Distribution-based probabilistic bisimulation toolkit.
//!
//! The crate decides equivalence of probability distributions over the
//! states of finite probabilistic automata via an exact matrix-fixpoint
//! algorithm, and location bisimilarity of deterministic stochastic automata
//! over exponential clocks via a finite symbolic abstraction and a tableau
//! proof search. Continuous-time Markov chains embed into stochastic
//! automata, and both models compose in parallel, so the embedding/composition
//! commutation property is directly checkable.

pub mod abstraction;
pub mod ct;
pub mod exactlin;
pub mod expoly;
pub mod bisim;
pub mod pa;
pub mod pomdp;
pub mod tableau;

pub use exactlin::Rat;
