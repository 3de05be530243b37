//! `htcc`: compiles a small pure-functional language into Handel-C process
//! networks, with a reference evaluator and a channel-level simulator used to
//! differentially test every compilation.

pub mod frontend;
pub mod semantics;
pub mod eval;
pub mod refine;
pub mod emit;
pub mod simnet;
pub mod pipeline;
