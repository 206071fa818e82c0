//! Decision-model toolkit: ingestion, execution, simplification and
//! structural and behavioural comparison of DMN-style decision graphs.

pub mod analytics;
pub mod cli;
pub mod engine;
pub mod genharness;
pub mod ingest;
pub mod model;
pub mod outcome;
pub mod pipeline;
pub mod simplify;
pub mod structeval;
pub mod synth;
pub mod unary;
pub mod validate;
pub mod value;

pub use engine::{execute, Assignment, ExecMode, ExecutionResult};
pub use model::{DecisionGraph, DecisionTable, Edge, HitPolicy, ModelType, Node, NodeKind, Rule};
pub use unary::UnaryTest;
pub use value::{Value, ValueType};
