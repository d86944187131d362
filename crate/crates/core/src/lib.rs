//! An openCypher subset compiled to relational graph algebra and evaluated
//! with bag semantics over in-memory property graphs.
//!
//! The pipeline is [`parser::parse`] → [`compiler::compile`] →
//! [`eval::evaluate`]. [`algebra::render`] prints a compiled plan and
//! [`oracle::oracle_enumerate`] is a brute-force matcher used for
//! differential testing.

pub mod algebra;
pub mod cli;
pub mod compiler;
pub mod eval;
pub mod graph;
pub mod oracle;
pub mod parser;
pub mod value;

pub use graph::{load_graph, Direction, GraphError, PropertyGraph};
pub use value::{EdgeId, Value, VertexId};
