//! Compiler toolchain for the Tea gateway description language.
//!
//! - [`frontend`]: tokens, syntax tree, parser and tree dumps
//! - [`semantics`]: name resolution, type checking and model validation
//! - [`runtime`]: tree-walking interpreter for api blocks over a pluggable transport
//! - [`codegen`]: SDK emitters (Python and TypeScript)
//! - [`analyzer`]: parameter-level diffing of API call logs and governance quadrants

pub mod analyzer;
pub mod codegen;
pub mod frontend;
pub mod num;
pub mod runtime;
pub mod semantics;
pub mod value;

pub use frontend::{parse_source, SyntaxTree};
