//! Model and formula parsers, canonical printing, trace serialization and the
//! command line interface.

pub mod cli;
pub mod formula;
pub mod lexer;
pub mod model;
pub mod printer;
pub mod trace_json;

pub use lexer::ParseError;
pub use model::{parse_model, ModelDocument, ModelFileError};
