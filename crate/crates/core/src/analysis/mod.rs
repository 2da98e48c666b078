//! Propositions, temporal formulas, state graphs and model checking.

pub mod buchi;
pub mod formula;
pub mod graph;
pub mod lasso;
pub mod ltl;
pub mod prop;
pub mod search;

pub use formula::{desugar_scope, Formula};
pub use graph::{build_state_graph, Bound, EdgeKind, GraphError, GraphOptions, StateGraph};
pub use ltl::{ltl_check, CexStep, Counterexample, Verdict};
pub use prop::{prop_holds, PropError, Proposition};
pub use search::search;
