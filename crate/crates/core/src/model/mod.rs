//! Model domain types: values, expressions and the actor tree.

mod actor;
mod expr;
mod validate;
mod value;

pub use actor::{
    ActorKind, ActorNode, ActorPath, ClockSpec, Connection, Container, Fsm, GlobalPort, Modal,
    ModelError, PortOwner, PortRef, PortStatus, Ports, Side, Status, Transition, CLOCK_OUTPUT,
    DELAY_INPUT, DELAY_OUTPUT, SETVAR_INPUT,
};
pub use expr::{guard_evaluable, BinaryOp, Env, EvalError, Expression, UnaryOp};
pub use validate::{validate, ValidationError, ValidationErrors};
pub use value::{TimeError, TimeVal, Value};
