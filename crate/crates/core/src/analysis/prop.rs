use std::collections::BTreeMap;
use std::fmt;

use crate::model::{ActorKind, ActorNode, ActorPath, Value};

/// Atomic state proposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Proposition {
    /// Every listed variable of the actor has the given value.
    Var {
        actor: ActorPath,
        assignments: BTreeMap<String, Value>,
    },
    /// The FSM (or the controller of the modal model) is in `location`.
    Loc { actor: ActorPath, location: String },
}

impl Proposition {
    pub fn actor(&self) -> &ActorPath {
        match self {
            Proposition::Var { actor, .. } | Proposition::Loc { actor, .. } => actor,
        }
    }

    pub fn with_prefix(&self, prefix: &ActorPath) -> Proposition {
        match self {
            Proposition::Var { actor, assignments } => Proposition::Var {
                actor: prefix.join(actor),
                assignments: assignments.clone(),
            },
            Proposition::Loc { actor, location } => Proposition::Loc {
                actor: prefix.join(actor),
                location: location.clone(),
            },
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposition::Var { actor, assignments } => {
                let parts: Vec<String> = assignments
                    .iter()
                    .map(|(k, v)| format!("{k} = {v}"))
                    .collect();
                write!(f, "{actor} | ({})", parts.join(", "))
            }
            Proposition::Loc { actor, location } => write!(f, "{actor} @ {location}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PropError {
    #[error("no such actor `{0}`")]
    NoSuchActor(ActorPath),
    #[error("actor `{actor}` has no variable or parameter `{var}`")]
    NoSuchVariable { actor: ActorPath, var: String },
    #[error("actor `{0}` is neither an FSM nor a modal model")]
    NotAnFsm(ActorPath),
    #[error("`{actor}` has no location `{location}`")]
    NoSuchLocation { actor: ActorPath, location: String },
}

/// Evaluates `p` against the committed state of `top`.
pub fn prop_holds(top: &ActorNode, p: &Proposition) -> Result<bool, PropError> {
    let node = top
        .resolve(p.actor())
        .map_err(|_| PropError::NoSuchActor(p.actor().clone()))?;
    match p {
        Proposition::Var { actor, assignments } => {
            let mut holds = true;
            for (var, want) in assignments {
                let got = node
                    .visible_variable(var)
                    .ok_or_else(|| PropError::NoSuchVariable {
                        actor: actor.clone(),
                        var: var.clone(),
                    })?;
                holds &= got == want;
            }
            Ok(holds)
        }
        Proposition::Loc { actor, location } => {
            let fsm = match &node.kind {
                ActorKind::Fsm(f) => f,
                ActorKind::Modal(m) => m
                    .body
                    .inner
                    .get(&m.controller)
                    .and_then(ActorNode::as_fsm)
                    .ok_or_else(|| PropError::NotAnFsm(actor.clone()))?,
                _ => return Err(PropError::NotAnFsm(actor.clone())),
            };
            if !fsm.locations.contains(location) {
                return Err(PropError::NoSuchLocation {
                    actor: actor.clone(),
                    location: location.clone(),
                });
            }
            Ok(fsm.current == *location)
        }
    }
}
