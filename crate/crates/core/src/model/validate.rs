use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::actor::{ActorKind, ActorNode, ActorPath, Container, PortOwner, PortRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub actor: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.actor, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "invalid model: {}", msgs.join("; "))
    }
}

struct Checker {
    errors: Vec<ValidationError>,
}

impl Checker {
    fn err(&mut self, path: &ActorPath, msg: impl Into<String>) {
        self.errors.push(ValidationError {
            actor: path.to_string(),
            message: msg.into(),
        });
    }
}

/// Structural well-formedness of a model tree.
pub fn validate(top: &ActorNode) -> Result<(), ValidationErrors> {
    let mut ck = Checker { errors: Vec::new() };
    let root = ActorPath::root(&top.name);
    if !matches!(top.kind, ActorKind::Composite(_)) {
        ck.err(&root, "top-level actor must be a composite");
    }
    check_node(&mut ck, top, &root, None, false);
    if ck.errors.is_empty() {
        Ok(())
    } else {
        Err(ValidationErrors(ck.errors))
    }
}

fn check_node(
    ck: &mut Checker,
    node: &ActorNode,
    path: &ActorPath,
    enclosing_vars: Option<&BTreeMap<String, super::Value>>,
    is_controller: bool,
) {
    if node.ports.coupled().next().is_some() && !is_controller {
        ck.err(
            path,
            "coupled input/output ports are only allowed on a modal controller",
        );
    }
    match &node.kind {
        ActorKind::Clock(c) => {
            if c.period.is_zero() {
                ck.err(path, "clock period must be positive");
            }
        }
        ActorKind::TimedDelay { .. } => {}
        ActorKind::SetVariable { target } => match enclosing_vars {
            Some(vars) if vars.contains_key(target) => {}
            _ => ck.err(
                path,
                format!(
                    "set-variable target `{target}` is not a variable of the enclosing composite"
                ),
            ),
        },
        ActorKind::Fsm(fsm) => {
            if !fsm.locations.contains(&fsm.initial) {
                ck.err(
                    path,
                    format!("initial location `{}` is not declared", fsm.initial),
                );
            }
            if !fsm.locations.contains(&fsm.current) {
                ck.err(
                    path,
                    format!("current location `{}` is not declared", fsm.current),
                );
            }
            for t in &fsm.transitions {
                for loc in [&t.src, &t.dst] {
                    if !fsm.locations.contains(loc) {
                        ck.err(
                            path,
                            format!("transition refers to undeclared location `{loc}`"),
                        );
                    }
                }
                let mut exprs = vec![&t.guard];
                exprs.extend(t.outputs.values());
                exprs.extend(t.sets.values());
                for e in exprs {
                    for p in e.referenced_ports() {
                        if !node.ports.inputs.contains_key(p) {
                            ck.err(
                                path,
                                format!("expression reads `{p}`, which is not an input port"),
                            );
                        }
                    }
                    for v in e.referenced_vars() {
                        if !fsm.initial_variables.contains_key(v)
                            && !node.parameters.contains_key(v)
                        {
                            ck.err(path, format!("expression reads undeclared variable `{v}`"));
                        }
                    }
                }
                for p in t.outputs.keys() {
                    if !node.ports.outputs.contains_key(p) {
                        ck.err(
                            path,
                            format!("transition writes `{p}`, which is not an output port"),
                        );
                    }
                }
                for v in t.sets.keys() {
                    if !fsm.initial_variables.contains_key(v) {
                        ck.err(path, format!("transition sets undeclared variable `{v}`"));
                    }
                }
            }
        }
        ActorKind::Composite(body) => {
            check_container(ck, node, path, body, None);
        }
        ActorKind::Modal(m) => {
            check_container(ck, node, path, &m.body, Some(&m.controller));
            match m.body.inner.get(&m.controller) {
                Some(ActorNode {
                    kind: ActorKind::Fsm(fsm),
                    ports,
                    ..
                }) => {
                    let locs: BTreeSet<&String> = fsm.locations.iter().collect();
                    let mapped: BTreeSet<&String> = m.refinements.keys().collect();
                    for loc in locs.difference(&mapped) {
                        ck.err(
                            path,
                            format!("refinement map has no entry for location `{loc}`"),
                        );
                    }
                    for loc in mapped.difference(&locs) {
                        ck.err(
                            path,
                            format!("refinement map names unknown location `{loc}`"),
                        );
                    }
                    for out in node.ports.outputs.keys() {
                        if !(ports.inputs.contains_key(out) && ports.outputs.contains_key(out)) {
                            ck.err(
                                path,
                                format!(
                                    "modal output `{out}` has no coupled port on the controller"
                                ),
                            );
                        }
                    }
                }
                _ => ck.err(
                    path,
                    format!("controller `{}` is not an inner FSM", m.controller),
                ),
            }
            let refs: BTreeSet<&String> = m.refinements.values().collect();
            for r in &refs {
                if **r == m.controller {
                    ck.err(path, "the controller cannot be a refinement");
                } else if !m.body.inner.contains_key(*r) {
                    ck.err(path, format!("refinement `{r}` is not an inner actor"));
                }
            }
            for name in m.body.inner.keys() {
                if *name != m.controller && !refs.contains(name) {
                    ck.err(
                        path,
                        format!("inner actor `{name}` is neither the controller nor a refinement"),
                    );
                }
            }
        }
    }
}

fn check_container(
    ck: &mut Checker,
    node: &ActorNode,
    path: &ActorPath,
    body: &Container,
    controller: Option<&String>,
) {
    let is_modal = controller.is_some();
    let refinements: BTreeSet<&String> = match &node.kind {
        ActorKind::Modal(m) => m.refinements.values().collect(),
        _ => BTreeSet::new(),
    };
    let mut writers: BTreeMap<&PortRef, Vec<&PortRef>> = BTreeMap::new();
    for c in &body.connections {
        match &c.source.owner {
            PortOwner::Parent => {
                if !node.ports.inputs.contains_key(&c.source.port) {
                    ck.err(path, format!("dangling connection source `{}`", c.source));
                }
            }
            PortOwner::Actor(a) => match body.inner.get(a) {
                Some(inner) if inner.ports.outputs.contains_key(&c.source.port) => {}
                _ => ck.err(path, format!("dangling connection source `{}`", c.source)),
            },
        }
        if c.sinks.is_empty() {
            ck.err(path, format!("connection from `{}` has no sinks", c.source));
        }
        for s in &c.sinks {
            match &s.owner {
                PortOwner::Parent => {
                    if is_modal {
                        ck.err(
                            path,
                            format!(
                                "modal outputs are driven by the controller; remove sink `{s}`"
                            ),
                        );
                    } else if !node.ports.outputs.contains_key(&s.port) {
                        ck.err(path, format!("dangling connection sink `{s}`"));
                    }
                }
                PortOwner::Actor(a) => match body.inner.get(a) {
                    Some(inner) if inner.ports.inputs.contains_key(&s.port) => {}
                    _ => ck.err(path, format!("dangling connection sink `{s}`")),
                },
            }
            writers.entry(s).or_default().push(&c.source);
        }
    }
    for (sink, ws) in writers {
        if ws.len() < 2 {
            continue;
        }
        let into_controller = matches!(&sink.owner, PortOwner::Actor(a) if Some(a) == controller);
        let distinct: BTreeSet<&PortOwner> = ws.iter().map(|w| &w.owner).collect();
        let all_refinements = ws
            .iter()
            .all(|w| matches!(&w.owner, PortOwner::Actor(a) if refinements.contains(a)));
        if !(into_controller && all_refinements && distinct.len() == ws.len()) {
            ck.err(path, format!("input `{sink}` has more than one writer"));
        }
    }
    for (name, child) in &body.inner {
        check_node(
            ck,
            child,
            &path.child(name),
            Some(&body.initial_variables),
            controller == Some(name),
        );
    }
}
