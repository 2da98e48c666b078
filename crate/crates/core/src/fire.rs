//! Fire phase: port clearing, event delivery and the monotone port fixed
//! point across composite and modal boundaries.
//!
//! The fixed point is computed by repeatedly enumerating every applicable
//! propagation step ([`Update`]) and applying one of them. Each update only
//! moves `Unknown` ports to a known status, so a run performs at most as many
//! updates as there are ports. The default strategy applies the deepest
//! pending update first, which gives inner actors priority over their
//! containers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{
    guard_evaluable, ActorKind, ActorNode, ActorPath, Container, Env, EvalError, Fsm, GlobalPort,
    ModelError, PortOwner, PortRef, PortStatus, Side, Transition, Value,
};
use crate::queue::Event;

/// A port addressed globally, including its side (coupled controller ports
/// share a name between input and output).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortAddr {
    pub actor: ActorPath,
    pub side: Side,
    pub port: String,
}

impl PortAddr {
    pub fn new(actor: ActorPath, side: Side, port: &str) -> Self {
        PortAddr {
            actor,
            side,
            port: port.to_string(),
        }
    }
}

impl fmt::Display for PortAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Input => "in",
            Side::Output => "out",
        };
        write!(f, "{}!{} ({side})", self.actor, self.port)
    }
}

impl fmt::Debug for PortAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Propagation rules of the fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Known output copied along a connection to a sibling input.
    Connection,
    /// Input (or composite output) with no writer at all.
    Unconnected,
    /// Delay output with no delivered event.
    DelayAbsent,
    /// Clock output with no delivered event.
    ClockAbsent,
    /// FSM with exactly one enabled transition.
    FsmFire,
    /// FSM that provably takes no transition.
    FsmAbsent,
    /// Composite input copied to an inner input.
    CompositeInward,
    /// Inner output copied to a composite output.
    CompositeOutward,
    /// Every writer of a port belongs to a disabled actor.
    Freeze,
    /// Controller output resolved from its coupled input.
    CoupledCopy,
    /// Controller coupled output copied to the modal model's output.
    CoupledToParent,
}

/// One applicable propagation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub rule: Rule,
    /// Hierarchy depth of the ports written; the default strategy prefers
    /// deeper updates.
    pub depth: usize,
    pub assignments: Vec<(PortAddr, PortStatus)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FixpointDiagnostics {
    /// Ports of enabled actors left `Unknown` (causality cycle).
    pub unknown_ports: BTreeSet<PortAddr>,
    /// Number of updates applied.
    pub iterations: usize,
    /// FSMs with more than one enabled transition.
    pub conflicts: BTreeSet<ActorPath>,
}

impl FixpointDiagnostics {
    pub fn is_bottom_free(&self) -> bool {
        self.unknown_ports.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FireError {
    #[error("in actor `{actor}`: {source}")]
    Eval { actor: ActorPath, source: EvalError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("guard of `{actor}` evaluated to {found}, expected a boolean")]
    NonBooleanGuard { actor: ActorPath, found: Value },
}

/// Sets every port in the subtree, enabled or not, to `Unknown`.
pub fn clear_ports(a: &mut ActorNode) {
    a.walk_mut(|_, node| node.ports.clear());
}

/// Marks each event's target output port `Present`. Returns the targets that
/// lie inside a disabled subtree; those deliveries are inert.
pub fn deliver_events(
    top: &mut ActorNode,
    events: &[Event],
) -> Result<Vec<GlobalPort>, ModelError> {
    let mut frozen = Vec::new();
    for ev in events {
        if !top.effectively_enabled(&ev.target.actor)? {
            frozen.push(ev.target.clone());
        }
        let node = top.resolve_mut(&ev.target.actor)?;
        let port =
            node.ports
                .outputs
                .get_mut(&ev.target.port)
                .ok_or_else(|| ModelError::NoSuchPort {
                    actor: ev.target.actor.to_string(),
                    port: ev.target.port.clone(),
                })?;
        *port = PortStatus::Present(ev.value.clone());
    }
    Ok(frozen)
}

/// Outcome of evaluating an FSM's outgoing transitions against the current
/// port knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsmDecision<'a> {
    /// Not enough port knowledge yet.
    Pending,
    /// No transition will be taken in this iteration.
    Silent,
    Fire(&'a Transition),
    Conflict(Vec<&'a Transition>),
}

pub fn fsm_decision<'a>(
    path: &ActorPath,
    node: &ActorNode,
    fsm: &'a Fsm,
) -> Result<FsmDecision<'a>, FireError> {
    let inputs = &node.ports.inputs;
    let any_present = inputs.values().any(PortStatus::is_present);
    let all_known = inputs.values().all(PortStatus::is_known);
    if all_known && !any_present {
        return Ok(FsmDecision::Silent);
    }
    if !any_present {
        return Ok(FsmDecision::Pending);
    }
    let outgoing: Vec<&Transition> = fsm.outgoing().collect();
    if !outgoing.iter().all(|t| guard_evaluable(&t.guard, inputs)) {
        return Ok(FsmDecision::Pending);
    }
    let env = Env {
        vars: &fsm.variables,
        params: &node.parameters,
        ports: inputs,
    };
    let mut enabled = Vec::new();
    for t in outgoing {
        let v = t.guard.eval(&env).map_err(|source| FireError::Eval {
            actor: path.clone(),
            source,
        })?;
        match v {
            Value::Bool(true) => enabled.push(t),
            Value::Bool(false) => {}
            other => {
                return Err(FireError::NonBooleanGuard {
                    actor: path.clone(),
                    found: other,
                })
            }
        }
    }
    Ok(match enabled.len() {
        0 if all_known => FsmDecision::Silent,
        0 => FsmDecision::Pending,
        1 => FsmDecision::Fire(enabled[0]),
        _ => FsmDecision::Conflict(enabled),
    })
}

struct Collector {
    updates: Vec<Update>,
    conflicts: BTreeSet<ActorPath>,
}

impl Collector {
    fn push(&mut self, rule: Rule, depth: usize, assignments: Vec<(PortAddr, PortStatus)>) {
        if !assignments.is_empty() {
            self.updates.push(Update {
                rule,
                depth,
                assignments,
            });
        }
    }
}

/// Every propagation step applicable to `top` right now, plus the FSMs whose
/// guards conflict.
pub fn pending_updates(top: &ActorNode) -> Result<(Vec<Update>, BTreeSet<ActorPath>), FireError> {
    let mut col = Collector {
        updates: Vec::new(),
        conflicts: BTreeSet::new(),
    };
    let root = ActorPath::root(&top.name);
    if top.is_enabled() {
        // the top level has no container to feed its inputs
        let unconnected: Vec<_> = top
            .ports
            .inputs
            .iter()
            .filter(|(_, s)| !s.is_known())
            .map(|(n, _)| {
                (
                    PortAddr::new(root.clone(), Side::Input, n),
                    PortStatus::Absent,
                )
            })
            .collect();
        col.push(Rule::Unconnected, 0, unconnected);
        collect_node(top, &root, 0, &mut col)?;
    }
    Ok((col.updates, col.conflicts))
}

/// `node` is effectively enabled.
fn collect_node(
    node: &ActorNode,
    path: &ActorPath,
    depth: usize,
    col: &mut Collector,
) -> Result<(), FireError> {
    let unknown_outputs = || {
        node.ports
            .outputs
            .iter()
            .filter(|(_, s)| !s.is_known())
            .map(|(n, _)| n.as_str())
    };
    match &node.kind {
        ActorKind::Clock(_) => {
            let a = unknown_outputs()
                .map(|n| {
                    (
                        PortAddr::new(path.clone(), Side::Output, n),
                        PortStatus::Absent,
                    )
                })
                .collect();
            col.push(Rule::ClockAbsent, depth, a);
        }
        ActorKind::TimedDelay { .. } => {
            let a = unknown_outputs()
                .map(|n| {
                    (
                        PortAddr::new(path.clone(), Side::Output, n),
                        PortStatus::Absent,
                    )
                })
                .collect();
            col.push(Rule::DelayAbsent, depth, a);
        }
        ActorKind::SetVariable { .. } => {}
        ActorKind::Fsm(fsm) => collect_fsm(node, fsm, path, depth, col)?,
        ActorKind::Composite(body) => {
            collect_container(node, body, path, depth, col);
            for (name, status) in &node.ports.outputs {
                if status.is_known() {
                    continue;
                }
                if let Some((s, rule)) = writer_status(node, body, &PortRef::parent(name)) {
                    let rule = if rule == Rule::Connection {
                        Rule::CompositeOutward
                    } else {
                        rule
                    };
                    col.push(
                        rule,
                        depth,
                        vec![(PortAddr::new(path.clone(), Side::Output, name), s)],
                    );
                }
            }
            for (name, child) in &body.inner {
                if child.is_enabled() {
                    collect_node(child, &path.child(name), depth + 1, col)?;
                }
            }
        }
        ActorKind::Modal(m) => {
            collect_container(node, &m.body, path, depth, col);
            if let Some(ctrl) = m.body.inner.get(&m.controller).filter(|c| c.is_enabled()) {
                for (name, status) in &node.ports.outputs {
                    if status.is_known() {
                        continue;
                    }
                    if let Some(s) = ctrl.ports.outputs.get(name).filter(|s| s.is_known()) {
                        col.push(
                            Rule::CoupledToParent,
                            depth,
                            vec![(PortAddr::new(path.clone(), Side::Output, name), s.clone())],
                        );
                    }
                }
            }
            for (name, child) in &m.body.inner {
                if child.is_enabled() {
                    collect_node(child, &path.child(name), depth + 1, col)?;
                }
            }
        }
    }
    Ok(())
}

/// Inputs of inner actors, resolved from their writers in `body`.
fn collect_container(
    node: &ActorNode,
    body: &Container,
    path: &ActorPath,
    depth: usize,
    col: &mut Collector,
) {
    for (name, child) in &body.inner {
        for (port, status) in &child.ports.inputs {
            if status.is_known() {
                continue;
            }
            if let Some((s, rule)) = writer_status(node, body, &PortRef::actor(name, port)) {
                col.push(
                    rule,
                    depth + 1,
                    vec![(PortAddr::new(path.child(name), Side::Input, port), s)],
                );
            }
        }
    }
}

/// Status delivered to `sink` by its writers, if already determined.
///
/// Writers owned by disabled actors count as absent; a sink whose writers are
/// all disabled (or that has none) is absent.
fn writer_status(node: &ActorNode, body: &Container, sink: &PortRef) -> Option<(PortStatus, Rule)> {
    let writers: Vec<&PortRef> = body.writers_of(sink).collect();
    if writers.is_empty() {
        return Some((PortStatus::Absent, Rule::Unconnected));
    }
    let live = writers.iter().find(|w| match &w.owner {
        PortOwner::Parent => true,
        PortOwner::Actor(a) => body.inner.get(a).is_some_and(ActorNode::is_enabled),
    });
    let Some(w) = live else {
        return Some((PortStatus::Absent, Rule::Freeze));
    };
    let (status, rule) = match &w.owner {
        PortOwner::Parent => (node.ports.inputs.get(&w.port)?, Rule::CompositeInward),
        PortOwner::Actor(a) => (
            body.inner.get(a)?.ports.outputs.get(&w.port)?,
            Rule::Connection,
        ),
    };
    status.is_known().then(|| (status.clone(), rule))
}

fn collect_fsm(
    node: &ActorNode,
    fsm: &Fsm,
    path: &ActorPath,
    depth: usize,
    col: &mut Collector,
) -> Result<(), FireError> {
    if node.ports.outputs.values().all(PortStatus::is_known) {
        // outputs settled; still report a conflict once guards are evaluable
        if let FsmDecision::Conflict(_) = fsm_decision(path, node, fsm)? {
            col.conflicts.insert(path.clone());
        }
        return Ok(());
    }
    let decision = fsm_decision(path, node, fsm)?;
    let chosen = match decision {
        FsmDecision::Pending => return Ok(()),
        FsmDecision::Conflict(_) => {
            col.conflicts.insert(path.clone());
            return Ok(());
        }
        FsmDecision::Silent => None,
        FsmDecision::Fire(t) => {
            let ready = t
                .outputs
                .values()
                .all(|e| guard_evaluable(e, &node.ports.inputs));
            if !ready {
                return Ok(());
            }
            Some(t)
        }
    };
    let env = Env {
        vars: &fsm.variables,
        params: &node.parameters,
        ports: &node.ports.inputs,
    };
    let coupled: BTreeSet<&str> = node.ports.coupled().collect();
    let mut direct = Vec::new();
    for (name, status) in &node.ports.outputs {
        if status.is_known() {
            continue;
        }
        let addr = PortAddr::new(path.clone(), Side::Output, name);
        if let Some(e) = chosen.and_then(|t| t.outputs.get(name)) {
            let v = e.eval(&env).map_err(|source| FireError::Eval {
                actor: path.clone(),
                source,
            })?;
            direct.push((addr, PortStatus::Present(v)));
        } else if coupled.contains(name.as_str()) {
            let input = &node.ports.inputs[name];
            if input.is_known() {
                col.push(Rule::CoupledCopy, depth, vec![(addr, input.clone())]);
            }
        } else {
            direct.push((addr, PortStatus::Absent));
        }
    }
    let rule = if chosen.is_some() {
        Rule::FsmFire
    } else {
        Rule::FsmAbsent
    };
    col.push(rule, depth, direct);
    Ok(())
}

/// Applies one update. Panics if it would overwrite a known port: that would
/// break monotonicity and indicates a bug in rule enumeration.
pub fn apply_update(top: &mut ActorNode, update: &Update) -> Result<(), ModelError> {
    for (addr, status) in &update.assignments {
        let node = top.resolve_mut(&addr.actor)?;
        let slot = node
            .ports
            .side_mut(addr.side)
            .get_mut(&addr.port)
            .ok_or_else(|| ModelError::NoSuchPort {
                actor: addr.actor.to_string(),
                port: addr.port.clone(),
            })?;
        assert!(
            !slot.is_known(),
            "non-monotone update of {addr}: {slot} -> {status} by {:?}",
            update.rule
        );
        *slot = status.clone();
    }
    Ok(())
}

/// Deepest update first; ties broken by enumeration order.
pub fn deepest_first(updates: &[Update]) -> usize {
    let max = updates.iter().map(|u| u.depth).max().unwrap_or(0);
    updates.iter().position(|u| u.depth == max).unwrap_or(0)
}

/// Runs the fixed point with the default strategy.
pub fn compute_fixpoint(top: &mut ActorNode) -> Result<FixpointDiagnostics, FireError> {
    compute_fixpoint_with(top, &mut deepest_first)
}

/// Runs the fixed point, letting `choose` pick which pending update to apply
/// next. The result does not depend on the choice.
pub fn compute_fixpoint_with(
    top: &mut ActorNode,
    choose: &mut dyn FnMut(&[Update]) -> usize,
) -> Result<FixpointDiagnostics, FireError> {
    let mut diag = FixpointDiagnostics::default();
    loop {
        let (updates, conflicts) = pending_updates(top)?;
        diag.conflicts.extend(conflicts);
        if updates.is_empty() {
            break;
        }
        let i = choose(&updates).min(updates.len() - 1);
        apply_update(top, &updates[i])?;
        diag.iterations += 1;
    }
    diag.unknown_ports = residual_unknowns(top);
    Ok(diag)
}

/// Unknown ports of effectively enabled actors.
pub fn residual_unknowns(top: &ActorNode) -> BTreeSet<PortAddr> {
    let mut out = BTreeSet::new();
    top.walk(|path, node, enabled| {
        if !enabled {
            return;
        }
        for side in [Side::Input, Side::Output] {
            for (name, s) in node.ports.side(side) {
                if !s.is_known() {
                    out.insert(PortAddr::new(path.clone(), side, name));
                }
            }
        }
    });
    out
}

/// Replaces residual unknowns of enabled actors by `Absent`.
pub fn downgrade_unknowns(
    top: &mut ActorNode,
    ports: &BTreeSet<PortAddr>,
) -> Result<(), ModelError> {
    for addr in ports {
        let node = top.resolve_mut(&addr.actor)?;
        if let Some(s) = node.ports.side_mut(addr.side).get_mut(&addr.port) {
            if !s.is_known() {
                *s = PortStatus::Absent;
            }
        }
    }
    Ok(())
}

/// Port statuses of the effectively enabled part of the tree.
pub fn enabled_snapshot(top: &ActorNode) -> BTreeMap<PortAddr, PortStatus> {
    let mut out = BTreeMap::new();
    top.walk(|path, node, enabled| {
        if !enabled {
            return;
        }
        for side in [Side::Input, Side::Output] {
            for (name, s) in node.ports.side(side) {
                out.insert(PortAddr::new(path.clone(), side, name), s.clone());
            }
        }
    });
    out
}
