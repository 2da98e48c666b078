use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::expr::Expression;
use super::value::{TimeVal, Value};

/// Knowledge about a port within one iteration.
///
/// `Unknown` is the bottom of the knowledge order; `Present` and `Absent` are
/// incomparable maximal elements.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum PortStatus {
    #[default]
    Unknown,
    Present(Value),
    Absent,
}

impl PortStatus {
    pub fn is_known(&self) -> bool {
        !matches!(self, PortStatus::Unknown)
    }

    pub fn is_present(&self) -> bool {
        matches!(self, PortStatus::Present(_))
    }

    /// `self ⊑ other` in the knowledge order.
    pub fn refines_to(&self, other: &PortStatus) -> bool {
        matches!(self, PortStatus::Unknown) || self == other
    }
}

impl fmt::Display for PortStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortStatus::Unknown => write!(f, "unknown"),
            PortStatus::Present(v) => write!(f, "present({v})"),
            PortStatus::Absent => write!(f, "absent"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Input,
    Output,
}

/// Input and output ports of one actor. A name present on both sides is a
/// coupled port, which only a modal controller may declare.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ports {
    pub inputs: BTreeMap<String, PortStatus>,
    pub outputs: BTreeMap<String, PortStatus>,
}

impl Ports {
    pub fn with(inputs: &[&str], outputs: &[&str]) -> Self {
        Ports {
            inputs: inputs
                .iter()
                .map(|n| (n.to_string(), PortStatus::Unknown))
                .collect(),
            outputs: outputs
                .iter()
                .map(|n| (n.to_string(), PortStatus::Unknown))
                .collect(),
        }
    }

    pub fn side(&self, side: Side) -> &BTreeMap<String, PortStatus> {
        match side {
            Side::Input => &self.inputs,
            Side::Output => &self.outputs,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut BTreeMap<String, PortStatus> {
        match side {
            Side::Input => &mut self.inputs,
            Side::Output => &mut self.outputs,
        }
    }

    pub fn coupled(&self) -> impl Iterator<Item = &str> {
        self.outputs
            .keys()
            .filter(|k| self.inputs.contains_key(*k))
            .map(String::as_str)
    }

    pub fn clear(&mut self) {
        for s in self.inputs.values_mut().chain(self.outputs.values_mut()) {
            *s = PortStatus::Unknown;
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Global actor identifier, root first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorPath(Vec<String>);

impl ActorPath {
    pub fn root(name: &str) -> Self {
        ActorPath(vec![name.to_string()])
    }

    /// `None` for an empty segment list.
    pub fn new<S: Into<String>>(segments: impl IntoIterator<Item = S>) -> Option<Self> {
        let v: Vec<String> = segments.into_iter().map(Into::into).collect();
        (!v.is_empty()).then_some(ActorPath(v))
    }

    pub fn parse(s: &str) -> Option<Self> {
        let segs: Vec<&str> = s.split('.').map(str::trim).collect();
        if segs.iter().any(|s| s.is_empty()) {
            return None;
        }
        ActorPath::new(segs)
    }

    pub fn child(&self, name: &str) -> Self {
        let mut v = self.0.clone();
        v.push(name.to_string());
        ActorPath(v)
    }

    pub fn join(&self, suffix: &ActorPath) -> Self {
        let mut v = self.0.clone();
        v.extend(suffix.0.iter().cloned());
        ActorPath(v)
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> &str {
        self.0.last().expect("paths are non-empty")
    }

    pub fn parent(&self) -> Option<ActorPath> {
        (self.0.len() > 1).then(|| ActorPath(self.0[..self.0.len() - 1].to_vec()))
    }
}

impl fmt::Display for ActorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join("."))
    }
}

impl fmt::Debug for ActorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Owner of a connection endpoint inside one container.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortOwner {
    Parent,
    Actor(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub owner: PortOwner,
    pub port: String,
}

impl PortRef {
    pub fn parent(port: &str) -> Self {
        PortRef {
            owner: PortOwner::Parent,
            port: port.to_string(),
        }
    }

    pub fn actor(actor: &str, port: &str) -> Self {
        PortRef {
            owner: PortOwner::Actor(actor.to_string()),
            port: port.to_string(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.owner {
            PortOwner::Parent => write!(f, "parent.{}", self.port),
            PortOwner::Actor(a) => write!(f, "{a}.{}", self.port),
        }
    }
}

/// `source ==> sink1 ; sink2 ; ...`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Connection {
    pub source: PortRef,
    pub sinks: BTreeSet<PortRef>,
}

impl Connection {
    pub fn new(source: PortRef, sinks: impl IntoIterator<Item = PortRef>) -> Self {
        Connection {
            source,
            sinks: sinks.into_iter().collect(),
        }
    }
}

/// A port addressed globally: `actor ! port`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalPort {
    pub actor: ActorPath,
    pub port: String,
}

impl GlobalPort {
    pub fn new(actor: ActorPath, port: &str) -> Self {
        GlobalPort {
            actor,
            port: port.to_string(),
        }
    }
}

impl fmt::Display for GlobalPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.actor, self.port)
    }
}

impl fmt::Debug for GlobalPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: String,
    pub dst: String,
    pub guard: Expression,
    pub outputs: BTreeMap<String, Expression>,
    pub sets: BTreeMap<String, Expression>,
}

impl Transition {
    pub fn new(src: &str, dst: &str, guard: Expression) -> Self {
        Transition {
            src: src.to_string(),
            dst: dst.to_string(),
            guard,
            outputs: BTreeMap::new(),
            sets: BTreeMap::new(),
        }
    }

    pub fn output(mut self, port: &str, e: Expression) -> Self {
        self.outputs.insert(port.to_string(), e);
        self
    }

    pub fn set(mut self, var: &str, e: Expression) -> Self {
        self.sets.insert(var.to_string(), e);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Status {
    #[default]
    Enabled,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClockSpec {
    pub period: TimeVal,
    pub offset: TimeVal,
    pub emit: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fsm {
    pub locations: BTreeSet<String>,
    pub initial: String,
    pub current: String,
    pub initial_variables: BTreeMap<String, Value>,
    pub variables: BTreeMap<String, Value>,
    pub transitions: BTreeSet<Transition>,
}

impl Fsm {
    pub fn outgoing(&self) -> impl Iterator<Item = &Transition> {
        self.transitions
            .iter()
            .filter(move |t| t.src == self.current)
    }
}

/// Inner actors and wiring shared by composite actors and modal models.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Container {
    pub inner: BTreeMap<String, ActorNode>,
    pub connections: BTreeSet<Connection>,
    pub initial_variables: BTreeMap<String, Value>,
    pub variables: BTreeMap<String, Value>,
}

impl Container {
    /// Sources of every connection that writes `sink`.
    pub fn writers_of<'a>(&'a self, sink: &'a PortRef) -> impl Iterator<Item = &'a PortRef> + 'a {
        self.connections
            .iter()
            .filter(move |c| c.sinks.contains(sink))
            .map(|c| &c.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Modal {
    pub controller: String,
    /// controller location -> inner refinement actor
    pub refinements: BTreeMap<String, String>,
    pub body: Container,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ActorKind {
    Clock(ClockSpec),
    TimedDelay { delay: TimeVal },
    Fsm(Fsm),
    SetVariable { target: String },
    Composite(Container),
    Modal(Modal),
}

impl ActorKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            ActorKind::Clock(_) => "clock",
            ActorKind::TimedDelay { .. } => "delay",
            ActorKind::Fsm(_) => "fsm",
            ActorKind::SetVariable { .. } => "setvar",
            ActorKind::Composite(_) => "composite",
            ActorKind::Modal(_) => "modal",
        }
    }
}

pub const DELAY_INPUT: &str = "input";
pub const DELAY_OUTPUT: &str = "output";
pub const CLOCK_OUTPUT: &str = "output";
pub const SETVAR_INPUT: &str = "input";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActorNode {
    pub name: String,
    pub kind: ActorKind,
    pub ports: Ports,
    pub parameters: BTreeMap<String, Value>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("no such actor `{0}`")]
    NoSuchActor(String),
    #[error("no such port `{port}` on actor `{actor}`")]
    NoSuchPort { actor: String, port: String },
}

impl ActorNode {
    fn with_kind(name: &str, kind: ActorKind, ports: Ports) -> Self {
        ActorNode {
            name: name.to_string(),
            kind,
            ports,
            parameters: BTreeMap::new(),
            status: Status::Enabled,
        }
    }

    pub fn clock(name: &str, period: TimeVal, offset: TimeVal, emit: Value) -> Self {
        Self::with_kind(
            name,
            ActorKind::Clock(ClockSpec {
                period,
                offset,
                emit,
            }),
            Ports::with(&[], &[CLOCK_OUTPUT]),
        )
    }

    pub fn delay(name: &str, delay: TimeVal) -> Self {
        Self::with_kind(
            name,
            ActorKind::TimedDelay { delay },
            Ports::with(&[DELAY_INPUT], &[DELAY_OUTPUT]),
        )
    }

    pub fn set_variable(name: &str, target: &str) -> Self {
        Self::with_kind(
            name,
            ActorKind::SetVariable {
                target: target.to_string(),
            },
            Ports::with(&[SETVAR_INPUT], &[]),
        )
    }

    pub fn fsm(name: &str, ports: Ports, fsm: Fsm) -> Self {
        Self::with_kind(name, ActorKind::Fsm(fsm), ports)
    }

    pub fn composite(name: &str, ports: Ports, body: Container) -> Self {
        Self::with_kind(name, ActorKind::Composite(body), ports)
    }

    pub fn modal(name: &str, ports: Ports, modal: Modal) -> Self {
        Self::with_kind(name, ActorKind::Modal(modal), ports)
    }

    pub fn is_enabled(&self) -> bool {
        self.status == Status::Enabled
    }

    pub fn container(&self) -> Option<&Container> {
        match &self.kind {
            ActorKind::Composite(c) => Some(c),
            ActorKind::Modal(m) => Some(&m.body),
            _ => None,
        }
    }

    pub fn container_mut(&mut self) -> Option<&mut Container> {
        match &mut self.kind {
            ActorKind::Composite(c) => Some(c),
            ActorKind::Modal(m) => Some(&mut m.body),
            _ => None,
        }
    }

    pub fn as_fsm(&self) -> Option<&Fsm> {
        match &self.kind {
            ActorKind::Fsm(f) => Some(f),
            _ => None,
        }
    }

    /// Variable map visible to `actor | var = value` propositions:
    /// FSM and container variables overlaid on parameters.
    pub fn visible_variable(&self, name: &str) -> Option<&Value> {
        let vars = match &self.kind {
            ActorKind::Fsm(f) => Some(&f.variables),
            ActorKind::Composite(c) => Some(&c.variables),
            ActorKind::Modal(m) => Some(&m.body.variables),
            _ => None,
        };
        vars.and_then(|v| v.get(name))
            .or_else(|| self.parameters.get(name))
    }

    /// Node at `path`; the first segment must name `self`.
    pub fn resolve(&self, path: &ActorPath) -> Result<&ActorNode, ModelError> {
        let segs = path.segments();
        if segs[0] != self.name {
            return Err(ModelError::NoSuchActor(path.to_string()));
        }
        let mut node = self;
        for seg in &segs[1..] {
            node = node
                .container()
                .and_then(|c| c.inner.get(seg))
                .ok_or_else(|| ModelError::NoSuchActor(path.to_string()))?;
        }
        Ok(node)
    }

    pub fn resolve_mut(&mut self, path: &ActorPath) -> Result<&mut ActorNode, ModelError> {
        let segs = path.segments();
        if segs[0] != self.name {
            return Err(ModelError::NoSuchActor(path.to_string()));
        }
        let mut node = self;
        for seg in &segs[1..] {
            node = node
                .container_mut()
                .and_then(|c| c.inner.get_mut(seg))
                .ok_or_else(|| ModelError::NoSuchActor(path.to_string()))?;
        }
        Ok(node)
    }

    /// True iff the actor at `path` and all its ancestors are enabled.
    pub fn effectively_enabled(&self, path: &ActorPath) -> Result<bool, ModelError> {
        let mut node = self;
        if node.name != path.segments()[0] {
            return Err(ModelError::NoSuchActor(path.to_string()));
        }
        let mut enabled = node.is_enabled();
        for seg in &path.segments()[1..] {
            node = node
                .container()
                .and_then(|c| c.inner.get(seg))
                .ok_or_else(|| ModelError::NoSuchActor(path.to_string()))?;
            enabled &= node.is_enabled();
        }
        Ok(enabled)
    }

    pub fn port_status(
        &self,
        path: &ActorPath,
        side: Side,
        port: &str,
    ) -> Result<&PortStatus, ModelError> {
        self.resolve(path)?
            .ports
            .side(side)
            .get(port)
            .ok_or_else(|| ModelError::NoSuchPort {
                actor: path.to_string(),
                port: port.to_string(),
            })
    }

    /// Pre-order traversal with each actor's global path and effective status.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&ActorPath, &'a ActorNode, bool)) {
        fn go<'a>(
            node: &'a ActorNode,
            path: &ActorPath,
            parent_enabled: bool,
            f: &mut dyn FnMut(&ActorPath, &'a ActorNode, bool),
        ) {
            let enabled = parent_enabled && node.is_enabled();
            f(path, node, enabled);
            if let Some(c) = node.container() {
                for (name, child) in &c.inner {
                    go(child, &path.child(name), enabled, f);
                }
            }
        }
        go(self, &ActorPath::root(&self.name), true, &mut f);
    }

    pub fn walk_mut(&mut self, mut f: impl FnMut(&ActorPath, &mut ActorNode)) {
        fn go(
            node: &mut ActorNode,
            path: &ActorPath,
            f: &mut dyn FnMut(&ActorPath, &mut ActorNode),
        ) {
            f(path, node);
            if let Some(c) = node.container_mut() {
                for (name, child) in c.inner.iter_mut() {
                    go(child, &path.child(name), f);
                }
            }
        }
        let root = ActorPath::root(&self.name);
        go(self, &root, &mut f);
    }

    /// Number of ports in the whole subtree.
    pub fn port_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_, a, _| n += a.ports.len());
        n
    }

    /// Snapshot of every port status in the subtree, keyed by global address.
    pub fn port_snapshot(&self) -> BTreeMap<(ActorPath, Side, String), PortStatus> {
        let mut out = BTreeMap::new();
        self.walk(|path, a, _| {
            for side in [Side::Input, Side::Output] {
                for (name, s) in a.ports.side(side) {
                    out.insert((path.clone(), side, name.clone()), s.clone());
                }
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ActorNode {
        let mut inner = Container::default();
        inner
            .inner
            .insert("D".into(), ActorNode::delay("D", TimeVal::from_integer(1)));
        let mid = ActorNode::composite("Mid", Ports::with(&["in"], &[]), inner);
        let mut top_body = Container::default();
        top_body.inner.insert("Mid".into(), mid);
        ActorNode::composite("Top", Ports::default(), top_body)
    }

    #[test]
    fn resolve_paths() {
        let top = sample();
        assert_eq!(top.resolve(&ActorPath::root("Top")).unwrap().name, "Top");
        let d = top
            .resolve(&ActorPath::new(["Top", "Mid", "D"]).unwrap())
            .unwrap();
        assert!(matches!(d.kind, ActorKind::TimedDelay { .. }));
        assert_eq!(
            top.resolve(&ActorPath::new(["Top", "Bogus"]).unwrap()),
            Err(ModelError::NoSuchActor("Top.Bogus".into()))
        );
        assert!(top
            .resolve(&ActorPath::new(["X", "Bogus"]).unwrap())
            .is_err());
    }

    #[test]
    fn knowledge_order() {
        let p = PortStatus::Present(Value::int(1));
        assert!(PortStatus::Unknown.refines_to(&p));
        assert!(PortStatus::Unknown.refines_to(&PortStatus::Absent));
        assert!(!p.refines_to(&PortStatus::Absent));
        assert!(!PortStatus::Absent.refines_to(&p));
    }

    #[test]
    fn structural_equality_ignores_insertion_order() {
        let mut a = Container::default();
        let mut b = Container::default();
        let x = ActorNode::delay("X", TimeVal::zero());
        let y = ActorNode::delay("Y", TimeVal::zero());
        a.inner.insert("X".into(), x.clone());
        a.inner.insert("Y".into(), y.clone());
        b.inner.insert("Y".into(), y);
        b.inner.insert("X".into(), x);
        let c1 = Connection::new(
            PortRef::actor("X", "output"),
            [PortRef::actor("Y", "input")],
        );
        let c2 = Connection::new(
            PortRef::actor("Y", "output"),
            [PortRef::actor("X", "input")],
        );
        a.connections.insert(c1.clone());
        a.connections.insert(c2.clone());
        b.connections.insert(c2);
        b.connections.insert(c1);
        assert_eq!(a, b);
    }

    #[test]
    fn path_parse_and_display() {
        let p = ActorPath::parse("A.B.C").unwrap();
        assert_eq!(p.to_string(), "A.B.C");
        assert_eq!(p.parent().unwrap().to_string(), "A.B");
        assert!(ActorPath::parse("A..B").is_none());
        assert!(ActorPath::new(Vec::<String>::new()).is_none());
    }
}
