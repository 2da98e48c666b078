//! Small-step execution: time ticks, microstep advances and iterations.

use std::collections::BTreeMap;
use std::fmt;

use crate::fire::{
    clear_ports, compute_fixpoint, deliver_events, downgrade_unknowns, FireError,
    FixpointDiagnostics, PortAddr,
};
use crate::model::{ActorKind, ActorPath, GlobalPort, ModelError, TimeVal, Value};
use crate::postfire::{commit_requests, postfire, PostfireError};
use crate::queue::{QueueError, Replaced};
use crate::SystemState;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    Tick(TimeVal),
    Microstep(u64),
    Iteration,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Tick(dt) => write!(f, "tick({dt})"),
            StepKind::Microstep(n) => write!(f, "microstep({n})"),
            StepKind::Iteration => f.write_str("iteration"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOptions {
    /// Downgrade residual unknown ports to absent instead of failing.
    pub bottom_as_absent: bool,
    pub max_steps: u64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            bottom_as_absent: false,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("event queue is empty")]
    EmptyQueue,
    #[error("causality cycle at ({elapsed}, {microstep}): unknown ports {}", fmt_ports(.ports))]
    CausalityCycle {
        elapsed: TimeVal,
        microstep: u64,
        ports: Vec<PortAddr>,
    },
    #[error("nondeterministic FSM at ({elapsed}, {microstep}): {} enabled more than one transition", fmt_paths(.actors))]
    NondeterministicFsm {
        elapsed: TimeVal,
        microstep: u64,
        actors: Vec<ActorPath>,
    },
    #[error(transparent)]
    Fire(#[from] FireError),
    #[error(transparent)]
    Postfire(#[from] PostfireError),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn fmt_ports(ports: &[PortAddr]) -> String {
    ports
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_paths(paths: &[ActorPath]) -> String {
    paths
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Side information about one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepInfo {
    pub kind: StepKind,
    /// Fixed-point diagnostics for iterations.
    pub diagnostics: Option<FixpointDiagnostics>,
    /// Events delivered into disabled refinements.
    pub frozen: Vec<GlobalPort>,
    pub replaced: Vec<Replaced>,
}

impl StepInfo {
    fn plain(kind: StepKind) -> Self {
        StepInfo {
            kind,
            diagnostics: None,
            frozen: Vec::new(),
            replaced: Vec::new(),
        }
    }
}

/// Performs one step in place.
pub fn step(s: &mut SystemState, opts: &ExecOptions) -> Result<StepInfo, ExecError> {
    let head = s.queue.head().ok_or(ExecError::EmptyQueue)?;
    if !head.time_to_fire.is_zero() {
        let dt = head.time_to_fire.clone();
        s.queue.delta(&dt)?;
        s.elapsed = &s.elapsed + &dt;
        s.microstep = 0;
        return Ok(StepInfo::plain(StepKind::Tick(dt)));
    }
    if head.microstep > 0 {
        let n = s.queue.advance_microstep()?;
        s.microstep += n;
        return Ok(StepInfo::plain(StepKind::Microstep(n)));
    }
    let events = s.queue.pop_ready()?;
    clear_ports(&mut s.top);
    let frozen = deliver_events(&mut s.top, &events)?;
    let diag = compute_fixpoint(&mut s.top)?;
    if !diag.conflicts.is_empty() {
        return Err(ExecError::NondeterministicFsm {
            elapsed: s.elapsed.clone(),
            microstep: s.microstep,
            actors: diag.conflicts.iter().cloned().collect(),
        });
    }
    if !diag.unknown_ports.is_empty() {
        if !opts.bottom_as_absent {
            return Err(ExecError::CausalityCycle {
                elapsed: s.elapsed.clone(),
                microstep: s.microstep,
                ports: diag.unknown_ports.iter().cloned().collect(),
            });
        }
        downgrade_unknowns(&mut s.top, &diag.unknown_ports)?;
    }
    let requests = postfire(&mut s.top)?;
    let replaced = commit_requests(&mut s.queue, requests);
    Ok(StepInfo {
        kind: StepKind::Iteration,
        diagnostics: Some(diag),
        frozen,
        replaced,
    })
}

/// The unique successor of `s`.
pub fn successor(
    s: &SystemState,
    opts: &ExecOptions,
) -> Result<(SystemState, StepInfo), ExecError> {
    let mut next = s.clone();
    let info = step(&mut next, opts)?;
    Ok((next, info))
}

/// Committed actor state: every variable and FSM location in the tree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Snapshot {
    pub variables: BTreeMap<(ActorPath, String), Value>,
    pub locations: BTreeMap<ActorPath, String>,
    pub queue: String,
}

impl Snapshot {
    pub fn of(s: &SystemState) -> Self {
        let mut snap = Snapshot {
            queue: s.queue.to_string(),
            ..Default::default()
        };
        s.top.walk(|path, node, _| {
            let vars = match &node.kind {
                ActorKind::Fsm(f) => {
                    snap.locations.insert(path.clone(), f.current.clone());
                    &f.variables
                }
                ActorKind::Composite(c) => &c.variables,
                ActorKind::Modal(m) => &m.body.variables,
                _ => return,
            };
            for (k, v) in vars {
                snap.variables.insert((path.clone(), k.clone()), v.clone());
            }
        });
        snap
    }

    /// Variables whose value differs from `before`.
    pub fn changed_since(&self, before: &Snapshot) -> BTreeMap<(ActorPath, String), Value> {
        self.variables
            .iter()
            .filter(|(k, v)| before.variables.get(*k) != Some(*v))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn variable(&self, actor: &str, var: &str) -> Option<&Value> {
        let path = ActorPath::parse(actor)?;
        self.variables.get(&(path, var.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub elapsed: TimeVal,
    pub microstep: u64,
    pub kind: StepKind,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    QueueEmpty,
    /// The next tick would cross the time bound.
    TimeBound,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub initial: Snapshot,
    pub steps: Vec<TraceEntry>,
    pub stop: StopReason,
    pub final_state: SystemState,
}

/// Runs `s0` until the queue empties, the next tick would pass `bound`, or
/// `opts.max_steps` steps have been taken.
pub fn simulate(s0: SystemState, bound: &TimeVal, opts: &ExecOptions) -> Result<Trace, ExecError> {
    let initial = Snapshot::of(&s0);
    let mut s = s0;
    let mut steps = Vec::new();
    let stop = loop {
        let Some(head) = s.queue.head() else {
            break StopReason::QueueEmpty;
        };
        if &(&s.elapsed + &head.time_to_fire) > bound {
            break StopReason::TimeBound;
        }
        if steps.len() as u64 >= opts.max_steps {
            break StopReason::MaxSteps;
        }
        let info = step(&mut s, opts)?;
        steps.push(TraceEntry {
            elapsed: s.elapsed.clone(),
            microstep: s.microstep,
            kind: info.kind,
            snapshot: Snapshot::of(&s),
        });
    };
    Ok(Trace {
        initial,
        steps,
        stop,
        final_state: s,
    })
}
