//! LTL model checking: product of the state graph with the automaton of the
//! negated formula, searched for an accepting lasso by nested depth-first
//! search.

use std::collections::{HashMap, HashSet};

use super::buchi::{buchi_from_ltl, Buchi, Ltl, PropTable};
use super::formula::{desugar_scope, Formula};
use super::graph::{build_state_graph, EdgeKind, GraphError, GraphOptions, StateGraph};
use super::prop::{prop_holds, PropError};
use crate::exec::{successor, ExecOptions, Snapshot};
use crate::model::TimeVal;
use crate::SystemState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CexStep {
    /// Graph node index.
    pub node: usize,
    pub elapsed: TimeVal,
    pub microstep: u64,
    /// Edge taken into this state; `None` for the initial state.
    pub via: Option<EdgeKind>,
    pub snapshot: Snapshot,
}

/// A run violating the formula: `prefix` then `cycle` repeated forever. The
/// last cycle state steps back to the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub prefix: Vec<CexStep>,
    pub cycle: Vec<CexStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(Counterexample),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub states: usize,
    pub product_states: usize,
    pub graph: StateGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Prop(#[from] PropError),
    #[error("counterexample replay diverged at step {step}: {reason}")]
    Replay { step: usize, reason: String },
}

/// Truth of every indexed proposition at every graph node.
pub fn label_graph(g: &StateGraph, table: &PropTable) -> Result<Vec<Vec<bool>>, PropError> {
    g.states
        .iter()
        .map(|s| table.props.iter().map(|p| prop_holds(&s.top, p)).collect())
        .collect()
}

/// Checks `f` on the graph reachable from `s0`.
pub fn ltl_check(
    s0: SystemState,
    f: &Formula,
    opts: &GraphOptions,
) -> Result<CheckReport, CheckError> {
    let g = build_state_graph(s0, opts)?;
    check_graph(g, f, &opts.exec)
}

pub fn check_graph(
    g: StateGraph,
    f: &Formula,
    exec: &ExecOptions,
) -> Result<CheckReport, CheckError> {
    let f = desugar_scope(f);
    let mut table = PropTable::default();
    let neg = Ltl::from_formula(&f, true, &mut table);
    let labels = label_graph(&g, &table)?;
    let aut = buchi_from_ltl(&neg);
    let mut search = Ndfs {
        g: &g,
        labels: &labels,
        aut: &aut,
        ids: HashMap::new(),
        states: Vec::new(),
    };
    let found = search.run();
    let product_states = search.states.len();
    let verdict = match found {
        None => Verdict::Holds,
        Some((prefix, cycle)) => Verdict::Fails(replay(&g, &prefix, &cycle, exec)?),
    };
    Ok(CheckReport {
        verdict,
        states: g.len(),
        product_states,
        graph: g,
    })
}

type PState = (usize, usize);

struct Ndfs<'a> {
    g: &'a StateGraph,
    labels: &'a [Vec<bool>],
    aut: &'a Buchi,
    ids: HashMap<PState, usize>,
    states: Vec<PState>,
}

impl Ndfs<'_> {
    fn id(&mut self, s: PState) -> usize {
        *self.ids.entry(s).or_insert_with(|| {
            self.states.push(s);
            self.states.len() - 1
        })
    }

    fn succ(&mut self, x: usize) -> Vec<usize> {
        let (n, q) = self.states[x];
        let mut out = Vec::new();
        for &(m, _) in &self.g.edges[n] {
            for &r in &self.aut.succ[q] {
                if self.aut.label_ok(r, &self.labels[m]) {
                    out.push((m, r));
                }
            }
        }
        out.into_iter().map(|s| self.id(s)).collect()
    }

    fn accepting(&self, x: usize) -> bool {
        self.aut.accepting[self.states[x].1]
    }

    /// Graph-node projection of an accepting lasso, if one exists.
    fn run(&mut self) -> Option<(Vec<usize>, Vec<usize>)> {
        let inits: Vec<usize> = self
            .aut
            .initial
            .iter()
            .filter(|&&q| self.aut.label_ok(q, &self.labels[0]))
            .copied()
            .collect();
        let mut blue: HashSet<usize> = HashSet::new();
        let mut red: HashSet<usize> = HashSet::new();
        for q in inits {
            let root = self.id((0, q));
            if !blue.insert(root) {
                continue;
            }
            let succ = self.succ(root);
            let mut stack = vec![(root, succ, 0usize)];
            while let Some((x, succs, i)) = stack.last_mut() {
                if *i < succs.len() {
                    let y = succs[*i];
                    *i += 1;
                    if blue.insert(y) {
                        let s = self.succ(y);
                        stack.push((y, s, 0));
                    }
                    continue;
                }
                let x = *x;
                if self.accepting(x) {
                    if let Some(cycle) = self.inner(x, &mut red) {
                        let prefix: Vec<usize> = stack[..stack.len() - 1]
                            .iter()
                            .map(|(p, _, _)| self.states[*p].0)
                            .collect();
                        let cycle = cycle.iter().map(|&c| self.states[c].0).collect();
                        return Some((prefix, cycle));
                    }
                }
                stack.pop();
            }
        }
        None
    }

    /// Path from `seed` back to itself, starting with `seed`.
    fn inner(&mut self, seed: usize, red: &mut HashSet<usize>) -> Option<Vec<usize>> {
        let succ = self.succ(seed);
        let mut stack = vec![(seed, succ, 0usize)];
        while let Some((_, succs, i)) = stack.last_mut() {
            if *i < succs.len() {
                let y = succs[*i];
                *i += 1;
                if y == seed {
                    return Some(stack.iter().map(|(p, _, _)| *p).collect());
                }
                if red.insert(y) {
                    let s = self.succ(y);
                    stack.push((y, s, 0));
                }
                continue;
            }
            stack.pop();
        }
        None
    }
}

/// Re-executes the lasso from the initial state, checking that every step
/// reproduces the graph's state, and annotates elapsed time.
fn replay(
    g: &StateGraph,
    prefix: &[usize],
    cycle: &[usize],
    exec: &ExecOptions,
) -> Result<Counterexample, CheckError> {
    let nodes: Vec<usize> = prefix.iter().chain(cycle).copied().collect();
    let mut steps = Vec::with_capacity(nodes.len());
    let mut cur = g.states[0].clone();
    let mut via = None;
    for (k, &n) in nodes.iter().enumerate() {
        if cur != g.states[n] {
            return Err(CheckError::Replay {
                step: k,
                reason: format!("state differs from graph node {n}"),
            });
        }
        steps.push(CexStep {
            node: n,
            elapsed: cur.elapsed.clone(),
            microstep: cur.microstep,
            via: via.take(),
            snapshot: Snapshot::of(&cur),
        });
        let to = nodes.get(k + 1).copied().unwrap_or(cycle[0]);
        let (next, kind) = advance(g, &cur, n, to, exec).map_err(|reason| CheckError::Replay {
            step: k + 1,
            reason,
        })?;
        cur = next;
        via = Some(kind);
    }
    if cur != g.states[cycle[0]] {
        return Err(CheckError::Replay {
            step: nodes.len(),
            reason: "cycle does not close on its first state".into(),
        });
    }
    let cycle_steps = steps.split_off(prefix.len());
    Ok(Counterexample {
        prefix: steps,
        cycle: cycle_steps,
    })
}

fn advance(
    g: &StateGraph,
    cur: &SystemState,
    from: usize,
    to: usize,
    exec: &ExecOptions,
) -> Result<(SystemState, EdgeKind), String> {
    let edge = g.edges[from]
        .iter()
        .find(|(m, _)| *m == to)
        .ok_or_else(|| format!("no edge {from} -> {to}"))?;
    match &edge.1 {
        EdgeKind::Stutter => Ok((cur.clone(), EdgeKind::Stutter)),
        EdgeKind::Step(_) => {
            let (next, info) = successor(cur, exec).map_err(|e| e.to_string())?;
            Ok((next, EdgeKind::Step(info.kind)))
        }
    }
}

/// The graph's single run as an ultimately periodic word over `table`.
pub fn graph_word(g: &StateGraph, labels: &[Vec<bool>]) -> (Vec<Vec<bool>>, usize) {
    let (path, loop_start) = g.lasso();
    (
        path.iter().map(|&n| labels[n].clone()).collect(),
        loop_start,
    )
}
