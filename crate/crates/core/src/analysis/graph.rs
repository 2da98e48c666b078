//! Explicit state graph over inter-iteration snapshots.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::exec::{successor, ExecError, ExecOptions, StepKind};
use crate::model::TimeVal;
use crate::SystemState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Until(TimeVal),
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct GraphOptions {
    pub bound: Bound,
    pub max_states: usize,
    /// Threads used to expand the frontier; 1 runs on the calling thread.
    pub workers: usize,
    pub exec: ExecOptions,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            bound: Bound::Unbounded,
            max_states: 100_000,
            workers: 1,
            exec: ExecOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Step(StepKind),
    /// Self-loop added at terminal and time-bound states.
    Stutter,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("state space exceeds {0} states")]
    StateSpaceExceeded(usize),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct StateGraph {
    /// Node 0 is the initial state. Each state keeps the elapsed time and
    /// microstep of its first discovery.
    pub states: Vec<SystemState>,
    pub edges: Vec<Vec<(usize, EdgeKind)>>,
    pub stutter: BTreeSet<usize>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Follows the first successor from the initial node until a node
    /// repeats; returns the path and the index in it where the cycle starts.
    pub fn lasso(&self) -> (Vec<usize>, usize) {
        let mut seen = HashMap::new();
        let mut path = Vec::new();
        let mut n = 0;
        loop {
            if let Some(&i) = seen.get(&n) {
                return (path, i);
            }
            seen.insert(n, path.len());
            path.push(n);
            n = self.edges[n][0].0;
        }
    }
}

/// Successors of `s`: none when the queue is empty or the next tick would
/// pass the bound, one otherwise.
fn expand(
    s: &SystemState,
    opts: &GraphOptions,
) -> Result<Option<(SystemState, StepKind)>, ExecError> {
    let Some(head) = s.queue.head() else {
        return Ok(None);
    };
    if let Bound::Until(b) = &opts.bound {
        if &(&s.elapsed + &head.time_to_fire) > b {
            return Ok(None);
        }
    }
    let (next, info) = successor(s, &opts.exec)?;
    Ok(Some((next, info.kind)))
}

/// Breadth-first exploration from `s0`. `stop` is consulted on every new
/// node and ends the exploration early when it returns true.
pub fn explore(
    s0: SystemState,
    opts: &GraphOptions,
    stop: &mut dyn FnMut(usize, &SystemState) -> bool,
) -> Result<(StateGraph, Option<usize>), GraphError> {
    let pool = if opts.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.workers)
                .build()
                .map_err(|e| GraphError::Pool(e.to_string()))?,
        )
    } else {
        None
    };
    let mut g = StateGraph {
        states: vec![s0.clone()],
        edges: vec![Vec::new()],
        stutter: BTreeSet::new(),
    };
    let mut index: HashMap<SystemState, usize> = HashMap::new();
    index.insert(s0, 0);
    if stop(0, &g.states[0]) {
        return Ok((g, Some(0)));
    }
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let results: Vec<Result<_, ExecError>> = match &pool {
            Some(p) => p.install(|| {
                frontier
                    .par_iter()
                    .map(|&n| expand(&g.states[n], opts))
                    .collect()
            }),
            None => frontier
                .iter()
                .map(|&n| expand(&g.states[n], opts))
                .collect(),
        };
        let mut next_frontier = Vec::new();
        for (&n, r) in frontier.iter().zip(results) {
            match r? {
                None => {
                    g.edges[n].push((n, EdgeKind::Stutter));
                    g.stutter.insert(n);
                }
                Some((s, kind)) => {
                    let target = match index.get(&s) {
                        Some(&t) => t,
                        None => {
                            if g.states.len() >= opts.max_states {
                                return Err(GraphError::StateSpaceExceeded(opts.max_states));
                            }
                            let t = g.states.len();
                            index.insert(s.clone(), t);
                            g.states.push(s);
                            g.edges.push(Vec::new());
                            if stop(t, &g.states[t]) {
                                g.edges[n].push((t, EdgeKind::Step(kind)));
                                return Ok((g, Some(t)));
                            }
                            next_frontier.push(t);
                            t
                        }
                    };
                    g.edges[n].push((target, EdgeKind::Step(kind)));
                }
            }
        }
        frontier = next_frontier;
    }
    Ok((g, None))
}

pub fn build_state_graph(s0: SystemState, opts: &GraphOptions) -> Result<StateGraph, GraphError> {
    explore(s0, opts, &mut |_, _| false).map(|(g, _)| g)
}

/// Path of node indices from the initial node to `target` along tree edges.
pub fn path_to(g: &StateGraph, target: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; g.len()];
    let mut queue = std::collections::VecDeque::from([0usize]);
    parent[0] = 0;
    while let Some(n) = queue.pop_front() {
        if n == target {
            break;
        }
        for &(m, _) in &g.edges[n] {
            if parent[m] == usize::MAX {
                parent[m] = n;
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![target];
    let mut n = target;
    while n != 0 {
        n = parent[n];
        path.push(n);
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    #[test]
    fn deterministic_models_have_one_successor() {
        for src in [FLAT, HIER, ZERO] {
            let g = build_state_graph(load(src), &GraphOptions::default()).unwrap();
            assert!(g.edges.iter().all(|e| e.len() == 1));
            assert!(g.stutter.is_empty());
            let (path, loop_start) = g.lasso();
            assert_eq!(path.len(), g.len());
            assert!(loop_start < path.len());
        }
    }

    #[test]
    fn workers_do_not_change_the_graph() {
        let one = build_state_graph(load(HIER), &GraphOptions::default()).unwrap();
        let four = build_state_graph(
            load(HIER),
            &GraphOptions {
                workers: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one.states, four.states);
        assert_eq!(one.edges, four.edges);
    }

    #[test]
    fn time_bound_adds_stutter() {
        let bound = TimeVal::from_integer(5);
        let opts = GraphOptions {
            bound: Bound::Until(bound.clone()),
            ..Default::default()
        };
        let g = build_state_graph(load(FLAT), &opts).unwrap();
        assert_eq!(g.stutter.len(), 1);
        assert!(g.states.iter().all(|s| s.elapsed <= bound));
    }

    #[test]
    fn state_limit() {
        let opts = GraphOptions {
            max_states: 10,
            ..Default::default()
        };
        assert_eq!(
            build_state_graph(load(HIER), &opts).unwrap_err(),
            GraphError::StateSpaceExceeded(10)
        );
    }

    #[test]
    fn path_to_follows_edges() {
        let g = build_state_graph(load(FLAT), &GraphOptions::default()).unwrap();
        let t = g.len() - 1;
        let p = path_to(&g, t);
        assert_eq!((p[0], *p.last().unwrap()), (0, t));
        for w in p.windows(2) {
            assert!(g.edges[w[0]].iter().any(|(m, _)| *m == w[1]));
        }
    }
}
