use super::graph::{explore, path_to, GraphError, GraphOptions};
use super::prop::{prop_holds, PropError, Proposition};
use crate::exec::{Snapshot, StepKind, TraceEntry};
use crate::SystemState;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Prop(#[from] PropError),
}

/// Breadth-first search for a reachable state satisfying `p`. Returns the
/// shortest run to it; an empty run when the initial state already does.
pub fn search(
    s0: SystemState,
    p: &Proposition,
    opts: &GraphOptions,
) -> Result<Option<Vec<TraceEntry>>, SearchError> {
    let mut err = None;
    let (g, hit) = explore(s0, opts, &mut |_, s| match prop_holds(&s.top, p) {
        Ok(b) => b,
        Err(e) => {
            err = Some(e);
            true
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(hit.map(|t| {
        let path = path_to(&g, t);
        path.windows(2)
            .map(|w| {
                let kind = g.edges[w[0]]
                    .iter()
                    .find_map(|(m, k)| match k {
                        super::graph::EdgeKind::Step(k) if *m == w[1] => Some(k.clone()),
                        _ => None,
                    })
                    .unwrap_or(StepKind::Iteration);
                let s = &g.states[w[1]];
                TraceEntry {
                    elapsed: s.elapsed.clone(),
                    microstep: s.microstep,
                    kind,
                    snapshot: Snapshot::of(s),
                }
            })
            .collect()
    }))
}
