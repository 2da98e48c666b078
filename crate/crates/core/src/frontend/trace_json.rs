//! JSON rendering of traces and counterexamples. Object keys are sorted, so
//! identical runs serialize to identical bytes.

use serde_json::{json, Map, Value as Json};

use crate::analysis::{CexStep, Counterexample, EdgeKind};
use crate::exec::{Snapshot, Trace};
use crate::model::{TimeVal, Value};

/// Integer when whole, otherwise the string `"p/q"`.
pub fn time_json(t: &TimeVal) -> Json {
    if t.denominator() == 1u32.into() {
        if let Ok(n) = u64::try_from(t.numerator()) {
            return json!(n);
        }
    }
    Json::String(t.to_string())
}

pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Int(i) => {
            i64::try_from(i).map_or_else(|_| Json::String(i.to_string()), |n| json!(n))
        }
        Value::Time(t) => time_json(t),
        Value::Str(s) => json!(s),
    }
}

fn record(
    elapsed: &TimeVal,
    microstep: u64,
    kind: &str,
    snap: &Snapshot,
    before: Option<&Snapshot>,
) -> Json {
    let changed: Map<String, Json> = match before {
        Some(b) => snap.changed_since(b),
        None => snap.variables.clone(),
    }
    .into_iter()
    .map(|((actor, var), v)| (format!("{actor}.{var}"), value_json(&v)))
    .collect();
    let locations: Map<String, Json> = snap
        .locations
        .iter()
        .map(|(a, l)| (a.to_string(), json!(l)))
        .collect();
    json!({
        "elapsed": time_json(elapsed),
        "microstep": microstep,
        "kind": kind,
        "changedVariables": changed,
        "fsmLocations": locations,
        "queueSummary": snap.queue,
    })
}

/// One record per step; `changedVariables` is relative to the previous
/// state.
pub fn trace_json(trace: &Trace) -> Json {
    let mut prev = &trace.initial;
    let mut out = Vec::with_capacity(trace.steps.len());
    for e in &trace.steps {
        out.push(record(
            &e.elapsed,
            e.microstep,
            &e.kind.to_string(),
            &e.snapshot,
            Some(prev),
        ));
        prev = &e.snapshot;
    }
    Json::Array(out)
}

fn edge_name(e: &Option<EdgeKind>) -> String {
    match e {
        None => "initial".into(),
        Some(EdgeKind::Stutter) => "stutter".into(),
        Some(EdgeKind::Step(k)) => k.to_string(),
    }
}

fn cex_records<'a>(steps: &'a [CexStep], mut prev: Option<&'a Snapshot>) -> Vec<Json> {
    steps
        .iter()
        .map(|s| {
            let r = record(
                &s.elapsed,
                s.microstep,
                &edge_name(&s.via),
                &s.snapshot,
                prev,
            );
            prev = Some(&s.snapshot);
            r
        })
        .collect()
}

pub fn counterexample_json(cex: &Counterexample) -> Json {
    let prefix = cex_records(&cex.prefix, None);
    let cycle = cex_records(&cex.cycle, cex.prefix.last().map(|s| &s.snapshot));
    json!({ "prefix": prefix, "cycle": cycle })
}
