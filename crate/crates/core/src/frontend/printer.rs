//! Canonical model printer; `parse_model(print_model(d))` yields `d` again.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::model::ModelDocument;
use crate::model::{ActorKind, ActorNode, Connection, Fsm, Value};

pub fn print_model(doc: &ModelDocument) -> String {
    let mut out = format!("formatVersion: {}\n", doc.format_version);
    actor(&mut out, &doc.top, 0);
    out
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    out.push('\n');
}

fn actor(out: &mut String, a: &ActorNode, depth: usize) {
    line(out, depth, &format!("{} {} {{", a.kind.keyword(), a.name));
    let d = depth + 1;
    if matches!(
        a.kind,
        ActorKind::Fsm(_) | ActorKind::Composite(_) | ActorKind::Modal(_)
    ) {
        let ins: Vec<&str> = a
            .ports
            .inputs
            .keys()
            .filter(|k| !a.ports.outputs.contains_key(*k))
            .map(String::as_str)
            .collect();
        let outs: Vec<&str> = a
            .ports
            .outputs
            .keys()
            .filter(|k| !a.ports.inputs.contains_key(*k))
            .map(String::as_str)
            .collect();
        let both: Vec<&str> = a.ports.coupled().collect();
        for (kw, names) in [("input", ins), ("output", outs), ("inout", both)] {
            if !names.is_empty() {
                line(out, d, &format!("{kw} {};", names.join(", ")));
            }
        }
    }
    values(out, d, "param", &a.parameters);
    match &a.kind {
        ActorKind::Clock(c) => {
            line(out, d, &format!("period = {};", c.period));
            line(out, d, &format!("offset = {};", c.offset));
            line(out, d, &format!("emit = {};", c.emit));
        }
        ActorKind::TimedDelay { delay } => line(out, d, &format!("delay = {delay};")),
        ActorKind::SetVariable { target } => line(out, d, &format!("variable = {target};")),
        ActorKind::Fsm(f) => fsm(out, d, f),
        ActorKind::Composite(body) => {
            values(out, d, "var", &body.initial_variables);
            for child in body.inner.values() {
                actor(out, child, d);
            }
            connections(out, d, body.connections.iter());
        }
        ActorKind::Modal(m) => {
            values(out, d, "var", &m.body.initial_variables);
            line(out, d, &format!("controller {};", m.controller));
            for (loc, r) in &m.refinements {
                line(out, d, &format!("refinement {loc} -> {r};"));
            }
            for child in m.body.inner.values() {
                actor(out, child, d);
            }
            connections(out, d, m.body.connections.iter());
        }
    }
    line(out, depth, "}");
}

fn values(out: &mut String, depth: usize, kw: &str, vals: &BTreeMap<String, Value>) {
    for (k, v) in vals {
        line(out, depth, &format!("{kw} {k} = {v};"));
    }
}

fn fsm(out: &mut String, d: usize, f: &Fsm) {
    let locs: Vec<&str> = f.locations.iter().map(String::as_str).collect();
    line(out, d, &format!("locations {};", locs.join(", ")));
    line(out, d, &format!("initial {};", f.initial));
    values(out, d, "var", &f.initial_variables);
    for t in &f.transitions {
        line(out, d, &format!("transition {} -> {} {{", t.src, t.dst));
        line(out, d + 1, &format!("guard {};", t.guard));
        for (kw, map) in [("output", &t.outputs), ("set", &t.sets)] {
            if map.is_empty() {
                continue;
            }
            let mut s = String::new();
            for (i, (k, e)) in map.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{k} = {e}");
            }
            line(out, d + 1, &format!("{kw} {s};"));
        }
        line(out, d, "}");
    }
}

fn connections<'a>(out: &mut String, d: usize, conns: impl Iterator<Item = &'a Connection>) {
    for c in conns {
        let sinks: Vec<String> = c.sinks.iter().map(ToString::to_string).collect();
        line(
            out,
            d,
            &format!("connect {} -> {};", c.source, sinks.join(", ")),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_model;
    use crate::testutil::*;

    #[test]
    fn dump_is_a_fixed_point() {
        for src in [FLAT, HIER, MUTANT, CAUSALITY, ZERO] {
            let doc = parse_model(src).unwrap();
            let once = print_model(&doc);
            let again = parse_model(&once).unwrap();
            assert_eq!(again.top, doc.top);
            assert_eq!(print_model(&again), once);
        }
    }
}
