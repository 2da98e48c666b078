#![allow(dead_code)]

use std::path::PathBuf;

use de_fixpoint::exec::{step, ExecOptions};
use de_fixpoint::fire::{clear_ports, deliver_events};
use de_fixpoint::frontend::cli::{initial_state, run};
use de_fixpoint::frontend::parse_model;
use de_fixpoint::model::ActorNode;
use de_fixpoint::SystemState;

pub const FIXTURES: [&str; 5] = [
    "flat_traffic_light",
    "hierarchical_traffic_light",
    "mutant_traffic_light",
    "zero_delay_chain",
    "causality_cycle",
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn model_path(name: &str) -> String {
    fixture(&format!("{name}.model")).display().to_string()
}

pub fn load(name: &str) -> SystemState {
    let src = std::fs::read_to_string(model_path(name)).unwrap();
    initial_state(parse_model(&src).unwrap())
}

/// Trees of the first `n` iterations with events delivered, before the
/// fixed point.
pub fn iteration_inputs(mut s: SystemState, n: usize) -> Vec<ActorNode> {
    let opts = ExecOptions::default();
    let mut out = Vec::new();
    while out.len() < n {
        let Some(h) = s.queue.head() else { break };
        if h.time_to_fire.is_zero() && h.microstep == 0 {
            let mut t = s.clone();
            let events = t.queue.pop_ready().unwrap();
            clear_ports(&mut t.top);
            deliver_events(&mut t.top, &events).unwrap();
            out.push(t.top);
        }
        if step(&mut s, &opts).is_err() {
            break;
        }
    }
    out
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> Output {
    let mut argv = vec!["de-fixpoint".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}
