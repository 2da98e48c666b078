//! Fixtures shared by unit tests.

use crate::exec::{step, ExecOptions};
use crate::fire::{clear_ports, deliver_events};
use crate::frontend::cli::initial_state;
use crate::frontend::parse_model;
use crate::model::ActorNode;
use crate::SystemState;

pub const FLAT: &str = include_str!("../fixtures/flat_traffic_light.model");
pub const HIER: &str = include_str!("../fixtures/hierarchical_traffic_light.model");
pub const MUTANT: &str = include_str!("../fixtures/mutant_traffic_light.model");
pub const CAUSALITY: &str = include_str!("../fixtures/causality_cycle.model");
pub const ZERO: &str = include_str!("../fixtures/zero_delay_chain.model");

pub fn load(src: &str) -> SystemState {
    initial_state(parse_model(src).expect("fixture parses"))
}

/// Trees of the first `n` iterations with their events delivered and the
/// fixed point not yet run.
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
