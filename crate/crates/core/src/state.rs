use std::hash::{Hash, Hasher};

use crate::model::{ActorNode, TimeVal};
use crate::queue::EventQueue;

/// A snapshot of the whole system between iterations.
///
/// `elapsed` and `microstep` are bookkeeping only: they take no part in
/// equality or hashing, so periodic behaviour revisits equal states.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub top: ActorNode,
    pub queue: EventQueue,
    pub elapsed: TimeVal,
    pub microstep: u64,
}

impl SystemState {
    pub fn new(top: ActorNode, queue: EventQueue) -> Self {
        SystemState {
            top,
            queue,
            elapsed: TimeVal::zero(),
            microstep: 0,
        }
    }
}

impl PartialEq for SystemState {
    fn eq(&self, other: &Self) -> bool {
        self.top == other.top && self.queue == other.queue
    }
}

impl Eq for SystemState {}

impl Hash for SystemState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.top.hash(state);
        self.queue.hash(state);
    }
}
