//! Global superdense-time event queue.
//!
//! Entries hold a set of events together with their remaining time to fire
//! and the microstep offset within that instant. Times are relative, so a
//! periodic model revisits identical queues.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{GlobalPort, TimeVal, Value};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub target: GlobalPort,
    pub value: Value,
}

impl Event {
    pub fn new(target: GlobalPort, value: Value) -> Self {
        Event { target, value }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.target, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueueEntry {
    /// One event per target port.
    pub events: BTreeMap<GlobalPort, Value>,
    pub time_to_fire: TimeVal,
    pub microstep: u64,
}

impl QueueEntry {
    fn tag(&self) -> (&TimeVal, u64) {
        (&self.time_to_fire, self.microstep)
    }

    pub fn events(&self) -> impl Iterator<Item = Event> + '_ {
        self.events
            .iter()
            .map(|(t, v)| Event::new(t.clone(), v.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueueError {
    #[error("time advance of {advance} exceeds the head entry's remaining time {head}")]
    NegativeTimer { advance: TimeVal, head: TimeVal },
    #[error("head entry is not at a pending microstep boundary")]
    NotAtMicrostepBoundary,
    #[error("head entry is not ready to fire")]
    NotReady,
}

/// A same-tag, same-port event that overwrote an earlier one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replaced {
    pub target: GlobalPort,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EventQueue {
    entries: Vec<QueueEntry>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn head(&self) -> Option<&QueueEntry> {
        self.entries.first()
    }

    /// Inserts `event` at relative tag `(dt, microstep)`, merging with an
    /// existing entry of the same tag. A same-port duplicate replaces the
    /// older value and is reported.
    pub fn add_event(&mut self, event: Event, dt: TimeVal, microstep: u64) -> Option<Replaced> {
        let key = (&dt, microstep);
        match self.entries.binary_search_by(|e| e.tag().cmp(&key)) {
            Ok(i) => {
                let entry = &mut self.entries[i];
                let old = entry
                    .events
                    .insert(event.target.clone(), event.value.clone());
                old.filter(|o| *o != event.value).map(|old| Replaced {
                    target: event.target,
                    old,
                    new: event.value,
                })
            }
            Err(i) => {
                let mut events = BTreeMap::new();
                events.insert(event.target, event.value);
                self.entries.insert(
                    i,
                    QueueEntry {
                        events,
                        time_to_fire: dt,
                        microstep,
                    },
                );
                None
            }
        }
    }

    /// Decreases every entry's remaining time by `dt`.
    pub fn delta(&mut self, dt: &TimeVal) -> Result<(), QueueError> {
        if let Some(head) = self.entries.first() {
            if head.time_to_fire.checked_sub(dt).is_none() {
                return Err(QueueError::NegativeTimer {
                    advance: dt.clone(),
                    head: head.time_to_fire.clone(),
                });
            }
        }
        for e in &mut self.entries {
            e.time_to_fire = e
                .time_to_fire
                .checked_sub(dt)
                .expect("ordered queue: head bounds every entry");
        }
        Ok(())
    }

    /// Consumes the head's pending microsteps: every zero-time entry has its
    /// microstep reduced by the head's, leaving the head at `(0, 0)`.
    pub fn advance_microstep(&mut self) -> Result<u64, QueueError> {
        let n = match self.entries.first() {
            Some(h) if h.time_to_fire.is_zero() && h.microstep > 0 => h.microstep,
            _ => return Err(QueueError::NotAtMicrostepBoundary),
        };
        for e in self
            .entries
            .iter_mut()
            .take_while(|e| e.time_to_fire.is_zero())
        {
            e.microstep -= n;
        }
        Ok(n)
    }

    /// Removes and returns the events of a head entry at tag `(0, 0)`.
    pub fn pop_ready(&mut self) -> Result<Vec<Event>, QueueError> {
        match self.entries.first() {
            Some(h) if h.time_to_fire.is_zero() && h.microstep == 0 => {
                let head = self.entries.remove(0);
                Ok(head.events().collect())
            }
            _ => Err(QueueError::NotReady),
        }
    }

    /// True iff entries are strictly ascending by `(time_to_fire, microstep)`.
    pub fn is_well_ordered(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].tag() < w[1].tag())
            && self.entries.iter().all(|e| !e.events.is_empty())
    }
}

impl fmt::Display for EventQueue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in &self.entries {
            if !first {
                write!(f, " :: ")?;
            }
            first = false;
            let evs: Vec<String> = e.events().map(|ev| ev.to_string()).collect();
            write!(
                f,
                "({{{}}} ; {} ; {})",
                evs.join(", "),
                e.time_to_fire,
                e.microstep
            )?;
        }
        if first {
            write!(f, "nil")?;
        }
        Ok(())
    }
}
