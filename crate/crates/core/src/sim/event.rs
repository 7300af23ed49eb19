//! Timestamped events and the total order the event loop follows.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Event kinds, listed in tie-break priority: at equal timestamps an
/// arrival is queued before any slot or decision handling sees the buffer,
/// and decisions run after the slot that triggered them has closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    PacketArrival,
    WakeComplete,
    GateArrival,
    SlotStart,
    SlotEnd,
    DecisionPoint,
    SleepTimerExpiry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub onu_id: usize,
    /// Polling cycle the event belongs to (slot events only).
    pub cycle: u64,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    ev: SimEvent,
    seq: u64,
}

impl Entry {
    fn key(&self) -> (f64, EventKind, usize, u64) {
        (self.ev.time, self.ev.kind, self.ev.onu_id, self.seq)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(b.3.cmp(&a.3))
    }
}

/// Min-queue ordered by (time, kind, onu_id, insertion order).
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ev: SimEvent) {
        self.heap.push(Entry { ev, seq: self.seq });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|e| e.ev)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
