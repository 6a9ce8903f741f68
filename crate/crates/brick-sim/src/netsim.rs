//! Deterministic discrete-event network: seeded delays, adversarial
//! reordering and targeted holds, and a simulated clock.
//!
//! Time advances only when events are processed; the schedule orders events
//! by (time, insertion sequence) so identical seeds replay identical runs.
//! Adversary policies can delay and reorder traffic but never forge, alter,
//! or drop it: every send is eventually delivered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

/// Simulated time in integer microseconds.
pub type TimeUs = u64;

/// One millisecond in simulated time units.
pub const MILLISECOND: TimeUs = 1_000;

pub fn to_ms(t: TimeUs) -> f64 {
    t as f64 / MILLISECOND as f64
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
pub enum ActorId {
    PartyA,
    PartyB,
    Warden(u32),
    Auditor,
}

impl ActorId {
    pub fn label(&self) -> String {
        match self {
            ActorId::PartyA => "party_a".to_string(),
            ActorId::PartyB => "party_b".to_string(),
            ActorId::Warden(i) => format!("warden_{i}"),
            ActorId::Auditor => "auditor".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum SimEvent<M> {
    Deliver { from: ActorId, to: ActorId, msg: M },
    BlockTick,
    Timer { actor: ActorId, tag: u64 },
}

#[derive(Debug)]
pub struct Scheduled<M> {
    pub at: TimeUs,
    pub seq: u64,
    pub event: SimEvent<M>,
}

struct HeapEntry<M>(Scheduled<M>);

impl<M> PartialEq for HeapEntry<M> {
    fn eq(&self, other: &Self) -> bool {
        self.0.at == other.0.at && self.0.seq == other.0.seq
    }
}

impl<M> Eq for HeapEntry<M> {}

impl<M> PartialOrd for HeapEntry<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for HeapEntry<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (time, insertion order): ties break by insertion.
        (other.0.at, other.0.seq).cmp(&(self.0.at, self.0.seq))
    }
}

/// Priority queue of pending events plus the simulated clock.
pub struct Schedule<M> {
    now: TimeUs,
    next_seq: u64,
    queue: BinaryHeap<HeapEntry<M>>,
    pending_deliveries: u64,
}

impl<M> Default for Schedule<M> {
    fn default() -> Self {
        Schedule::new()
    }
}

impl<M> Schedule<M> {
    pub fn new() -> Schedule<M> {
        Schedule {
            now: 0,
            next_seq: 0,
            queue: BinaryHeap::new(),
            pending_deliveries: 0,
        }
    }

    /// Messages sent but not yet delivered.
    pub fn pending_deliveries(&self) -> u64 {
        self.pending_deliveries
    }

    /// Monotone; advanced only by event processing.
    pub fn now(&self) -> TimeUs {
        self.now
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn push_at(&mut self, at: TimeUs, event: SimEvent<M>) {
        let at = at.max(self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        if matches!(event, SimEvent::Deliver { .. }) {
            self.pending_deliveries += 1;
        }
        self.queue.push(HeapEntry(Scheduled { at, seq, event }));
    }

    pub fn push_after(&mut self, delay: TimeUs, event: SimEvent<M>) {
        self.push_at(self.now + delay, event);
    }

    /// Time of the next pending event, if any.
    pub fn peek_time(&self) -> Option<TimeUs> {
        self.queue.peek().map(|e| e.0.at)
    }

    /// Pop the next event and advance the clock to it.
    pub fn pop(&mut self) -> Option<Scheduled<M>> {
        let entry = self.queue.pop()?.0;
        debug_assert!(entry.at >= self.now);
        self.now = entry.at;
        if matches!(entry.event, SimEvent::Deliver { .. }) {
            self.pending_deliveries -= 1;
        }
        Some(entry)
    }

    /// Pop the next event only if it is due at or before `limit`.
    pub fn pop_until(&mut self, limit: TimeUs) -> Option<Scheduled<M>> {
        if self.peek_time()? > limit {
            return None;
        }
        self.pop()
    }
}

/// Drain the schedule deterministically up to `limit_us`. Events past the
/// limit stay queued; returns the number of events processed.
pub fn run_until_quiescent<M>(
    schedule: &mut Schedule<M>,
    limit_us: TimeUs,
    mut handler: impl FnMut(Scheduled<M>, &mut Schedule<M>),
) -> usize {
    let mut processed = 0;
    while let Some(ev) = schedule.pop_until(limit_us) {
        processed += 1;
        handler(ev, schedule);
    }
    processed
}

/// How the adversary interferes with message delivery. Holds are always
/// finite: asynchrony, not message loss.
pub enum NetAttack<M> {
    /// Seeded extra hold up to `max_hold_us` per matching message.
    Reorder {
        max_hold_us: TimeUs,
        selector: Box<dyn Fn(ActorId, ActorId, &M) -> bool + Send>,
    },
    /// Fixed extra hold for matching messages.
    TargetedDelay {
        hold_us: TimeUs,
        selector: Box<dyn Fn(ActorId, ActorId, &M) -> bool + Send>,
    },
}

/// Message transport: symmetric link delay of rtt/2 plus seeded jitter,
/// a per-send serialization stagger for broadcast bursts, and an optional
/// attack policy. Per-(from, to) FIFO order is always preserved.
pub struct Net<M> {
    pub rtt_us: TimeUs,
    pub jitter_us: TimeUs,
    pub stagger_us: TimeUs,
    attack: Option<NetAttack<M>>,
    rng: ChaCha20Rng,
    fifo_floor: BTreeMap<(ActorId, ActorId), TimeUs>,
}

impl<M> Net<M> {
    pub fn new(rtt_us: TimeUs, jitter_us: TimeUs, stagger_us: TimeUs, seed: u64) -> Net<M> {
        Net {
            rtt_us,
            jitter_us,
            stagger_us,
            attack: None,
            rng: ChaCha20Rng::seed_from_u64(seed),
            fifo_floor: BTreeMap::new(),
        }
    }

    pub fn with_attack(mut self, attack: NetAttack<M>) -> Net<M> {
        self.attack = Some(attack);
        self
    }

    fn one_way(&mut self, from: ActorId, to: ActorId, msg: &M) -> TimeUs {
        let mut delay = self.rtt_us / 2;
        if self.jitter_us > 0 {
            delay += self.rng.gen_range(0..=self.jitter_us);
        }
        delay += match &self.attack {
            Some(NetAttack::Reorder {
                max_hold_us,
                selector,
            }) if selector(from, to, msg) => self.rng.gen_range(0..=*max_hold_us),
            Some(NetAttack::TargetedDelay { hold_us, selector }) if selector(from, to, msg) => {
                *hold_us
            }
            _ => 0,
        };
        delay
    }

    fn schedule_at(
        &mut self,
        schedule: &mut Schedule<M>,
        depart: TimeUs,
        from: ActorId,
        to: ActorId,
        msg: M,
    ) {
        let delay = self.one_way(from, to, &msg);
        let mut deliver_at = depart + delay;
        // FIFO per (from, to): never deliver before an earlier send.
        if let Some(floor) = self.fifo_floor.get(&(from, to)) {
            deliver_at = deliver_at.max(*floor);
        }
        self.fifo_floor.insert((from, to), deliver_at);
        schedule.push_at(deliver_at, SimEvent::Deliver { from, to, msg });
    }

    /// Single send: departs immediately.
    pub fn send(&mut self, schedule: &mut Schedule<M>, from: ActorId, to: ActorId, msg: M) {
        self.schedule_at(schedule, schedule.now(), from, to, msg);
    }

    /// Burst to many destinations: the k-th message (1-based) leaves the
    /// sender k staggers after the burst starts, modeling sequential sends.
    pub fn broadcast(
        &mut self,
        schedule: &mut Schedule<M>,
        from: ActorId,
        messages: Vec<(ActorId, M)>,
    ) {
        let start = schedule.now();
        for (k, (to, msg)) in messages.into_iter().enumerate() {
            let depart = start + (k as TimeUs + 1) * self.stagger_us;
            self.schedule_at(schedule, depart, from, to, msg);
        }
    }
}

/// One line of the exported run trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceLine {
    pub time_ms: f64,
    pub kind: String,
    pub from: String,
    pub to: String,
    pub summary: String,
}

#[derive(Default)]
pub struct Trace {
    lines: Vec<TraceLine>,
}

impl Trace {
    pub fn new() -> Trace {
        Trace { lines: Vec::new() }
    }

    pub fn push(&mut self, at: TimeUs, kind: &str, from: String, to: String, summary: String) {
        self.lines.push(TraceLine {
            time_ms: to_ms(at),
            kind: kind.to_string(),
            from,
            to,
            summary,
        });
    }

    pub fn lines(&self) -> &[TraceLine] {
        &self.lines
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line).expect("trace serializes"));
            out.push('\n');
        }
        out
    }

    pub fn digest(&self) -> crate::primitives::Hash32 {
        crate::primitives::hash(self.to_jsonl().as_bytes())
    }

    pub fn counts_by_kind(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for line in &self.lines {
            *counts.entry(line.kind.clone()).or_insert(0) += 1;
        }
        counts
    }
}
