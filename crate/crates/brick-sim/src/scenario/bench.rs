//! Simulated-time microbenchmark of the consistent-broadcast round:
//! one party announces to n wardens (sequential sends, stagger d per
//! message), each warden acks, and we measure when the t-th and the last
//! ack return. With symmetric links the full round completes at
//! rtt + n*d.

use crate::netsim::{ActorId, Net, Schedule, SimEvent, TimeUs, MILLISECOND};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BenchRow {
    pub wardens: u64,
    /// Time until t = 2f+1 distinct acks (state considered committed).
    pub commit_latency_ms: f64,
    /// Time until every warden acked (the full broadcast round).
    pub broadcast_latency_ms: f64,
    /// Closed-form expectation rtt + n*d for the full round.
    pub expected_ms: f64,
}

#[derive(Clone, Copy, Debug)]
enum BenchMsg {
    Announce,
    Ack,
}

/// Run the broadcast round for each committee size.
pub fn bench_broadcast(warden_counts: &[u64], rtt_ms: u64, stagger_us: u64) -> Vec<BenchRow> {
    warden_counts
        .iter()
        .map(|&n| {
            let (commit_us, all_us) = one_round(n, rtt_ms * MILLISECOND, stagger_us);
            BenchRow {
                wardens: n,
                commit_latency_ms: crate::netsim::to_ms(commit_us),
                broadcast_latency_ms: crate::netsim::to_ms(all_us),
                expected_ms: crate::netsim::to_ms(rtt_ms * MILLISECOND + n * stagger_us),
            }
        })
        .collect()
}

fn one_round(n: u64, rtt_us: TimeUs, stagger_us: TimeUs) -> (TimeUs, TimeUs) {
    let mut sched: Schedule<BenchMsg> = Schedule::new();
    let mut net: Net<BenchMsg> = Net::new(rtt_us, 0, stagger_us, 0);

    let t = if n >= 4 { 2 * ((n - 1) / 3) + 1 } else { n };
    let targets: Vec<(ActorId, BenchMsg)> = (0..n)
        .map(|i| (ActorId::Warden(i as u32), BenchMsg::Announce))
        .collect();
    net.broadcast(&mut sched, ActorId::PartyA, targets);

    let mut acks = 0u64;
    let mut commit_at = 0;
    let mut all_at = 0;
    while let Some(ev) = sched.pop() {
        if let SimEvent::Deliver { from, to, msg } = ev.event {
            match msg {
                BenchMsg::Announce => {
                    net.send(&mut sched, to, from, BenchMsg::Ack);
                }
                BenchMsg::Ack => {
                    acks += 1;
                    if acks == t {
                        commit_at = ev.at;
                    }
                    if acks == n {
                        all_at = ev.at;
                    }
                }
            }
        }
    }
    (commit_at, all_at)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_round_is_rtt_plus_n_staggers() {
        // Defaults: rtt 100 ms, d = 2 ms. n = 7 completes at 114 ms.
        let rows = bench_broadcast(&[7, 34], 100, 2_000);
        assert_eq!(rows[0].broadcast_latency_ms, 114.0);
        assert_eq!(rows[0].expected_ms, 114.0);
        assert_eq!(rows[1].broadcast_latency_ms, 168.0);
        // Commit happens at the t-th ack, earlier than the full round.
        assert!(rows[0].commit_latency_ms < rows[0].broadcast_latency_ms);
    }

    #[test]
    fn latency_is_monotone_in_committee_size() {
        let rows = bench_broadcast(&[7, 34, 151], 100, 220);
        assert!(rows[0].broadcast_latency_ms < rows[1].broadcast_latency_ms);
        assert!(rows[1].broadcast_latency_ms < rows[2].broadcast_latency_ms);
    }
}
