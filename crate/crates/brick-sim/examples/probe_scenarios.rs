use brick_sim::scenario::{run, ScenarioConfig, ScenarioKind, SCENARIO_NAMES};

fn main() {
    for (name, kind) in SCENARIO_NAMES {
        let cfg = ScenarioConfig::preset(*kind, 42);
        match run(&cfg) {
            Ok(out) => {
                let r = &out.report;
                println!(
                    "{name:<22} phase={:<10} close={:?} seq={:?} fresh={} safety={} pof={} slashed={:?} viol={:?} acks={:?}",
                    r.final_phase, r.close_kind, r.closing_seq, r.freshest_committed_seq,
                    r.safety_ok, r.proofs_of_fraud, r.slashed, r.violations, r.ack_counts,
                );
                if *kind == ScenarioKind::ByzantineF || *kind == ScenarioKind::ThresholdBoundary {
                    println!("    payouts: {:?}", r.payouts);
                    println!("    warden_income: {:?}", r.warden_income);
                }
            }
            Err(e) => println!("{name:<22} ERROR {e}"),
        }
    }
}
