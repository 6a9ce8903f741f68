use brick_sim::scenario::{run, AdversaryKind, ScenarioConfig, ScenarioKind};

fn main() {
    let mut cfg = ScenarioConfig::preset(ScenarioKind::HonestFlow, 1);
    cfg.adversary = AdversaryKind::Reorder { max_hold_ms: 40 };
    let out = run(&cfg).unwrap();
    let lines: Vec<&str> = out.trace_jsonl.lines().collect();
    println!("total {} lines, report phase {}", lines.len(), out.report.final_phase);
    println!("committed: {:?}", out.report.ack_counts);
    for line in lines.iter().filter(|l| l.contains("note") || l.contains("rejected")).take(20) {
        println!("{line}");
    }
    for line in lines.iter().rev().take(12).rev() {
        println!("{line}");
    }
}
