use brick_sim::scenario::{run, ScenarioConfig, ScenarioKind};

fn main() {
    let cfg = ScenarioConfig::preset(ScenarioKind::ThresholdBoundary, 42);
    let out = run(&cfg).unwrap();
    for line in out.trace_jsonl.lines() {
        if line.contains("announce seq 5") || line.contains("close") || line.contains("ack seq 5") || line.contains("ack-rejected") {
            println!("{line}");
        }
    }
}
