use brick_sim::scenario::run_battery;
use std::time::Instant;

fn main() {
    for suite in ["safety", "liveness", "conservation", "baseline"] {
        let start = Instant::now();
        let summary = run_battery(suite, 250, 1);
        println!(
            "{suite:<14} runs={:<5} failures={:<3} wall={:?}",
            summary.runs,
            summary.failures.len(),
            start.elapsed()
        );
        for f in summary.failures.iter().take(3) {
            println!("   {} seed={} : {}", f.scenario, f.seed, f.reason);
        }
    }
}
