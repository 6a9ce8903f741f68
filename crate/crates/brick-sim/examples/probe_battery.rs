use brick_sim::scenario::{run, run_battery, ScenarioConfig, ScenarioKind};

fn main() {
    for suite in ["safety", "liveness", "conservation", "baseline"] {
        let summary = run_battery(suite, 25, 1);
        println!(
            "{suite:<14} runs={} failures={}",
            summary.runs,
            summary.failures.len()
        );
        for f in summary.failures.iter().take(5) {
            println!("   {} seed={} : {}", f.scenario, f.seed, f.reason);
        }
    }
    // Audit tampering variant.
    let mut cfg = ScenarioConfig::preset(ScenarioKind::AuditFlow, 3);
    cfg.audit_tamper = true;
    let r = run(&cfg).unwrap().report;
    println!(
        "audit-tamper verdict={:?} punish={:?}",
        r.audit.as_ref().map(|a| a.verdict.clone()),
        r.audit.as_ref().map(|a| a.external_punishment)
    );
    // Sign-after-close across a few seeds.
    for seed in 1..=5 {
        let cfg = ScenarioConfig::preset(ScenarioKind::SignAfterClose, seed);
        let r = run(&cfg).unwrap().report;
        println!(
            "sign-after-close seed={seed} slashed={} safety={} viol={:?}",
            r.slashed.len(),
            r.safety_ok,
            r.violations
        );
    }
}
