//! Runs every acceptance criterion at its stated tolerance and prints one
//! pass/fail line per criterion. `RESBENCH_SEED` overrides the default seed.

use resbench::validate::{run_criteria, CRITERIA};

fn main() {
    let seed = std::env::var("RESBENCH_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(42);
    let ids: Vec<u32> = CRITERIA.iter().map(|(id, _)| *id).collect();
    let reports = run_criteria(&ids, seed, 1e-8);
    let mut failed = 0;
    for r in &reports {
        println!("{}", r.summary_line());
        for c in &r.checks {
            println!("    {} {}: worst {:e}, tol {:e}, n = {}", if c.passed { "ok  " } else { "FAIL" }, c.check, c.worst, c.tol, c.count);
        }
        if !r.passed() {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed (seed {seed})", reports.len() - failed, reports.len());
    if failed > 0 || reports.len() != CRITERIA.len() {
        std::process::exit(1);
    }
}
