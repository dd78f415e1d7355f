//! Repeated-run support-recovery benchmark on a synthetic scenario.
//!
//! Usage: `cargo run --release --example benchmark -- [I|II|III] [runs]`

use wspls::matrix::Preprocessing;
use wspls::simbench::{run_benchmark, Method, Scenario, SimSpec, METRIC_NAMES};
use wspls::SolverConfig;

fn main() -> wspls::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario: Scenario = args.next().as_deref().unwrap_or("I").parse()?;
    let runs: usize = args.next().and_then(|r| r.parse().ok()).unwrap_or(20);

    let spec = SimSpec::preset(scenario)?.with_seed(1);
    let report = run_benchmark(
        &spec,
        &Method::ALL,
        runs,
        &SolverConfig::new(1, 1, 1),
        Preprocessing::Identity,
    )?;

    println!(
        "n={} p={} q={} budgets={:?} runs={runs}",
        spec.n, spec.p, spec.q, report.budgets
    );
    print!("{:<8}", "method");
    for name in METRIC_NAMES {
        print!(" {name:>15}");
    }
    println!();
    for s in &report.summary {
        print!("{:<8}", s.method.name());
        for (m, sd) in s.mean.iter().zip(&s.std) {
            print!(" {:>7.3} ({:.3})", m, sd);
        }
        println!();
    }
    Ok(())
}
