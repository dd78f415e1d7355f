//! Extract three co-modules in turn from data with three planted blocks on
//! disjoint samples.

use wspls::comodules::extract_sequential;
use wspls::simbench::simulate_blocks;
use wspls::SolverConfig;

fn main() -> wspls::Result<()> {
    let data = simulate_blocks(60, 40, 45, 3, 10, 8, 9, 0.5, 5)?;
    let config = SolverConfig::new(8, 9, 10).with_seed(5).with_restarts(10);
    let ex = extract_sequential(&data.x, &data.y, &config, 3)?;
    for (round, m) in ex.modules.iter().enumerate() {
        println!(
            "round {round}: samples {:?}, S-score {:.3}",
            m.sample_indices,
            m.s_score.unwrap_or(f64::NAN)
        );
    }
    println!("dropped columns: {:?}", ex.dropped_columns);
    Ok(())
}
