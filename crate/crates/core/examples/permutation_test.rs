//! S-score of a planted three-view co-module and its permutation p-value,
//! next to a randomly chosen module of the same shape.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wspls::comodules::{permutation_test, CoModule};
use wspls::simbench::simulate_module;

fn main() -> wspls::Result<()> {
    let sim = simulate_module(80, &[30, 40, 25], 20, 5, 2.0, 17)?;
    let views: Vec<ArrayView2<'_, f64>> = sim.views.iter().map(|v| v.view()).collect();

    let planted = CoModule {
        sample_indices: sim.samples.clone(),
        feature_indices: sim.features.clone(),
        s_score: None,
        source: "planted".into(),
    };
    let r = permutation_test(&planted, &views, 1000, 1)?;
    println!("planted: S = {:.3}, p = {:.4}", r.observed, r.p_value);

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random = CoModule {
        sample_indices: sample(&mut rng, 80, 20).into_vec(),
        feature_indices: views
            .iter()
            .map(|v| sample(&mut rng, v.ncols(), 5).into_vec())
            .collect(),
        s_score: None,
        source: "random".into(),
    };
    let r = permutation_test(&random, &views, 1000, 1)?;
    println!("random:  S = {:.3}, p = {:.4}", r.observed, r.p_value);
    Ok(())
}
