//! Three views sharing a planted sample subset, fitted with the sum and the
//! product coupling.

use wspls::matrix::{prepare, Preprocessing};
use wspls::mwspls::{fit_scheme, MultiViewData, Scheme};
use wspls::simbench::simulate_views;
use wspls::stats::support;
use wspls::SolverConfig;

fn main() -> wspls::Result<()> {
    let (n, dims, k_w) = (60, [40, 50, 30], 20);
    let sim = simulate_views(n, &dims, k_w, 0.5, 3)?;
    let views = sim
        .views
        .iter()
        .map(|v| prepare(v, Preprocessing::Identity))
        .collect::<wspls::Result<Vec<_>>>()?;
    let data = MultiViewData::new(views)?;
    let budgets: Vec<usize> = sim
        .loadings
        .iter()
        .map(|u| support(u.view()).len())
        .collect();
    let config = SolverConfig::new(budgets[0], budgets[1], k_w).with_seed(3);

    for scheme in [Scheme::Sum, Scheme::Product] {
        let sol = fit_scheme(&data, &budgets, k_w, &config, scheme)?;
        let planted = support(sim.w.view());
        let hits = sol
            .w
            .selected()
            .iter()
            .filter(|j| planted.contains(j))
            .count();
        println!(
            "{scheme:?}: objective {:.3}, {hits}/{k_w} planted samples selected, supports {:?}",
            sol.objective(),
            sol.us.iter().map(|u| u.nnz()).collect::<Vec<_>>()
        );
    }
    Ok(())
}
