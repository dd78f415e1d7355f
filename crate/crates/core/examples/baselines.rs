//! The unweighted comparison methods on one simulated pair: PLS, l0-sparse
//! PLS and the l1-bounded penalized matrix decomposition (with its bounds
//! calibrated to the same sparsity as the l0 method).

use wspls::baselines::{calibrate_c, l0_spls, pls_rank1, pmd_spls};
use wspls::matrix::{prepare, Preprocessing};
use wspls::simbench::{simulate_pair, Scenario, SimSpec};
use wspls::SolverConfig;

fn main() -> wspls::Result<()> {
    let spec = SimSpec::preset(Scenario::I)?.with_seed(11);
    let data = simulate_pair(&spec)?;
    let x = prepare(&data.x, Preprocessing::Identity)?;
    let y = prepare(&data.y, Preprocessing::Identity)?;
    let b = spec.budgets();
    let config = SolverConfig::new(b.k_u, b.k_v, b.k_w).with_seed(11);

    let pls = pls_rank1(&x, &y, 500, 1e-10, 11)?;
    println!(
        "PLS      u^T X^T Y v = {:8.3}, nnz = ({}, {})",
        pls.objective,
        pls.u.nnz(),
        pls.v.nnz()
    );

    let l0 = l0_spls(&x, &y, b.k_u, b.k_v, &config)?;
    println!(
        "l0-sPLS  u^T X^T Y v = {:8.3}, nnz = ({}, {})",
        l0.objective,
        l0.u.nnz(),
        l0.v.nnz()
    );

    let c = calibrate_c(&x, &y, b.k_u, b.k_v, &config)?;
    let pmd = pmd_spls(&x, &y, c.c1, c.c2, &config)?;
    println!(
        "PMD      u^T X^T Y v = {:8.3}, nnz = ({}, {}) at c = ({:.3}, {:.3})",
        pmd.objective,
        pmd.u.nnz(),
        pmd.v.nnz(),
        c.c1,
        c.c2
    );
    Ok(())
}
