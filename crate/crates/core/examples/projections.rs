//! The three projection operators used by the solvers.

use ndarray::array;
use wspls::projections::{l1_unit_project, project_weight, top_k_unit};

fn main() -> wspls::Result<()> {
    let z = array![0.3, -2.0, 0.0, 1.5, -0.2];

    // closest unit vector with at most 2 nonzeros
    let t = top_k_unit(z.view(), 2)?;
    println!(
        "top_k_unit(z, 2)     = {} support {:?}",
        t.vector, t.support
    );

    // closest point of the box [0, 1]^n with at most 2 nonzeros
    let w_bar = array![1.7, -0.4, 0.6, 2.3, 0.9];
    let w = project_weight(w_bar.view(), 2)?;
    println!(
        "project_weight(w, 2) = {} support {:?}",
        w.vector, w.support
    );

    // unit vector maximizing a^T u with ||u||_1 <= 1.5
    let u = l1_unit_project(z.view(), 1.5)?;
    let l1: f64 = u.iter().map(|x| x.abs()).sum();
    println!("l1_unit_project(z, 1.5) = {u:.4} (l1 norm {l1:.4})");
    Ok(())
}
