//! Write a matrix to CSV, read it back exactly, and fingerprint it for a
//! run manifest.

use wspls::cli::io::{read_matrix, write_matrix};
use wspls::cli::manifest::digest;
use wspls::simbench::{simulate_pair, SimSpec};

fn main() -> wspls::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("X.csv");
    let data = simulate_pair(&SimSpec::custom(6, 4, 3).with_seed(2))?;

    write_matrix(&path, &data.x)?;
    let back = read_matrix(&path)?;
    println!(
        "{}x{} matrix, exact round trip: {}",
        back.nrows(),
        back.ncols(),
        back == data.x
    );
    println!("sha256 {}", digest(&path)?.sha256);
    Ok(())
}
