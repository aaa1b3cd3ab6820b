//! Dyadic blocks, block sup norms and Besov–Hölder norms of a white-noise sample.

use phi43::random::{gaussian_field, Spectrum};
use phi43::{DyadicPartition, ModeLattice};

fn main() -> phi43::Result<()> {
    let lattice = ModeLattice::new(8, 2)?;
    let p = DyadicPartition::for_lattice(&lattice);
    println!("j_max = {}, covered radius {:.2}", p.j_max(), p.radius());

    let w = p.weights(&lattice)?;
    let defect = (0..lattice.len())
        .map(|i| (w.iter().map(|b| b[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    println!("partition of unity defect {defect:e}");

    let xi = gaussian_field(&lattice, 3, Spectrum::White, 1.0);
    let sups = p.block_sups(&xi)?;
    for (j, s) in sups.sups.iter().enumerate() {
        println!("  |Δ_{:<2} ξ|_inf = {s:.4}", j as i32 - 1);
    }
    // White noise is in C^{-3/2-κ}: the weighted sups level off there.
    for alpha in [-2.0, -1.5, -1.0, 0.0] {
        println!("C^{alpha:<4} norm {:.4}", p.besov_norm(&xi, alpha)?);
    }
    Ok(())
}
