//! Truncated Fourier fields: construction, grid values, Galerkin products, dumps.

use phi43::{FourierField, ModeLattice};

fn main() -> phi43::Result<()> {
    let lattice = ModeLattice::new(4, 2)?;
    println!("N = {}, {} modes, grid {}^3", lattice.n(), lattice.len(), lattice.resolution());

    let f = FourierField::cosine(&lattice, [1, 0, 0], 1.0)?;
    let g = FourierField::sine(&lattice, [0, 2, 1], 0.5)?;
    let grid = f.to_grid();
    println!("sup |cos(2πx)| on the grid = {:.12}", grid.sup());

    // cos² = 1/2 + cos(4πx)/2 stays inside the lattice.
    let sq = f.square();
    println!("mean of cos² = {:.12}", sq.mean());

    let prod = f.multiply(&g)?;
    println!("|fg|_inf = {:.6}, |f|_inf |g|_inf = {:.6}", prod.sup_norm(), f.sup_norm() * g.sup_norm());

    // Modes beyond N are dropped by the projection.
    let high = FourierField::cosine(&lattice, [3, 0, 0], 1.0)?;
    println!("P_N(cos(6πx)²) mean {:.3}, max coeff {:.3}", high.square().mean(), high.square().max_coeff());

    let mut buf = Vec::new();
    prod.write_dump(&mut buf)?;
    let back = FourierField::read_dump(buf.as_slice())?;
    println!("dump: {} bytes, round-trip difference {:e}", buf.len(), back.max_diff(&prod));
    Ok(())
}
