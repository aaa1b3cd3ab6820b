//! Bony decomposition, resonant products and the commutator.

use phi43::random::{gaussian_field, Spectrum};
use phi43::{ModeLattice, Paracalc};

fn main() -> phi43::Result<()> {
    let lattice = ModeLattice::new(8, 2)?;
    let pc = Paracalc::for_lattice(&lattice);
    let f = gaussian_field(&lattice, 1, Spectrum::Shaped { alpha: 0.5 }, 1.0);
    let g = gaussian_field(&lattice, 2, Spectrum::Shaped { alpha: -0.3 }, 1.0);

    let [low_high, high_low, res] = pc.bony(&f, &g)?;
    let prod = f.multiply(&g)?;
    let sum = &(&low_high + &high_low) + &res;
    println!("|f⊲g + f⊳g + f⊙g - fg| / |fg| = {:e}", (&sum - &prod).sup_norm() / prod.sup_norm());
    println!(
        "sup norms: f⊲g {:.4}  f⊳g {:.4}  f⊙g {:.4}",
        low_high.sup_norm(),
        high_low.sup_norm(),
        res.sup_norm()
    );

    // With f ∈ C^0.7, g ∈ C^0.2, h ∈ C^-0.5 the product (f⊲g)⊙h has no limit
    // as N grows, while C(f,g,h) = (f⊲g)⊙h - f(g⊙h) stays bounded.
    for n in [8, 16] {
        let lattice = ModeLattice::new(n, 2)?;
        let pc = Paracalc::for_lattice(&lattice);
        let f = gaussian_field(&lattice, 5, Spectrum::Shaped { alpha: 0.7 }, 1.0);
        let g = gaussian_field(&lattice, 6, Spectrum::Shaped { alpha: 0.2 }, 1.0);
        let h = gaussian_field(&lattice, 7, Spectrum::Shaped { alpha: -0.5 }, 1.0);
        let p = pc.partition();
        println!(
            "N={n:<2} C^0 norms: (f⊲g)⊙h {:.4}, commutator {:.4}",
            p.besov_norm(&pc.resonant(&pc.para(&f, &g)?, &h)?, 0.0)?,
            p.besov_norm(&pc.commutator(&f, &g, &h)?, 0.0)?
        );
    }
    Ok(())
}
