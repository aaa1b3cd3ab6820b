//! Stationary OU sampling, Wick powers and the full driving vector with its norms.

use phi43::noise::{build_driving_vector, regularity_report, ConstantsMode, NoiseConfig, OuSampler, UsedConstants};
use phi43::semigroup::alpha;
use phi43::ModeLattice;

fn main() -> phi43::Result<()> {
    let lattice = ModeLattice::new(4, 2)?;
    let (eps, dt) = (0.1, 1e-3);

    // Time average of |X̂(k)|² along one path.
    let k = [1, 0, 0];
    let mut ou = OuSampler::new(&lattice, eps, dt, 5);
    let mut acc = 0.0;
    let steps = 20_000;
    for _ in 0..steps {
        ou.advance();
        acc += ou.coeff(k).norm_sqr();
    }
    println!("mode {k:?}: time-averaged variance {:.5}, stationary {:.5}", acc / steps as f64, 1.0 / (2.0 * alpha(eps, k)));

    let cfg = NoiseConfig::new(5, lattice, dt, 0.02, 5.0, eps)?;
    let constants = UsedConstants::compute(ConstantsMode::Simulator, eps, 4, dt);
    let xi = build_driving_vector(&cfg, constants)?;
    println!("a={:.5} b={:.5} c={:.6}, {} time slices", constants.a, constants.b, constants.c, xi.times().len());
    for row in regularity_report(&xi, 0.05)? {
        println!("  {:<6} {:<28} {:.5}", row.component, row.norm, row.value);
    }
    Ok(())
}
