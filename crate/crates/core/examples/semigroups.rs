//! Heat and bi-Laplacian semigroups, Duhamel integrals and smoothing rates.

use phi43::lp::{uniform_times, TrajectoryField};
use phi43::semigroup::{
    alpha, duhamel, heat_apply, power_law_field, smoothing_exponent_fit, smoothing_times, HeatKind,
};
use phi43::{FourierField, ModeLattice};

fn main() -> phi43::Result<()> {
    let lattice = ModeLattice::new(8, 2)?;
    let eps = 0.1;

    let f = FourierField::cosine(&lattice, [1, 1, 0], 1.0)?;
    let t = 0.01;
    let decayed = heat_apply(&f, t, eps, HeatKind::Full)?;
    let a = alpha(eps, [1, 1, 0]);
    println!("P_t cos: amplitude {:.8}, e^(-αt) = {:.8}", decayed.sup_norm(), (-a * t).exp());

    // L⁻¹ of a constant-in-time source: (1 - e^{-αt})/α per mode.
    let times = uniform_times(0.05, 1e-3)?;
    let src = TrajectoryField::constant(times, &f)?;
    let d = duhamel(&src, eps)?;
    let end = d.at(d.len() - 1).sup_norm();
    println!("Duhamel at T: {end:.8}, exact {:.8}", (1.0 - (-a * 0.05).exp()) / a);

    let u = power_law_field(&lattice, 0.0);
    for (kind, e, rate) in [(HeatKind::Laplace, 0.0, 0.5), (HeatKind::Bilaplace, 1.0, 0.25)] {
        for delta in [0.5, 1.0] {
            let fit = smoothing_exponent_fit(&u, kind, 0.0, delta, e, &smoothing_times(kind, delta, e, 4.0, 8))?;
            println!("{kind:?} δ={delta}: slope {:.3} (expected {:.3})", fit.slope, -rate * delta);
        }
    }
    Ok(())
}
