#![allow(dead_code)]

use phi43::random::{gaussian_field, Spectrum};
use phi43::{FourierField, ModeLattice};

pub fn lattice(n: usize) -> ModeLattice {
    ModeLattice::new(n, 2).unwrap()
}

/// Random field with the spectral shape of a typical element of `C^alpha`.
pub fn shaped(l: &ModeLattice, seed: u64, alpha: f64) -> FourierField {
    gaussian_field(l, seed, Spectrum::Shaped { alpha }, 1.0)
}

/// Random field supported on `|k|_inf <= m`.
pub fn band_limited(l: &ModeLattice, seed: u64, m: i32) -> FourierField {
    let f = gaussian_field(l, seed, Spectrum::White, 1.0);
    let modes = l.modes().to_vec();
    f.map_real_symbol(|i| {
        let k = modes[i];
        if k.iter().all(|c| c.abs() <= m) {
            1.0
        } else {
            0.0
        }
    })
}

/// Fit `K = max value/scale` on `fit` seeds, then require
/// `value <= margin·K·scale` on the disjoint `check` seeds.
pub fn fit_then_assert(
    name: &str,
    fit: std::ops::Range<u64>,
    check: std::ops::Range<u64>,
    margin: f64,
    sample: impl Fn(u64) -> Vec<(f64, f64)>,
) -> f64 {
    let k = fit
        .flat_map(&sample)
        .map(|(v, s)| v / s)
        .fold(0.0, f64::max);
    assert!(k.is_finite() && k > 0.0, "{name}: fitted constant {k}");
    for seed in check {
        for (v, s) in sample(seed) {
            assert!(v <= margin * k * s, "{name}: seed {seed}: {v} > {margin} x {k} x {s}");
        }
    }
    k
}
