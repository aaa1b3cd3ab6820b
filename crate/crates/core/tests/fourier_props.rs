mod common;

use num_complex::Complex64;
use phi43::random::{gaussian_field, Spectrum};
use proptest::prelude::*;

use common::{band_limited, lattice};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transforms_are_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let l = lattice(3);
        let f = gaussian_field(&l, s1, Spectrum::White, 1.0);
        let g = gaussian_field(&l, s2, Spectrum::White, 1.0);
        let lhs = (&f.scale(a) + &g.scale(b)).to_grid();
        let (gf, gg) = (f.to_grid(), g.to_grid());
        let scale = gf.sup() + gg.sup();
        for i in 0..lhs.values().len() {
            let rhs = a * gf.values()[i] + b * gg.values()[i];
            prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * scale * (a.abs() + b.abs() + 1.0));
        }
    }

    #[test]
    fn parseval(seed in any::<u64>(), alpha in -1.5..1.0f64) {
        let l = lattice(4);
        let f = gaussian_field(&l, seed, Spectrum::Shaped { alpha }, 1.0);
        prop_assert!(rel(f.to_grid().mean_square(), f.l2_squared()) <= 1e-12);
    }

    #[test]
    fn multiply_commutative_and_bilinear(s in any::<u64>(), a in -2.0..2.0f64) {
        let l = lattice(3);
        let f = gaussian_field(&l, s, Spectrum::White, 1.0);
        let g = gaussian_field(&l, s ^ 1, Spectrum::White, 1.0);
        let h = gaussian_field(&l, s ^ 2, Spectrum::White, 1.0);
        let fg = f.multiply(&g).unwrap();
        let scale = fg.max_coeff();
        prop_assert!(fg.max_diff(&g.multiply(&f).unwrap()) <= 1e-12 * scale);
        let lhs = (&f.scale(a) + &h).multiply(&g).unwrap();
        let rhs = &fg.scale(a) + &h.multiply(&g).unwrap();
        prop_assert!(lhs.max_diff(&rhs) <= 1e-12 * (lhs.max_coeff() + rhs.max_coeff()));
    }

    #[test]
    fn associativity_when_degrees_fit(s in any::<u64>()) {
        // Inputs on |k|_inf <= 1 at N = 3: no intermediate product leaves the lattice.
        let l = lattice(3);
        let (f, g, h) = (band_limited(&l, s, 1), band_limited(&l, s ^ 1, 1), band_limited(&l, s ^ 2, 1));
        let left = f.multiply(&g).unwrap().multiply(&h).unwrap();
        let right = f.multiply(&g.multiply(&h).unwrap()).unwrap();
        prop_assert!(left.max_diff(&right) <= 1e-12 * left.max_coeff());
    }

    #[test]
    fn symbols_compose(seed in any::<u64>(), t in 0.0..0.01f64) {
        let l = lattice(4);
        let f = gaussian_field(&l, seed, Spectrum::White, 1.0);
        let m1 = |k: [i32; 3]| Complex64::new(0.0, k[0] as f64 - 0.5 * k[2] as f64);
        let m2 = |k: [i32; 3]| Complex64::new((-t * (k[0] * k[0] + k[1] * k[1]) as f64).exp(), 0.0);
        let two = f.apply_symbol(m1).unwrap().apply_symbol(m2).unwrap();
        let one = f.apply_symbol(|k| m1(k) * m2(k)).unwrap();
        prop_assert!(two.max_diff(&one) <= 1e-15 * one.max_coeff().max(1.0));
    }
}

/// With full-band inputs the two groupings differ: the intermediate product
/// has modes up to 2N and the inner projection discards them.
#[test]
fn associativity_defect_comes_from_truncated_modes() {
    let small = lattice(3);
    let big = lattice(9);
    let (f, g, h) = (band_limited(&small, 4, 3), band_limited(&small, 5, 3), band_limited(&small, 6, 3));
    let left = f.multiply(&g).unwrap().multiply(&h).unwrap();
    let right = f.multiply(&g.multiply(&h).unwrap()).unwrap();
    let defect = left.max_diff(&right);
    assert!(defect > 1e-6 * left.max_coeff());

    // On a lattice holding every intermediate mode both groupings agree, and
    // the N = 3 result is the exact product with the discarded modes removed.
    let lift = |x: &phi43::FourierField| {
        let mut c = vec![Complex64::default(); big.len()];
        for (i, k) in small.modes().iter().enumerate() {
            c[big.index(*k).unwrap()] = x.coeffs()[i];
        }
        phi43::FourierField::from_coeffs(&big, c).unwrap()
    };
    let (bf, bg, bh) = (lift(&f), lift(&g), lift(&h));
    let exact_l = bf.multiply(&bg).unwrap().multiply(&bh).unwrap();
    let exact_r = bf.multiply(&bg.multiply(&bh).unwrap()).unwrap();
    assert!(exact_l.max_diff(&exact_r) <= 1e-12 * exact_l.max_coeff());

    // Removing modes with |k|_inf > 3 from g·h before multiplying by f
    // reproduces the truncated right grouping.
    let gh = bg.multiply(&bh).unwrap();
    let modes = big.modes().to_vec();
    let gh_low = gh.map_real_symbol(|i| if modes[i].iter().all(|c| c.abs() <= 3) { 1.0 } else { 0.0 });
    let trunc_r = bf.multiply(&gh_low).unwrap();
    for (i, k) in small.modes().iter().enumerate() {
        let j = big.index(*k).unwrap();
        assert!((trunc_r.coeffs()[j] - right.coeffs()[i]).norm() <= 1e-12 * right.max_coeff());
    }
}
