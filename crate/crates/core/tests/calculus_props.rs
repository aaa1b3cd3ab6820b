mod common;

use phi43::diff_ops::{bform, tform};
use phi43::lp::{uniform_times, TrajectoryField};
use phi43::semigroup::{duhamel, heat_apply, linear_fit, power_law_field, smoothing_times, HeatKind};
use phi43::{DyadicPartition, FourierField, Paracalc};
use proptest::prelude::*;

use common::{fit_then_assert, lattice, shaped};

const KAPPA: f64 = 0.05;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn besov_triangle_inequality(s in any::<u64>(), alpha in -1.5..1.0f64) {
        let l = lattice(4);
        let p = DyadicPartition::for_lattice(&l);
        let (f, g) = (shaped(&l, s, 0.0), shaped(&l, s ^ 7, -0.5));
        let lhs = p.besov_norm(&(&f + &g), alpha).unwrap();
        let rhs = p.besov_norm(&f, alpha).unwrap() + p.besov_norm(&g, alpha).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn blockwise_monotonicity(s in any::<u64>(), a in -1.0..1.0f64, gap in 0.0..1.0f64) {
        let l = lattice(4);
        let p = DyadicPartition::for_lattice(&l);
        let sups = p.block_sups(&shaped(&l, s, 0.0)).unwrap();
        for (idx, &v) in sups.sups.iter().enumerate().skip(1) {
            let j = idx as f64 - 1.0;
            prop_assert!(2f64.powf(j * (a - gap)) * v <= 2f64.powf(j * a) * v);
        }
        prop_assert!(p.besov_norm(&shaped(&l, s, 0.0), a - gap).unwrap()
            <= 2f64.powf(gap) * p.besov_norm(&shaped(&l, s, 0.0), a).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn bony_reconstruction(s in any::<u64>(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let l = lattice(4);
        let pc = Paracalc::for_lattice(&l);
        let (f, g) = (shaped(&l, s, a), shaped(&l, s ^ 3, b));
        let [x, y, z] = pc.bony(&f, &g).unwrap();
        let prod = f.multiply(&g).unwrap();
        prop_assert!((&(&(&x + &y) + &z) - &prod).sup_norm() <= 1e-10 * prod.sup_norm());
    }

    #[test]
    fn b_is_symmetric_and_bilinear(s in any::<u64>(), c in -2.0..2.0f64) {
        let l = lattice(3);
        let (f, g, h) = (shaped(&l, s, 0.5), shaped(&l, s ^ 1, 0.5), shaped(&l, s ^ 2, 0.5));
        let fg = bform(&f, &g);
        prop_assert!(fg.max_diff(&bform(&g, &f)) <= 1e-10 * fg.max_coeff());
        let lhs = bform(&(&f.scale(c) + &h), &g);
        let rhs = &fg.scale(c) + &bform(&h, &g);
        prop_assert!(lhs.max_diff(&rhs) <= 1e-10 * (lhs.max_coeff() + rhs.max_coeff()));
    }

    #[test]
    fn t_is_symmetric_and_trilinear(s in any::<u64>(), c in -2.0..2.0f64) {
        let l = lattice(3);
        let (f, g, h, k) = (shaped(&l, s, 0.5), shaped(&l, s ^ 1, 0.5), shaped(&l, s ^ 2, 0.5), shaped(&l, s ^ 4, 0.5));
        let t = tform(&f, &g, &h);
        prop_assert!(t.max_diff(&tform(&g, &f, &h)) <= 1e-10 * t.max_coeff());
        let lhs = tform(&f, &g, &(&h.scale(c) + &k));
        let rhs = &t.scale(c) + &tform(&f, &g, &k);
        prop_assert!(lhs.max_diff(&rhs) <= 1e-10 * (lhs.max_coeff() + rhs.max_coeff()));
    }
}

#[test]
fn interpolation_between_eps_norms() {
    let l = lattice(6);
    let p = DyadicPartition::for_lattice(&l);
    let alpha = -0.5;
    fit_then_assert("interpolation", 0..6, 100..106, 2.0, |s| {
        let f = shaped(&l, s, alpha);
        let mut out = Vec::new();
        for eps in [1e-3, 1e-2, 0.1, 1.0f64] {
            for delta in [0.25, 0.5, 0.75, 1.0] {
                let lhs = p.besov_norm(&f, alpha + delta * (2.0 - KAPPA)).unwrap();
                let rhs = eps.powf(-delta * (1.0 - KAPPA / 4.0)) * p.eps_norm(&f, alpha, eps, KAPPA).unwrap();
                out.push((lhs, rhs));
            }
        }
        out
    });
}

#[test]
fn paraproduct_bound() {
    let l = lattice(6);
    let pc = Paracalc::for_lattice(&l);
    let p = pc.partition();
    fit_then_assert("paraproduct", 0..6, 100..106, 2.0, |s| {
        [-0.5, -1.2]
            .iter()
            .map(|&beta| {
                let (u, v) = (shaped(&l, s, 0.3), shaped(&l, s ^ 9, beta));
                let lhs = p.besov_norm(&pc.para(&u, &v).unwrap(), beta).unwrap();
                (lhs, u.sup_norm() * p.besov_norm(&v, beta).unwrap())
            })
            .collect()
    });
}

#[test]
fn resonant_bound() {
    let l = lattice(6);
    let pc = Paracalc::for_lattice(&l);
    let p = pc.partition();
    fit_then_assert("resonant", 0..6, 100..106, 2.0, |s| {
        [(0.7, -0.4), (1.2, -0.9)]
            .iter()
            .map(|&(a, b)| {
                let (u, v) = (shaped(&l, s, a), shaped(&l, s ^ 9, b));
                let lhs = p.besov_norm(&pc.resonant(&u, &v).unwrap(), a + b).unwrap();
                (lhs, p.besov_norm(&u, a).unwrap() * p.besov_norm(&v, b).unwrap())
            })
            .collect()
    });
}

#[test]
fn paralinearization_of_exp() {
    let l = lattice(6);
    let pc = Paracalc::for_lattice(&l);
    let p = pc.partition();
    let alpha = 0.4;
    fit_then_assert("paralinearization", 0..6, 100..106, 2.0, |s| {
        [0.05, 0.2]
            .iter()
            .map(|&amp| {
                let f = shaped(&l, s, alpha).scale(amp);
                let e = f.exp_scaled(1.0).unwrap();
                let rem = &e - &pc.para(&e, &f).unwrap();
                let n = p.besov_norm(&f, alpha).unwrap();
                (p.besov_norm(&rem, 2.0 * alpha).unwrap(), 1.0 + n * n)
            })
            .collect()
    });
}

#[test]
fn paramultiplication_bound() {
    let l = lattice(6);
    let pc = Paracalc::for_lattice(&l);
    let p = pc.partition();
    let (a, b) = (0.6, -0.3);
    fit_then_assert("paramultiplication", 0..6, 100..106, 2.0, |s| {
        let (f, g, h) = (shaped(&l, s, a), shaped(&l, s ^ 1, a), shaped(&l, s ^ 2, b));
        let lhs = &pc.para(&f, &pc.para(&g, &h).unwrap()).unwrap() - &pc.para(&f.multiply(&g).unwrap(), &h).unwrap();
        let scale = p.besov_norm(&f, a).unwrap() * p.besov_norm(&g, a).unwrap() * p.besov_norm(&h, b).unwrap();
        vec![(p.besov_norm(&lhs, a + b).unwrap(), scale)]
    });
}

fn random_trajectory(l: &phi43::ModeLattice, seed: u64, alpha: f64, t_end: f64) -> TrajectoryField {
    let times = uniform_times(t_end, 2e-3).unwrap();
    let fields = (0..times.len() as u64).map(|n| shaped(l, seed.wrapping_mul(1000) + n, alpha)).collect();
    TrajectoryField::new(times, fields).unwrap()
}

#[test]
fn schauder_estimate() {
    let l = lattice(6);
    let p = DyadicPartition::for_lattice(&l);
    let alpha = -0.5;
    fit_then_assert("schauder", 0..3, 100..103, 2.0, |s| {
        let u = random_trajectory(&l, s, alpha, 0.02);
        let rhs = p.sup_in_time(&u, alpha).unwrap();
        [0.01, 0.1, 1.0]
            .iter()
            .map(|&eps| {
                let v = duhamel(&u, eps).unwrap();
                let lhs = v.fields().iter().map(|f| p.eps_norm(f, alpha + 2.0, eps, KAPPA).unwrap()).fold(0.0, f64::max);
                (lhs, rhs)
            })
            .collect()
    });
}

#[test]
fn weighted_schauder_estimate() {
    let l = lattice(6);
    let p = DyadicPartition::for_lattice(&l);
    let (alpha, eta) = (-0.5, 0.3);
    let weighted = |u: &TrajectoryField, f: &dyn Fn(&FourierField) -> f64| {
        u.iter().skip(1).map(|(t, x)| t.powf(eta) * f(x)).fold(0.0, f64::max)
    };
    fit_then_assert("weighted schauder", 0..3, 100..103, 2.0, |s| {
        let mut out = Vec::new();
        for t_end in [0.01, 0.04] {
            // Sources blowing up like t^{-η/2} near zero.
            let raw = random_trajectory(&l, s, alpha, t_end);
            let u = TrajectoryField::new(
                raw.times().to_vec(),
                raw.iter().map(|(t, f)| f.scale(t.max(1e-3).powf(-eta / 2.0))).collect(),
            )
            .unwrap();
            let rhs = t_end.powf(KAPPA / 2.0) * weighted(&u, &|f| p.besov_norm(f, alpha).unwrap());
            for eps in [0.01, 0.1, 1.0] {
                let v = duhamel(&u, eps).unwrap();
                out.push((weighted(&v, &|f| p.eps_norm(f, alpha + 2.0 - KAPPA, eps, KAPPA).unwrap()), rhs));
            }
        }
        out
    });
}

#[test]
fn bilaplace_continuity_rate() {
    let l = lattice(16);
    for beta in [1.0, 1.5, 2.0] {
        let u = power_law_field(&l, beta);
        let times = smoothing_times(HeatKind::Bilaplace, beta, 1.0, 4.0, 10);
        let y: Vec<f64> = times
            .iter()
            .map(|&t| (&heat_apply(&u, t, 1.0, HeatKind::Bilaplace).unwrap() - &u).sup_norm().ln())
            .collect();
        let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let (slope, _) = linear_fit(&x, &y).unwrap();
        assert!((slope - beta / 4.0).abs() <= 0.1, "beta={beta}: slope {slope}");
    }
}

#[test]
fn semigroup_paraproduct_commutator() {
    let l = lattice(6);
    let pc = Paracalc::for_lattice(&l);
    let p = pc.partition();
    let (a, b, delta) = (0.5, -1.0, 1.5);
    fit_then_assert("commutator", 0..3, 100..103, 2.0, |s| {
        let f = shaped(&l, s ^ 77, a);
        let g = random_trajectory(&l, s, b, 0.02);
        let fg = g.map(|x| pc.para(&f, x).unwrap());
        [0.01, 0.1, 1.0]
            .iter()
            .map(|&eps| {
                let lhs = duhamel(&fg, eps).unwrap().sub(&duhamel(&g, eps).unwrap().map(|x| pc.para(&f, x).unwrap())).unwrap();
                let rhs = p.besov_norm(&f, a).unwrap() * p.sup_in_time(&g, b).unwrap();
                (p.sup_in_time(&lhs, a + b + delta).unwrap(), rhs)
            })
            .collect()
    });
}

#[test]
fn operator_bound_b() {
    let l = lattice(6);
    let p = DyadicPartition::for_lattice(&l);
    let (a, b) = (1.2, 1.2);
    fit_then_assert("B bound", 0..4, 100..104, 2.0, |s| {
        let (f, g) = (shaped(&l, s, a), shaped(&l, s ^ 5, b));
        let mut out = Vec::new();
        for eps in [1e-2, 0.1, 1.0f64] {
            for delta in [0.0, 0.25, 0.5] {
                let lhs = p.besov_norm(&bform(&f, &g), a + b - 2.0 + delta * (2.0 - KAPPA)).unwrap();
                let rhs = eps.powf(-delta * (1.0 - KAPPA / 4.0))
                    * p.eps_norm(&f, a, eps, KAPPA).unwrap()
                    * p.eps_norm(&g, b, eps, KAPPA).unwrap();
                out.push((lhs, rhs));
            }
        }
        out
    });
}
