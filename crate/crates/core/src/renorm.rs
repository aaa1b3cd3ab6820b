//! Renormalization constants `a_ε`, `b_ε`, `c_ε` as explicit lattice sums,
//! with tail bounds, and the kernels `Q₀^ε`, `H_t^ε`.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourier::Mode;
use crate::semigroup::{alpha, alpha_n2, etd_scalar};

/// A constant and an upper bound on the part of its sum outside the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    pub tail: f64,
}

/// `(a_ε, b_ε, c_ε)` summed over `|k|_∞ ≤ N_sum`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormConstants {
    pub eps: f64,
    pub n_sum: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_tail: f64,
    pub b_tail: f64,
    pub c_tail: f64,
}

/// `Σ_{|k|_∞ ≤ n} φ(|k|²)` via multiplicities of `|k|²`.
fn radial_box_sum(n: usize, phi: impl Fn(f64) -> f64) -> f64 {
    let n = n as i64;
    let mut acc = 0.0;
    for x in 0..=n {
        let wx = if x == 0 { 1.0 } else { 2.0 };
        for y in 0..=n {
            let wy = if y == 0 { 1.0 } else { 2.0 };
            let mut row = 0.0;
            for z in -n..=n {
                row += phi((x * x + y * y + z * z) as f64);
            }
            acc += wx * wy * row;
        }
    }
    acc
}

/// `Σ_{|k|>N} 1/α_ε(k)²` bound.
fn inverse_square_tail(eps: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let heat = 1.0 / (4.0 * PI.powi(3) * nf);
    if eps > 0.0 {
        heat.min(4.0 * PI / (1280.0 * PI.powi(8) * eps * eps * nf.powi(5)))
    } else {
        heat
    }
}

/// `a_ε = Σ_{|k|_∞ ≤ N} 1/(2α_ε(k))`, tail `1/(8π³εN)` for `ε > 0`.
pub fn a_const(eps: f64, n_sum: usize) -> Truncated {
    let value = radial_box_sum(n_sum, |n2| 0.5 / alpha_n2(eps, n2));
    let tail = if eps > 0.0 && n_sum > 0 {
        1.0 / (8.0 * PI.powi(3) * eps * n_sum as f64)
    } else {
        f64::INFINITY
    };
    Truncated { value, tail }
}

/// Signed-permutation orbit size of a point with `0 ≤ x ≤ y ≤ z`.
fn orbit_size(k: [i64; 3]) -> f64 {
    let signs = k.iter().filter(|&&c| c != 0).count() as u32;
    let perms = if k[0] == k[1] && k[1] == k[2] {
        1
    } else if k[0] == k[1] || k[1] == k[2] {
        3
    } else {
        6
    };
    (perms * 2u32.pow(signs)) as f64
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Per-pair term of a double sum: arguments `(α₁, α₂, α₁₂)`.
trait PairTerms {
    const COUNT: usize;
    fn add(&self, a1: f64, n2: usize, n12: usize, out: &mut [f64]);
    /// Factor depending on `k₁` only.
    fn outer_weight(&self, _a1: f64) -> f64 {
        1.0
    }
}

/// Double sum over `k₁, k₂` in the box with `k₁₂ = k₁ + k₂` either unrestricted or in the box.
///
/// The summand is invariant under signed permutations applied to both
/// modes, so `k₁` runs over a fundamental domain with orbit weights.
fn folded_double_sum<T: PairTerms>(n: usize, restrict_sum: bool, alpha_of: &[f64], terms: &T) -> Vec<f64> {
    let ni = n as i64;
    let mut partials: Vec<Vec<f64>> = vec![Vec::new(); T::COUNT];
    let mut acc = vec![0.0; T::COUNT];
    for x in 0..=ni {
        for y in x..=ni {
            for z in y..=ni {
                let w = orbit_size([x, y, z]);
                let n1 = (x * x + y * y + z * z) as usize;
                let a1 = alpha_of[n1];
                acc.iter_mut().for_each(|v| *v = 0.0);
                for p in -ni..=ni {
                    let sx = x + p;
                    if restrict_sum && sx.abs() > ni {
                        continue;
                    }
                    for q in -ni..=ni {
                        let sy = y + q;
                        if restrict_sum && sy.abs() > ni {
                            continue;
                        }
                        let base2 = p * p + q * q;
                        let base12 = sx * sx + sy * sy;
                        let (lo, hi) = if restrict_sum {
                            ((-ni).max(-ni - z), ni.min(ni - z))
                        } else {
                            (-ni, ni)
                        };
                        for r in lo..=hi {
                            let n2 = (base2 + r * r) as usize;
                            let sz = z + r;
                            let n12 = (base12 + sz * sz) as usize;
                            terms.add(a1, n2, n12, &mut acc);
                        }
                    }
                }
                let scale = w * terms.outer_weight(a1);
                for (part, v) in partials.iter_mut().zip(&acc) {
                    part.push(scale * v);
                }
            }
        }
    }
    partials.iter().map(|p| pairwise_sum(p)).collect()
}

/// Accumulates `Σ 1/(α₂ s)` and `Σ 1/(α₂ α₁₂ s)` with `s = α₁+α₂+α₁₂`; the
/// factor `1/(2α₁)` is applied per `k₁`.
struct ContinuumTerms {
    alpha: Vec<f64>,
    inv: Vec<f64>,
}

impl PairTerms for ContinuumTerms {
    const COUNT: usize = 2;
    #[inline]
    fn add(&self, a1: f64, n2: usize, n12: usize, out: &mut [f64]) {
        let t = self.inv[n2] / (a1 + self.alpha[n2] + self.alpha[n12]);
        out[0] += t;
        out[1] += t * self.inv[n12];
    }

    fn outer_weight(&self, a1: f64) -> f64 {
        0.5 / a1
    }
}

/// `b_ε` and `c_ε` by the double sums over `|k₁|_∞, |k₂|_∞ ≤ N_sum` (with `k₁₂` unrestricted).
pub fn renorm_constants(eps: f64, n_sum: usize) -> RenormConstants {
    let a = a_const(eps, n_sum);
    let max_n2 = 3 * (2 * n_sum) * (2 * n_sum);
    let table: Vec<f64> = (0..=max_n2).map(|n2| alpha_n2(eps, n2 as f64)).collect();
    let inv = table.iter().map(|a| 1.0 / a).collect();
    let sums = folded_double_sum(n_sum, false, &table, &ContinuumTerms { alpha: table.clone(), inv });
    let (b, c_abs) = (sums[0], sums[1]);
    let t1 = inverse_square_tail(eps, n_sum);
    let b_tail = if eps > 0.0 {
        t1 * 2.0 * (a.value + a.tail)
    } else {
        f64::INFINITY
    };
    let inv_sq_total = radial_box_sum(n_sum, |n2| alpha_n2(eps, n2).powi(-2)) + t1;
    let c_tail = t1 * inv_sq_total;
    RenormConstants {
        eps,
        n_sum,
        a: a.value,
        b,
        c: -c_abs,
        a_tail: a.tail,
        b_tail,
        c_tail,
    }
}

/// `b_ε = 2Σ 1/(4α₁α₂(α₁+α₂+α₁₂))`.
pub fn b_const(eps: f64, n_sum: usize) -> Truncated {
    let r = renorm_constants(eps, n_sum);
    Truncated {
        value: r.b,
        tail: r.b_tail,
    }
}

/// `c_ε = -2Σ 1/(4α₁α₂α₁₂(α₁+α₂+α₁₂))`.
pub fn c_const(eps: f64, n_sum: usize) -> Truncated {
    let r = renorm_constants(eps, n_sum);
    Truncated {
        value: r.c,
        tail: r.c_tail,
    }
}

/// Constants matched to the simulator at cutoff `N` and step `dt`.
///
/// `a` is the box sum. `b` and `c` are the exact stationary expectations of
/// `I⊙X²` and `∇I⊙∇I + εΔI⊙ΔI - b` for the discrete scheme: exact OU steps
/// for `X`, Galerkin squares, and the second-order exponential integrator for
/// `I`. They restrict `k₁`, `k₂` and `k₁+k₂` to the lattice and converge to the
/// restricted continuum sums as `dt → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConstants {
    pub eps: f64,
    pub n: usize,
    pub dt: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

struct DiscreteTerms {
    dt: f64,
    alpha: Vec<f64>,
    /// `(q, w0, w1)` of the integrator for rate `α(k₁₂)`, indexed by `|k₁₂|²`.
    etd: Vec<(f64, f64, f64)>,
}

impl PairTerms for DiscreteTerms {
    const COUNT: usize = 2;
    #[inline]
    fn add(&self, a1: f64, n2: usize, n12: usize, out: &mut [f64]) {
        let (a2, a12) = (self.alpha[n2], self.alpha[n12]);
        let (q, w0, w1) = self.etd[n12];
        let cc = 2.0 / (4.0 * a1 * a2);
        let r = (-(a1 + a2) * self.dt).exp();
        let amp = w0 + q * w1;
        let qr = q * r;
        let kb = w1 + amp * r / (1.0 - qr);
        let s = w1 * w1
            + amp * amp / (1.0 - q * q)
            + 2.0 * w1 * amp * r / (1.0 - qr)
            + 2.0 * amp * amp * qr / ((1.0 - q * q) * (1.0 - qr));
        out[0] += cc * kb;
        out[1] += cc * ((a12 - 1.0) * s - kb);
    }
}

pub fn sim_constants(eps: f64, n: usize, dt: f64) -> SimConstants {
    let max_n2 = 3 * (2 * n) * (2 * n);
    let table: Vec<f64> = (0..=max_n2).map(|n2| alpha_n2(eps, n2 as f64)).collect();
    let etd = table.iter().map(|&a| etd_scalar(a, dt)).collect();
    let sums = folded_double_sum(n, true, &table, &DiscreteTerms { dt, alpha: table.clone(), etd });
    SimConstants {
        eps,
        n,
        dt,
        a: a_const(eps, n).value,
        b: sums[0],
        c: sums[1],
    }
}

/// `Q₀^ε(σ,k) = 1/(-2πiσ + α_ε(k))`.
pub fn q0_kernel(eps: f64, sigma: f64, k: Mode) -> Complex64 {
    Complex64::new(alpha(eps, k), -2.0 * PI * sigma).inv()
}

/// `H_t^ε(s,k) = 𝟙_{s≤t} e^{-(t-s)α_ε(k)}`.
pub fn h_kernel(eps: f64, t: f64, s: f64, k: Mode) -> f64 {
    if s <= t {
        (-(t - s) * alpha(eps, k)).exp()
    } else {
        0.0
    }
}

/// `|k|_* = 1 + |k|`.
pub fn mode_weight(k: Mode) -> f64 {
    1.0 + ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

/// `|μ|_* = 1 + |σ|^{1/2} + |k|` for `μ = (σ, k)`.
pub fn spacetime_weight(sigma: f64, k: Mode) -> f64 {
    mode_weight(k) + sigma.abs().sqrt()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (8 points).
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Composite Gauss–Legendre rule on `[0, len]` with `panels` panels.
pub fn gauss_rule(len: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = len / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL8 {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Time-FT `∫_0^W H(τ) e^{2πiστ} dτ` of the lag kernel, by quadrature.
pub fn windowed_h_transform(eps: f64, sigma: f64, k: Mode, window: f64, panels: usize) -> Complex64 {
    gauss_rule(window, panels)
        .into_iter()
        .map(|(tau, w)| Complex64::from_polar(w * h_kernel(eps, tau, 0.0, k), 2.0 * PI * sigma * tau))
        .sum()
}

/// `b_ε` and `c_ε` at a small cutoff by time quadrature of the covariance integrals.
///
/// `b`: `Σ 2C₁C₂ ∫_0^∞ e^{-s(α₁+α₂)} e^{-sα₁₂} ds`.
/// `c`: `-Σ 2C₁C₂ ∫∫_{s₁,s₂≥0} e^{-|s₁-s₂|(α₁+α₂)} e^{-(s₁+s₂)α₁₂} ds₁ds₂`, where `C = 1/(2α)`.
pub fn quadrature_constants(eps: f64, n_sum: usize) -> (f64, f64) {
    use std::collections::BTreeMap;
    let n = n_sum as i32;
    let mut classes: BTreeMap<(i32, i32, i32), f64> = BTreeMap::new();
    let mut modes = Vec::new();
    for x in -n..=n {
        for y in -n..=n {
            for z in -n..=n {
                modes.push([x, y, z]);
            }
        }
    }
    let n2 = |k: [i32; 3]| k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    for &k1 in &modes {
        for &k2 in &modes {
            let s = [k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2]];
            *classes.entry((n2(k1), n2(k2), n2(s))).or_default() += 1.0;
        }
    }
    let mut b = 0.0;
    let mut c = 0.0;
    for (&(m1, m2, m12), &count) in &classes {
        let (a1, a2, a12) = (
            alpha_n2(eps, m1 as f64),
            alpha_n2(eps, m2 as f64),
            alpha_n2(eps, m12 as f64),
        );
        let cc = 2.0 / (4.0 * a1 * a2);
        let beta = a1 + a2;
        let single: f64 = gauss_rule(40.0 / (beta + a12), 40)
            .into_iter()
            .map(|(s, w)| w * (-s * (beta + a12)).exp())
            .sum();
        // Split the square at the diagonal: s₂ = s₁ + d on one half.
        let outer = gauss_rule(40.0 / (2.0 * a12), 40);
        let inner = gauss_rule(40.0 / (beta + a12), 40);
        let mut double = 0.0;
        for &(s1, w1) in &outer {
            for &(d, w2) in &inner {
                double += w1 * w2 * (-d * beta - (2.0 * s1 + d) * a12).exp();
            }
        }
        b += count * cc * single;
        c -= count * cc * 2.0 * double;
    }
    (b, c)
}

/// One row of the renorm-table report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormRow {
    pub eps: f64,
    #[serde(rename = "N_sum")]
    pub n_sum: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_tail: f64,
    pub b_tail: f64,
    pub c_tail: f64,
    pub runtime_s: f64,
}

pub fn renorm_table(eps_list: &[f64], n_sum: usize) -> Vec<RenormRow> {
    eps_list
        .iter()
        .map(|&eps| {
            let start = Instant::now();
            let r = renorm_constants(eps, n_sum);
            RenormRow {
                eps,
                n_sum,
                a: r.a,
                b: r.b,
                c: r.c,
                a_tail: r.a_tail,
                b_tail: r.b_tail,
                c_tail: r.c_tail,
                runtime_s: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

pub fn write_renorm_rows(path: &Path, rows: &[RenormRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unfolded reference for small boxes.
    fn brute(eps: f64, n: i32, restrict: bool) -> (f64, f64) {
        let (mut b, mut c) = (0.0, 0.0);
        for x1 in -n..=n {
            for y1 in -n..=n {
                for z1 in -n..=n {
                    for x2 in -n..=n {
                        for y2 in -n..=n {
                            for z2 in -n..=n {
                                let s = [x1 + x2, y1 + y2, z1 + z2];
                                if restrict && s.iter().any(|v| v.abs() > n) {
                                    continue;
                                }
                                let a1 = alpha(eps, [x1, y1, z1]);
                                let a2 = alpha(eps, [x2, y2, z2]);
                                let a12 = alpha(eps, s);
                                b += 2.0 / (4.0 * a1 * a2 * (a1 + a2 + a12));
                                c -= 2.0 / (4.0 * a1 * a2 * a12 * (a1 + a2 + a12));
                            }
                        }
                    }
                }
            }
        }
        (b, c)
    }

    #[test]
    fn single_mode_values() {
        assert_eq!(a_const(0.3, 0).value, 0.5);
        let r = renorm_constants(0.3, 0);
        assert!((r.b - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.c + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn folding_matches_brute_force() {
        for eps in [0.0, 0.1] {
            let r = renorm_constants(eps, 2);
            let (b, c) = brute(eps, 2, false);
            assert!((r.b - b).abs() < 1e-13 * b);
            assert!((r.c - c).abs() < 1e-13 * c.abs());
            assert!(r.c < 0.0 && r.b > 0.0 && r.c.abs() <= r.b);
        }
    }

    #[test]
    fn discrete_constants_approach_restricted_sums() {
        let (b, c) = brute(0.1, 2, true);
        let s = sim_constants(0.1, 2, 1e-6);
        assert!((s.b - b).abs() < 1e-5 * b, "{} vs {}", s.b, b);
        assert!((s.c - c).abs() < 1e-5 * c.abs(), "{} vs {}", s.c, c);
        let coarse = sim_constants(0.1, 2, 1e-2);
        assert!((coarse.b - b).abs() > 1e-6);
    }

    #[test]
    fn quadrature_oracle_small_box() {
        let r = renorm_constants(0.05, 1);
        let (b, c) = quadrature_constants(0.05, 1);
        assert!((r.b - b).abs() < 1e-8);
        assert!((r.c - c).abs() < 1e-8);
    }

    #[test]
    fn a_grows_linearly_without_regularization() {
        let a16 = a_const(0.0, 16).value;
        let a32 = a_const(0.0, 32).value;
        let a64 = a_const(0.0, 64).value;
        let r1 = (a32 - a16) / (a64 - a32);
        assert!((r1 - 0.5).abs() < 0.05, "{r1}");
        let (x, y, z) = (a_const(0.01, 32), a_const(0.01, 64), a_const(0.01, 128));
        assert!((y.value - x.value).abs() <= x.tail);
        assert!((z.value - y.value).abs() <= y.tail);
    }

    #[test]
    fn kernels() {
        assert_eq!(q0_kernel(0.2, 0.0, [0, 0, 0]), Complex64::new(1.0, 0.0));
        let k = [1, 2, 0];
        let q = q0_kernel(0.0, 0.7, k);
        let a = alpha(0.0, k);
        assert!((q.norm_sqr() - 1.0 / (4.0 * PI * PI * 0.49 + a * a)).abs() < 1e-15);
        let k1 = [1, 0, 0];
        let a1 = alpha(0.0, k1);
        let ft = windowed_h_transform(0.0, 1.0, k1, 20.0 / a1, 200);
        assert!((ft - q0_kernel(0.0, 1.0, k1)).norm() < 1e-6);
        assert_eq!(h_kernel(0.0, 1.0, 2.0, k1), 0.0);
        assert!(spacetime_weight(4.0, [0, 3, 4]) == 8.0);
    }
}
