//! The multiplier `α_ε`, heat-type semigroups and the Duhamel integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{FourierField, Mode, ModeLattice};
use crate::lp::{DyadicPartition, TrajectoryField};

/// `α_ε(k) = 4π²|k|² + 16π⁴ε|k|⁴ + 1` as a function of `|k|²`.
pub fn alpha_n2(eps: f64, n2: f64) -> f64 {
    4.0 * PI * PI * n2 + 16.0 * PI.powi(4) * eps * n2 * n2 + 1.0
}

/// `α_ε(k)`.
pub fn alpha(eps: f64, k: Mode) -> f64 {
    alpha_n2(eps, (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64)
}

/// `α_ε` on every mode of `lattice`.
pub fn alpha_table(lattice: &ModeLattice, eps: f64) -> Vec<f64> {
    lattice.norm2().iter().map(|&n2| alpha_n2(eps, n2)).collect()
}

pub fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps={eps} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatKind {
    /// `e^{tΔ}`
    Laplace,
    /// `e^{-εtΔ²}`
    Bilaplace,
    /// `P_t^ε = e^{t(Δ - εΔ² - 1)}`
    Full,
}

impl HeatKind {
    pub fn exponent(&self, eps: f64, n2: f64) -> f64 {
        match self {
            HeatKind::Laplace => 4.0 * PI * PI * n2,
            HeatKind::Bilaplace => 16.0 * PI.powi(4) * eps * n2 * n2,
            HeatKind::Full => alpha_n2(eps, n2),
        }
    }
}

pub fn heat_apply(f: &FourierField, t: f64, eps: f64, kind: HeatKind) -> Result<FourierField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative time t={t}")));
    }
    check_eps(eps)?;
    let n2 = f.lattice().norm2();
    Ok(f.map_real_symbol(|i| (-t * kind.exponent(eps, n2[i])).exp()))
}

/// `(e^{-z}-1+z)/z²`, accurate for small `z`.
fn phi_w1(z: f64) -> f64 {
    if z < 0.1 {
        let mut term = 0.5;
        let mut sum = 0.0;
        for n in 0..12 {
            sum += term;
            term *= -z / (n as f64 + 3.0);
        }
        sum
    } else {
        (z - 1.0 + (-z).exp()) / (z * z)
    }
}

/// `(1-(1+z)e^{-z})/z²`, accurate for small `z`.
fn phi_w0(z: f64) -> f64 {
    if z < 0.1 {
        // Σ (-1)^m (m+1) z^m / (m+2)!
        let mut fact = 2.0;
        let mut pow = 1.0;
        let mut sum = 0.0;
        for m in 0..12 {
            sum += (m as f64 + 1.0) * pow / fact;
            pow *= -z;
            fact *= m as f64 + 3.0;
        }
        sum
    } else {
        (1.0 - (1.0 + z) * (-z).exp()) / (z * z)
    }
}

/// Per-mode weights of the second-order exponential integrator.
///
/// For `v` linear on `[t, t+h]`:
/// `∫_t^{t+h} e^{-(t+h-s)α} v(s) ds = w0·v(t) + w1·v(t+h)` and the
/// homogeneous factor is `q = e^{-αh}`.
#[derive(Clone, Debug)]
pub struct EtdWeights {
    pub step: f64,
    pub q: Vec<f64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

impl EtdWeights {
    pub fn new(alphas: &[f64], step: f64) -> Self {
        let mut q = Vec::with_capacity(alphas.len());
        let mut w0 = Vec::with_capacity(alphas.len());
        let mut w1 = Vec::with_capacity(alphas.len());
        for &a in alphas {
            let (qq, a0, a1) = etd_scalar(a, step);
            q.push(qq);
            w0.push(a0);
            w1.push(a1);
        }
        EtdWeights { step, q, w0, w1 }
    }

    pub fn for_lattice(lattice: &ModeLattice, eps: f64, step: f64) -> Self {
        Self::new(&alpha_table(lattice, eps), step)
    }

    /// `D ← q·D + w0·a + w1·b`, mode-wise.
    pub fn advance(&self, d: &FourierField, a: &FourierField, b: &FourierField) -> FourierField {
        let mut out = d.clone();
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            *c = *c * self.q[i] + a.coeffs()[i] * self.w0[i] + b.coeffs()[i] * self.w1[i];
        }
        out
    }

    /// `q·d`.
    pub fn propagate(&self, d: &FourierField) -> FourierField {
        d.map_real_symbol(|i| self.q[i])
    }
}

/// `(q, w0, w1)` for one rate.
pub fn etd_scalar(alpha: f64, h: f64) -> (f64, f64, f64) {
    let z = alpha * h;
    ((-z).exp(), h * phi_w0(z), h * phi_w1(z))
}

/// `L_ε^{-1}[v](t) = ∫_0^t P_{t-s}^ε v(s) ds` on the grid of `v`.
pub fn duhamel(v: &TrajectoryField, eps: f64) -> Result<TrajectoryField> {
    check_eps(eps)?;
    let lattice = v
        .lattice()
        .ok_or_else(|| Error::TimeGrid("empty trajectory".into()))?
        .clone();
    if v.len() == 1 {
        return TrajectoryField::zeros(v.times().to_vec(), &lattice);
    }
    let h = v.uniform_step()?;
    let w = EtdWeights::for_lattice(&lattice, eps, h);
    let mut out = Vec::with_capacity(v.len());
    let mut d = FourierField::zeros(&lattice);
    out.push(d.clone());
    for n in 0..v.len() - 1 {
        d = w.advance(&d, v.at(n), v.at(n + 1));
        out.push(d.clone());
    }
    TrajectoryField::new(v.times().to_vec(), out)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need at least two points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Result of a smoothing-rate fit.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothingFit {
    pub kind: HeatKind,
    pub slope: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Fit the slope of `log ‖S(t)u‖_{C^{α+δ}}` against `log t` over `times`.
///
/// For [`HeatKind::Bilaplace`] the abscissa is `log(εt)`, which has the same slope.
pub fn smoothing_exponent_fit(
    u: &FourierField,
    kind: HeatKind,
    alpha: f64,
    delta: f64,
    eps: f64,
    times: &[f64],
) -> Result<SmoothingFit> {
    if times.len() < 3 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Fit("need at least three positive fit times".into()));
    }
    if kind == HeatKind::Bilaplace && !(eps > 0.0) {
        return Err(Error::Fit("bi-Laplacian fit needs eps > 0".into()));
    }
    let p = DyadicPartition::for_lattice(u.lattice());
    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        norms.push(p.besov_norm(&heat_apply(u, t, eps, kind)?, alpha + delta)?);
    }
    if norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("zero norm in fit window".into()));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&x, &y)?;
    Ok(SmoothingFit {
        kind,
        slope,
        times: times.to_vec(),
        norms,
    })
}

/// Phase-aligned `Σ_{k≠0} |k|^{-3-α} e_k`.
///
/// Every block has sup norm of order `2^{-jα}`, attained at `x = 0`, so the
/// smoothing bounds are saturated without sampling fluctuations.
pub fn power_law_field(lattice: &ModeLattice, alpha: f64) -> FourierField {
    let coeffs = lattice
        .norm2()
        .iter()
        .map(|&m| {
            let c = if m > 0.0 { m.powf(-0.5 * (3.0 + alpha)) } else { 0.0 };
            Complex64::new(c, 0.0)
        })
        .collect();
    FourierField::from_raw(lattice, coeffs)
}

/// Fit times that move the peak frequency `√(δ/(8π²t))` (heat) or
/// `(δ/(64π⁴εt))^{1/4}` (bi-Laplacian) geometrically from `n` down to 1.
pub fn smoothing_times(kind: HeatKind, delta: f64, eps: f64, n: f64, count: usize) -> Vec<f64> {
    let at = |x: f64| match kind {
        HeatKind::Bilaplace => delta / (64.0 * PI.powi(4) * x.powi(4) * eps),
        _ => delta / (8.0 * PI * PI * x * x),
    };
    geometric_times(at(n), at(1.0), count)
}

/// Geometric grid of `count` times from `t0` to `t1`.
pub fn geometric_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![t0];
    }
    let r = (t1 / t0).ln() / (count - 1) as f64;
    (0..count).map(|i| t0 * (r * i as f64).exp()).collect()
}
