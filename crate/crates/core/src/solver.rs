//! Transformed equation for `u = e^{3I}(φ - X + I[X³]) - y`, its Picard
//! solver, reconstruction of `φ`, and a direct solver of the original equation.
//!
//! Products are Galerkin products. Nested products are grouped so that the
//! resonant/paraproduct expansions used to build `Z` and `Ḡ` are exact linear
//! identities on the lattice; see [`Coefficients::assembly_residuals`].

use serde::{Deserialize, Serialize};

use crate::diff_ops::{bform, g_eps, g_tilde_eps};
use crate::error::{Error, Result};
use crate::fourier::FourierField;
use crate::lp::{DyadicPartition, TrajectoryField};
use crate::noise::DrivingVector;
use crate::paracalc::Paracalc;
use crate::semigroup::{check_eps, duhamel, heat_apply, EtdWeights, HeatKind};

/// Coefficient fields of the transformed equation on the driving vector's grid.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub eps: f64,
    pub z0: TrajectoryField,
    pub z1: TrajectoryField,
    pub z2: TrajectoryField,
    pub z_tilde: [TrajectoryField; 3],
    pub y: TrajectoryField,
    pub big_y: TrajectoryField,
    pub exp3i: TrajectoryField,
    pub expm3i: TrajectoryField,
    pub expm6i: TrajectoryField,
    /// `e^{3I} I[X³]`.
    pub ej: TrajectoryField,
    pub f_bar: TrajectoryField,
    pub g_bar: TrajectoryField,
    /// `Ḡ⁽¹⁾ … Ḡ⁽⁶⁾`.
    pub g_parts: [TrajectoryField; 6],
}

fn traj(times: &[f64], v: Vec<FourierField>) -> Result<TrajectoryField> {
    TrajectoryField::new(times.to_vec(), v)
}

/// `ε`-terms of `F̄` and `F(3I) - 9b = F̄`, computed from the paraproduct form.
fn f_bar_slice(pc: &Paracalc, i: &FourierField, d: &FourierField, eps: f64) -> Result<FourierField> {
    let mut out = pc.inner_para_grad(i, i)?.scale(18.0);
    out.axpy(9.0, d);
    if eps > 0.0 {
        let h = i.scale(3.0);
        let li = i.laplacian();
        let b = bform(&h, &h);
        let mut extra = pc.para(&li, &li)?.scale(18.0);
        extra -= &crate::diff_ops::btilde(&h, &h);
        extra.axpy(2.0, &crate::diff_ops::tform(&h, &h, &h));
        extra -= &b.square();
        out.axpy(eps, &extra);
    }
    Ok(out)
}

/// `f²(f - 3g)`-type cubic term `J²X` through its paracontrolled expansion.
fn j2x(pc: &Paracalc, j: &FourierField, x: &FourierField, c1: &FourierField) -> Result<FourierField> {
    let jx_sym = pc.para_sym(j, x)?;
    let mut out = pc.para_sym(j, &jx_sym)?;
    out += &pc.commutator(j, x, j)?;
    out += &pc.resonant(j, &pc.para_rev(j, x)?)?;
    out.axpy(2.0, &j.multiply(c1)?);
    Ok(out)
}

/// Build every coefficient of the transformed equation from `Ξ`.
pub fn assemble_coefficients(xi: &DrivingVector, eps: f64) -> Result<Coefficients> {
    check_eps(eps)?;
    let times = xi.times().to_vec();
    let lattice = xi.lattice().clone();
    let pc = Paracalc::for_lattice(&lattice);
    let b = xi.constants.b;
    let n = times.len();

    let mut exp3i = Vec::with_capacity(n);
    let mut expm3i = Vec::with_capacity(n);
    let mut expm6i = Vec::with_capacity(n);
    let mut ej = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    for k in 0..n {
        let (i, j, x2) = (xi.i.at(k), xi.i3.at(k), xi.x2.at(k));
        let e = i.exp_scaled(3.0)?;
        expm3i.push(i.exp_scaled(-3.0)?);
        expm6i.push(i.exp_scaled(-6.0)?);
        ej.push(e.multiply(j)?);
        source.push(pc.para(&e, &pc.para(j, x2)?)?.scale(3.0));
        exp3i.push(e);
    }
    let y = duhamel(&traj(&times, source)?, eps)?;

    let mut big_y = Vec::with_capacity(n);
    let mut zt = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut z = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut f_bar = Vec::with_capacity(n);
    let mut g_bar = Vec::with_capacity(n);
    let mut g_parts: [Vec<FourierField>; 6] = Default::default();
    for k in 0..n {
        let t = times[k];
        let (x, x2, i, j) = (xi.x.at(k), xi.x2.at(k), xi.i.at(k), xi.i3.at(k));
        let (c1, c2, c3, d) = (xi.c1.at(k), xi.c2.at(k), xi.c3.at(k), xi.d.at(k));
        let (e, em3, em6, ejk, yk) = (&exp3i[k], &expm3i[k], &expm6i[k], &ej[k], y.at(k));

        let pi0 = heat_apply(&xi.i0, t, eps, HeatKind::Full)?;
        let ej_pi0 = pc.para(ejk, &pi0)?;
        let yy = {
            let mut v = yk.clone();
            v.axpy(-3.0, &pc.para(ejk, &(i - &pi0))?);
            v
        };

        // Z
        let w = pc.para(j, x2)?;
        let mut zz = e.multiply(&(&pc.para_rev(j, x2)? + c3))?.scale(3.0);
        zz.axpy(3.0, &pc.para_rev(e, &w)?);
        let mut low = e.scale(3.0);
        low.axpy(-9.0, &pc.para(e, i)?);
        zz += &pc.resonant(&low, &w)?;
        zz.axpy(9.0, &pc.commutator(e, i, &w)?);
        zz.axpy(9.0, &e.multiply(&pc.commutator(j, x2, i)?)?);
        zz.axpy(9.0, &e.multiply(&j.multiply(c2)?)?);

        let fb = f_bar_slice(&pc, i, d, eps)?;

        // Z̃
        let zt2 = em3.multiply(&(j - x))?.scale(3.0);
        let jx = &pc.para_sym(j, x)? + c1;
        let mut zt1 = j.square().scale(-3.0);
        zt1.axpy(6.0, &jx);
        zt1.axpy(-3.0, i);
        zt1 += &fb;
        let mut cubic = j.cube();
        cubic.axpy(-3.0, &j2x(&pc, j, x, c1)?);
        let zt0 = &e.multiply(&cubic)? + &zz;

        // Ḡ
        let li = i.laplacian();
        let g1 = {
            let h = i.scale(3.0);
            let mut v = g_tilde_eps(&h, yk, eps);
            if eps > 0.0 {
                v.axpy(-eps, &h.laplacian().multiply(&yk.laplacian())?);
            }
            v
        };
        let g2 = {
            let mut v = pc.inner_para_sym_grad(i, yk)?;
            if eps > 0.0 {
                v.axpy(eps, &pc.para_sym(&li, &yk.laplacian())?);
            }
            v.scale(3.0)
        };
        let g3 = {
            let mut v = pc.inner_resonant_grad(i, &yy)?;
            if eps > 0.0 {
                v.axpy(eps, &pc.resonant(&li, &yy.laplacian())?);
            }
            v.scale(3.0)
        };
        let g4 = {
            let mut v = pc.inner_resonant_grad(i, &ej_pi0)?;
            if eps > 0.0 {
                v.axpy(eps, &pc.resonant(&li, &ej_pi0.laplacian())?);
            }
            v.scale(-9.0)
        };
        let g5 = {
            let dej = ejk.gradient();
            let di = i.gradient();
            let mut v = FourierField::zeros(&lattice);
            for a in 0..3 {
                v += &pc.resonant(&di[a], &pc.para(&dej[a], i)?)?;
            }
            if eps > 0.0 {
                v.axpy(eps, &pc.resonant(&li, &pc.para(&ejk.laplacian(), i)?)?);
                let mut s = FourierField::zeros(&lattice);
                for a in 0..3 {
                    s += &pc.para(&dej[a], &di[a])?;
                }
                v.axpy(2.0 * eps, &pc.resonant(&li, &s)?);
            }
            v.scale(9.0)
        };
        let g6 = {
            let mut v = pc.commutator_grad(ejk, i, i)?;
            if eps > 0.0 {
                v.axpy(eps, &pc.commutator(ejk, &li, &li)?);
            }
            v += &ejk.multiply(d)?;
            v.scale(9.0)
        };
        let mut gb = g1.clone();
        for g in [&g2, &g3, &g4, &g5, &g6] {
            gb += g;
        }

        // Z with the cubic expansion around y.
        let em6y = em6.multiply(yk)?;
        let z2 = &zt2 - &em6y.scale(3.0);
        let mut z1 = zt1.clone();
        z1.axpy(2.0, &zt2.multiply(yk)?);
        z1.axpy(-3.0, &em6y.multiply(yk)?);
        let mut z0 = zt0.clone();
        z0 += &zt1.multiply(yk)?;
        z0 += &zt2.multiply(yk)?.multiply(yk)?;
        z0 -= &em6y.multiply(yk)?.multiply(yk)?;
        z0.axpy(-2.0, &gb);

        big_y.push(yy);
        f_bar.push(fb);
        g_bar.push(gb);
        for (slot, g) in g_parts.iter_mut().zip([g1, g2, g3, g4, g5, g6]) {
            slot.push(g);
        }
        zt[0].push(zt0);
        zt[1].push(zt1);
        zt[2].push(zt2);
        z[0].push(z0);
        z[1].push(z1);
        z[2].push(z2);
    }
    let _ = b;
    let [zt0, zt1, zt2] = zt;
    let [z0, z1, z2] = z;
    let [g1, g2, g3, g4, g5, g6] = g_parts;
    Ok(Coefficients {
        eps,
        z0: traj(&times, z0)?,
        z1: traj(&times, z1)?,
        z2: traj(&times, z2)?,
        z_tilde: [traj(&times, zt0)?, traj(&times, zt1)?, traj(&times, zt2)?],
        y,
        big_y: traj(&times, big_y)?,
        exp3i: traj(&times, exp3i)?,
        expm3i: traj(&times, expm3i)?,
        expm6i: traj(&times, expm6i)?,
        ej: traj(&times, ej)?,
        f_bar: traj(&times, f_bar)?,
        g_bar: traj(&times, g_bar)?,
        g_parts: [
            traj(&times, g1)?,
            traj(&times, g2)?,
            traj(&times, g3)?,
            traj(&times, g4)?,
            traj(&times, g5)?,
            traj(&times, g6)?,
        ],
    })
}

/// Residuals of the assembly identities at one slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyResiduals {
    /// `Ḡ` against `G_ε(3I, y) - 9b e^{3I} I[X³]`.
    pub g_bar: f64,
    /// `F̄` against `F_ε(3I) - 9b`.
    pub f_bar: f64,
    /// `Z̃⁰ - e^{3I}I[X³]²(I[X³] - 3X) + 3e^{3I}⊲(I[X³]⊲X²)` against `3e^{3I}{(I[X³]X² - 3bX) - 3bI[X³]}`.
    pub z: f64,
    /// `Z¹` against `Z̃¹ + 2Z̃²y - 3e^{-6I}y²`.
    pub z1: f64,
}

fn rel(a: &FourierField, b: &FourierField) -> f64 {
    let s = a.sup_norm().max(b.sup_norm()).max(1e-300);
    (a - b).sup_norm() / s
}

impl Coefficients {
    pub fn times(&self) -> &[f64] {
        self.z0.times()
    }

    /// Recompute the assembly identities at slice `k` from primitives.
    pub fn assembly_residuals(&self, xi: &DrivingVector, k: usize) -> Result<AssemblyResiduals> {
        let pc = Paracalc::for_lattice(xi.lattice());
        let b = xi.constants.b;
        let (i, j, x, x2) = (xi.i.at(k), xi.i3.at(k), xi.x.at(k), xi.x2.at(k));
        let one = FourierField::constant(xi.lattice(), 1.0);
        let h = i.scale(3.0);

        let mut g_ref = g_eps(&h, self.y.at(k), self.eps);
        g_ref.axpy(-9.0 * b, self.ej.at(k));

        let mut f_ref = crate::diff_ops::f_eps(&h, self.eps);
        f_ref.axpy(-9.0 * b, &one);

        let e = self.exp3i.at(k);
        let mut inner = j.multiply(x2)?;
        inner.axpy(-3.0 * b, x);
        inner.axpy(-3.0 * b, j);
        let z_ref = e.multiply(&inner)?.scale(3.0);
        let mut cubic = j.cube();
        cubic.axpy(-3.0, &j.multiply(&j.multiply(x)?)?);
        let mut z_got = &self.z_tilde[0].at(k).clone() - &e.multiply(&cubic)?;
        z_got.axpy(3.0, &pc.para(e, &pc.para(j, x2)?)?);

        let y = self.y.at(k);
        let mut z1_ref = self.z_tilde[1].at(k).clone();
        z1_ref.axpy(2.0, &self.z_tilde[2].at(k).multiply(y)?);
        z1_ref.axpy(-3.0, &self.expm6i.at(k).multiply(y)?.multiply(y)?);

        Ok(AssemblyResiduals {
            g_bar: rel(self.g_bar.at(k), &g_ref),
            f_bar: rel(self.f_bar.at(k), &f_ref),
            z: rel(&z_got, &z_ref),
            z1: rel(self.z1.at(k), &z1_ref),
        })
    }
}

/// `R_ε(Ξ,u) = Φ_ε(u) - 2G̃_ε(3I,u)` at slice `k`, with
/// `Φ_ε(u) = -e^{-6I}u³ + Z²u² + Z¹u + Z⁰ - 6∇I·∇u`.
pub fn rhs(coeffs: &Coefficients, xi: &DrivingVector, u: &FourierField, k: usize) -> Result<FourierField> {
    if k >= coeffs.times().len() {
        return Err(Error::TimeGrid(format!("slice {k} outside the coefficient grid")));
    }
    let i = xi.i.at(k);
    let mut out = coeffs.expm6i.at(k).multiply(&u.cube())?.scale(-1.0);
    out += &coeffs.z2.at(k).multiply(&u.square())?;
    out += &coeffs.z1.at(k).multiply(u)?;
    out += coeffs.z0.at(k);
    out.axpy(-6.0, &bform(i, u));
    if coeffs.eps > 0.0 {
        out.axpy(-2.0, &g_tilde_eps(&i.scale(3.0), u, coeffs.eps));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub kappa: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 0.1,
            kappa: 0.05,
            dt: 1e-3,
            t_end: 0.05,
            picard_tol: 1e-9,
            picard_max_iters: 40,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.kappa > 0.0 && self.kappa < 0.125) {
            return Err(Error::InvalidParameter(format!("kappa={} outside (0, 1/8)", self.kappa)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidParameter("picard_tol must be positive".into()));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::InvalidParameter("picard_max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the Picard iteration log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRow {
    pub iter: usize,
    pub residual: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub u: TrajectoryField,
    pub log: Vec<IterRow>,
    pub horizon: f64,
    pub iterations: usize,
    /// `‖u - M_ε u‖` of the returned trajectory.
    pub mild_residual: f64,
}

/// Distance used by the Picard loop: the `E_T^{-1/2-κ} C_ε^{3/2-2κ}` norm.
pub fn picard_distance(p: &DyadicPartition, a: &TrajectoryField, b: &TrajectoryField, eps: f64, kappa: f64) -> Result<f64> {
    p.spacetime_norm(&a.sub(b)?, -0.5 - kappa, 1.5 - 2.0 * kappa, eps, kappa)
}

/// `M_ε u(t) = P_t^ε u(0) + L_ε⁻¹[R_ε(Ξ,u)](t)` on the first `u.len()` slices.
pub fn mild_map(coeffs: &Coefficients, xi: &DrivingVector, u0: &FourierField, u: &TrajectoryField) -> Result<TrajectoryField> {
    let h = u.uniform_step().unwrap_or(1.0);
    let w = EtdWeights::for_lattice(u0.lattice(), coeffs.eps, h);
    let mut out = Vec::with_capacity(u.len());
    let mut v = u0.clone();
    out.push(v.clone());
    let mut r_prev = rhs(coeffs, xi, u.at(0), 0)?;
    for k in 1..u.len() {
        let r = rhs(coeffs, xi, u.at(k), k)?;
        v = w.advance(&v, &r_prev, &r);
        if !v.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite(format!("Picard iterate at slice {k}")));
        }
        out.push(v.clone());
        r_prev = r;
    }
    TrajectoryField::new(u.times().to_vec(), out)
}

/// Picard iteration `u⁽ⁿ⁺¹⁾ = M_ε u⁽ⁿ⁾` from `u⁽⁰⁾(t) = P_t^ε u0`, halving the horizon
/// when the residuals fail to contract.
pub fn picard_solve(
    cfg: &SolverConfig,
    xi: &DrivingVector,
    coeffs: &Coefficients,
    u0: &FourierField,
) -> Result<PicardOutcome> {
    cfg.validate()?;
    let grid = xi.times();
    let step = xi.x.uniform_step().unwrap_or(cfg.dt);
    if grid.len() > 1 && (step - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::TimeGrid(format!("driving vector step {step} differs from dt={}", cfg.dt)));
    }
    let wanted = ((cfg.t_end / cfg.dt).round() as usize + 1).min(grid.len());
    let p = DyadicPartition::for_lattice(u0.lattice());
    let mut slices = wanted;
    let mut log = Vec::new();
    loop {
        let times = grid[..slices].to_vec();
        let horizon = *times.last().unwrap();
        let init: Vec<FourierField> = times
            .iter()
            .map(|&t| heat_apply(u0, t, cfg.eps, HeatKind::Full))
            .collect::<Result<_>>()?;
        let mut u = TrajectoryField::new(times, init)?;
        let mut residuals = Vec::new();
        let mut converged = false;
        for iter in 1..=cfg.picard_max_iters {
            let next = match mild_map(coeffs, xi, u0, &u) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => break,
                Err(e) => return Err(e),
            };
            let r = picard_distance(&p, &next, &u, cfg.eps, cfg.kappa)?;
            log.push(IterRow {
                iter,
                residual: r,
                horizon,
            });
            residuals.push(r);
            u = next;
            if r <= cfg.picard_tol {
                converged = true;
                break;
            }
            let n = residuals.len();
            if !r.is_finite() || (n >= 3 && residuals[n - 1] > residuals[n - 2] && residuals[n - 2] > residuals[n - 3]) {
                break;
            }
        }
        if converged {
            let check = mild_map(coeffs, xi, u0, &u)?;
            let mild_residual = picard_distance(&p, &check, &u, cfg.eps, cfg.kappa)?;
            let iterations = residuals.len();
            return Ok(PicardOutcome {
                u,
                log,
                horizon,
                iterations,
                mild_residual,
            });
        }
        if slices <= 2 {
            return Err(Error::NoContraction { residuals, horizon });
        }
        slices = (slices - 1) / 2 + 1;
    }
}

/// `u(0) = e^{3I(0)}(φ(0) - X(0) + I[X³](0))`.
pub fn initial_u(xi: &DrivingVector, coeffs: &Coefficients, phi0: &FourierField) -> Result<FourierField> {
    let mut g = phi0 - xi.x.at(0);
    g += xi.i3.at(0);
    coeffs.exp3i.at(0).multiply(&g)
}

/// `φ = e^{-3I}(u + y) + X - I[X³]` slice by slice.
pub fn reconstruct_phi(u: &TrajectoryField, coeffs: &Coefficients, xi: &DrivingVector) -> Result<TrajectoryField> {
    let mut out = Vec::with_capacity(u.len());
    for k in 0..u.len() {
        let mut phi = coeffs.expm3i.at(k).multiply(&(u.at(k) + coeffs.y.at(k)))?;
        phi += xi.x.at(k);
        phi -= xi.i3.at(k);
        out.push(phi);
    }
    TrajectoryField::new(u.times().to_vec(), out)
}

/// `u = e^{3I}(φ - X + I[X³]) - y` slice by slice.
pub fn transform_phi(phi: &TrajectoryField, coeffs: &Coefficients, xi: &DrivingVector) -> Result<TrajectoryField> {
    let mut out = Vec::with_capacity(phi.len());
    for k in 0..phi.len() {
        let mut g = phi.at(k) - xi.x.at(k);
        g += xi.i3.at(k);
        let mut u = coeffs.exp3i.at(k).multiply(&g)?;
        u -= coeffs.y.at(k);
        out.push(u);
    }
    TrajectoryField::new(phi.times().to_vec(), out)
}

/// Parameters of the direct solver of `𝓛φ = -φ³ + (3a - 9b)φ + ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectConfig {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    /// Largest number of substeps per grid step tried before giving up.
    pub max_substeps: usize,
}

#[derive(Clone, Debug)]
pub struct DirectOutcome {
    pub phi: TrajectoryField,
    pub substeps: usize,
}

const DIRECT_BLOWUP: f64 = 1e8;

/// Direct solve through `ψ = φ - X`, which is driven by the sampled OU field.
///
/// Each step is the implicit second-order exponential update, solved by
/// fixed-point iteration. On failure the step is split into twice as many
/// substeps, with `X` interpolated linearly between samples.
pub fn direct_solve(cfg: &DirectConfig, x: &TrajectoryField, phi0: &FourierField) -> Result<DirectOutcome> {
    if !(cfg.eps > 0.0 && cfg.eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("direct solver needs eps in (0, 1], got {}", cfg.eps)));
    }
    let mut sub = 1;
    loop {
        match direct_attempt(cfg, x, phi0, sub) {
            Ok(phi) => return Ok(DirectOutcome { phi, substeps: sub }),
            Err(Error::Unstable { .. }) if sub * 2 <= cfg.max_substeps.max(1) => sub *= 2,
            Err(e) => return Err(e),
        }
    }
}

fn direct_attempt(cfg: &DirectConfig, x: &TrajectoryField, phi0: &FourierField, sub: usize) -> Result<TrajectoryField> {
    let lattice = phi0.lattice().clone();
    let dt = if x.len() > 1 { x.uniform_step()? } else { 1.0 };
    let h = dt / sub as f64;
    let w = EtdWeights::for_lattice(&lattice, cfg.eps, h);
    let lin = 3.0 * cfg.a - 9.0 * cfg.b;
    let force = |psi: &FourierField, xs: &FourierField| {
        let phi = psi + xs;
        let mut f = phi.cube().scale(-1.0);
        f.axpy(lin, &phi);
        f
    };
    let unstable = || Error::Unstable { dt: h };
    let mut psi = phi0 - x.at(0);
    let mut out = vec![phi0.clone()];
    for k in 0..x.len().saturating_sub(1) {
        for s in 0..sub {
            let lam0 = s as f64 / sub as f64;
            let lam1 = (s + 1) as f64 / sub as f64;
            let interp = |l: f64| {
                let mut v = x.at(k).scale(1.0 - l);
                v.axpy(l, x.at(k + 1));
                v
            };
            let (x0, x1) = (interp(lam0), interp(lam1));
            let f0 = force(&psi, &x0);
            let base = {
                let mut v = w.propagate(&psi);
                v += &f0.map_real_symbol(|i| w.w0[i]);
                v
            };
            let mut next = &base + &f0.map_real_symbol(|i| w.w1[i]);
            let mut ok = false;
            for _ in 0..200 {
                let cand = &base + &force(&next, &x1).map_real_symbol(|i| w.w1[i]);
                let change = cand.max_diff(&next);
                next = cand;
                let size = next.max_coeff();
                if !size.is_finite() || size > DIRECT_BLOWUP {
                    return Err(unstable());
                }
                if change <= 1e-14 * (1.0 + size) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(unstable());
            }
            psi = next;
        }
        out.push(&psi + x.at(k + 1));
    }
    TrajectoryField::new(x.times().to_vec(), out)
}
