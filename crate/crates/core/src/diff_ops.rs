//! The operators `B`, `B̃`, `T`, the ε-corrected Leibniz objects `F_ε`, `G_ε`,
//! `G̃_ε`, and numerical checks of the exact expansions of `L_ε(e^h g)`.
//!
//! Convention: every product is projected onto the lattice before any
//! derivative is applied to it. The expansion identities therefore hold up to
//! truncation of the discarded modes, which is why they are checked with
//! rapidly decaying inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourier::{pointwise, FourierField, ModeLattice};
use crate::random::{gaussian_field, Spectrum};

/// `L_ε f = Δf - εΔ²f`.
pub fn l_eps(f: &FourierField, eps: f64) -> FourierField {
    let mut out = f.laplacian();
    if eps != 0.0 {
        out.axpy(-eps, &f.bilaplacian());
    }
    out
}

/// `𝓛 f = -L_ε f + f` for time-independent `f`.
pub fn cal_l(f: &FourierField, eps: f64) -> FourierField {
    let mut out = l_eps(f, eps).scale(-1.0);
    out += f;
    out
}

/// `∇·(V)` for a vector field.
pub fn divergence(v: &[FourierField; 3]) -> FourierField {
    let mut out = v[0].partial(0);
    out += &v[1].partial(1);
    out += &v[2].partial(2);
    out
}

/// `B(f,g) = ∇f·∇g`.
pub fn bform(f: &FourierField, g: &FourierField) -> FourierField {
    let [f0, f1, f2] = f.gradient();
    let [g0, g1, g2] = g.gradient();
    pointwise(f.lattice(), &[&f0, &f1, &f2, &g0, &g1, &g2], 1, |x, y| {
        y[0] = x[0] * x[3] + x[1] * x[4] + x[2] * x[5];
    })
    .pop()
    .expect("one output")
}

/// `B̃(f,g) = ∇·(Δf ∇g) + ∇·(∇f Δg) + ΔB(f,g)`.
pub fn btilde(f: &FourierField, g: &FourierField) -> FourierField {
    let [f0, f1, f2] = f.gradient();
    let [g0, g1, g2] = g.gradient();
    let (lf, lg) = (f.laplacian(), g.laplacian());
    let v = pointwise(f.lattice(), &[&f0, &f1, &f2, &g0, &g1, &g2, &lf, &lg], 3, |x, y| {
        for i in 0..3 {
            y[i] = x[6] * x[3 + i] + x[i] * x[7];
        }
    });
    let v: [FourierField; 3] = v.try_into().expect("three outputs");
    let mut out = divergence(&v);
    out += &bform(f, g).laplacian();
    out
}

/// `T(f,g,h) = ∇·(B(f,g) ∇h)`.
pub fn tform(f: &FourierField, g: &FourierField, h: &FourierField) -> FourierField {
    let b = bform(f, g);
    let [h0, h1, h2] = h.gradient();
    let v = pointwise(f.lattice(), &[&b, &h0, &h1, &h2], 3, |x, y| {
        for i in 0..3 {
            y[i] = x[0] * x[1 + i];
        }
    });
    divergence(&v.try_into().expect("three outputs"))
}

/// `F_ε(h) = |∇h|² + ε(Δh)² + ε{-B̃(h,h) + 2T(h,h,h) - B(h,h)²}`.
pub fn f_eps(h: &FourierField, eps: f64) -> FourierField {
    let b = bform(h, h);
    if eps == 0.0 {
        return b;
    }
    let lh = h.laplacian();
    let mut out = b.clone();
    out.axpy(eps, &lh.square());
    out.axpy(-eps, &btilde(h, h));
    out.axpy(2.0 * eps, &tform(h, h, h));
    out.axpy(-eps, &b.square());
    out
}

/// `G̃_ε(h,v) = ε{ΔhΔv - B̃(h,v) + 2T(v,h,h) + T(h,h,v) - 2B(h,h)B(h,v)}`.
pub fn g_tilde_eps(h: &FourierField, v: &FourierField, eps: f64) -> FourierField {
    if eps == 0.0 {
        return FourierField::zeros(h.lattice());
    }
    let mut out = &h.laplacian() * &v.laplacian();
    out -= &btilde(h, v);
    out.axpy(2.0, &tform(v, h, h));
    out += &tform(h, h, v);
    out.axpy(-2.0, &(&bform(h, h) * &bform(h, v)));
    out.scale(eps)
}

/// `G_ε(h,v) = ∇h·∇v + G̃_ε(h,v)`.
pub fn g_eps(h: &FourierField, v: &FourierField, eps: f64) -> FourierField {
    let mut out = bform(h, v);
    out += &g_tilde_eps(h, v, eps);
    out
}

/// `A¹_ε(f,g) = ∇f·∇g + εΔfΔg - εB̃(f,g)`.
pub fn a1(f: &FourierField, g: &FourierField, eps: f64) -> FourierField {
    let mut out = bform(f, g);
    if eps != 0.0 {
        out.axpy(eps, &(&f.laplacian() * &g.laplacian()));
        out.axpy(-eps, &btilde(f, g));
    }
    out
}

/// `A²_ε(h) = A¹_ε(h,h) - ε{2T(h,h,h) + B(h,h)²}`.
pub fn a2(h: &FourierField, eps: f64) -> FourierField {
    let mut out = a1(h, h, eps);
    if eps != 0.0 {
        out.axpy(-2.0 * eps, &tform(h, h, h));
        out.axpy(-eps, &bform(h, h).square());
    }
    out
}

/// `A³_ε(h,g) = -ε{2T(g,h,h) + T(h,h,g) + 2B(h,h)B(h,g)}`.
pub fn a3(h: &FourierField, g: &FourierField, eps: f64) -> FourierField {
    if eps == 0.0 {
        return FourierField::zeros(h.lattice());
    }
    let mut out = tform(g, h, h).scale(2.0);
    out += &tform(h, h, g);
    out.axpy(2.0, &(&bform(h, h) * &bform(h, g)));
    out.scale(-eps)
}

fn relative_residual(lhs: &FourierField, rhs: &FourierField) -> f64 {
    let diff = (lhs - rhs).sup_norm();
    let scale = lhs.sup_norm().max(rhs.sup_norm());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Relative residual of `𝓛v = (𝓛h)v - hv + e^h 𝓛g + F_ε(h)v - 2G_ε(h,v)` with `v = e^h g`.
pub fn expansion_residual(h: &FourierField, g: &FourierField, eps: f64) -> Result<f64> {
    let eh = h.exp_scaled(1.0)?;
    let v = &eh * g;
    let lhs = cal_l(&v, eps);
    let mut rhs = &cal_l(h, eps) * &v;
    rhs -= &(h * &v);
    rhs += &(&eh * &cal_l(g, eps));
    rhs += &(&f_eps(h, eps) * &v);
    rhs.axpy(-2.0, &g_eps(h, &v, eps));
    Ok(relative_residual(&lhs, &rhs))
}

/// Identities checked by [`identity_residual`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `L(fg) = (Lf)g + f Lg + 2A¹(f,g)`
    ProductRule,
    /// `L(e^h) = e^h{Lh + A²(h)}`
    ExpRule,
    /// `L(e^h g) = e^h{(Lh)g + Lg + 2A¹(h,g) + A²(h)g + 2A³(h,g)}`
    ExpProductRule,
    /// `T(fg,h,k) = fT(g,h,k) + gT(f,h,k) + B(f,k)B(g,h) + B(g,k)B(f,h)`
    TLeibnizFirst,
    /// `T(f,g,hk) = hT(f,g,k) + kT(f,g,h) + 2B(f,g)B(h,k)`
    TLeibnizLast,
    /// `F_ε(h) = e^{-h}L(e^h) - Lh + 4εT(h,h,h)`
    FEpsExp,
    /// `𝓛(e^h g) = (𝓛h)v - hv + e^h 𝓛g + F_ε(h)v - 2G_ε(h,v)`
    Master,
}

impl Identity {
    pub const ALL: [Identity; 7] = [
        Identity::ProductRule,
        Identity::ExpRule,
        Identity::ExpProductRule,
        Identity::TLeibnizFirst,
        Identity::TLeibnizLast,
        Identity::FEpsExp,
        Identity::Master,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Identity::ProductRule => "product_rule",
            Identity::ExpRule => "exp_rule",
            Identity::ExpProductRule => "exp_product_rule",
            Identity::TLeibnizFirst => "t_leibniz_first",
            Identity::TLeibnizLast => "t_leibniz_last",
            Identity::FEpsExp => "f_eps_exp",
            Identity::Master => "master_expansion",
        }
    }
}

/// Relative sup-norm residual of one identity on the inputs `f` (four fields).
pub fn identity_residual(id: Identity, f: &[FourierField; 4], eps: f64) -> Result<f64> {
    let [a, b, c, d] = f;
    let l = |x: &FourierField| l_eps(x, eps);
    Ok(match id {
        Identity::ProductRule => {
            let lhs = l(&(a * b));
            let mut rhs = &l(a) * b;
            rhs += &(a * &l(b));
            rhs.axpy(2.0, &a1(a, b, eps));
            relative_residual(&lhs, &rhs)
        }
        Identity::ExpRule => {
            let e = a.exp_scaled(1.0)?;
            let lhs = l(&e);
            let rhs = &e * &(&l(a) + &a2(a, eps));
            relative_residual(&lhs, &rhs)
        }
        Identity::ExpProductRule => {
            let e = a.exp_scaled(1.0)?;
            let lhs = l(&(&e * b));
            let mut inner = &l(a) * b;
            inner += &l(b);
            inner.axpy(2.0, &a1(a, b, eps));
            inner += &(&a2(a, eps) * b);
            inner.axpy(2.0, &a3(a, b, eps));
            relative_residual(&lhs, &(&e * &inner))
        }
        Identity::TLeibnizFirst => {
            let lhs = tform(&(a * b), c, d);
            let mut rhs = a * &tform(b, c, d);
            rhs += &(b * &tform(a, c, d));
            rhs += &(&bform(a, d) * &bform(b, c));
            rhs += &(&bform(b, d) * &bform(a, c));
            relative_residual(&lhs, &rhs)
        }
        Identity::TLeibnizLast => {
            let lhs = tform(a, b, &(c * d));
            let mut rhs = c * &tform(a, b, d);
            rhs += &(d * &tform(a, b, c));
            rhs.axpy(2.0, &(&bform(a, b) * &bform(c, d)));
            relative_residual(&lhs, &rhs)
        }
        Identity::FEpsExp => {
            let e = a.exp_scaled(1.0)?;
            let em = a.exp_scaled(-1.0)?;
            let mut rhs = &em * &l(&e);
            rhs -= &l(a);
            rhs.axpy(4.0 * eps, &tform(a, a, a));
            relative_residual(&f_eps(a, eps), &rhs)
        }
        Identity::Master => expansion_residual(a, b, eps)?,
    })
}

/// One row of the identity-suite report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub identity_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub decay_rate: f64,
    pub epsilon: f64,
    pub residual: f64,
}

/// Random decaying inputs `e^{-rate|k|}·gaussian`, band-limited to `|k|_∞ ≤ cutoff`.
pub fn decaying_inputs(
    lattice: &ModeLattice,
    cutoff: usize,
    seed: u64,
    rate: f64,
    amplitude: f64,
) -> [FourierField; 4] {
    let spec = Spectrum::Decaying { rate };
    let c = cutoff as i32;
    std::array::from_fn(|i| {
        let f = gaussian_field(lattice, seed.wrapping_mul(4).wrapping_add(i as u64), spec, amplitude);
        let modes = lattice.modes();
        f.map_real_symbol(|m| {
            if modes[m].iter().all(|x| x.abs() <= c) {
                1.0
            } else {
                0.0
            }
        })
    })
}

/// Settings of an identity-suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Input cutoff `N`.
    pub n: usize,
    /// Evaluation lattice cutoff is `headroom·N`.
    pub headroom: usize,
    pub eps_list: Vec<f64>,
    pub decay_rates: Vec<f64>,
    pub amplitude: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n: 4,
            headroom: 2,
            eps_list: vec![0.0, 0.3, 1.0],
            decay_rates: vec![4.0],
            amplitude: 1.0,
            samples: 20,
            seed: 1,
        }
    }
}

/// Residual of every identity for `samples` random input sets per decay rate.
pub fn identity_suite(cfg: &SuiteConfig) -> Result<Vec<IdentityRow>> {
    let lattice = ModeLattice::new(cfg.n * cfg.headroom.max(1), 2)?;
    let mut rows = Vec::new();
    for &rate in &cfg.decay_rates {
        for s in 0..cfg.samples {
            let inputs = decaying_inputs(&lattice, cfg.n, cfg.seed + s as u64, rate, cfg.amplitude);
            for &eps in &cfg.eps_list {
                for id in Identity::ALL {
                    rows.push(IdentityRow {
                        identity_id: id.id().to_string(),
                        n: cfg.n,
                        decay_rate: rate,
                        epsilon: eps,
                        residual: identity_residual(id, &inputs, eps)?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_identity_rows(path: &Path, rows: &[IdentityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
