//! Seeded space-time white noise, the stationary OU field and the driving vector.
//!
//! The noise increment of mode `k` at step `s` is a pure function of
//! `(seed, k, s)`: it never depends on `ε`, the cutoff or the horizon, so
//! runs at different `ε` or `N` with one seed see the same noise on shared modes.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{pointwise, FourierField, Mode, ModeLattice};
use crate::lp::{time_holder_norm, uniform_times, DyadicPartition, NormRow, TrajectoryField};
use crate::paracalc::Paracalc;
use crate::random::{mode_stream, NormalStream};
use crate::renorm::{a_const, sim_constants};
use crate::semigroup::{alpha, alpha_table, check_eps, EtdWeights};

/// Shortest admissible history, `5/min_k α_ε(k)` with `min α = 1`.
pub const MIN_BURN: f64 = 5.0;

#[derive(Clone, Debug)]
pub struct NoiseConfig {
    pub seed: u64,
    pub lattice: ModeLattice,
    pub dt: f64,
    /// Horizon `T` of the observation window `[0, T]`.
    pub t_end: f64,
    /// History length before `t = 0`.
    pub t_burn: f64,
    pub eps: f64,
}

impl NoiseConfig {
    pub fn new(seed: u64, lattice: ModeLattice, dt: f64, t_end: f64, t_burn: f64, eps: f64) -> Result<Self> {
        let cfg = NoiseConfig {
            seed,
            lattice,
            dt,
            t_end,
            t_burn,
            eps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt={} must be positive", self.dt)));
        }
        if !(self.t_burn >= MIN_BURN) {
            return Err(Error::InvalidParameter(format!(
                "T_burn={} below the minimum {MIN_BURN}",
                self.t_burn
            )));
        }
        uniform_times(self.t_end, self.dt)?;
        uniform_times(self.t_burn, self.dt)?;
        Ok(())
    }

    pub fn burn_steps(&self) -> usize {
        (self.t_burn / self.dt).round() as usize
    }

    pub fn window_times(&self) -> Vec<f64> {
        uniform_times(self.t_end, self.dt).expect("validated grid")
    }
}

/// Exact-update OU sampler for every mode of a lattice.
///
/// Step `0` is the stationary draw; step `s` uses the `s`-th gaussian of each
/// mode stream. Modes with positive lexicographic index own the stream and
/// their negatives receive the conjugate.
pub struct OuSampler {
    lattice: ModeLattice,
    q: Vec<f64>,
    kick: Vec<f64>,
    streams: Vec<NormalStream>,
    state: Vec<Complex64>,
    step: u64,
}

impl OuSampler {
    pub fn new(lattice: &ModeLattice, eps: f64, dt: f64, seed: u64) -> Self {
        let alphas = alpha_table(lattice, eps);
        let q: Vec<f64> = alphas.iter().map(|a| (-a * dt).exp()).collect();
        let kick = alphas
            .iter()
            .map(|a| (-(-2.0 * a * dt).exp_m1() / (2.0 * a)).sqrt())
            .collect();
        let z = lattice.zero_index();
        let streams: Vec<NormalStream> = lattice.modes()[z..]
            .iter()
            .map(|&k| NormalStream::new(seed, mode_stream(k), 0))
            .collect();
        let mut s = OuSampler {
            lattice: lattice.clone(),
            q,
            kick,
            streams,
            state: vec![Complex64::default(); lattice.len()],
            step: 0,
        };
        let stationary: Vec<f64> = alphas.iter().map(|a| (0.5 / a).sqrt()).collect();
        s.apply(|_, _| 0.0, |i| stationary[i]);
        s
    }

    fn apply(&mut self, keep: impl Fn(usize, Complex64) -> f64, amp: impl Fn(usize) -> f64) {
        let z = self.lattice.zero_index();
        let n = self.lattice.len();
        for (off, stream) in self.streams.iter_mut().enumerate() {
            let i = z + off;
            let (a, b) = stream.next_pair();
            let zeta = if i == z {
                Complex64::new(a, 0.0)
            } else {
                Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            };
            let v = self.state[i] * keep(i, self.state[i]) + zeta * amp(i);
            self.state[i] = v;
            self.state[n - 1 - i] = v.conj();
        }
    }

    /// Advance one step of length `dt`.
    pub fn advance(&mut self) {
        let q = std::mem::take(&mut self.q);
        let kick = std::mem::take(&mut self.kick);
        self.apply(|i, _| q[i], |i| kick[i]);
        self.q = q;
        self.kick = kick;
        self.step += 1;
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn current(&self) -> FourierField {
        FourierField::from_raw(&self.lattice, self.state.clone())
    }

    pub fn coeff(&self, k: Mode) -> Complex64 {
        self.lattice.index(k).map(|i| self.state[i]).unwrap_or_default()
    }
}

/// Stationary OU field on the window `[0, T]` (after the configured history).
pub fn sample_ou(cfg: &NoiseConfig) -> Result<TrajectoryField> {
    cfg.validate()?;
    let mut s = OuSampler::new(&cfg.lattice, cfg.eps, cfg.dt, cfg.seed);
    for _ in 0..cfg.burn_steps() {
        s.advance();
    }
    let times = cfg.window_times();
    let mut fields = Vec::with_capacity(times.len());
    fields.push(s.current());
    for _ in 1..times.len() {
        s.advance();
        fields.push(s.current());
    }
    TrajectoryField::new(times, fields)
}

/// `f² - a`.
pub fn wick_square(f: &FourierField, a: f64) -> FourierField {
    let mut out = f.square();
    out.axpy(-a, &FourierField::constant(f.lattice(), 1.0));
    out
}

/// `f³ - 3af`.
pub fn wick_cube(f: &FourierField, a: f64) -> FourierField {
    let mut out = f.cube();
    out.axpy(-3.0 * a, f);
    out
}

/// `(f² - a, f³ - 3af)` from one grid evaluation.
pub fn wick_powers(f: &FourierField, a: f64) -> (FourierField, FourierField) {
    let mut out = pointwise(f.lattice(), &[f], 2, |x, y| {
        y[0] = x[0] * x[0] - a;
        y[1] = x[0] * x[0] * x[0] - 3.0 * a * x[0];
    });
    let c = out.pop().unwrap();
    let s = out.pop().unwrap();
    (s, c)
}

/// Stationary solution of `L_ε v = source` on `[0, T]` plus its value at `0`.
///
/// The recursion starts from zero at the beginning of the history, so the
/// per-mode bias at `t = 0` is `e^{-α T_burn}`.
pub struct Integrated {
    pub at_zero: FourierField,
    pub window: TrajectoryField,
}

/// Integrate a history `[-T_burn, 0]` and window `[0, T]` sampled on one uniform grid.
///
/// `history` holds the samples on `[-T_burn, 0]` (its last entry at `t = 0`)
/// and `window` those on `[0, T]` (its first entry equal to the last history one).
pub fn build_integrated(
    history: &[FourierField],
    window: &TrajectoryField,
    eps: f64,
    dt: f64,
    t_burn: f64,
) -> Result<Integrated> {
    if !(t_burn >= MIN_BURN) {
        return Err(Error::InvalidParameter(format!("T_burn={t_burn} below the minimum {MIN_BURN}")));
    }
    let lattice = window
        .lattice()
        .ok_or_else(|| Error::TimeGrid("empty window".into()))?
        .clone();
    let expected = (t_burn / dt).round() as usize + 1;
    if history.len() != expected {
        return Err(Error::TimeGrid(format!(
            "history has {} samples, expected {expected}",
            history.len()
        )));
    }
    let w = EtdWeights::for_lattice(&lattice, eps, dt);
    let mut d = FourierField::zeros(&lattice);
    for pair in history.windows(2) {
        d = w.advance(&d, &pair[0], &pair[1]);
    }
    let at_zero = d.clone();
    let mut out = vec![d.clone()];
    for n in 0..window.len().saturating_sub(1) {
        d = w.advance(&d, window.at(n), window.at(n + 1));
        out.push(d.clone());
    }
    Ok(Integrated {
        at_zero,
        window: TrajectoryField::new(window.times().to_vec(), out)?,
    })
}

/// How the constants `b` (and the reported `c`) are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsMode {
    /// Exact expectations of the discrete scheme on the lattice.
    #[default]
    Simulator,
    /// Box sums `a^N` and continuum `b^N` over `|k₁|, |k₂| ≤ N`.
    Continuum,
}

/// Constants used in the Wick and resonant subtractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsedConstants {
    pub mode: ConstantsMode,
    pub a: f64,
    pub b: f64,
    /// Expected value of `𝒟` under the same convention.
    pub c: f64,
}

impl UsedConstants {
    pub fn compute(mode: ConstantsMode, eps: f64, n: usize, dt: f64) -> Self {
        match mode {
            ConstantsMode::Simulator => {
                let s = sim_constants(eps, n, dt);
                UsedConstants {
                    mode,
                    a: s.a,
                    b: s.b,
                    c: s.c,
                }
            }
            ConstantsMode::Continuum => {
                let r = crate::renorm::renorm_constants(eps, n);
                UsedConstants {
                    mode,
                    a: a_const(eps, n).value,
                    b: r.b,
                    c: r.c,
                }
            }
        }
    }

    pub fn zero() -> Self {
        UsedConstants {
            mode: ConstantsMode::Simulator,
            a: 0.0,
            b: 0.0,
            c: 0.0,
        }
    }
}

/// The eight components of the driving vector on a common time grid.
#[derive(Clone, Debug)]
pub struct DrivingVector {
    pub eps: f64,
    pub constants: UsedConstants,
    pub x: TrajectoryField,
    pub x2: TrajectoryField,
    pub i0: FourierField,
    /// `I(t) = P_t I(0) + L_ε⁻¹[X²](t)`; redundant with `i0` and `x2`, kept for the solver.
    pub i: TrajectoryField,
    pub i3: TrajectoryField,
    pub c1: TrajectoryField,
    pub c2: TrajectoryField,
    pub c3: TrajectoryField,
    pub d: TrajectoryField,
}

/// Component names, in storage order.
pub const COMPONENTS: [&str; 9] = ["X", "X2", "I0", "I", "I3", "C1", "C2", "C3", "D"];

impl DrivingVector {
    pub fn times(&self) -> &[f64] {
        self.x.times()
    }

    pub fn lattice(&self) -> &ModeLattice {
        self.i0.lattice()
    }

    /// All components identically zero with zero constants.
    pub fn zero(lattice: &ModeLattice, times: Vec<f64>, eps: f64) -> Result<Self> {
        let z = TrajectoryField::zeros(times, lattice)?;
        Ok(DrivingVector {
            eps,
            constants: UsedConstants::zero(),
            x: z.clone(),
            x2: z.clone(),
            i0: FourierField::zeros(lattice),
            i: z.clone(),
            i3: z.clone(),
            c1: z.clone(),
            c2: z.clone(),
            c3: z.clone(),
            d: z,
        })
    }

    /// Assemble from `X`, `X²`, `I(0)`, `I`, `I[X³]`, computing the resonant components.
    pub fn from_parts(
        eps: f64,
        constants: UsedConstants,
        x: TrajectoryField,
        x2: TrajectoryField,
        i0: FourierField,
        i: TrajectoryField,
        i3: TrajectoryField,
    ) -> Result<Self> {
        for t in [&x2, &i, &i3] {
            x.check_same_grid(t)?;
        }
        let lattice = i0.lattice().clone();
        let pc = Paracalc::for_lattice(&lattice);
        let one = FourierField::constant(&lattice, 1.0);
        let (mut c1, mut c2, mut c3, mut d) = (vec![], vec![], vec![], vec![]);
        for n in 0..x.len() {
            let (xn, x2n, inn, i3n) = (x.at(n), x2.at(n), i.at(n), i3.at(n));
            c1.push(pc.resonant(i3n, xn)?);
            let mut v = pc.resonant(inn, x2n)?;
            v.axpy(-constants.b, &one);
            c2.push(v);
            let mut v = pc.resonant(i3n, x2n)?;
            v.axpy(-3.0 * constants.b, xn);
            c3.push(v);
            let mut v = pc.inner_resonant_grad(inn, inn)?;
            if eps > 0.0 {
                let lap = inn.laplacian();
                v.axpy(eps, &pc.resonant(&lap, &lap)?);
            }
            v.axpy(-constants.b, &one);
            d.push(v);
        }
        let times = x.times().to_vec();
        Ok(DrivingVector {
            eps,
            constants,
            x,
            x2,
            i0,
            i,
            i3,
            c1: TrajectoryField::new(times.clone(), c1)?,
            c2: TrajectoryField::new(times.clone(), c2)?,
            c3: TrajectoryField::new(times.clone(), c3)?,
            d: TrajectoryField::new(times, d)?,
        })
    }

    pub fn trajectory(&self, name: &str) -> Option<&TrajectoryField> {
        Some(match name {
            "X" => &self.x,
            "X2" => &self.x2,
            "I" => &self.i,
            "I3" => &self.i3,
            "C1" => &self.c1,
            "C2" => &self.c2,
            "C3" => &self.c3,
            "D" => &self.d,
            _ => return None,
        })
    }

    /// `self - other` componentwise (constants taken from `self`).
    pub fn difference(&self, other: &DrivingVector) -> Result<DrivingVector> {
        Ok(DrivingVector {
            eps: self.eps,
            constants: self.constants,
            x: self.x.sub(&other.x)?,
            x2: self.x2.sub(&other.x2)?,
            i0: &self.i0 - &other.i0,
            i: self.i.sub(&other.i)?,
            i3: self.i3.sub(&other.i3)?,
            c1: self.c1.sub(&other.c1)?,
            c2: self.c2.sub(&other.c2)?,
            c3: self.c3.sub(&other.c3)?,
            d: self.d.sub(&other.d)?,
        })
    }

    /// Write one dump per component per time slice into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut put = |name: String, f: &FourierField| -> Result<()> {
            let w = BufWriter::new(fs::File::create(dir.join(&name))?);
            f.write_dump(w)?;
            files.push(name);
            Ok(())
        };
        put("I0.bin".into(), &self.i0)?;
        for name in COMPONENTS.iter().filter(|&&c| c != "I0") {
            let traj = self.trajectory(name).expect("known component");
            for (n, f) in traj.fields().iter().enumerate() {
                put(format!("{name}_{n:05}.bin"), f)?;
            }
        }
        Ok(files)
    }
}

/// Full driving vector for one seed: history burn-in, window, resonant components.
pub fn build_driving_vector(cfg: &NoiseConfig, constants: UsedConstants) -> Result<DrivingVector> {
    cfg.validate()?;
    let lattice = &cfg.lattice;
    let mut ou = OuSampler::new(lattice, cfg.eps, cfg.dt, cfg.seed);
    let w = EtdWeights::for_lattice(lattice, cfg.eps, cfg.dt);
    let a = constants.a;
    let (mut x2_prev, mut x3_prev) = wick_powers(&ou.current(), a);
    let mut i_acc = FourierField::zeros(lattice);
    let mut i3_acc = FourierField::zeros(lattice);
    for _ in 0..cfg.burn_steps() {
        ou.advance();
        let (x2, x3) = wick_powers(&ou.current(), a);
        i_acc = w.advance(&i_acc, &x2_prev, &x2);
        i3_acc = w.advance(&i3_acc, &x3_prev, &x3);
        x2_prev = x2;
        x3_prev = x3;
    }
    let i0 = i_acc.clone();
    let times = cfg.window_times();
    let (mut xs, mut x2s, mut is, mut i3s) = (vec![ou.current()], vec![x2_prev.clone()], vec![i_acc.clone()], vec![i3_acc.clone()]);
    for _ in 1..times.len() {
        ou.advance();
        let (x2, x3) = wick_powers(&ou.current(), a);
        i_acc = w.advance(&i_acc, &x2_prev, &x2);
        i3_acc = w.advance(&i3_acc, &x3_prev, &x3);
        xs.push(ou.current());
        x2s.push(x2.clone());
        is.push(i_acc.clone());
        i3s.push(i3_acc.clone());
        x2_prev = x2;
        x3_prev = x3;
    }
    DrivingVector::from_parts(
        cfg.eps,
        constants,
        TrajectoryField::new(times.clone(), xs)?,
        TrajectoryField::new(times.clone(), x2s)?,
        i0,
        TrajectoryField::new(times.clone(), is)?,
        TrajectoryField::new(times, i3s)?,
    )
}

/// One line of a regularity report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityRow {
    pub component: String,
    pub norm: String,
    pub value: f64,
}

/// Norms of the components in the driving-vector space, and their sum.
pub fn regularity_report(xi: &DrivingVector, kappa: f64) -> Result<Vec<RegularityRow>> {
    if !(kappa > 0.0 && kappa < 0.125) {
        return Err(Error::InvalidParameter(format!("kappa={kappa} outside (0, 1/8)")));
    }
    let p = DyadicPartition::for_lattice(xi.lattice());
    let mut rows = Vec::new();
    let mut push = |component: &str, norm: String, value: f64| {
        rows.push(RegularityRow {
            component: component.into(),
            norm,
            value,
        })
    };
    let specs: [(&str, &TrajectoryField, f64); 7] = [
        ("X", &xi.x, -0.5 - kappa),
        ("X2", &xi.x2, -1.0 - kappa),
        ("I3", &xi.i3, 0.5 - kappa),
        ("C1", &xi.c1, -kappa),
        ("C2", &xi.c2, -kappa),
        ("C3", &xi.c3, -0.5 - kappa),
        ("D", &xi.d, -kappa),
    ];
    let mut total = 0.0;
    for (name, traj, alpha) in specs {
        let v = p.sup_in_time(traj, alpha)?;
        total += v;
        push(name, format!("C_T C^{alpha:.3}"), v);
        if name == "I3" {
            let h = if traj.len() > 1 {
                time_holder_norm(traj, 0.25 - kappa / 2.0)?
            } else {
                0.0
            };
            total += h;
            push(name, format!("C_T^{:.3} L^inf", 0.25 - kappa / 2.0), h);
        }
    }
    let i0 = p.besov_norm(&xi.i0, 1.0 - kappa)?;
    total += i0;
    push("I0", format!("C^{:.3}", 1.0 - kappa), i0);
    push("total", "X_T^kappa".into(), total);
    Ok(rows)
}

/// Sum of the component norms of [`regularity_report`].
pub fn driving_norm(xi: &DrivingVector, kappa: f64) -> Result<f64> {
    Ok(regularity_report(xi, kappa)?
        .last()
        .map(|r| r.value)
        .unwrap_or_default())
}

pub fn rows_as_norms(rows: &[RegularityRow], eps: f64, kappa: f64) -> Vec<NormRow> {
    rows.iter()
        .map(|r| NormRow {
            norm_kind: format!("{}:{}", r.component, r.norm),
            alpha: f64::NAN,
            beta: f64::NAN,
            epsilon: eps,
            kappa,
            value: r.value,
        })
        .collect()
}

/// Moments of a sample: mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMean {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl SampleMean {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        SampleMean {
            mean,
            std_err: (var / n as f64).sqrt(),
            count: n,
        }
    }

    /// `|mean - target| ≤ z·SE`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_err
    }
}

/// `e^{-αℓδt}/(2α)`.
pub fn ou_covariance(eps: f64, k: Mode, lag: f64) -> f64 {
    let a = alpha(eps, k);
    (-a * lag).exp() / (2.0 * a)
}
