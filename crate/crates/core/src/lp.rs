//! Littlewood–Paley blocks, Besov–Hölder norms and space-time norms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{FourierField, ModeLattice, RealGrid};

const INNER: f64 = 0.75;
const OUTER: f64 = 4.0 / 3.0;

fn transition(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth radial bump: 1 on `[0, 3/4]`, 0 on `[4/3, ∞)`.
pub fn chi(r: f64) -> f64 {
    if r <= INNER {
        1.0
    } else if r >= OUTER {
        0.0
    } else {
        let s = (r - INNER) / (OUTER - INNER);
        let a = transition(1.0 - s);
        a / (a + transition(s))
    }
}

/// Dyadic partition `ρ_{-1} = χ(|ξ|)`, `ρ_j = χ(2^{-j-1}|ξ|) - χ(2^{-j}|ξ|)`.
///
/// `supp ρ_{-1} ⊂ B(0, 4/3)`, `supp ρ_j ⊂ 2^j·[3/4, 8/3]` and the blocks up to
/// `j_max` sum to one on `|ξ| ≤ 3/2·2^{j_max}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    j_max: i32,
}

impl DyadicPartition {
    pub fn new(j_max: i32) -> Result<Self> {
        if j_max < 1 {
            return Err(Error::InvalidParameter(format!("j_max={j_max} must be at least 1")));
        }
        Ok(DyadicPartition { j_max })
    }

    /// Smallest partition covering every mode of `lattice`.
    pub fn for_lattice(lattice: &ModeLattice) -> Self {
        let radius = lattice.radius();
        let mut j = 1;
        while Self::covered_radius(j) < radius {
            j += 1;
        }
        DyadicPartition { j_max: j }
    }

    fn covered_radius(j_max: i32) -> f64 {
        INNER * 2f64.powi(j_max + 1)
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Radius up to which the partition sums to one.
    pub fn radius(&self) -> f64 {
        Self::covered_radius(self.j_max)
    }

    pub fn check_covers(&self, lattice: &ModeLattice) -> Result<()> {
        if self.radius() < lattice.radius() {
            return Err(Error::PartitionTooSmall {
                j_max: self.j_max,
                radius: lattice.radius(),
            });
        }
        Ok(())
    }

    /// `ρ_j(ξ)` as a function of `r = |ξ|`; zero for `j > j_max`.
    pub fn rho(&self, j: i32, r: f64) -> f64 {
        if j < -1 || j > self.j_max {
            0.0
        } else if j == -1 {
            chi(r)
        } else {
            chi(r * 2f64.powi(-j - 1)) - chi(r * 2f64.powi(-j))
        }
    }

    /// Block weights `ρ_j(k)` over the lattice for `j = -1..=j_max`.
    pub fn weights(&self, lattice: &ModeLattice) -> Result<Vec<Vec<f64>>> {
        self.check_covers(lattice)?;
        Ok((-1..=self.j_max)
            .map(|j| lattice.norm2().iter().map(|n2| self.rho(j, n2.sqrt())).collect())
            .collect())
    }

    fn check_block(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            Err(Error::BlockOutOfRange(j))
        } else {
            Ok(())
        }
    }

    /// `Δ_j f`.
    pub fn block(&self, f: &FourierField, j: i32) -> Result<FourierField> {
        self.check_block(j)?;
        self.check_covers(f.lattice())?;
        let n2 = f.lattice().norm2();
        Ok(f.map_real_symbol(|i| self.rho(j, n2[i].sqrt())))
    }

    /// `Δ_{<j} f = Σ_{i=-1}^{j-1} Δ_i f`.
    pub fn block_low(&self, f: &FourierField, j: i32) -> Result<FourierField> {
        if j < -1 || j > self.j_max + 1 {
            return Err(Error::BlockOutOfRange(j));
        }
        self.check_covers(f.lattice())?;
        let n2 = f.lattice().norm2();
        Ok(f.map_real_symbol(|i| {
            let r = n2[i].sqrt();
            (-1..j).map(|b| self.rho(b, r)).sum()
        }))
    }

    /// `sup_x |Δ_j f|` for every block, `j = -1..=j_max`.
    pub fn block_sups(&self, f: &FourierField) -> Result<BlockSups> {
        let weights = self.weights(f.lattice())?;
        let blocks: Vec<Option<FourierField>> = weights
            .iter()
            .map(|w| (!w.iter().all(|&x| x == 0.0)).then(|| f.map_real_symbol(|i| w[i])))
            .collect();
        let mut sups = vec![0.0; blocks.len()];
        // Two real blocks per complex transform; the pairing leak is far below
        // the precision of a sup norm.
        let live: Vec<usize> = (0..blocks.len()).filter(|&j| blocks[j].is_some()).collect();
        for pair in live.chunks(2) {
            let a = blocks[pair[0]].as_ref().expect("live block");
            if let [_, b] = pair {
                let (ga, gb) = a.to_grid_pair(blocks[*b].as_ref().expect("live block"));
                sups[pair[0]] = ga.sup();
                sups[*b] = gb.sup();
            } else {
                sups[pair[0]] = a.sup_norm();
            }
        }
        Ok(BlockSups { sups })
    }

    /// `‖f‖_{C^α} = sup_j 2^{jα} ‖Δ_j f‖_∞`.
    pub fn besov_norm(&self, f: &FourierField, alpha: f64) -> Result<f64> {
        Ok(self.block_sups(f)?.besov(alpha))
    }

    /// `‖f‖_{C^α_ε} = ‖f‖_{C^α} + ε^{1-κ/4}‖f‖_{C^{α+2-κ}}`.
    pub fn eps_norm(&self, f: &FourierField, alpha: f64, eps: f64, kappa: f64) -> Result<f64> {
        check_eps_kappa(eps, kappa)?;
        Ok(self.block_sups(f)?.eps(alpha, eps, kappa))
    }

    /// `‖u‖_{E_T^β C_ε^α}` on the sampled times.
    pub fn spacetime_norm(
        &self,
        u: &TrajectoryField,
        beta: f64,
        alpha: f64,
        eps: f64,
        kappa: f64,
    ) -> Result<f64> {
        check_eps_kappa(eps, kappa)?;
        if beta > alpha {
            return Err(Error::InvalidParameter(format!("beta={beta} exceeds alpha={alpha}")));
        }
        if u.is_empty() {
            return Err(Error::TimeGrid("empty trajectory".into()));
        }
        let mut first = 0.0f64;
        let mut second = 0.0f64;
        for (t, f) in u.iter() {
            let s = self.block_sups(f)?;
            first = first.max(s.besov(beta));
            if t > 0.0 {
                second = second.max(t.powf((alpha - beta) / 2.0) * s.eps(alpha, eps, kappa));
            }
        }
        Ok(first + second)
    }

    /// `sup_t ‖u(t)‖_{C^α}`.
    pub fn sup_in_time(&self, u: &TrajectoryField, alpha: f64) -> Result<f64> {
        let mut m = 0.0f64;
        for f in u.fields() {
            m = m.max(self.besov_norm(f, alpha)?);
        }
        Ok(m)
    }
}

fn check_eps_kappa(eps: f64, kappa: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps={eps} outside [0, 1]")));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa={kappa} outside (0, 1)")));
    }
    Ok(())
}

/// Sup norms of the Littlewood–Paley blocks of one field.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSups {
    /// Entry `j + 1` holds `‖Δ_j f‖_∞`.
    pub sups: Vec<f64>,
}

impl BlockSups {
    pub fn besov(&self, alpha: f64) -> f64 {
        self.sups
            .iter()
            .enumerate()
            .map(|(i, s)| 2f64.powf((i as f64 - 1.0) * alpha) * s)
            .fold(0.0, f64::max)
    }

    pub fn eps(&self, alpha: f64, eps: f64, kappa: f64) -> f64 {
        let mut v = self.besov(alpha);
        if eps > 0.0 {
            v += eps.powf(1.0 - kappa / 4.0) * self.besov(alpha + 2.0 - kappa);
        }
        v
    }
}

/// Time samples of a field on one lattice.
#[derive(Clone, Debug)]
pub struct TrajectoryField {
    times: Vec<f64>,
    fields: Vec<FourierField>,
}

impl TrajectoryField {
    pub fn new(times: Vec<f64>, fields: Vec<FourierField>) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::TimeGrid(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::TimeGrid("times must be strictly increasing".into()));
        }
        if let Some(first) = fields.first() {
            for f in &fields[1..] {
                first.lattice().check_same(f.lattice())?;
            }
        }
        Ok(TrajectoryField { times, fields })
    }

    /// The same field at every time.
    pub fn constant(times: Vec<f64>, f: &FourierField) -> Result<Self> {
        let fields = vec![f.clone(); times.len()];
        Self::new(times, fields)
    }

    pub fn zeros(times: Vec<f64>, lattice: &ModeLattice) -> Result<Self> {
        Self::constant(times, &FourierField::zeros(lattice))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[FourierField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn at(&self, n: usize) -> &FourierField {
        &self.fields[n]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &FourierField)> {
        self.times.iter().copied().zip(self.fields.iter())
    }

    pub fn lattice(&self) -> Option<&ModeLattice> {
        self.fields.first().map(|f| f.lattice())
    }

    pub fn into_fields(self) -> Vec<FourierField> {
        self.fields
    }

    /// Index of the sample at time `t` (to within `1e-9` of the step).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.times.last().map(|x| x.abs()).unwrap_or(1.0).max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::TimeGrid(format!("t={t} is not a grid time")))
    }

    /// Common step of a uniform grid.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::TimeGrid("need at least two samples for a step".into()));
        }
        let h = self.times[1] - self.times[0];
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) {
                return Err(Error::TimeGrid("time grid is not uniform".into()));
            }
        }
        Ok(h)
    }

    pub fn map(&self, f: impl Fn(&FourierField) -> FourierField) -> TrajectoryField {
        TrajectoryField {
            times: self.times.clone(),
            fields: self.fields.iter().map(f).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &TrajectoryField,
        f: impl Fn(&FourierField, &FourierField) -> FourierField,
    ) -> Result<TrajectoryField> {
        self.check_same_grid(other)?;
        Ok(TrajectoryField {
            times: self.times.clone(),
            fields: self.fields.iter().zip(&other.fields).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn check_same_grid(&self, other: &TrajectoryField) -> Result<()> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::TimeGrid("time grids differ".into()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &TrajectoryField) -> Result<TrajectoryField> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Largest coefficient difference over all samples.
    pub fn max_diff(&self, other: &TrajectoryField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max))
    }

    /// Restrict to the first `n` samples.
    pub fn truncate(&self, n: usize) -> TrajectoryField {
        TrajectoryField {
            times: self.times[..n].to_vec(),
            fields: self.fields[..n].to_vec(),
        }
    }
}

/// Uniform grid `0, dt, ..., T` (the last point snapped to `T`).
pub fn uniform_times(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::TimeGrid(format!("invalid grid T={t_end}, dt={dt}")));
    }
    let n = (t_end / dt).round() as usize;
    if ((n as f64) * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::TimeGrid(format!("T={t_end} is not a multiple of dt={dt}")));
    }
    Ok((0..=n).map(|i| i as f64 * dt).collect())
}

/// `sup_{s<t} ‖u(t) - u(s)‖_∞ / |t - s|^δ` over sampled pairs.
pub fn time_holder_norm(u: &TrajectoryField, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta={delta} outside [0, 1]")));
    }
    if u.len() < 2 {
        return Err(Error::TimeGrid("need at least two samples".into()));
    }
    let grids: Vec<RealGrid> = u.fields().iter().map(|f| f.to_grid()).collect();
    let mut best = 0.0f64;
    for i in 0..grids.len() {
        for j in i + 1..grids.len() {
            let d = grids[i]
                .values()
                .iter()
                .zip(grids[j].values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let dt = u.times()[j] - u.times()[i];
            best = best.max(d / dt.powf(delta));
        }
    }
    Ok(best)
}

/// One row of a norm report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub norm_kind: String,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub value: f64,
}

pub fn write_norm_rows(path: &Path, rows: &[NormRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
