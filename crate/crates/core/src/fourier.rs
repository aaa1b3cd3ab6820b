//! Truncated Fourier representation of real fields on the unit 3-torus.
//!
//! A [`FourierField`] stores the coefficients `coeff(k)` for every mode
//! `k ∈ {-N..N}³` of a real distribution `u(x) = Σ_k coeff(k) e^{2πik·x}`.
//! Products are evaluated on an oversampled collocation grid and projected
//! back onto the lattice; with oversampling factor 2 the product of up to
//! three band-limited fields is computed without aliasing.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Integer mode index `k ∈ ℤ³`.
pub type Mode = [i32; 3];

const DUMP_MAGIC: &[u8; 4] = b"PHI3";
const DUMP_VERSION: u32 = 1;

/// Hermitian defect tolerated (relative to the largest coefficient) when
/// accepting externally supplied coefficients.
const HERMITIAN_TOL: f64 = 1e-12;

struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized in-place 3D transform of an `n³` row-major buffer.
    fn run(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let plan = if forward { &self.forward } else { &self.inverse };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);

        let mut lines = vec![Complex64::default(); n * n * n];
        for x in 0..n {
            for y in 0..n {
                let row = (x * n + y) * n;
                for z in 0..n {
                    lines[(x * n + z) * n + y] = data[row + z];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for x in 0..n {
            for y in 0..n {
                let row = (x * n + y) * n;
                for z in 0..n {
                    data[row + z] = lines[(x * n + z) * n + y];
                }
            }
        }

        for x in 0..n {
            for y in 0..n {
                let row = (x * n + y) * n;
                for z in 0..n {
                    lines[(y * n + z) * n + x] = data[row + z];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for x in 0..n {
            for y in 0..n {
                let row = (x * n + y) * n;
                for z in 0..n {
                    data[row + z] = lines[(y * n + z) * n + x];
                }
            }
        }
    }
}

struct LatticeInner {
    n: usize,
    grid_factor: usize,
    resolution: usize,
    modes: Vec<Mode>,
    norm2: Vec<f64>,
    grid_index: Vec<usize>,
    neg_index: Vec<usize>,
    fft: Fft3,
}

/// The truncated mode set `{-N..N}³` together with its collocation grid.
///
/// Modes are enumerated with `k_x` slowest and `k_z` fastest, each running
/// from `-N` to `N`. Cloning is cheap (shared tables and FFT plans).
#[derive(Clone)]
pub struct ModeLattice(Arc<LatticeInner>);

fn smooth_size(min: usize) -> usize {
    let mut m = min.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl ModeLattice {
    /// Lattice with cutoff `|k|_∞ ≤ n` and collocation oversampling `grid_factor`.
    ///
    /// The grid resolution is the smallest 7-smooth integer that is at least
    /// `grid_factor·(2n+1)`.
    pub fn new(n: usize, grid_factor: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidLattice(format!("cutoff N={n} must be at least 1")));
        }
        if grid_factor < 2 {
            return Err(Error::InvalidLattice(format!(
                "grid factor {grid_factor} must be at least 2"
            )));
        }
        let width = 2 * n + 1;
        let resolution = smooth_size(grid_factor * width);
        let ni = n as i32;
        let mut modes = Vec::with_capacity(width * width * width);
        for kx in -ni..=ni {
            for ky in -ni..=ni {
                for kz in -ni..=ni {
                    modes.push([kx, ky, kz]);
                }
            }
        }
        let wrap = |k: i32| -> usize { k.rem_euclid(resolution as i32) as usize };
        let grid_index = modes
            .iter()
            .map(|k| (wrap(k[0]) * resolution + wrap(k[1])) * resolution + wrap(k[2]))
            .collect();
        let norm2 = modes
            .iter()
            .map(|k| (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64)
            .collect();
        let total = modes.len();
        let neg_index = (0..total).map(|i| total - 1 - i).collect();
        Ok(ModeLattice(Arc::new(LatticeInner {
            n,
            grid_factor,
            resolution,
            modes,
            norm2,
            grid_index,
            neg_index,
            fft: Fft3::new(resolution),
        })))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn grid_factor(&self) -> usize {
        self.0.grid_factor
    }

    /// Collocation points per axis.
    pub fn resolution(&self) -> usize {
        self.0.resolution
    }

    /// Number of modes, `(2N+1)³`.
    pub fn len(&self) -> usize {
        self.0.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.modes.is_empty()
    }

    pub fn width(&self) -> usize {
        2 * self.0.n + 1
    }

    pub fn modes(&self) -> &[Mode] {
        &self.0.modes
    }

    pub fn mode(&self, idx: usize) -> Mode {
        self.0.modes[idx]
    }

    /// `|k|²` for every mode in enumeration order.
    pub fn norm2(&self) -> &[f64] {
        &self.0.norm2
    }

    /// Euclidean radius of the largest mode, `√3·N`.
    pub fn radius(&self) -> f64 {
        3f64.sqrt() * self.0.n as f64
    }

    pub fn index(&self, k: Mode) -> Option<usize> {
        let n = self.0.n as i32;
        if k.iter().any(|&c| c < -n || c > n) {
            return None;
        }
        let w = 2 * n + 1;
        Some((((k[0] + n) * w + (k[1] + n)) * w + (k[2] + n)) as usize)
    }

    /// Index of `-k` given the index of `k`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.0.neg_index[idx]
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    pub fn same_as(&self, other: &ModeLattice) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.n == other.0.n && self.0.grid_factor == other.0.grid_factor)
    }

    pub fn check_same(&self, other: &ModeLattice) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                left: self.0.n,
                left_gf: self.0.grid_factor,
                right: other.0.n,
                right_gf: other.0.grid_factor,
            })
        }
    }

    /// Transform a full complex spectrum on the grid to grid values (in place).
    fn inverse_fft(&self, buf: &mut [Complex64]) {
        self.0.fft.run(buf, false);
    }

    fn forward_fft(&self, buf: &mut [Complex64]) {
        self.0.fft.run(buf, true);
    }

    fn grid_len(&self) -> usize {
        let r = self.0.resolution;
        r * r * r
    }
}

impl PartialEq for ModeLattice {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for ModeLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModeLattice")
            .field("n", &self.0.n)
            .field("grid_factor", &self.0.grid_factor)
            .field("resolution", &self.0.resolution)
            .finish()
    }
}

/// Real values on the uniform collocation grid `x = (i,j,l)/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    resolution: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != resolution * resolution * resolution {
            return Err(Error::InvalidParameter(format!(
                "grid of resolution {resolution} needs {} values, got {}",
                resolution.pow(3),
                values.len()
            )));
        }
        Ok(RealGrid { resolution, values })
    }

    pub fn from_fn(resolution: usize, f: impl Fn([f64; 3]) -> f64) -> Self {
        let h = 1.0 / resolution as f64;
        let mut values = Vec::with_capacity(resolution.pow(3));
        for i in 0..resolution {
            for j in 0..resolution {
                for l in 0..resolution {
                    values.push(f([i as f64 * h, j as f64 * h, l as f64 * h]));
                }
            }
        }
        RealGrid { resolution, values }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealGrid {
        RealGrid {
            resolution: self.resolution,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &RealGrid, f: impl Fn(f64, f64) -> f64) -> RealGrid {
        assert_eq!(self.resolution, other.resolution, "grid resolution mismatch");
        RealGrid {
            resolution: self.resolution,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += s·a·b` pointwise.
    pub fn add_product(&mut self, s: f64, a: &RealGrid, b: &RealGrid) {
        for ((v, x), y) in self.values.iter_mut().zip(&a.values).zip(&b.values) {
            *v += s * x * y;
        }
    }

    pub fn zeros(resolution: usize) -> Self {
        RealGrid {
            resolution,
            values: vec![0.0; resolution.pow(3)],
        }
    }
}

/// Fourier coefficients of a real field on the truncated lattice.
#[derive(Clone)]
pub struct FourierField {
    lattice: ModeLattice,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for FourierField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierField")
            .field("lattice", &self.lattice)
            .field("max_coeff", &self.max_coeff())
            .finish()
    }
}

impl PartialEq for FourierField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.coeffs == other.coeffs
    }
}

impl FourierField {
    pub fn zeros(lattice: &ModeLattice) -> Self {
        FourierField {
            lattice: lattice.clone(),
            coeffs: vec![Complex64::default(); lattice.len()],
        }
    }

    pub fn constant(lattice: &ModeLattice, c: f64) -> Self {
        let mut f = Self::zeros(lattice);
        let z = lattice.zero_index();
        f.coeffs[z] = Complex64::new(c, 0.0);
        f
    }

    /// `amplitude·cos(2πk·x)`.
    pub fn cosine(lattice: &ModeLattice, k: Mode, amplitude: f64) -> Result<Self> {
        Self::plane_pair(lattice, k, Complex64::new(amplitude / 2.0, 0.0))
    }

    /// `amplitude·sin(2πk·x)`.
    pub fn sine(lattice: &ModeLattice, k: Mode, amplitude: f64) -> Result<Self> {
        Self::plane_pair(lattice, k, Complex64::new(0.0, -amplitude / 2.0))
    }

    /// `c·e_k + conj(c)·e_{-k}` (or `2·Re c` at `k = 0`).
    pub fn plane_pair(lattice: &ModeLattice, k: Mode, c: Complex64) -> Result<Self> {
        let idx = lattice
            .index(k)
            .ok_or_else(|| Error::InvalidParameter(format!("mode {k:?} outside lattice")))?;
        let mut f = Self::zeros(lattice);
        let neg = lattice.neg_index(idx);
        f.coeffs[idx] += c;
        f.coeffs[neg] += c.conj();
        Ok(f)
    }

    /// Accept externally supplied coefficients; they must be finite and
    /// Hermitian up to roundoff, and are symmetrized exactly.
    pub fn from_coeffs(lattice: &ModeLattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {c}")));
        }
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let mut defect = 0.0f64;
        for (i, c) in coeffs.iter().enumerate() {
            let d = (c - coeffs[lattice.neg_index(i)].conj()).norm();
            defect = defect.max(d);
        }
        if defect > HERMITIAN_TOL * scale.max(1e-300) && defect > 0.0 {
            return Err(Error::NotHermitian(defect / scale.max(1e-300)));
        }
        let mut f = FourierField {
            lattice: lattice.clone(),
            coeffs,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Build a field from a coefficient function; the function must describe a real field.
    pub fn from_fn(lattice: &ModeLattice, f: impl Fn(Mode) -> Complex64) -> Result<Self> {
        let coeffs = lattice.modes().iter().map(|&k| f(k)).collect();
        Self::from_coeffs(lattice, coeffs)
    }

    /// Internal constructor for coefficient vectors that are Hermitian by construction.
    pub(crate) fn from_raw(lattice: &ModeLattice, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), lattice.len());
        FourierField {
            lattice: lattice.clone(),
            coeffs,
        }
    }

    fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        for i in 0..n / 2 {
            let j = self.lattice.neg_index(i);
            let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            self.coeffs[i] = avg;
            self.coeffs[j] = avg.conj();
        }
        let z = self.lattice.zero_index();
        self.coeffs[z].im = 0.0;
    }

    pub fn lattice(&self) -> &ModeLattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at mode `k` (zero outside the lattice).
    pub fn coeff(&self, k: Mode) -> Complex64 {
        self.lattice
            .index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Spatial mean, i.e. the `k = 0` coefficient.
    pub fn mean(&self) -> f64 {
        self.coeffs[self.lattice.zero_index()].re
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `Σ_k |coeff(k)|²`, which equals the spatial mean square.
    pub fn l2_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Largest coefficient difference, for comparisons in tests and reports.
    pub fn max_diff(&self, other: &FourierField) -> f64 {
        self.lattice.check_same(&other.lattice).expect("lattice mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn scale(&self, s: f64) -> FourierField {
        FourierField {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: f64, other: &FourierField) {
        self.lattice.check_same(&other.lattice).expect("lattice mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    /// Mode-wise real multiplier; real symbols that are even in `k` preserve symmetry.
    pub fn map_real_symbol(&self, m: impl Fn(usize) -> f64) -> FourierField {
        FourierField {
            lattice: self.lattice.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * m(i))
                .collect(),
        }
    }

    /// Apply an arbitrary Fourier multiplier `coeff(k) ↦ m(k)·coeff(k)`.
    ///
    /// Fails if `m` is not finite on the lattice or if the result is no longer
    /// the spectrum of a real field.
    pub fn apply_symbol(&self, m: impl Fn(Mode) -> Complex64) -> Result<FourierField> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (k, c) in self.lattice.modes().iter().zip(&self.coeffs) {
            let s = m(*k);
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(Error::NonFinite(format!("symbol at {k:?} is {s}")));
            }
            coeffs.push(c * s);
        }
        Self::from_coeffs(&self.lattice, coeffs)
    }

    /// `∂_axis`, symbol `2πi k_axis`.
    pub fn partial(&self, axis: usize) -> FourierField {
        let modes = self.lattice.modes();
        FourierField {
            lattice: self.lattice.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(modes)
                .map(|(c, k)| c * Complex64::new(0.0, 2.0 * PI * k[axis] as f64))
                .collect(),
        }
    }

    pub fn gradient(&self) -> [FourierField; 3] {
        [self.partial(0), self.partial(1), self.partial(2)]
    }

    /// `Δ`, symbol `-4π²|k|²`.
    pub fn laplacian(&self) -> FourierField {
        let n2 = self.lattice.norm2();
        self.map_real_symbol(|i| -4.0 * PI * PI * n2[i])
    }

    /// `Δ²`, symbol `16π⁴|k|⁴`.
    pub fn bilaplacian(&self) -> FourierField {
        let n2 = self.lattice.norm2();
        self.map_real_symbol(|i| 16.0 * PI.powi(4) * n2[i] * n2[i])
    }

    /// Values on the collocation grid.
    pub fn to_grid(&self) -> RealGrid {
        let lat = &self.lattice;
        let mut buf = vec![Complex64::default(); lat.grid_len()];
        for (c, &g) in self.coeffs.iter().zip(&lat.0.grid_index) {
            buf[g] = *c;
        }
        lat.inverse_fft(&mut buf);
        RealGrid {
            resolution: lat.resolution(),
            values: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Two fields to grid with a single complex transform.
    pub fn to_grid_pair(&self, other: &FourierField) -> (RealGrid, RealGrid) {
        self.lattice.check_same(&other.lattice).expect("lattice mismatch");
        let lat = &self.lattice;
        // Pairing leaks roundoff of one field into the other; keep exact zeros exact.
        if other.is_zero() || self.is_zero() {
            let zero = RealGrid::zeros(lat.resolution());
            return if other.is_zero() {
                (self.to_grid(), zero)
            } else {
                (zero, other.to_grid())
            };
        }
        let mut buf = vec![Complex64::default(); lat.grid_len()];
        let i = Complex64::new(0.0, 1.0);
        for ((a, b), &g) in self.coeffs.iter().zip(&other.coeffs).zip(&lat.0.grid_index) {
            buf[g] = a + i * b;
        }
        lat.inverse_fft(&mut buf);
        let res = lat.resolution();
        let (re, im): (Vec<f64>, Vec<f64>) = buf.into_iter().map(|c| (c.re, c.im)).unzip();
        (
            RealGrid {
                resolution: res,
                values: re,
            },
            RealGrid {
                resolution: res,
                values: im,
            },
        )
    }

    /// Galerkin projection of grid values onto the lattice.
    pub fn from_grid(grid: &RealGrid, lattice: &ModeLattice) -> Result<FourierField> {
        let need = lattice.width();
        if grid.resolution < need {
            return Err(Error::InsufficientResolution {
                got: grid.resolution,
                need,
            });
        }
        if grid.resolution != lattice.resolution() {
            // Project through a lattice-sized plan for foreign resolutions.
            return project_foreign(grid, lattice);
        }
        Ok(project(lattice, grid))
    }

    /// Discrete sup norm on the oversampled collocation grid.
    pub fn sup_norm(&self) -> f64 {
        self.to_grid().sup()
    }

    /// Galerkin product `P_N(f·g)`.
    pub fn multiply(&self, other: &FourierField) -> Result<FourierField> {
        self.lattice.check_same(&other.lattice)?;
        Ok(self.mul_field(other))
    }

    fn mul_field(&self, other: &FourierField) -> FourierField {
        let (a, b) = self.to_grid_pair(other);
        let prod = a.zip_map(&b, |x, y| x * y);
        project(&self.lattice, &prod)
    }

    /// `P_N(self²)`.
    pub fn square(&self) -> FourierField {
        let g = self.to_grid();
        project(&self.lattice, &g.map(|x| x * x))
    }

    /// `P_N(self³)`, exact for band-limited input with oversampling ≥ 2.
    pub fn cube(&self) -> FourierField {
        let g = self.to_grid();
        project(&self.lattice, &g.map(|x| x * x * x))
    }

    /// Pointwise exponential `exp(s·self)` on the collocation grid, projected.
    pub fn exp_scaled(&self, s: f64) -> Result<FourierField> {
        let g = self.to_grid();
        let sup = g.sup() * s.abs();
        if !sup.is_finite() || sup > MAX_EXP_ARGUMENT {
            return Err(Error::ExpOverflow(sup));
        }
        Ok(project(&self.lattice, &g.map(|x| (s * x).exp())))
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.lattice.n() as u32).to_le_bytes())?;
        w.write_all(&(self.lattice.grid_factor() as u32).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<FourierField> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != DUMP_VERSION {
            return Err(Error::Format(format!("unsupported dump version {version}")));
        }
        r.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let gf = u32::from_le_bytes(word) as usize;
        let lattice = ModeLattice::new(n, gf)?;
        let mut coeffs = Vec::with_capacity(lattice.len());
        let mut d = [0u8; 8];
        for _ in 0..lattice.len() {
            r.read_exact(&mut d)?;
            let re = f64::from_le_bytes(d);
            r.read_exact(&mut d)?;
            let im = f64::from_le_bytes(d);
            coeffs.push(Complex64::new(re, im));
        }
        FourierField::from_coeffs(&lattice, coeffs)
    }
}

/// Largest `|s·h|_∞` accepted by [`FourierField::exp_scaled`].
pub const MAX_EXP_ARGUMENT: f64 = 60.0;

/// Project grid values (at the lattice's own resolution) onto the lattice.
pub(crate) fn project(lattice: &ModeLattice, grid: &RealGrid) -> FourierField {
    debug_assert_eq!(grid.resolution, lattice.resolution());
    let mut buf: Vec<Complex64> = grid.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    lattice.forward_fft(&mut buf);
    let norm = 1.0 / lattice.grid_len() as f64;
    let mut coeffs: Vec<Complex64> = lattice.0.grid_index.iter().map(|&g| buf[g] * norm).collect();
    // Real input: restore exact Hermitian symmetry lost to roundoff.
    let n = coeffs.len();
    for i in 0..n / 2 {
        let j = lattice.neg_index(i);
        let avg = (coeffs[i] + coeffs[j].conj()) * 0.5;
        coeffs[i] = avg;
        coeffs[j] = avg.conj();
    }
    coeffs[lattice.zero_index()].im = 0.0;
    FourierField::from_raw(lattice, coeffs)
}

/// Project two grids with one complex transform.
pub(crate) fn project_pair(
    lattice: &ModeLattice,
    a: &RealGrid,
    b: &RealGrid,
) -> (FourierField, FourierField) {
    let mut buf: Vec<Complex64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    lattice.forward_fft(&mut buf);
    let norm = 1.0 / lattice.grid_len() as f64;
    let h: Vec<Complex64> = lattice.0.grid_index.iter().map(|&g| buf[g] * norm).collect();
    let n = h.len();
    let mut fa = vec![Complex64::default(); n];
    let mut fb = vec![Complex64::default(); n];
    let half_i = Complex64::new(0.0, -0.5);
    for i in 0..n {
        let j = lattice.neg_index(i);
        fa[i] = (h[i] + h[j].conj()) * 0.5;
        fb[i] = (h[i] - h[j].conj()) * half_i;
    }
    let z = lattice.zero_index();
    fa[z].im = 0.0;
    fb[z].im = 0.0;
    (
        FourierField::from_raw(lattice, fa),
        FourierField::from_raw(lattice, fb),
    )
}

fn project_foreign(grid: &RealGrid, lattice: &ModeLattice) -> Result<FourierField> {
    let m = grid.resolution;
    let fft = Fft3::new(m);
    let mut buf: Vec<Complex64> = grid.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.run(&mut buf, true);
    let norm = 1.0 / (m * m * m) as f64;
    let wrap = |k: i32| -> usize { k.rem_euclid(m as i32) as usize };
    let coeffs = lattice
        .modes()
        .iter()
        .map(|k| buf[(wrap(k[0]) * m + wrap(k[1])) * m + wrap(k[2])] * norm)
        .collect::<Vec<_>>();
    let mut f = FourierField::from_raw(lattice, coeffs);
    f.symmetrize();
    Ok(f)
}

/// Convert several fields to grid values, pairing transforms.
pub fn grids_of(fields: &[&FourierField]) -> Vec<RealGrid> {
    let mut out = Vec::with_capacity(fields.len());
    let mut chunks = fields.chunks(2);
    for chunk in &mut chunks {
        match chunk {
            [a, b] => {
                let (ga, gb) = a.to_grid_pair(b);
                out.push(ga);
                out.push(gb);
            }
            [a] => out.push(a.to_grid()),
            _ => unreachable!(),
        }
    }
    out
}

/// Project several grids onto `lattice`, pairing transforms.
pub fn project_all(lattice: &ModeLattice, grids: &[RealGrid]) -> Vec<FourierField> {
    let mut out = Vec::with_capacity(grids.len());
    for chunk in grids.chunks(2) {
        match chunk {
            [a, b] => {
                let (fa, fb) = project_pair(lattice, a, b);
                out.push(fa);
                out.push(fb);
            }
            [a] => out.push(project(lattice, a)),
            _ => unreachable!(),
        }
    }
    out
}

/// Evaluate a pointwise map of several fields on the collocation grid and project.
///
/// `kernel` receives the input values at one grid point and writes `outputs` values.
pub fn pointwise(
    lattice: &ModeLattice,
    inputs: &[&FourierField],
    outputs: usize,
    kernel: impl Fn(&[f64], &mut [f64]),
) -> Vec<FourierField> {
    for f in inputs {
        lattice.check_same(f.lattice()).expect("lattice mismatch");
    }
    let grids = grids_of(inputs);
    let res = lattice.resolution();
    let len = res * res * res;
    let mut out: Vec<RealGrid> = (0..outputs).map(|_| RealGrid::zeros(res)).collect();
    let mut x = vec![0.0; inputs.len()];
    let mut y = vec![0.0; outputs];
    for p in 0..len {
        for (xi, g) in x.iter_mut().zip(&grids) {
            *xi = g.values[p];
        }
        kernel(&x, &mut y);
        for (o, v) in out.iter_mut().zip(&y) {
            o.values[p] = *v;
        }
    }
    project_all(lattice, &out)
}

/// Project a single grid onto `lattice`.
pub fn project_grid(lattice: &ModeLattice, grid: &RealGrid) -> FourierField {
    project(lattice, grid)
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&FourierField> for FourierField {
    fn add_assign(&mut self, rhs: &FourierField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&FourierField> for FourierField {
    fn sub_assign(&mut self, rhs: &FourierField) {
        self.axpy(-1.0, rhs);
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(-1.0)
    }
}

/// Galerkin product; panics on lattice mismatch (use [`FourierField::multiply`] to get an error).
impl Mul for &FourierField {
    type Output = FourierField;
    fn mul(self, rhs: &FourierField) -> FourierField {
        self.lattice.check_same(&rhs.lattice).expect("lattice mismatch");
        self.mul_field(rhs)
    }
}

impl Mul<&FourierField> for f64 {
    type Output = FourierField;
    fn mul(self, rhs: &FourierField) -> FourierField {
        rhs.scale(self)
    }
}
