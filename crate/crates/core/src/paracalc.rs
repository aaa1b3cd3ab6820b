//! Bony paraproducts, resonant products and the commutator.
//!
//! Block products are accumulated on the collocation grid and projected once;
//! since the grid resolves every product of two lattice fields exactly, this
//! equals the sum of individually projected block products.

use crate::error::Result;
use crate::fourier::{grids_of, project_grid, FourierField, Mode, ModeLattice, RealGrid};
use crate::lp::DyadicPartition;

/// Paraproduct calculus on a fixed lattice and partition.
#[derive(Clone, Debug)]
pub struct Paracalc {
    lattice: ModeLattice,
    partition: DyadicPartition,
    /// `weights[j+1][mode]`, with blocks that vanish on the lattice dropped from the tail.
    weights: Vec<Vec<f64>>,
}

/// Grid values of the Littlewood–Paley blocks of a field.
#[derive(Clone, Debug)]
pub struct BlockGrids {
    blocks: Vec<RealGrid>,
}

impl BlockGrids {
    fn get(&self, j: i32) -> Option<&RealGrid> {
        if j < -1 {
            None
        } else {
            self.blocks.get((j + 1) as usize)
        }
    }

    /// Grid values of the whole field.
    pub fn total(&self) -> RealGrid {
        let mut acc = RealGrid::zeros(self.blocks[0].resolution());
        for b in &self.blocks {
            for (a, v) in acc.values_mut().iter_mut().zip(b.values()) {
                *a += v;
            }
        }
        acc
    }
}

impl Paracalc {
    pub fn new(lattice: &ModeLattice, partition: DyadicPartition) -> Result<Self> {
        let mut weights = partition.weights(lattice)?;
        while weights.len() > 1 && weights.last().is_some_and(|w| w.iter().all(|&x| x == 0.0)) {
            weights.pop();
        }
        Ok(Paracalc {
            lattice: lattice.clone(),
            partition,
            weights,
        })
    }

    /// Calculus with the smallest partition covering `lattice`.
    pub fn for_lattice(lattice: &ModeLattice) -> Self {
        Self::new(lattice, DyadicPartition::for_lattice(lattice)).expect("covering partition")
    }

    pub fn lattice(&self) -> &ModeLattice {
        &self.lattice
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    /// Number of nonvanishing blocks (from `j = -1`).
    pub fn block_count(&self) -> usize {
        self.weights.len()
    }

    pub fn blocks(&self, f: &FourierField) -> BlockGrids {
        self.lattice.check_same(f.lattice()).expect("lattice mismatch");
        let parts: Vec<FourierField> = self
            .weights
            .iter()
            .map(|w| f.map_real_symbol(|i| w[i]))
            .collect();
        let refs: Vec<&FourierField> = parts.iter().collect();
        BlockGrids {
            blocks: grids_of(&refs),
        }
    }

    /// Grid values of `f ⊲ g = Σ_j Δ_{<j-1}f · Δ_j g`, unprojected.
    pub fn para_grid(&self, f: &BlockGrids, g: &BlockGrids, out: &mut RealGrid, scale: f64) {
        let res = f.blocks[0].resolution();
        let mut low = RealGrid::zeros(res);
        let nb = self.block_count() as i32;
        for j in 1..nb - 1 {
            let add = f.get(j - 2).expect("block");
            for (a, v) in low.values_mut().iter_mut().zip(add.values()) {
                *a += v;
            }
            out.add_product(scale, &low, g.get(j).expect("block"));
        }
    }

    /// Grid values of `f ⊙ g = Σ_{|i-j|≤1} Δ_i f · Δ_j g`, unprojected.
    pub fn resonant_grid(&self, f: &BlockGrids, g: &BlockGrids, out: &mut RealGrid, scale: f64) {
        let nb = self.block_count() as i32;
        for i in -1..nb - 1 {
            let fi = f.get(i).expect("block");
            for j in (i - 1).max(-1)..=(i + 1).min(nb - 2) {
                out.add_product(scale, fi, g.get(j).expect("block"));
            }
        }
    }

    fn zero_grid(&self) -> RealGrid {
        RealGrid::zeros(self.lattice.resolution())
    }

    pub fn project(&self, grid: &RealGrid) -> FourierField {
        project_grid(&self.lattice, grid)
    }

    /// `f ⊲ g` (low-frequency `f`, high-frequency `g`).
    pub fn para(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.lattice.check_same(f.lattice())?;
        self.lattice.check_same(g.lattice())?;
        let (bf, bg) = (self.blocks(f), self.blocks(g));
        let mut out = self.zero_grid();
        self.para_grid(&bf, &bg, &mut out, 1.0);
        Ok(self.project(&out))
    }

    /// `f ⊳ g = g ⊲ f`.
    pub fn para_rev(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.para(g, f)
    }

    /// `f ⊙ g`.
    pub fn resonant(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.lattice.check_same(f.lattice())?;
        self.lattice.check_same(g.lattice())?;
        let (bf, bg) = (self.blocks(f), self.blocks(g));
        let mut out = self.zero_grid();
        self.resonant_grid(&bf, &bg, &mut out, 1.0);
        Ok(self.project(&out))
    }

    /// `(f ⊲ g, f ⊳ g, f ⊙ g)` sharing one set of block transforms.
    pub fn bony(&self, f: &FourierField, g: &FourierField) -> Result<[FourierField; 3]> {
        self.lattice.check_same(f.lattice())?;
        self.lattice.check_same(g.lattice())?;
        let (bf, bg) = (self.blocks(f), self.blocks(g));
        let mut a = self.zero_grid();
        let mut b = self.zero_grid();
        let mut c = self.zero_grid();
        self.para_grid(&bf, &bg, &mut a, 1.0);
        self.para_grid(&bg, &bf, &mut b, 1.0);
        self.resonant_grid(&bf, &bg, &mut c, 1.0);
        Ok([self.project(&a), self.project(&b), self.project(&c)])
    }

    /// `f ⊲ g + f ⊳ g`.
    pub fn para_sym(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.lattice.check_same(f.lattice())?;
        self.lattice.check_same(g.lattice())?;
        let (bf, bg) = (self.blocks(f), self.blocks(g));
        let mut out = self.zero_grid();
        self.para_grid(&bf, &bg, &mut out, 1.0);
        self.para_grid(&bg, &bf, &mut out, 1.0);
        Ok(self.project(&out))
    }

    /// `∇f ⊲ ∇g = Σ_i ∂_i f ⊲ ∂_i g`.
    pub fn inner_para_grad(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.inner_grad(f, g, |pc, a, b, out| pc.para_grid(a, b, out, 1.0))
    }

    /// `∇f ⊳ ∇g`.
    pub fn inner_para_rev_grad(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.inner_grad(f, g, |pc, a, b, out| pc.para_grid(b, a, out, 1.0))
    }

    /// `∇f (⊲+⊳) ∇g`.
    pub fn inner_para_sym_grad(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.inner_grad(f, g, |pc, a, b, out| {
            pc.para_grid(a, b, out, 1.0);
            pc.para_grid(b, a, out, 1.0);
        })
    }

    /// `∇f ⊙ ∇g = Σ_i ∂_i f ⊙ ∂_i g`.
    pub fn inner_resonant_grad(&self, f: &FourierField, g: &FourierField) -> Result<FourierField> {
        self.inner_grad(f, g, |pc, a, b, out| pc.resonant_grid(a, b, out, 1.0))
    }

    fn inner_grad(
        &self,
        f: &FourierField,
        g: &FourierField,
        op: impl Fn(&Self, &BlockGrids, &BlockGrids, &mut RealGrid),
    ) -> Result<FourierField> {
        self.lattice.check_same(f.lattice())?;
        self.lattice.check_same(g.lattice())?;
        let mut out = self.zero_grid();
        for axis in 0..3 {
            let bf = self.blocks(&f.partial(axis));
            let bg = self.blocks(&g.partial(axis));
            op(self, &bf, &bg, &mut out);
        }
        Ok(self.project(&out))
    }

    /// `C(f,g,h) = (f ⊲ g) ⊙ h - f (g ⊙ h)`.
    pub fn commutator(&self, f: &FourierField, g: &FourierField, h: &FourierField) -> Result<FourierField> {
        let fg = self.para(f, g)?;
        let left = self.resonant(&fg, h)?;
        let gh = self.resonant(g, h)?;
        Ok(&left - &f.multiply(&gh)?)
    }

    /// `C(f, ∇g, ∇h) = Σ_i C(f, ∂_i g, ∂_i h)`.
    pub fn commutator_grad(&self, f: &FourierField, g: &FourierField, h: &FourierField) -> Result<FourierField> {
        let mut acc = FourierField::zeros(&self.lattice);
        for axis in 0..3 {
            acc += &self.commutator(f, &g.partial(axis), &h.partial(axis))?;
        }
        Ok(acc)
    }

    /// `ψ∘(k,l) = Σ_{|i-j|≤1} ρ_i(k) ρ_j(l)`.
    pub fn psi_circ(&self, k: Mode, l: Mode) -> f64 {
        psi_circ(&self.partition, k, l)
    }
}

/// `ψ∘(k,l) = Σ_{|i-j|≤1} ρ_i(k) ρ_j(l)`.
pub fn psi_circ(p: &DyadicPartition, k: Mode, l: Mode) -> f64 {
    let norm = |m: Mode| ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt();
    let (rk, rl) = (norm(k), norm(l));
    let mut s = 0.0;
    for i in -1..=p.j_max() {
        let a = p.rho(i, rk);
        if a == 0.0 {
            continue;
        }
        for j in (i - 1).max(-1)..=(i + 1).min(p.j_max()) {
            s += a * p.rho(j, rl);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_field, Spectrum};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (ModeLattice, Paracalc) {
        let l = ModeLattice::new(n, 2).unwrap();
        let pc = Paracalc::for_lattice(&l);
        (l, pc)
    }

    fn rel(a: &FourierField, b: &FourierField) -> f64 {
        a.max_diff(b) / b.max_coeff().max(1e-300)
    }

    #[test]
    fn bony_reconstruction() {
        let (l, pc) = setup(8);
        for s in 0..3 {
            let f = gaussian_field(&l, 100 + s, Spectrum::Shaped { alpha: -0.5 }, 1.0);
            let g = gaussian_field(&l, 200 + s, Spectrum::White, 1.0);
            let [a, b, c] = pc.bony(&f, &g).unwrap();
            let sum = &(&a + &b) + &c;
            assert!(rel(&sum, &(&f * &g)) <= 1e-10);
            assert!(rel(&a, &pc.para(&f, &g).unwrap()) < 1e-14);
            assert!(rel(&b, &pc.para_rev(&f, &g).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn para_with_constant_and_zero() {
        let (l, pc) = setup(6);
        let g = gaussian_field(&l, 4, Spectrum::White, 1.0);
        assert!(pc.para(&FourierField::zeros(&l), &g).unwrap().is_zero());
        let c = FourierField::constant(&l, 2.5);
        let got = pc.para(&c, &g).unwrap();
        let mut expect = FourierField::zeros(&l);
        for j in 1..=pc.partition().j_max() {
            expect += &pc.partition().block(&g, j).unwrap();
        }
        assert!(rel(&got, &expect.scale(2.5)) < 1e-12);
        assert!(pc.resonant(&g, &FourierField::zeros(&l)).unwrap().is_zero());
    }

    #[test]
    fn resonant_symmetry_and_psi() {
        let (l, pc) = setup(6);
        let f = gaussian_field(&l, 1, Spectrum::White, 1.0);
        let g = gaussian_field(&l, 2, Spectrum::White, 1.0);
        let a = pc.resonant(&f, &g).unwrap();
        let b = pc.resonant(&g, &f).unwrap();
        assert!(rel(&a, &b) < 1e-13);
        for k in [[1, 0, 0], [2, -3, 1], [6, 6, 6], [0, 4, 5]] {
            assert!((pc.psi_circ(k, [-k[0], -k[1], -k[2]]) - 1.0).abs() < 1e-12);
            let e = FourierField::plane_pair(&l, k, Complex64::new(0.5, 0.0)).unwrap();
            // cos·cos resonant has mean 1/2·ψ∘(k,-k)
            assert!((pc.resonant(&e, &e).unwrap().mean() - 0.5).abs() < 1e-12);
        }
        let big = DyadicPartition::new(8).unwrap();
        assert_eq!(psi_circ(&big, [1, 0, 0], [64, 0, 0]), 0.0);
        assert_eq!(
            psi_circ(&big, [3, 1, 0], [5, 2, 2]),
            psi_circ(&big, [-3, -1, 0], [-5, -2, -2])
        );
    }

    #[test]
    fn gradient_bony_identity() {
        let (l, pc) = setup(6);
        let f = gaussian_field(&l, 9, Spectrum::Shaped { alpha: 0.5 }, 1.0);
        let lhs = &pc.inner_resonant_grad(&f, &f).unwrap() + &pc.inner_para_grad(&f, &f).unwrap().scale(2.0);
        let mut sq = FourierField::zeros(&l);
        for d in f.gradient() {
            sq += &(&d * &d);
        }
        assert!(rel(&lhs, &sq) <= 1e-10);
        assert!(pc.inner_resonant_grad(&f, &FourierField::constant(&l, 1.0)).unwrap().is_zero());
    }

    #[test]
    fn inner_para_plane_waves() {
        let (l, pc) = setup(8);
        let p = *pc.partition();
        let (k, m) = ([1, 0, 0], [5, 2, 0]);
        let ek = FourierField::plane_pair(&l, k, Complex64::new(1.0, 0.0)).unwrap();
        let em = FourierField::plane_pair(&l, m, Complex64::new(1.0, 0.0)).unwrap();
        let got = pc.inner_para_grad(&ek, &em).unwrap();
        // weight of (k, m): Σ_j ρ_{<j-1}(k) ρ_j(m)
        let r = |v: Mode| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64).sqrt();
        let w = |a: Mode, b: Mode| -> f64 {
            (1..=p.j_max())
                .map(|j| (-1..=j - 2).map(|i| p.rho(i, r(a))).sum::<f64>() * p.rho(j, r(b)))
                .sum()
        };
        let dot = |a: Mode, b: Mode| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) as f64;
        let sum = [6, 2, 0];
        let diff = [-4, -2, 0];
        // e_k e_m, e_k e_{-m}, and conjugates
        let c_sum = -4.0 * PI * PI * dot(k, m) * w(k, m);
        let c_diff = -4.0 * PI * PI * dot(k, [-5, -2, 0]) * w(k, [-5, -2, 0]);
        assert!((got.coeff(sum).re - c_sum).abs() < 1e-9);
        assert!((got.coeff(diff).re - c_diff).abs() < 1e-9);
    }

    #[test]
    fn commutator_trivial_cases() {
        let (l, pc) = setup(4);
        let f = gaussian_field(&l, 1, Spectrum::White, 1.0);
        let g = gaussian_field(&l, 2, Spectrum::White, 1.0);
        let z = FourierField::zeros(&l);
        let c = pc.commutator(&f, &g, &z).unwrap();
        assert!(c.max_coeff() < 1e-12, "{}", c.max_coeff());
        assert!(pc.commutator(&z, &g, &f).unwrap().max_coeff() < 1e-10);
    }

    #[test]
    fn mismatch_is_error() {
        let (l, pc) = setup(2);
        let other = FourierField::zeros(&ModeLattice::new(3, 2).unwrap());
        assert!(pc.para(&FourierField::zeros(&l), &other).is_err());
    }
}
