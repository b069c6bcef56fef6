//! Dense tensors with typed index slots, over numbers or Taylor series.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::forms::{Coeff, HermitianMetric};
use crate::series::Series;

/// Index type of one tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    /// Lower holomorphic `_j`.
    Hol,
    /// Lower antiholomorphic `_k̄`.
    Anti,
    /// Upper holomorphic `^p`.
    HolUp,
    /// Upper antiholomorphic `^q̄`.
    AntiUp,
}

impl Slot {
    pub fn conj(self) -> Slot {
        match self {
            Slot::Hol => Slot::Anti,
            Slot::Anti => Slot::Hol,
            Slot::HolUp => Slot::AntiUp,
            Slot::AntiUp => Slot::HolUp,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tensor<C = Complex64> {
    m: usize,
    slots: Vec<Slot>,
    data: Vec<C>,
}

impl<C: Coeff> Tensor<C> {
    pub fn zeros(m: usize, slots: &[Slot]) -> Self {
        let n = m.pow(slots.len() as u32);
        Self { m, slots: slots.to_vec(), data: vec![C::default(); n] }
    }

    pub fn from_fn(m: usize, slots: &[Slot], mut f: impl FnMut(&[usize]) -> C) -> Self {
        let mut t = Self::zeros(m, slots);
        let mut idx = vec![0usize; slots.len()];
        for i in 0..t.data.len() {
            t.unflatten(i, &mut idx);
            t.data[i] = f(&idx);
        }
        t
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        idx.iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub(crate) fn unflatten(&self, mut i: usize, idx: &mut [usize]) {
        for r in (0..idx.len()).rev() {
            idx[r] = i % self.m;
            i /= self.m;
        }
    }

    pub fn at(&self, idx: &[usize]) -> &C {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Tensor<D> {
        Tensor { m: self.m, slots: self.slots.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.slots, o.slots);
        Tensor { m: self.m, slots: self.slots.clone(), data: self.data.iter().zip(&o.data).map(|(a, b)| a.add_ref(b)).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c.scale(s))
    }

    /// Elementwise complex conjugate; slot types flip between holomorphic and antiholomorphic.
    pub fn conj(&self) -> Self {
        Tensor { m: self.m, slots: self.slots.iter().map(|s| s.conj()).collect(), data: self.data.iter().map(Coeff::conj).collect() }
    }
}

impl Tensor<Series> {
    pub fn value(&self) -> Tensor<Complex64> {
        self.map(|s| s.value())
    }

    /// Smallest valid order over the components (`None` if all exact).
    pub fn valid_order(&self) -> Option<u8> {
        self.data.iter().filter_map(|s| s.valid_order()).min()
    }
}

impl Tensor<Complex64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, o: &Self) -> f64 {
        assert_eq!(self.slots, o.slots);
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Applies `A` to slot `r`: `t'[…i…] = Σ_j A[i][j] t[…j…]`.
    fn transform_slot(&self, r: usize, a: &DMatrix<Complex64>) -> Self {
        let m = self.m;
        let stride = m.pow((self.rank() - r - 1) as u32);
        let mut out = vec![Complex64::default(); self.data.len()];
        for (o, v) in out.iter_mut().enumerate() {
            let i = (o / stride) % m;
            let base = o - i * stride;
            let mut s = Complex64::default();
            for j in 0..m {
                s += a[(i, j)] * self.data[base + j * stride];
            }
            *v = s;
        }
        Tensor { m, slots: self.slots.clone(), data: out }
    }

    /// Full metric norm `|t|²`: every slot contracted with `g` or `g⁻¹`.
    pub fn norm_sq(&self, g: &HermitianMetric) -> f64 {
        // g⁻¹ = L L^H and g = M M^H split each contraction into a unitary-frame sum.
        let l = Cholesky::new(g.inv().clone()).expect("inverse metric positive").l();
        let mm = Cholesky::new(g.g().clone()).expect("metric positive").l();
        let mut t = self.clone();
        for (r, slot) in self.slots.iter().enumerate() {
            let a = match slot {
                Slot::Hol => l.transpose(),
                Slot::Anti => l.adjoint(),
                Slot::HolUp => mm.adjoint(),
                Slot::AntiUp => mm.transpose(),
            };
            t = t.transform_slot(r, &a);
        }
        t.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norm_of_covector_matches_direct_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = HermitianMetric::random(3, 0.4, &mut rng);
        let v: Vec<Complex64> = (0..3).map(|i| Complex64::new(i as f64 + 1.0, 0.5 - i as f64)).collect();
        let t = Tensor::from_fn(3, &[Slot::Hol], |i| v[i[0]]);
        let mut direct = Complex64::default();
        for j in 0..3 {
            for k in 0..3 {
                direct += g.inv()[(j, k)] * v[j] * v[k].conj();
            }
        }
        assert!((t.norm_sq(&g) - direct.re).abs() < 1e-12);
        let tb = t.conj();
        assert!((tb.norm_sq(&g) - direct.re).abs() < 1e-12);
        let up = Tensor::from_fn(3, &[Slot::HolUp], |i| v[i[0]]);
        let mut direct_up = Complex64::default();
        for j in 0..3 {
            for k in 0..3 {
                direct_up += g.g()[(k, j)] * v[j] * v[k].conj();
            }
        }
        assert!((up.norm_sq(&g) - direct_up.re).abs() < 1e-12);
    }

    #[test]
    fn index_roundtrip() {
        let t = Tensor::<Complex64>::from_fn(3, &[Slot::Anti, Slot::Hol, Slot::Hol], |i| {
            Complex64::new((i[0] * 9 + i[1] * 3 + i[2]) as f64, 0.0)
        });
        assert_eq!(t.at(&[2, 1, 0]).re, 21.0);
    }
}
