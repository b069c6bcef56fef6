use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::forms::HermitianMetric;
use crate::series::{JetSpace, Series, SeriesMatrix};

/// Taylor jet of a Hermitian metric `g_{k̄j}` at a point: entry `(k, j)` of
/// the matrix is the series of `g_{k̄j}`.
#[derive(Clone, Debug)]
pub struct MetricJet {
    space: Arc<JetSpace>,
    g: SeriesMatrix,
    ginv: SeriesMatrix,
    value: HermitianMetric,
}

impl MetricJet {
    pub fn new(space: &Arc<JetSpace>, g: SeriesMatrix) -> Result<Self> {
        let m = g.n;
        if m != space.m() {
            return Err(Error::Dimension(m));
        }
        let g = g.map(|s| s.clone().or_constant(space));
        let value = HermitianMetric::new(g.value())?;
        // Hermitian symmetry as functions, not just at the point.
        let mut asym: f64 = 0.0;
        for k in 0..m {
            for j in 0..m {
                asym = asym.max((g.at(k, j) - &g.at(j, k).conj()).max_abs());
            }
        }
        let scale = g.e.iter().map(Series::max_abs).fold(1.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::NotHermitian(asym));
        }
        let ginv = g.inverse().ok_or(Error::NotInvertible)?;
        Ok(Self { space: space.clone(), g, ginv, value })
    }

    pub fn dim(&self) -> usize {
        self.g.n
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Number of exact derivative orders.
    pub fn order(&self) -> u8 {
        self.g.e.iter().filter_map(|s| s.valid_order()).min().unwrap_or(self.space.order())
    }

    pub fn require(&self, need: u8) -> Result<()> {
        if self.order() < need {
            Err(Error::InsufficientJetOrder { need, have: self.order() })
        } else {
            Ok(())
        }
    }

    /// `g_{k̄j}` series.
    pub fn g(&self, k: usize, j: usize) -> &Series {
        self.g.at(k, j)
    }

    /// `g^{j k̄}` series (`Σ_j g_{k̄j} g^{j l̄} = δ`).
    pub fn ginv(&self, j: usize, k: usize) -> &Series {
        self.ginv.at(j, k)
    }

    pub fn matrix(&self) -> &SeriesMatrix {
        &self.g
    }

    pub fn metric(&self) -> &HermitianMetric {
        &self.value
    }

    /// `log det g` as a series.
    pub fn log_det(&self) -> Series {
        self.g.det().ln()
    }

    pub fn flat(m: usize, order: u8) -> Self {
        let space = JetSpace::new(m, order);
        let g = SeriesMatrix::identity(m).map(|s| s.clone().or_constant(&space));
        Self::new(&space, g).expect("flat jet")
    }

    /// Constant metric `G` with no variation.
    pub fn constant(g: &HermitianMetric, order: u8) -> Self {
        let m = g.dim();
        let space = JetSpace::new(m, order);
        let e = (0..m * m).map(|i| Series::constant(g.g()[(i / m, i % m)]).or_constant(&space)).collect();
        Self::new(&space, SeriesMatrix::new(m, e)).expect("constant jet")
    }

    /// `I + amp·(A + A^†)` with every Taylor coefficient of `A` of degree
    /// `1..=order` uniform in the unit square.
    pub fn random(m: usize, order: u8, amp: f64, rng: &mut impl Rng) -> Self {
        let space = JetSpace::new(m, order);
        let a: Vec<Series> = (0..m * m)
            .map(|_| {
                let coef = (0..space.len())
                    .map(|i| {
                        if space.degree(i) == 0 {
                            Complex64::default()
                        } else {
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        }
                    })
                    .collect();
                Series::from_coefficients(&space, coef)
            })
            .collect();
        let e = (0..m * m)
            .map(|i| {
                let (k, j) = (i / m, i % m);
                let herm = &a[k * m + j] + &a[j * m + k].conj();
                let base = if k == j { 1.0 } else { 0.0 };
                (Series::real(base) + herm.scale_re(amp)).or_constant(&space)
            })
            .collect();
        Self::new(&space, SeriesMatrix::new(m, e)).expect("random jet is positive for small amplitude")
    }

    /// `g = I + amp·∂∂̄φ` for a random real polynomial potential `φ`.
    pub fn kahler(m: usize, order: u8, amp: f64, rng: &mut impl Rng) -> Self {
        let space = JetSpace::new(m, order);
        let h = potential_hessian(m, order, rng, &space);
        let e = (0..m * m)
            .map(|i| {
                let base = if i / m == i % m { 1.0 } else { 0.0 };
                (Series::real(base) + h.e[i].scale_re(amp)).or_constant(&space)
            })
            .collect();
        Self::new(&space, SeriesMatrix::new(m, e)).expect("kahler jet positive")
    }

    /// Conformally balanced jet (for `Ω = dz¹∧…∧dzᵐ`): the root of the closed
    /// form `η₀^{m-1}` with `η₀^{m-1}/(m-1)!` dual to `I + ε(tr H − H)`,
    /// `H = ∂∂̄φ`, followed by the conformal fix `η = η₀ / det g₀`.
    pub fn balanced(m: usize, order: u8, eps: f64, rng: &mut impl Rng) -> Self {
        let space = JetSpace::new(m, order);
        let h = potential_hessian(m, order, rng, &space);
        Self::balanced_from_hessian(&space, &h, eps).expect("balanced jet positive")
    }

    /// The balanced root for a given Hessian `H_{k̄j} = ∂_j∂̄_kφ`.
    pub fn balanced_from_hessian(space: &Arc<JetSpace>, h: &SeriesMatrix, eps: f64) -> Result<Self> {
        let m = h.n;
        let tr = (0..m).fold(Series::zero(), |acc, i| acc + h.at(i, i).clone());
        let e = (0..m * m)
            .map(|i| {
                let (k, j) = (i / m, i % m);
                let diag = if k == j { Series::real(1.0) + tr.scale_re(eps) } else { Series::zero() };
                (diag - h.at(k, j).scale_re(eps)).or_constant(space)
            })
            .collect();
        let mm = SeriesMatrix::new(m, e);
        let g0 = balanced_root(&mm)?;
        let u = g0.det().recip();
        let g = g0.map(|s| s * &u);
        Self::new(space, g)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self::new(&self.space, self.g.map(|s| s.scale_re(lambda))).expect("positive rescaling")
    }

    /// `e^f g` for a real scalar series `f`.
    pub fn conformal(&self, f: &Series) -> Result<Self> {
        let ef = f.exp();
        Self::new(&self.space, self.g.map(|s| s * &ef))
    }

    /// `φ·g` for a positive scalar series.
    pub fn times(&self, phi: &Series) -> Result<Self> {
        Self::new(&self.space, self.g.map(|s| s * phi))
    }
}

/// `g₀` with `det(g₀) g₀⁻¹ = M`: `g₀ = (det M)^{1/(m-1)} M⁻¹`.
pub(crate) fn balanced_root(mm: &SeriesMatrix) -> Result<SeriesMatrix> {
    let m = mm.n;
    let minv = mm.inverse().ok_or(Error::NotInvertible)?;
    if m == 1 {
        return Err(Error::Dimension(1));
    }
    let d = mm.det();
    if d.value().re <= 0.0 {
        return Err(Error::NotPositive);
    }
    let s = d.powf(1.0 / (m as f64 - 1.0));
    Ok(minv.map(|x| x * &s))
}

/// `H_{k̄j} = ∂_j ∂̄_k φ` for a random real polynomial `φ` of degree `2..=order+2`.
pub fn potential_hessian(m: usize, order: u8, rng: &mut impl Rng, space: &Arc<JetSpace>) -> SeriesMatrix {
    let big = JetSpace::new(m, order + 2);
    let coef = (0..big.len())
        .map(|i| {
            if big.degree(i) < 2 {
                Complex64::default()
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }
        })
        .collect();
    let p = Series::from_coefficients(&big, coef);
    let phi = (&p + &p.conj()).scale_re(0.5);
    let e = (0..m * m).map(|i| phi.d(i % m).dbar(i / m).restrict(space)).collect();
    SeriesMatrix::new(m, e)
}

trait OrConstant {
    fn or_constant(self, space: &Arc<JetSpace>) -> Series;
}

impl OrConstant for Series {
    /// Lifts a space-less constant into `space` so every entry reports its order.
    fn or_constant(self, space: &Arc<JetSpace>) -> Series {
        if self.space().is_some() {
            return self;
        }
        let mut coef = vec![Complex64::default(); space.len()];
        coef[0] = self.value();
        Series::from_coefficients(space, coef)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_hermitian_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 2..=4 {
            let j = MetricJet::random(m, 3, 0.1, &mut rng);
            assert_eq!(j.order(), 3);
            let k = MetricJet::kahler(m, 3, 0.1, &mut rng);
            assert_eq!(k.order(), 3);
            let b = MetricJet::balanced(m, 3, 0.05, &mut rng);
            assert_eq!(b.order(), 3);
        }
    }

    #[test]
    fn inverse_series_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = MetricJet::random(3, 3, 0.1, &mut rng);
        let prod = j.matrix().matmul(&SeriesMatrix::new(3, (0..9).map(|i| j.ginv(i / 3, i % 3).clone()).collect()));
        for i in 0..3 {
            for k in 0..3 {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((prod.at(i, k) - &Series::real(want)).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn flat_jet_has_declared_order() {
        assert_eq!(MetricJet::flat(2, 2).order(), 2);
    }
}
