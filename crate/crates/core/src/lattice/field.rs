use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{pairwise_sum, TorusLattice};
use crate::error::{Error, Result};
use crate::forms::{Coeff, Form, HermitianMetric};
use crate::geometry::{MetricJet, PointJet};
use crate::series::{JetSpace, Series, SeriesMatrix};

type M = DMatrix<Complex64>;

/// Complex scalar per site. The default value (no lattice, no data) is the
/// zero field and combines with any lattice.
#[derive(Clone, Debug, Default)]
pub struct ScalarField {
    lat: Option<Arc<TorusLattice>>,
    v: Vec<Complex64>,
}

impl ScalarField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_values(lat: &Arc<TorusLattice>, v: Vec<Complex64>) -> Self {
        assert_eq!(v.len(), lat.len());
        Self { lat: Some(lat.clone()), v }
    }

    pub fn constant(lat: &Arc<TorusLattice>, c: Complex64) -> Self {
        Self::from_values(lat, vec![c; lat.len()])
    }

    /// Samples `f` at the real coordinates of every site.
    pub fn from_fn(lat: &Arc<TorusLattice>, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let v = (0..lat.len()).into_par_iter().map(|s| f(&lat.coords(s))).collect();
        Self::from_values(lat, v)
    }

    pub fn lattice(&self) -> Option<&Arc<TorusLattice>> {
        self.lat.as_ref()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.v
    }

    pub fn at(&self, site: usize) -> Complex64 {
        self.v.get(site).copied().unwrap_or_default()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        Self { lat: self.lat.clone(), v: self.v.par_iter().map(|&x| f(x)).collect() }
    }

    fn lift(&self, lat: &Arc<TorusLattice>) -> Vec<Complex64> {
        if self.v.is_empty() {
            vec![Complex64::default(); lat.len()]
        } else {
            self.v.clone()
        }
    }

    pub fn zip(&self, o: &Self, f: impl Fn(Complex64, Complex64) -> Complex64 + Sync) -> Self {
        let lat = match (&self.lat, &o.lat) {
            (Some(a), Some(b)) => {
                assert!(Arc::ptr_eq(a, b) || a == b, "fields on different lattices");
                a.clone()
            }
            (Some(a), None) | (None, Some(a)) => a.clone(),
            (None, None) => return Self::from_scalar_zero(f),
        };
        let (a, b) = (self.lift(&lat), o.lift(&lat));
        Self { lat: Some(lat), v: a.par_iter().zip(b.par_iter()).map(|(&x, &y)| f(x, y)).collect() }
    }

    fn from_scalar_zero(f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(f(Complex64::default(), Complex64::default()), Complex64::default());
        Self::default()
    }

    fn derived(&self, op: impl Fn(&TorusLattice, &[Complex64]) -> Vec<Complex64>) -> Self {
        match &self.lat {
            Some(lat) if !self.v.is_empty() => Self { lat: Some(lat.clone()), v: op(lat, &self.v) },
            _ => Self::default(),
        }
    }

    /// `∂/∂x_axis`.
    pub fn diff(&self, axis: usize) -> Self {
        self.derived(|lat, v| lat.diff(v, axis))
    }

    /// `∂_a = ½(∂_{x^a} − i∂_{y^a})`.
    pub fn d(&self, a: usize) -> Self {
        let (x, y) = (self.diff(2 * a), self.diff(2 * a + 1));
        x.zip(&y, |p, q| 0.5 * (p - Complex64::i() * q))
    }

    /// `∂̄_a = ½(∂_{x^a} + i∂_{y^a})`.
    pub fn dbar(&self, a: usize) -> Self {
        let (x, y) = (self.diff(2 * a), self.diff(2 * a + 1));
        x.zip(&y, |p, q| 0.5 * (p + Complex64::i() * q))
    }

    /// `∂_a∂̄_b`; the diagonal uses the compact second-difference stencil.
    pub fn d_dbar(&self, a: usize, b: usize) -> Self {
        if a == b {
            let xx = self.derived(|lat, v| lat.diff2(v, 2 * a));
            let yy = self.derived(|lat, v| lat.diff2(v, 2 * a + 1));
            return xx.zip(&yy, |p, q| 0.25 * (p + q));
        }
        self.dbar(b).d(a)
    }

    /// `Δ f = g^{pq̄} ∂_p∂̄_q f` for the metric field `g`.
    pub fn chern_laplacian(&self, g: &MetricField) -> Self {
        let m = g.m();
        let ginv = g.inverses();
        let mut out = ScalarField::zero();
        for p in 0..m {
            for q in 0..m {
                let ddb = self.d_dbar(p, q);
                let w = ScalarField::from_values(g.lattice(), ginv.iter().map(|gi| gi[(p, q)]).collect());
                out = out.add_ref(&w.mul_ref(&ddb));
            }
        }
        out
    }

    /// `∫ f` over the unit torus (trapezoidal, pairwise summed).
    pub fn integrate(&self) -> Complex64 {
        if self.v.is_empty() {
            return Complex64::default();
        }
        pairwise_sum(&self.v) / self.v.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_re(&self) -> f64 {
        self.v.iter().map(|x| x.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.v.iter().map(|x| x.re).fold(f64::INFINITY, f64::min)
    }
}

impl Coeff for ScalarField {
    fn is_zero(&self) -> bool {
        self.v.iter().all(|x| x.re == 0.0 && x.im == 0.0)
    }
    fn add_ref(&self, o: &Self) -> Self {
        if o.v.is_empty() {
            return self.clone();
        }
        if self.v.is_empty() {
            return o.clone();
        }
        self.zip(o, |a, b| a + b)
    }
    fn mul_ref(&self, o: &Self) -> Self {
        if self.v.is_empty() || o.v.is_empty() {
            return Self::default();
        }
        self.zip(o, |a, b| a * b)
    }
    fn scale(&self, s: Complex64) -> Self {
        self.map(|x| x * s)
    }
    fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }
}

/// Hermitian metric per site; component `k*m + j` holds `g_{k̄j}`.
#[derive(Clone, Debug)]
pub struct MetricField {
    lat: Arc<TorusLattice>,
    comps: Vec<ScalarField>,
}

impl MetricField {
    /// Builds from per-site matrices, checking positivity at every site.
    pub fn from_sites(lat: &Arc<TorusLattice>, g: &[M]) -> Result<Self> {
        let m = lat.m();
        g.par_iter().try_for_each(|x| HermitianMetric::new(x.clone()).map(|_| ()))?;
        let comps = (0..m * m).map(|c| ScalarField::from_values(lat, g.iter().map(|x| x[(c / m, c % m)]).collect())).collect();
        Ok(Self { lat: lat.clone(), comps })
    }

    pub fn from_fn(lat: &Arc<TorusLattice>, f: impl Fn(&[f64]) -> M + Sync) -> Result<Self> {
        let g: Vec<M> = (0..lat.len()).into_par_iter().map(|s| f(&lat.coords(s))).collect();
        Self::from_sites(lat, &g)
    }

    pub fn flat(lat: &Arc<TorusLattice>) -> Self {
        Self::from_fn(lat, |_| M::identity(lat.m(), lat.m())).expect("identity is positive")
    }

    pub fn lattice(&self) -> &Arc<TorusLattice> {
        &self.lat
    }

    pub fn m(&self) -> usize {
        self.lat.m()
    }

    pub fn comp(&self, k: usize, j: usize) -> &ScalarField {
        &self.comps[k * self.m() + j]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn at(&self, site: usize) -> M {
        let m = self.m();
        M::from_fn(m, m, |k, j| self.comps[k * m + j].at(site))
    }

    pub fn sites(&self) -> Vec<M> {
        (0..self.lat.len()).into_par_iter().map(|s| self.at(s)).collect()
    }

    pub fn metric_at(&self, site: usize) -> Result<HermitianMetric> {
        HermitianMetric::new(self.at(site))
    }

    pub fn inverses(&self) -> Vec<M> {
        (0..self.lat.len())
            .into_par_iter()
            .map(|s| self.at(s).try_inverse().expect("positive metric is invertible"))
            .collect()
    }

    pub fn det(&self) -> ScalarField {
        let v = (0..self.lat.len()).into_par_iter().map(|s| Complex64::new(self.at(s).determinant().re, 0.0)).collect();
        ScalarField::from_values(&self.lat, v)
    }

    /// Smallest eigenvalue over all sites.
    pub fn min_eigenvalue(&self) -> f64 {
        let v: Vec<f64> = (0..self.lat.len()).into_par_iter().map(|s| min_eigenvalue(&self.at(s))).collect();
        v.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `η = i g_{k̄j} dz^j ∧ dz̄^k`.
    pub fn eta(&self) -> Form<ScalarField> {
        let m = self.m();
        Form::from_11(m, |k, j| self.comps[k * m + j].scale(Complex64::i()))
    }

    pub fn axpy(&self, s: f64, dir: &[ScalarField]) -> Self {
        let comps = self.comps.iter().zip(dir).map(|(a, b)| a.zip(b, |x, y| x + s * y)).collect();
        Self { lat: self.lat.clone(), comps }
    }

    pub fn sup_distance(&self, o: &Self) -> f64 {
        self.comps.iter().zip(&o.comps).map(|(a, b)| a.zip(b, |x, y| x - y).max_abs()).fold(0.0, f64::max)
    }

    /// `g`, `∂_a g` and `∂_a∂̄_b g` at every site. Second derivatives are
    /// composed first differences: they commute, so lattice-closed data has
    /// exactly vanishing torsion and `R̃ = Ric` to roundoff.
    pub fn point_jets(&self) -> Vec<PointJet> {
        let m = self.m();
        // Hermitian symmetry: only k ≤ j is differenced.
        let upper = |f: &dyn Fn(&ScalarField) -> ScalarField| -> Vec<Option<ScalarField>> {
            (0..m * m).map(|c| if c / m <= c % m { Some(f(&self.comps[c])) } else { None }).collect()
        };
        let d: Vec<Vec<Option<ScalarField>>> = (0..m).map(|a| upper(&|f| f.d(a))).collect();
        let db: Vec<Vec<Option<ScalarField>>> = (0..m).map(|a| upper(&|f| f.dbar(a))).collect();
        let dd: Vec<Vec<Option<ScalarField>>> = (0..m * m).map(|ab| upper(&|f| f.dbar(ab % m).d(ab / m))).collect();
        (0..self.lat.len())
            .into_par_iter()
            .map(|s| {
                // ∂_a g_{k̄j} for k > j is conj(∂̄_a g_{j̄k}); ∂_a∂̄_b g_{k̄j} = conj(∂_b∂̄_a g_{j̄k}).
                let dg = (0..m)
                    .map(|a| {
                        M::from_fn(m, m, |k, j| {
                            if k <= j {
                                d[a][k * m + j].as_ref().unwrap().at(s)
                            } else {
                                db[a][j * m + k].as_ref().unwrap().at(s).conj()
                            }
                        })
                    })
                    .collect();
                let ddbar = (0..m * m)
                    .map(|ab| {
                        let (a, b) = (ab / m, ab % m);
                        M::from_fn(m, m, |k, j| {
                            if k <= j {
                                dd[ab][k * m + j].as_ref().unwrap().at(s)
                            } else {
                                dd[b * m + a][j * m + k].as_ref().unwrap().at(s).conj()
                            }
                        })
                    })
                    .collect();
                PointJet { g: self.at(s), dg, ddbar }
            })
            .collect()
    }

    /// Taylor jets of the given order at every site; derivatives are
    /// compositions of the first-difference stencil.
    pub fn jets(&self, order: u8) -> Result<Vec<MetricJet>> {
        let m = self.m();
        let (space, coef) = taylor_fields(&self.comps, m, order, self.lat.n())?;
        (0..self.lat.len())
            .map(|s| {
                let entries = (0..m * m)
                    .map(|c| Series::from_coefficients(&space, coef.iter().map(|f| f[c].at(s)).collect()))
                    .collect();
                MetricJet::new(&space, SeriesMatrix::new(m, entries))
            })
            .collect()
    }
}

/// Taylor coefficient fields `∂^α f / α!` for every monomial of the jet
/// space, one row per monomial.
pub(crate) fn taylor_fields(
    fields: &[ScalarField],
    m: usize,
    order: u8,
    n: usize,
) -> Result<(Arc<JetSpace>, Vec<Vec<ScalarField>>)> {
    let need = 4 * order as usize + 1;
    if order > 1 && n < need {
        return Err(Error::StencilTooWide { need, have: n });
    }
    let space = JetSpace::new(m, order);
    let mut cache: HashMap<Vec<u8>, Vec<ScalarField>> = HashMap::new();
    cache.insert(vec![0; 2 * m], fields.to_vec());
    let mut out = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let e = space.exponents(i).to_vec();
        let fs = derivative_fields(&mut cache, &e, m);
        let weight: f64 = e.iter().map(|&k| crate::series::factorial(k as usize)).product();
        out.push(fs.iter().map(|f| f.scale(Complex64::new(1.0 / weight, 0.0))).collect());
    }
    Ok((space, out))
}

fn derivative_fields(cache: &mut HashMap<Vec<u8>, Vec<ScalarField>>, e: &[u8], m: usize) -> Vec<ScalarField> {
    if let Some(f) = cache.get(e) {
        return f.clone();
    }
    let var = e.iter().position(|&k| k > 0).expect("nonzero exponent");
    let mut parent = e.to_vec();
    parent[var] -= 1;
    let base = derivative_fields(cache, &parent, m);
    let out: Vec<ScalarField> = base.iter().map(|f| if var < m { f.d(var) } else { f.dbar(var - m) }).collect();
    cache.insert(e.to_vec(), out.clone());
    out
}

pub fn min_eigenvalue(g: &M) -> f64 {
    nalgebra::linalg::SymmetricEigen::new(g.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chern;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn stationary_point_and_laplacian_of_a_cosine() {
        let lat = TorusLattice::full(1, 16).unwrap();
        let g = MetricField::from_fn(&lat, |x| M::from_element(1, 1, c(1.0 + 0.1 * (2.0 * PI * x[0]).cos()))).unwrap();
        let pj = &g.point_jets()[0];
        assert!(pj.dg[0][(0, 0)].norm() < 1e-15);
        let exact = -0.1 * (2.0 * PI).powi(2) / 4.0;
        let err16 = (pj.ddbar[0][(0, 0)].re - exact).abs();
        let lat32 = TorusLattice::full(1, 32).unwrap();
        let g32 = MetricField::from_fn(&lat32, |x| M::from_element(1, 1, c(1.0 + 0.1 * (2.0 * PI * x[0]).cos()))).unwrap();
        let err32 = (g32.point_jets()[0].ddbar[0][(0, 0)].re - exact).abs();
        assert!(err16 < 3e-3);
        assert!((3.5..4.5).contains(&(err16 / err32).log2()));
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let lat = TorusLattice::reduced(2, 8, &[0, 1, 2]).unwrap();
        let g0 = HermitianMetric::random(2, 0.3, &mut rand::thread_rng());
        let g = MetricField::from_fn(&lat, |_| g0.g().clone()).unwrap();
        for pj in g.point_jets() {
            assert!(pj.dg.iter().chain(&pj.ddbar).all(|x| x.iter().all(|z| *z == Complex64::default())));
        }
    }

    fn trig_metric(lat: &Arc<TorusLattice>) -> MetricField {
        MetricField::from_fn(lat, |x| {
            let (a, b) = (2.0 * PI * x[0], 2.0 * PI * x[2]);
            let off = Complex64::new(0.1 * (a + b).sin(), 0.05 * a.cos());
            M::from_row_slice(2, 2, &[c(1.2 + 0.2 * a.cos()), off, off.conj(), c(0.9 + 0.1 * (a - b).sin())])
        })
        .unwrap()
    }

    #[test]
    fn point_jets_match_composed_jets() {
        let lat = TorusLattice::reduced(2, 16, &[0, 2]).unwrap();
        let g = trig_metric(&lat);
        let pjs = g.point_jets();
        let jets = g.jets(2).unwrap();
        let m = 2;
        for s in [0, 37, 200] {
            let jet = &jets[s];
            for a in 0..m {
                for k in 0..m {
                    for j in 0..m {
                        assert!((pjs[s].dg[a][(k, j)] - jet.g(k, j).d(a).value()).norm() < 1e-12);
                        for b in 0..m {
                            let comp = jet.g(k, j).d(a).dbar(b).value();
                            assert!((pjs[s].ddbar[a * m + b][(k, j)] - comp).norm() < 1e-2, "stencils differ beyond O(h⁴)");
                        }
                    }
                }
            }
        }
        let (_, tp, _) = pjs[37].packs().unwrap();
        let tp2 = Chern::new(&jets[37]).unwrap().torsion_pack();
        assert!(tp.t.distance(&tp2.t) < 1e-12);
    }

    #[test]
    fn integration_is_exact_on_trigonometric_polynomials() {
        let lat = TorusLattice::full(1, 8).unwrap();
        assert!((ScalarField::constant(&lat, c(1.0)).integrate() - c(1.0)).norm() < 1e-15);
        let f = ScalarField::from_fn(&lat, |x| c((2.0 * PI * x[0]).cos() * (6.0 * PI * x[1]).sin() + 0.25));
        assert!((f.integrate() - c(0.25)).norm() < 1e-15);
    }
}
