//! Catalogue of the tensor identities behind the flow, each checked on seeded
//! random data with the two sides computed along independent code paths
//! (exterior algebra on forms against explicit component formulas).

mod algebraic;
mod anomaly;
mod curvature;

use std::cell::OnceCell;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::forms::{Form, HermitianMetric};
use crate::geometry::{Chern, MetricJet, Slot, Tensor};
use crate::series::Series;

/// Floor for the relative residual denominator.
pub const SCALE_FLOOR: f64 = 1e-30;

/// One identity evaluated on one sample.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub m: usize,
    pub seed: u64,
    pub residual_abs: f64,
    pub residual_rel: f64,
    pub scale: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Which random data an identity is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// Random order-3 jet around the identity.
    Generic,
    /// Conformally balanced order-2 jet for `Ω = dz¹∧…∧dzᵐ`.
    Balanced,
    /// Kähler order-2 jet.
    Kahler,
    /// A random metric and a random antisymmetric `T` (no derivatives).
    Algebraic,
}

/// A catalogue entry.
#[derive(Clone, Copy)]
pub struct Entry {
    pub key: &'static str,
    pub about: &'static str,
    pub population: Population,
    pub min_dim: usize,
    pub tol: f64,
    check: fn(&Sample) -> Result<Residual>,
}

impl std::fmt::Debug for Entry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Entry").field("key", &self.key).field("population", &self.population).finish()
    }
}

impl Entry {
    pub fn check(&self, sample: &Sample) -> Result<IdentityReport> {
        self.check_with_tol(sample, self.tol)
    }

    pub fn check_with_tol(&self, sample: &Sample, tol: f64) -> Result<IdentityReport> {
        let r = (self.check)(sample)?;
        let rel = r.relative();
        Ok(IdentityReport {
            id: self.key.to_string(),
            m: sample.m,
            seed: sample.seed,
            residual_abs: r.abs,
            residual_rel: rel,
            scale: r.scale,
            tol,
            passed: rel <= tol,
        })
    }
}

/// Running max-norm residual with the magnitude of the largest term seen.
#[derive(Clone, Copy, Debug, Default)]
pub struct Residual {
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.abs == 0.0 {
            0.0
        } else {
            self.abs / self.scale.max(SCALE_FLOOR)
        }
    }

    pub fn term(&mut self, x: Complex64) {
        self.scale = self.scale.max(x.norm());
    }

    pub fn terms(&mut self, xs: &[Complex64]) {
        xs.iter().for_each(|&x| self.term(x));
    }

    pub fn compare(&mut self, lhs: Complex64, rhs: Complex64) {
        self.abs = self.abs.max((lhs - rhs).norm());
        self.term(lhs);
        self.term(rhs);
    }

    pub fn forms(&mut self, lhs: &Form, rhs: &Form) {
        self.abs = self.abs.max(lhs.distance(rhs));
        self.scale = self.scale.max(lhs.max_abs()).max(rhs.max_abs());
    }

    pub fn matrices(&mut self, lhs: &DMatrix<Complex64>, rhs: &DMatrix<Complex64>) {
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            self.compare(*a, *b);
        }
    }

    pub fn form_scale(&mut self, f: &Form) {
        self.scale = self.scale.max(f.max_abs());
    }

    pub fn merge(&mut self, o: Residual) {
        self.abs = self.abs.max(o.abs);
        self.scale = self.scale.max(o.scale);
    }
}

/// Lazily built random data for one `(m, seed)`.
pub struct Sample {
    pub m: usize,
    pub seed: u64,
    generic: OnceCell<Chern>,
    balanced: OnceCell<Chern>,
    kahler: OnceCell<Chern>,
    algebraic: OnceCell<(HermitianMetric, Tensor)>,
    scalar: OnceCell<Series>,
}

impl Sample {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            seed,
            generic: OnceCell::new(),
            balanced: OnceCell::new(),
            kahler: OnceCell::new(),
            algebraic: OnceCell::new(),
            scalar: OnceCell::new(),
        }
    }

    /// Independent stream per `(m, population)`.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.m as u64 * 16 + stream);
        r
    }

    pub fn generic(&self) -> &Chern {
        self.generic.get_or_init(|| {
            let jet = MetricJet::random(self.m, 3, 0.1, &mut self.rng(0));
            Chern::new(&jet).expect("order-3 jet")
        })
    }

    pub fn balanced(&self) -> &Chern {
        self.balanced.get_or_init(|| {
            let mut rng = self.rng(1);
            let mut eps = 0.1;
            loop {
                let space = crate::series::JetSpace::new(self.m, 2);
                let h = crate::geometry::potential_hessian(self.m, 2, &mut rng, &space);
                if let Ok(jet) = MetricJet::balanced_from_hessian(&space, &h, eps) {
                    return Chern::new(&jet).expect("order-2 jet");
                }
                eps *= 0.5;
            }
        })
    }

    pub fn kahler(&self) -> &Chern {
        self.kahler.get_or_init(|| Chern::new(&MetricJet::kahler(self.m, 2, 0.1, &mut self.rng(2))).expect("order-2 jet"))
    }

    /// A random metric with a random antisymmetric `T_{k̄jm}`.
    pub fn algebraic(&self) -> &(HermitianMetric, Tensor) {
        self.algebraic.get_or_init(|| {
            let mut rng = self.rng(3);
            let g = HermitianMetric::random(self.m, 0.5, &mut rng);
            let m = self.m;
            let a: Vec<Complex64> = (0..m * m * m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let t = Tensor::from_fn(m, &[Slot::Anti, Slot::Hol, Slot::Hol], |i| a[(i[0] * m + i[1]) * m + i[2]] - a[(i[0] * m + i[2]) * m + i[1]]);
            (g, t)
        })
    }

    /// A real scalar series on the generic jet's space.
    pub fn scalar(&self) -> &Series {
        self.scalar.get_or_init(|| {
            let space = self.generic().jet.space().clone();
            let mut rng = self.rng(4);
            let coef = (0..space.len()).map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect();
            let p = Series::from_coefficients(&space, coef);
            (&p + &p.conj()).scale_re(0.5)
        })
    }

    /// A random series form of the given bidegree on the generic jet's space.
    pub fn series_form(&self, p: usize, q: usize, stream: u64) -> Form<Series> {
        let space = self.generic().jet.space().clone();
        let mut rng = self.rng(8 + stream);
        let mut out = Form::<Series>::zeros(self.m, p, q);
        let base = Form::<Complex64>::random(self.m, p, q, &mut rng);
        for (h, a, _) in base.iter() {
            let coef = (0..space.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            out.set_mask(h, a, Series::from_coefficients(&space, coef));
        }
        out
    }
}

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub(crate) fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `X_{k̄j} dz^j ∧ dz̄^k` from a `(k, j)` matrix.
pub(crate) fn form11(x: &DMatrix<Complex64>) -> Form {
    Form::from_11(x.nrows(), |k, j| x[(k, j)])
}

/// `η` of a jet as a series form.
pub(crate) fn eta_series(jet: &MetricJet) -> Form<Series> {
    Form::from_11(jet.dim(), |k, j| jet.g(k, j) * I)
}

pub(crate) fn torsion_series(ch: &Chern) -> Form<Series> {
    Form::from_21(ch.dim(), |k, j, l| ch.torsion.at(&[k, j, l]).clone())
}

/// `η^k` (the constant `1` for `k = 0`).
pub(crate) fn eta_power<C: crate::forms::Coeff + From<Complex64>>(eta: &Form<C>, k: usize) -> Form<C> {
    Form::scalar(eta.m(), C::from(c(1.0))).wedge_power(eta, k)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The full catalogue.
pub fn catalogue() -> Vec<Entry> {
    let mut v = Vec::new();
    v.extend(anomaly::entries());
    v.extend(curvature::entries());
    v.extend(algebraic::entries());
    v
}

pub fn find(key: &str) -> Option<Entry> {
    catalogue().into_iter().find(|e| e.key == key)
}

/// Options for a catalogue sweep.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub dims: Vec<usize>,
    pub seeds: u64,
    pub tol: Option<f64>,
    pub only: Option<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { dims: vec![2, 3, 4], seeds: 100, tol: None, only: None }
    }
}

/// Runs every selected entry on seeds `0..seeds` for every dimension.
/// Reports come back ordered by `(m, seed, catalogue position)` whatever the
/// thread count.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<IdentityReport>> {
    let entries: Vec<Entry> = catalogue().into_iter().filter(|e| opts.only.as_deref().map_or(true, |k| k == e.key)).collect();
    let jobs: Vec<(usize, u64)> = opts.dims.iter().flat_map(|&m| (0..opts.seeds).map(move |s| (m, s))).collect();
    let chunks: Vec<Result<Vec<IdentityReport>>> = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let sample = Sample::new(m, seed);
            entries
                .iter()
                .filter(|e| m >= e.min_dim)
                .map(|e| e.check_with_tol(&sample, opts.tol.unwrap_or(e.tol)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_unique() {
        let cat = catalogue();
        let mut keys: Vec<&str> = cat.iter().map(|e| e.key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), cat.len());
    }

    #[test]
    fn every_entry_passes_on_a_few_seeds() {
        let opts = SuiteOptions { seeds: 3, ..Default::default() };
        let failed: Vec<_> = run_suite(&opts).unwrap().into_iter().filter(|r| !r.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn forced_failure_with_tiny_tolerance() {
        let opts = SuiteOptions { dims: vec![3], seeds: 1, tol: Some(1e-30), only: Some("ddbar_eta".into()) };
        let r = run_suite(&opts).unwrap();
        assert_eq!(r.len(), 1);
        assert!(!r[0].passed);
    }

    #[test]
    fn sweep_is_deterministic() {
        let opts = SuiteOptions { dims: vec![3], seeds: 2, tol: None, only: Some("lambda3_tt".into()) };
        let a = run_suite(&opts).unwrap();
        let b = run_suite(&opts).unwrap();
        assert_eq!(a.iter().map(|r| r.residual_abs.to_bits()).collect::<Vec<_>>(), b.iter().map(|r| r.residual_abs.to_bits()).collect::<Vec<_>>());
    }
}
