//! Pointwise exterior algebra of `(p,q)`-forms on `C^m`.
//!
//! A form is stored on the canonical basis `dz^I ∧ dz̄^J` with `I`, `J`
//! increasing index sets encoded as bitmasks. The coefficient of that basis
//! element equals the antisymmetric tensor component `c_{I,J}` in the
//! expansion `Φ = 1/(p! q!) Σ c_{i₁…i_p, j₁…j_q} dz^{i₁}∧…∧dz^{i_p}∧dz̄^{j₁}∧…∧dz̄^{j_q}`.
//!
//! Interleaved tensor components are available through the
//! `interleaved_*`/`from_*` helpers:
//!
//! * `(1,1)`: `X_{k̄j}` with `X = X_{k̄j} dz^j∧dz̄^k`, so `η_{k̄j} = i g_{k̄j}`;
//! * `(2,1)`: `T_{k̄jm}` with `T = ½ T_{k̄jm} dz^m∧dz^j∧dz̄^k`;
//! * `(p,p)`: `Φ_{j̄₁k₁…j̄_pk_p}` with the `1/(p!)²` interleaved expansion,
//!   equal to `(-1)^{p(p-1)/2} c_{k₁…k_p, j₁…j_p}`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{factorial, Series};

pub const MAX_DIM: usize = 6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Complex dimension `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(m: usize) -> Result<Self> {
        if (1..=MAX_DIM).contains(&m) {
            Ok(Self(m))
        } else {
            Err(Error::Dimension(m))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Coefficient ring for forms: plain numbers or Taylor series.
pub trait Coeff: Clone + Default {
    fn is_zero(&self) -> bool;
    fn add_ref(&self, o: &Self) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn scale(&self, s: Complex64) -> Self;
    fn conj(&self) -> Self;
}

impl Coeff for Complex64 {
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: Complex64) -> Self {
        self * s
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
}

impl Coeff for Series {
    fn is_zero(&self) -> bool {
        Series::is_zero(self)
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: Complex64) -> Self {
        Series::scale(self, s)
    }
    fn conj(&self) -> Self {
        Series::conj(self)
    }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Colex rank of a bitmask among masks of the same popcount.
fn mask_rank(mask: u32) -> usize {
    let mut r = 0;
    let mut k = 0;
    let mut bits = mask;
    while bits != 0 {
        let c = bits.trailing_zeros() as usize;
        k += 1;
        r += binom(c, k);
        bits &= bits - 1;
    }
    r
}

/// All masks of `k` bits among `m`, in rank order.
pub fn masks(m: usize, k: usize) -> Vec<u32> {
    (0u32..(1u32 << m)).filter(|x| x.count_ones() as usize == k).collect()
}

/// `k`-th compound matrix: `k×k` minors indexed by masks in rank order.
/// Multiplicative, so the compound of an inverse is the inverse compound.
pub fn compound_matrix(a: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let ms = masks(a.nrows(), k);
    let idx: Vec<Vec<usize>> = ms.iter().map(|&x| bits_of(x).collect()).collect();
    DMatrix::from_fn(ms.len(), ms.len(), |r, c| {
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        DMatrix::from_fn(k, k, |i, j| a[(idx[r][i], idx[c][j])]).determinant()
    })
}

pub(crate) fn bits_of(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

/// `(-1)^{#pairs (x ∈ a, y ∈ b) with y < x}`: sign of sorting `a` followed by `b`.
pub(crate) fn shuffle_sign(a: u32, b: u32) -> f64 {
    let mut n = 0;
    for x in bits_of(a) {
        n += (b & ((1u32 << x) - 1)).count_ones();
    }
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of the permutation sorting `idx`, with its mask; `None` on repeats.
fn sort_sign(idx: &[usize]) -> Option<(f64, u32)> {
    let mut mask = 0u32;
    let mut inv = 0;
    for (i, &a) in idx.iter().enumerate() {
        if mask >> a & 1 == 1 {
            return None;
        }
        mask |= 1 << a;
        inv += idx[i + 1..].iter().filter(|&&b| b < a).count();
    }
    Some((if inv % 2 == 0 { 1.0 } else { -1.0 }, mask))
}

/// A `(p,q)`-form at a point of `C^m` with coefficients in `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<C = Complex64> {
    m: usize,
    p: usize,
    q: usize,
    coef: Vec<C>,
}

impl<C: Coeff> Form<C> {
    pub fn zeros(m: usize, p: usize, q: usize) -> Self {
        let n = binom(m, p) * binom(m, q);
        Self { m, p, q, coef: vec![C::default(); n] }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    fn slot(&self, h: u32, a: u32) -> usize {
        mask_rank(h) * binom(self.m, self.q) + mask_rank(a)
    }

    /// Coefficient of the canonical basis element `dz^h ∧ dz̄^a`.
    pub fn get_mask(&self, h: u32, a: u32) -> C {
        self.coef[self.slot(h, a)].clone()
    }

    pub fn set_mask(&mut self, h: u32, a: u32, v: C) {
        let s = self.slot(h, a);
        self.coef[s] = v;
    }

    fn add_mask(&mut self, h: u32, a: u32, v: &C) {
        let s = self.slot(h, a);
        self.coef[s] = self.coef[s].add_ref(v);
    }

    /// Antisymmetric component for arbitrary index tuples.
    pub fn get(&self, holo: &[usize], anti: &[usize]) -> C {
        debug_assert_eq!((holo.len(), anti.len()), (self.p, self.q));
        match (sort_sign(holo), sort_sign(anti)) {
            (Some((s1, h)), Some((s2, a))) => self.get_mask(h, a).scale(Complex64::new(s1 * s2, 0.0)),
            _ => C::default(),
        }
    }

    /// Writes a component; all permutations of the tuples follow by antisymmetry.
    pub fn set(&mut self, holo: &[usize], anti: &[usize], v: C) {
        if let (Some((s1, h)), Some((s2, a))) = (sort_sign(holo), sort_sign(anti)) {
            self.set_mask(h, a, v.scale(Complex64::new(s1 * s2, 0.0)));
        }
    }

    /// Adds `v · dz^{holo} ∧ dz̄^{anti}` (one basis product, in the given order).
    pub fn accumulate(&mut self, holo: &[usize], anti: &[usize], v: &C) {
        if let (Some((s1, h)), Some((s2, a))) = (sort_sign(holo), sort_sign(anti)) {
            self.add_mask(h, a, &v.scale(Complex64::new(s1 * s2, 0.0)));
        }
    }

    /// Coefficients in canonical order: holomorphic mask rank major.
    pub fn coefficients(&self) -> &[C] {
        &self.coef
    }

    pub fn from_coefficients(m: usize, p: usize, q: usize, coef: Vec<C>) -> Self {
        assert_eq!(coef.len(), binom(m, p) * binom(m, q), "coefficient count for ({p},{q}) at m={m}");
        Self { m, p, q, coef }
    }

    /// `Σ_a dz^a ∧ D_a Φ` for a coefficient derivative `D_a = d(·, a)`.
    pub fn del_with(&self, d: impl Fn(&C, usize) -> C) -> Form<C> {
        let mut out = Form::zeros(self.m, self.p + 1, self.q);
        if self.p == self.m {
            return out;
        }
        for (h, a, c) in self.iter() {
            if c.is_zero() {
                continue;
            }
            for x in 0..self.m {
                if h >> x & 1 == 1 {
                    continue;
                }
                let s = shuffle_sign(1 << x, h);
                out.add_mask(h | 1 << x, a, &d(c, x).scale(Complex64::new(s, 0.0)));
            }
        }
        out
    }

    /// `Σ_a dz̄^a ∧ D̄_a Φ`.
    pub fn delbar_with(&self, d: impl Fn(&C, usize) -> C) -> Form<C> {
        let mut out = Form::zeros(self.m, self.p, self.q + 1);
        if self.q == self.m {
            return out;
        }
        let pass = if self.p % 2 == 0 { 1.0 } else { -1.0 };
        for (h, a, c) in self.iter() {
            if c.is_zero() {
                continue;
            }
            for x in 0..self.m {
                if a >> x & 1 == 1 {
                    continue;
                }
                let s = pass * shuffle_sign(1 << x, a);
                out.add_mask(h, a | 1 << x, &d(c, x).scale(Complex64::new(s, 0.0)));
            }
        }
        out
    }

    /// Iterates `(holo mask, anti mask, coefficient)` over the canonical basis.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &C)> + '_ {
        let hs = masks(self.m, self.p);
        let as_ = masks(self.m, self.q);
        let nq = as_.len();
        self.coef.iter().enumerate().map(move |(i, c)| (hs[i / nq], as_[i % nq], c))
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Form<D> {
        Form { m: self.m, p: self.p, q: self.q, coef: self.coef.iter().map(f).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add_form(&self, o: &Self) -> Self {
        assert_eq!((self.m, self.p, self.q), (o.m, o.p, o.q), "bidegree mismatch in form sum");
        let coef = self.coef.iter().zip(&o.coef).map(|(a, b)| a.add_ref(b)).collect();
        Self { m: self.m, p: self.p, q: self.q, coef }
    }

    pub fn sub_form(&self, o: &Self) -> Self {
        self.add_form(&o.scale_re(-1.0))
    }

    /// Wedge product. Degree overflow gives the zero form of the formal bidegree.
    pub fn wedge(&self, o: &Self) -> Self {
        assert_eq!(self.m, o.m);
        let (p, q) = (self.p + o.p, self.q + o.q);
        if p > self.m || q > self.m {
            return Form { m: self.m, p, q, coef: Vec::new() };
        }
        let mut out = Form::zeros(self.m, p, q);
        let reorder = if (self.q * o.p) % 2 == 0 { 1.0 } else { -1.0 };
        for (h1, a1, x) in self.iter() {
            if x.is_zero() {
                continue;
            }
            for (h2, a2, y) in o.iter() {
                if h1 & h2 != 0 || a1 & a2 != 0 || y.is_zero() {
                    continue;
                }
                let s = reorder * shuffle_sign(h1, h2) * shuffle_sign(a1, a2);
                out.add_mask(h1 | h2, a1 | a2, &x.mul_ref(y).scale(Complex64::new(s, 0.0)));
            }
        }
        out
    }

    /// `self ∧ other^k`.
    pub fn wedge_power(&self, other: &Self, k: usize) -> Self {
        (0..k).fold(self.clone(), |acc, _| acc.wedge(other))
    }

    /// Complex conjugate, of bidegree `(q,p)`.
    pub fn conj(&self) -> Self {
        let mut out = Form::zeros(self.m, self.q, self.p);
        if self.coef.is_empty() {
            out.coef.clear();
            return out;
        }
        let s = if (self.p * self.q) % 2 == 0 { 1.0 } else { -1.0 };
        for (h, a, c) in self.iter() {
            out.set_mask(a, h, c.conj().scale(Complex64::new(s, 0.0)));
        }
        out
    }

    /// Whether the form is identically zero (including overflowed products).
    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(Coeff::is_zero)
    }

    /// The one-form `dz^a` (or `dz̄^a`).
    pub fn basis_one(m: usize, a: usize, anti: bool) -> Self
    where
        C: From<Complex64>,
    {
        let mut f = if anti { Form::zeros(m, 0, 1) } else { Form::zeros(m, 1, 0) };
        let one = C::from(Complex64::new(1.0, 0.0));
        if anti {
            f.set_mask(0, 1 << a, one);
        } else {
            f.set_mask(1 << a, 0, one);
        }
        f
    }

    /// Constant 0-form.
    pub fn scalar(m: usize, v: C) -> Self {
        let mut f = Form::zeros(m, 0, 0);
        f.set_mask(0, 0, v);
        f
    }

    /// `(1,1)`-form from `X_{k̄j}` with `X = X_{k̄j} dz^j ∧ dz̄^k`.
    pub fn from_11(m: usize, x: impl Fn(usize, usize) -> C) -> Self {
        let mut f = Form::zeros(m, 1, 1);
        for j in 0..m {
            for k in 0..m {
                f.set_mask(1 << j, 1 << k, x(k, j));
            }
        }
        f
    }

    /// `X_{k̄j}` of a `(1,1)`-form.
    pub fn c11(&self, k: usize, j: usize) -> C {
        self.get_mask(1 << j, 1 << k)
    }

    /// `(1,0)`-form `v_a dz^a`.
    pub fn from_10(m: usize, v: impl Fn(usize) -> C) -> Self {
        let mut f = Form::zeros(m, 1, 0);
        for a in 0..m {
            f.set_mask(1 << a, 0, v(a));
        }
        f
    }

    /// `(2,1)`-form from `T_{k̄jm}` (antisymmetric in `j, m`), with
    /// `T = ½ T_{k̄jm} dz^m ∧ dz^j ∧ dz̄^k`.
    pub fn from_21(m: usize, t: impl Fn(usize, usize, usize) -> C) -> Self {
        let mut f = Form::zeros(m, 2, 1);
        for k in 0..m {
            for j in 0..m {
                for l in (j + 1)..m {
                    // c_{(l,j),k} = T_{k̄jl}  ⇒  c_{(j,l),k} = -T_{k̄jl}
                    f.set_mask((1 << j) | (1 << l), 1 << k, t(k, j, l).scale(Complex64::new(-1.0, 0.0)));
                }
            }
        }
        f
    }

    /// `T_{k̄jm}` of a `(2,1)`-form.
    pub fn c21(&self, k: usize, j: usize, l: usize) -> C {
        self.get(&[l, j], &[k])
    }

    /// `(2,0)`-form from `β_{lp}` with `β = ½ β_{lp} dz^p ∧ dz^l`.
    pub fn from_20(m: usize, b: impl Fn(usize, usize) -> C) -> Self {
        let mut f = Form::zeros(m, 2, 0);
        for l in 0..m {
            for p in (l + 1)..m {
                f.set_mask((1 << l) | (1 << p), 0, b(l, p).scale(Complex64::new(-1.0, 0.0)));
            }
        }
        f
    }

    /// `β_{lp}` of a `(2,0)`-form.
    pub fn c20(&self, l: usize, p: usize) -> C {
        self.get(&[p, l], &[])
    }

    /// Interleaved `(p,p)` component `Φ_{j̄₁k₁…j̄_pk_p}` from `(j̄_r, k_r)` pairs.
    pub fn interleaved_pp(&self, pairs: &[(usize, usize)]) -> C {
        assert_eq!(self.p, self.q);
        let ks: Vec<usize> = pairs.iter().map(|x| x.1).collect();
        let js: Vec<usize> = pairs.iter().map(|x| x.0).collect();
        let s = if (self.p * (self.p.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        self.get(&ks, &js).scale(Complex64::new(s, 0.0))
    }

    /// Sets an interleaved `(p,p)` component (and its antisymmetric images).
    pub fn set_interleaved_pp(&mut self, pairs: &[(usize, usize)], v: C) {
        let ks: Vec<usize> = pairs.iter().map(|x| x.1).collect();
        let js: Vec<usize> = pairs.iter().map(|x| x.0).collect();
        let s = if (self.p * (self.p.saturating_sub(1)) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        self.set(&ks, &js, v.scale(Complex64::new(s, 0.0)));
    }
}

impl Form<Series> {
    /// Value at the base point.
    pub fn value(&self) -> Form<Complex64> {
        self.map(|s| s.value())
    }

    /// `∂Φ = Σ_a dz^a ∧ ∂_a Φ`.
    pub fn del(&self) -> Form<Series> {
        self.del_with(|c, x| c.d(x))
    }

    /// `∂̄Φ = Σ_a dz̄^a ∧ ∂̄_a Φ`.
    pub fn delbar(&self) -> Form<Series> {
        self.delbar_with(|c, x| c.dbar(x))
    }
}

impl From<Complex64> for Series {
    fn from(v: Complex64) -> Self {
        Series::constant(v)
    }
}

impl Form<Complex64> {
    /// The Kähler-type form `η = i g_{k̄j} dz^j ∧ dz̄^k` of a metric.
    pub fn eta(g: &HermitianMetric) -> Self {
        Form::from_11(g.dim(), |k, j| I * g.g()[(k, j)])
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance between two forms of the same bidegree.
    pub fn distance(&self, o: &Self) -> f64 {
        assert_eq!((self.p, self.q), (o.p, o.q));
        if self.coef.is_empty() || o.coef.is_empty() {
            return self.max_abs().max(o.max_abs());
        }
        self.coef.iter().zip(&o.coef).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Value of a `(0,0)`-form.
    pub fn scalar_value(&self) -> Complex64 {
        assert_eq!((self.p, self.q), (0, 0));
        self.coef.first().copied().unwrap_or_default()
    }

    /// Distance from being real (`Φ = Φ̄`), for `p = q`.
    pub fn imaginary_part_max(&self) -> f64 {
        assert_eq!(self.p, self.q);
        self.distance(&self.conj()) / 2.0
    }

    /// Random form with coefficients uniform in the unit square.
    pub fn random(m: usize, p: usize, q: usize, rng: &mut impl rand::Rng) -> Self {
        let mut f = Form::zeros(m, p, q);
        for c in f.coef.iter_mut() {
            *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    /// Random real `(p,p)`-form.
    pub fn random_real(m: usize, p: usize, rng: &mut impl rand::Rng) -> Self {
        let f = Form::random(m, p, p, rng);
        f.add_form(&f.conj()).scale_re(0.5)
    }
}

/// Hermitian positive-definite matrix `g_{k̄j}` (row `k̄`, column `j`).
#[derive(Clone, Debug)]
pub struct HermitianMetric {
    g: DMatrix<Complex64>,
    inv: DMatrix<Complex64>,
    det: f64,
}

impl HermitianMetric {
    pub fn new(g: DMatrix<Complex64>) -> Result<Self> {
        let m = g.nrows();
        Dimension::new(m)?;
        let scale = g.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let asym = (&g - g.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::NotHermitian(asym));
        }
        let g = (&g + g.adjoint()).scale(0.5);
        let eig = g.clone().symmetric_eigenvalues();
        if eig.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
            return Err(Error::NotPositive);
        }
        let det = eig.iter().product();
        let inv = Cholesky::new(g.clone()).ok_or(Error::NotPositive)?.inverse();
        Ok(Self { g, inv, det })
    }

    pub fn identity(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m)).expect("identity metric")
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `g_{k̄j}` at `(k, j)`.
    pub fn g(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    /// `g^{j k̄}` at `(j, k)`: `g_{k̄j} g^{j l̄} = δ_k^l`.
    pub fn inv(&self) -> &DMatrix<Complex64> {
        &self.inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.g.scale(s)).expect("positive rescaling")
    }

    /// `I + amp·(A A^H)` with `A` uniform; always positive.
    pub fn random(m: usize, amp: f64, rng: &mut impl rand::Rng) -> Self {
        let a = DMatrix::from_fn(m, m, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        Self::new(DMatrix::identity(m, m) + (&a * a.adjoint()).scale(amp)).expect("random metric positive")
    }

    /// Contraction operator `Λ` (adjoint of `η ∧ ·`): lowers `(p,q)` to `(p-1,q-1)`.
    pub fn lambda(&self, phi: &Form) -> Result<Form> {
        let (p, q) = phi.bidegree();
        if p == 0 || q == 0 {
            return Err(Error::ContractionExceedsDegree { q: 1, p, p_bar: q });
        }
        let m = phi.m();
        let mut out = Form::zeros(m, p - 1, q - 1);
        let pref = if p % 2 == 1 { -I } else { I };
        for (h, a, c) in phi.iter() {
            if c.is_zero() {
                continue;
            }
            for x in bits_of(h) {
                let rest_h = h & !(1 << x);
                let sx = shuffle_sign(1 << x, rest_h);
                for y in bits_of(a) {
                    let rest_a = a & !(1 << y);
                    let sy = shuffle_sign(1 << y, rest_a);
                    out.add_mask(rest_h, rest_a, &(pref * self.inv[(x, y)] * sx * sy * c));
                }
            }
        }
        Ok(out)
    }

    /// `Λ^q`.
    pub fn lambda_pow(&self, phi: &Form, q: usize) -> Result<Form> {
        let (p, pb) = phi.bidegree();
        if q > p.min(pb) {
            return Err(Error::ContractionExceedsDegree { q, p, p_bar: pb });
        }
        (0..q).try_fold(phi.clone(), |acc, _| self.lambda(&acc))
    }

    fn minor_dets(&self, k: usize, transpose: bool) -> (Vec<u32>, Vec<Complex64>) {
        let ms = masks(self.dim(), k);
        let n = ms.len();
        let mut out = vec![Complex64::default(); n * n];
        for (r, &a) in ms.iter().enumerate() {
            for (c, &b) in ms.iter().enumerate() {
                let rows: Vec<usize> = bits_of(a).collect();
                let cols: Vec<usize> = bits_of(b).collect();
                let sub = DMatrix::from_fn(k, k, |i, j| {
                    if transpose {
                        self.inv[(cols[j], rows[i])]
                    } else {
                        self.inv[(rows[i], cols[j])]
                    }
                });
                out[r * n + c] = if k == 0 { Complex64::new(1.0, 0.0) } else { sub.determinant() };
            }
        }
        (ms, out)
    }

    /// Hermitian pointwise inner product `⟨α, β⟩` (linear in `α`), normalized so
    /// that `⟨dz^a, dz^b⟩ = g^{a b̄}` and basis products have unit weight.
    pub fn inner(&self, a: &Form, b: &Form) -> Complex64 {
        assert_eq!(a.bidegree(), b.bidegree());
        let (p, q) = a.bidegree();
        if a.coef.is_empty() || b.coef.is_empty() {
            return Complex64::default();
        }
        let (_, hol) = self.minor_dets(p, false);
        let (_, ant) = self.minor_dets(q, true);
        let nh = binom(self.dim(), p);
        let nq = binom(self.dim(), q);
        let mut s = Complex64::default();
        for i in 0..a.coef.len() {
            let x = a.coef[i];
            if x.is_zero() {
                continue;
            }
            let (hi, ai) = (i / nq, i % nq);
            for j in 0..b.coef.len() {
                let y = b.coef[j];
                if y.is_zero() {
                    continue;
                }
                let (hj, aj) = (j / nq, j % nq);
                s += x * y.conj() * hol[hi * nh + hj] * ant[ai * nq + aj];
            }
        }
        s
    }

    /// Full tensor norm `Σ |Φ_{…}|²` over all index tuples with the metric,
    /// i.e. `p! q! ⟨Φ, Φ⟩`. This is the norm behind `|T|²` and `|τ|²`.
    pub fn inner_norm(&self, phi: &Form) -> f64 {
        let (p, q) = phi.bidegree();
        factorial(p) * factorial(q) * self.inner(phi, phi).re
    }

    /// `η^m / m!`.
    pub fn volume_form(&self) -> Form {
        let m = self.dim();
        let eta = Form::eta(self);
        Form::scalar(m, Complex64::new(1.0, 0.0)).wedge_power(&eta, m).scale_re(1.0 / factorial(m))
    }

    /// Hodge star from its defining pairing `α ∧ ⋆Φ = ⟨α, Φ̄⟩ vol` over every
    /// basis `(q,p)`-form `α`; maps `(p,q)` to `(m-q, m-p)`.
    pub fn hodge_star_brute(&self, phi: &Form) -> Form {
        let m = self.dim();
        let (p, q) = phi.bidegree();
        let full = (1u32 << m) - 1;
        let vol = self.volume_form().get_mask(full, full);
        let phibar = phi.conj();
        let mut out = Form::zeros(m, m - q, m - p);
        for k in masks(m, m - q) {
            for l in masks(m, m - p) {
                let mut alpha = Form::zeros(m, q, p);
                alpha.set_mask(full ^ k, full ^ l, Complex64::new(1.0, 0.0));
                let mut e = Form::zeros(m, m - q, m - p);
                e.set_mask(k, l, Complex64::new(1.0, 0.0));
                let w = alpha.wedge(&e).get_mask(full, full);
                out.set_mask(k, l, self.inner(&alpha, &phibar) * vol / w);
            }
        }
        out
    }

    /// Closed-form star of the five `η`-wedge shapes.
    pub fn hodge_star_closed(&self, shape: StarShape, payload: &Form) -> Result<Form> {
        let m = self.dim();
        if m < shape.min_dim() {
            return Err(Error::ShapeNeedsDimension { shape: shape.name(), need: shape.min_dim(), m });
        }
        if payload.bidegree() != shape.payload_bidegree() {
            let (p, q) = payload.bidegree();
            return Err(Error::PayloadBidegree(p, q));
        }
        let eta = Form::eta(self);
        let f = |k: usize| factorial(k);
        Ok(match shape {
            StarShape::Alpha => {
                let l = self.lambda(payload)?.scalar_value();
                eta.scale(l).sub_form(payload).scale_re(f(m - 2))
            }
            StarShape::Phi => {
                let l1 = self.lambda(payload)?;
                let l2 = self.lambda(&l1)?.scalar_value();
                eta.scale(l2 * 0.5).sub_form(&l1).scale_re(f(m - 3))
            }
            StarShape::Psi => {
                let l2 = self.lambda_pow(payload, 2)?;
                let l3 = self.lambda(&l2)?.scalar_value();
                eta.scale(l3 / 6.0).sub_form(&l2.scale_re(0.5)).scale_re(f(m - 4))
            }
            StarShape::Tau => payload.wedge(&eta).scale(-I * f(m - 2)),
            StarShape::Torsion => {
                let lt = self.lambda(payload)?;
                payload.sub_form(&lt.wedge(&eta)).scale(I * f(m - 3))
            }
        })
    }

    /// The `η`-wedge input `payload ∧ η^k` matching a star shape.
    pub fn star_input(&self, shape: StarShape, payload: &Form) -> Form {
        let m = self.dim();
        let eta = Form::eta(self);
        payload.wedge_power(&eta, m - shape.min_dim())
    }
}

/// The shapes with a closed-form Hodge star.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StarShape {
    /// `α ∧ η^{m-2}`, `α` a `(1,1)`-form.
    Alpha,
    /// `Φ ∧ η^{m-3}`, `Φ` a `(2,2)`-form.
    Phi,
    /// `Ψ ∧ η^{m-4}`, `Ψ` a `(3,3)`-form.
    Psi,
    /// `τ ∧ η^{m-2}`, `τ` a `(1,0)`-form.
    Tau,
    /// `T ∧ η^{m-3}`, `T` a `(2,1)`-form.
    Torsion,
}

impl StarShape {
    pub const ALL: [StarShape; 5] = [StarShape::Alpha, StarShape::Phi, StarShape::Psi, StarShape::Tau, StarShape::Torsion];

    pub fn min_dim(self) -> usize {
        match self {
            StarShape::Alpha | StarShape::Tau => 2,
            StarShape::Phi | StarShape::Torsion => 3,
            StarShape::Psi => 4,
        }
    }

    pub fn payload_bidegree(self) -> (usize, usize) {
        match self {
            StarShape::Alpha => (1, 1),
            StarShape::Phi => (2, 2),
            StarShape::Psi => (3, 3),
            StarShape::Tau => (1, 0),
            StarShape::Torsion => (2, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StarShape::Alpha => "alpha",
            StarShape::Phi => "phi",
            StarShape::Psi => "psi",
            StarShape::Tau => "tau",
            StarShape::Torsion => "torsion",
        }
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.add_form(rhs)
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self.sub_form(rhs)
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale_re(-1.0)
    }
}

impl Mul<Complex64> for &Form {
    type Output = Form;
    fn mul(self, rhs: Complex64) -> Form {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force antisymmetrization of the tensor product, straight from
    /// the permutation sum; independent of the shuffle-based wedge.
    fn wedge_by_permutations(a: &Form, b: &Form) -> Form {
        let m = a.m();
        let (p1, q1) = a.bidegree();
        let (p2, q2) = b.bidegree();
        let (p, q) = (p1 + p2, q1 + q2);
        let mut out = Form::zeros(m, p, q);
        let perms = |n: usize| -> Vec<(Vec<usize>, f64)> {
            fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
                if left.is_empty() {
                    let (s, _) = sort_sign(prefix).unwrap();
                    out.push((prefix.clone(), s));
                    return;
                }
                for i in 0..left.len() {
                    let x = left.remove(i);
                    prefix.push(x);
                    rec(prefix, left, out);
                    prefix.pop();
                    left.insert(i, x);
                }
            }
            let mut out = Vec::new();
            rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
            out
        };
        let reorder = if (q1 * p2) % 2 == 0 { 1.0 } else { -1.0 };
        let norm = factorial(p1) * factorial(q1) * factorial(p2) * factorial(q2);
        for h in masks(m, p) {
            for an in masks(m, q) {
                let hi: Vec<usize> = bits_of(h).collect();
                let ai: Vec<usize> = bits_of(an).collect();
                let mut s = c(0.0, 0.0);
                for (sh, sgh) in perms(p) {
                    for (sa, sga) in perms(q) {
                        let hh: Vec<usize> = sh.iter().map(|&i| hi[i]).collect();
                        let aa: Vec<usize> = sa.iter().map(|&i| ai[i]).collect();
                        s += a.get(&hh[..p1], &aa[..q1]) * b.get(&hh[p1..], &aa[q1..]) * sgh * sga;
                    }
                }
                out.set_mask(h, an, s * reorder / norm);
            }
        }
        out
    }

    #[test]
    fn lambda_eta_is_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=4 {
            let g = HermitianMetric::random(m, 0.3, &mut rng);
            let l = g.lambda(&Form::eta(&g)).unwrap().scalar_value();
            assert!((l - c(m as f64, 0.0)).norm() < 1e-13, "m={m}: {l}");
        }
    }

    #[test]
    fn wedge_matches_permutation_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (m, d1, d2) in [(2, (1, 1), (1, 1)), (3, (1, 0), (1, 2)), (3, (2, 1), (1, 1)), (4, (1, 1), (2, 1))] {
            let a = Form::random(m, d1.0, d1.1, &mut rng);
            let b = Form::random(m, d2.0, d2.1, &mut rng);
            assert!(a.wedge(&b).distance(&wedge_by_permutations(&a, &b)) < 1e-13);
        }
    }

    #[test]
    fn eta_wedge_eta_flat_m2() {
        let g = HermitianMetric::identity(2);
        let eta = Form::eta(&g);
        let ee = eta.wedge(&eta);
        assert!(ee.distance(&wedge_by_permutations(&eta, &eta)) < 1e-15);
        // η∧η = 2 i² dz¹∧dz̄¹∧dz²∧dz̄² = 2 dz¹dz²dz̄¹dz̄²  (one transposition)
        assert!((ee.get_mask(0b11, 0b11) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tau_wedge_tbar_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 3;
        let tau = Form::random(m, 1, 0, &mut rng);
        let t = Form::random(m, 2, 1, &mut rng);
        let tb = t.conj();
        let w = tau.wedge(&tb);
        // T̄_{j β̄ k̄} = conj(T_{j̄ β k})
        let tbar = |j: usize, b: usize, k: usize| t.c21(j, b, k).conj();
        for k in 0..m {
            for j in 0..m {
                for b in 0..m {
                    for a in 0..m {
                        let lhs = w.interleaved_pp(&[(k, j), (b, a)]);
                        let rhs = tau.get(&[a], &[]) * tbar(j, b, k) - tau.get(&[j], &[]) * tbar(a, b, k);
                        assert!((lhs - rhs).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_squared_eta_wedge_eta_m3() {
        // Direct double trace of the interleaved table: Λ²Φ = i^{-2} g^{k₁j̄₁} g^{k₂j̄₂} Φ_{j̄₁k₁j̄₂k₂}.
        let g = HermitianMetric::identity(3);
        let eta = Form::eta(&g);
        let ee = eta.wedge(&eta);
        let mut direct = c(0.0, 0.0);
        for a in 0..3 {
            for b in 0..3 {
                direct += ee.interleaved_pp(&[(a, a), (b, b)]);
            }
        }
        direct *= -1.0;
        let l2 = g.lambda_pow(&ee, 2).unwrap().scalar_value();
        assert!((l2 - direct).norm() < 1e-14);
        // frozen: Λ²(η∧η) = 2·m·(m-1) = 12 at m = 3
        assert!((l2 - c(12.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn contraction_beyond_degree_is_error() {
        let g = HermitianMetric::identity(2);
        let eta = Form::eta(&g);
        assert!(matches!(g.lambda_pow(&eta, 2), Err(Error::ContractionExceedsDegree { .. })));
    }

    #[test]
    fn star_of_volume_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 1..=4 {
            let g = HermitianMetric::random(m, 0.3, &mut rng);
            let s = g.hodge_star_brute(&g.volume_form()).scalar_value();
            assert!((s - c(1.0, 0.0)).norm() < 1e-12, "m={m}: {s}");
            assert!((g.inner(&g.volume_form(), &g.volume_form()) - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn star_star_is_signed_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 3;
        let g = HermitianMetric::random(m, 0.3, &mut rng);
        for (p, q) in [(1, 1), (1, 0), (2, 1), (2, 2), (0, 2)] {
            let phi = Form::random(m, p, q, &mut rng);
            let back = g.hodge_star_brute(&g.hodge_star_brute(&phi));
            let k = p + q;
            let sign = if (k % 2) == 0 { 1.0 } else { -1.0 };
            assert!(back.distance(&phi.scale_re(sign)) < 1e-12, "({p},{q})");
        }
    }

    #[test]
    fn star_alpha_flat_m2_component_check() {
        let g = HermitianMetric::identity(2);
        let mut alpha = Form::zeros(2, 1, 1);
        alpha.set_mask(1, 1, c(0.0, 1.0));
        let brute = g.hodge_star_brute(&g.star_input(StarShape::Alpha, &alpha));
        let eta = Form::eta(&g);
        assert!(brute.distance(&eta.sub_form(&alpha)) < 1e-15);
        let closed = g.hodge_star_closed(StarShape::Alpha, &alpha).unwrap();
        assert!(brute.distance(&closed) < 1e-15);
    }

    #[test]
    fn star_eta_squared_m3_is_two_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = HermitianMetric::random(3, 0.3, &mut rng);
        let eta = Form::eta(&g);
        let brute = g.hodge_star_brute(&eta.wedge(&eta));
        assert!(brute.distance(&eta.scale_re(2.0)) < 1e-12);
    }

    #[test]
    fn closed_star_shape_needs_dimension() {
        let g = HermitianMetric::identity(3);
        let psi = Form::zeros(3, 3, 3);
        assert!(matches!(g.hodge_star_closed(StarShape::Psi, &psi), Err(Error::ShapeNeedsDimension { .. })));
        let wrong = Form::zeros(3, 1, 1);
        assert!(matches!(g.hodge_star_closed(StarShape::Phi, &wrong), Err(Error::PayloadBidegree(1, 1))));
    }

    #[test]
    fn norms() {
        let g = HermitianMetric::identity(2);
        let tau = Form::from_10(2, |a| if a == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!((g.inner_norm(&tau) - 1.0).abs() < 1e-15);
        assert_eq!(g.inner_norm(&Form::zeros(2, 2, 1)), 0.0);
    }

    #[test]
    fn hermitian_metric_rejects_bad_input() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMetric::new(bad), Err(Error::NotPositive)));
        let asym = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMetric::new(asym), Err(Error::NotHermitian(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

        #[test]
        fn graded_commutativity(seed in any::<u64>(), p1 in 0usize..3, q1 in 0usize..3, p2 in 0usize..2, q2 in 0usize..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 3;
            let a = Form::random(m, p1, q1, &mut rng);
            let b = Form::random(m, p2, q2, &mut rng);
            let sign = if ((p1 + q1) * (p2 + q2)) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!(a.wedge(&b).distance(&b.wedge(&a).scale_re(sign)) < 1e-12);
        }

        #[test]
        fn antisymmetry_on_read(seed in any::<u64>(), i in 0usize..4, j in 0usize..4, k in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = Form::random(4, 2, 1, &mut rng);
            prop_assert_eq!(f.get(&[i, j], &[k]), -f.get(&[j, i], &[k]));
        }

        #[test]
        fn lambda_preserves_reality(seed in any::<u64>(), p in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = HermitianMetric::random(4, 0.3, &mut rng);
            let phi = Form::random_real(4, p, &mut rng);
            let l = g.lambda(&phi).unwrap();
            let scale = phi.max_abs().max(1.0);
            prop_assert!(l.imaginary_part_max() <= 1e-13 * scale * 10.0);
        }

        #[test]
        fn top_contraction_is_pairing_with_eta_power(seed in any::<u64>(), p in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 3;
            let g = HermitianMetric::random(m, 0.3, &mut rng);
            let phi = Form::random_real(m, p, &mut rng);
            let eta_p = Form::scalar(m, c(1.0, 0.0)).wedge_power(&Form::eta(&g), p);
            let lp = g.lambda_pow(&phi, p).unwrap().scalar_value();
            let pairing = g.inner(&phi, &eta_p);
            prop_assert!((lp - pairing).norm() < 1e-11 * (1.0 + lp.norm()));
        }

        #[test]
        fn inner_norm_nonnegative(seed in any::<u64>(), p in 0usize..3, q in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = HermitianMetric::random(3, 0.3, &mut rng);
            let f = Form::random(3, p, q, &mut rng);
            prop_assert!(g.inner_norm(&f) > 0.0);
        }
    }
}
