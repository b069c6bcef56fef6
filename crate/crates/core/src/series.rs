//! Truncated Taylor polynomials in the holomorphic coordinates `z^a` and their
//! conjugates `z̄^a` around a base point.
//!
//! A [`Series`] stores the coefficient of every monomial `z^α z̄^β` with
//! `|α| + |β| ≤ K`. Variable `a < m` is `z^a`; variable `m + a` is `z̄^a`, so
//! the coefficient of a monomial divided into its exponent factorials gives
//! the mixed derivative `∂^α ∂̄^β` at the base point.
//!
//! Every series carries a *valid order*: the highest total degree that is
//! still exact. Differentiation lowers it by one and products take the
//! minimum, so values read off a series are never silently truncated.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

const NONE: u32 = u32::MAX;

/// Monomial tables shared by all series over the same variables and order.
pub struct JetSpace {
    m: usize,
    order: u8,
    exps: Vec<Vec<u8>>,
    degree: Vec<u8>,
    /// `deg_end[d]` = number of monomials of degree `≤ d`.
    deg_end: Vec<usize>,
    mul: Vec<u32>,
    /// Per variable: (source, target, factor).
    deriv: Vec<Vec<(u32, u32, f64)>>,
    conj_perm: Vec<u32>,
    factorial_weight: Vec<f64>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("m", &self.m)
            .field("order", &self.order)
            .field("monomials", &self.exps.len())
            .finish()
    }
}

impl JetSpace {
    /// Space of series in `m` complex variables (and conjugates) up to `order`.
    pub fn new(m: usize, order: u8) -> Arc<Self> {
        let nv = 2 * m;
        let mut exps: Vec<Vec<u8>> = Vec::new();
        for d in 0..=order {
            let mut cur = vec![0u8; nv];
            push_degree(&mut exps, &mut cur, 0, d);
        }
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut deg_end = vec![0usize; order as usize + 1];
        for d in 0..=order as usize {
            deg_end[d] = degree.iter().filter(|&&x| x as usize <= d).count();
        }
        let index = |e: &[u8]| -> Option<usize> { exps.iter().position(|x| x.as_slice() == e) };
        let n = exps.len();
        let mut mul = vec![NONE; n * n];
        let mut sum = vec![0u8; nv];
        for i in 0..n {
            for j in 0..n {
                if degree[i] + degree[j] > order {
                    continue;
                }
                for v in 0..nv {
                    sum[v] = exps[i][v] + exps[j][v];
                }
                mul[i * n + j] = index(&sum).expect("monomial closed under product") as u32;
            }
        }
        let mut deriv = vec![Vec::new(); nv];
        for (v, table) in deriv.iter_mut().enumerate() {
            for (i, e) in exps.iter().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut t = e.clone();
                t[v] -= 1;
                table.push((i as u32, index(&t).unwrap() as u32, e[v] as f64));
            }
        }
        let conj_perm = exps
            .iter()
            .map(|e| {
                let mut s = e[m..].to_vec();
                s.extend_from_slice(&e[..m]);
                index(&s).unwrap() as u32
            })
            .collect();
        let factorial_weight = exps
            .iter()
            .map(|e| e.iter().map(|&k| factorial(k as usize)).product())
            .collect();
        Arc::new(Self { m, order, exps, degree, deg_end, mul, deriv, conj_perm, factorial_weight })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> u8 {
        self.degree[i]
    }

    /// Index of a monomial, if it lies in the space.
    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.exps.iter().position(|e| e.as_slice() == exps)
    }

    /// Index of the monomial reached by differentiating the base point along
    /// the listed variables (repetition allowed).
    pub fn index_of_derivative(&self, vars: &[usize]) -> Option<usize> {
        let mut e = vec![0u8; 2 * self.m];
        for &v in vars {
            e[v] += 1;
        }
        self.index_of(&e)
    }

    fn count_upto(&self, d: u8) -> usize {
        self.deg_end[d.min(self.order) as usize]
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, remaining: u8) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        push_degree(out, cur, pos + 1, remaining - k);
    }
    cur[pos] = 0;
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Truncated Taylor polynomial. Series without a space are exact constants
/// (including zero) and combine with any space.
#[derive(Clone)]
pub struct Series {
    space: Option<Arc<JetSpace>>,
    coef: Vec<Complex64>,
    valid: u8,
    exact: bool,
}

impl Default for Series {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Series")
            .field("value", &self.value())
            .field("valid", &self.valid_order())
            .field("terms", &self.coef.len())
            .finish()
    }
}

impl Series {
    pub fn zero() -> Self {
        Self { space: None, coef: Vec::new(), valid: 0, exact: true }
    }

    pub fn constant(v: Complex64) -> Self {
        Self { space: None, coef: vec![v], valid: 0, exact: true }
    }

    pub fn real(v: f64) -> Self {
        Self::constant(Complex64::new(v, 0.0))
    }

    /// Series from a full coefficient vector; valid to the space order.
    pub fn from_coefficients(space: &Arc<JetSpace>, coef: Vec<Complex64>) -> Self {
        assert_eq!(coef.len(), space.len());
        let valid = space.order;
        Self { space: Some(space.clone()), coef, valid, exact: false }
    }

    /// The coordinate function `z^a` (or `z̄^a` for `var = m + a`).
    pub fn variable(space: &Arc<JetSpace>, var: usize) -> Self {
        let mut coef = vec![Complex64::new(0.0, 0.0); space.len()];
        let mut e = vec![0u8; 2 * space.m];
        e[var] = 1;
        if let Some(i) = space.index_of(&e) {
            coef[i] = Complex64::new(1.0, 0.0);
        }
        Self { space: Some(space.clone()), coef, valid: space.order, exact: false }
    }

    pub fn space(&self) -> Option<&Arc<JetSpace>> {
        self.space.as_ref()
    }

    /// Highest degree that is exact; `None` for exact constants.
    pub fn valid_order(&self) -> Option<u8> {
        if self.exact {
            None
        } else {
            Some(self.valid)
        }
    }

    pub fn value(&self) -> Complex64 {
        self.coef.first().copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Raw coefficient of monomial `i` (zero when absent).
    pub fn coefficient(&self, i: usize) -> Complex64 {
        self.coef.get(i).copied().unwrap_or_default()
    }

    /// Mixed partial derivative at the base point along `vars`.
    pub fn derivative_at(&self, vars: &[usize]) -> Complex64 {
        match &self.space {
            None => {
                if vars.is_empty() {
                    self.value()
                } else {
                    Complex64::default()
                }
            }
            Some(sp) => {
                let deg = vars.len() as u8;
                assert!(deg <= self.valid, "derivative of order {deg} beyond valid order {}", self.valid);
                match sp.index_of_derivative(vars) {
                    Some(i) => self.coef[i] * sp.factorial_weight[i],
                    None => Complex64::default(),
                }
            }
        }
    }

    fn expand(&self, sp: &Arc<JetSpace>) -> Vec<Complex64> {
        let mut v = vec![Complex64::default(); sp.len()];
        for (i, c) in self.coef.iter().enumerate() {
            v[i] = *c;
        }
        v
    }

    fn combine_meta(a: &Series, b: &Series) -> (Option<Arc<JetSpace>>, u8, bool) {
        let space = a.space.clone().or_else(|| b.space.clone());
        match (a.exact, b.exact) {
            (true, true) => (space, 0, true),
            (true, false) => (space, b.valid, false),
            (false, true) => (space, a.valid, false),
            (false, false) => (space, a.valid.min(b.valid), false),
        }
    }

    fn add_scaled(&self, other: &Series, s: f64) -> Series {
        let (space, valid, exact) = Self::combine_meta(self, other);
        let coef = match &space {
            None => {
                let a = self.value();
                let b = other.value();
                if self.coef.is_empty() && other.coef.is_empty() {
                    Vec::new()
                } else {
                    vec![a + b * s]
                }
            }
            Some(sp) => {
                let mut v = self.expand(sp);
                for (i, c) in other.coef.iter().enumerate() {
                    v[i] += c * s;
                }
                v
            }
        };
        Series { space, coef, valid, exact }
    }

    pub fn scale(&self, s: Complex64) -> Series {
        Series {
            space: self.space.clone(),
            coef: self.coef.iter().map(|c| c * s).collect(),
            valid: self.valid,
            exact: self.exact,
        }
    }

    pub fn scale_re(&self, s: f64) -> Series {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn mul_series(&self, other: &Series) -> Series {
        let (space, valid, exact) = Self::combine_meta(self, other);
        if self.coef.is_empty() || other.coef.is_empty() {
            return Series { space, coef: Vec::new(), valid, exact };
        }
        match &space {
            None => Series { space, coef: vec![self.value() * other.value()], valid, exact },
            Some(sp) => {
                if self.space.is_none() {
                    return other.scale(self.value()).with_meta(valid, exact);
                }
                if other.space.is_none() {
                    return self.scale(other.value()).with_meta(valid, exact);
                }
                let n = sp.len();
                let top = if exact { sp.order } else { valid };
                let mut out = vec![Complex64::default(); n];
                let ni = sp.count_upto(top);
                for i in 0..ni {
                    let a = self.coef[i];
                    if a.re == 0.0 && a.im == 0.0 {
                        continue;
                    }
                    let nj = sp.count_upto(top - sp.degree[i]);
                    let row = &sp.mul[i * n..i * n + nj];
                    for (j, &k) in row.iter().enumerate() {
                        out[k as usize] += a * other.coef[j];
                    }
                }
                Series { space, coef: out, valid, exact }
            }
        }
    }

    fn with_meta(mut self, valid: u8, exact: bool) -> Series {
        self.valid = valid;
        self.exact = exact;
        self
    }

    /// Partial derivative along variable `var` (`z^a` for `a < m`, `z̄^a` for `m + a`).
    pub fn deriv(&self, var: usize) -> Series {
        match &self.space {
            None => Series::zero(),
            Some(sp) => {
                assert!(self.exact || self.valid > 0, "differentiating a series of valid order 0");
                let mut out = vec![Complex64::default(); sp.len()];
                for &(src, dst, f) in &sp.deriv[var] {
                    out[dst as usize] += self.coef[src as usize] * f;
                }
                Series {
                    space: self.space.clone(),
                    coef: out,
                    valid: self.valid.saturating_sub(1),
                    exact: self.exact,
                }
            }
        }
    }

    /// `∂/∂z^a`.
    pub fn d(&self, a: usize) -> Series {
        self.deriv(a)
    }

    /// `∂/∂z̄^a`.
    pub fn dbar(&self, a: usize) -> Series {
        match &self.space {
            None => Series::zero(),
            Some(sp) => self.deriv(sp.m + a),
        }
    }

    /// Complex conjugate as a function: swaps `z` and `z̄` exponents.
    pub fn conj(&self) -> Series {
        match &self.space {
            None => Series { coef: self.coef.iter().map(|c| c.conj()).collect(), ..self.clone() },
            Some(sp) => {
                let mut out = vec![Complex64::default(); sp.len()];
                for (i, c) in self.coef.iter().enumerate() {
                    out[sp.conj_perm[i] as usize] = c.conj();
                }
                Series { space: self.space.clone(), coef: out, valid: self.valid, exact: self.exact }
            }
        }
    }

    /// `f(self)` given `f^{(k)}(a)` for `k = 0..=K` at the base value `a`.
    fn compose(&self, derivs_at_value: &[Complex64]) -> Series {
        let a = self.value();
        let x = self.add_scaled(&Series::constant(a), -1.0);
        let mut out = Series::constant(derivs_at_value[0]);
        let mut pow = Series::real(1.0);
        let top = match &self.space {
            None => 0,
            Some(sp) => {
                if self.exact {
                    sp.order
                } else {
                    self.valid
                }
            }
        };
        for (k, d) in derivs_at_value.iter().enumerate().skip(1).take(top as usize) {
            pow = pow.mul_series(&x);
            out = out.add_scaled(&pow.scale(*d), 1.0 / factorial(k));
        }
        // constants stay exact; anything else carries the input's valid order
        out.space = self.space.clone();
        out.valid = self.valid;
        out.exact = self.exact;
        if out.space.is_some() && out.coef.len() < out.space.as_ref().unwrap().len() {
            let sp = out.space.clone().unwrap();
            out.coef = out.expand(&sp);
        }
        out
    }

    fn max_order(&self) -> usize {
        self.space.as_ref().map(|s| s.order as usize).unwrap_or(0)
    }

    pub fn exp(&self) -> Series {
        let e = self.value().exp();
        self.compose(&vec![e; self.max_order() + 1])
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Series {
        let a = self.value();
        let mut d = vec![a.ln()];
        for k in 1..=self.max_order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(Complex64::new(sign * factorial(k - 1), 0.0) / a.powi(k as i32));
        }
        self.compose(&d)
    }

    /// Principal power `self^p`.
    pub fn powf(&self, p: f64) -> Series {
        let a = self.value();
        let mut d = Vec::new();
        let mut coeff = 1.0;
        for k in 0..=self.max_order() {
            d.push(a.powf(p - k as f64) * coeff);
            coeff *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn recip(&self) -> Series {
        self.powf(-1.0)
    }

    /// Re-expresses the series in another space over the same variables,
    /// dropping monomials the target cannot hold.
    pub fn restrict(&self, target: &Arc<JetSpace>) -> Series {
        let Some(sp) = &self.space else {
            return self.clone();
        };
        assert_eq!(sp.m, target.m, "restrict across different variable sets");
        let mut coef = vec![Complex64::default(); target.len()];
        for (i, c) in self.coef.iter().enumerate() {
            if let Some(j) = target.index_of(&sp.exps[i]) {
                coef[j] = *c;
            }
        }
        let valid = if self.exact { target.order } else { self.valid.min(target.order) };
        Series { space: Some(target.clone()), coef, valid, exact: self.exact && target.order >= sp.order }
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.add_scaled(rhs, 1.0)
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        self.add_scaled(&rhs, 1.0)
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.add_scaled(rhs, -1.0)
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, rhs: Series) -> Series {
        self.add_scaled(&rhs, -1.0)
    }
}

impl AddAssign<&Series> for Series {
    fn add_assign(&mut self, rhs: &Series) {
        *self = self.add_scaled(rhs, 1.0);
    }
}

impl AddAssign for Series {
    fn add_assign(&mut self, rhs: Series) {
        *self = self.add_scaled(&rhs, 1.0);
    }
}

impl SubAssign<&Series> for Series {
    fn sub_assign(&mut self, rhs: &Series) {
        *self = self.add_scaled(rhs, -1.0);
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.mul_series(rhs)
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        self.mul_series(&rhs)
    }
}

impl Mul<Complex64> for &Series {
    type Output = Series;
    fn mul(self, rhs: Complex64) -> Series {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for Series {
    type Output = Series;
    fn mul(self, rhs: Complex64) -> Series {
        self.scale(rhs)
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale_re(-1.0)
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale_re(-1.0)
    }
}

/// Square matrix of series, row-major.
#[derive(Clone, Debug)]
pub struct SeriesMatrix {
    pub n: usize,
    pub e: Vec<Series>,
}

impl SeriesMatrix {
    pub fn new(n: usize, e: Vec<Series>) -> Self {
        assert_eq!(e.len(), n * n);
        Self { n, e }
    }

    pub fn identity(n: usize) -> Self {
        let e = (0..n * n).map(|i| if i % (n + 1) == 0 { Series::real(1.0) } else { Series::zero() }).collect();
        Self { n, e }
    }

    pub fn at(&self, i: usize, j: usize) -> &Series {
        &self.e[i * self.n + j]
    }

    pub fn value(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.at(i, j).value())
    }

    pub fn matmul(&self, other: &SeriesMatrix) -> SeriesMatrix {
        let n = self.n;
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Series::zero();
                for k in 0..n {
                    s += self.at(i, k) * other.at(k, j);
                }
                e.push(s);
            }
        }
        SeriesMatrix { n, e }
    }

    pub fn map(&self, f: impl Fn(&Series) -> Series) -> SeriesMatrix {
        SeriesMatrix { n: self.n, e: self.e.iter().map(f).collect() }
    }

    fn from_value(m: &nalgebra::DMatrix<Complex64>) -> SeriesMatrix {
        let n = m.nrows();
        SeriesMatrix { n, e: (0..n * n).map(|k| Series::constant(m[(k / n, k % n)])).collect() }
    }

    fn order_hint(&self) -> usize {
        self.e.iter().map(|s| s.max_order()).max().unwrap_or(0)
    }

    /// Inverse by Neumann expansion around the base value. `None` when the
    /// base matrix is singular.
    pub fn inverse(&self) -> Option<SeriesMatrix> {
        let v = self.value();
        let vinv = v.clone().try_inverse()?;
        let base_inv = SeriesMatrix::from_value(&vinv);
        // X = -(A - A0) A0^{-1};  A^{-1} = A0^{-1} Σ X^k
        let dev = SeriesMatrix {
            n: self.n,
            e: self.e.iter().zip(v.transpose().iter()).map(|(s, c)| s - &Series::constant(*c)).collect(),
        };
        // v.transpose().iter() walks row-major order of v
        let x = dev.matmul(&base_inv).map(|s| -s);
        let mut acc = SeriesMatrix::identity(self.n);
        let mut pow = SeriesMatrix::identity(self.n);
        for _ in 0..self.order_hint() {
            pow = pow.matmul(&x);
            for (a, p) in acc.e.iter_mut().zip(&pow.e) {
                *a += p;
            }
        }
        Some(base_inv.matmul(&acc))
    }

    /// Determinant via `det A0 · exp(tr log(I + A0^{-1}(A − A0)))`.
    pub fn det(&self) -> Series {
        let v = self.value();
        let d0 = v.determinant();
        let Some(vinv) = v.clone().try_inverse() else {
            return self.det_cofactor();
        };
        let base_inv = SeriesMatrix::from_value(&vinv);
        let dev = SeriesMatrix {
            n: self.n,
            e: self.e.iter().zip(v.transpose().iter()).map(|(s, c)| s - &Series::constant(*c)).collect(),
        };
        let y = base_inv.matmul(&dev);
        let mut log_tr = Series::zero();
        let mut pow = SeriesMatrix::identity(self.n);
        for k in 1..=self.order_hint() {
            pow = pow.matmul(&y);
            let tr = (0..self.n).fold(Series::zero(), |acc, i| acc + pow.at(i, i).clone());
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            log_tr += &tr.scale_re(sign / k as f64);
        }
        let mut out = log_tr.exp().scale(d0);
        if self.e.iter().all(|s| s.space().is_none()) {
            out = Series::constant(d0);
        }
        out
    }

    fn det_cofactor(&self) -> Series {
        let n = self.n;
        if n == 1 {
            return self.e[0].clone();
        }
        let mut s = Series::zero();
        for j in 0..n {
            let minor: Vec<Series> = (1..n)
                .flat_map(|r| (0..n).filter(move |&c| c != j).map(move |c| (r, c)))
                .map(|(r, c)| self.at(r, c).clone())
                .collect();
            let term = self.at(0, j) * &SeriesMatrix::new(n - 1, minor).det_cofactor();
            if j % 2 == 0 {
                s += &term;
            } else {
                s -= &term;
            }
        }
        s
    }
}
