//! Chern connection, torsion and curvature of a metric jet.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::jet::MetricJet;
use super::tensor::{Slot, Tensor};
use crate::error::{Error, Result};
use crate::forms::{Form, HermitianMetric};
use crate::series::Series;

use Slot::{Anti, AntiUp, Hol, HolUp};

/// Series-level Chern data of a jet. Index conventions:
/// `gamma[p,j,q] = Γ^p_{jq}`, `torsion[k,j,m] = T_{k̄jm}`,
/// `curvature[k,j,l,q] = R_{k̄jℓ̄q}`.
#[derive(Clone, Debug)]
pub struct Chern {
    pub jet: MetricJet,
    pub gamma: Tensor<Series>,
    pub torsion: Tensor<Series>,
    curvature: Option<Tensor<Series>>,
}

impl Chern {
    pub fn new(jet: &MetricJet) -> Result<Self> {
        jet.require(1)?;
        let m = jet.dim();
        let dg: Vec<Vec<Series>> = (0..m).map(|a| (0..m * m).map(|i| jet.g(i / m, i % m).d(a)).collect()).collect();
        let gamma = Tensor::from_fn(m, &[HolUp, Hol, Hol], |i| {
            let (p, j, q) = (i[0], i[1], i[2]);
            (0..m).fold(Series::zero(), |acc, s| acc + jet.ginv(p, s) * &dg[j][s * m + q])
        });
        let torsion = Tensor::from_fn(m, &[Anti, Hol, Hol], |i| {
            let (k, j, l) = (i[0], i[1], i[2]);
            &dg[j][k * m + l] - &dg[l][k * m + j]
        });
        let curvature = if jet.order() >= 2 {
            let rup = Tensor::from_fn(m, &[Anti, Hol, HolUp, Hol], |i| -gamma.at(&[i[2], i[1], i[3]]).dbar(i[0]));
            Some(Tensor::from_fn(m, &[Anti, Hol, Anti, Hol], |i| {
                let (k, j, l, q) = (i[0], i[1], i[2], i[3]);
                (0..m).fold(Series::zero(), |acc, p| acc + jet.g(l, p) * rup.at(&[k, j, p, q]))
            }))
        } else {
            None
        };
        Ok(Self { jet: jet.clone(), gamma, torsion, curvature })
    }

    pub fn dim(&self) -> usize {
        self.jet.dim()
    }

    /// `R_{k̄jℓ̄q}` as series; needs an order-2 jet.
    pub fn curvature(&self) -> Result<&Tensor<Series>> {
        self.curvature.as_ref().ok_or(Error::InsufficientJetOrder { need: 2, have: self.jet.order() })
    }

    /// `τ_ℓ = g^{jk̄} T_{k̄jℓ}` as series.
    pub fn tau(&self) -> Tensor<Series> {
        let m = self.dim();
        Tensor::from_fn(m, &[Hol], |i| {
            let mut s = Series::zero();
            for j in 0..m {
                for k in 0..m {
                    s += self.jet.ginv(j, k) * self.torsion.at(&[k, j, i[0]]);
                }
            }
            s
        })
    }

    /// Chern covariant derivative `∇_a t` (new leading `Hol` slot).
    pub fn nabla(&self, t: &Tensor<Series>) -> Result<Tensor<Series>> {
        self.derivative(t, false)
    }

    /// `∇_ā t` (new leading `Anti` slot).
    pub fn nabla_bar(&self, t: &Tensor<Series>) -> Result<Tensor<Series>> {
        self.derivative(t, true)
    }

    fn derivative(&self, t: &Tensor<Series>, bar: bool) -> Result<Tensor<Series>> {
        if let Some(v) = t.valid_order() {
            if v < 1 {
                return Err(Error::InsufficientJetOrder { need: 1, have: 0 });
            }
        }
        let m = self.dim();
        let mut slots = vec![if bar { Anti } else { Hol }];
        slots.extend_from_slice(t.slots());
        let gamma_bar = if bar { Some(self.gamma.map(|s| s.conj())) } else { None };
        let mut idx = vec![0usize; t.rank()];
        Ok(Tensor::from_fn(m, &slots, |full| {
            let a = full[0];
            let rest = &full[1..];
            let mut s = if bar { t.at(rest).dbar(a) } else { t.at(rest).d(a) };
            idx.copy_from_slice(rest);
            for (r, slot) in t.slots().iter().enumerate() {
                let orig = rest[r];
                for x in 0..m {
                    idx[r] = x;
                    match (bar, slot) {
                        (false, Hol) => s -= &(self.gamma.at(&[x, a, orig]) * t.at(&idx)),
                        (false, HolUp) => s += &(self.gamma.at(&[orig, a, x]) * t.at(&idx)),
                        (true, Anti) => s -= &(gamma_bar.as_ref().unwrap().at(&[x, a, orig]) * t.at(&idx)),
                        (true, AntiUp) => s += &(gamma_bar.as_ref().unwrap().at(&[orig, a, x]) * t.at(&idx)),
                        _ => {}
                    }
                }
                idx[r] = orig;
            }
            s
        }))
    }

    /// `g^{ab̄}`-trace of slots `r1` (holomorphic) and `r2` (antiholomorphic),
    /// removing both.
    pub fn trace(&self, t: &Tensor<Series>, r1: usize, r2: usize) -> Tensor<Series> {
        let m = self.dim();
        let slots: Vec<Slot> = t.slots().iter().enumerate().filter(|(r, _)| *r != r1 && *r != r2).map(|(_, s)| *s).collect();
        let mut full = vec![0usize; t.rank()];
        Tensor::from_fn(m, &slots, |rest| {
            let mut it = rest.iter();
            for (r, f) in full.iter_mut().enumerate() {
                if r != r1 && r != r2 {
                    *f = *it.next().unwrap();
                }
            }
            let mut s = Series::zero();
            for a in 0..m {
                for b in 0..m {
                    full[r1] = a;
                    full[r2] = b;
                    s += self.jet.ginv(a, b) * t.at(&full);
                }
            }
            s
        })
    }

    pub fn torsion_pack(&self) -> TorsionPack {
        TorsionPack::from_values(self.jet.metric(), &self.torsion.value())
    }

    pub fn curvature_pack(&self) -> Result<CurvaturePack> {
        Ok(CurvaturePack::from_lowered(self.jet.metric(), &self.curvature()?.value()))
    }
}

/// Pointwise torsion quantities.
#[derive(Clone, Debug)]
pub struct TorsionPack {
    /// `T_{k̄jm}` at `[k, j, m]`.
    pub t: Tensor,
    pub form: Form,
    pub tau: Vec<Complex64>,
    /// `(T∘T̄)_{β̄α}` at `(β, α)`.
    pub tct: DMatrix<Complex64>,
    /// `(TT̄)_{ℓ̄m}` at `(ℓ, m)`.
    pub tt: DMatrix<Complex64>,
    /// `(τ̄·T)_{ᾱβ}` at `(α, β)`.
    pub tau_t: DMatrix<Complex64>,
    pub norm_t_sq: f64,
    pub norm_tau_sq: f64,
}

impl TorsionPack {
    pub fn from_values(g: &HermitianMetric, t: &Tensor) -> Self {
        let m = g.dim();
        let gi = g.inv();
        let tv = |k: usize, j: usize, l: usize| *t.at(&[k, j, l]);
        let tau: Vec<Complex64> = (0..m)
            .map(|l| {
                let mut s = Complex64::default();
                for j in 0..m {
                    for k in 0..m {
                        s += gi[(j, k)] * tv(k, j, l);
                    }
                }
                s
            })
            .collect();
        let mut tct = DMatrix::zeros(m, m);
        let mut tt = DMatrix::zeros(m, m);
        for b in 0..m {
            for a in 0..m {
                let mut s1 = Complex64::default();
                let mut s2 = Complex64::default();
                for l in 0..m {
                    for c in 0..m {
                        for j in 0..m {
                            for k in 0..m {
                                let w = gi[(l, c)] * gi[(j, k)];
                                s1 += w * tv(b, j, l) * tv(a, k, c).conj();
                                // (TT̄)_{b̄ a}: s ↔ l, r ↔ c
                                s2 += w * tv(c, j, a) * tv(l, k, b).conj();
                            }
                        }
                    }
                }
                tct[(b, a)] = s1;
                tt[(b, a)] = s2;
            }
        }
        let tau_up_bar: Vec<Complex64> = (0..m).map(|c| (0..m).map(|k| gi[(c, k)] * tau[k].conj()).sum()).collect();
        let tau_t = DMatrix::from_fn(m, m, |a, b| (0..m).map(|c| tau_up_bar[c] * tv(a, b, c)).sum());
        let norm_tau_sq = {
            let mut s = Complex64::default();
            for j in 0..m {
                for k in 0..m {
                    s += gi[(j, k)] * tau[j] * tau[k].conj();
                }
            }
            s.re
        };
        Self {
            t: t.clone(),
            form: Form::from_21(m, tv),
            tau,
            tct,
            tt,
            tau_t,
            norm_t_sq: t.norm_sq(g),
            norm_tau_sq,
        }
    }

    pub fn tau_form(&self) -> Form {
        Form::from_10(self.tau.len(), |a| self.tau[a])
    }
}

/// Pointwise curvature quantities; all Ricci variants in `(k, j) = _{k̄j}` layout.
#[derive(Clone, Debug)]
pub struct CurvaturePack {
    /// `R_{k̄jℓ̄q}` at `[k, j, l, q]`.
    pub rm: Tensor,
    pub ric: DMatrix<Complex64>,
    pub rtilde: DMatrix<Complex64>,
    pub rprime: DMatrix<Complex64>,
    pub rdprime: DMatrix<Complex64>,
    pub scalar: f64,
    pub rm_norm_sq: f64,
}

impl CurvaturePack {
    pub fn from_lowered(g: &HermitianMetric, rm: &Tensor) -> Self {
        let m = g.dim();
        let gi = g.inv();
        let r = |k: usize, j: usize, l: usize, q: usize| *rm.at(&[k, j, l, q]);
        let mut ric = DMatrix::zeros(m, m);
        let mut rtilde = DMatrix::zeros(m, m);
        let mut rprime = DMatrix::zeros(m, m);
        let mut rdprime = DMatrix::zeros(m, m);
        for k in 0..m {
            for j in 0..m {
                for p in 0..m {
                    for q in 0..m {
                        let w = gi[(p, q)];
                        // Ric = g^{qℓ̄} R_{k̄jℓ̄q} with (q, ℓ) = (p, q) here
                        ric[(k, j)] += w * r(k, j, q, p);
                        rtilde[(k, j)] += w * r(q, p, k, j);
                        rprime[(k, j)] += w * r(k, p, q, j);
                        rdprime[(k, j)] += w * r(q, j, k, p);
                    }
                }
            }
        }
        let mut scalar = Complex64::default();
        for j in 0..m {
            for k in 0..m {
                scalar += gi[(j, k)] * ric[(k, j)];
            }
        }
        Self { rm: rm.clone(), ric, rtilde, rprime, rdprime, scalar: scalar.re, rm_norm_sq: rm.norm_sq(g) }
    }
}

/// Metric norm of a `(1,1)` tensor `X_{k̄j}` given in `(k, j)` layout.
pub fn norm11_sq(g: &HermitianMetric, x: &DMatrix<Complex64>) -> f64 {
    let m = g.dim();
    Tensor::from_fn(m, &[Anti, Hol], |i| x[(i[0], i[1])]).norm_sq(g)
}
