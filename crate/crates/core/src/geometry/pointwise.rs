//! Matrix formulas for curvature and torsion from first and mixed second
//! derivatives of `g`, used by the lattice flow at every site.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::chern::{CurvaturePack, TorsionPack};
use super::tensor::{Slot, Tensor};
use crate::error::Result;
use crate::forms::HermitianMetric;

type M = DMatrix<Complex64>;

/// Metric value with `∂_a g` and `∂_a ∂̄_b g` at one point.
#[derive(Clone, Debug)]
pub struct PointJet {
    pub g: M,
    /// `dg[a][(k, j)] = ∂_a g_{k̄j}`.
    pub dg: Vec<M>,
    /// `ddbar[a * m + b][(k, j)] = ∂_a ∂̄_b g_{k̄j}`.
    pub ddbar: Vec<M>,
}

impl PointJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `∂̄_a g = (∂_a g)^H`.
    pub fn dbar_g(&self, a: usize) -> M {
        self.dg[a].adjoint()
    }

    fn torsion_tensor(&self) -> Tensor {
        let m = self.dim();
        Tensor::from_fn(m, &[Slot::Anti, Slot::Hol, Slot::Hol], |i| {
            let (k, j, l) = (i[0], i[1], i[2]);
            self.dg[j][(k, l)] - self.dg[l][(k, j)]
        })
    }

    /// `R_{k̄j}{}^p{}_q` as the matrix `[p][q]` for each `(k, j)` (index `k*m + j`):
    /// `g⁻¹ ∂̄_k g g⁻¹ ∂_j g − g⁻¹ ∂_j∂̄_k g`.
    pub fn curvature_endomorphisms(&self, ginv: &M) -> Vec<M> {
        let m = self.dim();
        let gd: Vec<M> = (0..m).map(|j| ginv * &self.dg[j]).collect();
        let mut out = Vec::with_capacity(m * m);
        for k in 0..m {
            let a = ginv * self.dbar_g(k);
            for j in 0..m {
                out.push(&a * &gd[j] - ginv * &self.ddbar[j * m + k]);
            }
        }
        out
    }

    /// Full curvature and torsion packs.
    pub fn packs(&self) -> Result<(HermitianMetric, TorsionPack, CurvaturePack)> {
        let metric = HermitianMetric::new(self.g.clone())?;
        let m = self.dim();
        let rup = self.curvature_endomorphisms(metric.inv());
        let rm = Tensor::from_fn(m, &[Slot::Anti, Slot::Hol, Slot::Anti, Slot::Hol], |i| {
            let (k, j, l, q) = (i[0], i[1], i[2], i[3]);
            (0..m).map(|p| metric.g()[(l, p)] * rup[k * m + j][(p, q)]).sum()
        });
        let tp = TorsionPack::from_values(&metric, &self.torsion_tensor());
        let cp = CurvaturePack::from_lowered(&metric, &rm);
        Ok((metric, tp, cp))
    }

    /// `R̃_{k̄j}`, `R_{k̄j}` and `(T∘T̄)_{k̄j}` without the norms.
    pub fn flow_terms(&self, ginv: &M) -> (M, M, M) {
        let m = self.dim();
        let g = &self.g;
        let rup = self.curvature_endomorphisms(ginv);
        let mut ric = M::zeros(m, m);
        let mut rtilde = M::zeros(m, m);
        // R̃_{k̄j} = g^{pq̄} g_{q̄s} R_{p̄?}… = Σ_{p,q} g^{pq̄} R_{q̄pk̄j},  R_{q̄pk̄j} = Σ_s g_{k̄s} R_{q̄p}{}^s{}_j
        let mut w = M::zeros(m, m);
        for q in 0..m {
            for p in 0..m {
                let c = ginv[(p, q)];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                w += &rup[q * m + p] * c;
            }
        }
        let rt = g * w;
        for k in 0..m {
            for j in 0..m {
                ric[(k, j)] = rup[k * m + j].trace();
                rtilde[(k, j)] = rt[(k, j)];
            }
        }
        let t = |k: usize, j: usize, l: usize| self.dg[j][(k, l)] - self.dg[l][(k, j)];
        let mut tct = M::zeros(m, m);
        for b in 0..m {
            for a in b..m {
                let mut s = Complex64::default();
                for l in 0..m {
                    for c in 0..m {
                        for j in 0..m {
                            for k in 0..m {
                                s += ginv[(l, c)] * ginv[(j, k)] * t(b, j, l) * t(a, k, c).conj();
                            }
                        }
                    }
                }
                tct[(b, a)] = s;
                tct[(a, b)] = s.conj();
            }
        }
        (rtilde, ric, tct)
    }
}
