use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::field::taylor_fields;
use super::{MetricField, ScalarField, TorusLattice};
use crate::error::{Error, Result};
use crate::forms::{compound_matrix, masks, shuffle_sign, Coeff, Form, HermitianMetric};
use crate::geometry::{del_dagger_general, Chern};
use crate::series::Series;

/// A differential form whose coefficients are lattice fields.
pub type FormField = Form<ScalarField>;

impl Form<ScalarField> {
    /// The pointwise form at one site.
    pub fn at(&self, site: usize) -> Form {
        self.map(|c| c.at(site))
    }

    pub fn from_sites(lat: &Arc<TorusLattice>, forms: &[Form]) -> Self {
        let f0 = &forms[0];
        let (p, q) = f0.bidegree();
        let coef = (0..f0.coefficients().len())
            .map(|i| ScalarField::from_values(lat, forms.iter().map(|f| f.coefficients()[i]).collect()))
            .collect();
        Form::from_coefficients(f0.m(), p, q, coef)
    }

    pub fn del(&self) -> Self {
        self.del_with(|c, a| c.d(a))
    }

    pub fn delbar(&self) -> Self {
        self.delbar_with(|c, a| c.dbar(a))
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients().iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    /// Per-site forms with Taylor-series coefficients of the given order.
    pub fn jets(&self, order: u8) -> Result<Vec<Form<Series>>> {
        let coefs = self.coefficients();
        let Some(lat) = coefs.iter().find_map(|c| c.lattice()).cloned() else {
            return Err(Error::Config("form field has no lattice".into()));
        };
        let m = self.m();
        let (p, q) = self.bidegree();
        let (space, tf) = taylor_fields(coefs, m, order, lat.n())?;
        Ok((0..lat.len())
            .map(|s| {
                let c = (0..coefs.len())
                    .map(|i| Series::from_coefficients(&space, tf.iter().map(|f| f[i].at(s)).collect()))
                    .collect();
                Form::from_coefficients(m, p, q, c)
            })
            .collect())
    }

    /// Sup over sites and components of the difference.
    pub fn distance(&self, o: &Self) -> f64 {
        self.sub_form(o).max_abs()
    }
}

/// `d = ∂ + ∂̄` of a pure-type form, kept as its two parts.
#[derive(Clone, Debug)]
pub struct Differential {
    pub del: FormField,
    pub delbar: FormField,
}

pub fn exterior_d(f: &FormField) -> Differential {
    Differential { del: f.del(), delbar: f.delbar() }
}

/// `∫ ⟨a, b⟩_g det g` over the unit torus.
pub fn integrate_inner(g: &MetricField, a: &FormField, b: &FormField) -> Complex64 {
    let lat = g.lattice();
    let v: Vec<Complex64> = (0..lat.len())
        .into_par_iter()
        .map(|s| {
            let h = HermitianMetric::new(g.at(s)).expect("positive metric");
            h.inner(&a.at(s), &b.at(s)) * h.det()
        })
        .collect();
    ScalarField::from_values(lat, v).integrate()
}

/// `∂†β` from the pointwise integration-by-parts formula (covariant
/// divergence plus torsion terms) evaluated on order-1 jets at every site.
/// Unlike [`lattice_del_dagger`] this is not a discrete adjoint, so the
/// adjointness defect measures the formula at the stencil's order.
pub fn pointwise_del_dagger(g: &MetricField, beta: &FormField) -> Result<FormField> {
    let lat = g.lattice();
    let gj = g.jets(1)?;
    let bj = beta.jets(1)?;
    let out: Vec<Form> = gj
        .par_iter()
        .zip(bj.par_iter())
        .map(|(j, b)| Ok(del_dagger_general(&Chern::new(j)?, b)?.value()))
        .collect::<Result<_>>()?;
    Ok(FormField::from_sites(lat, &out))
}

fn coef_matrix(f: &Form, nh: usize, nq: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(nh, nq, f.coefficients())
}

/// Formal adjoint of `∂` for `∫ ⟨·,·⟩_g det g dV`, computed in divergence form:
/// raise all indices, weight by `det g`, take `−∂_s` over the contracted slot,
/// divide by `det g` and lower again. Maps `(p,q)` to `(p−1,q)`.
pub fn lattice_del_dagger(g: &MetricField, beta: &FormField) -> FormField {
    let lat = g.lattice();
    let m = g.m();
    let (p, q) = beta.bidegree();
    assert!(p >= 1, "∂† needs holomorphic degree ≥ 1");
    let (hs, hs_low) = (masks(m, p), masks(m, p - 1));
    let (nh, nl, nq) = (hs.len(), hs_low.len(), masks(m, q).len());

    // D = det g · C_p(g⁻¹) conj(β) C_q(g⁻¹), per site.
    let raised: Vec<(DMatrix<Complex64>, f64)> = (0..lat.len())
        .into_par_iter()
        .map(|s| {
            let gs = g.at(s);
            let gi = gs.clone().try_inverse().expect("positive metric");
            let det = gs.determinant().re;
            let b = coef_matrix(&beta.at(s), nh, nq).map(|z| z.conj());
            (compound_matrix(&gi, p) * b * compound_matrix(&gi, q) * Complex64::new(det, 0.0), det)
        })
        .collect();
    let dfield = |r: usize, c: usize| ScalarField::from_values(lat, raised.iter().map(|(d, _)| d[(r, c)]).collect());

    // E^{K,J} = −det⁻¹ Σ_{s∉K} sign(s,K) ∂_s D^{(s|K),J}.
    let rank = |mask: u32| hs.iter().position(|&x| x == mask).expect("mask");
    let mut e: Vec<Vec<ScalarField>> = vec![vec![ScalarField::zero(); nq]; nl];
    for (kr, &k) in hs_low.iter().enumerate() {
        for s in (0..m).filter(|s| k >> s & 1 == 0) {
            let sign = Complex64::new(-shuffle_sign(1 << s, k), 0.0);
            let r = rank(k | 1 << s);
            for (c, slot) in e[kr].iter_mut().enumerate() {
                *slot = slot.add_ref(&dfield(r, c).d(s).scale(sign));
            }
        }
    }
    let lowered: Vec<Form> = (0..lat.len())
        .into_par_iter()
        .map(|s| {
            let gs = g.at(s);
            let emat = DMatrix::from_fn(nl, nq, |r, c| e[r][c].at(s)) / Complex64::new(raised[s].1, 0.0);
            let conj_c = compound_matrix(&gs, p - 1) * emat * compound_matrix(&gs, q);
            Form::from_coefficients(m, p - 1, q, conj_c.transpose().iter().map(|z| z.conj()).collect())
        })
        .collect();
    FormField::from_sites(lat, &lowered)
}
