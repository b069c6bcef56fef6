//! The holomorphic volume form and the `‖Ω‖` rescalings between `ω` and `η`.

use num_complex::Complex64;

use super::jet::MetricJet;
use crate::error::{Error, Result};
use crate::series::Series;

/// `Ω = c · dz¹∧…∧dzᵐ` (constant on the torus).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolVolForm {
    c: Complex64,
}

impl HolVolForm {
    pub fn new(c: Complex64) -> Result<Self> {
        if c.norm() == 0.0 {
            return Err(Error::ZeroVolumeForm);
        }
        Ok(Self { c })
    }

    pub fn unit() -> Self {
        Self { c: Complex64::new(1.0, 0.0) }
    }

    pub fn coefficient(&self) -> Complex64 {
        self.c
    }

    /// `‖Ω‖²` for a metric with determinant `det`: `i^{m²}Ω∧Ω̄ = ‖Ω‖² g^m/m!` gives `|c|²/det g`.
    pub fn norm_sq_at(&self, det: f64) -> f64 {
        self.c.norm_sqr() / det
    }

    /// `‖Ω‖²_g` as a series over the jet.
    pub fn norm_sq(&self, jet: &MetricJet) -> Series {
        jet.matrix().det().recip().scale_re(self.c.norm_sqr())
    }
}

/// Pointwise `‖Ω‖²_g` at the base point.
pub fn omega_norm(jet: &MetricJet, omega: &HolVolForm) -> f64 {
    omega.norm_sq_at(jet.metric().det())
}

/// `η = ‖Ω‖_ω ω`.
pub fn rescale_to_eta(omega_jet: &MetricJet, omega: &HolVolForm) -> Result<MetricJet> {
    let n = omega.norm_sq(omega_jet).powf(0.5);
    omega_jet.times(&n)
}

/// Inverse of [`rescale_to_eta`], from `‖Ω‖_ω^{2-m} = ‖Ω‖²_η`; undefined at `m = 2`.
pub fn rescale_to_omega(eta_jet: &MetricJet, omega: &HolVolForm) -> Result<MetricJet> {
    let m = eta_jet.dim();
    if m == 2 {
        return Err(Error::RescalingDegenerate);
    }
    let n_eta = omega.norm_sq(eta_jet);
    let n_omega = n_eta.powf(1.0 / (2.0 - m as f64));
    eta_jet.times(&n_omega.recip())
}

/// Pointwise version: the `ω` matrix and `‖Ω‖_ω` for an `η` matrix with determinant `det_eta`.
pub fn omega_factor(m: usize, det_eta: f64, omega: &HolVolForm) -> Result<f64> {
    if m == 2 {
        return Err(Error::RescalingDegenerate);
    }
    Ok(omega.norm_sq_at(det_eta).powf(1.0 / (2.0 - m as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{Form, HermitianMetric};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norm_of_unit_form() {
        assert_eq!(omega_norm(&MetricJet::flat(3, 1), &HolVolForm::unit()), 1.0);
    }

    #[test]
    fn norm_by_top_degree_pairing() {
        // i^{m²} Ω∧Ω̄ = ‖Ω‖² η^m/m!  compared coefficientwise on the top form.
        let g = HermitianMetric::new(DMatrix::from_diagonal_element(2, 2, Complex64::new(2.0, 0.0))).unwrap();
        let m = 2;
        let om = Form::<Complex64>::from_10(m, |a| if a == 0 { Complex64::new(1.0, 0.0) } else { Complex64::default() });
        let om2 = Form::<Complex64>::from_10(m, |a| if a == 1 { Complex64::new(1.0, 0.0) } else { Complex64::default() });
        let omega = om.wedge(&om2);
        let top = omega.wedge(&omega.conj()).scale(Complex64::i().powu((m * m) as u32));
        let vol = g.volume_form();
        let ratio = top.get_mask(3, 3) / vol.get_mask(3, 3);
        assert!((ratio.re - 0.25).abs() < 1e-15 && ratio.im.abs() < 1e-15);
        assert_eq!(HolVolForm::unit().norm_sq_at(g.det()), 0.25);
    }

    #[test]
    fn homogeneity_and_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let j = MetricJet::random(3, 2, 0.1, &mut rng);
        let o = HolVolForm::unit();
        let n = omega_norm(&j, &o);
        assert!((omega_norm(&j.scaled(2.0), &o) - n / 8.0).abs() < 1e-14);
        let back = rescale_to_omega(&rescale_to_eta(&j, &o).unwrap(), &o).unwrap();
        for i in 0..9 {
            assert!((back.matrix().e[i].clone() - j.matrix().e[i].clone()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn constant_metric_rescaling() {
        // ω = λI, m = 3: ‖Ω‖_ω = λ^{-3/2}, η = λ^{-1/2} I
        let lam = 1.7;
        let g = HermitianMetric::new(DMatrix::from_diagonal_element(3, 3, Complex64::new(lam, 0.0))).unwrap();
        let eta = rescale_to_eta(&MetricJet::constant(&g, 1), &HolVolForm::unit()).unwrap();
        assert!((eta.metric().g()[(0, 0)].re - lam * lam.powf(-1.5)).abs() < 1e-14);
    }

    #[test]
    fn inverse_rescaling_degenerate_in_dimension_two() {
        let j = MetricJet::flat(2, 1);
        assert!(matches!(rescale_to_omega(&j, &HolVolForm::unit()), Err(Error::RescalingDegenerate)));
    }
}
