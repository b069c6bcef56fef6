//! Conformally balanced initial data on the torus by root extraction.
//!
//! A closed positive `(m−1,m−1)`-form `Ψ` is stored through its dual Hermitian
//! matrix `M`: `Ψ = η^{m−1}/(m−1)!` corresponds to `M = det(g)·g⁻¹`. Closedness
//! comes from `Ψ = ω₀^{m−1}/(m−1)! + ε i∂∂̄φ ∧ ω₀^{m−2}/(m−2)!`, whose dual is
//! `I + ε(tr H − H)` with `H_{k̄j} = ∂_j∂̄_kφ`. The Hessian is built from
//! composed first-difference stencils, which commute, so `dΨ` vanishes to
//! roundoff on the lattice and not merely to `O(h⁴)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{Form, HermitianMetric};
use crate::geometry::HolVolForm;
use crate::lattice::{FormField, MetricField, ScalarField, TorusLattice};
use crate::series::factorial;
use std::f64::consts::{PI, TAU};

type M = DMatrix<Complex64>;

/// Real potential `φ = Σ a cos(2π k·x + ph)` over the real axes, with its
/// analytic complex Hessian.
#[derive(Clone, Debug)]
pub struct TrigPotential {
    m: usize,
    /// Wave vector over all `2m` real axes, amplitude, phase.
    modes: Vec<(Vec<f64>, f64, f64)>,
}

impl TrigPotential {
    /// Three seeded modes with wave numbers in `{−1, 0, 1}` on the active axes,
    /// normalized so the Hessian has entries of order `scale`.
    pub fn seeded(lat: &TorusLattice, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..3)
            .map(|_| {
                let k: Vec<f64> = (0..2 * lat.m())
                    .map(|ax| if lat.is_active(ax) { rng.gen_range(-1i32..=1) as f64 } else { 0.0 })
                    .collect();
                let a = scale * rng.gen_range(0.3..1.0) / (PI * PI);
                (k, a, rng.gen_range(0.0..TAU))
            })
            .collect();
        Self { m: lat.m(), modes }
    }

    /// `a cos(2π k·x + ph)` for a single mode.
    pub fn single(m: usize, k: Vec<f64>, a: f64, ph: f64) -> Self {
        assert_eq!(k.len(), 2 * m);
        Self { m, modes: vec![(k, a, ph)] }
    }

    fn phase(k: &[f64], ph: f64, x: &[f64]) -> f64 {
        TAU * k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.modes.iter().map(|(k, a, ph)| a * Self::phase(k, *ph, x).cos()).sum()
    }

    /// `H_{k̄j} = ∂_j∂̄_kφ = −π² a cos θ (k_{x_j} − i k_{y_j})(k_{x_k} + i k_{y_k})`.
    pub fn hessian(&self, x: &[f64]) -> M {
        let m = self.m;
        let mut h = M::zeros(m, m);
        for (k, a, ph) in &self.modes {
            let c = -PI * PI * a * Self::phase(k, *ph, x).cos();
            let z: Vec<Complex64> = (0..m).map(|j| Complex64::new(k[2 * j], -k[2 * j + 1])).collect();
            for kk in 0..m {
                for j in 0..m {
                    h[(kk, j)] += z[j] * z[kk].conj() * c;
                }
            }
        }
        h
    }

    pub fn field(&self, lat: &Arc<TorusLattice>) -> ScalarField {
        let p = self.clone();
        ScalarField::from_fn(lat, move |x| Complex64::new(p.value(x), 0.0))
    }
}

/// Seeded potential with order-one Hessian (see [`TrigPotential::seeded`]).
pub fn seeded_potential(lat: &Arc<TorusLattice>, seed: u64) -> ScalarField {
    TrigPotential::seeded(lat, seed, 1.0).field(lat)
}

/// Per-site dual matrices of a closed positive `(m−1,m−1)`-form.
#[derive(Clone, Debug)]
pub struct ClosedPsi {
    lat: Arc<TorusLattice>,
    dual: Vec<M>,
    hessian: Vec<M>,
    eps: f64,
}

/// `Ψ = ω₀^{m−1}/(m−1)! + ε i∂∂̄(φ ω₀^{m−2}/(m−2)!)`.
pub fn build_psi(lat: &Arc<TorusLattice>, eps: f64, phi: &ScalarField) -> Result<ClosedPsi> {
    let m = lat.m();
    if m < 2 {
        return Err(Error::Dimension(m));
    }
    let dbar: Vec<ScalarField> = (0..m).map(|k| phi.dbar(k)).collect();
    let h: Vec<Vec<ScalarField>> = (0..m).map(|k| (0..m).map(|j| dbar[k].d(j)).collect()).collect();
    let hessian: Vec<M> = (0..lat.len()).into_par_iter().map(|s| M::from_fn(m, m, |k, j| h[k][j].at(s))).collect();
    let dual: Vec<M> = hessian
        .par_iter()
        .map(|hs| M::identity(m, m) * Complex64::from(1.0 + eps * hs.trace().re) - hs * Complex64::from(eps))
        .collect();
    let bad = dual.par_iter().any(|d| crate::lattice::min_eigenvalue(d) <= 0.0);
    if bad {
        return Err(Error::AmplitudeTooLarge { suggest: eps / 2.0 });
    }
    Ok(ClosedPsi { lat: lat.clone(), dual, hessian, eps })
}

impl ClosedPsi {
    pub fn lattice(&self) -> &Arc<TorusLattice> {
        &self.lat
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dual(&self) -> &[M] {
        &self.dual
    }

    /// `Ψ` as a lattice form, assembled from wedge products (independently of `M`).
    pub fn form(&self) -> FormField {
        let m = self.lat.m();
        let omega0 = Form::eta(&HermitianMetric::identity(m));
        let one = Form::scalar(m, Complex64::new(1.0, 0.0));
        let base = one.wedge_power(&omega0, m - 1).scale_re(1.0 / factorial(m - 1));
        let lower = one.wedge_power(&omega0, m - 2).scale_re(1.0 / factorial(m - 2));
        let sites: Vec<Form> = self
            .hessian
            .par_iter()
            .map(|h| {
                let iddbar = Form::from_11(m, |k, j| Complex64::i() * h[(k, j)]);
                base.add_form(&iddbar.wedge(&lower).scale_re(self.eps))
            })
            .collect();
        FormField::from_sites(&self.lat, &sites)
    }

    /// `‖dΨ‖∞` on the lattice.
    pub fn closedness_residual(&self) -> f64 {
        let f = self.form();
        f.del().max_abs().max(f.delbar().max_abs())
    }
}

/// The conformally balanced metric with `‖Ω‖²_η η^{m−1}/(m−1)! = Ψ`:
/// root `g₀ = (det M)^{1/(m−1)} M⁻¹`, then `η = ‖Ω‖²_{g₀} g₀`.
pub fn eta_root(psi: &ClosedPsi, omega: &HolVolForm) -> Result<MetricField> {
    let m = psi.lat.m();
    if m < 3 {
        return Err(Error::RescalingDegenerate);
    }
    let g: Vec<M> = psi
        .dual
        .par_iter()
        .map(|mm| {
            let minv = mm.clone().try_inverse().ok_or(Error::NotInvertible)?;
            let det = mm.determinant().re;
            if det <= 0.0 {
                return Err(Error::NotPositive);
            }
            let g0 = minv * Complex64::from(det.powf(1.0 / (m as f64 - 1.0)));
            let u = omega.norm_sq_at(g0.determinant().re);
            Ok(g0 * Complex64::from(u))
        })
        .collect::<Result<_>>()?;
    MetricField::from_sites(&psi.lat, &g)
}

/// `‖Ω‖²_η η^k` at every site.
pub fn weighted_eta_power(g: &MetricField, omega: &HolVolForm, k: usize) -> FormField {
    let m = g.m();
    let sites: Vec<Form> = (0..g.lattice().len())
        .into_par_iter()
        .map(|s| {
            let h = HermitianMetric::new(g.at(s)).expect("positive metric");
            Form::scalar(m, Complex64::from(omega.norm_sq_at(h.det()))).wedge_power(&Form::eta(&h), k)
        })
        .collect();
    FormField::from_sites(g.lattice(), &sites)
}

/// `‖Ω‖²_η η^{m−1}/(m−1)!` at every site.
pub fn balanced_form(g: &MetricField, omega: &HolVolForm) -> FormField {
    let m = g.m();
    weighted_eta_power(g, omega, m - 1).scale_re(1.0 / factorial(m - 1))
}

/// `‖d(‖Ω‖²_η η^{m−1})‖∞`, normalized with the `1/(m−1)!` of `Ψ`.
pub fn balanced_residual(g: &MetricField, omega: &HolVolForm) -> f64 {
    let f = balanced_form(g, omega);
    f.del().max_abs().max(f.delbar().max_abs())
}

/// `‖dη‖∞`.
pub fn kahler_residual(g: &MetricField) -> f64 {
    let eta = g.eta();
    eta.del().max_abs().max(eta.delbar().max_abs())
}

/// Pointwise `sup |‖Ω‖²_η η^{m−1}/(m−1)! − Ψ|` (coefficients).
pub fn round_trip_residual(psi: &ClosedPsi, g: &MetricField, omega: &HolVolForm) -> f64 {
    balanced_form(g, omega).distance(&psi.form())
}

/// `sup_ℓ,site |τ_ℓ − ∂_ℓ log ‖Ω‖²_η|`; `O(h⁴)` on conformally balanced data.
pub fn tau_residual(g: &MetricField, omega: &HolVolForm) -> Result<f64> {
    let m = g.m();
    let log_norm = g.det().map(|d| Complex64::new(omega.norm_sq_at(d.re).ln(), 0.0));
    let dl: Vec<ScalarField> = (0..m).map(|l| log_norm.d(l)).collect();
    let tau: Vec<Vec<Complex64>> =
        g.point_jets().par_iter().map(|pj| pj.packs().map(|(_, tp, _)| tp.tau)).collect::<Result<_>>()?;
    Ok((0..g.lattice().len())
        .flat_map(|s| (0..m).map(move |l| (s, l)))
        .map(|(s, l)| (tau[s][l] - dl[l].at(s)).norm())
        .fold(0.0, f64::max))
}

/// Conformally balanced data in one call: seeded potential, `Ψ`, root.
pub fn make_balanced(lat: &Arc<TorusLattice>, eps: f64, seed: u64, omega: &HolVolForm) -> Result<MetricField> {
    let psi = build_psi(lat, eps, &seeded_potential(lat, seed))?;
    eta_root(&psi, omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat3(n: usize) -> Arc<TorusLattice> {
        TorusLattice::reduced(3, n, &[0, 2]).unwrap()
    }

    fn cos_phi(lat: &Arc<TorusLattice>) -> ScalarField {
        ScalarField::from_fn(lat, |x| Complex64::new((2.0 * PI * x[0]).cos(), 0.0))
    }

    #[test]
    fn zero_amplitude_gives_the_flat_metric() {
        let lat = lat3(8);
        let psi = build_psi(&lat, 0.0, &seeded_potential(&lat, 1)).unwrap();
        let g = eta_root(&psi, &HolVolForm::unit()).unwrap();
        assert!(g.sup_distance(&MetricField::flat(&lat)) < 1e-15);
    }

    #[test]
    fn cosine_potential_is_closed_and_positive() {
        let lat = lat3(16);
        let psi = build_psi(&lat, 0.05, &cos_phi(&lat)).unwrap();
        assert!(psi.closedness_residual() <= 1e-11, "{}", psi.closedness_residual());
        assert!(psi.dual().iter().all(|d| crate::lattice::min_eigenvalue(d) > 0.0));
    }

    #[test]
    fn large_amplitude_is_rejected_with_a_suggestion() {
        let lat = lat3(16);
        match build_psi(&lat, 1.0, &cos_phi(&lat)) {
            Err(Error::AmplitudeTooLarge { suggest }) => assert_eq!(suggest, 0.5),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn root_round_trips_and_is_balanced_but_not_kahler() {
        let lat = lat3(16);
        let omega = HolVolForm::new(Complex64::new(0.8, 0.6)).unwrap();
        let psi = build_psi(&lat, 0.05, &seeded_potential(&lat, 7)).unwrap();
        let g = eta_root(&psi, &omega).unwrap();
        assert!(round_trip_residual(&psi, &g, &omega) <= 1e-12);
        assert!(balanced_residual(&g, &omega) <= 1e-11, "{}", balanced_residual(&g, &omega));
        assert!(kahler_residual(&g) > 1e-3);
    }

    #[test]
    fn unit_volume_root_is_the_inverse_dual() {
        let lat = lat3(8);
        let psi = build_psi(&lat, 0.05, &seeded_potential(&lat, 3)).unwrap();
        let g = eta_root(&psi, &HolVolForm::unit()).unwrap();
        for s in [0, 5, 40] {
            let inv = psi.dual()[s].clone().try_inverse().unwrap();
            assert!((g.at(s) - inv).camax() < 1e-14);
        }
    }

    #[test]
    fn tau_is_the_log_norm_gradient_to_fourth_order() {
        let err = |n, eps| {
            let lat = lat3(n);
            let g = make_balanced(&lat, eps, 11, &HolVolForm::unit()).unwrap();
            tau_residual(&g, &HolVolForm::unit()).unwrap()
        };
        let (e16, e32) = (err(16, 0.05), err(32, 0.05));
        assert!((3.5..4.5).contains(&(e16 / e32).log2()), "{e16} → {e32}");
        // the defect is a discrete chain-rule error, quadratic in ε
        let small = err(16, 0.005);
        assert!(small <= 1e-6, "{small}");
        assert!((80.0..120.0).contains(&(e16 / small)), "{}", e16 / small);
    }

    #[test]
    fn analytic_hessian_matches_composed_stencils() {
        let lat = TorusLattice::reduced(2, 32, &[0, 1, 3]).unwrap();
        let p = TrigPotential::seeded(&lat, 4, 1.0);
        let f = p.field(&lat);
        for s in [0, 77, 1000] {
            let h = p.hessian(&lat.coords(s));
            for k in 0..2 {
                for j in 0..2 {
                    assert!((f.dbar(k).d(j).at(s) - h[(k, j)]).norm() < 1e-3 * h.camax().max(1.0));
                }
            }
        }
    }

    #[test]
    fn m2_is_refused() {
        let lat = TorusLattice::reduced(2, 8, &[0]).unwrap();
        let psi = build_psi(&lat, 0.05, &cos_phi(&lat)).unwrap();
        assert!(matches!(eta_root(&psi, &HolVolForm::unit()), Err(Error::RescalingDegenerate)));
    }
}
