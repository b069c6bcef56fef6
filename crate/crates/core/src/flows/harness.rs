//! Residual checks for equations implied by the flow, evaluated on the
//! integrated trajectory. Time derivatives are 5-point centered differences
//! over consecutive states, so time error is `O(dt⁴)` and residuals are
//! dominated by the `O(h⁴)` spatial error.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{check, step, FlowConfig, FlowKind, TimeNormalization};
use crate::balanced::{kahler_residual, weighted_eta_power};
use crate::error::{Error, Result};
use crate::forms::{Coeff, Form};
use crate::lattice::{lattice_del_dagger, FormField, MetricField, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualPoint {
    pub t: f64,
    /// Sup-norm of `lhs − rhs`.
    pub residual: f64,
    /// `max(|lhs|∞, |rhs|∞)`.
    pub scale: f64,
}

impl ResidualPoint {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale.max(1e-300)
    }
}

fn centered<T>(q: &[T], dt: f64, lin: impl Fn(&T, f64) -> T, add: impl Fn(&T, &T) -> T) -> T {
    // (q₋₂ − 8q₋₁ + 8q₁ − q₂) / 12dt
    let w = 1.0 / (12.0 * dt);
    let a = add(&lin(&q[0], w), &lin(&q[1], -8.0 * w));
    let b = add(&lin(&q[3], 8.0 * w), &lin(&q[4], -w));
    add(&a, &b)
}

fn d_dt_form(q: &[FormField], dt: f64) -> FormField {
    centered(q, dt, |f, s| f.scale_re(s), |a, b| a.add_form(b))
}

fn d_dt_scalar(q: &[ScalarField], dt: f64) -> ScalarField {
    centered(q, dt, |f, s| f.scale(Complex64::from(s)), |a, b| a.add_ref(b))
}

/// Integrates and calls `f(window, t_center)` on each 5-state window whose
/// center step is a multiple of `every`.
fn scan<R>(cfg: &FlowConfig, initial: &MetricField, every: usize, mut f: impl FnMut(&[MetricField], f64) -> R) -> Result<Vec<R>> {
    let mut win: VecDeque<MetricField> = VecDeque::with_capacity(5);
    win.push_back(initial.clone());
    let mut out = Vec::new();
    for n in 1..=cfg.steps {
        let next = step(cfg, win.back().unwrap());
        if let Some(h) = check(cfg, &next) {
            return Err(Error::Halted { step: n, reason: format!("{h:?}") });
        }
        win.push_back(next);
        if win.len() > 5 {
            win.pop_front();
        }
        if win.len() == 5 && (n - 2) % every.max(1) == 0 {
            let states: Vec<MetricField> = win.iter().cloned().collect();
            out.push(f(&states, (n - 2) as f64 * cfg.dt));
        }
    }
    Ok(out)
}

fn residual(lhs: &FormField, rhs: &FormField, t: f64) -> ResidualPoint {
    ResidualPoint { t, residual: lhs.distance(rhs), scale: lhs.max_abs().max(rhs.max_abs()) }
}

/// `∂ₜ(‖Ω‖²_η η^{m−1})` against `i∂∂̄(‖Ω‖²_η η^{m−2})` along an η-flow run
/// with the `1/(m−1)` normalization from conformally balanced data.
pub fn anomaly_equivalence(cfg: &FlowConfig, initial: &MetricField, every: usize) -> Result<Vec<ResidualPoint>> {
    let m = initial.m();
    if m < 3 {
        return Err(Error::RescalingDegenerate);
    }
    if cfg.kind != FlowKind::Eta || cfg.normalization != TimeNormalization::OneOverMMinus1 {
        return Err(Error::Config("anomaly equivalence needs flow = eta with time_normalization = one_over_m_minus_1".into()));
    }
    scan(cfg, initial, every, |w, t| {
        let q: Vec<FormField> = w.iter().map(|g| weighted_eta_power(g, &cfg.omega, m - 1)).collect();
        let lhs = d_dt_form(&q, cfg.dt);
        let rhs = weighted_eta_power(&w[2], &cfg.omega, m - 2).delbar().del().scale(Complex64::i());
        residual(&lhs, &rhs, t)
    })
}

/// `T = i∂η` as a lattice `(2,1)`-form: `−∂(g_{k̄j} dz^j∧dz̄^k)`.
pub(crate) fn torsion_field(g: &MetricField) -> FormField {
    let m = g.m();
    Form::from_11(m, |k, j| g.comp(k, j).clone()).del().scale_re(-1.0)
}

/// `(τ̄·T)_{ᾱβ} = τ̄^γ T_{ᾱβγ}` as a `(1,1)`-form field.
fn tau_bar_t(g: &MetricField) -> Result<FormField> {
    let m = g.m();
    let sites: Vec<Form> = g
        .point_jets()
        .par_iter()
        .map(|pj| pj.packs().map(|(_, tp, _)| Form::from_11(m, |a, b| tp.tau_t[(a, b)])))
        .collect::<Result<_>>()?;
    Ok(FormField::from_sites(g.lattice(), &sites))
}

/// `∂ₜT` against `c(−∂∂†T + ∂(τ̄·T))` along an η-flow run.
pub fn torsion_flow_residual(cfg: &FlowConfig, initial: &MetricField, every: usize) -> Result<Vec<ResidualPoint>> {
    if cfg.kind != FlowKind::Eta {
        return Err(Error::Config("torsion flow residual needs flow = eta".into()));
    }
    let c = cfg.factor(initial.m());
    let out = scan(cfg, initial, every, |w, t| -> Result<ResidualPoint> {
        let q: Vec<FormField> = w.iter().map(torsion_field).collect();
        let lhs = d_dt_form(&q, cfg.dt);
        let g = &w[2];
        let tt = &q[2];
        let rhs = tau_bar_t(g)?.del().sub_form(&lattice_del_dagger(g, tt).del()).scale_re(c);
        Ok(residual(&lhs, &rhs, t))
    })?;
    out.into_iter().collect()
}

#[derive(Clone, Debug)]
pub struct TsqReport {
    /// Smallest `C` with `((m−1)∂ₜ − Δ_c)|T|² ≤ C|T|²(|T|² + |Rm|)` at every
    /// site where the right-hand side is resolved.
    pub fitted_c: f64,
    /// Sites (over all windows) where the right-hand side is below the
    /// resolution floor but the left-hand side is positive beyond it.
    pub unresolved_violations: usize,
    /// Per window: `(t, max lhs, max |T|²(|T|² + |Rm|))`.
    pub series: Vec<(f64, f64, f64)>,
}

/// Monitors the maximum-principle inequality for `|T|²`.
pub fn tsq_inequality(cfg: &FlowConfig, initial: &MetricField, every: usize) -> Result<TsqReport> {
    let c = cfg.factor(initial.m());
    let per: Vec<Result<(f64, Vec<(f64, f64)>)>> = scan(cfg, initial, every, |w, t| {
        let packs = |g: &MetricField| -> Result<Vec<(f64, f64)>> {
            g.point_jets().par_iter().map(|pj| pj.packs().map(|(_, tp, cp)| (tp.norm_t_sq, cp.rm_norm_sq.sqrt()))).collect()
        };
        let all: Vec<Vec<(f64, f64)>> = w.iter().map(packs).collect::<Result<_>>()?;
        let lat = w[2].lattice();
        let t2: Vec<ScalarField> =
            all.iter().map(|v| ScalarField::from_values(lat, v.iter().map(|x| Complex64::from(x.0)).collect())).collect();
        let dt_t2 = d_dt_scalar(&t2, cfg.dt);
        let lap = t2[2].chern_laplacian(&w[2]);
        let sites = (0..lat.len()).map(|s| ((dt_t2.at(s) / c - lap.at(s)).re, all[2][s].0 * (all[2][s].0 + all[2][s].1))).collect();
        Ok((t, sites))
    })?;
    let per: Vec<(f64, Vec<(f64, f64)>)> = per.into_iter().collect::<Result<_>>()?;
    let rmax = per.iter().flat_map(|(_, v)| v.iter().map(|x| x.1)).fold(0.0, f64::max);
    let lmax = per.iter().flat_map(|(_, v)| v.iter().map(|x| x.0.abs())).fold(0.0, f64::max);
    let floor = 1e-10 * rmax;
    let mut fitted_c: f64 = 0.0;
    let mut unresolved = 0;
    for (_, v) in &per {
        for &(l, r) in v {
            if r > floor {
                fitted_c = fitted_c.max(l / r);
            } else if l > 1e-8 * lmax.max(1e-300) {
                unresolved += 1;
            }
        }
    }
    let series = per
        .iter()
        .map(|(t, v)| (*t, v.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max), v.iter().map(|x| x.1).fold(0.0, f64::max)))
        .collect();
    Ok(TsqReport { fitted_c, unresolved_violations: unresolved, series })
}

/// Informational: `(m−1)∂ₜτ_j` against `−□τ_j + ∂_j(|τ|² + ½|T|²)` with
/// `□τ_j = g^{pq̄}∇_p∇_q̄τ_j` (Chern connection). The trace convention of `□`
/// is not pinned down, so this is reported, never asserted.
pub fn tau_flow_residual(cfg: &FlowConfig, initial: &MetricField, every: usize) -> Result<Vec<ResidualPoint>> {
    let m = initial.m();
    let c = cfg.factor(m);
    let out = scan(cfg, initial, every, |w, t| -> Result<ResidualPoint> {
        let lat = w[2].lattice();
        let taus = |g: &MetricField| -> Result<Vec<ScalarField>> {
            let v: Vec<(Vec<Complex64>, f64, f64)> = g
                .point_jets()
                .par_iter()
                .map(|pj| pj.packs().map(|(_, tp, _)| (tp.tau.clone(), tp.norm_tau_sq, tp.norm_t_sq)))
                .collect::<Result<_>>()?;
            let mut f: Vec<ScalarField> =
                (0..m).map(|j| ScalarField::from_values(lat, v.iter().map(|x| x.0[j]).collect())).collect();
            f.push(ScalarField::from_values(lat, v.iter().map(|x| Complex64::from(x.1 + 0.5 * x.2)).collect()));
            Ok(f)
        };
        let all: Vec<Vec<ScalarField>> = w.iter().map(taus).collect::<Result<_>>()?;
        let g = &w[2];
        let pjs = g.point_jets();
        let ginv = g.inverses();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..m {
            let series: Vec<ScalarField> = all.iter().map(|v| v[j].clone()).collect();
            let lhs = d_dt_scalar(&series, cfg.dt).scale(Complex64::from(1.0 / c));
            let dbar_tau: Vec<Vec<ScalarField>> = (0..m).map(|q| (0..m).map(|s| all[2][s].dbar(q)).collect()).collect();
            let dd: Vec<Vec<ScalarField>> = (0..m).map(|p| (0..m).map(|q| dbar_tau[q][j].d(p)).collect()).collect();
            let potential = all[2][m].d(j);
            let box_tau: Vec<Complex64> = (0..lat.len())
                .into_par_iter()
                .map(|site| {
                    let gi: &DMatrix<Complex64> = &ginv[site];
                    let mut acc = Complex64::default();
                    for p in 0..m {
                        for q in 0..m {
                            // ∇_p(∇_q̄ τ_j) = ∂_p∂̄_q τ_j − Γ^s_{pj} ∂̄_q τ_s
                            let mut v = dd[p][q].at(site);
                            for s in 0..m {
                                let gamma: Complex64 = (0..m).map(|r| gi[(s, r)] * pjs[site].dg[p][(r, j)]).sum();
                                v -= gamma * dbar_tau[q][s].at(site);
                            }
                            acc += gi[(p, q)] * v;
                        }
                    }
                    acc
                })
                .collect();
            let rhs = ScalarField::from_values(lat, box_tau).scale(Complex64::from(-1.0)).add_ref(&potential);
            worst = worst.max(lhs.zip(&rhs, |a, b| a - b).max_abs());
            scale = scale.max(lhs.max_abs()).max(rhs.max_abs());
        }
        Ok(ResidualPoint { t, residual: worst, scale })
    })?;
    out.into_iter().collect()
}

/// Initial, final and maximum of the balanced residual over a run's rows.
pub fn balanced_growth(rows: &[super::DiagnosticsRow]) -> (f64, f64, f64) {
    let first = rows.first().map_or(f64::NAN, |r| r.balanced_res);
    let last = rows.last().map_or(f64::NAN, |r| r.balanced_res);
    let max = rows.iter().map(|r| r.balanced_res).fold(f64::NEG_INFINITY, f64::max);
    (first, last, max)
}

/// Steps two configurations in lockstep from the same data; per step
/// `(t, sup distance of the metrics, ‖dη‖∞ of the first trajectory)`.
pub fn trajectory_distance(a: &FlowConfig, b: &FlowConfig, initial: &MetricField) -> Result<Vec<(f64, f64, f64)>> {
    let (mut ga, mut gb) = (initial.clone(), initial.clone());
    let mut out = vec![(0.0, 0.0, kahler_residual(initial))];
    for n in 1..=a.steps.min(b.steps) {
        ga = step(a, &ga);
        gb = step(b, &gb);
        for (cfg, g) in [(a, &ga), (b, &gb)] {
            if let Some(h) = check(cfg, g) {
                return Err(Error::Halted { step: n, reason: format!("{h:?}") });
            }
        }
        out.push((n as f64 * a.dt, ga.sup_distance(&gb), kahler_residual(&ga)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::wavy_field;
    use super::*;
    use crate::lattice::TorusLattice;

    #[test]
    fn lattice_torsion_matches_pointwise_packs() {
        let lat = TorusLattice::reduced(2, 16, &[0, 2]).unwrap();
        let g = wavy_field(&lat, 0.1);
        let t = torsion_field(&g);
        for (s, pj) in g.point_jets().iter().enumerate().step_by(29) {
            let (_, tp, _) = pj.packs().unwrap();
            assert!(t.at(s).distance(&tp.form) < 1e-12);
        }
    }

    #[test]
    fn centered_difference_is_exact_on_quartics() {
        let q: Vec<ScalarField> = (-2..=2)
            .map(|k| {
                let x = 0.3 + 0.1 * k as f64;
                let lat = TorusLattice::reduced(1, 8, &[0]).unwrap();
                ScalarField::constant(&lat, Complex64::from(x.powi(4) - 2.0 * x * x * x))
            })
            .collect();
        let d = d_dt_scalar(&q, 0.1).at(0).re;
        let x: f64 = 0.3;
        assert!((d - (4.0 * x.powi(3) - 6.0 * x * x)).abs() < 1e-12);
    }

    #[test]
    fn flat_runs_have_zero_residuals() {
        let lat = TorusLattice::reduced(3, 8, &[0, 2]).unwrap();
        let g = MetricField::flat(&lat);
        let cfg = FlowConfig { normalization: TimeNormalization::OneOverMMinus1, dt: 1e-4, steps: 5, ..Default::default() };
        for p in anomaly_equivalence(&cfg, &g, 1).unwrap() {
            assert_eq!(p.residual, 0.0);
        }
        for p in torsion_flow_residual(&cfg, &g, 1).unwrap() {
            assert_eq!(p.residual, 0.0);
        }
    }
}
