use rayon::prelude::*;

use super::FlowConfig;
use crate::balanced::{balanced_residual, kahler_residual};
use crate::geometry::{norm11_sq, omega_norm, rescale_to_omega, Chern, MetricJet};
use crate::lattice::{min_eigenvalue, MetricField};

pub const CSV_HEADER: &str =
    "t,maxT2,maxTau2,maxRm2,maxRic,maxRtilde,minEig,omegaNormMin,omegaNormMax,balancedRes,kahlerRes,singEta,singOmega";

/// Per-step monitors. `omega_norm_*` are `‖Ω‖²_η`; singularity monitors are
/// `NaN` when not computed (small grids, `m < 3` for the `ω` version).
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub max_t2: f64,
    pub max_tau2: f64,
    pub max_rm2: f64,
    pub max_ric: f64,
    pub max_rtilde: f64,
    pub min_eig: f64,
    pub omega_norm_min: f64,
    pub omega_norm_max: f64,
    pub balanced_res: f64,
    pub kahler_res: f64,
    pub sing_eta: f64,
    pub sing_omega: f64,
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

impl DiagnosticsRow {
    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.max_t2,
            self.max_tau2,
            self.max_rm2,
            self.max_ric,
            self.max_rtilde,
            self.min_eig,
            self.omega_norm_min,
            self.omega_norm_max,
            self.balanced_res,
            self.kahler_res,
            self.sing_eta,
            self.sing_omega,
        ]
    }

    /// 17 significant digits per column.
    pub fn csv_line(&self) -> String {
        self.values().iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
    }
}

struct SiteStats {
    t2: f64,
    tau2: f64,
    rm2: f64,
    ric: f64,
    rtilde: f64,
    eig: f64,
    onorm: f64,
}

/// `|Rm|² + |T|² + |∇T|²` of a jet (order ≥ 2), with `∇T` the full Chern
/// covariant derivative (both types).
fn blowup_terms(jet: &MetricJet) -> crate::error::Result<(f64, f64, f64)> {
    let ch = Chern::new(jet)?;
    let g = jet.metric();
    let rm = ch.curvature()?.value().norm_sq(g);
    let t = ch.torsion.value().norm_sq(g);
    let nt = ch.nabla(&ch.torsion)?.value().norm_sq(g) + ch.nabla_bar(&ch.torsion)?.value().norm_sq(g);
    Ok((rm, t, nt))
}

/// `(sing_eta, sing_omega)` at one site.
pub(crate) fn singularity_at(jet: &MetricJet, cfg: &FlowConfig) -> (f64, f64) {
    let eta = blowup_terms(jet).map(|(a, b, c)| a + b + c).unwrap_or(f64::NAN);
    let omega = if jet.dim() >= 3 {
        rescale_to_omega(jet, &cfg.omega)
            .and_then(|w| {
                let n2 = omega_norm(&w, &cfg.omega);
                blowup_terms(&w).map(|(rm, t, nt)| rm / n2 + t / n2.sqrt() + nt / n2)
            })
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    (eta, omega)
}

pub fn diagnostics(cfg: &FlowConfig, g: &MetricField, t: f64) -> DiagnosticsRow {
    let stats: Vec<SiteStats> = g
        .point_jets()
        .par_iter()
        .map(|pj| {
            let eig = min_eigenvalue(&pj.g);
            match pj.packs() {
                Ok((metric, tp, cp)) => SiteStats {
                    t2: tp.norm_t_sq,
                    tau2: tp.norm_tau_sq,
                    rm2: cp.rm_norm_sq,
                    ric: norm11_sq(&metric, &cp.ric).sqrt(),
                    rtilde: norm11_sq(&metric, &cp.rtilde).sqrt(),
                    eig,
                    onorm: cfg.omega.norm_sq_at(metric.det()),
                },
                Err(_) => SiteStats { t2: f64::NAN, tau2: f64::NAN, rm2: f64::NAN, ric: f64::NAN, rtilde: f64::NAN, eig, onorm: f64::NAN },
            }
        })
        .collect();
    let max = |f: &dyn Fn(&SiteStats) -> f64| stats.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min = |f: &dyn Fn(&SiteStats) -> f64| stats.iter().map(f).fold(f64::INFINITY, f64::min);
    let (sing_eta, sing_omega) = match (cfg.singularity_monitors, g.jets(2)) {
        (true, Ok(jets)) => {
            let v: Vec<(f64, f64)> = jets.par_iter().map(|j| singularity_at(j, cfg)).collect();
            (v.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max), v.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max))
        }
        _ => (f64::NAN, f64::NAN),
    };
    DiagnosticsRow {
        t,
        max_t2: max(&|s| s.t2),
        max_tau2: max(&|s| s.tau2),
        max_rm2: max(&|s| s.rm2),
        max_ric: max(&|s| s.ric),
        max_rtilde: max(&|s| s.rtilde),
        min_eig: min(&|s| s.eig),
        omega_norm_min: min(&|s| s.onorm),
        omega_norm_max: max(&|s| s.onorm),
        balanced_res: balanced_residual(g, &cfg.omega),
        kahler_res: kahler_residual(g),
        sing_eta,
        sing_omega: if sing_omega == f64::NEG_INFINITY { f64::NAN } else { sing_omega },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HolVolForm;
    use crate::lattice::TorusLattice;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn header_matches_row_width() {
        let lat = TorusLattice::reduced(2, 8, &[0]).unwrap();
        let row = diagnostics(&FlowConfig::default(), &MetricField::flat(&lat), 0.0);
        assert_eq!(CSV_HEADER.split(',').count(), row.csv_line().split(',').count());
        assert_eq!(row.max_t2, 0.0);
        assert_eq!(row.kahler_res, 0.0);
        assert!(row.sing_omega.is_nan());
        let x = row.csv_line();
        assert!(x.starts_with("0.0000000000000000e0,"), "{x}");
    }

    #[test]
    fn monitors_agree_when_the_volume_norm_is_constant() {
        // det g ≡ 1 along the jet makes ‖Ω‖ constant, so η = cω and each term
        // of the ω-criterion equals its η counterpart.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let jet = MetricJet::random(3, 2, 0.1, &mut rng);
        let unit = jet.times(&jet.matrix().det().powf(-1.0 / 3.0)).unwrap();
        let omega = HolVolForm::new(Complex64::new(3.0, 0.0)).unwrap();
        let cfg = FlowConfig { omega, ..Default::default() };
        let (e, w) = singularity_at(&unit, &cfg);
        assert!(e > 1e-3);
        assert!((e - w).abs() <= 1e-12 * e, "{e} vs {w}");
    }
}
