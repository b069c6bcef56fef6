//! Flat `key = value` run descriptions. `#` starts a comment; unknown keys
//! are errors so typos don't silently fall back to defaults.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FlowConfig, FlowKind, Scheme, TimeNormalization};
use crate::balanced::{make_balanced, TrigPotential};
use crate::error::{Error, Result};
use crate::geometry::HolVolForm;
use crate::lattice::{MetricField, Snapshot, TorusLattice};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Flat,
    /// `g = I + ∂∂̄φ` with a seeded trigonometric potential.
    KahlerPotential { amplitude: f64 },
    /// `g = I + a·(random Hermitian trigonometric field)`, generically
    /// non-Kähler.
    Perturbation { amplitude: f64 },
    /// Conformally balanced data built in place.
    Balanced { eps: f64 },
    BalancedFile { path: PathBuf },
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub dimension: usize,
    pub lattice_n: usize,
    /// Active real axes; all axes when the `reduction` key is absent.
    pub reduction: Option<Vec<usize>>,
    pub flow: FlowConfig,
    pub initial: InitialSpec,
    pub seed: u64,
    /// Harness to evaluate on top of the plain run (see [`super::evaluate_checks`]).
    pub checks: Vec<String>,
    /// `tolerance.<name> = value`.
    pub tolerances: BTreeMap<String, f64>,
    pub snapshot_every: usize,
}

pub(crate) const KNOWN_CHECKS: &[&str] =
    &["stationary", "kahler_growth", "balanced_growth", "plateau", "anomaly_equivalence", "torsion_flow", "tsq_inequality"];

fn bad(key: &str, v: &str) -> Error {
    Error::Config(format!("bad value '{v}' for '{key}'"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, v))
}

impl RunSpec {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{}'", i + 1, k.trim())));
            }
        }
        let mut take = |k: &str| kv.remove(k);

        let dimension: usize = num("dimension", &take("dimension").ok_or_else(|| Error::Config("missing 'dimension'".into()))?)?;
        if !(1..=4).contains(&dimension) {
            return Err(Error::Dimension(dimension));
        }
        let lattice_n = take("lattice_n").map_or(Ok(16), |v| num("lattice_n", &v))?;
        let reduction = match take("reduction") {
            None => None,
            Some(v) if v == "full" => None,
            Some(v) => Some(TorusLattice::parse_reduction(dimension, &v)?),
        };
        let mut flow = FlowConfig::default();
        if let Some(v) = take("flow") {
            flow.kind = match v.as_str() {
                "eta" => FlowKind::Eta,
                "kahler_ricci" => FlowKind::KahlerRicci,
                _ => return Err(bad("flow", &v)),
            };
        }
        if let Some(v) = take("time_normalization") {
            flow.normalization = match v.as_str() {
                "unit" => TimeNormalization::Unit,
                "one_over_m_minus_1" => TimeNormalization::OneOverMMinus1,
                _ => return Err(bad("time_normalization", &v)),
            };
        }
        if let Some(v) = take("scheme") {
            flow.scheme = match v.as_str() {
                "rk4" => Scheme::Rk4,
                "euler" => Scheme::Euler,
                _ => return Err(bad("scheme", &v)),
            };
        }
        if let Some(v) = take("dt") {
            flow.dt = num("dt", &v)?;
            if !(flow.dt > 0.0) {
                return Err(bad("dt", &v));
            }
        }
        if let Some(v) = take("steps") {
            flow.steps = num("steps", &v)?;
        }
        if let Some(v) = take("stride") {
            flow.stride = num("stride", &v)?;
        }
        if let Some(v) = take("cfl_safety") {
            flow.cfl_safety = num("cfl_safety", &v)?;
        }
        if let Some(v) = take("singularity_monitors") {
            flow.singularity_monitors = num("singularity_monitors", &v)?;
        }
        if let Some(v) = take("omega") {
            flow.omega = HolVolForm::new(Complex64::new(num("omega", &v)?, 0.0))?;
        }
        let seed = take("seed").map_or(Ok(0), |v| num("seed", &v))?;
        let snapshot_every = take("snapshot_every").map_or(Ok(0), |v| num("snapshot_every", &v))?;
        let checks: Vec<String> = take("checks")
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default();
        if let Some(c) = checks.iter().find(|c| !KNOWN_CHECKS.contains(&c.as_str())) {
            return Err(Error::Config(format!("unknown check '{c}'")));
        }

        let amplitude = |take: &mut dyn FnMut(&str) -> Option<String>| take("initial.amplitude").map_or(Ok(0.1), |v| num("initial.amplitude", &v));
        let kind = take("initial.kind").unwrap_or_else(|| "flat".into());
        let initial = match kind.as_str() {
            "flat" => InitialSpec::Flat,
            "kahler_potential" => InitialSpec::KahlerPotential { amplitude: amplitude(&mut take)? },
            "perturbation" => InitialSpec::Perturbation { amplitude: amplitude(&mut take)? },
            "balanced" => InitialSpec::Balanced { eps: take("initial.eps").map_or(Ok(0.05), |v| num("initial.eps", &v))? },
            "balanced_file" => {
                let p = take("initial.file").ok_or_else(|| Error::Config("balanced_file needs 'initial.file'".into()))?;
                InitialSpec::BalancedFile { path: base.join(p) }
            }
            _ => return Err(bad("initial.kind", &kind)),
        };

        let mut tolerances = BTreeMap::new();
        for (k, v) in std::mem::take(&mut kv) {
            match k.strip_prefix("tolerance.") {
                Some(name) => {
                    tolerances.insert(name.to_string(), num(&k, &v)?);
                }
                None => return Err(Error::Config(format!("unknown key '{k}'"))),
            }
        }
        Ok(Self { dimension, lattice_n, reduction, flow, initial, seed, checks, tolerances, snapshot_every })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn lattice(&self) -> Result<Arc<TorusLattice>> {
        match &self.reduction {
            Some(axes) => TorusLattice::reduced(self.dimension, self.lattice_n, axes),
            None => TorusLattice::full(self.dimension, self.lattice_n),
        }
    }

    pub fn initial_metric(&self) -> Result<MetricField> {
        let lat = self.lattice()?;
        let m = self.dimension;
        match &self.initial {
            InitialSpec::Flat => Ok(MetricField::flat(&lat)),
            InitialSpec::KahlerPotential { amplitude } => {
                let p = TrigPotential::seeded(&lat, self.seed, *amplitude);
                MetricField::from_fn(&lat, |x| DMatrix::identity(m, m) + p.hessian(x))
            }
            InitialSpec::Perturbation { amplitude } => perturbation(&lat, self.seed, *amplitude),
            InitialSpec::Balanced { eps } => make_balanced(&lat, *eps, self.seed, &self.flow.omega),
            InitialSpec::BalancedFile { path } => {
                let s = Snapshot::load(path)?;
                if s.metric.m() != m || s.lattice().n() != self.lattice_n {
                    return Err(Error::Config(format!("{} does not match dimension/lattice_n", path.display())));
                }
                Ok(s.metric)
            }
        }
    }
}

/// `I + a Σ_modes (A cos θ + A* cos θ)` with one seeded Hermitian mode per
/// entry pair; the wave vectors are nonzero on the active axes.
fn perturbation(lat: &Arc<TorusLattice>, seed: u64, a: f64) -> Result<MetricField> {
    let m = lat.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for k in 0..m {
        for j in k..m {
            let wave: Vec<f64> = loop {
                let w: Vec<f64> =
                    (0..2 * m).map(|ax| if lat.is_active(ax) { rng.gen_range(-1i32..=1) as f64 } else { 0.0 }).collect();
                if w.iter().any(|&x| x != 0.0) {
                    break w;
                }
            };
            let c = Complex64::new(rng.gen_range(-1.0..1.0), if k == j { 0.0 } else { rng.gen_range(-1.0..1.0) });
            modes.push((k, j, wave, c, rng.gen_range(0.0..TAU)));
        }
    }
    MetricField::from_fn(lat, |x| {
        let mut g = DMatrix::<Complex64>::identity(m, m);
        for (k, j, wave, c, ph) in &modes {
            let th = TAU * wave.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + ph;
            let v = c * (a * th.cos());
            g[(*k, *j)] += v;
            if k != j {
                g[(*j, *k)] += v.conj();
            }
        }
        g
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunSpec> {
        RunSpec::parse(s, Path::new("."))
    }

    #[test]
    fn full_example_parses() {
        let s = parse(
            "# comment\ndimension = 3\nlattice_n = 16\nreduction = x1,x2\ndt = 2e-5\nsteps = 40\nscheme = rk4\nflow = eta\n\
             time_normalization = one_over_m_minus_1\ninitial.kind = balanced\ninitial.eps = 0.05\nseed = 7\n\
             checks = anomaly_equivalence\ntolerance.anomaly_equivalence = 1e-5\nstride = 5\n",
        )
        .unwrap();
        assert_eq!(s.reduction, Some(vec![0, 2]));
        assert_eq!(s.flow.normalization, TimeNormalization::OneOverMMinus1);
        assert_eq!(s.initial, InitialSpec::Balanced { eps: 0.05 });
        assert_eq!(s.tolerances["anomaly_equivalence"], 1e-5);
        assert_eq!(s.lattice().unwrap().len(), 256);
    }

    #[test]
    fn errors_are_config_errors() {
        for bad in ["steps = 3", "dimension = 2\nfoo = 1", "dimension = 2\ndt = -1", "dimension = 2\nflow = ricci", "dimension = 2\ndt = 1\ndt = 2", "dimension = 2\nchecks = everything"] {
            assert!(matches!(parse(bad), Err(Error::Config(_))), "{bad}");
        }
        assert!(matches!(parse("dimension = 9"), Err(Error::Dimension(9))));
    }

    #[test]
    fn perturbation_is_hermitian_positive_and_seeded() {
        let s = parse("dimension = 2\nlattice_n = 8\nreduction = x1,x2\ninitial.kind = perturbation\ninitial.amplitude = 0.05\nseed = 3").unwrap();
        let a = s.initial_metric().unwrap();
        let b = s.initial_metric().unwrap();
        assert_eq!(a.sup_distance(&b), 0.0);
        assert!(a.sup_distance(&MetricField::flat(a.lattice())) > 1e-3);
        assert!(crate::balanced::kahler_residual(&a) > 1e-3);
    }
}
