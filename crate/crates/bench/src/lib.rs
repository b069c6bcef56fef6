//! Shared fixtures for the criterion benches under benches/.

use std::path::Path;

use hermflow::flows::RunSpec;
use hermflow::MetricField;

/// Seeded non-Kähler metric on the `x1,x2` slice of an `m`-torus.
pub fn perturbed(m: usize, n: usize) -> (RunSpec, MetricField) {
    let text = format!(
        "dimension = {m}\nlattice_n = {n}\nreduction = x1,x2\ninitial.kind = perturbation\ninitial.amplitude = 0.05\nseed = 1\ndt = 1e-5\n"
    );
    let spec = RunSpec::parse(&text, Path::new(".")).expect("valid fixture");
    let g = spec.initial_metric().expect("positive fixture");
    (spec, g)
}
