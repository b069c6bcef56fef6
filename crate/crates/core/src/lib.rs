//! Pointwise and lattice computations for Hermitian metrics: exterior algebra,
//! Chern torsion and curvature on Taylor jets, the identity catalogue, and
//! geometric flows on flat tori.

pub mod balanced;
pub mod error;
pub mod flows;
pub mod forms;
pub mod geometry;
pub mod identities;
pub mod lattice;
pub mod series;

pub use error::{Error, Result};
pub use forms::{Dimension, Form, HermitianMetric, StarShape};
pub use num_complex::Complex64;
pub use series::{JetSpace, Series, SeriesMatrix};
pub use identities::{run_suite, IdentityReport, SuiteOptions};
pub use lattice::{FormField, MetricField, ScalarField, Snapshot, TorusLattice};
