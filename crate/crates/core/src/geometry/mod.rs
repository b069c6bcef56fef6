//! Chern geometry of a metric at a point, from its Taylor jet.

mod chern;
mod dagger;
mod jet;
mod pointwise;
mod tensor;
mod volume;

pub use chern::{norm11_sq, Chern, CurvaturePack, TorsionPack};
pub use dagger::{chern_laplacian, del_dagger, del_dagger_general, form_to_tensor, tensor_to_form};
pub use jet::{potential_hessian, MetricJet};
pub use pointwise::PointJet;
pub use tensor::{Slot, Tensor};
pub use volume::{omega_factor, omega_norm, rescale_to_eta, rescale_to_omega, HolVolForm};
