use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("complex dimension {0} outside supported range 1..=6")]
    Dimension(usize),
    #[error("contraction exceeds degree: Λ^{q} on a form of bidegree ({p},{p_bar})")]
    ContractionExceedsDegree { q: usize, p: usize, p_bar: usize },
    #[error("star shape {shape} needs m >= {need}, got m = {m}")]
    ShapeNeedsDimension { shape: &'static str, need: usize, m: usize },
    #[error("payload of bidegree ({0},{1}) does not match the star shape")]
    PayloadBidegree(usize, usize),
    #[error("metric not invertible")]
    NotInvertible,
    #[error("metric not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("metric not positive definite")]
    NotPositive,
    #[error("rescaling degenerate at m=2: ‖Ω‖²_η ≡ 1 cannot be solved for ‖Ω‖_ω")]
    RescalingDegenerate,
    #[error("insufficient jet order: need {need}, have {have}")]
    InsufficientJetOrder { need: u8, have: u8 },
    #[error("unsupported bidegree ({0},{1})")]
    UnsupportedBidegree(usize, usize),
    #[error("stencil needs {need} points per axis, lattice has {have}")]
    StencilTooWide { need: usize, have: usize },
    #[error("lattice size n = {0} must be even and at least 8")]
    LatticeSize(usize),
    #[error("amplitude too large: Ψ not positive at some site; try eps = {suggest}")]
    AmplitudeTooLarge { suggest: f64 },
    #[error("holomorphic volume form coefficient must be nonzero")]
    ZeroVolumeForm,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("flow halted at step {step}: {reason}")]
    Halted { step: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
