use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid depth {0}: depth must be positive")]
    InvalidDepth(f64),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid viewing ray: {0}")]
    InvalidRay(String),
    #[error("unknown FPN level {level} (have {available})")]
    UnknownLevel { level: usize, available: usize },
    #[error("degenerate depth scale: sigma must be nonzero")]
    DegenerateScale,
    #[error("unknown class {class} (have {available})")]
    UnknownClass { class: usize, available: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid temperature {0}: must be positive")]
    InvalidTemperature(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value in loss term `{term}`: {value}")]
    NonFinite { term: &'static str, value: f64 },
    #[error("no pose for camera {0:?}")]
    MissingPose(Option<usize>),
    #[error("no valid ground-truth pixels")]
    EmptyMask,
    #[error("AP undefined: no ground truth for class {0}")]
    UndefinedAp(usize),
    #[error("depth map io: {0}")]
    Io(String),
}
