use thiserror::Error;

pub type Result<T> = std::result::Result<T, HoloError>;

#[derive(Debug, Error)]
pub enum HoloError {
    /// A pixel coordinate or region does not fit in the array.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// Two fields (or a field and a mask) disagree in size or plane.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The input carries no usable information, e.g. a constant field fed to the dither.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A metric is undefined for the input (zero mean intensity, zero power).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HoloError {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            HoloError::Config(_) | HoloError::Parse(_) | HoloError::Bounds(_) | HoloError::Shape(_) => 2,
            HoloError::Io(_) => 3,
            HoloError::DegenerateInput(_) | HoloError::UndefinedMetric(_) => 4,
        }
    }
}
