use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grating: {0}")]
    InvalidGrating(String),

    #[error("grid too coarse: {samples:.2} samples per period, at least {minimum} required")]
    Undersampled { samples: f64, minimum: f64 },

    #[error("argument outside the supported envelope: {0}")]
    OutOfEnvelope(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series did not converge within {0} terms")]
    NoConvergence(usize),

    #[error("series lost too much precision to cancellation (term/sum ratio {0:.3e})")]
    PrecisionLoss(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("profile has no interior maximum (not a donut)")]
    NotADonut,

    #[error("curves are not compatible: {0}")]
    Mismatch(String),

    #[error("resolution convolution has already been applied to this curve")]
    ResolutionAlreadyApplied,

    #[error("least-squares design is rank deficient")]
    RankDeficient,

    #[error("objective is flat over the search range; data carries no depth contrast")]
    FlatObjective,

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::PrecisionLoss(_)
                | Error::NonFinite(_)
                | Error::NotADonut
                | Error::RankDeficient
                | Error::FlatObjective
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
