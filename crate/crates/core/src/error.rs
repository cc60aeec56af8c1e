use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("star-shape violation: radius {radius} at t = {t}")]
    NotStarShaped { t: f64, radius: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("perturbation too large: perturbed curve self-intersects")]
    PerturbationTooLarge,

    #[error("field is not mean-zero (relative weighted mean {0:.3e})")]
    NotMeanZero(f64),

    #[error("evaluation point {index} lies inside or too close to the boundary")]
    NearBoundary { index: usize },

    #[error("discretization too coarse: {0}")]
    DiscretizationTooCoarse(String),

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular contrast: eps_D equals eps_m")]
    SingularContrast,

    #[error("system is singular at lambda = {0}: resonance singularity")]
    ResonanceSingularity(crate::C64),

    #[error("eigenvalues {0} and {1} are degenerate within the gap tolerance")]
    Degenerate(usize, usize),

    #[error("normal equations are singular; a positive regularization parameter is required")]
    RegularizationRequired,

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("undefined posterior: noise level must be positive")]
    UndefinedPosterior,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
