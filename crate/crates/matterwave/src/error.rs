use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two")]
    GridSizeNotPowerOfTwo(usize),
    #[error("grid needs at least 8 points, got {0}")]
    GridTooSmall(usize),
    #[error("grid length must be positive, got {0}")]
    GridLengthNotPositive(f64),
    #[error(
        "momentum headroom violated: Nyquist momentum {nyquist:.3} must exceed 2k + 10/gamma = {required:.3}; \
         increase grid points or shrink the box"
    )]
    MomentumHeadroom { nyquist: f64, required: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("orbital seed is numerically degenerate with the condensate orbital (residual norm {residual:.3e})")]
    DegenerateSeed { residual: f64 },
    #[error("pulse left orbital overlap |<phi1|phi2>| = {overlap:.3} > 0.5; orthogonalized orbitals no longer resemble the input pair")]
    PulseOverlapTooLarge { overlap: f64 },
    #[error("norm drifted by {drift:.3e} at t = {t:.4} (limit {limit:.1e})")]
    NormDrift { t: f64, drift: f64, limit: f64 },
    #[error("orbital orthonormality drifted by {drift:.3e} at t = {t:.4} (limit {limit:.1e})")]
    OrthonormalityDrift { t: f64, drift: f64, limit: f64 },
    #[error("energy drifted by relative {drift:.3e} at t = {t:.4} (limit {limit:.1e})")]
    EnergyDrift { t: f64, drift: f64, limit: f64 },
    #[error("state became non-finite at t = {t:.4}")]
    NonFiniteState { t: f64 },
    #[error("imaginary-time relaxation did not converge within {steps} steps (last |dE|/dtau = {last_rate:.3e})")]
    RelaxationStalled { steps: usize, last_rate: f64 },
    #[error("adaptive step size underflowed at t = {t:.6} (dt = {dt:.3e})")]
    StepSizeUnderflow { t: f64, dt: f64 },
    #[error("visibility {nu:.4} exceeds 2/3; outside the two-mode interference model")]
    VisibilityOutOfRange { nu: f64 },
    #[error("trajectory covers [{t_first:.3}, {t_last:.3}] but re-collision search needs [{lo:.3}, {hi:.3}]")]
    RecollisionWindowNotCovered { t_first: f64, t_last: f64, lo: f64, hi: f64 },
    #[error("side clouds not separated: density at window boundary is {boundary_fraction:.3e} of peak (limit 1e-3)")]
    CloudsNotSeparated { boundary_fraction: f64 },
    #[error("occupation counts {n1} + {n2} do not match particle number {n}")]
    OccupationMismatch { n1: usize, n2: usize, n: usize },
    #[error("field length {len} does not match grid size {n}")]
    LengthMismatch { len: usize, n: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tags an error with the protocol stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
