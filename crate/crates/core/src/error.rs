use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map has a pole at the evaluation point (|cz+d| = {0:.3e})")]
    PoleOfMap(f64),
    #[error("point {0} is not inside the {1} model")]
    OutsideModel(String, &'static str),
    #[error("matrix is not in SL2(R): determinant {0}")]
    BadDeterminant(f64),
    #[error("branch of (h')^s is ambiguous: {0}")]
    BranchAmbiguity(String),
    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),
    #[error("generator {index} is not hyperbolic (|trace| = {trace})")]
    NonHyperbolic { index: usize, trace: f64 },
    #[error("isometric circles {0} and {1} intersect; not a Schottky realization")]
    CirclesIntersect(usize, usize),
    #[error("generator {0} has no isometric circle (c = 0)")]
    NoIsometricCircle(usize),
    #[error("boundary point {0} lies outside every coding interval")]
    NotInCodingDomain(f64),
    #[error("operation requires a non-elementary group (rank >= 2), got rank {0}")]
    Elementary(usize),
    #[error("word-sum and eigenvalue dimension estimates disagree: {word_sum} vs {eigenvalue}")]
    EstimatorDisagreement { word_sum: f64, eigenvalue: f64 },
    #[error("Re(s) = {re} is outside the convergence region Re(s) > {bound}")]
    Region { re: f64, bound: f64 },
    #[error("contour passes through a zero of Z after {0} nudges")]
    ContourThroughZero(usize),
    #[error("winding number {0} is not close to an integer (subdivision limit hit)")]
    NonIntegerWinding(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("length spectrum cannot be certified complete up to {needed} (certified to {certified})")]
    IncompleteSpectrum { needed: f64, certified: f64 },
    #[error("resonance set covers |Im s| <= {have}, but the test function tail requires {need}")]
    Coverage { have: f64, need: f64 },
    #[error("search budget of {budget} nodes exceeded (partial count {partial})")]
    SearchBudget { budget: u64, partial: u64 },
    #[error("degenerate fit: {points} points for {coefficients} coefficients")]
    DegenerateFit { points: usize, coefficients: usize },
    #[error("invalid group file: {0}")]
    GroupFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
