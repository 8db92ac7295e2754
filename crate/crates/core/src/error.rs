use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("point {re}{im:+}i lies on the focal segment [-{f0}, {f0}] where the branch is ambiguous")]
    OnFocalSegment { re: f64, im: f64, f0: f64 },
    #[error("point is too close to the focal segment: distance {dist:.3e} < {min:.3e}")]
    TooCloseToFocalSegment { dist: f64, min: f64 },
    #[error("point is too close to the droplet boundary: distance {dist:.3e} < {min:.3e}")]
    TooCloseToBoundary { dist: f64, min: f64 },
    #[error("offset |X|+|Y| = {radius:.3e} exceeds the locality radius {limit:.3e}")]
    OutsideLocality { radius: f64, limit: f64 },
    #[error("cost limit exceeded: {0}")]
    CostLimit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
