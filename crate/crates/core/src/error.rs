use alloc::string::String;

/// Errors produced by the geometry, image, and estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("too few points: need at least {required}, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("degenerate point configuration")]
    DegenerateConfiguration,
    #[error("homography is singular")]
    SingularHomography,
    #[error("point maps to infinity")]
    PointAtInfinity,
    #[error("camera intrinsics are invalid or singular")]
    SingularIntrinsics,
    #[error("polygon is self-intersecting")]
    SelfIntersectingPolygon,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(&'static str),
    #[error("crop rectangle exceeds the image bounds")]
    CropOutOfBounds,
    #[error("crop polygon is not an axis-aligned integer rectangle")]
    NonRectangularCrop,
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid augmentation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no boundary found: {found} transitions, need at least 3")]
    NoBoundaryFound { found: usize },
    #[error("circle fit produced a non-positive squared radius")]
    NegativeRadicand,
    #[error("circle crop is smaller than 2x2 pixels")]
    DegenerateCrop,
    #[error("no consensus: best model has {best} inliers, need {required}")]
    NoConsensus { best: usize, required: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("frame source: {0}")]
    Source(String),
}

pub type Result<T> = core::result::Result<T, Error>;
