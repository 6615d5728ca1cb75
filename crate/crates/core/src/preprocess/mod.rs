//! Region segmentation and direction correction.

mod hough;
mod image;
mod orientation;
mod raster;
mod rotate;
mod segment;

pub use hough::{accumulate, angle_distance_mod180, hough_lines, line_angle_from_normal, local_maxima, Accumulator, HoughParams, HoughPeak};
pub use image::{FixtureFile, Frame, GroundTruth, RawTicketImage, ScoredBox};
pub use orientation::{
    detect_rotation, HoughOrientationClassifier, OracleRotationClassifier, RotationClassifier, ANCHOR_TOP_BAND,
};
pub use raster::{EdgeRaster, PixelList};
pub use rotate::{build_rotation_training_set, correct_direction, correction_angle, rotate_clockwise, RotationEstimate};
pub use segment::{dedup_boxes, segment_regions, DEDUP_OVERLAP};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("no ticket region detected")]
    NoTicketRegion,
    #[error("edge raster has no set pixels")]
    EmptyRaster,
    #[error("n_class must be at least 2, got {0}")]
    InvalidClassCount(u32),
    #[error("rotation classifier unavailable: {0}")]
    ClassifierUnavailable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
