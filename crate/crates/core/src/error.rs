use thiserror::Error;

use crate::cft::CftError;
use crate::driver::DriverError;
use crate::gff::GffError;
use crate::io::IoError;
use crate::levelline::LevelLineError;
use crate::loewner::LoewnerError;
use crate::zipper::ZipperError;

/// Crate-level error, one variant per subsystem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("loewner: {0}")]
    Loewner(#[from] LoewnerError),
    #[error("driver: {0}")]
    Driver(#[from] DriverError),
    #[error("zipper: {0}")]
    Zipper(#[from] ZipperError),
    #[error("gff: {0}")]
    Gff(#[from] GffError),
    #[error("level line: {0}")]
    LevelLine(#[from] LevelLineError),
    #[error("cft: {0}")]
    Cft(#[from] CftError),
    #[error("io: {0}")]
    Io(#[from] IoError),
    #[error("experiment: {0}")]
    Experiment(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
