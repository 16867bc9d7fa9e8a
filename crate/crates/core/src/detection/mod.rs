//! Exit detection, conditional wave functions and the stopped process.

pub mod collapse;
pub mod geometry;
pub mod process;

pub use collapse::{collapse, collapse_coefficients};
pub use geometry::{classify_exit, BinPartition, DetectorGeometry};
pub use process::{
    first_detection, run_plain_process, run_stopped_process, CollapseEvent, ExitFlags, ExitRecord, OutputSample,
    ProcessMode, RunContext, SampleOutcome, SampleRun,
};
