//! File formats, the random instance generator and experiment drivers.

pub mod experiments;
pub mod generator;
pub mod problem_file;

pub use experiments::{run_centering_profiles, run_step_counts, write_centering, write_step_counts, ExperimentConfig};
pub use generator::generate_random_sdp;
pub use problem_file::ProblemFile;
