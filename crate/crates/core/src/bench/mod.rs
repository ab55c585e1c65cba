//! Synthetic phantom bench: ground truth, measurement simulation, noise,
//! error metrics and parameter sweeps.

mod metrics;
mod phantom;
mod sweep;

pub use metrics::{relative_error, roi_stats, RoiStats};
pub use phantom::{
    add_noise, default_classes, make_phantom, phantom_frames, simulate_measurements, DigitalPhantom, Ellipse,
    NoiseSpec, TissueClass,
};
pub use sweep::{
    noise_seed, parse_method_label, run_sweep, run_sweep_with, SweepCell, SweepResults, SweepRow, SweepSetup,
    SweepSpec,
};
