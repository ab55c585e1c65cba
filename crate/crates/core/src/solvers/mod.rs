//! Reconstruction engines: the zero-filled baseline, matched gradient
//! iterations, the incremental gradient-proximal family and the generalized
//! forward-backward scheme, with their step-size strategies.

mod config;
mod iterate;
mod ops;
mod recon;
mod step;

pub use crate::matching::TissueMaps;
pub use config::{table_variants, DataScaling, Method, SolverConfig, StepStrategy};
pub use iterate::{initial_alpha, run_loop, IterRecord, LoopOptions, SolverState, Splitting};
pub use ops::{BlochProjector, DictionaryProjector, IdentityProjector, IdentityProx, SpatialProx, TvProx};
pub use recon::{
    air_mrf, autocalibrate, classical_mrf, data_scale, gfb_mrf, igp_mrf, run_recon, ReconContext, ReconOutput,
};
pub use step::{
    backtrack_check, backtrack_check_with, backtrack_conditions, gradient_metric, rescale_alpha, BacktrackOutcome,
};
