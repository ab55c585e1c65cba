//! The compressed-domain observation operator and its building blocks.

mod coils;
mod fft;
pub mod gridding;
mod model;
mod sampling;

pub use coils::{make_coil_maps, CoilMaps};
pub use fft::Fft2;
pub use model::{CompressedImage, ForwardModel, KSpaceData};
pub use sampling::{
    make_cartesian_scheme, make_spiral_scheme, spiral_angle_deg, CartesianMask, SamplingScheme, SpiralParams,
    SpiralScheme,
};
