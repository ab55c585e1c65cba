//! Iterative MR fingerprinting reconstruction.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! - [`sequence`]: FISP schedule generation, EPG fingerprint simulation,
//!   dictionary assembly and the temporal compression bases.
//! - [`forward`]: the compressed-domain observation operator (coil maps,
//!   Fourier transform, undersampling) and its adjoint.
//! - [`matching`]: Bloch-manifold projection by exhaustive fingerprint matching.
//! - [`tv`]: isotropic total-variation proximal operator (Chambolle dual iterations).
//! - [`solvers`]: classical matching, AIR-style, IGP-MRF and GFB-MRF reconstructions.
//! - [`bench`]: digital phantom, measurement simulation, noise and error metrics.
//! - [`container`]: the `.mrfa` binary array container used for every artifact.

pub mod bench;
pub mod container;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod linalg;
pub mod matching;
pub mod sequence;
pub mod solvers;
pub mod tv;

pub use error::{Error, Result};
pub use geometry::Geometry;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;
