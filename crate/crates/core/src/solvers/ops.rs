//! Proximal operators plugged into the iteration loops.

use crate::forward::CompressedImage;
use crate::matching::{match_image, CompressedDictionary, MatchResult};
use crate::tv::{tv_prox, TVConfig};
use crate::{Geometry, Result};

/// Projection onto the (discretized) Bloch cone.
pub trait BlochProjector: Sync {
    /// Projected image, plus the matching that produced it if any.
    fn project(&self, z: &CompressedImage) -> Result<(CompressedImage, Option<MatchResult>)>;
}

/// Spatial proximal operator `prox_{weight R}`.
pub trait SpatialProx: Sync {
    fn prox(&self, z: &CompressedImage, weight: f64) -> Result<CompressedImage>;
}

/// Exhaustive fingerprint matching with re-synthesis.
pub struct DictionaryProjector<'a>(pub &'a CompressedDictionary);

impl BlochProjector for DictionaryProjector<'_> {
    fn project(&self, z: &CompressedImage) -> Result<(CompressedImage, Option<MatchResult>)> {
        let m = match_image(z, self.0)?;
        Ok((m.resynthesized.clone(), Some(m)))
    }
}

pub struct IdentityProjector;

impl BlochProjector for IdentityProjector {
    fn project(&self, z: &CompressedImage) -> Result<(CompressedImage, Option<MatchResult>)> {
        Ok((z.clone(), None))
    }
}

pub struct TvProx {
    pub config: TVConfig,
    pub geometry: Geometry,
}

impl SpatialProx for TvProx {
    fn prox(&self, z: &CompressedImage, weight: f64) -> Result<CompressedImage> {
        tv_prox(z, &self.config.with_weight(weight), &self.geometry)
    }
}

pub struct IdentityProx;

impl SpatialProx for IdentityProx {
    fn prox(&self, z: &CompressedImage, _weight: f64) -> Result<CompressedImage> {
        Ok(z.clone())
    }
}
