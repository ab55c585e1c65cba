use ndarray::{Array3, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::container::{meta, ArrayData, Meta};
use crate::{Error, Geometry, Result, C64};

/// Coil sensitivities, `C x nx x ny`, with `sum_c |S_c|^2 = 1` at every voxel.
#[derive(Clone, Debug, PartialEq)]
pub struct CoilMaps {
    pub maps: Array3<C64>,
}

impl CoilMaps {
    pub fn coils(&self) -> usize {
        self.maps.shape()[0]
    }

    pub fn map(&self, c: usize) -> ArrayView2<'_, C64> {
        self.maps.index_axis(ndarray::Axis(0), c)
    }

    pub fn to_container(&self, seed: u64) -> (ArrayData, Meta) {
        let m = meta([
            ("kind", serde_json::json!("coils")),
            ("coils", self.coils().into()),
            ("seed", seed.into()),
        ]);
        (ArrayData::C128(self.maps.clone().into_dyn()), m)
    }

    pub fn from_container(arr: ArrayData) -> Result<CoilMaps> {
        let maps = arr
            .into_c128()?
            .into_dimensionality::<ndarray::Ix3>()
            .map_err(|e| Error::DimensionMismatch(format!("coil maps: {e}")))?;
        Ok(CoilMaps { maps })
    }
}

/// Smooth Gaussian-lobed complex sensitivities placed around the field of view.
///
/// A single coil is the all-ones map.
pub fn make_coil_maps(geometry: &Geometry, coils: usize, seed: u64) -> Result<CoilMaps> {
    if coils == 0 {
        return Err(Error::InvalidArgument("coil count must be >= 1".into()));
    }
    let (nx, ny) = (geometry.nx, geometry.ny);
    if coils == 1 {
        return Ok(CoilMaps {
            maps: Array3::from_elem((1, nx, ny), C64::new(1.0, 0.0)),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    let radius = 0.6 * nx.max(ny) as f64 / 2.0;
    let width = 0.45 * nx.max(ny) as f64;
    let mut maps = Array3::zeros((coils, nx, ny));
    for c in 0..coils {
        let angle = std::f64::consts::TAU * c as f64 / coils as f64 + rng.gen_range(-0.2..0.2);
        let (px, py) = (cx + radius * angle.cos(), cy + radius * angle.sin());
        let phase0 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (gx, gy) = (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
        for ix in 0..nx {
            for iy in 0..ny {
                let dx = ix as f64 - px;
                let dy = iy as f64 - py;
                let mag = (-(dx * dx + dy * dy) / (2.0 * width * width)).exp();
                let phase = phase0 + gx * ix as f64 + gy * iy as f64;
                maps[[c, ix, iy]] = C64::from_polar(mag, phase);
            }
        }
    }
    for ix in 0..nx {
        for iy in 0..ny {
            let total: f64 = (0..coils).map(|c| maps[[c, ix, iy]].norm_sqr()).sum::<f64>().sqrt();
            for c in 0..coils {
                maps[[c, ix, iy]] /= total;
            }
        }
    }
    Ok(CoilMaps { maps })
}
