use std::sync::Arc;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::container::{meta, ArrayData, Meta};
use crate::forward::{CoilMaps, SamplingScheme};
use crate::linalg::{inner, norm, norm_sqr};
use crate::sequence::CompressionBasis;
use crate::{Error, Geometry, Result, C64};

/// Image in the compressed temporal domain, `N x k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedImage {
    pub data: Array2<C64>,
    pub basis_id: String,
}

impl CompressedImage {
    pub fn zeros(voxels: usize, rank: usize, basis_id: impl Into<String>) -> Self {
        CompressedImage {
            data: Array2::zeros((voxels, rank)),
            basis_id: basis_id.into(),
        }
    }

    pub fn voxels(&self) -> usize {
        self.data.nrows()
    }

    pub fn rank(&self) -> usize {
        self.data.ncols()
    }

    pub fn with_data(&self, data: Array2<C64>) -> Self {
        CompressedImage {
            data,
            basis_id: self.basis_id.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Measured samples, `C x L x S`.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceData {
    pub samples: Array3<C64>,
}

impl KSpaceData {
    pub fn zeros(coils: usize, frames: usize, samples: usize) -> Self {
        KSpaceData {
            samples: Array3::zeros((coils, frames, samples)),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.samples.dim()
    }

    /// Keeps the first `frames` time points.
    pub fn truncate(&self, frames: usize) -> KSpaceData {
        KSpaceData {
            samples: self.samples.slice(ndarray::s![.., ..frames, ..]).to_owned(),
        }
    }

    pub fn to_container(&self) -> (ArrayData, Meta) {
        let (c, l, s) = self.dims();
        let m = meta([
            ("kind", serde_json::json!("kspace")),
            ("coils", c.into()),
            ("L", l.into()),
            ("S", s.into()),
        ]);
        (ArrayData::C128(self.samples.clone().into_dyn()), m)
    }

    pub fn from_container(arr: ArrayData) -> Result<KSpaceData> {
        let samples = arr
            .into_c128()?
            .into_dimensionality::<ndarray::Ix3>()
            .map_err(|e| Error::DimensionMismatch(format!("k-space: {e}")))?;
        Ok(KSpaceData { samples })
    }
}

/// The observation operator `G = M F S C^H` acting on compressed images.
///
/// With basis `V` (`L x k`), time frame `t` of a compressed image `X_c` is
/// `X_c conj(V[t, :])^T`. Fourier transforms run on the `k` compressed
/// channels; the mixing to `L` time points happens at the sampling stencil.
#[derive(Clone, Debug)]
pub struct ForwardModel {
    geometry: Geometry,
    coils: Arc<CoilMaps>,
    scheme: Arc<SamplingScheme>,
    basis: Array2<C64>,
    basis_id: String,
}

impl ForwardModel {
    pub fn new(
        geometry: Geometry,
        coils: CoilMaps,
        scheme: SamplingScheme,
        basis: &CompressionBasis,
        basis_id: impl Into<String>,
    ) -> Result<Self> {
        Self::from_shared(geometry, Arc::new(coils), Arc::new(scheme), basis, basis_id)
    }

    pub fn from_shared(
        geometry: Geometry,
        coils: Arc<CoilMaps>,
        scheme: Arc<SamplingScheme>,
        basis: &CompressionBasis,
        basis_id: impl Into<String>,
    ) -> Result<Self> {
        let (nx, ny) = scheme.image_dims();
        if (nx, ny) != (geometry.nx, geometry.ny) {
            return Err(Error::DimensionMismatch(format!(
                "scheme image {nx}x{ny} vs geometry {}x{}",
                geometry.nx, geometry.ny
            )));
        }
        if scheme.frames() != geometry.frames || scheme.samples() != geometry.samples {
            return Err(Error::DimensionMismatch(format!(
                "scheme has {} frames x {} samples, geometry {} x {}",
                scheme.frames(),
                scheme.samples(),
                geometry.frames,
                geometry.samples
            )));
        }
        let cm = coils.maps.shape();
        if cm[0] != geometry.coils || cm[1] != nx || cm[2] != ny {
            return Err(Error::DimensionMismatch(format!("coil maps {cm:?} vs geometry")));
        }
        if basis.frames() != geometry.frames {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} frames, geometry {}",
                basis.frames(),
                geometry.frames
            )));
        }
        Ok(ForwardModel {
            geometry: geometry.with_rank(basis.rank()),
            coils,
            scheme,
            basis: basis.vectors.clone(),
            basis_id: basis_id.into(),
        })
    }

    /// Same coils and sampling with a different temporal basis.
    pub fn with_basis(&self, basis: &CompressionBasis, basis_id: impl Into<String>) -> Result<Self> {
        Self::from_shared(self.geometry, self.coils.clone(), self.scheme.clone(), basis, basis_id)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn coils(&self) -> &CoilMaps {
        &self.coils
    }

    pub fn basis(&self) -> &Array2<C64> {
        &self.basis
    }

    pub fn basis_id(&self) -> &str {
        &self.basis_id
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn zero_image(&self) -> CompressedImage {
        CompressedImage::zeros(self.geometry.voxels(), self.rank(), self.basis_id.clone())
    }

    fn check_image(&self, x: &CompressedImage) -> Result<()> {
        if x.data.dim() != (self.geometry.voxels(), self.rank()) {
            return Err(Error::DimensionMismatch(format!(
                "image {:?}, expected ({}, {})",
                x.data.dim(),
                self.geometry.voxels(),
                self.rank()
            )));
        }
        Ok(())
    }

    fn check_data(&self, y: &KSpaceData) -> Result<()> {
        let g = &self.geometry;
        if y.dims() != (g.coils, g.frames, g.samples) {
            return Err(Error::DimensionMismatch(format!(
                "k-space {:?}, expected ({}, {}, {})",
                y.dims(),
                g.coils,
                g.frames,
                g.samples
            )));
        }
        Ok(())
    }

    /// Per-coil k-space grids of each compressed channel: `grids[j]`.
    fn channel_grids(&self, x: &CompressedImage, coil: usize) -> Vec<Vec<C64>> {
        let n = self.geometry.voxels();
        let map = self.coils.map(coil);
        let map = map.as_slice().expect("standard layout");
        (0..self.rank())
            .into_par_iter()
            .map(|j| {
                let img: Vec<C64> = (0..n).map(|v| map[v] * x.data[[v, j]]).collect();
                let mut grid = vec![C64::new(0.0, 0.0); self.scheme.grid_len()];
                self.scheme.to_grid(&img, &mut grid);
                grid
            })
            .collect()
    }

    pub fn forward(&self, x: &CompressedImage) -> Result<KSpaceData> {
        self.check_image(x)?;
        let g = &self.geometry;
        let k = self.rank();
        let mut y = KSpaceData::zeros(g.coils, g.frames, g.samples);
        let conj_basis = self.basis.mapv(|z| z.conj());
        for c in 0..g.coils {
            let grids = self.channel_grids(x, c);
            let mut out = y.samples.index_axis_mut(ndarray::Axis(0), c);
            out.axis_iter_mut(ndarray::Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(t, mut row)| {
                    let weights = conj_basis.row(t);
                    for s in 0..g.samples {
                        let st = self.scheme.stencil(t, s);
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..st.n {
                            let mut mixed = C64::new(0.0, 0.0);
                            for j in 0..k {
                                mixed += grids[j][st.idx[i]] * weights[j];
                            }
                            acc += mixed * st.w[i];
                        }
                        row[s] = acc;
                    }
                });
        }
        Ok(y)
    }

    pub fn adjoint(&self, y: &KSpaceData) -> Result<CompressedImage> {
        self.check_data(y)?;
        let g = &self.geometry;
        let n = g.voxels();
        let k = self.rank();
        let glen = self.scheme.grid_len();
        let mut x = self.zero_image();
        for c in 0..g.coils {
            // Channel-major accumulation grids, filled in time order.
            let mut acc = vec![vec![C64::new(0.0, 0.0); glen]; k];
            for t in 0..g.frames {
                let weights = self.basis.row(t);
                for s in 0..g.samples {
                    let v = y.samples[[c, t, s]];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let st = self.scheme.stencil(t, s);
                    for j in 0..k {
                        let vj = v * weights[j];
                        let grid = &mut acc[j];
                        for i in 0..st.n {
                            grid[st.idx[i]] += vj * st.w[i];
                        }
                    }
                }
            }
            let map = self.coils.map(c);
            let map = map.as_slice().expect("standard layout");
            let images: Vec<Vec<C64>> = acc
                .into_par_iter()
                .map(|mut grid| {
                    let mut img = vec![C64::new(0.0, 0.0); n];
                    self.scheme.from_grid(&mut grid, &mut img);
                    img
                })
                .collect();
            for (j, img) in images.iter().enumerate() {
                for v in 0..n {
                    x.data[[v, j]] += map[v].conj() * img[v];
                }
            }
        }
        Ok(x)
    }

    /// `G^H G x`.
    pub fn normal(&self, x: &CompressedImage) -> Result<CompressedImage> {
        self.adjoint(&self.forward(x)?)
    }

    /// Samples an uncompressed `N x L` image series frame by frame, one FFT
    /// per coil and time point. This is the reference path the compressed
    /// operator must agree with, and the one used to simulate measurements.
    pub fn forward_frames(&self, frames: &Array2<C64>) -> Result<KSpaceData> {
        let g = &self.geometry;
        if frames.dim() != (g.voxels(), g.frames) {
            return Err(Error::DimensionMismatch(format!(
                "frames {:?}, expected ({}, {})",
                frames.dim(),
                g.voxels(),
                g.frames
            )));
        }
        let n = g.voxels();
        let mut y = KSpaceData::zeros(g.coils, g.frames, g.samples);
        for c in 0..g.coils {
            let map = self.coils.map(c);
            let map = map.as_slice().expect("standard layout");
            let mut out = y.samples.index_axis_mut(ndarray::Axis(0), c);
            out.axis_iter_mut(ndarray::Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(t, mut row)| {
                    let img: Vec<C64> = (0..n).map(|v| map[v] * frames[[v, t]]).collect();
                    let mut grid = vec![C64::new(0.0, 0.0); self.scheme.grid_len()];
                    self.scheme.to_grid(&img, &mut grid);
                    for s in 0..g.samples {
                        let st = self.scheme.stencil(t, s);
                        row[s] = (0..st.n).map(|i| grid[st.idx[i]] * st.w[i]).sum();
                    }
                });
        }
        Ok(y)
    }

    /// Largest eigenvalue of `G^H G` by power iteration from a seeded start.
    pub fn spectral_radius(&self, iterations: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = self.zero_image();
        x.data.mapv_inplace(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let nx = norm(&x.data);
            if nx == 0.0 {
                return Ok(0.0);
            }
            x.data.mapv_inplace(|z| z / nx);
            let ax = self.normal(&x)?;
            lambda = inner(&x.data, &ax.data).re;
            x = ax;
        }
        Ok(lambda)
    }

    /// `||Y - G x||^2`.
    pub fn fidelity(&self, x: &CompressedImage, y: &KSpaceData) -> Result<f64> {
        let gx = self.forward(x)?;
        Ok(norm_sqr(&(&y.samples - &gx.samples)))
    }
}
