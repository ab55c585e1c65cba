//! k-space sampling schemes.
//!
//! Every scheme factors `M F` into a per-channel transform onto a k-space
//! grid (`to_grid`, FFT-based) and a per-time-point stencil that reads `S`
//! samples from that grid. The compressed forward model mixes channels at
//! the stencil stage, so only `k` FFTs are needed per coil.

use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::container::{meta, ArrayData, Meta};
use crate::forward::fft::Fft2;
use crate::forward::gridding::KbGridder;
use crate::{Error, Geometry, Result, C64};

/// Variable-density random Cartesian masks, one per time point.
#[derive(Clone, Debug)]
pub struct CartesianMask {
    pub nx: usize,
    pub ny: usize,
    /// `L x S` flat k-space indices (FFT ordering, DC at 0), ascending per row.
    pub indices: Array2<usize>,
    pub reduction: f64,
    pub seed: u64,
    fft: Fft2,
}

/// Single-shot variable-density spiral per TR, rotated from TR to TR,
/// evaluated by Kaiser-Bessel gridding.
#[derive(Clone, Debug)]
pub struct SpiralScheme {
    pub nx: usize,
    pub ny: usize,
    /// `L x S x 2` sample coordinates in cycles/pixel.
    pub coords: Array3<f64>,
    /// Radial density compensation weight per readout sample.
    pub dcf: Vec<f64>,
    /// Cumulative rotation angle per TR, degrees.
    pub angles_deg: Vec<f64>,
    pub params: SpiralParams,
    gridder: KbGridder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpiralParams {
    /// Interleaves needed for full sampling at the k-space edge.
    pub interleaves: usize,
    /// Rotation increment from TR to TR, degrees.
    pub rotation_deg: f64,
    /// Extra rotation added every `interleaves` TRs, degrees.
    pub bump_deg: f64,
    /// Undersampling ratio of one interleaf at the k-space center.
    pub inner_ratio: f64,
    /// Undersampling ratio of one interleaf at the k-space edge.
    pub outer_ratio: f64,
}

impl Default for SpiralParams {
    fn default() -> Self {
        SpiralParams {
            interleaves: 48,
            rotation_deg: 82.5,
            bump_deg: 1.5,
            inner_ratio: 24.0,
            outer_ratio: 48.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SamplingScheme {
    Cartesian(CartesianMask),
    Spiral(SpiralScheme),
}

/// Grid locations and weights contributing to one sample.
pub(crate) struct Stencil {
    pub idx: [usize; 16],
    pub w: [f64; 16],
    pub n: usize,
}

fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Variable-density random masks keeping `ceil(N / R)` locations per time
/// point, always including the central `ceil(nx/16) x ceil(ny/16)` block.
pub fn make_cartesian_scheme(geometry: &Geometry, reduction: f64, seed: u64) -> Result<SamplingScheme> {
    if !(reduction >= 1.0) || !reduction.is_finite() {
        return Err(Error::InvalidArgument(format!("undersampling ratio {reduction} < 1")));
    }
    let (nx, ny, frames) = (geometry.nx, geometry.ny, geometry.frames);
    let n = nx * ny;
    let samples = ((n as f64 / reduction).ceil() as usize).clamp(1, n);
    let (cx, cy) = (nx.div_ceil(16) as i64, ny.div_ceil(16) as i64);

    let mut center = Vec::new();
    let mut outer = Vec::new();
    for ix in 0..nx {
        for iy in 0..ny {
            let (fx, fy) = (signed_freq(ix, nx), signed_freq(iy, ny));
            let in_block = fx >= -(cx / 2) && fx < cx - cx / 2 && fy >= -(cy / 2) && fy < cy - cy / 2;
            let rho = ((fx as f64 / (nx as f64 / 2.0)).powi(2) + (fy as f64 / (ny as f64 / 2.0)).powi(2)).sqrt()
                / std::f64::consts::SQRT_2;
            let idx = ix * ny + iy;
            if in_block {
                center.push((idx, rho));
            } else {
                outer.push((idx, (1.0 - rho).max(0.0).powi(2) + 0.05));
            }
        }
    }
    center.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Array2::zeros((frames, samples));
    for t in 0..frames {
        let mut keep: Vec<usize> = if samples == n {
            (0..n).collect()
        } else if samples <= center.len() {
            center[..samples].iter().map(|c| c.0).collect()
        } else {
            let mut k: Vec<usize> = center.iter().map(|c| c.0).collect();
            let extra = outer
                .choose_multiple_weighted(&mut rng, samples - center.len(), |item| item.1)
                .map_err(|e| Error::InvalidArgument(format!("mask sampling: {e}")))?;
            k.extend(extra.map(|item| item.0));
            k
        };
        keep.sort_unstable();
        for (s, idx) in keep.into_iter().enumerate() {
            indices[[t, s]] = idx;
        }
    }
    Ok(SamplingScheme::Cartesian(CartesianMask {
        nx,
        ny,
        indices,
        reduction,
        seed,
        fft: Fft2::new(nx, ny),
    }))
}

/// Cumulative rotation for TR `t`: `rotation_deg` per TR plus `bump_deg`
/// every `interleaves` TRs.
pub fn spiral_angle_deg(params: &SpiralParams, t: usize) -> f64 {
    let bumps = t / params.interleaves.max(1);
    params.rotation_deg * t as f64 + params.bump_deg * bumps as f64
}

/// Base interleaf for an `n`-pixel field of view: points spaced at most half
/// a Nyquist step apart, radius capped at 0.5 cycles/pixel.
fn spiral_interleaf(n: usize, params: &SpiralParams) -> Vec<(f64, f64)> {
    let kmax = 0.5;
    let ds = 0.5 / n as f64;
    let spacing = |r: f64| {
        let blend = ((r / kmax - 0.25) / 0.75).clamp(0.0, 1.0);
        (params.inner_ratio + (params.outer_ratio - params.inner_ratio) * blend) / n as f64
    };
    let mut pts = vec![(0.0, 0.0)];
    let (mut r, mut theta) = (0.0f64, 0.0f64);
    let mut travelled = 0.0;
    let mut last = (0.0, 0.0);
    let dtheta = 1e-3;
    loop {
        let dr = spacing(r) / std::f64::consts::TAU * dtheta;
        let (nr, nt) = (r + dr, theta + dtheta);
        if nr > kmax {
            break;
        }
        let p = (nr * nt.cos(), nr * nt.sin());
        travelled += ((p.0 - last.0).powi(2) + (p.1 - last.1).powi(2)).sqrt();
        last = p;
        r = nr;
        theta = nt;
        if travelled >= ds {
            pts.push(p);
            travelled = 0.0;
        }
    }
    pts
}

/// Spiral scheme with one interleaf per TR.
pub fn make_spiral_scheme(geometry: &Geometry, params: SpiralParams) -> Result<SamplingScheme> {
    if geometry.nx != geometry.ny {
        return Err(Error::InvalidArgument("spiral sampling needs a square geometry".into()));
    }
    if params.interleaves == 0 {
        return Err(Error::InvalidArgument("interleaves must be >= 1".into()));
    }
    let n = geometry.nx;
    let base = spiral_interleaf(n, &params);
    let samples = base.len();
    let frames = geometry.frames;
    let angles_deg: Vec<f64> = (0..frames).map(|t| spiral_angle_deg(&params, t)).collect();
    let mut coords = Array3::zeros((frames, samples, 2));
    for (t, a) in angles_deg.iter().enumerate() {
        let (s, c) = a.to_radians().sin_cos();
        for (i, &(kx, ky)) in base.iter().enumerate() {
            coords[[t, i, 0]] = c * kx - s * ky;
            coords[[t, i, 1]] = s * kx + c * ky;
        }
    }
    let floor = 0.5 / n as f64;
    let raw: Vec<f64> = base.iter().map(|(x, y)| (x * x + y * y).sqrt().max(floor)).collect();
    let top = raw.iter().cloned().fold(0.0, f64::max);
    let dcf = raw.iter().map(|w| w / top).collect();
    Ok(SamplingScheme::Spiral(SpiralScheme {
        nx: n,
        ny: n,
        coords,
        dcf,
        angles_deg,
        params,
        gridder: KbGridder::new(n, n),
    }))
}

impl SamplingScheme {
    pub fn frames(&self) -> usize {
        match self {
            SamplingScheme::Cartesian(m) => m.indices.nrows(),
            SamplingScheme::Spiral(s) => s.coords.shape()[0],
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            SamplingScheme::Cartesian(m) => m.indices.ncols(),
            SamplingScheme::Spiral(s) => s.coords.shape()[1],
        }
    }

    pub fn image_dims(&self) -> (usize, usize) {
        match self {
            SamplingScheme::Cartesian(m) => (m.nx, m.ny),
            SamplingScheme::Spiral(s) => (s.nx, s.ny),
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            SamplingScheme::Cartesian(_) => "cartesian",
            SamplingScheme::Spiral(_) => "spiral",
        }
    }

    /// Keeps the first `frames` time points.
    pub fn truncate(&self, frames: usize) -> SamplingScheme {
        let frames = frames.min(self.frames());
        match self {
            SamplingScheme::Cartesian(m) => SamplingScheme::Cartesian(CartesianMask {
                indices: m.indices.slice(ndarray::s![..frames, ..]).to_owned(),
                ..m.clone()
            }),
            SamplingScheme::Spiral(s) => SamplingScheme::Spiral(SpiralScheme {
                coords: s.coords.slice(ndarray::s![..frames, .., ..]).to_owned(),
                angles_deg: s.angles_deg[..frames].to_vec(),
                ..s.clone()
            }),
        }
    }

    pub(crate) fn grid_len(&self) -> usize {
        match self {
            SamplingScheme::Cartesian(m) => m.nx * m.ny,
            SamplingScheme::Spiral(s) => s.gridder.grid_len(),
        }
    }

    /// Image (row-major `nx x ny`) onto the k-space grid.
    pub(crate) fn to_grid(&self, img: &[C64], grid: &mut [C64]) {
        match self {
            SamplingScheme::Cartesian(m) => {
                let scale = 1.0 / ((m.nx * m.ny) as f64).sqrt();
                for (g, v) in grid.iter_mut().zip(img) {
                    *g = v * scale;
                }
                m.fft.forward(grid);
            }
            SamplingScheme::Spiral(s) => s.gridder.to_grid(img, grid),
        }
    }

    /// Adjoint of [`SamplingScheme::to_grid`]; `grid` is used as scratch.
    pub(crate) fn from_grid(&self, grid: &mut [C64], img: &mut [C64]) {
        match self {
            SamplingScheme::Cartesian(m) => {
                m.fft.inverse(grid);
                let scale = 1.0 / ((m.nx * m.ny) as f64).sqrt();
                for (v, g) in img.iter_mut().zip(grid.iter()) {
                    *v = g * scale;
                }
            }
            SamplingScheme::Spiral(s) => s.gridder.from_grid(grid, img),
        }
    }

    pub(crate) fn stencil(&self, t: usize, s: usize) -> Stencil {
        match self {
            SamplingScheme::Cartesian(m) => {
                let mut st = Stencil {
                    idx: [0; 16],
                    w: [0.0; 16],
                    n: 1,
                };
                st.idx[0] = m.indices[[t, s]];
                st.w[0] = 1.0;
                st
            }
            SamplingScheme::Spiral(sp) => {
                let mut st = sp.gridder.stencil(sp.coords[[t, s, 0]], sp.coords[[t, s, 1]]);
                let w = sp.dcf[s].sqrt();
                st.w.iter_mut().for_each(|x| *x *= w);
                st
            }
        }
    }

    pub fn to_container(&self) -> (ArrayData, Meta) {
        match self {
            SamplingScheme::Cartesian(m) => {
                let arr = m.indices.mapv(|i| i as i64).into_dyn();
                let me = meta([
                    ("kind", serde_json::json!("scheme")),
                    ("variant", "cartesian".into()),
                    ("R", m.reduction.into()),
                    ("seed", m.seed.into()),
                    ("nx", m.nx.into()),
                    ("ny", m.ny.into()),
                ]);
                (ArrayData::I64(arr), me)
            }
            SamplingScheme::Spiral(s) => {
                let (frames, samples) = (s.coords.shape()[0], s.coords.shape()[1]);
                let arr = Array3::from_shape_fn((frames, samples, 3), |(t, i, c)| {
                    if c < 2 {
                        s.coords[[t, i, c]]
                    } else {
                        s.dcf[i]
                    }
                });
                let me = meta([
                    ("kind", serde_json::json!("scheme")),
                    ("variant", "spiral".into()),
                    ("interleaves", s.params.interleaves.into()),
                    ("rotation_deg", s.params.rotation_deg.into()),
                    ("bump_deg", s.params.bump_deg.into()),
                    ("inner_ratio", s.params.inner_ratio.into()),
                    ("outer_ratio", s.params.outer_ratio.into()),
                    ("nx", s.nx.into()),
                    ("ny", s.ny.into()),
                ]);
                (ArrayData::F64(arr.into_dyn()), me)
            }
        }
    }

    pub fn from_container(arr: ArrayData, m: &Meta) -> Result<SamplingScheme> {
        let get = |k: &str| {
            m.get(k)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::Header(format!("scheme meta missing {k}")))
        };
        let nx = get("nx")? as usize;
        let ny = get("ny")? as usize;
        match m.get("variant").and_then(|v| v.as_str()) {
            Some("cartesian") => {
                let a = arr
                    .into_i64()?
                    .into_dimensionality::<ndarray::Ix2>()
                    .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
                if a.iter().any(|&i| i < 0 || i as usize >= nx * ny) {
                    return Err(Error::Header("mask index out of range".into()));
                }
                Ok(SamplingScheme::Cartesian(CartesianMask {
                    nx,
                    ny,
                    indices: a.mapv(|i| i as usize),
                    reduction: get("R")?,
                    seed: m.get("seed").and_then(|v| v.as_u64()).unwrap_or(0),
                    fft: Fft2::new(nx, ny),
                }))
            }
            Some("spiral") => {
                let a = arr
                    .into_f64()?
                    .into_dimensionality::<ndarray::Ix3>()
                    .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
                let params = SpiralParams {
                    interleaves: get("interleaves")? as usize,
                    rotation_deg: get("rotation_deg")?,
                    bump_deg: get("bump_deg")?,
                    inner_ratio: get("inner_ratio")?,
                    outer_ratio: get("outer_ratio")?,
                };
                let frames = a.shape()[0];
                Ok(SamplingScheme::Spiral(SpiralScheme {
                    nx,
                    ny,
                    coords: a.slice(ndarray::s![.., .., ..2]).to_owned(),
                    dcf: a.slice(ndarray::s![0, .., 2]).to_vec(),
                    angles_deg: (0..frames).map(|t| spiral_angle_deg(&params, t)).collect(),
                    params,
                    gridder: KbGridder::new(nx, ny),
                }))
            }
            other => Err(Error::Header(format!("unknown scheme variant {other:?}"))),
        }
    }
}
