use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::forward::{ForwardModel, KSpaceData};
use crate::sequence::{EpgSimulator, SequenceSchedule, TissueGrid};
use crate::{Error, Geometry, Result, C64};

/// Ellipse in normalized coordinates (`[-1, 1]` across the field of view).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub angle_deg: f64,
}

impl Ellipse {
    pub fn contains(&self, u: f64, v: f64) -> bool {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (du, dv) = (u - self.cx, v - self.cy);
        let a = (c * du + s * dv) / self.rx;
        let b = (-s * du + c * dv) / self.ry;
        a * a + b * b <= 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TissueClass {
    pub name: String,
    /// ms
    pub t1: f64,
    /// ms
    pub t2: f64,
    pub pd: f64,
    pub region: Ellipse,
}

impl TissueClass {
    pub fn new(name: &str, t1: f64, t2: f64, pd: f64, region: Ellipse) -> Self {
        TissueClass {
            name: name.into(),
            t1,
            t2,
            pd,
            region,
        }
    }
}

fn ell(cx: f64, cy: f64, rx: f64, ry: f64, angle_deg: f64) -> Ellipse {
    Ellipse {
        cx,
        cy,
        rx,
        ry,
        angle_deg,
    }
}

/// Layered head-like layout: muscle shell, CSF layer, grey matter, white
/// matter, ventricles and deep grey nuclei. Later entries overwrite earlier.
pub fn default_classes() -> Vec<TissueClass> {
    let (wm, gm, csf, mus) = ((790.0, 92.0, 0.7), (1300.0, 110.0, 0.85), (4000.0, 2000.0, 1.0), (900.0, 50.0, 0.6));
    let c = |n, p: (f64, f64, f64), e| TissueClass::new(n, p.0, p.1, p.2, e);
    vec![
        c("muscle", mus, ell(0.0, 0.0, 0.92, 0.8, 0.0)),
        c("csf", csf, ell(0.0, 0.0, 0.84, 0.72, 0.0)),
        c("gm", gm, ell(0.0, 0.0, 0.78, 0.66, 0.0)),
        c("wm", wm, ell(0.0, 0.0, 0.6, 0.5, 0.0)),
        c("csf", csf, ell(-0.18, 0.05, 0.08, 0.22, 15.0)),
        c("csf", csf, ell(0.18, 0.05, 0.08, 0.22, -15.0)),
        c("gm", gm, ell(-0.3, -0.3, 0.12, 0.08, 30.0)),
        c("gm", gm, ell(0.3, -0.3, 0.12, 0.08, -30.0)),
        c("muscle", mus, ell(0.0, 0.4, 0.1, 0.06, 0.0)),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct DigitalPhantom {
    pub nx: usize,
    pub ny: usize,
    /// ms, row-major `ix * ny + iy`; 0 outside the support.
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub pd: Vec<f64>,
    pub support: Vec<bool>,
    pub seed: u64,
}

impl DigitalPhantom {
    pub fn voxels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn scale_pd(&self, c: f64) -> DigitalPhantom {
        DigitalPhantom {
            pd: self.pd.iter().map(|p| p * c).collect(),
            ..self.clone()
        }
    }
}

/// Rasterizes the classes (voxel centres) and modulates PD by a smooth
/// seeded field within +-10%.
pub fn make_phantom(geometry: &Geometry, classes: &[TissueClass], seed: u64) -> Result<DigitalPhantom> {
    let (nx, ny) = (geometry.nx, geometry.ny);
    for c in classes {
        if !(c.t1 >= c.t2 && c.t2 > 0.0 && c.pd > 0.0) {
            return Err(Error::NonPhysical { t1: c.t1, t2: c.t2 });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let n = nx * ny;
    let mut p = DigitalPhantom {
        nx,
        ny,
        t1: vec![0.0; n],
        t2: vec![0.0; n],
        pd: vec![0.0; n],
        support: vec![false; n],
        seed,
    };
    for ix in 0..nx {
        for iy in 0..ny {
            let u = 2.0 * (ix as f64 + 0.5) / nx as f64 - 1.0;
            let v = 2.0 * (iy as f64 + 0.5) / ny as f64 - 1.0;
            let i = ix * ny + iy;
            let Some(c) = classes.iter().rev().find(|c| c.region.contains(u, v)) else {
                continue;
            };
            let mod_field: f64 = waves.iter().map(|&(a, b, ph)| (std::f64::consts::PI * (a * u + b * v) + ph).sin()).sum::<f64>() / 3.0;
            p.t1[i] = c.t1;
            p.t2[i] = c.t2;
            p.pd[i] = c.pd * (1.0 + 0.1 * mod_field);
            p.support[i] = true;
        }
    }
    Ok(p)
}

fn nearest(values: &[f64], v: f64) -> f64 {
    values
        .iter()
        .copied()
        .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
        .unwrap_or(v)
}

/// Fingerprint images `N x L`: each voxel is `pd * fingerprint(T1, T2)`.
/// With `snap`, the relaxation times are first moved to the nearest grid
/// values (used to isolate quantization).
pub fn phantom_frames(
    phantom: &DigitalPhantom,
    schedule: &SequenceSchedule,
    snap: Option<&TissueGrid>,
) -> Result<Array2<C64>> {
    let sim = EpgSimulator::default();
    let key = |i: usize| {
        let (mut t1, mut t2) = (phantom.t1[i], phantom.t2[i]);
        if let Some(g) = snap {
            t1 = nearest(&g.t1_values, t1);
            t2 = nearest(&g.t2_values, t2);
        }
        (t1.to_bits(), t2.to_bits())
    };
    let mut cache: BTreeMap<(u64, u64), Vec<C64>> = BTreeMap::new();
    let mut frames = Array2::zeros((phantom.voxels(), schedule.len()));
    for i in 0..phantom.voxels() {
        if !phantom.support[i] || phantom.pd[i] == 0.0 {
            continue;
        }
        let k = key(i);
        if !cache.contains_key(&k) {
            let fp = sim.simulate(schedule, f64::from_bits(k.0), f64::from_bits(k.1), 1.0)?;
            cache.insert(k, fp);
        }
        let fp = &cache[&k];
        let pd = phantom.pd[i];
        for (dst, s) in frames.row_mut(i).iter_mut().zip(fp) {
            *dst = s * pd;
        }
    }
    Ok(frames)
}

/// Measurements of the phantom through the full (uncompressed) model.
pub fn simulate_measurements(
    phantom: &DigitalPhantom,
    schedule: &SequenceSchedule,
    model: &ForwardModel,
    snap: Option<&TissueGrid>,
) -> Result<KSpaceData> {
    let g = model.geometry();
    if (g.nx, g.ny) != (phantom.nx, phantom.ny) || g.frames != schedule.len() {
        return Err(Error::DimensionMismatch(format!(
            "phantom {}x{} with L={} vs geometry {}x{} L={}",
            phantom.nx,
            phantom.ny,
            schedule.len(),
            g.nx,
            g.ny,
            g.frames
        )));
    }
    model.forward_frames(&phantom_frames(phantom, schedule, snap)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-component standard deviation as a fraction of the largest |sample|.
    pub relative_std: f64,
    pub seed: u64,
}

/// Adds i.i.d. complex Gaussian noise.
pub fn add_noise(y: &KSpaceData, spec: &NoiseSpec) -> Result<KSpaceData> {
    if !(spec.relative_std >= 0.0) || !spec.relative_std.is_finite() {
        return Err(Error::InvalidArgument(format!("relative std {} must be >= 0", spec.relative_std)));
    }
    if spec.relative_std == 0.0 {
        return Ok(y.clone());
    }
    let peak = y.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sigma = spec.relative_std * peak;
    if sigma == 0.0 {
        return Ok(y.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = y.clone();
    for z in out.samples.iter_mut() {
        *z += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(out)
}
