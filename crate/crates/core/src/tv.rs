//! Isotropic total-variation proximal operator (Chambolle dual projection).
//!
//! Each compressed channel is denoised on its own. Within a channel the real
//! and imaginary parts share one isotropic magnitude, so the gradient at a
//! voxel is the 4-vector `(dx re, dy re, dx im, dy im)`. Differences are
//! forward with a Neumann boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forward::CompressedImage;
use crate::{Error, Geometry, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TVConfig {
    /// Prox weight (step size times regularization weight).
    pub weight: f64,
    pub inner_iters: usize,
    pub dual_step: f64,
}

impl Default for TVConfig {
    fn default() -> Self {
        TVConfig {
            weight: 0.0,
            inner_iters: 10,
            dual_step: 0.248,
        }
    }
}

impl TVConfig {
    pub fn with_weight(self, weight: f64) -> Self {
        TVConfig { weight, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(Error::InvalidArgument(format!("TV weight {} must be >= 0", self.weight)));
        }
        if !(self.dual_step > 0.0 && self.dual_step <= 0.25) {
            return Err(Error::InvalidArgument(format!("dual step {} outside (0, 0.25]", self.dual_step)));
        }
        if self.inner_iters == 0 {
            return Err(Error::InvalidArgument("TV needs at least one inner iteration".into()));
        }
        Ok(())
    }
}

/// Forward-difference gradient of a complex channel: `(gx, gy)`.
fn gradient(u: &[C64], nx: usize, ny: usize, gx: &mut [C64], gy: &mut [C64]) {
    for ix in 0..nx {
        for iy in 0..ny {
            let i = ix * ny + iy;
            gx[i] = if ix + 1 < nx { u[i + ny] - u[i] } else { C64::new(0.0, 0.0) };
            gy[i] = if iy + 1 < ny { u[i + 1] - u[i] } else { C64::new(0.0, 0.0) };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[C64], py: &[C64], nx: usize, ny: usize, out: &mut [C64]) {
    for ix in 0..nx {
        for iy in 0..ny {
            let i = ix * ny + iy;
            let dx = if nx == 1 {
                C64::new(0.0, 0.0)
            } else if ix == 0 {
                px[i]
            } else if ix + 1 == nx {
                -px[i - ny]
            } else {
                px[i] - px[i - ny]
            };
            let dy = if ny == 1 {
                C64::new(0.0, 0.0)
            } else if iy == 0 {
                py[i]
            } else if iy + 1 == ny {
                -py[i - 1]
            } else {
                py[i] - py[i - 1]
            };
            out[i] = dx + dy;
        }
    }
}

/// Isotropic TV of one complex channel stored row-major (`ix * ny + iy`).
pub fn tv_value(u: &[C64], geometry: &Geometry) -> f64 {
    let (nx, ny) = (geometry.nx, geometry.ny);
    let mut gx = vec![C64::new(0.0, 0.0); u.len()];
    let mut gy = gx.clone();
    gradient(u, nx, ny, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()).sum()
}

/// `argmin_u 1/2 ||u - f||^2 + weight TV(u)` for one channel, approximated
/// by `cfg.inner_iters` dual projection steps from a zero dual field.
pub fn tv_prox_channel(f: &[C64], nx: usize, ny: usize, cfg: &TVConfig) -> Vec<C64> {
    if cfg.weight == 0.0 {
        return f.to_vec();
    }
    let n = f.len();
    let zero = C64::new(0.0, 0.0);
    let (mut px, mut py) = (vec![zero; n], vec![zero; n]);
    let (mut gx, mut gy) = (vec![zero; n], vec![zero; n]);
    let mut div = vec![zero; n];
    let inv_w = 1.0 / cfg.weight;
    let tau = cfg.dual_step;
    for _ in 0..cfg.inner_iters {
        divergence(&px, &py, nx, ny, &mut div);
        for (d, &fv) in div.iter_mut().zip(f) {
            *d -= fv * inv_w;
        }
        gradient(&div, nx, ny, &mut gx, &mut gy);
        for i in 0..n {
            let mag = (gx[i].norm_sqr() + gy[i].norm_sqr()).sqrt();
            let denom = 1.0 + tau * mag;
            px[i] = (px[i] + gx[i] * tau) / denom;
            py[i] = (py[i] + gy[i] * tau) / denom;
        }
    }
    divergence(&px, &py, nx, ny, &mut div);
    f.iter().zip(&div).map(|(&fv, &d)| fv - d * cfg.weight).collect()
}

/// Channel-wise TV prox of a compressed image.
pub fn tv_prox(x: &CompressedImage, cfg: &TVConfig, geometry: &Geometry) -> Result<CompressedImage> {
    cfg.validate()?;
    let (nx, ny) = (geometry.nx, geometry.ny);
    if x.voxels() != nx * ny {
        return Err(Error::DimensionMismatch(format!(
            "image has {} voxels, geometry {nx}x{ny}",
            x.voxels()
        )));
    }
    if let Some(i) = x.data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if cfg.weight == 0.0 {
        return Ok(x.clone());
    }
    let channels: Vec<Vec<C64>> = (0..x.rank())
        .into_par_iter()
        .map(|j| tv_prox_channel(&x.data.column(j).to_vec(), nx, ny, cfg))
        .collect();
    let mut out = x.clone();
    for (j, ch) in channels.into_iter().enumerate() {
        for (dst, v) in out.data.column_mut(j).iter_mut().zip(ch) {
            *dst = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn geo(nx: usize, ny: usize) -> Geometry {
        Geometry::new(nx, ny, 4, 4, 2, 2, 1).unwrap()
    }

    #[test]
    fn zero_weight_is_identity() {
        let x = CompressedImage {
            data: Array2::from_shape_fn((12, 2), |(i, j)| C64::new(i as f64, j as f64 - 0.3)),
            basis_id: "t".into(),
        };
        let out = tv_prox(&x, &TVConfig::default(), &geo(3, 4)).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let x = CompressedImage {
            data: Array2::from_elem((20, 2), C64::new(1.5, -0.5)),
            basis_id: "t".into(),
        };
        let out = tv_prox(&x, &TVConfig::default().with_weight(3.0), &geo(4, 5)).unwrap();
        assert_eq!(out, x);
        assert_eq!(tv_value(&x.data.column(0).to_vec(), &geo(4, 5)), 0.0);
    }

    #[test]
    fn unit_step_per_row() {
        let (nx, ny) = (5, 7);
        let u: Vec<C64> = (0..nx * ny).map(|i| C64::new(if i % ny >= 3 { 1.0 } else { 0.0 }, 0.0)).collect();
        assert!((tv_value(&u, &geo(nx, ny)) - nx as f64).abs() < 1e-15);
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let (nx, ny) = (4, 6);
        let n = nx * ny;
        let u: Vec<C64> = (0..n).map(|i| C64::new((i * 7 % 5) as f64, (i % 3) as f64)).collect();
        let px: Vec<C64> = (0..n).map(|i| C64::new((i % 4) as f64 - 1.0, 0.5)).collect();
        let py: Vec<C64> = (0..n).map(|i| C64::new(0.25 * i as f64, -((i % 2) as f64))).collect();
        let (mut gx, mut gy) = (vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]);
        gradient(&u, nx, ny, &mut gx, &mut gy);
        let mut d = vec![C64::new(0.0, 0.0); n];
        divergence(&px, &py, nx, ny, &mut d);
        let lhs: C64 = gx.iter().zip(&px).chain(gy.iter().zip(&py)).map(|(a, b)| a.conj() * b).sum();
        let rhs: C64 = u.iter().zip(&d).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs + rhs).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_config_and_input() {
        let mut x = CompressedImage::zeros(4, 1, "t");
        let g = geo(2, 2);
        assert!(tv_prox(&x, &TVConfig::default().with_weight(-1.0), &g).is_err());
        assert!(tv_prox(&x, &TVConfig { dual_step: 0.3, ..TVConfig::default() }, &g).is_err());
        x.data[[2, 0]] = C64::new(f64::NAN, 0.0);
        assert!(matches!(tv_prox(&x, &TVConfig::default().with_weight(1.0), &g), Err(Error::NonFinite(2))));
    }
}
