use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Unnormalized 2-D FFT over a row-major `nx x ny` buffer.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.nx, self.ny)
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_x: planner.plan_fft_inverse(nx),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place `X[m] = sum_p x[p] exp(-2 pi i m.p / n)`.
    pub fn forward(&self, buf: &mut [C64]) {
        self.run(buf, &self.fwd_x, &self.fwd_y);
    }

    /// In-place unnormalized inverse (the exact adjoint of [`Fft2::forward`]).
    pub fn inverse(&self, buf: &mut [C64]) {
        self.run(buf, &self.inv_x, &self.inv_y);
    }

    fn run(&self, buf: &mut [C64], fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.len());
        fy.process(buf);
        let mut col = vec![C64::new(0.0, 0.0); self.nx];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                col[ix] = buf[ix * self.ny + iy];
            }
            fx.process(&mut col);
            for ix in 0..self.nx {
                buf[ix * self.ny + iy] = col[ix];
            }
        }
    }
}
