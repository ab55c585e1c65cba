//! Kaiser-Bessel gridding (width 4, oversampling 1.5).

use crate::forward::fft::Fft2;
use crate::forward::sampling::Stencil;
use crate::C64;

pub const KERNEL_WIDTH: f64 = 4.0;
pub const OVERSAMPLING: f64 = 1.5;

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Shape parameter for a given width and oversampling ratio.
pub fn kb_beta(width: f64, oversampling: f64) -> f64 {
    std::f64::consts::PI * ((width / oversampling).powi(2) * (oversampling - 0.5).powi(2) - 0.8).sqrt()
}

#[derive(Clone, Debug)]
pub struct KbGridder {
    nx: usize,
    ny: usize,
    gx: usize,
    gy: usize,
    beta: f64,
    i0_beta: f64,
    apod_x: Vec<f64>,
    apod_y: Vec<f64>,
    fft: Fft2,
}

fn oversampled(n: usize) -> usize {
    let g = (OVERSAMPLING * n as f64).ceil() as usize;
    g + g % 2
}

impl KbGridder {
    pub fn new(nx: usize, ny: usize) -> Self {
        let beta = kb_beta(KERNEL_WIDTH, OVERSAMPLING);
        let (gx, gy) = (oversampled(nx), oversampled(ny));
        let mut g = KbGridder {
            nx,
            ny,
            gx,
            gy,
            beta,
            i0_beta: bessel_i0(beta),
            apod_x: Vec::new(),
            apod_y: Vec::new(),
            fft: Fft2::new(gx, gy),
        };
        g.apod_x = (0..nx).map(|i| g.kernel_ft((i as f64 - (nx / 2) as f64) / gx as f64)).collect();
        g.apod_y = (0..ny).map(|i| g.kernel_ft((i as f64 - (ny / 2) as f64) / gy as f64)).collect();
        g
    }

    pub fn grid_len(&self) -> usize {
        self.gx * self.gy
    }

    pub fn kernel(&self, u: f64) -> f64 {
        let half = KERNEL_WIDTH / 2.0;
        if u.abs() >= half {
            return 0.0;
        }
        let a = 1.0 - (u / half).powi(2);
        bessel_i0(self.beta * a.sqrt()) / self.i0_beta
    }

    /// Continuous Fourier transform of the kernel at `xi` cycles per grid
    /// cell, by composite Simpson quadrature.
    fn kernel_ft(&self, xi: f64) -> f64 {
        let half = KERNEL_WIDTH / 2.0;
        let n = 4000;
        let h = 2.0 * half / n as f64;
        let f = |v: f64| self.kernel(v) * (std::f64::consts::TAU * v * xi).cos();
        let mut s = f(-half) + f(half);
        for i in 1..n {
            let v = -half + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(v);
        }
        s * h / 3.0
    }

    fn grid_index(&self, ix: usize, iy: usize) -> usize {
        let px = (ix as i64 - (self.nx / 2) as i64).rem_euclid(self.gx as i64) as usize;
        let py = (iy as i64 - (self.ny / 2) as i64).rem_euclid(self.gy as i64) as usize;
        px * self.gy + py
    }

    /// Deapodize, zero-pad and FFT. `grid` is overwritten.
    pub fn to_grid(&self, img: &[C64], grid: &mut [C64]) {
        grid.iter_mut().for_each(|g| *g = C64::new(0.0, 0.0));
        let scale = 1.0 / ((self.nx * self.ny) as f64).sqrt();
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                let w = scale / (self.apod_x[ix] * self.apod_y[iy]);
                grid[self.grid_index(ix, iy)] = img[ix * self.ny + iy] * w;
            }
        }
        self.fft.forward(grid);
    }

    /// Exact adjoint of [`KbGridder::to_grid`]; `grid` is used as scratch.
    pub fn from_grid(&self, grid: &mut [C64], img: &mut [C64]) {
        self.fft.inverse(grid);
        let scale = 1.0 / ((self.nx * self.ny) as f64).sqrt();
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                let w = scale / (self.apod_x[ix] * self.apod_y[iy]);
                img[ix * self.ny + iy] = grid[self.grid_index(ix, iy)] * w;
            }
        }
    }

    /// Interpolation weights for a sample at `(kx, ky)` cycles/pixel.
    pub(crate) fn stencil(&self, kx: f64, ky: f64) -> Stencil {
        let ux = kx * self.gx as f64;
        let uy = ky * self.gy as f64;
        let mx0 = (ux - KERNEL_WIDTH / 2.0).floor() as i64 + 1;
        let my0 = (uy - KERNEL_WIDTH / 2.0).floor() as i64 + 1;
        let mut st = Stencil {
            idx: [0; 16],
            w: [0.0; 16],
            n: 16,
        };
        let mut wy = [0.0; 4];
        let mut iy = [0usize; 4];
        for b in 0..4 {
            let my = my0 + b as i64;
            wy[b] = self.kernel(uy - my as f64);
            iy[b] = my.rem_euclid(self.gy as i64) as usize;
        }
        for a in 0..4 {
            let mx = mx0 + a as i64;
            let wx = self.kernel(ux - mx as f64);
            let ix = mx.rem_euclid(self.gx as i64) as usize;
            for b in 0..4 {
                st.idx[4 * a + b] = ix * self.gy + iy[b];
                st.w[4 * a + b] = wx * wy[b];
            }
        }
        st
    }
}
