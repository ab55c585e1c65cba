//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mrf_core::sequence::SequenceSchedule;
use mrf_core::C64;

/// Isochromat ensemble simulation of the same inversion-prepared FISP train.
///
/// `spins` isochromats are spread uniformly over one cycle of gradient
/// dephasing per TR. Each isochromat is an explicit (Mx, My, Mz) vector
/// rotated about x by the flip angle; the signal is the ensemble mean of
/// Mx + i My at the echo.
pub fn isochromat_signal(schedule: &SequenceSchedule, t1: f64, t2: f64, spins: usize, inversion: bool) -> Vec<C64> {
    let mut m: Vec<[f64; 3]> = vec![[0.0, 0.0, 1.0]; spins];
    if inversion {
        let e1 = (-schedule.ti_ms / t1).exp();
        for v in m.iter_mut() {
            v[2] = -e1 + (1.0 - e1);
        }
    }
    let relax = |m: &mut [[f64; 3]], dt: f64| {
        let e1 = (-dt / t1).exp();
        let e2 = (-dt / t2).exp();
        for v in m.iter_mut() {
            v[0] *= e2;
            v[1] *= e2;
            v[2] = v[2] * e1 + (1.0 - e1);
        }
    };
    let mut out = Vec::with_capacity(schedule.len());
    for t in 0..schedule.len() {
        let a = schedule.flip_deg[t].to_radians();
        let (s, c) = a.sin_cos();
        for v in m.iter_mut() {
            let (my, mz) = (v[1], v[2]);
            v[1] = c * my - s * mz;
            v[2] = s * my + c * mz;
        }
        relax(&mut m, schedule.te_ms);
        let sum = m.iter().fold(C64::new(0.0, 0.0), |acc, v| acc + C64::new(v[0], v[1]));
        out.push(sum / spins as f64);
        relax(&mut m, schedule.tr_ms[t] - schedule.te_ms);
        for (j, v) in m.iter_mut().enumerate() {
            let phi = std::f64::consts::TAU * j as f64 / spins as f64;
            let (sp, cp) = phi.sin_cos();
            let (mx, my) = (v[0], v[1]);
            v[0] = cp * mx - sp * my;
            v[1] = sp * mx + cp * my;
        }
    }
    out
}

/// Normalized root-mean-square error `||a - b|| / ||b||`.
pub fn nrmse(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ndarray::Array2<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    ndarray::Array2::from_shape_fn((rows, cols), |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

/// Orthonormal `rows x cols` basis by modified Gram-Schmidt on a random matrix.
pub fn random_basis(rows: usize, cols: usize, seed: u64) -> mrf_core::sequence::CompressionBasis {
    let mut v = random_matrix(rows, cols, seed);
    for j in 0..cols {
        for i in 0..j {
            let (vi, mut vj) = (v.column(i).to_owned(), v.column(j).to_owned());
            let p: C64 = vi.iter().zip(vj.iter()).map(|(a, b)| a.conj() * b).sum();
            vj.zip_mut_with(&vi, |b, a| *b -= a * p);
            v.column_mut(j).assign(&vj);
        }
        let n = v.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.column_mut(j).mapv_inplace(|z| z / n);
    }
    mrf_core::sequence::CompressionBasis {
        vectors: v,
        singular_values: vec![1.0; cols],
    }
}

pub fn identity_basis(n: usize) -> mrf_core::sequence::CompressionBasis {
    mrf_core::sequence::CompressionBasis {
        vectors: ndarray::Array2::from_shape_fn((n, n), |(i, j)| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)),
        singular_values: vec![1.0; n],
    }
}

pub enum Kind {
    Cartesian(f64),
    Spiral,
}

/// Forward model with the given sampling, `coils` synthetic coils and basis.
pub fn model(
    nx: usize,
    frames: usize,
    coils: usize,
    kind: Kind,
    basis: &mrf_core::sequence::CompressionBasis,
) -> mrf_core::forward::ForwardModel {
    use mrf_core::forward::*;
    let k = basis.rank();
    let g0 = mrf_core::Geometry::new(nx, nx, frames, 1, k, k.max(1), coils).unwrap();
    let scheme = match kind {
        Kind::Cartesian(r) => make_cartesian_scheme(&g0, r, 11).unwrap(),
        Kind::Spiral => make_spiral_scheme(&g0, SpiralParams::default()).unwrap(),
    };
    let g = g0.with_samples(scheme.samples());
    let maps = make_coil_maps(&g, coils, 5).unwrap();
    ForwardModel::new(g, maps, scheme, basis, "test").unwrap()
}

/// A coarse grid covering the default tissue classes.
pub fn coarse_grid() -> mrf_core::sequence::TissueGrid {
    let t1 = vec![600.0, 750.0, 800.0, 900.0, 1000.0, 1300.0, 1600.0, 2500.0, 4000.0];
    let t2 = vec![40.0, 50.0, 60.0, 90.0, 110.0, 150.0, 300.0, 1000.0, 2000.0];
    mrf_core::sequence::TissueGrid::new(t1, t2).unwrap()
}

pub struct Problem {
    pub ctx: mrf_core::solvers::ReconContext,
    pub phantom: mrf_core::bench::DigitalPhantom,
    pub clean: mrf_core::forward::KSpaceData,
}

/// Phantom, dictionary and Cartesian data on an `n x n` grid at length `len`.
pub fn problem(
    n: usize,
    len: usize,
    reduction: f64,
    grid: &mrf_core::sequence::TissueGrid,
    rank: usize,
    dict_rank: usize,
    seed: u64,
) -> Problem {
    use mrf_core::bench::*;
    use mrf_core::forward::*;
    use mrf_core::sequence::*;
    use std::sync::Arc;
    let schedule = make_schedule(len, seed);
    let dict = Arc::new(build_dictionary(&schedule, grid).unwrap());
    let g0 = mrf_core::Geometry::new(n, n, len, 1, rank, dict_rank, 1).unwrap();
    let scheme = Arc::new(make_cartesian_scheme(&g0, reduction, seed).unwrap());
    let g = g0.with_samples(scheme.samples());
    let coils = Arc::new(make_coil_maps(&g, 1, seed).unwrap());
    let phantom = make_phantom(&g, &default_classes(), seed).unwrap();
    let basis = svd_compress(&dict, dict_rank).unwrap();
    let ctx = mrf_core::solvers::ReconContext::new(dict, basis, g, coils, scheme, rank).unwrap();
    let clean = ctx.model.forward_frames(&phantom_frames(&phantom, &schedule, None).unwrap()).unwrap();
    Problem { ctx, phantom, clean }
}

/// Chambolle dual projection for a real/imaginary pair, written on explicit
/// 2-D arrays with the four dual components stored separately.
pub fn chambolle_oracle(f: &ndarray::Array2<C64>, w: f64, iters: usize, tau: f64) -> ndarray::Array2<C64> {
    let (nx, ny) = f.dim();
    let fr = f.mapv(|z| z.re);
    let fi = f.mapv(|z| z.im);
    let mut p = [ndarray::Array2::<f64>::zeros((nx, ny)), ndarray::Array2::zeros((nx, ny)), ndarray::Array2::zeros((nx, ny)), ndarray::Array2::zeros((nx, ny))];
    let div = |px: &ndarray::Array2<f64>, py: &ndarray::Array2<f64>| {
        ndarray::Array2::from_shape_fn((nx, ny), |(i, j)| {
            let ax = if i + 1 < nx { px[[i, j]] } else { 0.0 };
            let bx = if i > 0 { px[[i - 1, j]] } else { 0.0 };
            let ay = if j + 1 < ny { py[[i, j]] } else { 0.0 };
            let by = if j > 0 { py[[i, j - 1]] } else { 0.0 };
            ax - bx + ay - by
        })
    };
    let grad = |u: &ndarray::Array2<f64>| {
        let gx = ndarray::Array2::from_shape_fn((nx, ny), |(i, j)| if i + 1 < nx { u[[i + 1, j]] - u[[i, j]] } else { 0.0 });
        let gy = ndarray::Array2::from_shape_fn((nx, ny), |(i, j)| if j + 1 < ny { u[[i, j + 1]] - u[[i, j]] } else { 0.0 });
        (gx, gy)
    };
    for _ in 0..iters {
        let qr = div(&p[0], &p[1]) - &fr / w;
        let qi = div(&p[2], &p[3]) - &fi / w;
        let (gxr, gyr) = grad(&qr);
        let (gxi, gyi) = grad(&qi);
        let g = [gxr, gyr, gxi, gyi];
        let mag = ndarray::Array2::from_shape_fn((nx, ny), |ij| g.iter().map(|a| a[ij] * a[ij]).sum::<f64>().sqrt());
        for c in 0..4 {
            p[c] = ndarray::Array2::from_shape_fn((nx, ny), |ij| (p[c][ij] + tau * g[c][ij]) / (1.0 + tau * mag[ij]));
        }
    }
    let ur = &fr - &(div(&p[0], &p[1]) * w);
    let ui = &fi - &(div(&p[2], &p[3]) * w);
    ndarray::Array2::from_shape_fn((nx, ny), |ij| C64::new(ur[ij], ui[ij]))
}

pub fn dot(a: ndarray::ArrayView1<C64>, b: ndarray::ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn l2(a: ndarray::ArrayView1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Direct argmax / density loop over explicit atom rows and a norm table.
pub fn brute(atoms: &ndarray::Array2<C64>, norms: &[f64], x: ndarray::ArrayView1<C64>) -> (usize, f64) {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for k in 0..atoms.nrows() {
        let score = dot(atoms.row(k), x).norm() / norms[k];
        if score > best_score {
            best = k;
            best_score = score;
        }
    }
    let rho = (dot(atoms.row(best), x).re / (norms[best] * norms[best])).max(0.0);
    (best, rho)
}
