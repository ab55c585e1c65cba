//! The incremental gradient-proximal and generalized forward-backward loops.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::forward::{CompressedImage, ForwardModel, KSpaceData};
use crate::linalg::norm_sqr;
use crate::matching::MatchResult;
use crate::solvers::ops::{BlochProjector, SpatialProx};
use crate::solvers::step::{backtrack_conditions, rescale_alpha};
use crate::solvers::StepStrategy;
use crate::{Error, Result};

/// One JSON-lines diagnostics record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub alpha: f64,
    pub fidelity: f64,
    pub backtracks: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    /// Sequential gradient, matching and spatial steps.
    Igp { match_every_iter: bool },
    /// Parallel proximal steps with correction variables, then averaging.
    Gfb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopOptions {
    pub splitting: Splitting,
    pub step: StepStrategy,
    pub lambda: f64,
    pub k_max: usize,
    pub max_halvings: usize,
    pub divergence_factor: f64,
    pub literal_condb: bool,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    /// Last accepted iterate.
    pub x: CompressedImage,
    pub z_bloch: Option<CompressedImage>,
    pub z_spat: Option<CompressedImage>,
    pub alpha: f64,
    /// Number of accepted iterations.
    pub iteration: usize,
    /// `||Y||^2`, the fidelity of the zero start.
    pub initial_fidelity: f64,
    /// `||Y - G x||^2` after each accepted iteration.
    pub fidelity_history: Vec<f64>,
    /// `||G^H Y - G^H G x||^2` after each accepted iteration.
    pub condb_history: Vec<f64>,
    pub records: Vec<IterRecord>,
    /// 1-based index of the accepted iterate with minimum fidelity (0 if none).
    pub best_iter: usize,
    pub best_x: CompressedImage,
    /// Matching performed at the best iteration, if any.
    pub best_match: Option<MatchResult>,
    /// Backtracking ran out of halvings before `k_max`.
    pub stalled: bool,
}

struct Trial {
    x: CompressedImage,
    z_bloch: Option<CompressedImage>,
    z_spat: Option<CompressedImage>,
    matched: Option<MatchResult>,
}

fn axpy(x: &CompressedImage, a: f64, g: &CompressedImage) -> CompressedImage {
    x.with_data(&x.data - &g.data.mapv(|z| z * a))
}

/// `G^H (G x - Y)` and `||G x - Y||^2`.
fn gradient(x: &CompressedImage, y: &KSpaceData, model: &ForwardModel) -> Result<(CompressedImage, f64)> {
    let mut r = model.forward(x)?;
    r.samples -= &y.samples;
    let fid = norm_sqr(&r.samples);
    Ok((model.adjoint(&r)?, fid))
}

/// Rescaled first step from `x_tilde = P(G^H Y)`; falls back to the
/// undersampling ratio `N / S` when `G x_tilde` vanishes.
pub fn initial_alpha(y: &KSpaceData, model: &ForwardModel, bloch: &dyn BlochProjector) -> Result<f64> {
    let (x_tilde, _) = bloch.project(&model.adjoint(y)?)?;
    match rescale_alpha(y, &x_tilde, model) {
        Ok(a) => Ok(a),
        Err(Error::ZeroForward) => {
            let g = model.geometry();
            Ok(g.voxels() as f64 / g.samples as f64)
        }
        Err(e) => Err(e),
    }
}

fn trial(
    opts: &LoopOptions,
    iter: usize,
    x: &CompressedImage,
    z_bloch: &Option<CompressedImage>,
    z_spat: &Option<CompressedImage>,
    grad: &CompressedImage,
    alpha: f64,
    bloch: &dyn BlochProjector,
    spatial: &dyn SpatialProx,
) -> Result<Trial> {
    let g = axpy(x, alpha, grad);
    let weight = alpha * opts.lambda;
    match opts.splitting {
        Splitting::Igp { match_every_iter } => {
            let do_match = match_every_iter || iter == 1 || iter == opts.k_max;
            let (z, matched) = if do_match { bloch.project(&g)? } else { (g, None) };
            Ok(Trial {
                x: spatial.prox(&z, weight)?,
                z_bloch: None,
                z_spat: None,
                matched,
            })
        }
        Splitting::Gfb => {
            let zb = z_bloch.as_ref().expect("GFB state");
            let zs = z_spat.as_ref().expect("GFB state");
            let o_bloch = &x.data - &zb.data;
            let o_spat = &x.data - &zs.data;
            let (pb, _) = bloch.project(&x.with_data(&g.data + &o_bloch))?;
            let ps = spatial.prox(&x.with_data(&g.data + &o_spat), weight)?;
            let new_zb = x.with_data(&pb.data - &o_bloch);
            let new_zs = x.with_data(&ps.data - &o_spat);
            let merged = x.with_data((&new_zb.data + &new_zs.data).mapv(|z| z * 0.5));
            Ok(Trial {
                x: merged,
                z_bloch: Some(new_zb),
                z_spat: Some(new_zs),
                matched: None,
            })
        }
    }
}

/// Runs `opts.k_max` iterations from the zero image. The first step uses
/// the rescaled `alpha` as is; backtracking starts at the second.
pub fn run_loop(
    y: &KSpaceData,
    model: &ForwardModel,
    bloch: &dyn BlochProjector,
    spatial: &dyn SpatialProx,
    opts: &LoopOptions,
) -> Result<SolverState> {
    let zero = model.zero_image();
    let gfb = matches!(opts.splitting, Splitting::Gfb);
    let mut x = zero.clone();
    let mut z_bloch = gfb.then(|| zero.clone());
    let mut z_spat = gfb.then(|| zero.clone());
    let (mut grad, initial_fidelity) = gradient(&x, y, model)?;
    let mut metric = norm_sqr(&grad.data);
    let mut alpha = initial_alpha(y, model, bloch)?;

    let mut state = SolverState {
        x: zero.clone(),
        z_bloch: None,
        z_spat: None,
        alpha,
        iteration: 0,
        initial_fidelity,
        fidelity_history: Vec::new(),
        condb_history: Vec::new(),
        records: Vec::new(),
        best_iter: 0,
        best_x: zero,
        best_match: None,
        stalled: false,
    };
    let mut best_fid = f64::INFINITY;

    'outer: for iter in 1..=opts.k_max {
        let start = Instant::now();
        let mut backtracks = 0;
        let (cand, cand_grad, fid, cand_metric) = loop {
            let cand = trial(opts, iter, &x, &z_bloch, &z_spat, &grad, alpha, bloch, spatial)?;
            let (cand_grad, fid) = gradient(&cand.x, y, model)?;
            let cand_metric = norm_sqr(&cand_grad.data);
            if opts.step == StepStrategy::Bt && iter > 1 {
                let delta_sq = norm_sqr(&(&cand.x.data - &x.data));
                let normal_delta_sq = norm_sqr(&(&cand_grad.data - &grad.data));
                let outcome = backtrack_conditions(
                    alpha,
                    delta_sq,
                    normal_delta_sq,
                    cand_metric,
                    metric,
                    opts.literal_condb,
                );
                if !outcome.accept() {
                    if backtracks == opts.max_halvings {
                        state.stalled = true;
                        break 'outer;
                    }
                    alpha *= 0.5;
                    backtracks += 1;
                    continue;
                }
            }
            break (cand, cand_grad, fid, cand_metric);
        };
        if !fid.is_finite() || fid > opts.divergence_factor * initial_fidelity {
            return Err(Error::Diverged {
                iter,
                fidelity: fid,
                initial: initial_fidelity,
            });
        }
        x = cand.x;
        z_bloch = cand.z_bloch;
        z_spat = cand.z_spat;
        grad = cand_grad;
        metric = cand_metric;
        state.iteration = iter;
        state.fidelity_history.push(fid);
        state.condb_history.push(metric);
        state.records.push(IterRecord {
            iter,
            alpha,
            fidelity: fid,
            backtracks,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if fid < best_fid {
            best_fid = fid;
            state.best_iter = iter;
            state.best_x = x.clone();
            state.best_match = cand.matched;
        }
    }
    state.x = x;
    state.z_bloch = z_bloch;
    state.z_spat = z_spat;
    state.alpha = alpha;
    Ok(state)
}
