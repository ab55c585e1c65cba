//! Method dispatch, autocalibration and best-iterate selection.

use std::sync::Arc;
use std::time::Instant;

use crate::forward::{CoilMaps, CompressedImage, ForwardModel, KSpaceData, SamplingScheme};
use crate::matching::{lut_lookup, match_image, CompressedDictionary, MatchResult, TissueMaps};
use crate::sequence::{autocal_basis, AutocalBasis, CompressionBasis, Dictionary};
use crate::solvers::iterate::{run_loop, IterRecord, LoopOptions, SolverState, Splitting};
use crate::solvers::ops::{DictionaryProjector, IdentityProx, TvProx};
use crate::solvers::{DataScaling, Method, SolverConfig, StepStrategy};
use crate::{Error, Geometry, Result};

/// Everything a reconstruction needs besides the data: the dictionary, its
/// rank-`r` basis, the rank-`k` forward model and both compressed
/// dictionaries.
#[derive(Clone, Debug)]
pub struct ReconContext {
    pub dictionary: Arc<Dictionary>,
    /// Rank-`r` dictionary basis; the model uses its first `k` columns.
    pub basis: CompressionBasis,
    pub model: ForwardModel,
    pub dict_k: CompressedDictionary,
    pub dict_r: CompressedDictionary,
}

impl ReconContext {
    pub fn new(
        dictionary: Arc<Dictionary>,
        basis: CompressionBasis,
        geometry: Geometry,
        coils: Arc<CoilMaps>,
        scheme: Arc<SamplingScheme>,
        rank: usize,
    ) -> Result<Self> {
        let basis_k = basis.truncated(rank)?;
        let geometry = Geometry {
            rank,
            dict_rank: basis.rank(),
            ..geometry
        };
        geometry.validate_against_atoms(dictionary.num_atoms())?;
        let model = ForwardModel::from_shared(geometry, coils, scheme, &basis_k, format!("svd-k{rank}"))?;
        let dict_r = CompressedDictionary::new(&dictionary, &basis)?;
        let dict_k = CompressedDictionary::from_atoms(dict_r.atoms.slice(ndarray::s![.., ..rank]).to_owned())?;
        Ok(ReconContext {
            dictionary,
            basis,
            model,
            dict_k,
            dict_r,
        })
    }

    pub fn rank(&self) -> usize {
        self.model.rank()
    }
}

/// Maps, solver state and timing of one reconstruction.
#[derive(Clone, Debug)]
pub struct ReconOutput {
    pub maps: TissueMaps,
    pub state: Option<SolverState>,
    /// Autocalibration rotation used, if any.
    pub autocal: Option<AutocalBasis>,
    pub best_iter: usize,
    pub wall_ms: f64,
}

impl ReconOutput {
    pub fn records(&self) -> &[IterRecord] {
        self.state.as_ref().map_or(&[], |s| s.records.as_slice())
    }

    /// One JSON object per iteration.
    pub fn diagnostics_jsonl(&self) -> String {
        self.records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("plain record") + "\n")
            .collect()
    }
}

fn maps_from(m: &MatchResult, dict: &Dictionary, scale: f64) -> Result<TissueMaps> {
    let mut maps = lut_lookup(m, dict)?;
    maps.pd.iter_mut().for_each(|p| *p *= scale);
    Ok(maps)
}

/// Zero-filled (or gridded) adjoint followed by one matching.
pub fn classical_mrf(y: &KSpaceData, ctx: &ReconContext) -> Result<TissueMaps> {
    let x = ctx.model.adjoint(y)?;
    maps_from(&match_image(&x, &ctx.dict_k)?, &ctx.dictionary, 1.0)
}

/// Factor the data is divided by before iterating.
pub fn data_scale(y: &KSpaceData, model: &ForwardModel, scaling: DataScaling) -> Result<f64> {
    match scaling {
        DataScaling::None => Ok(1.0),
        DataScaling::MaxAdjoint => {
            let a = model.adjoint(y)?;
            let m = a
                .data
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            Ok(if m > 0.0 { m } else { 1.0 })
        }
        DataScaling::MaxSample => {
            let m = y.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok(if m > 0.0 { m } else { 1.0 })
        }
    }
}

fn scaled(y: &KSpaceData, s: f64) -> KSpaceData {
    if s == 1.0 {
        y.clone()
    } else {
        KSpaceData {
            samples: y.samples.mapv(|z| z / s),
        }
    }
}

fn rescale_image(x: &mut CompressedImage, s: f64) {
    x.data.mapv_inplace(|z| z * s);
}

/// Returns iterates and fidelities in the units of the unscaled data.
fn unscale_state(state: &mut SolverState, s: f64) {
    if s == 1.0 {
        return;
    }
    rescale_image(&mut state.x, s);
    rescale_image(&mut state.best_x, s);
    for z in [&mut state.z_bloch, &mut state.z_spat].into_iter().flatten() {
        rescale_image(z, s);
    }
    if let Some(m) = state.best_match.as_mut() {
        m.rho.iter_mut().for_each(|p| *p *= s);
        rescale_image(&mut m.resynthesized, s);
    }
    let s2 = s * s;
    state.initial_fidelity *= s2;
    state.fidelity_history.iter_mut().for_each(|f| *f *= s2);
    state.condb_history.iter_mut().for_each(|f| *f *= s2);
    state.records.iter_mut().for_each(|r| r.fidelity *= s2);
}

fn loop_options(cfg: &SolverConfig, splitting: Splitting, lambda: f64, step: StepStrategy) -> LoopOptions {
    LoopOptions {
        splitting,
        step,
        lambda,
        k_max: cfg.k_max,
        max_halvings: cfg.max_halvings,
        divergence_factor: cfg.divergence_factor,
        literal_condb: cfg.literal_condb,
    }
}

/// One matched gradient step at rank `r`, then the SVD of its result.
pub fn autocalibrate(y: &KSpaceData, ctx: &ReconContext, cfg: &SolverConfig) -> Result<AutocalBasis> {
    let model_r = ctx.model.with_basis(&ctx.basis, format!("svd-r{}", ctx.basis.rank()))?;
    let opts = LoopOptions {
        k_max: 1,
        ..loop_options(cfg, Splitting::Igp { match_every_iter: true }, 0.0, StepStrategy::Fsz)
    };
    let st = run_loop(y, &model_r, &DictionaryProjector(&ctx.dict_r), &IdentityProx, &opts)?;
    autocal_basis(&st.x.data.view(), &ctx.basis, ctx.rank())
}

fn finish(
    state: SolverState,
    dict: &CompressedDictionary,
    ctx: &ReconContext,
    scale: f64,
    reuse_match: bool,
) -> Result<(TissueMaps, SolverState)> {
    let mut state = state;
    let m = match (&state.best_match, reuse_match) {
        (Some(m), true) => m.clone(),
        _ => match_image(&state.best_x, dict)?,
    };
    unscale_state(&mut state, scale);
    Ok((maps_from(&m, &ctx.dictionary, scale)?, state))
}

fn igp_impl(
    y: &KSpaceData,
    ctx: &ReconContext,
    cfg: &SolverConfig,
    autocal: bool,
    match_every_iter: bool,
    lambda: f64,
) -> Result<(TissueMaps, SolverState, Option<AutocalBasis>)> {
    cfg.validate()?;
    let scale = data_scale(y, &ctx.model, cfg.scaling)?;
    let ys = scaled(y, scale);
    let tv = TvProx {
        config: cfg.tv,
        geometry: *ctx.model.geometry(),
    };
    let opts = loop_options(cfg, Splitting::Igp { match_every_iter }, lambda, cfg.step);
    if autocal {
        let ac = autocalibrate(&ys, ctx, cfg)?;
        let model = ctx.model.with_basis(&ac.composed(), format!("autocal-k{}", ac.rank()))?;
        let dict = ctx.dict_r.with_autocal(&ac)?;
        let state = run_loop(&ys, &model, &DictionaryProjector(&dict), &tv, &opts)?;
        let (maps, state) = finish(state, &dict, ctx, scale, true)?;
        Ok((maps, state, Some(ac)))
    } else {
        let state = run_loop(&ys, &ctx.model, &DictionaryProjector(&ctx.dict_k), &tv, &opts)?;
        let (maps, state) = finish(state, &ctx.dict_k, ctx, scale, true)?;
        Ok((maps, state, None))
    }
}

/// Incremental gradient-proximal reconstruction for an `Igp` method.
pub fn igp_mrf(y: &KSpaceData, ctx: &ReconContext, cfg: &SolverConfig) -> Result<(TissueMaps, SolverState)> {
    let Method::Igp {
        autocal,
        match_every_iter,
    } = cfg.method
    else {
        return Err(Error::InvalidArgument(format!("{} is not an IGP method", cfg.method)));
    };
    igp_impl(y, ctx, cfg, autocal, match_every_iter, cfg.lambda).map(|(m, s, _)| (m, s))
}

/// Matched gradient iterations without spatial regularization.
pub fn air_mrf(y: &KSpaceData, ctx: &ReconContext, cfg: &SolverConfig) -> Result<(TissueMaps, SolverState)> {
    igp_impl(y, ctx, cfg, false, true, 0.0).map(|(m, s, _)| (m, s))
}

/// Generalized forward-backward reconstruction; the maps come from a final
/// matching of the selected merged iterate.
pub fn gfb_mrf(y: &KSpaceData, ctx: &ReconContext, cfg: &SolverConfig) -> Result<(TissueMaps, SolverState)> {
    if cfg.method != Method::Gfb {
        return Err(Error::InvalidArgument(format!("{} is not GFB", cfg.method)));
    }
    cfg.validate()?;
    let scale = data_scale(y, &ctx.model, cfg.scaling)?;
    let ys = scaled(y, scale);
    let tv = TvProx {
        config: cfg.tv,
        geometry: *ctx.model.geometry(),
    };
    let opts = loop_options(cfg, Splitting::Gfb, cfg.lambda, cfg.step);
    let state = run_loop(&ys, &ctx.model, &DictionaryProjector(&ctx.dict_k), &tv, &opts)?;
    finish(state, &ctx.dict_k, ctx, scale, false)
}

/// Dispatches on `cfg.method`; maps come from the iterate with the lowest
/// data fidelity.
pub fn run_recon(y: &KSpaceData, ctx: &ReconContext, cfg: &SolverConfig) -> Result<ReconOutput> {
    let start = Instant::now();
    let (maps, state, autocal) = match cfg.method {
        Method::Classical => (classical_mrf(y, ctx)?, None, None),
        Method::Air => {
            let (m, s) = air_mrf(y, ctx, cfg)?;
            (m, Some(s), None)
        }
        Method::Igp {
            autocal,
            match_every_iter,
        } => {
            let (m, s, ac) = igp_impl(y, ctx, cfg, autocal, match_every_iter, cfg.lambda)?;
            (m, Some(s), ac)
        }
        Method::Gfb => {
            let (m, s) = gfb_mrf(y, ctx, cfg)?;
            (m, Some(s), None)
        }
    };
    Ok(ReconOutput {
        best_iter: state.as_ref().map_or(0, |s| s.best_iter),
        maps,
        state,
        autocal,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
