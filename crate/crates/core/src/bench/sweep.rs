use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bench::{add_noise, make_phantom, phantom_frames, relative_error, DigitalPhantom, NoiseSpec, TissueClass};
use crate::forward::{make_cartesian_scheme, make_coil_maps, ForwardModel, KSpaceData};
use crate::sequence::{build_dictionary, make_schedule, svd_compress, Dictionary, TissueGrid};
use crate::solvers::{run_recon, DataScaling, Method, ReconContext, SolverConfig, StepStrategy, TissueMaps};
use crate::{Error, Geometry, Result};

/// Experiment description; every field has a desk-scale default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub nx: usize,
    pub ny: usize,
    pub lengths: Vec<usize>,
    pub noise: Vec<f64>,
    /// Method labels such as `classical`, `igp-mrf-01-bt`, `gfb-mrf`.
    pub methods: Vec<String>,
    pub reduction: f64,
    pub coils: usize,
    pub rank: usize,
    pub dict_rank: usize,
    pub lambda_clean: f64,
    pub lambda_noisy: f64,
    pub k_max: usize,
    pub seed: u64,
    pub scaling: DataScaling,
    /// `None` uses the default grid.
    pub grid: Option<(Vec<f64>, Vec<f64>)>,
    pub classes: Option<Vec<TissueClass>>,
    /// Record wall-clock times; off gives byte-reproducible tables.
    pub timing: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            nx: 64,
            ny: 64,
            lengths: vec![200, 400, 600],
            noise: vec![0.0, 0.001],
            methods: vec!["classical".into(), "igp-mrf-01-bt".into(), "gfb-mrf".into()],
            reduction: 8.0,
            coils: 1,
            rank: 10,
            dict_rank: 50,
            lambda_clean: 1e-4,
            lambda_noisy: 5e-4,
            k_max: 10,
            seed: 7,
            scaling: DataScaling::MaxAdjoint,
            grid: None,
            classes: None,
            timing: true,
        }
    }
}

/// Parses `method[-fsz|-bt]`.
pub fn parse_method_label(label: &str) -> Result<(Method, StepStrategy)> {
    let lower = label.trim().to_ascii_lowercase();
    for (suffix, step) in [("-fsz", StepStrategy::Fsz), ("-bt", StepStrategy::Bt)] {
        if let Some(base) = lower.strip_suffix(suffix) {
            return Ok((base.parse::<Method>().map_err(|_| Error::UnknownMethod(label.into()))?, step));
        }
    }
    let m: Method = lower.parse().map_err(|_| Error::UnknownMethod(label.into()))?;
    Ok((m, m.default_step()))
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    #[serde(rename = "L")]
    pub length: usize,
    pub noise: f64,
    pub err_t1: f64,
    pub err_t2: f64,
    pub best_iter: usize,
    pub wall_ms: f64,
    /// `ok` or the failure message.
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub row: SweepRow,
    pub maps: Option<TissueMaps>,
    /// Condition-b metric over accepted iterations (iterative methods).
    pub condb_history: Vec<f64>,
    pub step: Option<StepStrategy>,
    pub diagnostics: String,
}

#[derive(Clone, Debug)]
pub struct SweepResults {
    pub spec: SweepSpec,
    pub phantom: DigitalPhantom,
    pub cells: Vec<SweepCell>,
}

impl SweepResults {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(&c.row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Everything shared between cells at the longest length.
pub struct SweepSetup {
    pub geometry: Geometry,
    pub dictionary: Dictionary,
    pub phantom: DigitalPhantom,
    /// Noise-free measurements at the longest length.
    pub clean: KSpaceData,
    pub coils: Arc<crate::forward::CoilMaps>,
    pub scheme: Arc<crate::forward::SamplingScheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.noise.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one length and noise level".into()));
        }
        if self.lengths.iter().any(|&l| l < self.dict_rank) {
            return Err(Error::InvalidArgument(format!("every length must be >= dict_rank {}", self.dict_rank)));
        }
        Geometry::new(self.nx, self.ny, self.max_length(), 1, self.rank, self.dict_rank, self.coils).map(|_| ())
    }

    pub fn max_length(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    pub fn tissue_grid(&self) -> Result<TissueGrid> {
        match &self.grid {
            Some((t1, t2)) => TissueGrid::new(t1.clone(), t2.clone()),
            None => Ok(TissueGrid::default_grid()),
        }
    }

    /// Builds the dictionary, phantom, sampling and clean data once.
    pub fn setup(&self) -> Result<SweepSetup> {
        self.validate()?;
        let lmax = self.max_length();
        let schedule = make_schedule(lmax, self.seed);
        let dictionary = build_dictionary(&schedule, &self.tissue_grid()?)?;
        let g0 = Geometry::new(self.nx, self.ny, lmax, 1, self.rank, self.dict_rank, self.coils)?;
        let scheme = Arc::new(make_cartesian_scheme(&g0, self.reduction, self.seed)?);
        let geometry = g0.with_samples(scheme.samples());
        let coils = Arc::new(make_coil_maps(&geometry, self.coils, self.seed)?);
        let classes = self.classes.clone().unwrap_or_else(crate::bench::default_classes);
        let phantom = make_phantom(&geometry, &classes, self.seed)?;
        let frames = phantom_frames(&phantom, &schedule, None)?;
        let basis = svd_compress(&dictionary, self.rank)?;
        let model = ForwardModel::from_shared(geometry, coils.clone(), scheme.clone(), &basis, "sim")?;
        let clean = model.forward_frames(&frames)?;
        Ok(SweepSetup {
            geometry,
            dictionary,
            phantom,
            clean,
            coils,
            scheme,
        })
    }
}

/// Seed of the noise realization for one (length, level) pair.
pub fn noise_seed(seed: u64, length: usize, level_index: usize) -> u64 {
    seed.wrapping_mul(1_000_003)
        .wrapping_add((length as u64) << 8)
        .wrapping_add(level_index as u64)
}

fn run_cell(
    label: &str,
    y: &KSpaceData,
    ctx: &ReconContext,
    spec: &SweepSpec,
    noise: f64,
    phantom: &DigitalPhantom,
) -> Result<SweepCell> {
    let (method, step) = parse_method_label(label)?;
    let mut cfg = SolverConfig::new(method).with_step(step).with_k_max(spec.k_max);
    cfg.lambda = if noise > 0.0 { spec.lambda_noisy } else { spec.lambda_clean };
    cfg.rank = spec.rank;
    cfg.dict_rank = spec.dict_rank;
    cfg.seed = spec.seed;
    cfg.scaling = spec.scaling;
    let out = run_recon(y, ctx, &cfg)?;
    let row = SweepRow {
        method: label.to_string(),
        length: ctx.model.geometry().frames,
        noise,
        err_t1: relative_error(&out.maps.t1, &phantom.t1, &phantom.support)?,
        err_t2: relative_error(&out.maps.t2, &phantom.t2, &phantom.support)?,
        best_iter: out.best_iter,
        wall_ms: if spec.timing { out.wall_ms.round() } else { 0.0 },
        status: "ok".into(),
    };
    Ok(SweepCell {
        row,
        condb_history: out.state.as_ref().map(|s| s.condb_history.clone()).unwrap_or_default(),
        step: (method != Method::Classical).then_some(step),
        diagnostics: out.diagnostics_jsonl(),
        maps: Some(out.maps),
    })
}

/// Runs every (length, noise, method) cell. Data are simulated once per
/// length and noise level and shared across methods; a failing cell is
/// recorded and the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResults> {
    run_sweep_with(spec, &spec.setup()?)
}

pub fn run_sweep_with(spec: &SweepSpec, setup: &SweepSetup) -> Result<SweepResults> {
    let mut lengths = spec.lengths.clone();
    lengths.sort_unstable();
    lengths.dedup();
    let mut cells = Vec::new();
    for &len in &lengths {
        let dict = Arc::new(setup.dictionary.truncate(len));
        let basis = svd_compress(&dict, spec.dict_rank)?;
        let geometry = Geometry {
            frames: len,
            ..setup.geometry
        };
        let scheme = Arc::new(setup.scheme.truncate(len));
        let ctx = ReconContext::new(dict, basis, geometry, setup.coils.clone(), scheme, spec.rank)?;
        let clean = setup.clean.truncate(len);
        for (li, &level) in spec.noise.iter().enumerate() {
            let y = add_noise(
                &clean,
                &NoiseSpec {
                    relative_std: level,
                    seed: noise_seed(spec.seed, len, li),
                },
            )?;
            for label in &spec.methods {
                let start = Instant::now();
                let cell = run_cell(label, &y, &ctx, spec, level, &setup.phantom).unwrap_or_else(|e| SweepCell {
                    row: SweepRow {
                        method: label.clone(),
                        length: len,
                        noise: level,
                        err_t1: f64::NAN,
                        err_t2: f64::NAN,
                        best_iter: 0,
                        wall_ms: if spec.timing { start.elapsed().as_millis() as f64 } else { 0.0 },
                        status: format!("failed: {e}"),
                    },
                    maps: None,
                    condb_history: Vec::new(),
                    step: None,
                    diagnostics: String::new(),
                });
                cells.push(cell);
            }
        }
    }
    Ok(SweepResults {
        spec: spec.clone(),
        phantom: setup.phantom.clone(),
        cells,
    })
}
