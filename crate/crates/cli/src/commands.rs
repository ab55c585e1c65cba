use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use mrf_core::bench::{
    add_noise, default_classes, make_phantom, relative_error, roi_stats, run_sweep, simulate_measurements, NoiseSpec,
    SweepSpec,
};
use mrf_core::forward::{
    make_cartesian_scheme, make_coil_maps, make_spiral_scheme, CoilMaps, ForwardModel, KSpaceData, SamplingScheme,
    SpiralParams,
};
use mrf_core::sequence::{build_dictionary, make_schedule, svd_compress, CompressionBasis, Dictionary, SequenceSchedule, TissueGrid};
use mrf_core::solvers::{run_recon, Method, ReconContext, SolverConfig, StepStrategy};
use mrf_core::Geometry;
use serde::Deserialize;

use crate::manifest::Recorder;
use crate::store::{self, ensure_dir, map_file, read, read_labels, read_map, write, write_map, write_mask};
use crate::{BuildDictArgs, EvalArgs, ReconArgs, RenderArgs, SamplingKind, SimulateArgs, StepArg, SweepArgs};

#[derive(Deserialize)]
struct GridFile {
    t1_values: Vec<f64>,
    t2_values: Vec<f64>,
}

fn load_grid(spec: &str) -> Result<TissueGrid> {
    if spec == "default" {
        return Ok(TissueGrid::default_grid());
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading grid {spec}"))?;
    let g: GridFile = serde_json::from_str(&text).with_context(|| format!("parsing grid {spec}"))?;
    Ok(TissueGrid::new(g.t1_values, g.t2_values)?)
}

fn load_schedule(path: &Path) -> Result<SequenceSchedule> {
    let (arr, m) = read(path)?;
    Ok(SequenceSchedule::from_container(arr, &m)?)
}

pub fn build_dict(a: &BuildDictArgs) -> Result<()> {
    let mut rec = Recorder::new("build-dict", a);
    let schedule = match &a.schedule {
        Some(p) => {
            rec.input(p);
            load_schedule(p)?
        }
        None => {
            rec.seed("schedule", a.seed);
            make_schedule(a.length, a.seed)
        }
    };
    let grid = load_grid(&a.grid)?;
    ensure!(
        a.k >= 1 && a.k <= schedule.len().min(grid.len()),
        "--k {} must be in 1..={}",
        a.k,
        schedule.len().min(grid.len())
    );
    let dict = build_dictionary(&schedule, &grid)?;
    let basis = svd_compress(&dict, a.k)?;
    ensure_dir(&a.out)?;
    let (arr, m) = schedule.to_container();
    rec.output(write(&a.out, store::SCHEDULE, &arr, &m)?);
    let (arr, m) = dict.to_container();
    rec.output(write(&a.out, store::DICTIONARY, &arr, &m)?);
    let (arr, m) = dict.lut_container();
    rec.output(write(&a.out, store::LUT, &arr, &m)?);
    let (arr, m) = basis.to_container();
    rec.output(write(&a.out, store::BASIS, &arr, &m)?);
    rec.finish(&a.out)?;
    println!("{} atoms, L = {}, basis rank {}", dict.num_atoms(), dict.frames(), basis.rank());
    Ok(())
}

struct DictDir {
    schedule: SequenceSchedule,
    dictionary: Dictionary,
    basis: CompressionBasis,
}

fn load_dict_dir(dir: &Path) -> Result<DictDir> {
    let schedule = load_schedule(&dir.join(store::SCHEDULE))?;
    let (arr, m) = read(&dir.join(store::DICTIONARY))?;
    let dictionary = Dictionary::from_container(arr, &m)?;
    let (arr, m) = read(&dir.join(store::BASIS))?;
    let basis = CompressionBasis::from_container(arr, &m)?;
    ensure!(
        dictionary.frames() == schedule.len() && basis.frames() == schedule.len(),
        "dictionary directory {} is inconsistent",
        dir.display()
    );
    Ok(DictDir {
        schedule,
        dictionary,
        basis,
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut rec = Recorder::new("simulate", a);
    rec.input(&a.dict);
    rec.seed("phantom", a.seed);
    let d = load_dict_dir(&a.dict)?;
    let len = d.schedule.len();
    let k = d.basis.rank();
    let g0 = Geometry::new(a.nx, a.ny, len, 1, k, k, a.coils)?;
    let scheme = match a.sampling {
        SamplingKind::Cartesian => make_cartesian_scheme(&g0, a.reduction, a.seed)?,
        SamplingKind::Spiral => make_spiral_scheme(&g0, SpiralParams::default())?,
    };
    let g = g0.with_samples(scheme.samples());
    let coils = make_coil_maps(&g, a.coils, a.seed)?;
    let phantom = make_phantom(&g, &default_classes(), a.seed)?;
    let model = ForwardModel::new(g, coils.clone(), scheme.clone(), &d.basis, "sim")?;
    let snap = a.snap.then_some(&d.dictionary.grid);
    let clean = simulate_measurements(&phantom, &d.schedule, &model, snap)?;
    let noise_seed = a.seed.wrapping_add(1);
    rec.seed("noise", noise_seed);
    let y = add_noise(
        &clean,
        &NoiseSpec {
            relative_std: a.noise,
            seed: noise_seed,
        },
    )?;

    ensure_dir(&a.out)?;
    let (arr, m) = y.to_container();
    rec.output(write(&a.out, store::KSPACE, &arr, &m)?);
    let (arr, m) = scheme.to_container();
    rec.output(write(&a.out, store::SCHEME, &arr, &m)?);
    let (arr, m) = coils.to_container(a.seed);
    rec.output(write(&a.out, store::COILS, &arr, &m)?);
    for (q, v) in [("t1", &phantom.t1), ("t2", &phantom.t2), ("pd", &phantom.pd)] {
        rec.output(write_map(&a.out, q, v, a.nx, a.ny)?);
    }
    rec.output(write_mask(&a.out, &phantom.support, a.nx, a.ny)?);
    rec.finish(&a.out)?;
    Ok(())
}

pub fn recon(a: &ReconArgs) -> Result<()> {
    let mut rec = Recorder::new("recon", a);
    rec.input(&a.data);
    rec.input(&a.dict);
    rec.seed("solver", a.seed);
    let d = load_dict_dir(&a.dict)?;
    let (arr, _) = read(&a.data.join(store::KSPACE))?;
    let y = KSpaceData::from_container(arr)?;
    let (arr, m) = read(&a.data.join(store::SCHEME))?;
    let scheme = SamplingScheme::from_container(arr, &m)?;
    let (arr, _) = read(&a.data.join(store::COILS))?;
    let coils = CoilMaps::from_container(arr)?;
    let (c, frames, samples) = y.dims();
    ensure!(
        frames == d.dictionary.frames(),
        "data has {frames} time points but the dictionary has {}",
        d.dictionary.frames()
    );
    let (nx, ny) = scheme.image_dims();
    let geometry = Geometry::new(nx, ny, frames, samples, a.rank, d.basis.rank(), c)?;
    let ctx = ReconContext::new(
        Arc::new(d.dictionary),
        d.basis,
        geometry,
        Arc::new(coils),
        Arc::new(scheme),
        a.rank,
    )?;
    let (method, label_step) = a.method;
    let step = match a.step {
        Some(StepArg::Fsz) => StepStrategy::Fsz,
        Some(StepArg::Bt) => StepStrategy::Bt,
        None => label_step,
    };
    let mut cfg = SolverConfig::new(method).with_step(step).with_lambda(a.lambda).with_k_max(a.kmax);
    cfg.rank = a.rank;
    cfg.dict_rank = ctx.basis.rank();
    cfg.seed = a.seed;
    cfg.literal_condb = a.literal_condb;
    let out = run_recon(&y, &ctx, &cfg)?;

    ensure_dir(&a.out)?;
    for (q, v) in [("t1", &out.maps.t1), ("t2", &out.maps.t2), ("pd", &out.maps.pd)] {
        rec.output(write_map(&a.out, q, v, nx, ny)?);
    }
    let diag = a.out.join("diagnostics.jsonl");
    std::fs::write(&diag, out.diagnostics_jsonl())?;
    rec.output(diag);
    rec.finish(&a.out)?;
    if method != Method::Classical {
        println!("{}: best iteration {}", cfg.label(), out.best_iter);
    }
    Ok(())
}

fn flat(a: &ndarray::Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let load = |dir: &Path, q: &str| read_map(&dir.join(map_file(q)));
    let (t1, t2) = (load(&a.maps, "t1")?, load(&a.maps, "t2")?);
    let (g1, g2) = (load(&a.truth, "t1")?, load(&a.truth, "t2")?);
    let mask_path = a.mask.clone().unwrap_or_else(|| a.truth.join(store::MASK));
    let mask_map = read_labels(&mask_path)?;
    for (name, shape) in [("t2", t2.dim()), ("truth t1", g1.dim()), ("truth t2", g2.dim()), ("mask", mask_map.dim())] {
        ensure!(shape == t1.dim(), "{name} shape {shape:?} differs from maps {:?}", t1.dim());
    }
    let mask: Vec<bool> = mask_map.iter().map(|&v| v != 0).collect();
    let mut w = String::from("metric,roi,t1,t2\n");
    let e1 = relative_error(&flat(&t1), &flat(&g1), &mask)?;
    let e2 = relative_error(&flat(&t2), &flat(&g2), &mask)?;
    w.push_str(&format!("relative_error,mask,{e1},{e2}\n"));
    if let Some(roi_path) = &a.roi {
        let labels = read_labels(roi_path)?;
        ensure!(labels.dim() == t1.dim(), "roi shape {:?} differs from maps {:?}", labels.dim(), t1.dim());
        let mut ids: Vec<i64> = labels.iter().copied().filter(|&v| v != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let roi: Vec<bool> = labels.iter().map(|&v| v == id).collect();
            let s1 = roi_stats(&flat(&t1), &roi)?;
            let s2 = roi_stats(&flat(&t2), &roi)?;
            w.push_str(&format!("mean,{id},{},{}\n", s1.mean, s2.mean));
            w.push_str(&format!("std,{id},{},{}\n", s1.std, s2.std));
            w.push_str(&format!("normalized_std,{id},{},{}\n", s1.normalized_std, s2.normalized_std));
        }
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    std::fs::write(&a.out, w).with_context(|| format!("writing {}", a.out.display()))?;
    println!("err_t1 {e1:.6} err_t2 {e2:.6}");
    Ok(())
}

pub fn render(a: &RenderArgs) -> Result<()> {
    let map = read_map(&a.map)?;
    let (lo, hi) = a.range;
    crate::render::write_png(&a.out, &map, lo, hi)
}

fn cell_dir_name(method: &str, len: usize, noise: f64) -> String {
    format!("{method}_L{len}_noise{noise}")
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let mut rec = Recorder::new("sweep", a);
    rec.input(&a.spec);
    let text = std::fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let mut spec: SweepSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.spec.display()))?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    rec.seed("sweep", spec.seed);
    let results = run_sweep(&spec)?;

    ensure_dir(&a.out)?;
    let csv_path = a.out.join("results.csv");
    std::fs::write(&csv_path, results.to_csv()?)?;
    rec.output(csv_path);
    let spec_path = a.out.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string_pretty(&spec)?)?;
    rec.output(spec_path);
    let ph = &results.phantom;
    let truth = a.out.join("truth");
    ensure_dir(&truth)?;
    for (q, v) in [("t1", &ph.t1), ("t2", &ph.t2), ("pd", &ph.pd)] {
        rec.output(write_map(&truth, q, v, ph.nx, ph.ny)?);
    }
    rec.output(write_mask(&truth, &ph.support, ph.nx, ph.ny)?);

    let mut ok = 0;
    for cell in &results.cells {
        let r = &cell.row;
        if r.status != "ok" {
            eprintln!("cell {} L={} noise={}: {}", r.method, r.length, r.noise, r.status);
            continue;
        }
        ok += 1;
        let dir = a.out.join("cells").join(cell_dir_name(&r.method, r.length, r.noise));
        ensure_dir(&dir)?;
        if let Some(maps) = &cell.maps {
            for (q, v) in [("t1", &maps.t1), ("t2", &maps.t2), ("pd", &maps.pd)] {
                rec.output(write_map(&dir, q, v, ph.nx, ph.ny)?);
            }
        }
        if !cell.diagnostics.is_empty() {
            let p = dir.join("diagnostics.jsonl");
            std::fs::write(&p, &cell.diagnostics)?;
            rec.output(p);
        }
    }
    rec.finish(&a.out)?;
    if ok == 0 {
        bail!("every sweep cell failed");
    }
    println!("{ok}/{} cells succeeded", results.cells.len());
    Ok(())
}
