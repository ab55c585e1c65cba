//! Container files exchanged between subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mrf_core::container::{meta, read_array, write_array, ArrayData, Meta};
use ndarray::Array2;

pub const SCHEDULE: &str = "schedule.mrfa";
pub const DICTIONARY: &str = "dictionary.mrfa";
pub const LUT: &str = "lut.mrfa";
pub const BASIS: &str = "basis.mrfa";
pub const KSPACE: &str = "kspace.mrfa";
pub const SCHEME: &str = "scheme.mrfa";
pub const COILS: &str = "coils.mrfa";
pub const MASK: &str = "mask.mrfa";

pub fn map_file(name: &str) -> String {
    format!("{name}.mrfa")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn read(path: &Path) -> Result<(ArrayData, Meta)> {
    read_array(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes a container and returns its path.
pub fn write(dir: &Path, name: &str, arr: &ArrayData, m: &Meta) -> Result<PathBuf> {
    let path = dir.join(name);
    write_array(&path, arr, m).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn map_meta(quantity: &str) -> Meta {
    let unit = if quantity == "pd" { "a.u." } else { "ms" };
    meta([("quantity", quantity), ("unit", unit)])
}

pub fn write_map(dir: &Path, quantity: &str, values: &[f64], nx: usize, ny: usize) -> Result<PathBuf> {
    let a = Array2::from_shape_vec((nx, ny), values.to_vec())?.into_dyn();
    write(dir, &map_file(quantity), &ArrayData::F64(a), &map_meta(quantity))
}

pub fn write_mask(dir: &Path, mask: &[bool], nx: usize, ny: usize) -> Result<PathBuf> {
    let a = Array2::from_shape_vec((nx, ny), mask.iter().map(|&b| b as i64).collect())?.into_dyn();
    write(dir, MASK, &ArrayData::I64(a), &meta([("quantity", "mask")]))
}

/// A 2-D real map.
pub fn read_map(path: &Path) -> Result<Array2<f64>> {
    let (arr, _) = read(path)?;
    let a = match arr {
        ArrayData::F64(a) => a,
        ArrayData::I64(a) => a.mapv(|v| v as f64),
        ArrayData::C128(_) => bail!("{}: expected a real map", path.display()),
    };
    a.into_dimensionality::<ndarray::Ix2>()
        .with_context(|| format!("{}: expected a 2-D map", path.display()))
}

/// A 2-D integer label image.
pub fn read_labels(path: &Path) -> Result<Array2<i64>> {
    let (arr, _) = read(path)?;
    let a = match arr {
        ArrayData::I64(a) => a,
        ArrayData::F64(a) => a.mapv(|v| v.round() as i64),
        ArrayData::C128(_) => bail!("{}: expected integer labels", path.display()),
    };
    a.into_dimensionality::<ndarray::Ix2>()
        .with_context(|| format!("{}: expected a 2-D label image", path.display()))
}
