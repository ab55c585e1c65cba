use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::container::{meta, ArrayData, Meta};
use crate::sequence::{EpgSimulator, SequenceSchedule};
use crate::{Error, Result, C64};

/// The (T1, T2) grid over which fingerprints are simulated.
///
/// Atoms are ordered T1-major ascending, then T2 ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TissueGrid {
    pub t1_values: Vec<f64>,
    pub t2_values: Vec<f64>,
    pub atoms: Vec<(f64, f64)>,
}

fn ramp(start: f64, stop: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(move |i| start + step * i as f64)
}

impl TissueGrid {
    /// Cartesian product of the two value lists, keeping only `T1 >= T2`.
    pub fn new(mut t1_values: Vec<f64>, mut t2_values: Vec<f64>) -> Result<TissueGrid> {
        if t1_values.iter().chain(&t2_values).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument(
                "grid values must be positive and finite".into(),
            ));
        }
        t1_values.sort_by(f64::total_cmp);
        t1_values.dedup();
        t2_values.sort_by(f64::total_cmp);
        t2_values.dedup();
        let atoms: Vec<(f64, f64)> = t1_values
            .iter()
            .flat_map(|&t1| t2_values.iter().filter(move |&&t2| t1 >= t2).map(move |&t2| (t1, t2)))
            .collect();
        if atoms.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(TissueGrid {
            t1_values,
            t2_values,
            atoms,
        })
    }

    /// The default 5366-atom grid.
    pub fn default_grid() -> TissueGrid {
        let t1: Vec<f64> = ramp(10.0, 100.0, 10.0)
            .chain(ramp(120.0, 1000.0, 20.0))
            .chain(ramp(1040.0, 2000.0, 40.0))
            .chain(ramp(2050.0, 4500.0, 100.0))
            .collect();
        let t2: Vec<f64> = ramp(2.0, 10.0, 2.0)
            .chain(ramp(15.0, 100.0, 5.0))
            .chain(ramp(110.0, 300.0, 10.0))
            .chain(ramp(350.0, 800.0, 50.0))
            .chain(ramp(900.0, 1600.0, 100.0))
            .chain(ramp(1800.0, 3000.0, 200.0))
            .collect();
        TissueGrid::new(t1, t2).expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Stable hash of the atom list, recorded in artifact metadata.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (t1, t2) in &self.atoms {
            h.update(t1.to_le_bytes());
            h.update(t2.to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Raw (unnormalized) fingerprints, one row per grid atom.
#[derive(Clone, Debug)]
pub struct Dictionary {
    pub grid: TissueGrid,
    /// `atoms x L` fingerprint matrix.
    pub fingerprints: Array2<C64>,
}

impl Dictionary {
    pub fn from_parts(grid: TissueGrid, fingerprints: Array2<C64>) -> Result<Dictionary> {
        if fingerprints.nrows() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} fingerprint rows for {} atoms",
                fingerprints.nrows(),
                grid.len()
            )));
        }
        Ok(Dictionary { grid, fingerprints })
    }

    pub fn num_atoms(&self) -> usize {
        self.grid.len()
    }

    pub fn frames(&self) -> usize {
        self.fingerprints.ncols()
    }

    /// (T1, T2) of atom `index`.
    pub fn lut(&self, index: usize) -> Result<(f64, f64)> {
        self.grid.atoms.get(index).copied().ok_or(Error::IndexOutOfRange {
            index,
            len: self.num_atoms(),
        })
    }

    /// Fingerprints plus the grid axes in the meta.
    pub fn to_container(&self) -> (ArrayData, Meta) {
        let m = meta([
            ("kind", serde_json::json!("dictionary")),
            ("atoms", self.num_atoms().into()),
            ("L", self.frames().into()),
            ("grid_hash", self.grid.hash().into()),
            ("t1_values", serde_json::json!(self.grid.t1_values)),
            ("t2_values", serde_json::json!(self.grid.t2_values)),
        ]);
        (ArrayData::C128(self.fingerprints.clone().into_dyn()), m)
    }

    pub fn from_container(arr: ArrayData, m: &Meta) -> Result<Dictionary> {
        let axis = |k: &str| -> Result<Vec<f64>> {
            serde_json::from_value(m.get(k).cloned().unwrap_or_default())
                .map_err(|e| Error::Header(format!("dictionary meta {k}: {e}")))
        };
        let grid = TissueGrid::new(axis("t1_values")?, axis("t2_values")?)?;
        if let Some(h) = m.get("grid_hash").and_then(|v| v.as_str()) {
            if h != grid.hash() {
                return Err(Error::Header(format!("grid hash {h} does not match axes ({})", grid.hash())));
            }
        }
        let fp = arr
            .into_c128()?
            .into_dimensionality::<ndarray::Ix2>()
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Dictionary::from_parts(grid, fp)
    }

    /// `atoms x 2` look-up table of (T1, T2) in ms.
    pub fn lut_container(&self) -> (ArrayData, Meta) {
        let a = Array2::from_shape_fn((self.num_atoms(), 2), |(i, j)| {
            let (t1, t2) = self.grid.atoms[i];
            if j == 0 {
                t1
            } else {
                t2
            }
        });
        let m = meta([
            ("kind", serde_json::json!("lut")),
            ("columns", serde_json::json!(["t1_ms", "t2_ms"])),
        ]);
        (ArrayData::F64(a.into_dyn()), m)
    }

    /// Dictionary restricted to the first `len` time points.
    pub fn truncate(&self, len: usize) -> Dictionary {
        let len = len.min(self.frames());
        Dictionary {
            grid: self.grid.clone(),
            fingerprints: self.fingerprints.slice(ndarray::s![.., ..len]).to_owned(),
        }
    }
}

/// Simulates one fingerprint per grid atom.
pub fn build_dictionary(schedule: &SequenceSchedule, grid: &TissueGrid) -> Result<Dictionary> {
    build_dictionary_with(schedule, grid, &EpgSimulator::default())
}

pub fn build_dictionary_with(
    schedule: &SequenceSchedule,
    grid: &TissueGrid,
    sim: &EpgSimulator,
) -> Result<Dictionary> {
    if grid.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let len = schedule.len();
    let rows: Vec<Vec<C64>> = grid
        .atoms
        .par_iter()
        .enumerate()
        .map(|(atom, &(t1, t2))| {
            let wrap = |reason: String| Error::Simulation { atom, t1, t2, reason };
            let sig = sim.simulate(schedule, t1, t2, 1.0).map_err(|e| wrap(e.to_string()))?;
            if sig.iter().all(|z| z.norm_sqr() == 0.0) {
                return Err(wrap("all-zero fingerprint".into()));
            }
            Ok(sig)
        })
        .collect::<Result<_>>()?;
    let mut fingerprints = Array2::zeros((grid.len(), len));
    for (mut row, sig) in fingerprints.rows_mut().into_iter().zip(rows) {
        row.assign(&ndarray::Array1::from(sig));
    }
    Ok(Dictionary {
        grid: grid.clone(),
        fingerprints,
    })
}
