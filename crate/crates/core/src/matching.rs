//! Bloch-manifold projection by exhaustive fingerprint matching.
//!
//! For each voxel `x_i` the selected atom maximizes
//! `|<D_c(k,:), x_i>| / ||D_c(k,:)||`, the proton density is
//! `max(Re<D_c(k^,:), x_i> / ||D_c(k^,:)||^2, 0)` and the voxel is
//! re-synthesized as `rho_i D_c(k^,:)`. Ties go to the smallest atom index.
//! With an autocalibration rotation `V_ac`, the atoms are replaced by
//! `D_c(k,:) V_ac` in the inner products and the re-synthesis, while the
//! norms stay those of the rank-`r` atoms.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::forward::CompressedImage;
use crate::linalg::inner_slices;
use crate::sequence::{AutocalBasis, CompressionBasis, Dictionary};
use crate::{Error, Result, C64};

/// Dictionary in the compressed domain.
#[derive(Clone, Debug)]
pub struct CompressedDictionary {
    /// `atoms x rank` compressed fingerprints `D V`.
    pub atoms: Array2<C64>,
    /// `||D_c(k,:)||_2` per atom.
    pub norms: Vec<f64>,
    /// `D_c V_ac` when an autocalibration rotation is in force.
    pub projected: Option<Array2<C64>>,
}

impl CompressedDictionary {
    pub fn new(dict: &Dictionary, basis: &CompressionBasis) -> Result<Self> {
        if dict.frames() != basis.frames() {
            return Err(Error::DimensionMismatch(format!(
                "dictionary has {} frames, basis {}",
                dict.frames(),
                basis.frames()
            )));
        }
        Self::from_atoms(basis.compress(&dict.fingerprints.view()))
    }

    pub fn from_atoms(atoms: Array2<C64>) -> Result<Self> {
        if atoms.nrows() == 0 {
            return Err(Error::EmptyDictionary);
        }
        let norms: Vec<f64> = atoms
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        if let Some(k) = norms.iter().position(|&n| !(n > 0.0)) {
            return Err(Error::InvalidArgument(format!("compressed atom {k} has zero norm")));
        }
        Ok(CompressedDictionary {
            atoms,
            norms,
            projected: None,
        })
    }

    /// Precomputes `D_c V_ac`; the dictionary must be stored at rank `r`.
    pub fn with_autocal(&self, ac: &AutocalBasis) -> Result<Self> {
        if self.atoms.ncols() != ac.vac.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "dictionary rank {} vs autocalibration rows {}",
                self.atoms.ncols(),
                ac.vac.nrows()
            )));
        }
        Ok(CompressedDictionary {
            atoms: self.atoms.clone(),
            norms: self.norms.clone(),
            projected: Some(self.atoms.dot(&ac.vac)),
        })
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.nrows()
    }

    /// Column count of the vectors the data is matched against.
    pub fn match_rank(&self) -> usize {
        self.projected.as_ref().map_or(self.atoms.ncols(), |p| p.ncols())
    }

    fn match_atoms(&self) -> &Array2<C64> {
        self.projected.as_ref().unwrap_or(&self.atoms)
    }
}

/// Per-voxel matching output.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub atom_index: Vec<usize>,
    pub rho: Vec<f64>,
    pub resynthesized: CompressedImage,
}

/// Quantitative maps read from the look-up table.
#[derive(Clone, Debug, PartialEq)]
pub struct TissueMaps {
    /// ms
    pub t1: Vec<f64>,
    /// ms
    pub t2: Vec<f64>,
    pub pd: Vec<f64>,
    pub atom_index: Vec<usize>,
}

/// Normalized, conjugated atoms split into real and imaginary planes.
struct ScoreTable {
    rank: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ScoreTable {
    fn new(atoms: &Array2<C64>, norms: &[f64]) -> Self {
        let rank = atoms.ncols();
        let mut re = Vec::with_capacity(atoms.len());
        let mut im = Vec::with_capacity(atoms.len());
        for (row, &n) in atoms.rows().into_iter().zip(norms) {
            for z in row {
                re.push(z.re / n);
                im.push(-z.im / n);
            }
        }
        ScoreTable { rank, re, im }
    }

    /// Index maximizing the normalized correlation magnitude.
    fn best(&self, x: ArrayView1<C64>) -> usize {
        let xr: Vec<f64> = x.iter().map(|z| z.re).collect();
        let xi: Vec<f64> = x.iter().map(|z| z.im).collect();
        let mut best = 0;
        let mut best_score = -1.0;
        for (k, (ar, ai)) in self.re.chunks_exact(self.rank).zip(self.im.chunks_exact(self.rank)).enumerate() {
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..self.rank {
                sr += ar[j] * xr[j] - ai[j] * xi[j];
                si += ar[j] * xi[j] + ai[j] * xr[j];
            }
            let score = sr * sr + si * si;
            if score > best_score {
                best_score = score;
                best = k;
            }
        }
        best
    }
}

/// Projects every voxel of `x` onto the compressed Bloch cone.
pub fn match_image(x: &CompressedImage, dict: &CompressedDictionary) -> Result<MatchResult> {
    if dict.num_atoms() == 0 {
        return Err(Error::EmptyDictionary);
    }
    let atoms = dict.match_atoms();
    if x.rank() != atoms.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "image rank {} vs dictionary rank {}",
            x.rank(),
            atoms.ncols()
        )));
    }
    let table = ScoreTable::new(atoms, &dict.norms);
    let picks: Vec<(usize, f64)> = (0..x.voxels())
        .into_par_iter()
        .map(|i| {
            let row = x.data.row(i);
            let k = table.best(row);
            let atom = atoms.row(k);
            let c = inner_slices(atom.as_slice().expect("row-major"), row.as_slice().expect("row-major"));
            let rho = (c.re / (dict.norms[k] * dict.norms[k])).max(0.0);
            (k, rho)
        })
        .collect();
    let mut resynth = Array2::zeros(x.data.dim());
    for (i, &(k, rho)) in picks.iter().enumerate() {
        if rho > 0.0 {
            resynth.row_mut(i).assign(&atoms.row(k).mapv(|z| z * rho));
        }
    }
    Ok(MatchResult {
        atom_index: picks.iter().map(|p| p.0).collect(),
        rho: picks.iter().map(|p| p.1).collect(),
        resynthesized: x.with_data(resynth),
    })
}

/// Matching with an explicit autocalibration rotation; equivalent to
/// [`match_image`] on `dict.with_autocal(ac)`.
pub fn match_autocal(x: &CompressedImage, dict: &CompressedDictionary, ac: &AutocalBasis) -> Result<MatchResult> {
    match_image(x, &dict.with_autocal(ac)?)
}

/// Reads (T1, T2) from the look-up table. Voxels with zero density report
/// `T1 = T2 = 0`.
pub fn lut_lookup(result: &MatchResult, dict: &Dictionary) -> Result<TissueMaps> {
    let n = result.atom_index.len();
    let mut maps = TissueMaps {
        t1: vec![0.0; n],
        t2: vec![0.0; n],
        pd: result.rho.clone(),
        atom_index: result.atom_index.clone(),
    };
    for (i, (&k, &rho)) in result.atom_index.iter().zip(&result.rho).enumerate() {
        let (t1, t2) = dict.lut(k)?;
        if rho > 0.0 {
            maps.t1[i] = t1;
            maps.t2[i] = t2;
        }
    }
    Ok(maps)
}
