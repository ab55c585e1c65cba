//! Temporal subspace bases: dictionary SVD compression and autocalibration.
//!
//! Conventions: a basis `V` is `L x k` with orthonormal columns; a signal row
//! `x` (length L) is compressed as `x V` and decompressed as `x_c V^H`.

use faer::complex_native::c64 as FaerC64;
use ndarray::{Array2, ArrayView2};

use crate::container::{meta, ArrayData, Meta};
use crate::sequence::Dictionary;
use crate::{Error, Result, C64};

/// Leading right singular vectors of the dictionary.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionBasis {
    /// `L x k`, orthonormal columns.
    pub vectors: Array2<C64>,
    /// All singular values of the source matrix, descending.
    pub singular_values: Vec<f64>,
}

impl CompressionBasis {
    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn frames(&self) -> usize {
        self.vectors.nrows()
    }

    /// `rows x L -> rows x k`.
    pub fn compress(&self, signals: &ArrayView2<C64>) -> Array2<C64> {
        signals.dot(&self.vectors)
    }

    /// `rows x k -> rows x L`.
    pub fn decompress(&self, coeffs: &ArrayView2<C64>) -> Array2<C64> {
        coeffs.dot(&self.vectors.t().mapv(|z| z.conj()))
    }

    /// Keeps the first `k` columns.
    pub fn truncated(&self, k: usize) -> Result<CompressionBasis> {
        if k == 0 || k > self.rank() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate rank-{} basis to {k}",
                self.rank()
            )));
        }
        Ok(CompressionBasis {
            vectors: self.vectors.slice(ndarray::s![.., ..k]).to_owned(),
            singular_values: self.singular_values.clone(),
        })
    }

    pub fn to_container(&self) -> (ArrayData, Meta) {
        let m = meta([
            ("kind", serde_json::json!("basis")),
            ("rank", self.rank().into()),
            ("singular_values", serde_json::json!(self.singular_values)),
        ]);
        (ArrayData::C128(self.vectors.clone().into_dyn()), m)
    }

    pub fn from_container(arr: ArrayData, m: &Meta) -> Result<CompressionBasis> {
        let vectors = arr
            .into_c128()?
            .into_dimensionality::<ndarray::Ix2>()
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let singular_values = serde_json::from_value(m.get("singular_values").cloned().unwrap_or_default())
            .map_err(|e| Error::Header(format!("basis meta singular_values: {e}")))?;
        Ok(CompressionBasis {
            vectors,
            singular_values,
        })
    }

    /// Count of singular values above `max(m, n) * eps * sigma_1`.
    pub fn numerical_rank(&self, rows: usize) -> usize {
        numerical_rank(&self.singular_values, rows.max(self.frames()))
    }
}

/// Autocalibrated basis: the rank-`r` dictionary basis composed with an
/// `r x k` data-driven rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocalBasis {
    /// `L x r` dictionary basis.
    pub dict_basis: CompressionBasis,
    /// `r x k`, orthonormal columns.
    pub vac: Array2<C64>,
    /// Singular values of the autocalibration image.
    pub singular_values: Vec<f64>,
}

impl AutocalBasis {
    pub fn rank(&self) -> usize {
        self.vac.ncols()
    }

    /// `V_d_r V_ac`, an `L x k` basis with orthonormal columns.
    pub fn composed(&self) -> CompressionBasis {
        CompressionBasis {
            vectors: self.dict_basis.vectors.dot(&self.vac),
            singular_values: self.singular_values.clone(),
        }
    }
}

pub(crate) fn numerical_rank(singular_values: &[f64], dim: usize) -> usize {
    let Some(&top) = singular_values.first() else {
        return 0;
    };
    let tol = dim as f64 * f64::EPSILON * top;
    singular_values.iter().filter(|&&s| s > tol).count()
}

/// Singular values (descending) and the full thin right-singular matrix of `a`.
pub(crate) fn right_singular(a: &ArrayView2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Err(Error::Svd("empty matrix".into()));
    }
    let fa = faer::Mat::<FaerC64>::from_fn(m, n, |i, j| {
        let z = a[[i, j]];
        FaerC64::new(z.re, z.im)
    });
    let svd = fa.thin_svd();
    let p = m.min(n);
    let s = svd.s_diagonal();
    let sv: Vec<f64> = (0..p).map(|i| s.read(i).re).collect();
    let v = svd.v();
    let vecs = Array2::from_shape_fn((n, p), |(i, j)| {
        let z = v.read(i, j);
        C64::new(z.re, z.im)
    });
    if sv.iter().any(|x| !x.is_finite()) || vecs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Svd("non-finite decomposition".into()));
    }
    if sv.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Svd("singular values not sorted".into()));
    }
    Ok((sv, vecs))
}

/// Rotates each column so its largest-magnitude entry is real and positive
/// (first such entry on ties).
pub(crate) fn fix_phase(v: &mut Array2<C64>) {
    for mut col in v.columns_mut() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        if best_mag > 0.0 {
            let rot = col[best].conj() / best_mag;
            col.mapv_inplace(|z| z * rot);
        }
    }
}

fn leading(a: &ArrayView2<C64>, k: usize) -> Result<(Vec<f64>, Array2<C64>)> {
    let (sv, v) = right_singular(a)?;
    let mut lead = v.slice(ndarray::s![.., ..k]).to_owned();
    fix_phase(&mut lead);
    Ok((sv, lead))
}

/// Keeps the `k` leading right singular vectors of the fingerprint matrix.
pub fn svd_compress(dict: &Dictionary, k: usize) -> Result<CompressionBasis> {
    let (atoms, len) = dict.fingerprints.dim();
    if k == 0 || k > atoms.min(len) {
        return Err(Error::InvalidArgument(format!(
            "rank {k} outside 1..={}",
            atoms.min(len)
        )));
    }
    let (singular_values, vectors) = leading(&dict.fingerprints.view(), k)?;
    Ok(CompressionBasis {
        vectors,
        singular_values,
    })
}

/// Builds the autocalibration rotation from an `N x r` compressed image.
pub fn autocal_basis(x_ac: &ArrayView2<C64>, dict_basis: &CompressionBasis, k: usize) -> Result<AutocalBasis> {
    let r = dict_basis.rank();
    if x_ac.ncols() != r {
        return Err(Error::DimensionMismatch(format!(
            "autocalibration image has {} columns, dictionary basis rank {r}",
            x_ac.ncols()
        )));
    }
    if k == 0 || k > r {
        return Err(Error::InvalidArgument(format!("autocalibration rank {k} outside 1..={r}")));
    }
    if k > x_ac.nrows() {
        return Err(Error::InvalidArgument(format!(
            "autocalibration rank {k} exceeds voxel count {}",
            x_ac.nrows()
        )));
    }
    let (singular_values, vac) = leading(x_ac, k)?;
    Ok(AutocalBasis {
        dict_basis: dict_basis.clone(),
        vac,
        singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    fn gram_error(v: &Array2<C64>) -> f64 {
        let g = v.t().mapv(|z| z.conj()).dot(v);
        let mut e: f64 = 0.0;
        for ((i, j), z) in g.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            e = e.max((z - target).norm());
        }
        e
    }

    fn frob(a: &Array2<C64>) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn identity_basis(r: usize) -> CompressionBasis {
        CompressionBasis {
            vectors: Array2::from_shape_fn((r, r), |(i, j)| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }),
            singular_values: vec![1.0; r],
        }
    }

    #[test]
    fn phase_convention_and_orthonormality() {
        let a = random(40, 12, 1);
        let (_, v) = leading(&a.view(), 5).unwrap();
        assert!(gram_error(&v) < 1e-10);
        for col in v.columns() {
            let (imax, _) = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
            assert!(col[imax].im.abs() < 1e-14 && col[imax].re > 0.0);
        }
    }

    #[test]
    fn autocal_rejects_rank_above_r() {
        let x = random(20, 4, 2);
        assert!(autocal_basis(&x.view(), &identity_basis(4), 5).is_err());
        assert!(autocal_basis(&x.view(), &identity_basis(3), 2).is_err());
    }

    #[test]
    fn autocal_residual_matches_discarded_singular_values() {
        let x = random(60, 16, 3);
        let ac = autocal_basis(&x.view(), &identity_basis(16), 10).unwrap();
        assert!(gram_error(&ac.vac) < 1e-10);
        let proj = x.dot(&ac.vac).dot(&ac.vac.t().mapv(|z| z.conj()));
        let resid = frob(&(&x - &proj));
        let expected = ac.singular_values[10..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((resid - expected).abs() < 1e-10 * (1.0 + expected), "{resid} vs {expected}");
    }

    #[test]
    fn autocal_single_row_aligns_with_row() {
        let mut x = Array2::<C64>::zeros((10, 6));
        let row = random(1, 6, 4);
        x.row_mut(3).assign(&row.row(0));
        let ac = autocal_basis(&x.view(), &identity_basis(6), 1).unwrap();
        // X = u s v^H, so v is parallel to the conjugated row.
        let v = ac.vac.column(0);
        let inner: C64 = v.iter().zip(row.row(0)).map(|(a, b)| a.conj() * b.conj()).sum();
        let norm = frob(&row);
        assert!((inner.norm() - norm).abs() < 1e-12 * norm);
    }

    #[test]
    fn autocal_full_rank_spans_dictionary_subspace() {
        let d = random(30, 8, 5);
        let (sv, mut v) = right_singular(&d.view()).unwrap();
        fix_phase(&mut v);
        let vd = CompressionBasis {
            vectors: v,
            singular_values: sv,
        };
        let x_ac = random(50, 8, 6);
        let ac = autocal_basis(&x_ac.view(), &vd, 8).unwrap();
        let comp = ac.composed();
        assert!(gram_error(&comp.vectors) < 1e-10);
        let p1 = vd.vectors.dot(&vd.vectors.t().mapv(|z| z.conj()));
        let p2 = comp.vectors.dot(&comp.vectors.t().mapv(|z| z.conj()));
        assert!(frob(&(&p1 - &p2)) < 1e-10);
    }
}
