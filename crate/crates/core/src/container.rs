//! The `.mrfa` array container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MRFA" | version: u32 = 1 | header_len: u32 | header (UTF-8 JSON) | payload
//! ```
//!
//! The header is `{"dtype": "c128"|"f64"|"i64", "shape": [..], "meta": {..}}`.
//! The payload holds the values in row-major order; a `c128` element is the
//! real part followed by the imaginary part, each an `f64`.

use std::fs;
use std::path::Path;

use ndarray::{ArrayD, IxDyn};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result, C64};

pub const MAGIC: [u8; 4] = *b"MRFA";
pub const VERSION: u32 = 1;
pub const EXTENSION: &str = "mrfa";

/// Free-form metadata stored alongside an array.
pub type Meta = Map<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "c128")]
    C128,
    #[serde(rename = "f64")]
    F64,
    #[serde(rename = "i64")]
    I64,
}

impl Dtype {
    pub fn element_size(self) -> usize {
        match self {
            Dtype::C128 => 16,
            Dtype::F64 | Dtype::I64 => 8,
        }
    }
}

/// Array payload of one of the supported element types.
#[derive(Clone, Debug, PartialEq)]
pub enum ArrayData {
    C128(ArrayD<C64>),
    F64(ArrayD<f64>),
    I64(ArrayD<i64>),
}

impl ArrayData {
    pub fn dtype(&self) -> Dtype {
        match self {
            ArrayData::C128(_) => Dtype::C128,
            ArrayData::F64(_) => Dtype::F64,
            ArrayData::I64(_) => Dtype::I64,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            ArrayData::C128(a) => a.shape(),
            ArrayData::F64(a) => a.shape(),
            ArrayData::I64(a) => a.shape(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_c128(self) -> Result<ArrayD<C64>> {
        match self {
            ArrayData::C128(a) => Ok(a),
            other => Err(Error::Header(format!("expected c128, found {:?}", other.dtype()))),
        }
    }

    pub fn into_f64(self) -> Result<ArrayD<f64>> {
        match self {
            ArrayData::F64(a) => Ok(a),
            other => Err(Error::Header(format!("expected f64, found {:?}", other.dtype()))),
        }
    }

    pub fn into_i64(self) -> Result<ArrayD<i64>> {
        match self {
            ArrayData::I64(a) => Ok(a),
            other => Err(Error::Header(format!("expected i64, found {:?}", other.dtype()))),
        }
    }
}

impl From<ArrayD<C64>> for ArrayData {
    fn from(a: ArrayD<C64>) -> Self {
        ArrayData::C128(a)
    }
}

impl From<ArrayD<f64>> for ArrayData {
    fn from(a: ArrayD<f64>) -> Self {
        ArrayData::F64(a)
    }
}

impl From<ArrayD<i64>> for ArrayData {
    fn from(a: ArrayD<i64>) -> Self {
        ArrayData::I64(a)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
    meta: Meta,
}

/// Serializes `arr` and `meta` into container bytes.
pub fn encode(arr: &ArrayData, meta: &Meta) -> Result<Vec<u8>> {
    let header = Header {
        dtype: arr.dtype(),
        shape: arr.shape().to_vec(),
        meta: meta.clone(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::Header(e.to_string()))?;
    let payload_len = arr.len() * arr.dtype().element_size();
    let mut out = Vec::with_capacity(12 + header_bytes.len() + payload_len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    match arr {
        ArrayData::C128(a) => {
            for (i, z) in a.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite(i));
                }
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        ArrayData::F64(a) => {
            for (i, v) in a.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(i));
                }
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        ArrayData::I64(a) => {
            for v in a.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Parses container bytes.
pub fn decode(bytes: &[u8]) -> Result<(ArrayData, Meta)> {
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            expected: 12,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice"));
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4-byte slice")) as usize;
    let header_end = 12 + header_len;
    if bytes.len() < header_end {
        return Err(Error::Truncated {
            expected: header_end,
            found: bytes.len(),
        });
    }
    let header: Header = serde_json::from_slice(&bytes[12..header_end])
        .map_err(|e| Error::Header(e.to_string()))?;
    let count: usize = header.shape.iter().product();
    let expected = header_end + count * header.dtype.element_size();
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Header(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let payload = &bytes[header_end..];
    let word = |i: usize| -> [u8; 8] { payload[8 * i..8 * i + 8].try_into().expect("8-byte slice") };
    let shape = IxDyn(&header.shape);
    let data = match header.dtype {
        Dtype::C128 => {
            let v: Vec<C64> = (0..count)
                .map(|i| C64::new(f64::from_le_bytes(word(2 * i)), f64::from_le_bytes(word(2 * i + 1))))
                .collect();
            ArrayData::C128(ArrayD::from_shape_vec(shape, v).expect("length checked"))
        }
        Dtype::F64 => {
            let v: Vec<f64> = (0..count).map(|i| f64::from_le_bytes(word(i))).collect();
            ArrayData::F64(ArrayD::from_shape_vec(shape, v).expect("length checked"))
        }
        Dtype::I64 => {
            let v: Vec<i64> = (0..count).map(|i| i64::from_le_bytes(word(i))).collect();
            ArrayData::I64(ArrayD::from_shape_vec(shape, v).expect("length checked"))
        }
    };
    Ok((data, header.meta))
}

/// Writes an array container to `path`. The parent directory must exist.
pub fn write_array(path: impl AsRef<Path>, arr: &ArrayData, meta: &Meta) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(arr, meta)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_array(path: impl AsRef<Path>) -> Result<(ArrayData, Meta)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Builds a [`Meta`] map from `(key, value)` pairs.
pub fn meta<I, K, V>(pairs: I) -> Meta
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<Value>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn zero_real_array_layout() {
        let arr = ArrayData::F64(Array2::<f64>::zeros((2, 2)).into_dyn());
        let bytes = encode(&arr, &Meta::new()).unwrap();
        assert_eq!(&bytes[0..4], b"MRFA");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header: Value = serde_json::from_slice(&bytes[12..12 + hlen]).unwrap();
        assert_eq!(header["dtype"], "f64");
        assert_eq!(header["shape"], serde_json::json!([2, 2]));
        let payload = &bytes[12 + hlen..];
        assert_eq!(payload.len(), 32);
        assert!(payload.iter().all(|&b| b == 0));
    }

    #[test]
    fn payload_length_for_large_complex_shape() {
        let arr = ArrayData::C128(ArrayD::zeros(IxDyn(&[256, 256, 10])));
        let bytes = encode(&arr, &Meta::new()).unwrap();
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        assert_eq!(bytes.len() - 12 - hlen, 10_485_760);
    }

    #[test]
    fn distinct_errors() {
        let arr = ArrayData::F64(ArrayD::from_shape_vec(IxDyn(&[3]), vec![1.0, 2.0, 3.0]).unwrap());
        let mut bytes = encode(&arr, &Meta::new()).unwrap();

        let mut bad = bytes.clone();
        bad[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(&bad), Err(Error::BadMagic(m)) if &m == b"XXXX"));

        let mut badv = bytes.clone();
        badv[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode(&badv), Err(Error::UnsupportedVersion(2))));

        bytes.truncate(bytes.len() - 8);
        assert!(matches!(decode(&bytes), Err(Error::Truncated { .. })));
    }

    #[test]
    fn rejects_non_finite_on_write() {
        let arr = ArrayData::C128(
            ArrayD::from_shape_vec(IxDyn(&[2]), vec![C64::new(1.0, 0.0), C64::new(0.0, f64::NAN)]).unwrap(),
        );
        assert!(matches!(encode(&arr, &Meta::new()), Err(Error::NonFinite(1))));
    }

    #[test]
    fn file_round_trip_preserves_unknown_meta() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mrfa");
        let arr = ArrayData::I64(ArrayD::from_shape_vec(IxDyn(&[2, 3]), (0..6).collect()).unwrap());
        let mut m = meta([("kind", "test")]);
        m.insert("nested".into(), serde_json::json!({"x": [1, 2.5, null], "zz": true}));
        write_array(&path, &arr, &m).unwrap();
        let (back, m2) = read_array(&path).unwrap();
        assert_eq!(back, arr);
        assert_eq!(m2, m);
    }

    #[test]
    fn missing_parent_directory_is_io_error() {
        let arr = ArrayData::F64(ArrayD::zeros(IxDyn(&[1])));
        let r = write_array("/nonexistent-dir/x/y.mrfa", &arr, &Meta::new());
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    fn any_array() -> impl Strategy<Value = ArrayData> {
        let shape = prop::collection::vec(1usize..5, 0..4);
        (shape, 0u8..3).prop_flat_map(|(shape, kind)| {
            let n: usize = shape.iter().product();
            let s = shape.clone();
            match kind {
                0 => prop::collection::vec((-1e300f64..1e300, -1e300f64..1e300), n)
                    .prop_map(move |v| {
                        let v = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
                        ArrayData::C128(ArrayD::from_shape_vec(IxDyn(&s), v).unwrap())
                    })
                    .boxed(),
                1 => prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, n)
                    .prop_map(move |v| ArrayData::F64(ArrayD::from_shape_vec(IxDyn(&s), v).unwrap()))
                    .boxed(),
                _ => prop::collection::vec(any::<i64>(), n)
                    .prop_map(move |v| ArrayData::I64(ArrayD::from_shape_vec(IxDyn(&s), v).unwrap()))
                    .boxed(),
            }
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(arr in any_array()) {
            let bytes = encode(&arr, &meta([("k", 1)])).unwrap();
            let (back, _) = decode(&bytes).unwrap();
            let again = encode(&back, &meta([("k", 1)])).unwrap();
            prop_assert_eq!(bytes, again);
        }
    }
}
