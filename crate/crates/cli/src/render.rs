use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Viridis sampled at 9 evenly spaced points.
const VIRIDIS: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(lo)?, p(hi)?))
}

/// Maps `t` in `[0, 1]` to an RGB triple.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (VIRIDIS[i][c] * (1.0 - f) + VIRIDIS[i + 1][c] * f).round() as u8;
    }
    out
}

/// RGB pixels of an `rows x cols` map, window `[lo, hi]`, values clamped.
pub fn to_rgb(map: &ndarray::Array2<f64>, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        bail!("display range needs finite lo < hi, got {lo}:{hi}");
    }
    Ok(map.iter().flat_map(|&v| colormap((v - lo) / (hi - lo))).collect())
}

pub fn write_png(path: &Path, map: &ndarray::Array2<f64>, lo: f64, hi: f64) -> Result<()> {
    let rgb = to_rgb(map, lo, hi)?;
    let (rows, cols) = map.dim();
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), cols as u32, rows as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header()?;
    w.write_image_data(&rgb)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints_and_clamping() {
        assert_eq!(colormap(0.0), [68, 1, 84]);
        assert_eq!(colormap(1.0), [253, 231, 37]);
        assert_eq!(colormap(-3.0), colormap(0.0));
        assert_eq!(colormap(7.0), colormap(1.0));
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0:4000").unwrap(), (0.0, 4000.0));
        assert_eq!(parse_range("-1.5:2").unwrap(), (-1.5, 2.0));
        assert!(parse_range("5").is_err());
        assert!(to_rgb(&ndarray::Array2::zeros((2, 2)), 1.0, 1.0).is_err());
    }
}
