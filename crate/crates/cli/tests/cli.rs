use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mrf_core::container::{read_array, write_array, ArrayData, Meta};

fn mrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = mrf(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const GRID: &str = r#"{"t1_values": [600, 800, 900, 1300, 2500, 4000], "t2_values": [40, 50, 90, 110, 300, 2000]}"#;

/// Small dictionary and simulated data in `root`.
fn pipeline(root: &Path) -> (PathBuf, PathBuf) {
    let grid = root.join("grid.json");
    std::fs::write(&grid, GRID).unwrap();
    let dict = root.join("dict");
    let data = root.join("data");
    ok(&["build-dict", "--L", "40", "--seed", "3", "--grid", s(&grid), "--k", "8", "--out", s(&dict)]);
    ok(&[
        "simulate", "--dict", s(&dict), "--nx", "16", "--ny", "16", "--reduction", "4", "--noise", "0.001", "--seed", "5",
        "--out", s(&data),
    ]);
    (dict, data)
}

fn bytes(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&bytes(&dir.join("manifest.json"))).unwrap()
}

#[test]
fn build_dict_default_grid_and_rank() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["build-dict", "--L", "12", "--k", "10", "--out", s(&a)]);
    ok(&["build-dict", "--L", "12", "--k", "10", "--out", s(&b)]);
    let (_, m) = read_array(a.join("dictionary.mrfa")).unwrap();
    assert_eq!(m["atoms"], 5366);
    let (basis, _) = read_array(a.join("basis.mrfa")).unwrap();
    assert_eq!(basis.shape(), &[12, 10]);
    let (lut, _) = read_array(a.join("lut.mrfa")).unwrap();
    assert_eq!(lut.shape(), &[5366, 2]);
    for f in ["schedule.mrfa", "dictionary.mrfa", "lut.mrfa", "basis.mrfa"] {
        assert_eq!(bytes(&a.join(f)), bytes(&b.join(f)), "{f}");
    }
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["outputs"].as_array().unwrap().len(), 4);
    assert_eq!(ma["seeds"]["schedule"], 7);
}

#[test]
fn build_dict_rejects_bad_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = tmp.path().join("g.json");
    std::fs::write(&grid, r#"{"t1_values": [10], "t2_values": [50]}"#).unwrap();
    let out = mrf(&["build-dict", "--L", "10", "--grid", s(&grid), "--k", "1", "--out", s(&tmp.path().join("d"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn recon_gfb_writes_maps_and_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let (dict, data) = pipeline(tmp.path());
    let out = tmp.path().join("gfb");
    ok(&[
        "recon", "--data", s(&data), "--dict", s(&dict), "--method", "gfb-mrf", "--lambda", "5e-4", "--kmax", "4",
        "--rank", "6", "--out", s(&out),
    ]);
    for q in ["t1", "t2", "pd"] {
        let (arr, _) = read_array(out.join(format!("{q}.mrfa"))).unwrap();
        assert_eq!(arr.shape(), &[16, 16]);
    }
    let diag = String::from_utf8(bytes(&out.join("diagnostics.jsonl"))).unwrap();
    assert_eq!(diag.lines().count(), 4);
    let first: serde_json::Value = serde_json::from_str(diag.lines().next().unwrap()).unwrap();
    for key in ["iter", "alpha", "fidelity", "backtracks", "wall_ms"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    assert_eq!(manifest(&out)["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn unknown_method_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mrf(&["recon", "--data", s(tmp.path()), "--dict", s(tmp.path()), "--method", "nonsense", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid value"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    assert_eq!(mrf(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mrf(&[
        "recon", "--data", s(&tmp.path().join("none")), "--dict", s(&tmp.path().join("none")), "--method", "classical",
        "--out", s(&tmp.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn igp_without_lambda_equals_air_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (dict, data) = pipeline(tmp.path());
    let run = |method: &str, lambda: &str, dir: &str| {
        let out = tmp.path().join(dir);
        ok(&[
            "recon", "--data", s(&data), "--dict", s(&dict), "--method", method, "--lambda", lambda, "--step", "bt",
            "--kmax", "5", "--rank", "6", "--out", s(&out),
        ]);
        out
    };
    let igp = run("igp-mrf-01", "0", "igp");
    let air = run("air-mrf", "0", "air");
    let again = run("igp-mrf-01", "0", "igp2");
    for q in ["t1.mrfa", "t2.mrfa", "pd.mrfa"] {
        assert_eq!(bytes(&igp.join(q)), bytes(&air.join(q)), "{q}");
        assert_eq!(bytes(&igp.join(q)), bytes(&again.join(q)), "{q}");
    }
}

fn write_map(path: &Path, values: Vec<f64>, rows: usize, cols: usize) {
    let a = ndarray::Array2::from_shape_vec((rows, cols), values).unwrap().into_dyn();
    write_array(path, &ArrayData::F64(a), &Meta::new()).unwrap();
}

#[test]
fn eval_identity_and_scaled_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = tmp.path().join("truth");
    let same = tmp.path().join("same");
    let scaled = tmp.path().join("scaled");
    for d in [&truth, &same, &scaled] {
        std::fs::create_dir_all(d).unwrap();
    }
    let t1 = vec![800.0, 1300.0, 4000.0, 900.0];
    let t2 = vec![90.0, 110.0, 2000.0, 50.0];
    for (dir, c) in [(&truth, 1.0), (&same, 1.0), (&scaled, 1.1)] {
        write_map(&dir.join("t1.mrfa"), t1.iter().map(|v| v * c).collect(), 2, 2);
        write_map(&dir.join("t2.mrfa"), t2.iter().map(|v| v * c).collect(), 2, 2);
    }
    let mask = ndarray::Array2::from_shape_vec((2, 2), vec![1i64, 1, 1, 0]).unwrap().into_dyn();
    write_array(truth.join("mask.mrfa"), &ArrayData::I64(mask), &Meta::new()).unwrap();
    let roi = ndarray::Array2::from_shape_vec((2, 2), vec![1i64, 1, 2, 0]).unwrap().into_dyn();
    let roi_path = tmp.path().join("roi.mrfa");
    write_array(&roi_path, &ArrayData::I64(roi), &Meta::new()).unwrap();

    let csv = tmp.path().join("same.csv");
    ok(&["eval", "--maps", s(&same), "--truth", s(&truth), "--out", s(&csv)]);
    let text = String::from_utf8(bytes(&csv)).unwrap();
    assert_eq!(text, "metric,roi,t1,t2\nrelative_error,mask,0,0\n");

    let csv = tmp.path().join("scaled.csv");
    ok(&["eval", "--maps", s(&scaled), "--truth", s(&truth), "--roi", s(&roi_path), "--out", s(&csv)]);
    let text = String::from_utf8(bytes(&csv)).unwrap();
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').skip(2).map(|v| v.parse().unwrap()).collect();
    let truth_mask = [true, true, true, false];
    let expect = |est: Vec<f64>, t: &[f64]| mrf_core::bench::relative_error(&est, t, &truth_mask).unwrap();
    assert_eq!(first[0], expect(t1.iter().map(|v| v * 1.1).collect(), &t1));
    assert_eq!(first[1], expect(t2.iter().map(|v| v * 1.1).collect(), &t2));
    assert!((first[0] - 0.1).abs() < 1e-12);
    assert_eq!(text.lines().count(), 2 + 3 * 2);
    assert!(text.contains("mean,1,1155"));

    let bad = tmp.path().join("bad");
    std::fs::create_dir_all(&bad).unwrap();
    write_map(&bad.join("t1.mrfa"), vec![1.0; 6], 2, 3);
    write_map(&bad.join("t2.mrfa"), vec![1.0; 6], 2, 3);
    let out = mrf(&["eval", "--maps", s(&bad), "--truth", s(&truth), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(1));
}

fn decode_png(path: &Path) -> (u32, u32, Vec<u8>) {
    let dec = png::Decoder::new(std::fs::File::open(path).unwrap());
    let mut reader = dec.read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info.width, info.height, buf)
}

#[test]
fn render_png() {
    let tmp = tempfile::tempdir().unwrap();
    let map = tmp.path().join("m.mrfa");
    write_map(&map, vec![500.0; 12], 3, 4);
    let a = tmp.path().join("a.png");
    let b = tmp.path().join("b.png");
    ok(&["render", "--map", s(&map), "--range", "0:1000", "--out", s(&a)]);
    ok(&["render", "--map", s(&map), "--range", "0:1000", "--out", s(&b)]);
    assert_eq!(bytes(&a), bytes(&b));
    let (w, h, px) = decode_png(&a);
    assert_eq!((w, h), (4, 3));
    assert!(px.chunks(3).all(|c| c == &px[..3]));

    let ramp = tmp.path().join("r.mrfa");
    write_map(&ramp, vec![-10.0, 0.0, 1000.0, 5000.0], 1, 4);
    let c = tmp.path().join("c.png");
    ok(&["render", "--map", s(&ramp), "--range", "0:1000", "--out", s(&c)]);
    let (_, _, px) = decode_png(&c);
    assert_eq!(&px[0..3], &px[3..6]);
    assert_eq!(&px[6..9], &px[9..12]);
    assert_ne!(&px[0..3], &px[6..9]);

    let out = mrf(&["render", "--map", s(&map), "--range", "5:5", "--out", s(&a)]);
    assert_eq!(out.status.code(), Some(1));
    let out = mrf(&["render", "--map", s(&tmp.path().join("missing.mrfa")), "--range", "0:1", "--out", s(&a)]);
    assert_eq!(out.status.code(), Some(1));
}

fn sweep_spec(methods: &str) -> String {
    format!(
        r#"{{"nx": 16, "ny": 16, "lengths": [40], "noise": [0.001], "methods": {methods},
            "rank": 6, "dict_rank": 10, "k_max": 3, "reduction": 4.0, "timing": false,
            "grid": [[600, 800, 900, 1300, 2500, 4000], [40, 50, 90, 110, 300, 2000]]}}"#
    )
}

#[test]
fn sweep_csv_and_failed_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    std::fs::write(&spec, sweep_spec(r#"["classical", "gfb-mrf"]"#)).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["sweep", "--spec", s(&spec), "--out", s(&a)]);
    ok(&["sweep", "--spec", s(&spec), "--out", s(&b)]);
    let csv = String::from_utf8(bytes(&a.join("results.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(bytes(&a.join("results.csv")), bytes(&b.join("results.csv")));
    let cell = a.join("cells").join("gfb-mrf_L40_noise0.001");
    for f in ["t1.mrfa", "t2.mrfa", "pd.mrfa"] {
        assert_eq!(bytes(&cell.join(f)), bytes(&b.join("cells").join("gfb-mrf_L40_noise0.001").join(f)));
    }
    assert!(a.join("truth").join("mask.mrfa").exists());

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, sweep_spec(r#"["classical", "nonsense"]"#)).unwrap();
    let c = tmp.path().join("c");
    ok(&["sweep", "--spec", s(&bad), "--out", s(&c)]);
    let csv = String::from_utf8(bytes(&c.join("results.csv"))).unwrap();
    assert!(csv.lines().nth(2).unwrap().contains("failed"));

    let none = tmp.path().join("none.json");
    std::fs::write(&none, sweep_spec(r#"["nonsense"]"#)).unwrap();
    let out = mrf(&["sweep", "--spec", s(&none), "--out", s(&tmp.path().join("d"))]);
    assert_eq!(out.status.code(), Some(1));
}
