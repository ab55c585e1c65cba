mod common;

use common::{brute, l2, random_basis, random_matrix};
use mrf_core::forward::CompressedImage;
use mrf_core::matching::{match_autocal, match_image, CompressedDictionary};
use mrf_core::sequence::{autocal_basis, svd_compress, AutocalBasis, Dictionary, TissueGrid};
use proptest::prelude::*;

fn eight_atom_dictionary(seed: u64, frames: usize) -> Dictionary {
    let grid = TissueGrid::new(vec![400.0, 600.0, 800.0, 1000.0], vec![50.0, 100.0]).unwrap();
    Dictionary::from_parts(grid, random_matrix(8, frames, seed)).unwrap()
}

#[test]
fn compressed_match_equals_uncompressed_brute_force() {
    let dict = eight_atom_dictionary(1, 20);
    let basis = svd_compress(&dict, 8).unwrap();
    let dc = CompressedDictionary::new(&dict, &basis).unwrap();
    let coeffs = random_matrix(64, 8, 2);
    let signals = coeffs.dot(&dict.fingerprints);
    let x = CompressedImage {
        data: basis.compress(&signals.view()),
        basis_id: "svd".into(),
    };
    let res = match_image(&x, &dc).unwrap();
    let raw_norms: Vec<f64> = dict.fingerprints.rows().into_iter().map(l2).collect();
    for i in 0..64 {
        let (k, rho) = brute(&dict.fingerprints, &raw_norms, signals.row(i));
        assert_eq!(res.atom_index[i], k, "voxel {i}");
        assert!((res.rho[i] - rho).abs() <= 1e-12 * rho.max(1.0), "voxel {i}: {} vs {rho}", res.rho[i]);
    }
}

fn autocal_setup(seed: u64, r: usize, k: usize) -> (CompressedDictionary, AutocalBasis) {
    let dict = eight_atom_dictionary(seed, 24);
    let basis = svd_compress(&dict, r).unwrap();
    let dc = CompressedDictionary::new(&dict, &basis).unwrap();
    let xac = random_matrix(40, r, seed + 7);
    let ac = autocal_basis(&xac.view(), &basis, k).unwrap();
    (dc, ac)
}

#[test]
fn autocal_match_equals_literal_formula() {
    let (dc, ac) = autocal_setup(3, 8, 5);
    let projected = dc.atoms.dot(&ac.vac);
    let x = CompressedImage {
        data: random_matrix(64, 5, 4),
        basis_id: "ac".into(),
    };
    let res = match_autocal(&x, &dc, &ac).unwrap();
    for i in 0..64 {
        let (k, rho) = brute(&projected, &dc.norms, x.data.row(i));
        assert_eq!(res.atom_index[i], k);
        assert!((res.rho[i] - rho).abs() <= 1e-12 * rho.max(1.0));
        let expect = projected.row(k).mapv(|z| z * rho);
        let diff = l2((&res.resynthesized.data.row(i) - &expect).view());
        assert!(diff <= 1e-12 * l2(expect.view()).max(1.0));
    }
}

#[test]
fn autocal_unitary_matches_rotated_data() {
    let (dc, ac) = autocal_setup(5, 8, 8);
    let y = random_matrix(32, 8, 6);
    let rotated = CompressedImage {
        data: y.dot(&ac.vac),
        basis_id: "ac".into(),
    };
    let plain = CompressedImage {
        data: y,
        basis_id: "svd".into(),
    };
    let a = match_autocal(&rotated, &dc, &ac).unwrap();
    let b = match_image(&plain, &dc).unwrap();
    assert_eq!(a.atom_index, b.atom_index);
    for (p, q) in a.rho.iter().zip(&b.rho) {
        assert!((p - q).abs() < 1e-12 * q.max(1.0));
    }
}

#[test]
fn autocal_scaled_projected_atom_recovered() {
    let dict = eight_atom_dictionary(8, 24);
    let basis = svd_compress(&dict, 8).unwrap();
    let dc = CompressedDictionary::new(&dict, &basis).unwrap();
    // A rotation whose column space contains every atom keeps each atom's
    // projected norm equal to its rank-r norm.
    let ac = AutocalBasis {
        dict_basis: basis.clone(),
        vac: random_basis(8, 8, 9).vectors,
        singular_values: vec![1.0; 8],
    };
    let x = CompressedImage {
        data: dc.atoms.row(6).dot(&ac.vac).mapv(|z| z * 2.25).insert_axis(ndarray::Axis(0)),
        basis_id: "ac".into(),
    };
    let r = match_autocal(&x, &dc, &ac).unwrap();
    assert_eq!(r.atom_index, vec![6]);
    assert!((r.rho[0] - 2.25).abs() < 1e-12);
}

#[test]
fn autocal_rank_mismatch_rejected() {
    let (dc, ac) = autocal_setup(2, 8, 4);
    let x = CompressedImage {
        data: random_matrix(4, 6, 1),
        basis_id: "x".into(),
    };
    assert!(match_autocal(&x, &dc, &ac).is_err());
    let small = CompressedDictionary::from_atoms(random_matrix(5, 6, 3)).unwrap();
    assert!(small.with_autocal(&ac).is_err());
}

fn random_dc(seed: u64) -> CompressedDictionary {
    CompressedDictionary::from_atoms(random_matrix(30, 6, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positive_homogeneity(seed in 0u64..10_000, alpha in 0.01f64..50.0) {
        let dc = random_dc(seed);
        let x = CompressedImage { data: random_matrix(20, 6, seed + 1), basis_id: "p".into() };
        let a = match_image(&x, &dc).unwrap();
        let b = match_image(&x.with_data(x.data.mapv(|z| z * alpha)), &dc).unwrap();
        prop_assert_eq!(&a.atom_index, &b.atom_index);
        for (p, q) in a.rho.iter().zip(&b.rho) {
            prop_assert!((alpha * p - q).abs() <= 1e-12 * q.max(1.0));
        }
    }

    #[test]
    fn idempotent_on_resynthesis(seed in 0u64..10_000) {
        let dc = random_dc(seed);
        let x = CompressedImage { data: random_matrix(20, 6, seed + 2), basis_id: "p".into() };
        let a = match_image(&x, &dc).unwrap();
        let b = match_image(&a.resynthesized, &dc).unwrap();
        for i in 0..20 {
            if a.rho[i] > 0.0 {
                prop_assert_eq!(a.atom_index[i], b.atom_index[i]);
            }
            prop_assert!((a.rho[i] - b.rho[i]).abs() <= 1e-12 * a.rho[i].max(1.0));
        }
    }

    #[test]
    fn rho_nonnegative_and_resynthesis_consistent(seed in 0u64..10_000) {
        let dc = random_dc(seed);
        let x = CompressedImage { data: random_matrix(20, 6, seed + 3), basis_id: "p".into() };
        let r = match_image(&x, &dc).unwrap();
        for i in 0..20 {
            prop_assert!(r.rho[i] >= 0.0);
            let expect = dc.atoms.row(r.atom_index[i]).mapv(|z| z * r.rho[i]);
            prop_assert_eq!(r.resynthesized.data.row(i).to_owned(), expect);
        }
    }

    #[test]
    fn full_rank_compression_preserves_matching(seed in 0u64..10_000) {
        let dict = eight_atom_dictionary(seed, 16);
        let basis = svd_compress(&dict, 8).unwrap();
        let dc = CompressedDictionary::new(&dict, &basis).unwrap();
        let signals = random_matrix(10, 8, seed + 4).dot(&dict.fingerprints);
        let compressed = match_image(&CompressedImage { data: basis.compress(&signals.view()), basis_id: "c".into() }, &dc).unwrap();
        let raw = CompressedDictionary::from_atoms(dict.fingerprints.clone()).unwrap();
        let full = match_image(&CompressedImage { data: signals, basis_id: "u".into() }, &raw).unwrap();
        prop_assert_eq!(&compressed.atom_index, &full.atom_index);
        for (p, q) in compressed.rho.iter().zip(&full.rho) {
            prop_assert!((p - q).abs() <= 1e-10 * q.max(1.0));
        }
    }
}
