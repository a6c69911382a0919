use std::collections::HashSet;

use gepi_core::dims::{dim_ge, dim_ge_explicit, dim_ge_recursive, dim_gepi, dim_gepi_recursive};
use gepi_core::index::{
    all_mtuples, card_classes_k, card_mtuples_k, class_of, class_of_counts, class_size, count_vector, enum_classes_k,
    enum_mtuples_k,
};
use gepi_core::io::CoefficientFile;
use gepi_core::solver::basis;
use gepi_core::verify::direct_sum_totals;
use gepi_core::{Error, HalfInt, Kind, LChannel, LVector};
use num_bigint::BigUint;
use proptest::prelude::*;

fn lvec_strategy(max_len: usize, max_twice: i32) -> impl Strategy<Value = LVector> {
    prop::collection::vec((0u32..2, 0i32..=max_twice), 1..=max_len).prop_map(|entries| {
        LVector::new(entries.into_iter().map(|(t, l)| LChannel::new(vec![t], HalfInt::from_twice(l))).collect()).unwrap()
    })
}

fn kind_strategy() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::Ge), Just(Kind::Gepi)]
}

fn projections(lvec: &LVector) -> Vec<HalfInt> {
    let top = lvec.sum_ell().twice();
    (-top..=top).step_by(2).map(HalfInt::from_twice).collect()
}

proptest! {
    #[test]
    fn tuple_cardinalities_match_enumeration(lvec in lvec_strategy(5, 4)) {
        let mut total = BigUint::from(0u32);
        for k in projections(&lvec) {
            let n = enum_mtuples_k(&lvec, k).len();
            prop_assert_eq!(card_mtuples_k(&lvec, k), BigUint::from(n));
            total += BigUint::from(n);
        }
        prop_assert_eq!(total, lvec.tuple_count());
        prop_assert_eq!(all_mtuples(&lvec).len(), projections(&lvec).iter().map(|&k| enum_mtuples_k(&lvec, k).len()).sum::<usize>());
    }

    #[test]
    fn class_cardinalities_match_enumeration(lvec in lvec_strategy(5, 4)) {
        for k in projections(&lvec) {
            let distinct: HashSet<Vec<HalfInt>> = enum_mtuples_k(&lvec, k).iter().map(|m| class_of(&lvec, m)).collect();
            let classes = enum_classes_k(&lvec, k);
            prop_assert_eq!(classes.len(), distinct.len());
            prop_assert_eq!(card_classes_k(&lvec, k), BigUint::from(distinct.len()));
            prop_assert!(classes.iter().all(|c| distinct.contains(c)));
            let covered: BigUint = classes.iter().map(|c| class_size(&lvec, c)).sum();
            prop_assert_eq!(covered, BigUint::from(enum_mtuples_k(&lvec, k).len()));
        }
    }

    #[test]
    fn class_counts_round_trip(lvec in lvec_strategy(6, 4)) {
        for k in projections(&lvec) {
            for c in enum_classes_k(&lvec, k) {
                prop_assert_eq!(class_of_counts(&lvec, &count_vector(&lvec, &c)), c);
            }
        }
    }

    #[test]
    fn direct_sum_accounting(lvec in lvec_strategy(6, 6), kind in kind_strategy()) {
        let (lhs, total) = direct_sum_totals(&lvec, kind);
        prop_assert_eq!(lhs, total);
    }

    #[test]
    fn explicit_formula_agrees(lvec in lvec_strategy(6, 6), l in 0i32..=12) {
        let l = HalfInt::from_twice(l);
        prop_assert_eq!(dim_ge_explicit(&lvec, l).unwrap(), dim_ge(&lvec, l));
    }

    #[test]
    fn recursive_dimensions_agree(lvec in lvec_strategy(6, 4), cut in 1usize..6, l in 0i32..=12) {
        prop_assume!(cut < lvec.len());
        let l = HalfInt::from_twice(l);
        let (a, b) = lvec.split_at(cut);
        prop_assert_eq!(dim_ge_recursive(&a, &b, l), dim_ge(&lvec, l));
        let nb = lvec.blocks().len();
        if nb >= 2 {
            let split = cut.min(nb - 1);
            let (a, b) = (lvec.block_range(0..split), lvec.block_range(split..nb));
            prop_assert_eq!(dim_gepi_recursive(&a, &b, l).unwrap(), dim_gepi(&lvec, l));
        }
    }

    #[test]
    fn parity_forbids_half_odd_totals(lvec in lvec_strategy(5, 5), l in 0i32..=10, kind in kind_strategy()) {
        let l = HalfInt::from_twice(l);
        if !lvec.parity_allows(l) {
            prop_assert_eq!(gepi_core::dims::dim(kind, &lvec, l), BigUint::from(0u32));
        }
    }

    #[test]
    fn halfint_display_parse_round_trip(twice in -1000i32..=1000) {
        let x = HalfInt::from_twice(twice);
        prop_assert_eq!(x.to_string().parse::<HalfInt>().unwrap(), x);
        prop_assert_eq!(format!("{}", x.to_f64()).parse::<HalfInt>().unwrap(), x);
    }

    #[test]
    fn coefficient_files_round_trip(lvec in lvec_strategy(3, 3), l in 0i32..=6, kind in kind_strategy()) {
        let b = basis(kind, &lvec, HalfInt::from_twice(l)).unwrap();
        let file = CoefficientFile::from_basis(&b);
        let bytes = file.to_bytes().unwrap();
        let back = CoefficientFile::read_binary(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_basis().unwrap(), b.clone());
        let json = CoefficientFile::from_json(&file.to_json().unwrap()).unwrap();
        prop_assert_eq!(json.to_basis().unwrap(), b);
    }

    #[test]
    fn truncated_binary_is_rejected(lvec in lvec_strategy(3, 2), cut in 0.0f64..1.0) {
        let l = lvec.sum_ell();
        let b = basis(Kind::Ge, &lvec, l).unwrap();
        let bytes = CoefficientFile::from_basis(&b).to_bytes().unwrap();
        let n = ((bytes.len() as f64) * cut) as usize;
        let err = CoefficientFile::read_binary(&mut &bytes[..n]).unwrap_err();
        prop_assert!(matches!(err, Error::Truncated), "{err}");
    }
}

#[test]
fn bad_magic_is_rejected() {
    let err = CoefficientFile::read_binary(&mut &b"NOPE\x01\x00\x00\x00"[..]).unwrap_err();
    assert!(matches!(err, Error::BadMagic));
}

#[test]
fn single_channel_has_one_map_per_l() {
    for twice in 0..=8 {
        let l = HalfInt::from_twice(twice);
        let lvec = LVector::homogeneous(l, 1);
        for kind in [Kind::Ge, Kind::Gepi] {
            assert_eq!(basis(kind, &lvec, l).unwrap().dim(), 1);
        }
    }
}
