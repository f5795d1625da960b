use hyperlab::design::{self, Povm, PovmFile, ProductPovm};
use hyperlab::moments::{self, StateDifference};
use hyperlab::rng;
use proptest::prelude::*;

fn delta(seed: u64, dims: Vec<usize>) -> StateDifference {
    moments::random_difference(&mut rng::stream(seed, "design-props", 0), dims).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bias_is_bounded_by_trace_norm(seed in any::<u64>(), c in -2.0f64..2.0) {
        let d = delta(seed, vec![2]);
        for m in [design::mub_povm().unwrap(), design::icosahedron_povm().unwrap(), Povm::computational(2).unwrap()] {
            let b = design::measurement_bias(&m, &d).unwrap();
            prop_assert!(b <= design::trace_norm(&d).unwrap() + 1e-12);
            let scaled = design::measurement_bias(&m, &d.scaled(c)).unwrap();
            prop_assert!((scaled - c.abs() * b).abs() < 1e-12);
        }
    }

    #[test]
    fn design_bounds_hold(seed in any::<u64>()) {
        let d = design::bundled_four_design().unwrap().expect("bundled design verifies");
        let single = delta(seed, vec![2]);
        prop_assert!(design::check_unipartite_bound(&d, &single).unwrap().holds);
        prop_assert!(design::fourth_moment_chain(&d, &single).unwrap().report.holds);
        let product = ProductPovm::power(&d, 2).unwrap();
        let pair = delta(seed, vec![2, 2]);
        let rep = design::check_multipartite_bound(&product, &pair).unwrap();
        prop_assert!(rep.holds() && !rep.extrapolated);
    }

    #[test]
    fn product_bias_of_product_deltas_factorizes(seed in any::<u64>()) {
        let d = design::bundled_four_design().unwrap().unwrap();
        let (a, b) = (delta(seed, vec![2]), delta(seed ^ 7, vec![2]));
        let joint = StateDifference::tensor(&[a.clone(), b.clone()]).unwrap();
        let lhs = design::product_measurement_bias(&ProductPovm::power(&d, 2).unwrap(), &joint).unwrap();
        let rhs = design::measurement_bias(d.povm(), &a).unwrap() * design::measurement_bias(d.povm(), &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn povm_files_roundtrip() {
    let m = design::icosahedron_povm().unwrap();
    let text = serde_json::to_string(&PovmFile::from(&m)).unwrap();
    let back = design::parse_povm(&text).unwrap();
    assert_eq!(back.len(), 12);
    assert!(back.completeness_deviation() < 1e-12);
    assert!(design::parse_povm(r#"{"dim": 2, "elements": [{"re": [[1, 0], [0, 0]], "im": [[0, 0], [0, 0]]}]}"#).is_err());
}

#[test]
fn computational_basis_is_only_a_one_design() {
    let m = Povm::computational(2).unwrap();
    let rep = design::check_design(&m, 2).unwrap();
    assert_eq!(rep.verified_order(), 1);
    assert!(!rep.holds());
}
