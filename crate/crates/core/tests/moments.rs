use hyperlab::linalg::CMatrix;
use hyperlab::moments::{self, DeltaFile, StateDifference};
use hyperlab::rng;
use num_complex::Complex64;
use proptest::prelude::*;

fn random_unitary(seed: u64, dim: usize) -> CMatrix {
    let mut r = rng::stream(seed, "moments-unitary", 0);
    CMatrix::from_fn(dim, dim, |_, _| rng::complex_normal(&mut r)).qr().q()
}

fn delta(seed: u64, dims: Vec<usize>) -> StateDifference {
    moments::random_difference(&mut rng::stream(seed, "moments-props", 0), dims).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn moments_are_homogeneous(seed in any::<u64>(), n in 1usize..=5, t in 1usize..=6, c in -3.0f64..3.0) {
        let d = delta(seed, vec![n]);
        let base = moments::haar_moment(&d, t).unwrap();
        let scaled = moments::haar_moment(&d.scaled(c), t).unwrap();
        prop_assert!((scaled - c.powi(t as i32) * base).abs() <= 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn moments_are_unitarily_invariant(seed in any::<u64>(), n in 2usize..=5) {
        let d = delta(seed, vec![n]);
        let u = random_unitary(seed, n);
        let rotated = StateDifference::single(&u * d.delta() * u.adjoint()).unwrap();
        for t in [2, 3, 4] {
            let a = moments::haar_moment(&d, t).unwrap();
            let b = moments::haar_moment(&rotated, t).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn product_moments_factorize(seed in any::<u64>(), t in prop::sample::select(vec![2usize, 4])) {
        let a = delta(seed, vec![2]);
        let b = delta(seed ^ 1, vec![2]);
        let joint = StateDifference::tensor(&[a.clone(), b.clone()]).unwrap();
        let lhs = moments::product_haar_moment(&joint, t).unwrap();
        let rhs = moments::haar_moment(&a, t).unwrap() * moments::haar_moment(&b, t).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(moments::product_moment_ratio_check(&joint).unwrap().holds);
    }

    #[test]
    fn ratio_checks_hold(seed in any::<u64>(), n in 2usize..=6, q in prop::sample::select(vec![4usize, 6, 8])) {
        prop_assert!(moments::moment_ratio_check(&delta(seed, vec![n]), q).unwrap().holds);
    }
}

#[test]
fn delta_files_roundtrip() {
    let d = delta(3, vec![2, 2]);
    let text = serde_json::to_string(&DeltaFile::from(&d)).unwrap();
    let back = moments::parse_delta(&text).unwrap();
    assert_eq!(back.dims(), d.dims());
    assert!((back.delta() - d.delta()).norm() < 1e-15);
    assert_eq!(back.p(), d.p());
    let raw = moments::parse_delta(r#"{"raw": {"re": [[1, 0], [0, 0]], "im": [[0, 0], [0, 0]]}}"#).unwrap();
    assert!(raw.is_raw());
    assert_eq!(raw.delta()[(0, 0)], Complex64::new(1.0, 0.0));
    assert!(moments::parse_delta(r#"{"raw": {"re": [[0, 1], [0, 0]], "im": [[0, 0], [0, 0]]}}"#).is_err());
}
