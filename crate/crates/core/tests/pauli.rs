use hyperlab::pauli::{self, OperatorFile, OperatorSource, PauliExpansion};
use hyperlab::rng;
use proptest::prelude::*;

fn local(seed: u64, n: usize, k: usize, terms: usize) -> PauliExpansion {
    pauli::random_local_expansion(&mut rng::stream(seed, "pauli-props", 0), n, k, terms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthesize_then_decompose(seed in any::<u64>(), n in 1usize..=6, terms in 1usize..=12) {
        let k = 1 + (seed as usize) % n;
        let e = local(seed, n, k, terms);
        prop_assert!(pauli::locality(&e) <= k);
        prop_assert!((e.weight() - 1.0).abs() < 1e-12);
        let back = pauli::pauli_decompose(&pauli::pauli_synthesize(&e).unwrap()).unwrap();
        for (s, c) in e.iter() {
            prop_assert!((back.get(s) - c).abs() < 1e-12);
        }
        prop_assert!((back.weight() - e.weight()).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_is_a_semigroup(seed in any::<u64>(), a in -0.3f64..=1.0, b in -0.3f64..=1.0) {
        let e = local(seed, 3, 3, 8);
        let m = pauli::pauli_synthesize(&e).unwrap();
        let twice = pauli::depolarize(&pauli::depolarize(&m, a).unwrap(), b).unwrap();
        let once = pauli::depolarize(&m, a * b).unwrap();
        let diff = (twice.matrix() - once.matrix()).iter().fold(0.0f64, |x, z| x.max(z.norm()));
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn spectral_checks_on_local_operators(seed in any::<u64>(), n in 2usize..=6) {
        let k = 1 + (seed as usize) % 2;
        let e = local(seed, n, k, 6);
        let sp = pauli::spectrum(&pauli::pauli_synthesize(&e).unwrap(), false).unwrap();
        let k = pauli::locality(&e);
        for q in [1.0, 1.5, 3.0, 4.0] {
            prop_assert!(pauli::check_q_hyper_spectrum(&sp, k, q).unwrap().holds);
        }
        let t0 = pauli::tail_threshold(k);
        let mut prev = 1.0;
        for t in [t0, t0 + 1.0, 2.0 * t0] {
            prop_assert!(pauli::check_tail_spectrum(&sp, k, t).unwrap().holds);
            let frac = sp.tail_fraction(t).unwrap();
            prop_assert!(frac <= prev);
            prev = frac;
        }
    }
}

#[test]
fn operator_files_roundtrip() {
    let e = local(5, 4, 2, 6);
    let text = serde_json::to_string(&OperatorFile::from(&e)).unwrap();
    let OperatorSource::Terms(back) = pauli::parse_operator(&text).unwrap() else {
        panic!("expected a term list");
    };
    assert_eq!(back, e);
    let dense = pauli::pauli_synthesize(&e).unwrap();
    let text = serde_json::to_string(&OperatorFile::from(&dense)).unwrap();
    let src = pauli::parse_operator(&text).unwrap();
    assert_eq!(src.n_qubits(), 4);
    let sp_terms = OperatorSource::Terms(e).spectrum().unwrap();
    let sp_dense = src.spectrum().unwrap();
    for (a, b) in sp_terms.eigenvalues().iter().zip(sp_dense.eigenvalues()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn diagonal_and_dense_spectra_agree() {
    let text = r#"{"n_qubits": 4, "terms": [{"s": "ZZII", "c": 0.5}, {"s": "IZIZ", "c": -0.25}, {"s": "ZIII", "c": 1}]}"#;
    let src = pauli::parse_operator(text).unwrap();
    let diag = src.spectrum().unwrap();
    let dense = pauli::spectrum(&src.to_dense().unwrap(), false).unwrap();
    for (a, b) in diag.eigenvalues().iter().zip(dense.eigenvalues()) {
        assert!((a - b).abs() < 1e-12);
    }
}
