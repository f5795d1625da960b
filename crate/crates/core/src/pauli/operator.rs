use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use super::string::PauliString;
use crate::boolean::fwht;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, partial_trace, CMatrix, ZERO};
use crate::rng;

/// Largest qubit count for dense operators.
pub const MAX_DENSE_QUBITS: usize = 10;
/// Hermiticity tolerance (entrywise).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Pauli coefficients with smaller magnitude are not stored.
pub const DROP_TOL: f64 = 1e-14;
/// Coefficients above this magnitude count towards [`locality`].
pub const LOCALITY_TOL: f64 = 1e-12;

/// Dense Hermitian operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    n_qubits: usize,
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "qubit operators are 2^n x 2^n, got {}x{}",
                dim,
                matrix.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::SizeLimit(format!(
                "{n_qubits} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
            )));
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(CMatrix::identity(1 << n_qubits, 1 << n_qubits))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Re tr M`.
    pub fn trace(&self) -> f64 {
        crate::linalg::trace_re(&self.matrix)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * Complex64::new(c, 0.0),
        }
    }
}

/// Real Pauli coefficients `Mhat(s)`, stored sparsely (absent means zero).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliExpansion {
    n_qubits: usize,
    coefficients: BTreeMap<PauliString, f64>,
}

impl PauliExpansion {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut e = Self::new(n_qubits);
        for (s, c) in terms {
            e.add(s, c)?;
        }
        Ok(e)
    }

    /// Adds `c` to the coefficient of `s`.
    pub fn add(&mut self, s: PauliString, c: f64) -> Result<()> {
        if s.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "string {s} has {} qubits, expansion has {}",
                s.n_qubits(),
                self.n_qubits
            )));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("coefficient of {s} is not finite")));
        }
        let slot = self.coefficients.entry(s).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.coefficients.remove(&s);
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, s: &PauliString) -> f64 {
        self.coefficients.get(s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.coefficients.iter()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `sum_s Mhat(s)^2`, which equals the normalized `|M|_2^2`.
    pub fn weight(&self) -> f64 {
        self.coefficients.values().map(|c| c * c).sum()
    }

    pub fn map_coefficients(&self, f: impl Fn(&PauliString, f64) -> f64) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .map(|(s, &c)| (*s, f(s, c)))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Self {
            n_qubits: self.n_qubits,
            coefficients,
        }
    }
}

/// `i^k`.
fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn fwht_complex(re: &mut [f64], im: &mut [f64]) {
    fwht(re);
    fwht(im);
}

/// `Mhat(s) = 2^-n tr(sigma_s M)` for every `s`.
///
/// For a fixed X-mask `x`, the map `z -> tr(sigma_{x,z} M)` is a Walsh-Hadamard
/// transform of the generalized diagonal `c -> M[c][c ^ x]`, giving `O(n 4^n)`.
pub fn pauli_decompose(m: &HermitianOperator) -> Result<PauliExpansion> {
    let n = m.n_qubits;
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut out = PauliExpansion::new(n);
    let mut re = vec![0.0; dim];
    let mut im = vec![0.0; dim];
    for x in 0..dim {
        for c in 0..dim {
            let v = m.matrix[(c, c ^ x)];
            re[c] = v.re;
            im[c] = v.im;
        }
        fwht_complex(&mut re, &mut im);
        for z in 0..dim {
            let coeff = i_pow((x & z).count_ones() as usize) * Complex64::new(re[z], im[z]) * scale;
            if coeff.im.abs() > HERMITIAN_TOL {
                return Err(Error::NotHermitian {
                    deviation: coeff.im.abs(),
                });
            }
            if coeff.re.abs() > DROP_TOL {
                let s = PauliString::from_masks(n, x as u64, z as u64)?;
                out.coefficients.insert(s, coeff.re);
            }
        }
    }
    Ok(out)
}

/// `sum_s Mhat(s) sigma_s` as a dense matrix.
pub fn pauli_synthesize(e: &PauliExpansion) -> Result<HermitianOperator> {
    let n = e.n_qubits;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::SizeLimit(format!(
            "{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let mut matrix = CMatrix::from_element(dim, dim, ZERO);
    let mut by_x: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for (s, &c) in &e.coefficients {
        by_x.entry(s.x_mask()).or_default().push((s.z_mask(), c));
    }
    let mut re = vec![0.0; dim];
    let mut im = vec![0.0; dim];
    for (x, zs) in by_x {
        re.iter_mut().for_each(|v| *v = 0.0);
        im.iter_mut().for_each(|v| *v = 0.0);
        for (z, c) in zs {
            let h = i_pow((x & z).count_ones() as usize) * c;
            re[z as usize] += h.re;
            im[z as usize] += h.im;
        }
        fwht_complex(&mut re, &mut im);
        let x = x as usize;
        for c in 0..dim {
            matrix[(c ^ x, c)] = Complex64::new(re[c], im[c]);
        }
    }
    Ok(HermitianOperator { n_qubits: n, matrix })
}

/// Dense matrix of a single Pauli string.
pub fn pauli_matrix(s: &PauliString) -> Result<CMatrix> {
    let mut e = PauliExpansion::new(s.n_qubits());
    e.add(*s, 1.0)?;
    Ok(pauli_synthesize(&e)?.matrix)
}

/// `true` when `eps` is a valid depolarizing rate, `|eps| <= 1`.
/// Other rates are still accepted by [`depolarize`] as a Fourier-side multiplier.
pub fn is_channel_rate(eps: f64) -> bool {
    eps.abs() <= 1.0
}

/// `Mhat(s) -> eps^|s| Mhat(s)`.
pub fn depolarize_expansion(e: &PauliExpansion, eps: f64) -> PauliExpansion {
    e.map_coefficients(|s, c| c * eps.powi(s.weight() as i32))
}

/// Tensor power of the qubit depolarizing channel, applied on the Pauli side.
pub fn depolarize(m: &HermitianOperator, eps: f64) -> Result<HermitianOperator> {
    pauli_synthesize(&depolarize_expansion(&pauli_decompose(m)?, eps))
}

/// Applies `D_eps(M) = (1 - eps) tr_q(M) (x) I/2 + eps M` to each qubit in turn,
/// working directly with partial traces instead of Pauli coefficients.
pub fn depolarize_by_channels(m: &HermitianOperator, eps: f64) -> Result<HermitianOperator> {
    let n = m.n_qubits;
    let dims = vec![2usize; n];
    let dim = 1usize << n;
    let mut current = m.matrix.clone();
    for q in 0..n {
        let mut mask = vec![false; n];
        mask[q] = true;
        let reduced = partial_trace(&current, &dims, &mask)?;
        let bit = 1usize << (n - 1 - q);
        let mut next = &current * Complex64::new(eps, 0.0);
        let w = Complex64::new(0.5 * (1.0 - eps), 0.0);
        for r in 0..dim {
            for c in 0..dim {
                if (r & bit) != (c & bit) {
                    continue;
                }
                let rr = squeeze(r, bit);
                let cc = squeeze(c, bit);
                next[(r, c)] += w * reduced[(rr, cc)];
            }
        }
        current = next;
    }
    HermitianOperator::new(current)
}

/// Removes the bit at `bit` from an index.
fn squeeze(index: usize, bit: usize) -> usize {
    let low = index & (bit - 1);
    let high = (index >> 1) & !(bit - 1);
    high | low
}

/// Largest weight among coefficients with `|c| > 1e-12`.
pub fn locality(e: &PauliExpansion) -> usize {
    e.iter()
        .filter(|(_, c)| c.abs() > LOCALITY_TOL)
        .map(|(s, _)| s.weight())
        .max()
        .unwrap_or(0)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sum of `terms` Pauli strings drawn uniformly from all strings of weight
/// `1..=k`, with standard normal coefficients, rescaled to `|M|_2 = 1`.
pub fn random_local_expansion<R: Rng + ?Sized>(
    rng: &mut R,
    n_qubits: usize,
    k: usize,
    terms: usize,
) -> Result<PauliExpansion> {
    if k == 0 || k > n_qubits {
        return Err(Error::InvalidParameter(format!(
            "locality must satisfy 1 <= k <= n, got k={k}, n={n_qubits}"
        )));
    }
    if terms == 0 {
        return Err(Error::InvalidParameter("need at least one term".into()));
    }
    let weights: Vec<f64> = (1..=k)
        .map(|w| binomial(n_qubits, w) * 3f64.powi(w as i32))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut e = PauliExpansion::new(n_qubits);
    while e.is_empty() {
        for _ in 0..terms {
            let mut u = rng.random::<f64>() * total;
            let mut w = k;
            for (i, &wt) in weights.iter().enumerate() {
                if u < wt {
                    w = i + 1;
                    break;
                }
                u -= wt;
            }
            let positions = rand::seq::index::sample(rng, n_qubits, w);
            let (mut x, mut z) = (0u64, 0u64);
            for q in positions.iter() {
                let bit = 1u64 << (n_qubits - 1 - q);
                match rng.random_range(0..3) {
                    0 => x |= bit,
                    1 => {
                        x |= bit;
                        z |= bit
                    }
                    _ => z |= bit,
                }
            }
            e.add(PauliString::from_masks(n_qubits, x, z)?, rng::normal(rng))?;
        }
    }
    let norm = e.weight().sqrt();
    Ok(e.map_coefficients(|_, c| c / norm))
}

pub fn random_local_hamiltonian<R: Rng + ?Sized>(
    rng: &mut R,
    n_qubits: usize,
    k: usize,
    terms: usize,
) -> Result<HermitianOperator> {
    pauli_synthesize(&random_local_expansion(rng, n_qubits, k, terms)?)
}

/// `(sum_i Z_i)^2 = n I + 2 sum_{i<j} Z_i Z_j`.
pub fn collective_z_squared(n_qubits: usize) -> Result<PauliExpansion> {
    let mut e = PauliExpansion::new(n_qubits);
    e.add(PauliString::identity(n_qubits), n_qubits as f64)?;
    for i in 0..n_qubits {
        for j in i + 1..n_qubits {
            let z = (1u64 << (n_qubits - 1 - i)) | (1u64 << (n_qubits - 1 - j));
            e.add(PauliString::from_masks(n_qubits, 0, z)?, 2.0)?;
        }
    }
    Ok(e)
}

/// Embeds an operator on `count` qudits of dimension `d` into
/// `count * ceil(log2 d)` qubits; unused basis states are padded with zeros.
pub fn embed_qudits(m: &CMatrix, d: usize, count: usize) -> Result<HermitianOperator> {
    if d < 2 {
        return Err(Error::InvalidParameter("qudit dimension must be >= 2".into()));
    }
    let total = d.checked_pow(count as u32).ok_or_else(|| Error::SizeLimit("qudit space".into()))?;
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "expected {total}x{total} for {count} qudits of dimension {d}"
        )));
    }
    let bits = d.next_power_of_two().trailing_zeros() as usize;
    let n = bits * count;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::SizeLimit(format!("{n} qubits after embedding")));
    }
    let dims = vec![d; count];
    let mut digits = vec![0usize; count];
    let embed = |i: usize, digits: &mut Vec<usize>| {
        crate::linalg::split_index(i, &dims, digits);
        digits.iter().fold(0usize, |acc, &x| (acc << bits) | x)
    };
    let mut out = CMatrix::from_element(1 << n, 1 << n, ZERO);
    for r in 0..total {
        let er = embed(r, &mut digits);
        for c in 0..total {
            let ec = embed(c, &mut digits);
            out[(er, ec)] = m[(r, c)];
        }
    }
    HermitianOperator::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, trace_product_re};

    fn s(text: &str) -> PauliString {
        text.parse().unwrap()
    }

    fn sigma(c: char) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        match c {
            'I' => CMatrix::identity(2, 2),
            'X' => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            'Y' => CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            'Z' => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
            _ => unreachable!(),
        }
    }

    /// Kronecker product of explicit 2x2 Pauli matrices.
    fn kron_string(text: &str) -> CMatrix {
        text.chars().fold(CMatrix::identity(1, 1), |acc, c| acc.kronecker(&sigma(c)))
    }

    #[test]
    fn synthesized_strings_match_kronecker_products() {
        for text in ["X", "Y", "Z", "XY", "YZ", "ZYX", "YYI", "IXYZ"] {
            let m = pauli_matrix(&s(text)).unwrap();
            assert!((m - kron_string(text)).norm() < 1e-15, "{text}");
        }
    }

    #[test]
    fn decompose_examples() {
        let zz = HermitianOperator::new(kron_string("ZZ")).unwrap();
        let e = pauli_decompose(&zz).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.get(&s("ZZ")), 1.0);

        let id = HermitianOperator::identity(3).unwrap();
        let e = pauli_decompose(&id).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.get(&s("III")), 1.0);

        // |0><0| = (I + Z)/2 by direct 2x2 traces.
        let proj = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let oracle_i = 0.5 * trace_product_re(&sigma('I'), &proj);
        let oracle_z = 0.5 * trace_product_re(&sigma('Z'), &proj);
        let e = pauli_decompose(&HermitianOperator::new(proj).unwrap()).unwrap();
        assert!((e.get(&s("I")) - oracle_i).abs() < 1e-15);
        assert!((e.get(&s("Z")) - oracle_z).abs() < 1e-15);
        assert_eq!((oracle_i, oracle_z), (0.5, 0.5));
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn decompose_matches_direct_traces() {
        let mut r = rng::stream(11, "pauli-direct", 0);
        let m = HermitianOperator::new(rng::hermitian(&mut r, 8)).unwrap();
        let e = pauli_decompose(&m).unwrap();
        let letters = ['I', 'X', 'Y', 'Z'];
        for a in letters {
            for b in letters {
                for c in letters {
                    let text: String = [a, b, c].iter().collect();
                    let direct = trace_product_re(&kron_string(&text), m.matrix()) / 8.0;
                    assert!((e.get(&s(&text)) - direct).abs() < 1e-12, "{text}");
                }
            }
        }
    }

    #[test]
    fn synthesize_examples() {
        let e = PauliExpansion::from_terms(2, [(s("ZZ"), 1.0)]).unwrap();
        assert!((pauli_synthesize(&e).unwrap().matrix() - kron_string("ZZ")).norm() < 1e-15);
        let empty = PauliExpansion::new(2);
        assert_eq!(pauli_synthesize(&empty).unwrap().matrix(), &CMatrix::zeros(4, 4));
    }

    #[test]
    fn roundtrip_random_hermitian() {
        for n in 1..=6 {
            let mut r = rng::stream(12, "pauli-roundtrip", n as u64);
            let m = HermitianOperator::new(rng::hermitian(&mut r, 1 << n)).unwrap();
            let e = pauli_decompose(&m).unwrap();
            let back = pauli_synthesize(&e).unwrap();
            let err = (back.matrix() - m.matrix()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            assert!(err < 1e-9);
            let direct = crate::linalg::frobenius_sq(m.matrix()) / (1u64 << n) as f64;
            assert!((e.weight() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = ONE;
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
        assert!(HermitianOperator::new(CMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn depolarize_examples() {
        let mut r = rng::stream(13, "depol", 0);
        let m = HermitianOperator::new(rng::hermitian(&mut r, 8)).unwrap();
        let same = depolarize(&m, 1.0).unwrap();
        assert!((same.matrix() - m.matrix()).norm() < 1e-12);
        let flat = depolarize(&m, 0.0).unwrap();
        let expected = CMatrix::identity(8, 8) * Complex64::new(m.trace() / 8.0, 0.0);
        assert!((flat.matrix() - expected).norm() < 1e-12);

        let zz = HermitianOperator::new(kron_string("ZZ")).unwrap();
        let half = depolarize(&zz, 0.5).unwrap();
        assert!((half.matrix() - kron_string("ZZ") * Complex64::new(0.25, 0.0)).norm() < 1e-15);
        let explicit = depolarize_by_channels(&zz, 0.5).unwrap();
        assert!((explicit.matrix() - half.matrix()).norm() < 1e-15);
    }

    #[test]
    fn depolarize_agrees_with_channel_composition() {
        for n in 1..=4 {
            for eps in [-0.7, 0.0, 0.35, 0.9, 1.0] {
                let mut r = rng::stream(14, "depol-channel", n as u64);
                let m = HermitianOperator::new(rng::hermitian(&mut r, 1 << n)).unwrap();
                let a = depolarize(&m, eps).unwrap();
                let b = depolarize_by_channels(&m, eps).unwrap();
                let err = (a.matrix() - b.matrix()).iter().fold(0.0f64, |x, z| x.max(z.norm()));
                assert!(err < 1e-9, "n={n} eps={eps} err={err}");
            }
        }
    }

    #[test]
    fn locality_examples() {
        let e = PauliExpansion::from_terms(3, [(s("ZII"), 1.0)]).unwrap();
        assert_eq!(locality(&e), 1);
        let heis =
            PauliExpansion::from_terms(2, [(s("XX"), 1.0), (s("YY"), 1.0), (s("ZZ"), 1.0)]).unwrap();
        assert_eq!(locality(&heis), 2);
        let scalar = PauliExpansion::from_terms(4, [(s("IIII"), 3.0)]).unwrap();
        assert_eq!(locality(&scalar), 0);
        let mut r = rng::stream(15, "loc", 0);
        let e = random_local_expansion(&mut r, 6, 3, 40).unwrap();
        assert_eq!(locality(&e), 3);
    }

    #[test]
    fn random_generator_contract() {
        let mut r = rng::stream(16, "gen", 0);
        let m = random_local_hamiltonian(&mut r, 4, 2, 10).unwrap();
        let norm2 = crate::linalg::frobenius_sq(m.matrix()) / 16.0;
        assert!((norm2 - 1.0).abs() < 1e-12);
        let mut r1 = rng::stream(16, "gen", 1);
        let mut r2 = rng::stream(16, "gen", 1);
        assert_eq!(
            random_local_hamiltonian(&mut r1, 5, 3, 12).unwrap(),
            random_local_hamiltonian(&mut r2, 5, 3, 12).unwrap()
        );
        let single = random_local_expansion(&mut r, 5, 2, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert!((single.iter().next().unwrap().1.abs() - 1.0).abs() < 1e-15);
        assert!(random_local_expansion(&mut r, 3, 4, 2).is_err());
        assert!(random_local_expansion(&mut r, 3, 0, 2).is_err());
    }

    #[test]
    fn qudit_embedding_pads() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            ONE,
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0),
        ]));
        let q = embed_qudits(&m, 3, 1).unwrap();
        assert_eq!(q.n_qubits(), 2);
        assert_eq!(q.matrix()[(2, 2)], Complex64::new(3.0, 0.0));
        assert_eq!(q.matrix()[(3, 3)], ZERO);
        let two = m.kronecker(&m);
        let q = embed_qudits(&two, 3, 2).unwrap();
        assert_eq!(q.n_qubits(), 4);
        // digits (1, 2) -> qubit index 0b01_10
        assert_eq!(q.matrix()[(0b0110, 0b0110)], Complex64::new(6.0, 0.0));
    }
}
