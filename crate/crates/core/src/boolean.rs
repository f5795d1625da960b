//! Fourier analysis of real functions on the boolean cube.
//!
//! A function of `n` variables is a truth table of length `2^n` indexed by a
//! bitmask `x`: bit `b` set means variable `b + 1` takes the value `-1`,
//! clear means `+1`. Subsets `S` of variables use the same bitmask encoding,
//! so the character is `chi_S(x) = (-1)^{popcount(x & S)}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::check::CheckReport;
use crate::error::{Error, Result};
use crate::rng;

/// Largest supported arity; truth tables beyond this do not fit comfortably in memory.
pub const MAX_ARITY: usize = 28;
/// Coefficients at or below this magnitude count as zero for [`degree`].
pub const ZERO_COEFF: f64 = 1e-12;
/// Tolerance of the hypercontractivity checks.
pub const HYPER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionFile", into = "FunctionFile")]
pub struct BooleanFunction {
    arity: usize,
    values: Vec<f64>,
}

/// On-disk form: `{"n": int, "values": [real; 2^n]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionFile {
    pub n: usize,
    pub values: Vec<f64>,
}

impl TryFrom<FunctionFile> for BooleanFunction {
    type Error = Error;
    fn try_from(f: FunctionFile) -> Result<Self> {
        BooleanFunction::new(f.n, f.values)
    }
}

impl From<BooleanFunction> for FunctionFile {
    fn from(f: BooleanFunction) -> Self {
        FunctionFile {
            n: f.arity,
            values: f.values,
        }
    }
}

fn check_arity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ARITY {
        return Err(Error::InvalidParameter(format!(
            "arity must be in 1..={MAX_ARITY}, got {n}"
        )));
    }
    Ok(())
}

impl BooleanFunction {
    pub fn new(arity: usize, values: Vec<f64>) -> Result<Self> {
        check_arity(arity)?;
        if values.len() != 1 << arity {
            return Err(Error::DimensionMismatch(format!(
                "truth table of {} entries for arity {} (expected {})",
                values.len(),
                arity,
                1usize << arity
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("entry {i} is not finite")));
        }
        Ok(Self { arity, values })
    }

    pub fn from_fn(arity: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        check_arity(arity)?;
        Self::new(arity, (0..1usize << arity).map(f).collect())
    }

    pub fn constant(arity: usize, c: f64) -> Result<Self> {
        Self::from_fn(arity, |_| c)
    }

    /// The character `chi_S`.
    pub fn character(arity: usize, subset: usize) -> Result<Self> {
        Self::from_fn(arity, |x| chi(subset, x))
    }

    /// Majority of an odd number of `+-1` variables.
    pub fn majority(arity: usize) -> Result<Self> {
        if arity.is_multiple_of(2) {
            return Err(Error::InvalidParameter("majority needs an odd arity".into()));
        }
        Self::from_fn(arity, |x| {
            if (x.count_ones() as usize) * 2 > arity {
                -1.0
            } else {
                1.0
            }
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierExpansion {
    arity: usize,
    coefficients: Vec<f64>,
}

impl FourierExpansion {
    pub fn new(arity: usize, coefficients: Vec<f64>) -> Result<Self> {
        check_arity(arity)?;
        if coefficients.len() != 1 << arity {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for arity {}",
                coefficients.len(),
                arity
            )));
        }
        Ok(Self {
            arity,
            coefficients,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, subset: usize) -> f64 {
        self.coefficients[subset]
    }

    /// `sum_S fhat(S)^2`.
    pub fn weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

#[inline]
pub fn chi(subset: usize, x: usize) -> f64 {
    if (subset & x).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Unnormalized in-place Walsh-Hadamard transform, `out[S] = sum_x in[x] chi_S(x)`.
pub fn fwht(data: &mut [f64]) {
    let len = data.len();
    assert!(len.is_power_of_two(), "fwht length must be a power of two");
    let mut h = 1;
    while h < len {
        for block in data.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `fhat(S) = 2^-n sum_x f(x) chi_S(x)` in `O(n 2^n)`.
pub fn fourier_transform(f: &BooleanFunction) -> FourierExpansion {
    let mut c = f.values.clone();
    fwht(&mut c);
    let scale = 1.0 / c.len() as f64;
    c.iter_mut().for_each(|v| *v *= scale);
    FourierExpansion {
        arity: f.arity,
        coefficients: c,
    }
}

/// Inverse of [`fourier_transform`].
pub fn synthesize(e: &FourierExpansion) -> BooleanFunction {
    let mut v = e.coefficients.clone();
    fwht(&mut v);
    BooleanFunction {
        arity: e.arity,
        values: v,
    }
}

/// `T_eps f`, applied on the Fourier side as `fhat(S) -> eps^|S| fhat(S)`.
pub fn noise_operator(f: &BooleanFunction, eps: f64) -> Result<BooleanFunction> {
    if eps.is_nan() || eps.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "noise rate must satisfy |eps| <= 1, got {eps}"
        )));
    }
    let mut e = fourier_transform(f);
    let powers: Vec<f64> = (0..=f.arity).map(|k| eps.powi(k as i32)).collect();
    for (s, c) in e.coefficients.iter_mut().enumerate() {
        *c *= powers[s.count_ones() as usize];
    }
    Ok(synthesize(&e))
}

/// Normalized `l_p` norm `(2^-n sum_x |f(x)|^p)^(1/p)`; `p = inf` gives the max norm.
pub fn lp_norm(f: &BooleanFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("norm exponent must be >= 1, got {p}")));
    }
    Ok(normalized_lp(&f.values, p))
}

pub(crate) fn normalized_lp(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let n = values.len() as f64;
    let s: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (s / n).powf(1.0 / p)
}

pub fn degree(e: &FourierExpansion) -> usize {
    e.coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > ZERO_COEFF)
        .map(|(s, _)| s.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// Influence of variable `j` (1-based): `sum_{S containing j} fhat(S)^2`.
pub fn influence(e: &FourierExpansion, j: usize) -> Result<f64> {
    if j == 0 || j > e.arity {
        return Err(Error::IndexOutOfRange {
            index: j,
            valid: format!("1..={}", e.arity),
        });
    }
    let bit = 1usize << (j - 1);
    Ok(e
        .coefficients
        .iter()
        .enumerate()
        .filter(|(s, _)| s & bit != 0)
        .map(|(_, c)| c * c)
        .sum())
}

/// `sum_{S != {}} fhat(S)^2`.
pub fn variance(e: &FourierExpansion) -> f64 {
    e.coefficients.iter().skip(1).map(|c| c * c).sum()
}

/// `sum_S |S| fhat(S)^2`.
pub fn total_influence(e: &FourierExpansion) -> f64 {
    e.coefficients
        .iter()
        .enumerate()
        .map(|(s, c)| s.count_ones() as f64 * c * c)
        .sum()
}

/// Largest noise rate for which `T_eps` maps `L^p` into `L^q`.
pub fn hypercontractive_rate(p: f64, q: f64) -> f64 {
    if p == q {
        1.0
    } else if q.is_infinite() {
        0.0
    } else {
        ((p - 1.0) / (q - 1.0)).sqrt()
    }
}

/// `|T_eps f|_q <= |f|_p` for `1 <= p <= q` and `|eps| <= sqrt((p-1)/(q-1))`.
pub fn check_noise_hyper(f: &BooleanFunction, p: f64, q: f64, eps: f64) -> Result<CheckReport> {
    if !(p >= 1.0 && q >= p) {
        return Err(Error::InvalidParameter(format!("need 1 <= p <= q, got p={p}, q={q}")));
    }
    let rate = hypercontractive_rate(p, q);
    if eps.abs() > rate * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "noise rate {eps} exceeds sqrt((p-1)/(q-1)) = {rate}"
        )));
    }
    let smoothed = noise_operator(f, eps)?;
    Ok(CheckReport::le(
        normalized_lp(&smoothed.values, q),
        normalized_lp(&f.values, p),
        HYPER_TOL,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowDegreeReport {
    pub degree: usize,
    /// `|f|_q <= (q-1)^(d/2) |f|_2`.
    pub upper: CheckReport,
    /// `|f|_p >= (p-1)^(d/2) |f|_2` when a `p` in `(1, 2]` was supplied.
    pub lower: Option<CheckReport>,
}

impl LowDegreeReport {
    pub fn holds(&self) -> bool {
        self.upper.holds && self.lower.is_none_or(|r| r.holds)
    }
}

/// Norm comparison for low-degree functions; `d` is the numerical degree of `f`.
pub fn check_low_degree_hyper(
    f: &BooleanFunction,
    q: f64,
    p: Option<f64>,
) -> Result<LowDegreeReport> {
    if q.is_nan() || q < 2.0 || q.is_infinite() {
        return Err(Error::InvalidParameter(format!("need finite q >= 2, got {q}")));
    }
    if let Some(p) = p {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!("need 1 < p <= 2, got {p}")));
        }
    }
    let d = degree(&fourier_transform(f));
    let two = normalized_lp(&f.values, 2.0);
    let upper = CheckReport::le(
        normalized_lp(&f.values, q),
        (q - 1.0).powf(d as f64 / 2.0) * two,
        HYPER_TOL,
    );
    let lower = p.map(|p| {
        CheckReport::ge(
            normalized_lp(&f.values, p),
            (p - 1.0).powf(d as f64 / 2.0) * two,
            HYPER_TOL,
        )
    });
    Ok(LowDegreeReport {
        degree: d,
        upper,
        lower,
    })
}

/// Truth table with independent standard normal entries.
pub fn random_function<R: Rng + ?Sized>(rng: &mut R, arity: usize) -> Result<BooleanFunction> {
    check_arity(arity)?;
    BooleanFunction::new(arity, rng::normal_vec(rng, 1 << arity))
}

/// Standard normal coefficients on every `|S| <= degree`, synthesized.
pub fn random_low_degree<R: Rng + ?Sized>(
    rng: &mut R,
    arity: usize,
    degree: usize,
) -> Result<BooleanFunction> {
    check_arity(arity)?;
    let coefficients = (0..1usize << arity)
        .map(|s| {
            if s.count_ones() as usize <= degree {
                rng::normal(rng)
            } else {
                0.0
            }
        })
        .collect();
    Ok(synthesize(&FourierExpansion::new(arity, coefficients)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct `2^-n sum_x f(x) chi_S(x)`.
    fn brute_transform(f: &BooleanFunction) -> Vec<f64> {
        let len = f.values.len();
        (0..len)
            .map(|s| (0..len).map(|x| f.values[x] * chi(s, x)).sum::<f64>() / len as f64)
            .collect()
    }

    /// `E_{y ~_eps x} f(y)` by enumerating every flip pattern with its probability.
    fn noise_by_definition(f: &BooleanFunction, eps: f64) -> Vec<f64> {
        let n = f.arity;
        let keep = (1.0 + eps) / 2.0;
        let flip = (1.0 - eps) / 2.0;
        (0..1usize << n)
            .map(|x| {
                (0..1usize << n)
                    .map(|pattern| {
                        let k = pattern.count_ones() as i32;
                        keep.powi(n as i32 - k) * flip.powi(k) * f.values[x ^ pattern]
                    })
                    .sum()
            })
            .collect()
    }

    fn table(n: usize) -> impl Strategy<Value = BooleanFunction> {
        prop::collection::vec(-10.0f64..10.0, 1usize << n)
            .prop_map(move |v| BooleanFunction::new(n, v).unwrap())
    }

    fn any_table() -> impl Strategy<Value = BooleanFunction> {
        (1usize..=10).prop_flat_map(table)
    }

    #[test]
    fn transform_of_constant_and_parity() {
        let e = fourier_transform(&BooleanFunction::constant(2, 1.0).unwrap());
        assert_eq!(e.coefficients(), &[1.0, 0.0, 0.0, 0.0]);
        let e = fourier_transform(&BooleanFunction::character(2, 0b11).unwrap());
        assert_eq!(e.coefficients(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn majority_three_coefficients() {
        let maj = BooleanFunction::majority(3).unwrap();
        let expected = brute_transform(&maj);
        // Frozen from the brute-force sum above.
        let frozen = [0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, -0.5];
        for (a, b) in expected.iter().zip(frozen) {
            assert!((a - b).abs() < 1e-15);
        }
        let e = fourier_transform(&maj);
        for (a, b) in e.coefficients().iter().zip(frozen) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(degree(&e), 3);
        assert!((variance(&e) - 1.0).abs() < 1e-12);
        for j in 1..=3 {
            assert!((influence(&e, j).unwrap() - 0.5).abs() < 1e-12);
        }
        assert_eq!(synthesize(&e), maj);
    }

    #[test]
    fn synthesize_single_coefficients() {
        let mut c = vec![0.0; 8];
        c[0] = 2.5;
        let f = synthesize(&FourierExpansion::new(3, c).unwrap());
        assert!(f.values().iter().all(|&v| v == 2.5));
        for s in 0..8 {
            let mut c = vec![0.0; 8];
            c[s] = 1.0;
            let f = synthesize(&FourierExpansion::new(3, c).unwrap());
            assert_eq!(f, BooleanFunction::character(3, s).unwrap());
        }
    }

    #[test]
    fn noise_endpoints() {
        let mut rng = rng::stream(1, "noise", 0);
        let f = random_function(&mut rng, 5).unwrap();
        let same = noise_operator(&f, 1.0).unwrap();
        for (a, b) in same.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mean = f.values().iter().sum::<f64>() / 32.0;
        let flat = noise_operator(&f, 0.0).unwrap();
        assert!(flat.values().iter().all(|v| (v - mean).abs() < 1e-12));
        assert!(noise_operator(&f, 1.5).is_err());
        assert!(noise_operator(&f, f64::NAN).is_err());
    }

    #[test]
    fn noise_scales_characters_and_matches_definition() {
        for n in 1..=6 {
            for eps in [-1.0, -0.5, 0.0, 0.3, 1.0] {
                for s in [0usize, 1, (1 << n) - 1, 0b101 & ((1 << n) - 1)] {
                    let chi_s = BooleanFunction::character(n, s).unwrap();
                    let got = noise_operator(&chi_s, eps).unwrap();
                    let oracle = noise_by_definition(&chi_s, eps);
                    let scale = eps.powi(s.count_ones() as i32);
                    for (x, (g, o)) in got.values.iter().zip(&oracle).enumerate() {
                        assert!((g - scale * chi(s, x)).abs() < 1e-12);
                        assert!((o - scale * chi(s, x)).abs() < 1e-12);
                    }
                }
                let mut rng = rng::stream(2, "noise-def", n as u64);
                let f = random_function(&mut rng, n).unwrap();
                let got = noise_operator(&f, eps).unwrap();
                let oracle = noise_by_definition(&f, eps);
                for (a, b) in got.values().iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn norms_of_small_examples() {
        let c = BooleanFunction::constant(3, -2.0).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            assert!((lp_norm(&c, p).unwrap() - 2.0).abs() < 1e-14);
        }
        // x1 + x2 takes values 2, 0, 0, -2.
        let f = BooleanFunction::from_fn(2, |x| chi(1, x) + chi(2, x)).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!((lp_norm(&f, 4.0).unwrap() - 8f64.powf(0.25)).abs() < 1e-14);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 2.0);
        let maj = BooleanFunction::majority(5).unwrap();
        for p in [1.0, 3.0, 7.5] {
            assert!((lp_norm(&maj, p).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn degree_and_influence_edge_cases() {
        let zero = FourierExpansion::new(3, vec![0.0; 8]).unwrap();
        assert_eq!(degree(&zero), 0);
        assert_eq!(degree(&fourier_transform(&BooleanFunction::constant(4, 3.0).unwrap())), 0);
        let e = fourier_transform(&BooleanFunction::character(4, 0b1010).unwrap());
        assert_eq!(degree(&e), 2);
        assert_eq!(influence(&e, 2).unwrap(), 1.0);
        assert_eq!(influence(&e, 1).unwrap(), 0.0);
        assert_eq!(variance(&e), 1.0);
        assert!(influence(&e, 0).is_err());
        assert!(influence(&e, 5).is_err());
        let dictator = fourier_transform(&BooleanFunction::character(3, 1).unwrap());
        assert_eq!(influence(&dictator, 1).unwrap(), 1.0);
        assert_eq!(influence(&dictator, 2).unwrap(), 0.0);
    }

    #[test]
    fn invalid_tables_rejected() {
        assert!(BooleanFunction::new(2, vec![0.0; 3]).is_err());
        assert!(BooleanFunction::new(0, vec![1.0]).is_err());
        assert!(BooleanFunction::new(1, vec![1.0, f64::INFINITY]).is_err());
        let parsed: std::result::Result<BooleanFunction, _> =
            serde_json::from_str(r#"{"n": 2, "values": [1, 2, 3]}"#);
        assert!(parsed.is_err());
        let parsed: BooleanFunction =
            serde_json::from_str(r#"{"n": 1, "values": [1, -1]}"#).unwrap();
        assert_eq!(parsed, BooleanFunction::character(1, 1).unwrap());
    }

    #[test]
    fn noise_hyper_examples() {
        let c = BooleanFunction::constant(4, 1.7).unwrap();
        let eps = 1.0 / 3f64.sqrt();
        let r = check_noise_hyper(&c, 2.0, 4.0, eps).unwrap();
        assert!(r.holds && (r.lhs - r.rhs).abs() < 1e-12);

        for n in [2usize, 5, 8] {
            let full = BooleanFunction::character(n, (1 << n) - 1).unwrap();
            let r = check_noise_hyper(&full, 2.0, 4.0, eps).unwrap();
            assert!((r.lhs - 3f64.powf(-(n as f64) / 2.0)).abs() < 1e-12);
            assert!((r.rhs - 1.0).abs() < 1e-12);
            assert!(r.holds);
        }

        let mut rng = rng::stream(3, "hyper", 0);
        let f = random_function(&mut rng, 8).unwrap();
        assert!(check_noise_hyper(&f, 2.0, 4.0, eps).unwrap().holds);
        assert!(check_noise_hyper(&f, 2.0, 4.0, 0.7).is_err());
        assert!(check_noise_hyper(&f, 4.0, 2.0, 0.1).is_err());
    }

    #[test]
    fn low_degree_examples() {
        let f = BooleanFunction::from_fn(2, |x| chi(1, x) + chi(2, x)).unwrap();
        let r = check_low_degree_hyper(&f, 4.0, Some(1.5)).unwrap();
        assert_eq!(r.degree, 1);
        assert!((r.upper.lhs - 8f64.powf(0.25)).abs() < 1e-14);
        assert!((r.upper.rhs - 3f64.sqrt() * 2f64.sqrt()).abs() < 1e-14);
        assert!(r.holds());

        let c = BooleanFunction::constant(3, -0.4).unwrap();
        for q in [2.0, 3.0, 4.0, 8.0] {
            let r = check_low_degree_hyper(&c, q, Some(1.2)).unwrap();
            assert!(r.holds());
            assert!((r.upper.lhs - r.upper.rhs).abs() < 1e-14);
        }

        let mut rng = rng::stream(4, "lowdeg", 0);
        let f = random_low_degree(&mut rng, 10, 3).unwrap();
        let r = check_low_degree_hyper(&f, 4.0, None).unwrap();
        assert_eq!(r.degree, 3);
        assert!(r.holds());
        assert!(check_low_degree_hyper(&f, 1.5, None).is_err());
        assert!(check_low_degree_hyper(&f, 4.0, Some(2.5)).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_and_parseval(f in any_table()) {
            let e = fourier_transform(&f);
            let back = synthesize(&e);
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
            let norm2 = lp_norm(&f, 2.0).unwrap();
            prop_assert!((norm2 * norm2 - e.weight()).abs() <= 1e-12 * (1.0 + e.weight()));
        }

        #[test]
        fn transform_matches_brute_force(f in (1usize..=6).prop_flat_map(table)) {
            let e = fourier_transform(&f);
            for (a, b) in e.coefficients().iter().zip(brute_transform(&f)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn noise_contracts(f in any_table(), eps in -1.0f64..=1.0) {
            let g = noise_operator(&f, eps).unwrap();
            for p in [1.0, 2.0, 4.0] {
                prop_assert!(lp_norm(&g, p).unwrap() <= lp_norm(&f, p).unwrap() + 1e-12);
            }
        }

        #[test]
        fn norms_monotone(f in any_table(), p in 1.0f64..8.0, dq in 0.0f64..8.0) {
            let q = p + dq;
            prop_assert!(lp_norm(&f, p).unwrap() <= lp_norm(&f, q).unwrap() * (1.0 + 1e-12) + 1e-12);
            prop_assert!(lp_norm(&f, q).unwrap() <= lp_norm(&f, f64::INFINITY).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn influence_matches_flip_definition(f in (1usize..=7).prop_flat_map(table)) {
            let e = fourier_transform(&f);
            let n = f.arity();
            let mut sum = 0.0;
            for j in 1..=n {
                let bit = 1 << (j - 1);
                let direct: f64 = (0..1usize << n)
                    .map(|x| (f.values[x] - f.values[x ^ bit]).powi(2))
                    .sum::<f64>() / (1u64 << (n + 2)) as f64;
                let fourier = influence(&e, j).unwrap();
                prop_assert!((direct - fourier).abs() < 1e-10 * (1.0 + direct));
                sum += fourier;
            }
            prop_assert!((sum - total_influence(&e)).abs() < 1e-10 * (1.0 + sum));
        }
    }
}
