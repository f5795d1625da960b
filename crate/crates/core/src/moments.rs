//! Haar moments of `psi -> tr(Delta |psi><psi|)` and their multipartite versions.
//!
//! A unit vector in `C^n` is a point of the real sphere `S^{2n-1}`; all
//! computations stay on the complex side. Two Schatten-2 conventions appear in
//! the crate: the Pauli module uses the normalized one, while [`two_k_norm`]
//! and the partial-trace sums here are unnormalized (plain Frobenius norms).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::CheckReport;
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_sq, hermitian_deviation, kron_all, min_eigenvalue, partial_trace as partial_trace_mask,
    split_index, trace_re, CMatrix, DenseComplex, ZERO,
};
use crate::rng;

/// Largest supported moment order.
pub const MAX_ORDER: usize = 8;
/// Hermiticity tolerance for `Delta`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace and positivity tolerance for `rho` and `sigma`.
pub const STATE_TOL: f64 = 1e-9;
/// Size gate `D^4 <= 65536` for the dense fourth-moment contraction.
pub const MAX_DENSE_ENTRIES: usize = 65_536;
/// Tolerance of the unipartite moment ratio check.
pub const RATIO_TOL: f64 = 1e-10;
/// Tolerance of the multipartite moment ratio check.
pub const PRODUCT_RATIO_TOL: f64 = 1e-9;

/// Weighted difference `Delta = p rho - (1 - p) sigma` on a multipartite space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDifference {
    dims: Vec<usize>,
    p: Option<f64>,
    rho: Option<CMatrix>,
    sigma: Option<CMatrix>,
    delta: CMatrix,
}

fn check_dims(dims: &[usize], m: &CMatrix, what: &str) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidParameter("need at least one party, each of dimension >= 1".into()));
    }
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, parties {:?} need {total}x{total}",
            m.nrows(),
            m.ncols(),
            dims
        )));
    }
    Ok(())
}

fn check_density(m: &CMatrix, what: &str) -> Result<()> {
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let tr = trace_re(m);
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidParameter(format!("{what} has trace {tr}, expected 1")));
    }
    let low = min_eigenvalue(m)?;
    if low < -STATE_TOL {
        return Err(Error::InvalidParameter(format!(
            "{what} is not positive semidefinite (min eigenvalue {low:e})"
        )));
    }
    Ok(())
}

impl StateDifference {
    /// `p rho - (1 - p) sigma` with both states validated.
    pub fn from_states(dims: Vec<usize>, p: f64, rho: CMatrix, sigma: CMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
        }
        check_dims(&dims, &rho, "rho")?;
        check_dims(&dims, &sigma, "sigma")?;
        check_density(&rho, "rho")?;
        check_density(&sigma, "sigma")?;
        let delta = &rho * num_complex::Complex64::new(p, 0.0) - &sigma * num_complex::Complex64::new(1.0 - p, 0.0);
        Ok(Self {
            dims,
            p: Some(p),
            rho: Some(rho),
            sigma: Some(sigma),
            delta,
        })
    }

    /// Arbitrary Hermitian `Delta`, not necessarily a weighted state difference.
    pub fn raw(dims: Vec<usize>, delta: CMatrix) -> Result<Self> {
        check_dims(&dims, &delta, "delta")?;
        let deviation = hermitian_deviation(&delta);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            dims,
            p: None,
            rho: None,
            sigma: None,
            delta,
        })
    }

    /// Single-party raw difference.
    pub fn single(delta: CMatrix) -> Result<Self> {
        Self::raw(vec![delta.nrows()], delta)
    }

    pub fn zero(dims: Vec<usize>) -> Result<Self> {
        let total = dims.iter().product();
        Self::raw(dims, CMatrix::zeros(total, total))
    }

    /// Tensor product of differences; the result is raw.
    pub fn tensor(parts: &[StateDifference]) -> Result<Self> {
        let dims = parts.iter().flat_map(|d| d.dims.iter().copied()).collect();
        Self::raw(dims, kron_all(parts.iter().map(|d| &d.delta)))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    /// The common local dimension, if all parties agree.
    pub fn local_dim(&self) -> Option<usize> {
        let first = self.dims[0];
        self.dims.iter().all(|&d| d == first).then_some(first)
    }

    pub fn total_dim(&self) -> usize {
        self.delta.nrows()
    }

    pub fn delta(&self) -> &CMatrix {
        &self.delta
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn rho(&self) -> Option<&CMatrix> {
        self.rho.as_ref()
    }

    pub fn sigma(&self) -> Option<&CMatrix> {
        self.sigma.as_ref()
    }

    /// `true` when built from a Hermitian matrix instead of `(p, rho, sigma)`.
    pub fn is_raw(&self) -> bool {
        self.p.is_none()
    }

    /// `tr Delta`, equal to `2p - 1` for a state difference.
    pub fn trace(&self) -> f64 {
        trace_re(&self.delta)
    }

    /// Unnormalized `tr Delta^2`.
    pub fn trace_sq(&self) -> f64 {
        frobenius_sq(&self.delta)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            p: None,
            rho: None,
            sigma: None,
            delta: &self.delta * num_complex::Complex64::new(c, 0.0),
        }
    }

    fn require_single(&self) -> Result<usize> {
        if self.parties() != 1 {
            return Err(Error::Precondition(format!(
                "expected a single party, got {}",
                self.parties()
            )));
        }
        Ok(self.dims[0])
    }
}

fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let rank = rng.random_range(1..=dim);
    let g = CMatrix::from_fn(dim, rank, |_, _| rng::complex_normal(rng));
    let m = &g * g.adjoint();
    let tr = trace_re(&m);
    m.unscale(tr)
}

/// Random `(p, rho, sigma)` with `p` uniform and states of random rank.
pub fn random_difference<R: Rng + ?Sized>(rng: &mut R, dims: Vec<usize>) -> Result<StateDifference> {
    let total: usize = dims.iter().product();
    let p = rng.random::<f64>();
    let rho = random_state(rng, total);
    let sigma = random_state(rng, total);
    StateDifference::from_states(dims, p, rho, sigma)
}

/// Partitions of `t` with the number of permutations of each cycle type.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleTypeTable {
    t: usize,
    entries: Vec<(Vec<usize>, u64)>,
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn partitions(t: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if t == 0 {
        out.push(prefix.clone());
        return;
    }
    for part in (1..=max_part.min(t)).rev() {
        prefix.push(part);
        partitions(t - part, part, prefix, out);
        prefix.pop();
    }
}

impl CycleTypeTable {
    pub fn new(t: usize) -> Result<Self> {
        if t > MAX_ORDER {
            return Err(Error::InvalidParameter(format!("moment order {t} exceeds {MAX_ORDER}")));
        }
        let mut parts = Vec::new();
        partitions(t, t, &mut Vec::new(), &mut parts);
        let entries = parts
            .into_iter()
            .map(|lengths| {
                let mut denom = 1u64;
                for len in 1..=t {
                    let m = lengths.iter().filter(|&&l| l == len).count();
                    denom *= (len as u64).pow(m as u32) * factorial(m);
                }
                let count = factorial(t) / denom;
                (lengths, count)
            })
            .collect();
        Ok(Self { t, entries })
    }

    pub fn order(&self) -> usize {
        self.t
    }

    /// `(cycle lengths, number of permutations)` pairs.
    pub fn entries(&self) -> &[(Vec<usize>, u64)] {
        &self.entries
    }
}

/// `n (n+1) ... (n+t-1)`.
fn rising(n: usize, t: usize) -> f64 {
    (0..t).map(|i| (n + i) as f64).product()
}

/// `tr(M^l)` for `l = 0..=t`.
fn trace_powers(m: &CMatrix, t: usize) -> Vec<f64> {
    let mut out = vec![m.nrows() as f64];
    let mut power = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..t {
        power = &power * m;
        out.push(trace_re(&power));
    }
    out
}

/// Haar moment of a Hermitian matrix via the cycle-type sum.
pub fn haar_moment_of(delta: &CMatrix, t: usize) -> Result<f64> {
    let table = CycleTypeTable::new(t)?;
    let n = crate::linalg::ensure_square(delta)?;
    let tr = trace_powers(delta, t);
    let sum: f64 = table
        .entries()
        .iter()
        .map(|(lengths, count)| *count as f64 * lengths.iter().map(|&l| tr[l]).product::<f64>())
        .sum();
    Ok(sum / rising(n, t))
}

/// `E_psi (tr Delta |psi><psi|)^t` over Haar-random unit `psi`, for `t <= 8`.
///
/// Odd `t` is accepted; such moments are signed and vanish for traceless qubit `Delta`.
pub fn haar_moment(delta: &StateDifference, t: usize) -> Result<f64> {
    delta.require_single()?;
    haar_moment_of(&delta.delta, t)
}

/// `((tr Delta)^2 + tr Delta^2) / (n (n+1))`.
pub fn second_moment_closed_form(delta: &StateDifference) -> Result<f64> {
    let n = delta.require_single()? as f64;
    let tr = delta.trace();
    Ok((tr * tr + delta.trace_sq()) / (n * (n + 1.0)))
}

/// `E[f^q]^(1/q) <= (q-1) E[f^2]^(1/2)` for `f = tr Delta |psi><psi|`.
pub fn moment_ratio_check(delta: &StateDifference, q: usize) -> Result<CheckReport> {
    if ![4, 6, 8].contains(&q) {
        return Err(Error::InvalidParameter(format!("q must be 4, 6 or 8, got {q}")));
    }
    let high = haar_moment(delta, q)?.max(0.0).powf(1.0 / q as f64);
    let low = haar_moment(delta, 2)?.max(0.0).sqrt();
    Ok(CheckReport::le(high, (q - 1) as f64 * low, RATIO_TOL))
}

fn subset_mask(k: usize, subset: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; k];
    for &party in subset {
        if party == 0 || party > k {
            return Err(Error::IndexOutOfRange {
                index: party,
                valid: format!("1..={k}"),
            });
        }
        if mask[party - 1] {
            return Err(Error::InvalidParameter(format!("party {party} listed twice")));
        }
        mask[party - 1] = true;
    }
    Ok(mask)
}

/// `tr_S Delta` for a set of 1-based party indices `S`.
pub fn partial_trace(delta: &StateDifference, subset: &[usize]) -> Result<CMatrix> {
    let mask = subset_mask(delta.parties(), subset)?;
    partial_trace_mask(&delta.delta, &delta.dims, &mask)
}

/// `sum_{S subset [k]} |tr_S Delta|_2^2` with unnormalized Schatten 2-norms.
pub fn partial_trace_weight(delta: &StateDifference) -> Result<f64> {
    let k = delta.parties();
    let mut total = 0.0;
    for bits in 0..(1usize << k) {
        let mask: Vec<bool> = (0..k).map(|i| bits >> i & 1 == 1).collect();
        total += frobenius_sq(&partial_trace_mask(&delta.delta, &delta.dims, &mask)?);
    }
    Ok(total)
}

/// `|Delta|_{2(k)} = sqrt(sum_S |tr_S Delta|_2^2)`, unnormalized.
pub fn two_k_norm(delta: &StateDifference) -> Result<f64> {
    Ok(partial_trace_weight(delta)?.sqrt())
}

/// All permutations of `0..t` in lexicographic order.
fn permutations(t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..t).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (1..t).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..t).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

fn cycle_type(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut lengths = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths
}

/// Conjugacy-class representatives of `S_t` with class sizes.
fn class_representatives(perms: &[Vec<usize>]) -> Vec<(usize, u64)> {
    let mut reps: Vec<(Vec<usize>, usize, u64)> = Vec::new();
    for (i, p) in perms.iter().enumerate() {
        let ct = cycle_type(p);
        match reps.iter_mut().find(|(c, _, _)| *c == ct) {
            Some(entry) => entry.2 += 1,
            None => reps.push((ct, i, 1)),
        }
    }
    reps.into_iter().map(|(_, i, n)| (i, n)).collect()
}

/// `E (tr Delta (psi_1 (x) ... (x) psi_k))^t` by contracting `Delta^{(x)t}`
/// against the per-party symmetric projectors, each a sum over `S_t`.
///
/// Cost is `t!^k D^t` with `D` the total dimension; simultaneous relabelling of
/// the `t` copies is a symmetry, so the first party only visits class
/// representatives.
pub fn product_haar_moment_dense(delta: &StateDifference, t: usize) -> Result<f64> {
    if t != 2 && t != 4 {
        return Err(Error::InvalidParameter(format!("dense product moments need t in {{2, 4}}, got {t}")));
    }
    let total = delta.total_dim();
    let entries = total.checked_pow(t as u32).filter(|&e| e <= MAX_DENSE_ENTRIES);
    let Some(entries) = entries else {
        return Err(Error::SizeLimit(format!(
            "D^{t} with D = {total} exceeds {MAX_DENSE_ENTRIES}"
        )));
    };
    let dims = &delta.dims;
    let k = dims.len();
    let mut strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    // digits[a][i] * strides[i] for every index a and party i.
    let mut digits = vec![0usize; k];
    let scaled: Vec<Vec<usize>> = (0..total)
        .map(|a| {
            split_index(a, dims, &mut digits);
            digits.iter().zip(&strides).map(|(d, s)| d * s).collect()
        })
        .collect();
    let d = &delta.delta;
    let perms = permutations(t);
    let reps = class_representatives(&perms);

    let mut tuple = vec![0usize; k];
    let mut sum = 0.0;
    let mut a = vec![0usize; t];
    let mut b = vec![0usize; t];
    for &(rep, class_size) in &reps {
        tuple[0] = rep;
        tuple[1..].iter_mut().for_each(|x| *x = 0);
        loop {
            let mut term = ZERO;
            for flat in 0..entries {
                let mut rest = flat;
                for slot in a.iter_mut().rev() {
                    *slot = rest % total;
                    rest /= total;
                }
                for (j, bj) in b.iter_mut().enumerate() {
                    *bj = (0..k).map(|i| scaled[a[perms[tuple[i]][j]]][i]).sum();
                }
                let mut prod = num_complex::Complex64::new(1.0, 0.0);
                for j in 0..t {
                    prod *= d[(b[j], a[j])];
                }
                term += prod;
            }
            sum += class_size as f64 * term.re;
            // Advance parties 1..k over all permutations.
            let mut i = 1;
            while i < k {
                tuple[i] += 1;
                if tuple[i] < perms.len() {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
            if i >= k {
                break;
            }
        }
    }
    let denom: f64 = dims.iter().map(|&n| rising(n, t)).product();
    Ok(sum / denom)
}

/// Product-state Haar moment for `t` in `{2, 4}`: closed form at `t = 2`,
/// dense contraction at `t = 4`.
pub fn product_haar_moment(delta: &StateDifference, t: usize) -> Result<f64> {
    match t {
        2 => {
            let denom: f64 = delta.dims.iter().map(|&n| rising(n, 2)).product();
            Ok(partial_trace_weight(delta)? / denom)
        }
        4 => product_haar_moment_dense(delta, 4),
        _ => Err(Error::InvalidParameter(format!("product moments need t in {{2, 4}}, got {t}"))),
    }
}

/// `E[f^4]^(1/4) <= 9^(k/2) E[f^2]^(1/2)` for `f = tr Delta (psi_1 (x) ... (x) psi_k)`.
pub fn product_moment_ratio_check(delta: &StateDifference) -> Result<CheckReport> {
    let fourth = product_haar_moment(delta, 4)?.max(0.0).powf(0.25);
    let second = product_haar_moment(delta, 2)?.max(0.0).sqrt();
    let factor = 9f64.powf(delta.parties() as f64 / 2.0);
    Ok(CheckReport::le(fourth, factor * second, PRODUCT_RATIO_TOL))
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// `|mean - value| <= z * std_error`.
    pub fn agrees_with(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= z * self.std_error
    }
}

/// Welford accumulator, merged with the parallel update formula.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n * other.n) as f64 / n as f64,
        }
    }
}

const SHARD: usize = 4096;

/// Monte Carlo estimate of the product-state moment of order `t` from
/// independent Haar-random local states (normalized complex Gaussians).
///
/// Samples are split into fixed shards with their own streams, so the result
/// does not depend on the worker count.
pub fn monte_carlo_moment(delta: &StateDifference, t: usize, samples: usize, seed: u64) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let shards = samples.div_ceil(SHARD);
    let parts: Vec<Moments> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut r = rng::stream(seed, "haar-moment-mc", shard as u64);
            let count = SHARD.min(samples - shard * SHARD);
            let mut acc = Moments::default();
            for _ in 0..count {
                let locals: Vec<_> = delta.dims.iter().map(|&n| rng::haar_state(&mut r, n)).collect();
                let psi = locals
                    .iter()
                    .skip(1)
                    .fold(locals[0].clone(), |acc, v| acc.kronecker(v));
                let f = (psi.adjoint() * &delta.delta * &psi)[(0, 0)].re;
                acc.push(f.powi(t as i32));
            }
            acc
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.n - 1) as f64;
    Ok(Estimate {
        mean: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        samples: total.n,
    })
}

/// JSON form: `{"n", "k", "p", "rho", "sigma"}` or `{"raw"}` with optional `n`, `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaFile {
    States {
        n: usize,
        k: usize,
        p: f64,
        rho: DenseComplex,
        sigma: DenseComplex,
    },
    Raw {
        raw: DenseComplex,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
    },
}

impl TryFrom<DeltaFile> for StateDifference {
    type Error = Error;

    fn try_from(file: DeltaFile) -> Result<Self> {
        match file {
            DeltaFile::States { n, k, p, rho, sigma } => {
                StateDifference::from_states(vec![n; k], p, rho.to_matrix()?, sigma.to_matrix()?)
            }
            DeltaFile::Raw { raw, n, k } => {
                let m = raw.to_matrix()?;
                let dims = match (n, k) {
                    (Some(n), Some(k)) => vec![n; k],
                    (Some(n), None) => vec![n],
                    (None, _) => vec![m.nrows()],
                };
                StateDifference::raw(dims, m)
            }
        }
    }
}

impl From<&StateDifference> for DeltaFile {
    fn from(d: &StateDifference) -> Self {
        match (d.p, &d.rho, &d.sigma, d.local_dim()) {
            (Some(p), Some(rho), Some(sigma), Some(n)) => DeltaFile::States {
                n,
                k: d.parties(),
                p,
                rho: rho.into(),
                sigma: sigma.into(),
            },
            _ => DeltaFile::Raw {
                raw: (&d.delta).into(),
                n: d.local_dim(),
                k: Some(d.parties()),
            },
        }
    }
}

pub fn parse_delta(json: &str) -> Result<StateDifference> {
    let file: DeltaFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn half_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.5), ZERO, ZERO, c(-0.5)])
    }

    #[test]
    fn cycle_counts_sum_to_factorial() {
        for t in 0..=MAX_ORDER {
            let table = CycleTypeTable::new(t).unwrap();
            let total: u64 = table.entries().iter().map(|(_, n)| n).sum();
            assert_eq!(total, factorial(t));
        }
        let four = CycleTypeTable::new(4).unwrap();
        assert_eq!(four.entries().len(), 5);
        assert!(CycleTypeTable::new(9).is_err());
    }

    #[test]
    fn qubit_anchor_values() {
        let d = StateDifference::single(half_z()).unwrap();
        assert!((haar_moment(&d, 2).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((haar_moment(&d, 4).unwrap() - 1.0 / 80.0).abs() < 1e-15);
        // Bloch oracle: cos(theta)/2 with cos(theta) uniform on [-1, 1], so E = 2^-t / (t + 1).
        for t in [2, 4, 6, 8] {
            let bloch = 0.5f64.powi(t as i32) / (t as f64 + 1.0);
            assert!((haar_moment(&d, t).unwrap() - bloch).abs() < 1e-15, "t={t}");
        }
        for t in [1, 3, 5, 7] {
            assert!(haar_moment(&d, t).unwrap().abs() < 1e-15);
        }
        assert!((second_moment_closed_form(&d).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let zero = StateDifference::zero(vec![3]).unwrap();
        for t in 1..=8 {
            assert_eq!(haar_moment(&zero, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn maximally_mixed_second_moment() {
        for n in 2..=5usize {
            let rho = CMatrix::identity(n, n).unscale(n as f64);
            let d = StateDifference::from_states(vec![n], 1.0, rho.clone(), rho).unwrap();
            let expected = 1.0 / (n * n) as f64;
            assert!((second_moment_closed_form(&d).unwrap() - expected).abs() < 1e-15);
            assert!((haar_moment(&d, 2).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_permutation_sum() {
        let mut r = rng::stream(31, "moments", 0);
        for i in 0..50 {
            let n = 1 + i % 8;
            let d = random_difference(&mut r, vec![n]).unwrap();
            assert!((d.trace() - (2.0 * d.p().unwrap() - 1.0)).abs() < 1e-10);
            let a = haar_moment(&d, 2).unwrap();
            let b = second_moment_closed_form(&d).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_covariance() {
        let mut r = rng::stream(32, "scale", 0);
        let d = random_difference(&mut r, vec![3]).unwrap();
        for t in 1..=8 {
            let a = haar_moment(&d.scaled(1.7), t).unwrap();
            let b = 1.7f64.powi(t as i32) * haar_moment(&d, t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_check_examples() {
        let d = StateDifference::single(half_z()).unwrap();
        let r = moment_ratio_check(&d, 4).unwrap();
        assert!((r.lhs - (1.0f64 / 80.0).powf(0.25)).abs() < 1e-12);
        assert!((r.rhs - 3.0 * (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert!(r.holds);
        let zero = StateDifference::zero(vec![2]).unwrap();
        let r = moment_ratio_check(&zero, 6).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);
        assert!(moment_ratio_check(&d, 5).is_err());
    }

    /// Naive contraction over all four indices of a two-qubit operator.
    fn trace_first_party_naive(m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(2, 2);
        for b1 in 0..2 {
            for b2 in 0..2 {
                for a in 0..2 {
                    out[(b1, b2)] += m[(2 * a + b1, 2 * a + b2)];
                }
            }
        }
        out
    }

    #[test]
    fn partial_trace_examples() {
        let mut r = rng::stream(33, "ptrace", 0);
        let d = random_difference(&mut r, vec![2, 2]).unwrap();
        assert_eq!(&partial_trace(&d, &[]).unwrap(), d.delta());
        let got = partial_trace(&d, &[1]).unwrap();
        assert!((got - trace_first_party_naive(d.delta())).norm() < 1e-14);
        let all = partial_trace(&d, &[1, 2]).unwrap();
        assert!((all[(0, 0)].re - d.trace()).abs() < 1e-14);
        assert!(partial_trace(&d, &[3]).is_err());
        assert!(partial_trace(&d, &[1, 1]).is_err());

        let a = random_difference(&mut r, vec![2]).unwrap();
        let b = random_difference(&mut r, vec![3]).unwrap();
        let ab = StateDifference::tensor(&[a.clone(), b.clone()]).unwrap();
        let got = partial_trace(&ab, &[2]).unwrap();
        assert!((got - a.delta() * c(b.trace())).norm() < 1e-14);
    }

    #[test]
    fn two_k_norm_examples() {
        let mut r = rng::stream(34, "twok", 0);
        let h = rng::hermitian(&mut r, 3);
        let traceless = &h - CMatrix::identity(3, 3) * c(trace_re(&h) / 3.0);
        let d = StateDifference::single(traceless).unwrap();
        assert!((two_k_norm(&d).unwrap() - d.trace_sq().sqrt()).abs() < 1e-12);
        for k in 1..=3usize {
            let parts = vec![StateDifference::single(half_z()).unwrap(); k];
            let d = StateDifference::tensor(&parts).unwrap();
            // Brute force over subsets: traced parties contribute (tr)^2 = 0 unless S is empty.
            let mut oracle = 0.0f64;
            for bits in 0..(1usize << k) {
                let mut term = 1.0;
                for i in 0..k {
                    term *= if bits >> i & 1 == 1 { 0.0 } else { 0.5 };
                }
                oracle += term;
            }
            assert!((two_k_norm(&d).unwrap() - oracle.sqrt()).abs() < 1e-14);
        }
        assert_eq!(two_k_norm(&StateDifference::zero(vec![2, 2]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn product_moments_factorize() {
        let z = StateDifference::single(half_z()).unwrap();
        let zz = StateDifference::tensor(&[z.clone(), z.clone()]).unwrap();
        assert!((product_haar_moment(&zz, 2).unwrap() - 1.0 / 144.0).abs() < 1e-15);
        assert!((product_haar_moment(&zz, 4).unwrap() - 1.0 / 6400.0).abs() < 1e-15);

        let mut r = rng::stream(35, "factor", 0);
        let a = random_difference(&mut r, vec![2]).unwrap();
        let b = random_difference(&mut r, vec![3]).unwrap();
        let ab = StateDifference::tensor(&[a.clone(), b.clone()]).unwrap();
        for t in [2, 4] {
            let lhs = product_haar_moment(&ab, t).unwrap();
            let rhs = haar_moment(&a, t).unwrap() * haar_moment(&b, t).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "t={t}");
        }
        let zero = StateDifference::zero(vec![2, 2]).unwrap();
        assert_eq!(product_haar_moment(&zero, 4).unwrap(), 0.0);
    }

    #[test]
    fn single_party_dense_matches_cycle_sum() {
        let mut r = rng::stream(36, "dense1", 0);
        for n in [2, 3, 5] {
            let d = random_difference(&mut r, vec![n]).unwrap();
            for t in [2, 4] {
                let a = product_haar_moment_dense(&d, t).unwrap();
                let b = haar_moment(&d, t).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_second_moment_matches_closed_form() {
        let mut r = rng::stream(37, "dense2", 0);
        for _ in 0..10 {
            let d = random_difference(&mut r, vec![2, 2]).unwrap();
            let a = product_haar_moment_dense(&d, 2).unwrap();
            let b = product_haar_moment(&d, 2).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_size_gate() {
        let d = StateDifference::zero(vec![2; 5]).unwrap();
        assert!(matches!(product_haar_moment(&d, 4), Err(Error::SizeLimit(_))));
        assert!(product_haar_moment(&d, 3).is_err());
    }

    #[test]
    fn product_ratio_examples() {
        let z = StateDifference::single(half_z()).unwrap();
        let zz = StateDifference::tensor(&[z.clone(), z]).unwrap();
        assert!(product_moment_ratio_check(&zz).unwrap().holds);
        let mut r = rng::stream(38, "pratio", 0);
        let d = random_difference(&mut r, vec![2, 2]).unwrap();
        assert!(product_moment_ratio_check(&d).unwrap().holds);
        let zero = StateDifference::zero(vec![2, 2]).unwrap();
        assert!(product_moment_ratio_check(&zero).unwrap().holds);
    }

    #[test]
    fn monte_carlo_agrees() {
        let d = StateDifference::single(half_z()).unwrap();
        let est = monte_carlo_moment(&d, 2, 20_000, 9).unwrap();
        assert!(est.agrees_with(1.0 / 12.0, 5.0));
        assert_eq!(est.samples, 20_000);
        assert_eq!(est, monte_carlo_moment(&d, 2, 20_000, 9).unwrap());
    }

    #[test]
    fn file_roundtrip() {
        let mut r = rng::stream(39, "file", 0);
        let d = random_difference(&mut r, vec![2, 2]).unwrap();
        let text = serde_json::to_string(&DeltaFile::from(&d)).unwrap();
        let back = parse_delta(&text).unwrap();
        assert!((back.delta() - d.delta()).norm() < 1e-15);
        assert_eq!(back.parties(), 2);
        let raw = parse_delta(r#"{"raw": {"re": [[0.5, 0], [0, -0.5]], "im": [[0, 0], [0, 0]]}}"#).unwrap();
        assert!(raw.is_raw());
        assert_eq!(raw.dims(), &[2]);
        assert!(parse_delta(r#"{"n": 2}"#).is_err());
        let bad = r#"{"n": 1, "k": 1, "p": 0.5, "rho": {"re": [[2]], "im": [[0]]}, "sigma": {"re": [[1]], "im": [[0]]}}"#;
        assert!(parse_delta(bad).is_err());
    }
}
