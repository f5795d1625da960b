//! Multiplayer XOR games and their multilinear forms.
//!
//! Tensors are flat and row-major over `(i_1, ..., i_k)`, player 1 most
//! significant. A sign assignment for one player is an `n`-bit mask; bit `i`
//! set means input `i` is answered with `-1`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean::BooleanFunction;
use crate::check::CheckReport;
use crate::error::{Error, Result};
use crate::rng;

/// Default exact-bias budget in visited tensor elements.
pub const DEFAULT_BUDGET: u128 = 1 << 32;
/// Tolerance on `sum pi = 1`.
pub const PI_TOL: f64 = 1e-12;
/// Tolerance of the Bohnenblust-Hille check.
pub const BH_TOL: f64 = 1e-10;
/// Tolerance of the bias lower bound.
pub const LOWER_TOL: f64 = 1e-12;
/// Tolerance of the matrix inequality.
pub const BLEI_TOL: f64 = 1e-10;
/// Magnitude spread allowed in the constant-magnitude case.
pub const MAGNITUDE_TOL: f64 = 1e-12;
/// Largest `n * k` for a single sign mask.
const MAX_MASK_BITS: usize = 63;

fn tensor_len(k: usize, n: usize) -> Result<usize> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("need k >= 1 and n >= 1, got k={k}, n={n}")));
    }
    if n > MAX_MASK_BITS {
        return Err(Error::SizeLimit(format!("n = {n} exceeds {MAX_MASK_BITS} inputs per player")));
    }
    n.checked_pow(k as u32)
        .filter(|&len| len <= 1 << 28)
        .ok_or_else(|| Error::SizeLimit(format!("tensor of shape {n}^{k} is too large")))
}

/// Coefficient tensor `fhat` of a `k`-linear form in `k` blocks of `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearForm {
    k: usize,
    n: usize,
    coeffs: Vec<f64>,
}

impl MultilinearForm {
    pub fn new(k: usize, n: usize, coeffs: Vec<f64>) -> Result<Self> {
        let len = tensor_len(k, n)?;
        if coeffs.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "expected {len} coefficients for shape {n}^{k}, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(Self { k, n, coeffs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            k: self.k,
            n: self.n,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// Flat index of `(i_1, ..., i_k)` (0-based).
    pub fn index(&self, inputs: &[usize]) -> usize {
        inputs.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// `sum fhat^2`; every monomial is nonconstant.
    pub fn variance(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `sum |fhat|`, an upper bound on the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

/// A `k`-player XOR game: input distribution `pi` and sign tensor `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct XorGame {
    k: usize,
    n: usize,
    pi: Vec<f64>,
    a: Vec<i8>,
}

impl XorGame {
    pub fn new(k: usize, n: usize, pi: Vec<f64>, a: Vec<i8>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("XOR games need k >= 2 players, got {k}")));
        }
        let len = tensor_len(k, n)?;
        if pi.len() != len || a.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "pi and A need {len} entries each, got {} and {}",
                pi.len(),
                a.len()
            )));
        }
        if pi.iter().any(|&p| p.is_nan() || p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter("pi must be nonnegative and finite".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > PI_TOL {
            return Err(Error::InvalidParameter(format!("pi sums to {total}, expected 1")));
        }
        if a.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("A entries must be +1 or -1".into()));
        }
        Ok(Self { k, n, pi, a })
    }

    /// Two players, two inputs, uniform `pi`, `A = [[1, 1], [1, -1]]`.
    pub fn chsh() -> Self {
        Self::new(2, 2, vec![0.25; 4], vec![1, 1, 1, -1]).expect("valid game")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn signs(&self) -> &[i8] {
        &self.a
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.pi.len() as f64;
        self.pi.iter().all(|&p| (p - u).abs() <= PI_TOL)
    }

    /// `fhat = pi * A` entrywise.
    pub fn form(&self) -> MultilinearForm {
        let coeffs = self.pi.iter().zip(&self.a).map(|(&p, &s)| p * f64::from(s)).collect();
        MultilinearForm {
            k: self.k,
            n: self.n,
            coeffs,
        }
    }
}

/// One sign vector per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    signs: Vec<Vec<i8>>,
}

impl Strategy {
    pub fn new(signs: Vec<Vec<i8>>) -> Result<Self> {
        if signs.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("strategy entries must be +1 or -1".into()));
        }
        Ok(Self { signs })
    }

    pub fn constant(k: usize, n: usize) -> Self {
        Self {
            signs: vec![vec![1; n]; k],
        }
    }

    /// Player `j` answers input `i` with `-1` iff bit `i` of `masks[j]` is set.
    pub fn from_masks(masks: &[u64], n: usize) -> Self {
        let signs = masks
            .iter()
            .map(|&m| (0..n).map(|i| if m >> i & 1 == 1 { -1 } else { 1 }).collect())
            .collect();
        Self { signs }
    }

    pub fn signs(&self) -> &[Vec<i8>] {
        &self.signs
    }

    pub fn players(&self) -> usize {
        self.signs.len()
    }
}

fn check_strategy(f: &MultilinearForm, s: &Strategy) -> Result<()> {
    if s.signs.len() != f.k || s.signs.iter().any(|v| v.len() != f.n) {
        return Err(Error::DimensionMismatch(format!(
            "strategy shape does not match k={}, n={}",
            f.k, f.n
        )));
    }
    Ok(())
}

/// Contracts the leading index of a row-major tensor with `signs`.
fn contract_front(tensor: &[f64], signs: &[f64], out: &mut [f64]) {
    let rest = out.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &x) in signs.iter().enumerate() {
        let row = &tensor[i * rest..(i + 1) * rest];
        for (o, &t) in out.iter_mut().zip(row) {
            *o += x * t;
        }
    }
}

fn mask_signs(mask: u64, n: usize, out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate().take(n) {
        *slot = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
    }
}

/// `sum fhat_{i_1..i_k} x^1_{i_1} ... x^k_{i_k}`.
pub fn evaluate(f: &MultilinearForm, s: &Strategy) -> Result<f64> {
    check_strategy(f, s)?;
    let mut current = f.coeffs.clone();
    for signs in &s.signs {
        let x: Vec<f64> = signs.iter().map(|&v| f64::from(v)).collect();
        let mut next = vec![0.0; current.len() / f.n];
        contract_front(&current, &x, &mut next);
        current = next;
    }
    Ok(current[0])
}

/// Marginal vector of player `j` given the others' signs.
fn marginal(f: &MultilinearForm, s: &[Vec<f64>], j: usize) -> Vec<f64> {
    let n = f.n;
    let mut out = vec![0.0; n];
    let mut inputs = vec![0usize; f.k];
    for (idx, &c) in f.coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut rest = idx;
        for slot in inputs.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        let mut prod = c;
        for (p, &i) in inputs.iter().enumerate() {
            if p != j {
                prod *= s[p][i];
            }
        }
        out[inputs[j]] += prod;
    }
    out
}

/// Bias value with an optimal (or best found) strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasResult {
    pub value: f64,
    pub witness: Strategy,
    /// `false` for local-search values, which are lower bounds only.
    pub exact: bool,
}

/// Tensor-element visits needed by [`bias_exact`]: `2^{n(k-1)} n^k`.
pub fn exact_cost(k: usize, n: usize) -> u128 {
    let bits = (n * (k - 1)) as u32;
    if bits >= 100 {
        return u128::MAX;
    }
    (1u128 << bits).saturating_mul((n as u128).saturating_pow(k as u32))
}

/// Depth-first search over players `player..k-1`; returns `(best, masks)` in
/// lexicographic order of the masks, keeping the first maximum.
fn search(f: &MultilinearForm, tensor: &[f64], player: usize, masks: &mut Vec<u64>, best: &mut (f64, Vec<u64>)) {
    let n = f.n;
    if player == f.k - 1 {
        let value: f64 = tensor.iter().map(|v| v.abs()).sum();
        if value > best.0 {
            *best = (value, masks.clone());
        }
        return;
    }
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; tensor.len() / n];
    for mask in 0..(1u64 << n) {
        mask_signs(mask, n, &mut x);
        contract_front(tensor, &x, &mut next);
        masks.push(mask);
        search(f, &next, player + 1, masks, best);
        masks.pop();
    }
}

fn last_response(f: &MultilinearForm, masks: &[u64]) -> u64 {
    let mut s: Vec<Vec<f64>> = masks
        .iter()
        .map(|&m| {
            let mut x = vec![0.0; f.n];
            mask_signs(m, f.n, &mut x);
            x
        })
        .collect();
    s.push(vec![1.0; f.n]);
    let m = marginal(f, &s, f.k - 1);
    m.iter()
        .enumerate()
        .filter(|(_, &v)| v < 0.0)
        .fold(0u64, |acc, (i, _)| acc | 1 << i)
}

/// `beta = max_x |f(x)|` by enumerating players `1..k-1` and answering
/// optimally for player `k`.
///
/// The first player's `2^n` assignments are searched in parallel; among
/// optimal strategies the lexicographically smallest mask tuple is returned.
pub fn bias_exact_form(f: &MultilinearForm, budget: u128) -> Result<BiasResult> {
    let required = exact_cost(f.k, f.n);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let n = f.n;
    let (value, mut masks) = if f.k == 1 {
        (f.l1_norm(), Vec::new())
    } else {
        let results: Vec<(f64, Vec<u64>)> = (0..(1u64 << n))
            .into_par_iter()
            .map(|first| {
                let mut x = vec![0.0; n];
                mask_signs(first, n, &mut x);
                let mut next = vec![0.0; f.coeffs.len() / n];
                contract_front(&f.coeffs, &x, &mut next);
                let mut best = (f64::NEG_INFINITY, Vec::new());
                let mut masks = vec![first];
                search(f, &next, 1, &mut masks, &mut best);
                best
            })
            .collect();
        results
            .into_iter()
            .fold((f64::NEG_INFINITY, Vec::new()), |acc, r| if r.0 > acc.0 { r } else { acc })
    };
    masks.push(last_response(f, &masks));
    Ok(BiasResult {
        value,
        witness: Strategy::from_masks(&masks, n),
        exact: true,
    })
}

pub fn bias_exact(g: &XorGame) -> Result<BiasResult> {
    bias_exact_form(&g.form(), DEFAULT_BUDGET)
}

/// Best-response ascent from random starts.
///
/// Each sweep replaces every player's signs by the signs of its marginal
/// vector (a zero marginal keeps the current sign) until nothing changes.
/// The result is a lower bound on `beta`.
pub fn bias_local_search_form(f: &MultilinearForm, restarts: usize, seed: u64) -> Result<BiasResult> {
    let restarts = restarts.max(1);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for restart in 0..restarts {
        let mut r = rng::stream(seed, "xor-local-search", restart as u64);
        let mut s: Vec<Vec<f64>> = (0..f.k)
            .map(|_| (0..f.n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect())
            .collect();
        loop {
            let mut changed = false;
            for j in 0..f.k {
                let m = marginal(f, &s, j);
                for (x, &v) in s[j].iter_mut().zip(&m) {
                    let target = if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        *x
                    };
                    if target != *x {
                        *x = target;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let value: f64 = marginal(f, &s, f.k - 1)
            .iter()
            .zip(&s[f.k - 1])
            .map(|(m, x)| m * x)
            .sum();
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, s));
        }
    }
    let (value, s) = best.expect("at least one restart");
    let signs = s
        .into_iter()
        .map(|v| v.into_iter().map(|x| if x < 0.0 { -1 } else { 1 }).collect())
        .collect();
    Ok(BiasResult {
        value,
        witness: Strategy { signs },
        exact: false,
    })
}

pub fn bias_local_search(g: &XorGame, restarts: usize, seed: u64) -> Result<BiasResult> {
    bias_local_search_form(&g.form(), restarts, seed)
}

/// `true` when no single player can raise the value by changing their signs.
pub fn is_best_response_fixed_point(f: &MultilinearForm, s: &Strategy) -> Result<bool> {
    check_strategy(f, s)?;
    let x: Vec<Vec<f64>> = s
        .signs
        .iter()
        .map(|v| v.iter().map(|&t| f64::from(t)).collect())
        .collect();
    let current = evaluate(f, s)?;
    for j in 0..f.k {
        let m = marginal(f, &x, j);
        let best: f64 = m.iter().map(|v| v.abs()).sum();
        if best > current + 1e-12 * best.abs().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Unnormalized `(sum |fhat|^p)^{1/p}`; `p = inf` gives the max entry.
pub fn bh_norm(f: &MultilinearForm, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.coeffs.iter().fold(0.0, |a, c| a.max(c.abs())));
    }
    Ok(f.coeffs.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}

/// `2k / (k + 1)`.
pub fn bh_exponent(k: usize) -> f64 {
    2.0 * k as f64 / (k as f64 + 1.0)
}

/// One line of the constant's derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhStep {
    pub k: usize,
    /// `C_k = factor * C_{k/2}`; for base cases the factor is the value itself.
    pub factor: f64,
    pub value: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhConstant {
    /// Requested `k`.
    pub k: usize,
    /// Power of two actually used.
    pub padded_k: usize,
    pub value: f64,
    pub trace: Vec<BhStep>,
}

impl BhConstant {
    /// Recomputes the value by multiplying the trace factors.
    pub fn replay(&self) -> f64 {
        self.trace.iter().map(|s| s.factor).product()
    }
}

/// `C_1 = 1`, `C_2 = sqrt 2`, `C_k = (1 + 4/(k-2))^{k/4} C_{k/2}` for powers of
/// two `k >= 4`; other `k` use the next power of two.
pub fn bh_constant(k: usize) -> Result<BhConstant> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let padded_k = k.next_power_of_two();
    let mut trace = Vec::new();
    if padded_k != k {
        trace.push(BhStep {
            k,
            factor: 1.0,
            value: f64::NAN,
            note: format!("k = {k} padded to {padded_k}"),
        });
    }
    let mut steps = Vec::new();
    let mut m = padded_k;
    while m > 2 {
        steps.push(m);
        m /= 2;
    }
    let mut value = if m == 1 { 1.0 } else { 2f64.sqrt() };
    trace.push(BhStep {
        k: m,
        factor: value,
        value,
        note: if m == 1 {
            "C_1 = 1".into()
        } else {
            "C_2 = sqrt(2), Littlewood 4/3 inequality".into()
        },
    });
    for &m in steps.iter().rev() {
        let factor = (1.0 + 4.0 / (m as f64 - 2.0)).powf(m as f64 / 4.0);
        value *= factor;
        trace.push(BhStep {
            k: m,
            factor,
            value,
            note: format!("C_{m} = (1 + 4/{})^({m}/4) C_{}", m - 2, m / 2),
        });
    }
    if let Some(first) = trace.first_mut().filter(|s| s.value.is_nan()) {
        first.value = value;
    }
    Ok(BhConstant {
        k,
        padded_k,
        value,
        trace,
    })
}

/// `|fhat|_{2k/(k+1)} <= C_k beta`.
pub fn check_bh_with(f: &MultilinearForm, beta: f64) -> Result<CheckReport> {
    let norm = bh_norm(f, bh_exponent(f.k))?;
    let c = bh_constant(f.k)?.value;
    Ok(CheckReport::le(norm, c * beta, BH_TOL))
}

pub fn check_bh(g: &XorGame) -> Result<CheckReport> {
    let beta = bias_exact(g)?.value;
    check_bh_with(&g.form(), beta)
}

/// `n^{-(k-1)/2} / C_k`.
pub fn bias_lower_bound(k: usize, n: usize) -> Result<f64> {
    Ok((n as f64).powf(-(k as f64 - 1.0) / 2.0) / bh_constant(k)?.value)
}

/// `beta >= n^{-(k-1)/2} / C_k` for a bias value (exact or a lower bound).
pub fn check_bias_lower_with(g: &XorGame, beta: f64) -> Result<CheckReport> {
    Ok(CheckReport::ge(beta, bias_lower_bound(g.k, g.n)?, LOWER_TOL))
}

/// Uses the exact bias within the default budget, otherwise local search.
pub fn check_bias_lower(g: &XorGame) -> Result<CheckReport> {
    let beta = match bias_exact(g) {
        Ok(b) => b.value,
        Err(Error::BudgetExceeded { .. }) => bias_local_search(g, 10, 0)?.value,
        Err(e) => return Err(e),
    };
    check_bias_lower_with(g, beta)
}

/// Both sides of the matrix inequality for exponent `m`:
/// `(sum |A_ij|^{2m/(m+1)})^{(m+1)/2m}` against the geometric mean of the
/// `2m/(m+2)` norms of the column and row 2-norms.
pub fn blei_check(a: &nalgebra::DMatrix<f64>, m: f64) -> Result<CheckReport> {
    if m.is_nan() || m < 1.0 {
        return Err(Error::InvalidParameter(format!("m must be >= 1, got {m}")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("matrix entries must be finite".into()));
    }
    let p = 2.0 * m / (m + 1.0);
    let lhs = a.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let r = 2.0 * m / (m + 2.0);
    let outer = |norms: Vec<f64>| norms.iter().map(|x| x.powf(r)).sum::<f64>().powf((m + 2.0) / (4.0 * m));
    let cols = outer(a.column_iter().map(|c| c.norm()).collect());
    let rows = outer(a.row_iter().map(|r| r.norm()).collect());
    Ok(CheckReport::le(lhs, cols * rows, BLEI_TOL))
}

/// `I_{(j, l)} = sum of fhat^2 over entries with i_j = l` (1-based `j`, `l`).
pub fn influence_form(f: &MultilinearForm, j: usize, l: usize) -> Result<f64> {
    if j == 0 || j > f.k {
        return Err(Error::IndexOutOfRange {
            index: j,
            valid: format!("players 1..={}", f.k),
        });
    }
    if l == 0 || l > f.n {
        return Err(Error::IndexOutOfRange {
            index: l,
            valid: format!("inputs 1..={}", f.n),
        });
    }
    let stride = f.n.pow((f.k - j) as u32);
    Ok(f.coeffs
        .iter()
        .enumerate()
        .filter(|(idx, _)| (idx / stride) % f.n == l - 1)
        .map(|(_, c)| c * c)
        .sum())
}

/// The form as a function of `n k` Boolean variables; variable `(j, l)`
/// (1-based) is Boolean variable `(j-1) n + l`.
pub fn induced_function(f: &MultilinearForm) -> Result<BooleanFunction> {
    let arity = f.n * f.k;
    BooleanFunction::from_fn(arity, |x| {
        let mut current = f.coeffs.clone();
        for j in 0..f.k {
            let mut signs = vec![0.0; f.n];
            mask_signs((x >> (j * f.n)) as u64, f.n, &mut signs);
            let mut next = vec![0.0; current.len() / f.n];
            contract_front(&current, &signs, &mut next);
            current = next;
        }
        current[0]
    })
}

/// Report for the constant-magnitude case of the influence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaReport {
    pub alpha: f64,
    pub variance: f64,
    pub influence: f64,
    /// Sup norm used: exact bias, or the `l1` upper bound.
    pub sup_norm: f64,
    pub sup_exact: bool,
    /// `Var^2 / I <= C_k^2 |f|_inf^2` combined with `C_k^2 |f|_inf^2 <= C_k^2`.
    pub report: CheckReport,
}

pub fn check_aa_special(f: &MultilinearForm) -> Result<AaReport> {
    let (lo, hi) = f
        .coeffs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c.abs()), hi.max(c.abs())));
    if hi - lo > MAGNITUDE_TOL {
        return Err(Error::NonConstantMagnitude { spread: hi - lo });
    }
    let alpha = hi;
    let (sup_norm, sup_exact) = match bias_exact_form(f, DEFAULT_BUDGET) {
        Ok(b) => (b.value, true),
        Err(Error::BudgetExceeded { .. }) => (f.l1_norm(), false),
        Err(e) => return Err(e),
    };
    if sup_norm > 1.0 + MAGNITUDE_TOL {
        return Err(Error::Precondition(format!("|f|_inf = {sup_norm} exceeds 1")));
    }
    let variance = f.variance();
    let influence = influence_form(f, 1, 1)?;
    let ratio = if influence > 0.0 { variance * variance / influence } else { 0.0 };
    let c = bh_constant(f.k)?.value;
    let report = CheckReport::le(ratio, c * c * sup_norm * sup_norm, BH_TOL)
        .and(CheckReport::le(c * c * sup_norm * sup_norm, c * c, BH_TOL));
    Ok(AaReport {
        alpha,
        variance,
        influence,
        sup_norm,
        sup_exact,
        report,
    })
}

/// Random game: `pi` from normalized uniform weights, independent random signs.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> Result<XorGame> {
    let len = tensor_len(k, n)?;
    let weights: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + f64::MIN_POSITIVE).collect();
    let total: f64 = weights.iter().sum();
    let pi = weights.iter().map(|w| w / total).collect();
    let a = (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    XorGame::new(k, n, pi, a)
}

/// `+-alpha` tensor with random signs.
pub fn random_sign_form<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize, alpha: f64) -> Result<MultilinearForm> {
    let len = tensor_len(k, n)?;
    let coeffs = (0..len).map(|_| if rng.random::<bool>() { alpha } else { -alpha }).collect();
    MultilinearForm::new(k, n, coeffs)
}

/// Game file: `{"k", "n", "pi": [...], "A": [...]}`, tensors flat row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub k: usize,
    pub n: usize,
    pub pi: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<i8>,
}

/// Form file: `{"k", "n", "coeffs": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormFile {
    pub k: usize,
    pub n: usize,
    pub coeffs: Vec<f64>,
}

impl TryFrom<GameFile> for XorGame {
    type Error = Error;

    fn try_from(f: GameFile) -> Result<Self> {
        XorGame::new(f.k, f.n, f.pi, f.a)
    }
}

impl From<&XorGame> for GameFile {
    fn from(g: &XorGame) -> Self {
        GameFile {
            k: g.k,
            n: g.n,
            pi: g.pi.clone(),
            a: g.a.clone(),
        }
    }
}

impl TryFrom<FormFile> for MultilinearForm {
    type Error = Error;

    fn try_from(f: FormFile) -> Result<Self> {
        MultilinearForm::new(f.k, f.n, f.coeffs)
    }
}

pub fn parse_game(json: &str) -> Result<XorGame> {
    let file: GameFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.try_into()
}

pub fn parse_form(json: &str) -> Result<MultilinearForm> {
    let file: FormFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.try_into()
}

/// One row of the game results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResultRow {
    pub id: String,
    pub beta: f64,
    pub bh_norm: f64,
    pub c_k: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

impl GameResultRow {
    /// BH and lower-bound checks for `g` at bias `beta`.
    pub fn evaluate(id: impl Into<String>, g: &XorGame, beta: f64) -> Result<Self> {
        let f = g.form();
        let bh = check_bh_with(&f, beta)?;
        let lower = check_bias_lower_with(g, beta)?;
        Ok(Self {
            id: id.into(),
            beta,
            bh_norm: bh.lhs,
            c_k: bh_constant(g.k)?.value,
            lower_bound: lower.lhs,
            holds: bh.holds && lower.holds,
        })
    }
}

pub fn write_results_csv<W: Write>(out: W, rows: &[GameResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
