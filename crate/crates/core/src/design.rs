//! POVMs, t-design verification and measurement bias bounds.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::CheckReport;
use crate::eigen;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_deviation, outer, pairwise_sum, split_index, trace_product_re, trace_re, CMatrix, DenseComplex,
    DenseVector,
};
use crate::moments::{haar_moment_of, product_haar_moment, two_k_norm, StateDifference};

/// Completeness tolerance, max entrywise `|sum_i M_i - I|`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Smallest eigenvalue allowed for a POVM element.
pub const PSD_TOL: f64 = 1e-9;
/// Relative eigenvalue cutoff for the rank-one test.
pub const RANK_TOL: f64 = 1e-9;
/// Entrywise tolerance of the design check.
pub const DESIGN_TOL: f64 = 1e-9;
/// Tolerance of the bias inequalities.
pub const BOUND_TOL: f64 = 1e-9;
/// Largest design order checked.
pub const MAX_DESIGN_ORDER: usize = 4;
/// Limits for the multipartite check: total dimension and outcome tuples.
pub const MAX_PRODUCT_DIM: usize = 16;
pub const MAX_OUTCOME_TUPLES: usize = 100_000;

const BIAS_CHUNK: usize = 256;

/// Measurement on `C^n` with positive elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
    weights: Vec<f64>,
    projectors: Vec<CMatrix>,
    rank_one: bool,
}

impl Povm {
    /// Validates Hermiticity, positivity and completeness.
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidPovm("dimension 0".into()));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        let mut weights = Vec::with_capacity(elements.len());
        let mut projectors = Vec::with_capacity(elements.len());
        let mut rank_one = true;
        for (i, m) in elements.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidPovm(format!("element {i} is not {dim}x{dim}")));
            }
            let deviation = hermitian_deviation(m);
            if deviation > COMPLETENESS_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} is not Hermitian (deviation {deviation:e})"
                )));
            }
            let values = eigen::eigenvalues(m)?;
            let low = values[0];
            if low < -PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} is not positive semidefinite (min eigenvalue {low:e})"
                )));
            }
            let tr = trace_re(m);
            if tr <= PSD_TOL {
                return Err(Error::InvalidPovm(format!("element {i} has zero trace")));
            }
            let top = values[dim - 1];
            if values[..dim - 1].iter().any(|&l| l > RANK_TOL * top) {
                rank_one = false;
            }
            sum += m;
            weights.push(tr / dim as f64);
            projectors.push(m.unscale(tr));
        }
        let completeness = (sum - CMatrix::identity(dim, dim))
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if completeness > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements do not sum to the identity (max deviation {completeness:e})"
            )));
        }
        Ok(Self {
            dim,
            elements,
            weights,
            projectors,
            rank_one,
        })
    }

    /// `M_i = w_i |v_i><v_i|`.
    pub fn from_vectors(vectors: &[crate::linalg::CVector], weights: &[f64]) -> Result<Self> {
        if vectors.len() != weights.len() {
            return Err(Error::InvalidPovm(format!(
                "{} vectors but {} weights",
                vectors.len(),
                weights.len()
            )));
        }
        let elements = vectors
            .iter()
            .zip(weights)
            .map(|(v, &w)| outer(v) * Complex64::new(w, 0.0))
            .collect();
        Self::new(elements)
    }

    /// Measurement in the computational basis.
    pub fn computational(dim: usize) -> Result<Self> {
        let elements = (0..dim)
            .map(|i| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, i)] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Self::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// `p_i = tr(M_i) / n`; these sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `P_i = M_i / tr(M_i)`.
    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn is_rank_one(&self) -> bool {
        self.rank_one
    }

    /// Max entrywise `|sum_i M_i - I|`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for m in &self.elements {
            sum += m;
        }
        (sum - CMatrix::identity(self.dim, self.dim))
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// `sum_i p_i (tr P_i Delta)^t`.
    pub fn design_moment(&self, delta: &CMatrix, t: usize) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.projectors)
            .map(|(&p, proj)| p * trace_product_re(proj, delta).powi(t as i32))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Outcome of a design check at order `t` (and every lower order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub order: usize,
    /// `(s, max entrywise deviation)` for `s = 1..=t`.
    pub deviations: Vec<(usize, f64)>,
    pub report: CheckReport,
}

impl DesignReport {
    pub fn holds(&self) -> bool {
        self.report.holds
    }

    /// Largest `s <= t` such that every order up to `s` passes.
    pub fn verified_order(&self) -> usize {
        self.deviations
            .iter()
            .take_while(|(_, d)| *d <= DESIGN_TOL)
            .map(|(s, _)| *s)
            .last()
            .unwrap_or(0)
    }
}

/// Max entrywise deviation of `sum_i p_i P_i^{(x)t}` from `sum_pi P_pi / (n (n+1) ... (n+t-1))`.
fn design_deviation(m: &Povm, t: usize) -> Result<f64> {
    let n = m.dim;
    let size = n
        .checked_pow(t as u32)
        .filter(|&s| s <= 4096)
        .ok_or_else(|| Error::SizeLimit(format!("design check of order {t} in dimension {n}")))?;
    let dims = vec![n; t];
    let norm: f64 = (0..t).map(|i| (n + i) as f64).product();
    let mut r = vec![0usize; t];
    let mut c = vec![0usize; t];
    let mut worst: f64 = 0.0;
    let perms = permutations(t);
    for row in 0..size {
        split_index(row, &dims, &mut r);
        for col in 0..size {
            split_index(col, &dims, &mut c);
            let mut moment = Complex64::new(0.0, 0.0);
            for (&p, proj) in m.weights.iter().zip(&m.projectors) {
                let mut prod = Complex64::new(p, 0.0);
                for j in 0..t {
                    prod *= proj[(r[j], c[j])];
                }
                moment += prod;
            }
            let matches = perms
                .iter()
                .filter(|perm| (0..t).all(|j| r[j] == c[perm[j]]))
                .count();
            let haar = matches as f64 / norm;
            worst = worst.max((moment - Complex64::new(haar, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn permutations(t: usize) -> Vec<Vec<usize>> {
    if t == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(t - 1) {
        for pos in 0..t {
            let mut q = p.clone();
            q.insert(pos, t - 1);
            out.push(q);
        }
    }
    out
}

/// Checks the `t`-design identity and every lower order.
pub fn check_design(m: &Povm, t: usize) -> Result<DesignReport> {
    if t == 0 || t > MAX_DESIGN_ORDER {
        return Err(Error::InvalidParameter(format!(
            "design order must be in 1..={MAX_DESIGN_ORDER}, got {t}"
        )));
    }
    if !m.rank_one {
        return Err(Error::NotRankOne);
    }
    let mut deviations = Vec::with_capacity(t);
    for s in 1..=t {
        deviations.push((s, design_deviation(m, s)?));
    }
    let worst = deviations.iter().fold(0.0f64, |a, (_, d)| a.max(*d));
    Ok(DesignReport {
        order: t,
        deviations,
        report: CheckReport::le(worst, 0.0, DESIGN_TOL),
    })
}

/// A POVM that passed [`check_design`] at some order.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedDesign {
    povm: Povm,
    order: usize,
    deviation: f64,
}

impl VerifiedDesign {
    /// Accepts `m` only if it is a `t`-design within [`DESIGN_TOL`].
    pub fn verify(m: Povm, t: usize) -> Result<Self> {
        let report = check_design(&m, t)?;
        if !report.holds() {
            return Err(Error::UnverifiedDesign {
                t,
                deviation: report.report.lhs,
            });
        }
        Ok(Self {
            povm: m,
            order: t,
            deviation: report.report.lhs,
        })
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Worst deviation seen during verification.
    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    fn require(&self, t: usize) -> Result<()> {
        if self.order < t {
            return Err(Error::UnverifiedDesign {
                t,
                deviation: f64::NAN,
            });
        }
        Ok(())
    }
}

/// Tensor product measurement, one POVM per party.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPovm {
    parties: Vec<Povm>,
    /// Verified design order shared by all parties, if any.
    order: Option<usize>,
}

impl ProductPovm {
    pub fn new(parties: Vec<Povm>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::InvalidPovm("product of zero parties".into()));
        }
        Ok(Self { parties, order: None })
    }

    pub fn from_designs(parties: &[VerifiedDesign]) -> Result<Self> {
        let mut p = Self::new(parties.iter().map(|d| d.povm.clone()).collect())?;
        p.order = parties.iter().map(|d| d.order).min();
        Ok(p)
    }

    /// `k` copies of the same design.
    pub fn power(design: &VerifiedDesign, k: usize) -> Result<Self> {
        Self::from_designs(&vec![design.clone(); k])
    }

    pub fn parties(&self) -> &[Povm] {
        &self.parties
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parties.iter().map(Povm::dim).collect()
    }

    pub fn outcome_count(&self) -> Option<usize> {
        self.parties.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len()))
    }

    /// `true` when local dimensions differ, which goes beyond the equal-dimension bound.
    pub fn is_extrapolated(&self) -> bool {
        let d = self.dims();
        d.iter().any(|&x| x != d[0])
    }
}

/// `sum_i |tr M_i Delta|`.
pub fn measurement_bias(m: &Povm, delta: &StateDifference) -> Result<f64> {
    if delta.parties() != 1 || delta.total_dim() != m.dim {
        return Err(Error::DimensionMismatch(format!(
            "POVM acts on dimension {}, Delta has parties {:?}",
            m.dim,
            delta.dims()
        )));
    }
    let terms: Vec<f64> = m
        .elements
        .iter()
        .map(|e| trace_product_re(e, delta.delta()).abs())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `sum over outcome tuples |tr (M_{i_1} (x) ... (x) M_{i_k}) Delta|`.
///
/// Tuples are enumerated lazily by index; fixed-size ranges are summed in
/// parallel and combined pairwise in range order.
pub fn product_measurement_bias(m: &ProductPovm, delta: &StateDifference) -> Result<f64> {
    let dims = m.dims();
    if delta.dims() != dims.as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "POVM parties {:?} but Delta parties {:?}",
            dims,
            delta.dims()
        )));
    }
    let counts: Vec<usize> = m.parties.iter().map(Povm::len).collect();
    let tuples = m
        .outcome_count()
        .ok_or_else(|| Error::SizeLimit("outcome tuple count overflows".into()))?;
    let total = delta.total_dim();
    let k = dims.len();
    // Digits of every row/column index, per party.
    let mut digits = vec![0usize; k];
    let index_digits: Vec<Vec<usize>> = (0..total)
        .map(|a| {
            split_index(a, &dims, &mut digits);
            digits.clone()
        })
        .collect();
    let d = delta.delta();
    let chunks = tuples.div_ceil(BIAS_CHUNK);
    let sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut outcome = vec![0usize; k];
            let mut terms = Vec::with_capacity(BIAS_CHUNK);
            for tuple in chunk * BIAS_CHUNK..((chunk + 1) * BIAS_CHUNK).min(tuples) {
                split_index(tuple, &counts, &mut outcome);
                let mut acc = 0.0;
                for (r, rd) in index_digits.iter().enumerate() {
                    for (c, cd) in index_digits.iter().enumerate() {
                        let mut prod = d[(c, r)];
                        for i in 0..k {
                            prod *= m.parties[i].elements[outcome[i]][(rd[i], cd[i])];
                        }
                        acc += prod.re;
                    }
                }
                terms.push(acc.abs());
            }
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&sums))
}

/// `tr |Delta|`, the optimal distinguishing bias.
pub fn trace_norm(delta: &StateDifference) -> Result<f64> {
    Ok(eigen::eigenvalues(delta.delta())?.iter().map(|l| l.abs()).sum())
}

/// `1 / (9 sqrt(1 + 1/n))`.
pub fn unipartite_constant(n: usize) -> f64 {
    1.0 / (9.0 * (1.0 + 1.0 / n as f64).sqrt())
}

/// The three quantities of the fourth-moment argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentChain {
    pub bias: f64,
    pub design_second: f64,
    pub design_fourth: f64,
    pub haar_second: f64,
    pub haar_fourth: f64,
    /// `n E2^{3/2} / E4^{1/2}` from the design sums.
    pub design_ratio: f64,
    /// The same from exact Haar moments.
    pub haar_ratio: f64,
    /// `sqrt((tr Delta)^2 + tr Delta^2) / (9 sqrt(1 + 1/n))`.
    pub bound: f64,
    /// `bias >= design_ratio`, `design_ratio == haar_ratio`, `haar_ratio >= bound`.
    pub report: CheckReport,
}

fn moment_ratio(n: usize, second: f64, fourth: f64) -> f64 {
    if fourth <= 0.0 {
        0.0
    } else {
        n as f64 * second.max(0.0).powf(1.5) / fourth.sqrt()
    }
}

fn require_single(design: &VerifiedDesign, delta: &StateDifference) -> Result<usize> {
    design.require(4)?;
    let n = design.povm.dim;
    if delta.parties() != 1 || delta.total_dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "design acts on dimension {n}, Delta has parties {:?}",
            delta.dims()
        )));
    }
    Ok(n)
}

/// Evaluates the chain `|Delta|_M >= n E2^{3/2}/E4^{1/2} = (Haar version) >= bound`.
pub fn fourth_moment_chain(design: &VerifiedDesign, delta: &StateDifference) -> Result<FourthMomentChain> {
    let n = require_single(design, delta)?;
    let m = &design.povm;
    let bias = measurement_bias(m, delta)?;
    let design_second = m.design_moment(delta.delta(), 2);
    let design_fourth = m.design_moment(delta.delta(), 4);
    let haar_second = haar_moment_of(delta.delta(), 2)?;
    let haar_fourth = haar_moment_of(delta.delta(), 4)?;
    let design_ratio = moment_ratio(n, design_second, design_fourth);
    let haar_ratio = moment_ratio(n, haar_second, haar_fourth);
    let tr = delta.trace();
    let bound = unipartite_constant(n) * (tr * tr + delta.trace_sq()).sqrt();
    let report = CheckReport::ge(bias, design_ratio, BOUND_TOL)
        .and(CheckReport::close(design_ratio, haar_ratio, BOUND_TOL))
        .and(CheckReport::ge(haar_ratio, bound, BOUND_TOL));
    Ok(FourthMomentChain {
        bias,
        design_second,
        design_fourth,
        haar_second,
        haar_fourth,
        design_ratio,
        haar_ratio,
        bound,
        report,
    })
}

/// `|Delta|_M >= sqrt((1-2p)^2 + tr Delta^2) / (9 sqrt(1 + 1/n))`.
pub fn check_unipartite_bound(design: &VerifiedDesign, delta: &StateDifference) -> Result<CheckReport> {
    let n = require_single(design, delta)?;
    let bias = measurement_bias(&design.povm, delta)?;
    let tr = delta.trace();
    let bound = unipartite_constant(n) * (tr * tr + delta.trace_sq()).sqrt();
    Ok(CheckReport::ge(bias, bound, BOUND_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipartiteReport {
    /// `|Delta|_M >= prod_i (81 (1 + 1/n_i))^{-1/2} |Delta|_{2(k)}`.
    pub bound: CheckReport,
    /// `|Delta|_M >= prod_i (n_i / 9) sqrt(E2)`.
    pub intermediate: CheckReport,
    /// Local dimensions differ; the bound is the per-party generalization.
    pub extrapolated: bool,
}

impl MultipartiteReport {
    pub fn holds(&self) -> bool {
        self.bound.holds && self.intermediate.holds
    }
}

pub fn check_multipartite_bound(m: &ProductPovm, delta: &StateDifference) -> Result<MultipartiteReport> {
    if m.order.is_none_or(|o| o < 4) {
        return Err(Error::UnverifiedDesign {
            t: 4,
            deviation: f64::NAN,
        });
    }
    if delta.total_dim() > MAX_PRODUCT_DIM {
        return Err(Error::SizeLimit(format!(
            "total dimension {} exceeds {MAX_PRODUCT_DIM}",
            delta.total_dim()
        )));
    }
    if m.outcome_count().is_none_or(|c| c > MAX_OUTCOME_TUPLES) {
        return Err(Error::SizeLimit(format!("more than {MAX_OUTCOME_TUPLES} outcome tuples")));
    }
    let bias = product_measurement_bias(m, delta)?;
    let dims = m.dims();
    let constant: f64 = dims.iter().map(|&n| (81.0 * (1.0 + 1.0 / n as f64)).sqrt().recip()).product();
    let bound = constant * two_k_norm(delta)?;
    let scale: f64 = dims.iter().map(|&n| n as f64 / 9.0).product();
    let intermediate = scale * product_haar_moment(delta, 2)?.max(0.0).sqrt();
    Ok(MultipartiteReport {
        bound: CheckReport::ge(bias, bound, BOUND_TOL),
        intermediate: CheckReport::ge(bias, intermediate, BOUND_TOL),
        extrapolated: m.is_extrapolated(),
    })
}

/// JSON form: `{"dim", "elements"}` or `{"dim", "vectors", "weights"}` with `M_i = w_i |v_i><v_i|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PovmFile {
    Elements {
        dim: usize,
        elements: Vec<DenseComplex>,
    },
    Vectors {
        dim: usize,
        vectors: Vec<DenseVector>,
        weights: Vec<f64>,
    },
}

impl TryFrom<PovmFile> for Povm {
    type Error = Error;

    fn try_from(file: PovmFile) -> Result<Self> {
        let (dim, povm) = match file {
            PovmFile::Elements { dim, elements } => {
                let mats = elements.iter().map(DenseComplex::to_matrix).collect::<Result<Vec<_>>>()?;
                (dim, Povm::new(mats)?)
            }
            PovmFile::Vectors { dim, vectors, weights } => {
                let vs = vectors.iter().map(DenseVector::to_vector).collect::<Result<Vec<_>>>()?;
                (dim, Povm::from_vectors(&vs, &weights)?)
            }
        };
        if povm.dim != dim {
            return Err(Error::InvalidPovm(format!(
                "declared dim {dim} but elements are {}x{}",
                povm.dim, povm.dim
            )));
        }
        Ok(povm)
    }
}

impl From<&Povm> for PovmFile {
    fn from(m: &Povm) -> Self {
        PovmFile::Elements {
            dim: m.dim,
            elements: m.elements.iter().map(DenseComplex::from).collect(),
        }
    }
}

pub fn parse_povm(json: &str) -> Result<Povm> {
    let file: PovmFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.try_into()
}

const MUB_JSON: &str = include_str!("../data/mub.json");
const ICOSAHEDRON_JSON: &str = include_str!("../data/icosahedron.json");

/// Six-outcome qubit measurement in the eigenbases of X, Y and Z.
pub fn mub_povm() -> Result<Povm> {
    parse_povm(MUB_JSON)
}

/// Twelve-outcome qubit measurement on the icosahedron vertices of the Bloch sphere.
pub fn icosahedron_povm() -> Result<Povm> {
    parse_povm(ICOSAHEDRON_JSON)
}

/// The bundled qubit 4-design candidate, if it passes [`check_design`] at order 4.
pub fn bundled_four_design() -> Result<Option<VerifiedDesign>> {
    match VerifiedDesign::verify(icosahedron_povm()?, 4) {
        Ok(d) => Ok(Some(d)),
        Err(Error::UnverifiedDesign { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
