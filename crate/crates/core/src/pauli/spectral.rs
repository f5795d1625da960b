use std::f64::consts::E;

use num_complex::Complex64;
use rand::Rng;

use super::operator::{locality, pauli_decompose, HermitianOperator, PauliExpansion};
use crate::boolean::fwht;
use crate::check::CheckReport;
use crate::eigen;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::rng;

/// Largest qubit count accepted by [`diagonal_spectrum`].
pub const MAX_DIAGONAL_QUBITS: usize = 26;
/// Allowed deviation of `|M|_2` from 1 in the normalized checks.
pub const NORM_TOL: f64 = 1e-8;
/// Tolerance for the norm and survival inequalities.
pub const CHECK_TOL: f64 = 1e-9;
/// Relative cutoff for the numerical rank.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Allowed deviation of `|psi|_2` from 1.
pub const STATE_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order, optionally with eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    vectors: Option<CMatrix>,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if !eigenvalues.len().is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "spectrum length {} is not a power of two",
                eigenvalues.len()
            )));
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            eigenvalues,
            vectors: None,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> Option<&CMatrix> {
        self.vectors.as_ref()
    }

    pub fn n_qubits(&self) -> usize {
        self.eigenvalues.len().trailing_zeros() as usize
    }

    /// `max |lambda_i|`.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, l| a.max(l.abs()))
    }

    /// Normalized Schatten norm from the eigenvalues.
    pub fn schatten(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("Schatten index must be >= 1, got {p}")));
        }
        Ok(crate::boolean::normalized_lp(&self.eigenvalues, p))
    }

    /// `#{i : |lambda_i| >= t} / 2^n`.
    pub fn tail_fraction(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("tail threshold must be >= 0, got {t}")));
        }
        let count = self.eigenvalues.iter().filter(|l| l.abs() >= t).count();
        Ok(count as f64 / self.eigenvalues.len() as f64)
    }

    /// Count of eigenvalues with `|lambda| > 1e-8 max|lambda|`.
    pub fn numerical_rank(&self) -> usize {
        let cutoff = RANK_CUTOFF * self.operator_norm();
        self.eigenvalues.iter().filter(|l| l.abs() > cutoff).count()
    }
}

/// Dense Hermitian eigensolve of `M`.
pub fn spectrum(m: &HermitianOperator, with_vectors: bool) -> Result<Spectrum> {
    let e = eigen::eigh(m.matrix(), with_vectors)?;
    Ok(Spectrum {
        eigenvalues: e.values,
        vectors: e.vectors,
    })
}

/// Exact spectrum of an expansion supported on `{I, Z}` strings.
///
/// Such an operator is diagonal with entries `sum_z c_z (-1)^{|c & z|}`, a
/// Walsh-Hadamard transform of the coefficient vector. Handles qubit counts
/// far beyond the dense limit.
pub fn diagonal_spectrum(e: &PauliExpansion) -> Result<Spectrum> {
    let n = e.n_qubits();
    if n > MAX_DIAGONAL_QUBITS {
        return Err(Error::SizeLimit(format!(
            "{n} qubits exceeds the diagonal limit of {MAX_DIAGONAL_QUBITS}"
        )));
    }
    let mut diag = vec![0.0; 1 << n];
    for (s, &c) in e.iter() {
        if s.x_mask() != 0 {
            return Err(Error::Precondition(format!("{s} is not diagonal")));
        }
        diag[s.z_mask() as usize] += c;
    }
    fwht(&mut diag);
    Spectrum::from_eigenvalues(diag)
}

/// Normalized Schatten `p`-norm `(2^-n sum |lambda_i|^p)^(1/p)`; `p = inf` gives `max |lambda_i|`.
pub fn schatten_norm(m: &HermitianOperator, p: f64) -> Result<f64> {
    spectrum(m, false)?.schatten(p)
}

pub fn tail_fraction(sp: &Spectrum, t: f64) -> Result<f64> {
    sp.tail_fraction(t)
}

/// `exp(-k t^(2/k) / (2e))`; 1 for `k = 0`.
pub fn tail_bound(k: usize, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    (-k * t.powf(2.0 / k) / (2.0 * E)).exp()
}

/// Smallest `t` for which the tail inequality is asserted, `(2e)^(k/2)`.
pub fn tail_threshold(k: usize) -> f64 {
    (2.0 * E).powf(k as f64 / 2.0)
}

fn ensure_unit_norm(norm2: f64) -> Result<()> {
    if (norm2 - 1.0).abs() > NORM_TOL {
        return Err(Error::Precondition(format!(
            "normalized 2-norm is {norm2}, expected 1 within {NORM_TOL}"
        )));
    }
    Ok(())
}

/// Tail inequality for a precomputed spectrum of a `k`-local operator.
///
/// Compares the counting fraction with the bound exactly (no tolerance).
pub fn check_tail_spectrum(sp: &Spectrum, k: usize, t: f64) -> Result<CheckReport> {
    ensure_unit_norm(sp.schatten(2.0)?)?;
    let threshold = tail_threshold(k);
    if t < threshold {
        return Err(Error::Precondition(format!(
            "t = {t} is below (2e)^(k/2) = {threshold} for k = {k}"
        )));
    }
    Ok(CheckReport::le(sp.tail_fraction(t)?, tail_bound(k, t), 0.0))
}

/// Tail inequality with `k = locality(M)`.
pub fn check_tail_bound(m: &HermitianOperator, t: f64) -> Result<CheckReport> {
    let k = locality(&pauli_decompose(m)?);
    check_tail_spectrum(&spectrum(m, false)?, k, t)
}

/// Norm comparison for a `k`-local operator with spectrum `sp`.
///
/// For `q >= 2`: `|M|_q <= (q-1)^(k/2) |M|_2`.
/// For `1 <= q < 2`: `|M|_q >= (q-1)^(k/2) |M|_2`.
pub fn check_q_hyper_spectrum(sp: &Spectrum, k: usize, q: f64) -> Result<CheckReport> {
    if q.is_nan() || q < 1.0 || q.is_infinite() {
        return Err(Error::InvalidParameter(format!("q must be finite and >= 1, got {q}")));
    }
    let norm2 = sp.schatten(2.0)?;
    let norm_q = sp.schatten(q)?;
    let scaled = (q - 1.0).powf(k as f64 / 2.0) * norm2;
    Ok(if q >= 2.0 {
        CheckReport::le(norm_q, scaled, CHECK_TOL)
    } else {
        CheckReport::ge(norm_q, scaled, CHECK_TOL)
    })
}

pub fn check_q_hyper(m: &HermitianOperator, q: f64) -> Result<CheckReport> {
    let k = locality(&pauli_decompose(m)?);
    check_q_hyper_spectrum(&spectrum(m, false)?, k, q)
}

/// `2^(n - 2 log2(e) k)`.
pub fn rank_bound(n_qubits: usize, k: usize) -> f64 {
    (n_qubits as f64 - 2.0 * std::f64::consts::LOG2_E * k as f64).exp2()
}

/// Numerical rank of `M` against `2^(n - 2 log2(e) k)`.
pub fn check_rank_bound(m: &HermitianOperator) -> Result<CheckReport> {
    let e = pauli_decompose(m)?;
    if e.is_empty() {
        return Err(Error::ZeroOperator);
    }
    let sp = spectrum(m, false)?;
    if sp.operator_norm() == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let bound = rank_bound(m.n_qubits(), locality(&e));
    Ok(CheckReport::ge(sp.numerical_rank() as f64, bound, 0.0))
}

fn ensure_unit_state(psi: &CVector, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, operator dimension is {dim}",
            psi.len()
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > STATE_TOL {
        return Err(Error::NonUnitState { norm });
    }
    Ok(())
}

/// Eigenbasis populations `|<v_k|psi>|^2`.
fn populations(sp: &Spectrum, psi: &CVector) -> Result<Vec<f64>> {
    let v = sp
        .vectors()
        .ok_or_else(|| Error::Precondition("spectrum was computed without eigenvectors".into()))?;
    ensure_unit_state(psi, v.nrows())?;
    Ok((v.adjoint() * psi).iter().map(|z| z.norm_sqr()).collect())
}

fn amplitude_from(sp: &Spectrum, weights: &[f64], t: f64) -> f64 {
    sp.eigenvalues
        .iter()
        .zip(weights)
        .map(|(&l, &w)| Complex64::from_polar(w, -l * t))
        .sum::<Complex64>()
        .norm()
}

/// `sum_{|lambda_k| > mu} |<v_k|psi>|^2`.
fn tail_weight(sp: &Spectrum, weights: &[f64], mu: f64) -> f64 {
    sp.eigenvalues
        .iter()
        .zip(weights)
        .filter(|(l, _)| l.abs() > mu)
        .map(|(_, w)| w)
        .sum()
}

/// `|<psi| e^{-iHt} |psi>|` from the eigendecomposition of `H`.
pub fn survival_amplitude(h: &HermitianOperator, psi: &CVector, t: f64) -> Result<f64> {
    let sp = spectrum(h, true)?;
    let w = populations(&sp, psi)?;
    Ok(amplitude_from(&sp, &w, t))
}

/// `|<psi|e^{-iHt}|psi>| >= cos(mu t) - 2 sum_{|lambda_k|>mu} |<v_k|psi>|^2`.
pub fn check_survival_spectrum(sp: &Spectrum, psi: &CVector, t: f64, mu: f64) -> Result<CheckReport> {
    ensure_unit_norm(sp.schatten(2.0)?)?;
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
    }
    let w = populations(sp, psi)?;
    let amplitude = amplitude_from(sp, &w, t);
    let lower = (mu * t).cos() - 2.0 * tail_weight(sp, &w, mu);
    Ok(CheckReport::ge(amplitude, lower, CHECK_TOL))
}

pub fn check_survival_bound(h: &HermitianOperator, psi: &CVector, t: f64, mu: f64) -> Result<CheckReport> {
    check_survival_spectrum(&spectrum(h, true)?, psi, t, mu)
}

/// Haar-random state ensemble for a fixed `H`.
#[derive(Debug, Clone)]
pub struct SurvivalExperiment {
    /// `sum_{|lambda_k|>mu} |<v_k|psi>|^2` per sample.
    pub tail_weights: Vec<f64>,
    /// Survival inequality per sample.
    pub reports: Vec<CheckReport>,
}

impl SurvivalExperiment {
    pub fn all_hold(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }

    pub fn mean_tail_weight(&self) -> f64 {
        self.tail_weights.iter().sum::<f64>() / self.tail_weights.len().max(1) as f64
    }

    pub fn max_tail_weight(&self) -> f64 {
        self.tail_weights.iter().fold(0.0, |a, &b| a.max(b))
    }
}

pub fn survival_experiment<R: Rng + ?Sized>(
    rng: &mut R,
    h: &HermitianOperator,
    t: f64,
    mu: f64,
    samples: usize,
) -> Result<SurvivalExperiment> {
    let sp = spectrum(h, true)?;
    let mut tail_weights = Vec::with_capacity(samples);
    let mut reports = Vec::with_capacity(samples);
    for _ in 0..samples {
        let psi = rng::haar_state(rng, h.dim());
        let w = populations(&sp, &psi)?;
        tail_weights.push(tail_weight(&sp, &w, mu));
        reports.push(check_survival_spectrum(&sp, &psi, t, mu)?);
    }
    Ok(SurvivalExperiment { tail_weights, reports })
}
