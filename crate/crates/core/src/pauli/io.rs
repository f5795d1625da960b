//! JSON formats for operators and state vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::{pauli_synthesize, HermitianOperator, PauliExpansion, MAX_DENSE_QUBITS};
use super::spectral::{diagonal_spectrum, spectrum, Spectrum};
use super::string::PauliString;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, DenseVector};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermEntry {
    pub s: String,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorFile {
    Dense {
        n_qubits: usize,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
    Terms {
        n_qubits: usize,
        terms: Vec<TermEntry>,
    },
}

/// State vector file `{"re": [...], "im": [...]}`.
pub type StateFile = DenseVector;

/// An operator as read from disk, kept in whichever form it was given.
#[derive(Debug, Clone)]
pub enum OperatorSource {
    Dense(HermitianOperator),
    Terms(PauliExpansion),
}

impl OperatorSource {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Dense(m) => m.n_qubits(),
            Self::Terms(e) => e.n_qubits(),
        }
    }

    /// Dense form; fails beyond the dense qubit limit.
    pub fn to_dense(&self) -> Result<HermitianOperator> {
        match self {
            Self::Dense(m) => Ok(m.clone()),
            Self::Terms(e) => pauli_synthesize(e),
        }
    }

    pub fn expansion(&self) -> Result<PauliExpansion> {
        match self {
            Self::Dense(m) => super::pauli_decompose(m),
            Self::Terms(e) => Ok(e.clone()),
        }
    }

    /// Spectrum via the diagonal route for `{I, Z}` expansions, dense otherwise.
    pub fn spectrum(&self) -> Result<Spectrum> {
        match self {
            Self::Terms(e) if e.iter().all(|(s, _)| s.x_mask() == 0) => diagonal_spectrum(e),
            Self::Terms(e) if e.n_qubits() > MAX_DENSE_QUBITS => Err(Error::SizeLimit(format!(
                "non-diagonal operator on {} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}",
                e.n_qubits()
            ))),
            _ => spectrum(&self.to_dense()?, false),
        }
    }
}

fn parse_matrix(dim: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let shape_ok = |rows: &[Vec<f64>]| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    if !shape_ok(re) || !shape_ok(im) {
        return Err(Error::DimensionMismatch(format!("re and im must both be {dim}x{dim}")));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| Complex64::new(re[r][c], im[r][c])))
}

impl TryFrom<OperatorFile> for OperatorSource {
    type Error = Error;

    fn try_from(file: OperatorFile) -> Result<Self> {
        match file {
            OperatorFile::Dense { n_qubits, re, im } => {
                if n_qubits > MAX_DENSE_QUBITS {
                    return Err(Error::SizeLimit(format!(
                        "dense operators are limited to {MAX_DENSE_QUBITS} qubits"
                    )));
                }
                let m = parse_matrix(1 << n_qubits, &re, &im)?;
                Ok(Self::Dense(HermitianOperator::new(m)?))
            }
            OperatorFile::Terms { n_qubits, terms } => {
                let mut e = PauliExpansion::new(n_qubits);
                for t in terms {
                    let s: PauliString = t.s.parse()?;
                    e.add(s, t.c)?;
                }
                Ok(Self::Terms(e))
            }
        }
    }
}

impl From<&PauliExpansion> for OperatorFile {
    fn from(e: &PauliExpansion) -> Self {
        OperatorFile::Terms {
            n_qubits: e.n_qubits(),
            terms: e.iter().map(|(s, &c)| TermEntry { s: s.to_string(), c }).collect(),
        }
    }
}

impl From<&HermitianOperator> for OperatorFile {
    fn from(m: &HermitianOperator) -> Self {
        let dim = m.dim();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..dim)
                .map(|r| (0..dim).map(|c| f(&m.matrix()[(r, c)])).collect())
                .collect()
        };
        OperatorFile::Dense {
            n_qubits: m.n_qubits(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

pub fn parse_operator(json: &str) -> Result<OperatorSource> {
    let file: OperatorFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.try_into()
}

pub fn parse_state(json: &str) -> Result<CVector> {
    let file: StateFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_vector()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_and_dense_formats() {
        let src = parse_operator(r#"{"n_qubits": 2, "terms": [{"s": "ZZ", "c": 0.5}, {"s": "XI", "c": -1}]}"#)
            .unwrap();
        let dense = src.to_dense().unwrap();
        let file = OperatorFile::from(&dense);
        let text = serde_json::to_string(&file).unwrap();
        let again = parse_operator(&text).unwrap();
        assert!(matches!(again, OperatorSource::Dense(_)));
        let e = again.expansion().unwrap();
        assert!((e.get(&"ZZ".parse().unwrap()) - 0.5).abs() < 1e-15);
        assert!((e.get(&"XI".parse().unwrap()) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(parse_operator("{"), Err(Error::Parse(_))));
        assert!(parse_operator(r#"{"n_qubits": 2, "terms": [{"s": "ZQ", "c": 1}]}"#).is_err());
        assert!(parse_operator(r#"{"n_qubits": 1, "re": [[1,0]], "im": [[0,0]]}"#).is_err());
        assert!(parse_operator(r#"{"n_qubits": 1, "re": [[0,1],[0,0]], "im": [[0,0],[0,0]]}"#).is_err());
    }

    #[test]
    fn large_diagonal_operator_has_a_spectrum() {
        let e = super::super::collective_z_squared(16).unwrap();
        let sp = OperatorSource::Terms(e).spectrum().unwrap();
        assert_eq!(sp.eigenvalues().len(), 1 << 16);
        assert_eq!(*sp.eigenvalues().last().unwrap(), 256.0);
    }

    #[test]
    fn state_format() {
        let psi = parse_state(r#"{"re": [0.6, 0], "im": [0, 0.8]}"#).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert!(parse_state(r#"{"re": [1], "im": []}"#).is_err());
    }
}
