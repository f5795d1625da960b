use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count representable by a [`PauliString`].
pub const MAX_STRING_QUBITS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis in symplectic form.
///
/// Qubit 0 is the leftmost symbol and the most significant bit of a matrix
/// index, so `sigma_s = i^{#Y} X^x Z^z` with `x`, `z` read as index masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits > MAX_STRING_QUBITS {
            return Err(Error::SizeLimit(format!("{n_qubits} qubits")));
        }
        let full = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        if x & !full != 0 || z & !full != 0 {
            return Err(Error::InvalidParameter("mask has bits beyond the qubit count".into()));
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Result<Self> {
        let n = paulis.len();
        if n > MAX_STRING_QUBITS {
            return Err(Error::SizeLimit(format!("{n} qubits")));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, p) in paulis.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            let (px, pz) = p.bits();
            if px {
                x |= bit;
            }
            if pz {
                z |= bit;
            }
        }
        Ok(Self { n_qubits: n, x, z })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> usize {
        (self.x & self.z).count_ones() as usize
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let bit = 1u64 << (self.n_qubits - 1 - qubit);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn paulis(&self) -> Vec<Pauli> {
        (0..self.n_qubits).map(|q| self.get(q)).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let paulis = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("invalid Pauli symbol {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_paulis(&paulis)
    }
}
