//! Spin Hamiltonians as weighted sums of Pauli strings, the 1D
//! transverse-field Ising model, and the dense diagonalization oracle.
//!
//! A Hamiltonian over `M` qubits is `H = Σ_j c_j · P_j` where each `P_j`
//! is a tensor product of single-qubit Paulis (one letter per qubit) and
//! `c_j` is real, so the induced matrix is Hermitian by construction.
//!
//! ```
//! use rodeo_dos::hamiltonian::{build_tfim, exact_spectrum, TfimParams};
//!
//! let h = build_tfim(&TfimParams { spins: 5, exchange: 1.0, field: 0.0, periodic: true }).unwrap();
//! let spectrum = exact_spectrum(&h, false).unwrap();
//! let levels = spectrum.level_degeneracies(1e-9);
//! assert_eq!(levels, vec![(-5.0, 2), (-1.0, 20), (3.0, 10)]);
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Basis-index convention: qubit (spin site) `j` of an `M`-qubit register
/// occupies bit `j` of the basis index, so `|5⟩ = |0…0101⟩` has sites 0
/// and 2 pointing down (bit set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("pauli string coefficient must be finite, got {0}")]
    NonFiniteCoefficient(f64),
    #[error("pauli letters must be non-empty")]
    EmptyLetters,
    #[error("term has {got} letters, expected {expected}")]
    LetterCountMismatch { got: usize, expected: usize },
    #[error("hamiltonian needs at least one term")]
    NoTerms,
    #[error("hamiltonian needs at least one qubit")]
    ZeroQubits,
    #[error("invalid pauli letter '{0}'")]
    BadLetter(char),
    #[error("dense diagonalization is limited to {limit} qubits, got {got}")]
    TooManyQubits { got: usize, limit: usize },
}

/// One weighted Pauli string: `coefficient · P_0 ⊗ P_1 ⊗ … ⊗ P_{M-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    coefficient: f64,
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(coefficient: f64, letters: Vec<Pauli>) -> Result<Self, HamiltonianError> {
        if !coefficient.is_finite() {
            return Err(HamiltonianError::NonFiniteCoefficient(coefficient));
        }
        if letters.is_empty() {
            return Err(HamiltonianError::EmptyLetters);
        }
        Ok(PauliString {
            coefficient,
            letters,
        })
    }

    /// Parse from a letter string like `"ZZIII"`.
    pub fn parse(coefficient: f64, letters: &str) -> Result<Self, HamiltonianError> {
        let letters = letters
            .chars()
            .map(|c| Pauli::from_char(c).ok_or(HamiltonianError::BadLetter(c)))
            .collect::<Result<Vec<_>, _>>()?;
        PauliString::new(coefficient, letters)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter_string(&self) -> String {
        self.letters.iter().map(|p| p.to_char()).collect()
    }

    /// True when every letter is the identity; such a term is a constant
    /// energy shift rather than a genuine interaction.
    pub fn is_constant_shift(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// True when the string contains no X or Y letter, i.e. it is diagonal
    /// in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I || p == Pauli::Z)
    }

    /// Bit masks describing the action on a basis state: `flip` marks
    /// X/Y positions, `phase_mask` marks Z/Y positions, `y_count` counts
    /// Y letters. `P|b⟩ = i^y_count · (−1)^{popcount(b & phase_mask)} |b ⊕ flip⟩`.
    pub(crate) fn masks(&self) -> (u64, u64, u32) {
        let mut flip = 0u64;
        let mut phase_mask = 0u64;
        let mut y_count = 0u32;
        for (j, &p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => flip |= 1 << j,
                Pauli::Y => {
                    flip |= 1 << j;
                    phase_mask |= 1 << j;
                    y_count += 1;
                }
                Pauli::Z => phase_mask |= 1 << j,
            }
        }
        (flip, phase_mask, y_count)
    }

    /// `P|b⟩ = phase · |b ⊕ flip⟩`; returns `(b ⊕ flip, phase)`.
    pub(crate) fn apply_basis(&self, b: u64) -> (u64, Complex64) {
        let (flip, phase_mask, y_count) = self.masks();
        let sign = if (b & phase_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let i_pow = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (b ^ flip, i_pow * sign)
    }
}

/// Weighted sum of Pauli strings over a fixed qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    qubits: usize,
    terms: Vec<PauliString>,
}

impl Hamiltonian {
    pub fn new(qubits: usize, terms: Vec<PauliString>) -> Result<Self, HamiltonianError> {
        if qubits == 0 {
            return Err(HamiltonianError::ZeroQubits);
        }
        if terms.is_empty() {
            return Err(HamiltonianError::NoTerms);
        }
        for t in &terms {
            if t.letters.len() != qubits {
                return Err(HamiltonianError::LetterCountMismatch {
                    got: t.letters.len(),
                    expected: qubits,
                });
            }
        }
        Ok(Hamiltonian { qubits, terms })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn dimension(&self) -> usize {
        1 << self.qubits
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.is_diagonal())
    }

    /// Diagonal matrix elements `⟨b|H|b⟩` for every basis state, valid
    /// only when `is_diagonal()`.
    pub fn diagonal_energies(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        let dim = self.dimension();
        let mut energies = vec![0.0; dim];
        for term in &self.terms {
            let (_, phase_mask, _) = term.masks();
            for (b, e) in energies.iter_mut().enumerate() {
                let sign = if (b as u64 & phase_mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                *e += term.coefficient * sign;
            }
        }
        Some(energies)
    }

    /// Dense matrix in the computational basis.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let dim = self.dimension();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            for col in 0..dim as u64 {
                let (row, phase) = term.apply_basis(col);
                m[(row as usize, col as usize)] += phase * term.coefficient;
            }
        }
        m
    }
}

mod serde_impl {
    use super::*;
    use serde::de::Error as _;

    #[derive(Serialize, Deserialize)]
    struct TermRepr {
        coeff: f64,
        paulis: String,
    }

    #[derive(Serialize, Deserialize)]
    struct HamiltonianRepr {
        qubits: usize,
        terms: Vec<TermRepr>,
    }

    impl Serialize for Hamiltonian {
        fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            HamiltonianRepr {
                qubits: self.qubits,
                terms: self
                    .terms
                    .iter()
                    .map(|t| TermRepr {
                        coeff: t.coefficient,
                        paulis: t.letter_string(),
                    })
                    .collect(),
            }
            .serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for Hamiltonian {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let repr = HamiltonianRepr::deserialize(d)?;
            let terms = repr
                .terms
                .iter()
                .map(|t| PauliString::parse(t.coeff, &t.paulis))
                .collect::<Result<Vec<_>, _>>()
                .map_err(D::Error::custom)?;
            Hamiltonian::new(repr.qubits, terms).map_err(D::Error::custom)
        }
    }
}

/// Parameters of the 1D transverse-field Ising chain
/// `H = −J Σ σ^z_i σ^z_{i+1} − B Σ σ^x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfimParams {
    pub spins: usize,
    pub exchange: f64,
    pub field: f64,
    pub periodic: bool,
}

/// Build the TFIM Hamiltonian. Bond enumeration under periodic boundaries
/// is the literal sum `i → (i+1) mod M` for `i = 0..M−1`; for `M = 2` this
/// yields the (0,1) bond twice and both terms are kept.
pub fn build_tfim(params: &TfimParams) -> Result<Hamiltonian, HamiltonianError> {
    if params.spins == 0 {
        return Err(HamiltonianError::ZeroQubits);
    }
    if params.field < 0.0 {
        return Err(HamiltonianError::NonFiniteCoefficient(params.field));
    }
    let m = params.spins;
    let mut terms = Vec::new();
    let bonds = if params.periodic {
        m
    } else {
        m.saturating_sub(1)
    };
    for i in 0..bonds {
        let mut letters = vec![Pauli::I; m];
        letters[i] = Pauli::Z;
        letters[(i + 1) % m] = Pauli::Z;
        terms.push(PauliString::new(-params.exchange, letters)?);
    }
    if params.field > 0.0 {
        for i in 0..m {
            let mut letters = vec![Pauli::I; m];
            letters[i] = Pauli::X;
            terms.push(PauliString::new(-params.field, letters)?);
        }
    }
    Hamiltonian::new(m, terms)
}

/// Full spectral data of a Hamiltonian: eigenvalues sorted ascending and,
/// optionally, eigenvectors and squared overlaps with the computational
/// basis, `overlap(x, n) = |⟨n|x⟩|² = c²_{x,n}`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<Complex64>>,
}

/// Largest qubit count accepted for dense diagonalization.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Diagonalize a Hamiltonian (dense, Hermitian). The oracle only runs at
/// desk scale; `M > 12` is rejected.
pub fn exact_spectrum(h: &Hamiltonian, with_overlaps: bool) -> Result<Spectrum, HamiltonianError> {
    if h.qubits() > MAX_DENSE_QUBITS {
        return Err(HamiltonianError::TooManyQubits {
            got: h.qubits(),
            limit: MAX_DENSE_QUBITS,
        });
    }
    let eig = nalgebra::SymmetricEigen::new(h.dense_matrix());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = if with_overlaps {
        let dim = eigenvalues.len();
        let mut v = DMatrix::<Complex64>::zeros(dim, dim);
        for (new_col, &old_col) in order.iter().enumerate() {
            v.set_column(new_col, &eig.eigenvectors.column(old_col));
        }
        Some(v)
    } else {
        None
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

impl Spectrum {
    /// Eigenvalues sorted ascending, `2^M` entries with repetitions.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector matrix (columns are eigenstates in the computational
    /// basis), present only when the spectrum was built with overlaps.
    pub fn eigenvectors(&self) -> Option<&DMatrix<Complex64>> {
        self.eigenvectors.as_ref()
    }

    pub fn has_overlaps(&self) -> bool {
        self.eigenvectors.is_some()
    }

    /// Squared overlap `c²_{x,n} = |⟨n|x⟩|²` of eigenstate `x` with basis
    /// state `n`.
    pub fn overlap_sq(&self, x: usize, n: usize) -> Option<f64> {
        self.eigenvectors.as_ref().map(|v| v[(n, x)].norm_sqr())
    }

    /// Merge adjacent eigenvalues within `merge_tol` into degenerate
    /// levels; each level's energy is the mean of its members and the
    /// multiplicities sum to `2^M`.
    pub fn level_degeneracies(&self, merge_tol: f64) -> Vec<(f64, usize)> {
        let mut levels: Vec<(f64, usize)> = Vec::new();
        let mut cluster: Vec<f64> = Vec::new();
        let flush = |cluster: &mut Vec<f64>, levels: &mut Vec<(f64, usize)>| {
            if !cluster.is_empty() {
                let mean = cluster.iter().sum::<f64>() / cluster.len() as f64;
                levels.push((mean, cluster.len()));
                cluster.clear();
            }
        };
        for &e in &self.eigenvalues {
            if let Some(&last) = cluster.last() {
                if (e - last).abs() <= merge_tol {
                    cluster.push(e);
                } else {
                    flush(&mut cluster, &mut levels);
                    cluster.push(e);
                }
            } else {
                cluster.push(e);
            }
        }
        flush(&mut cluster, &mut levels);
        levels
    }

    /// Write the merged levels as CSV with columns `energy,multiplicity`.
    pub fn write_levels_csv<W: std::io::Write>(
        &self,
        merge_tol: f64,
        mut w: W,
    ) -> std::io::Result<()> {
        writeln!(w, "energy,multiplicity")?;
        for (e, g) in self.level_degeneracies(merge_tol) {
            writeln!(w, "{},{}", e, g)?;
        }
        Ok(())
    }
}

/// Default tolerance for merging near-degenerate eigenvalues, in units of
/// the exchange coupling. Kept small so that field-split levels at
/// `B = J/10` are never merged accidentally.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
