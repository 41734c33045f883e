//! Composite qubit ⊗ truncated-Fock Hilbert space descriptors.

use crate::error::{Error, Result};

/// Descriptor of a composite Hilbert space: a qubit register of one or two
/// qubits tensored with zero or more truncated motional (Fock) modes.
///
/// Index convention: the qubit factor is slowest, then modes in order, so a
/// basis index decomposes as `((q * f0 + m0) * f1 + m1) ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    n_qubits: usize,
    fock_dims: Vec<usize>,
}

/// One tensor factor of a [`HilbertSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Qubits,
    /// Motional mode by index (0-based).
    Mode(usize),
}

impl HilbertSpace {
    /// Composite space with `n_qubits` qubits (1 or 2) and the given Fock
    /// truncation per mode (each ≥ 2).
    pub fn new(n_qubits: usize, fock_dims: &[usize]) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::InvalidArgument(format!(
                "n_qubits must be 1 or 2, got {n_qubits}"
            )));
        }
        Self::build(n_qubits, fock_dims)
    }

    /// Qubit register only, no motional factor.
    pub fn qubit_only(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, &[])
    }

    /// Single motional mode with no qubit factor. Used for bare mode
    /// operators that are later embedded into a composite space.
    pub fn mode_only(fock_dim: usize) -> Result<Self> {
        Self::build(0, &[fock_dim])
    }

    fn build(n_qubits: usize, fock_dims: &[usize]) -> Result<Self> {
        for &d in fock_dims {
            if d < 2 {
                return Err(Error::InvalidDimension(format!(
                    "every fock_dim must be >= 2, got {d}"
                )));
            }
        }
        Ok(Self { n_qubits, fock_dims: fock_dims.to_vec() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn fock_dims(&self) -> &[usize] {
        &self.fock_dims
    }

    pub fn n_modes(&self) -> usize {
        self.fock_dims.len()
    }

    /// Dimension of the qubit factor (`2^n_qubits`).
    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Product of the Fock truncations (1 when there is no motional factor).
    pub fn motional_dim(&self) -> usize {
        self.fock_dims.iter().product()
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.motional_dim()
    }

    /// Dimension of one tensor factor.
    pub fn subsystem_dim(&self, slot: Subsystem) -> Result<usize> {
        match slot {
            Subsystem::Qubits => Ok(self.qubit_dim()),
            Subsystem::Mode(m) => self.fock_dims.get(m).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "space has {} modes, requested mode {m}",
                    self.n_modes()
                ))
            }),
        }
    }

    /// Space with every Fock truncation grown by the given factor (used by
    /// the truncation audit). Qubit factor is unchanged.
    pub fn with_grown_focks(&self, factor: f64) -> Self {
        let fock_dims = self
            .fock_dims
            .iter()
            .map(|&d| ((d as f64 * factor).ceil() as usize).max(d + 1))
            .collect();
        Self { n_qubits: self.n_qubits, fock_dims }
    }
}
