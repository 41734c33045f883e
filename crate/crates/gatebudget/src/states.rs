//! Pure states and density matrices.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::space::HilbertSpace;
use crate::C64;

const NORM_TOL: f64 = 1e-10;

/// Normalized pure state on a [`HilbertSpace`].
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Array1<C64>,
    space: HilbertSpace,
}

impl StateVector {
    /// Wrap amplitudes that are already normalized (‖ψ‖ = 1 within 1e-10).
    pub fn new(amplitudes: Array1<C64>, space: HilbertSpace) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::InvalidDimension(format!(
                "state has {} amplitudes, space has dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm, tol: NORM_TOL });
        }
        Ok(Self { amplitudes, space })
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>, space: HilbertSpace) -> Result<Self> {
        Self::new(Array1::from_vec(amplitudes), space)
    }

    /// Normalize arbitrary (nonzero) amplitudes.
    pub fn normalized(amplitudes: Vec<C64>, space: HilbertSpace) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        let scaled = amplitudes.into_iter().map(|z| z / norm).collect();
        Self::from_amplitudes(scaled, space)
    }

    /// Computational basis state of the bare qubit register.
    pub fn qubit_basis(n_qubits: usize, index: usize) -> Result<Self> {
        let space = HilbertSpace::qubit_only(n_qubits)?;
        Self::basis(space, index)
    }

    /// Basis state of any space by flat index.
    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {}",
                space.dim()
            )));
        }
        let mut amplitudes = Array1::<C64>::zeros(space.dim());
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, space })
    }

    /// Fock product state |n_0, n_1, …⟩ of the motional factor of `space`,
    /// with the qubit factor (if any) in its first basis state.
    pub fn fock_basis(space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        if levels.len() != space.n_modes() {
            return Err(Error::InvalidArgument(format!(
                "{} Fock levels given for {} modes",
                levels.len(),
                space.n_modes()
            )));
        }
        let mut index = 0usize;
        for (m, (&n, &d)) in levels.iter().zip(space.fock_dims()).enumerate() {
            if n >= d {
                return Err(Error::InvalidArgument(format!(
                    "Fock level {n} exceeds truncation {d} of mode {m}"
                )));
            }
            index = index * d + n;
        }
        Self::basis(space.clone(), index)
    }

    /// Tensor a bare qubit state with a Fock product state, giving a state
    /// on the composite `space`.
    pub fn compose(qubit: &StateVector, space: &HilbertSpace, levels: &[usize]) -> Result<Self> {
        if qubit.space().n_modes() != 0 || qubit.space().qubit_dim() != space.qubit_dim() {
            return Err(Error::SpaceMismatch(
                "compose expects a bare qubit state matching the target qubit factor".into(),
            ));
        }
        let fock = Self::fock_basis(space, levels)?;
        let mdim = space.motional_dim();
        let mut amplitudes = Array1::<C64>::zeros(space.dim());
        for (q, &aq) in qubit.amplitudes.iter().enumerate() {
            for (m, &am) in fock.amplitudes.iter().take(mdim).enumerate() {
                amplitudes[q * mdim + m] = aq * am;
            }
        }
        Self::new(amplitudes, space.clone())
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("overlap".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Reduced density matrix of the qubit factor (motional modes traced
    /// out).
    pub fn reduced_qubit_density(&self) -> Array2<C64> {
        let qdim = self.space.qubit_dim();
        let mdim = self.space.motional_dim();
        let mut rho = Array2::<C64>::zeros((qdim, qdim));
        for i in 0..qdim {
            for j in 0..qdim {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..mdim {
                    acc += self.amplitudes[i * mdim + m] * self.amplitudes[j * mdim + m].conj();
                }
                rho[(i, j)] = acc;
            }
        }
        rho
    }
}

/// Validated density matrix: Hermitian, unit trace, positive within
/// tolerance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: Array2<C64>,
    space: HilbertSpace,
}

impl DensityMatrix {
    /// Construction tolerance on the smallest eigenvalue.
    pub const EIG_TOL: f64 = 1e-8;

    pub fn new(matrix: Array2<C64>, space: HilbertSpace) -> Result<Self> {
        Self::with_eig_tolerance(matrix, space, Self::EIG_TOL)
    }

    /// As [`DensityMatrix::new`] with a caller-chosen positivity tolerance
    /// (the Lindblad integrator accepts up to 1e-6 of accumulated error).
    pub fn with_eig_tolerance(
        matrix: Array2<C64>,
        space: HilbertSpace,
        eig_tol: f64,
    ) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != space.dim() {
            return Err(Error::InvalidDimension(format!(
                "density matrix {}x{} does not match space dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        let herm_dev = linalg::hermiticity_deviation(&matrix);
        if herm_dev > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "Hermiticity deviation {herm_dev:.3e} exceeds 1e-10"
            )));
        }
        let trace: C64 = matrix.diag().iter().sum();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace is {trace}, must be 1 within 1e-10"
            )));
        }
        let min_eig = linalg::hermitian_eigenvalues(&matrix)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -eig_tol {
            return Err(Error::PositivityViolation { min_eigenvalue: min_eig });
        }
        Ok(Self { matrix, space })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let n = psi.amplitudes().len();
        let mut matrix = Array2::<C64>::zeros((n, n));
        for (i, a) in psi.amplitudes().iter().enumerate() {
            for (j, b) in psi.amplitudes().iter().enumerate() {
                matrix[(i, j)] = a * b.conj();
            }
        }
        Self { matrix, space: psi.space().clone() }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().iter().sum()
    }

    /// Reduced density matrix of the qubit factor.
    pub fn reduced_qubit_density(&self) -> Array2<C64> {
        let qdim = self.space.qubit_dim();
        let mdim = self.space.motional_dim();
        let mut rho = Array2::<C64>::zeros((qdim, qdim));
        for i in 0..qdim {
            for j in 0..qdim {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..mdim {
                    acc += self.matrix[(i * mdim + m, j * mdim + m)];
                }
                rho[(i, j)] = acc;
            }
        }
        rho
    }
}
