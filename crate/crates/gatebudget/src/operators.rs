//! Operator construction on composite qubit ⊗ Fock spaces.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{self, kron};
use crate::space::{HilbertSpace, Subsystem};
use crate::states::StateVector;
use crate::C64;

/// Relative tolerance for claimed-Hermitian verification.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Dense operator tied to the space it acts on.
#[derive(Debug, Clone)]
pub struct Operator {
    matrix: Array2<C64>,
    space: HilbertSpace,
}

impl Operator {
    /// Wrap a matrix without claiming Hermiticity.
    pub fn new(matrix: Array2<C64>, space: HilbertSpace) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != space.dim() {
            return Err(Error::InvalidDimension(format!(
                "operator dimension {} does not match space dimension {}",
                matrix.nrows(),
                space.dim()
            )));
        }
        Ok(Self { matrix, space })
    }

    /// Wrap a matrix that is claimed Hermitian; the claim is verified.
    pub fn hermitian(matrix: Array2<C64>, space: HilbertSpace) -> Result<Self> {
        let op = Self::new(matrix, space)?;
        let scale = linalg::max_abs(&op.matrix);
        let deviation = linalg::hermiticity_deviation(&op.matrix);
        if scale > 0.0 && deviation > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { deviation, scale });
        }
        Ok(op)
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let matrix = Array2::<C64>::eye(space.dim());
        Self { matrix, space }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: linalg::dagger(&self.matrix), space: self.space.clone() }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        linalg::is_hermitian(&self.matrix, rel_tol)
    }

    /// Operator product `self · other` (spaces must match).
    pub fn dot(&self, other: &Operator) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("operator product".into()));
        }
        Ok(Self { matrix: self.matrix.dot(&other.matrix), space: self.space.clone() })
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        if psi.space() != &self.space {
            return Err(Error::SpaceMismatch("expectation value".into()));
        }
        let a_psi = self.matrix.dot(psi.amplitudes());
        Ok(psi.amplitudes().iter().zip(a_psi.iter()).map(|(c, d)| c.conj() * d).sum())
    }
}

/// Truncated annihilation and creation operators on a single mode:
/// `lowering[n-1, n] = √n`, `raising = lowering†`.
pub fn ladder_ops(dim: usize) -> Result<(Operator, Operator)> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "ladder operators need dim >= 2, got {dim}"
        )));
    }
    let space = HilbertSpace::mode_only(dim)?;
    let mut lowering = Array2::<C64>::zeros((dim, dim));
    for n in 1..dim {
        lowering[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let raising = linalg::dagger(&lowering);
    Ok((Operator::new(lowering, space.clone())?, Operator::new(raising, space)?))
}

/// Number operator `a†a` on a single mode.
pub fn number_op(dim: usize) -> Result<Operator> {
    let (lowering, raising) = ladder_ops(dim)?;
    raising.dot(&lowering)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

impl SpinAxis {
    pub fn label(self) -> &'static str {
        match self {
            SpinAxis::X => "x",
            SpinAxis::Y => "y",
            SpinAxis::Z => "z",
        }
    }
}

/// 2×2 Pauli matrix in the basis (|↓⟩, |↑⟩), with σ_z|↓⟩ = −|↓⟩.
pub fn pauli_matrix(axis: SpinAxis) -> Array2<C64> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut m = Array2::<C64>::zeros((2, 2));
    match axis {
        SpinAxis::X => {
            m[(0, 1)] = one;
            m[(1, 0)] = one;
        }
        SpinAxis::Y => {
            m[(0, 1)] = i;
            m[(1, 0)] = -i;
        }
        SpinAxis::Z => {
            m[(0, 0)] = -one;
            m[(1, 1)] = one;
        }
    }
    let _ = z;
    m
}

/// Spin operator on the bare qubit register: `σ_α` for one qubit, the
/// collective `S_α = σ_α⊗I + I⊗σ_α` for two.
pub fn spin_ops(n_qubits: usize, axis: SpinAxis) -> Result<Operator> {
    let space = HilbertSpace::qubit_only(n_qubits)?;
    let sigma = pauli_matrix(axis);
    let matrix = match n_qubits {
        1 => sigma,
        2 => {
            let eye = Array2::<C64>::eye(2);
            kron(&sigma, &eye) + kron(&eye, &sigma)
        }
        _ => unreachable!("qubit count validated by HilbertSpace"),
    };
    Operator::hermitian(matrix, space)
}

/// Embed a single-factor operator into a composite space, acting as the
/// identity on every other factor. Embeddings of disjoint factors commute.
pub fn embed(op: &Operator, space: &HilbertSpace, slot: Subsystem) -> Result<Operator> {
    let slot_dim = space.subsystem_dim(slot)?;
    if op.dim() != slot_dim {
        return Err(Error::InvalidArgument(format!(
            "operator dimension {} does not fit subsystem of dimension {slot_dim}",
            op.dim()
        )));
    }
    let mut matrix = match slot {
        Subsystem::Qubits => op.matrix().clone(),
        Subsystem::Mode(_) => Array2::<C64>::eye(space.qubit_dim()),
    };
    for (m, &fdim) in space.fock_dims().iter().enumerate() {
        let factor = if slot == Subsystem::Mode(m) {
            op.matrix().clone()
        } else {
            Array2::<C64>::eye(fdim)
        };
        matrix = kron(&matrix, &factor);
    }
    Operator::new(matrix, space.clone())
}

/// Variance `⟨A²⟩ − ⟨A⟩²` of a Hermitian operator in a normalized state.
/// Tiny negative results from rounding (≥ −1e-12) are clamped to zero.
pub fn variance(op: &Operator, psi: &StateVector) -> Result<f64> {
    if !op.is_hermitian(HERMITICITY_TOL) {
        let scale = linalg::max_abs(op.matrix());
        return Err(Error::NotHermitian {
            deviation: linalg::hermiticity_deviation(op.matrix()),
            scale,
        });
    }
    let a_psi = op.matrix().dot(psi.amplitudes());
    let mean: C64 =
        psi.amplitudes().iter().zip(a_psi.iter()).map(|(c, d)| c.conj() * d).sum();
    let mean_sq: f64 = a_psi.iter().map(|z| z.norm_sqr()).sum();
    let var = mean_sq - mean.re * mean.re;
    if var < -1e-12 {
        return Err(Error::InvalidArgument(format!(
            "variance computed as {var}, more negative than rounding allows"
        )));
    }
    Ok(var.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::StateVector;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ladder_dim2_single_entry() {
        let (low, _) = ladder_ops(2).unwrap();
        assert_eq!(low.matrix()[(0, 1)], C64::new(1.0, 0.0));
        let nonzero = low.matrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn ladder_dim4_number_operator() {
        let (low, raise) = ladder_ops(4).unwrap();
        let n = raise.dot(&low).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(n.matrix()[(k, k)].re, k as f64, epsilon = 1e-14);
        }
        assert!(linalg::max_abs(
            &(n.matrix() - Array2::from_diag(&ndarray::Array1::from_iter(
                (0..4).map(|k| C64::new(k as f64, 0.0))
            )))
        ) < 1e-14);
    }

    #[test]
    fn ladder_dim8_truncated_commutator() {
        // [a, a†] = I except for the truncation artifact −7 at (7,7).
        let (low, raise) = ladder_ops(8).unwrap();
        let comm = low.dot(&raise).unwrap().matrix() - raise.dot(&low).unwrap().matrix();
        for k in 0..7 {
            assert_abs_diff_eq!(comm[(k, k)].re, 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(comm[(7, 7)].re, -7.0, epsilon = 1e-14);
    }

    #[test]
    fn ladder_rejects_dim_below_two() {
        assert!(ladder_ops(1).is_err());
        assert!(ladder_ops(0).is_err());
    }

    #[test]
    fn pauli_algebra() {
        // [σx, σy] = 2i σz in this crate's (|↓⟩, |↑⟩) ordering.
        let sx = pauli_matrix(SpinAxis::X);
        let sy = pauli_matrix(SpinAxis::Y);
        let sz = pauli_matrix(SpinAxis::Z);
        let comm = linalg::commutator(&sx, &sy);
        let expect = sz.mapv(|z| C64::new(0.0, 2.0) * z);
        assert!(linalg::max_abs(&(comm - expect)) < 1e-14);
        for m in [&sx, &sy, &sz] {
            assert!(linalg::max_abs(&(m.dot(m) - Array2::<C64>::eye(2))) < 1e-14);
        }
    }

    #[test]
    fn collective_spin_on_down_down() {
        let sx = spin_ops(2, SpinAxis::X).unwrap();
        let down_down = StateVector::qubit_basis(2, 0).unwrap();
        let mean = sx.expectation(&down_down).unwrap();
        assert_abs_diff_eq!(mean.re, 0.0, epsilon = 1e-14);
        let sx2 = sx.dot(&sx).unwrap();
        assert_abs_diff_eq!(sx2.expectation(&down_down).unwrap().re, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn collective_spin_cube_identity() {
        // S_α³ = 4 S_α for every axis.
        for axis in [SpinAxis::X, SpinAxis::Y, SpinAxis::Z] {
            let s = spin_ops(2, axis).unwrap();
            let s3 = s.dot(&s).unwrap().dot(&s).unwrap();
            let four_s = s.matrix().mapv(|z| z * 4.0);
            assert!(linalg::max_abs(&(s3.matrix() - &four_s)) < 1e-13);
        }
    }

    #[test]
    fn embed_identity_is_identity() {
        let space = HilbertSpace::new(1, &[3, 4]).unwrap();
        for slot in [Subsystem::Qubits, Subsystem::Mode(0), Subsystem::Mode(1)] {
            let sub = Operator::identity(match slot {
                Subsystem::Qubits => HilbertSpace::qubit_only(1).unwrap(),
                Subsystem::Mode(0) => HilbertSpace::mode_only(3).unwrap(),
                Subsystem::Mode(_) => HilbertSpace::mode_only(4).unwrap(),
            });
            let full = embed(&sub, &space, slot).unwrap();
            assert!(linalg::max_abs(&(full.matrix() - &Array2::<C64>::eye(space.dim()))) < 1e-15);
        }
    }

    #[test]
    fn embed_disjoint_supports_commute() {
        let space = HilbertSpace::new(1, &[5]).unwrap();
        let sz = spin_ops(1, SpinAxis::Z).unwrap();
        let (low, _) = ladder_ops(5).unwrap();
        let a = embed(&sz, &space, Subsystem::Qubits).unwrap();
        let b = embed(&low, &space, Subsystem::Mode(0)).unwrap();
        let ab = a.dot(&b).unwrap();
        let ba = b.dot(&a).unwrap();
        assert!(linalg::max_abs(&(ab.matrix() - ba.matrix())) < 1e-14);
    }

    #[test]
    fn embed_rejects_dimension_mismatch() {
        let space = HilbertSpace::new(1, &[10]).unwrap();
        let sz = spin_ops(1, SpinAxis::Z).unwrap();
        assert!(embed(&sz, &space, Subsystem::Mode(0)).is_err());
    }

    #[test]
    fn variance_of_eigenstate_is_zero() {
        let sz = spin_ops(1, SpinAxis::Z).unwrap();
        let down = StateVector::qubit_basis(1, 0).unwrap();
        assert_eq!(variance(&sz, &down).unwrap(), 0.0);
    }

    #[test]
    fn variance_of_tilted_state() {
        // √(3/4)|↓⟩ + √(1/4)|↑⟩: ⟨σx⟩ = √3/2, variance 1/4.
        let psi = StateVector::from_amplitudes(
            vec![C64::new((0.75f64).sqrt(), 0.0), C64::new(0.5, 0.0)],
            HilbertSpace::qubit_only(1).unwrap(),
        )
        .unwrap();
        let sx = spin_ops(1, SpinAxis::X).unwrap();
        assert_abs_diff_eq!(sx.expectation(&psi).unwrap().re, 3f64.sqrt() / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(variance(&sx, &psi).unwrap(), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn variance_of_sx_squared_on_down_down() {
        // ⟨S_x⁴⟩ = 8, ⟨S_x²⟩ = 2 on |↓↓⟩, so Var(S_x²) = 4.
        let sx = spin_ops(2, SpinAxis::X).unwrap();
        let sx2 = sx.dot(&sx).unwrap();
        let down_down = StateVector::qubit_basis(2, 0).unwrap();
        assert_abs_diff_eq!(variance(&sx2, &down_down).unwrap(), 4.0, epsilon = 1e-13);
    }

    #[test]
    fn variance_rejects_non_hermitian() {
        let (low, _) = ladder_ops(3).unwrap();
        let psi = StateVector::fock_basis(&HilbertSpace::mode_only(3).unwrap(), &[0]).unwrap();
        assert!(variance(&low, &psi).is_err());
    }
}
