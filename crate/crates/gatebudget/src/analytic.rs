//! Closed-form infidelity expressions for every error channel, evaluated
//! either at a fixed phonon number (pass `n^k` as the moments) or for a
//! mixed motional state via its number moments.
//!
//! All expressions are leading-order in the error strength; results above
//! [`PERTURBATIVE_LIMIT`] are outside their regime of validity and get
//! flagged by the harness.

use std::f64::consts::PI;

use crate::ensemble::NumberMoments;
use crate::error::{Error, Result};
use crate::operators::{spin_ops, variance, SpinAxis};
use crate::states::StateVector;

/// Results larger than this are outside the perturbative regime.
pub const PERTURBATIVE_LIMIT: f64 = 0.05;

/// Variances of the spin operators in the initial qubit state. The fields
/// are the λ² values multiplying every infidelity expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinVariances {
    /// Var(σ_α), one-qubit states (0 otherwise).
    pub lam_sigma: f64,
    /// Var(S_α), two-qubit states (0 otherwise).
    pub lam_s: f64,
    /// Var(S_α²), two-qubit states (0 otherwise).
    pub lam_s2: f64,
}

impl SpinVariances {
    /// Compute the variances from a bare qubit state.
    pub fn from_qubit_state(state: &StateVector, axis: SpinAxis) -> Result<Self> {
        if state.space().n_modes() != 0 {
            return Err(Error::InvalidArgument(
                "spin variances are defined on the bare qubit state".into(),
            ));
        }
        match state.space().n_qubits() {
            1 => {
                let sigma = spin_ops(1, axis)?;
                Ok(Self { lam_sigma: variance(&sigma, state)?, lam_s: 0.0, lam_s2: 0.0 })
            }
            2 => {
                let s = spin_ops(2, axis)?;
                let s2 = s.dot(&s)?;
                Ok(Self {
                    lam_sigma: 0.0,
                    lam_s: variance(&s, state)?,
                    lam_s2: variance(&s2, state)?,
                })
            }
            _ => unreachable!("qubit count validated by HilbertSpace"),
        }
    }

    /// Moments of a definite Fock level, for the fixed-n specializations.
    pub fn all_zero(&self) -> bool {
        self.lam_sigma == 0.0 && self.lam_s == 0.0 && self.lam_s2 == 0.0
    }
}

/// Delta-distribution moments `(n, n², n³)` for fixed-n evaluations.
pub fn fixed_n_moments(n: usize) -> NumberMoments {
    let x = n as f64;
    NumberMoments { nbar: x, nbar2: x * x, nbar3: x * x * x }
}

fn check_positive(value: f64, what: &str) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidArgument(format!("{what} must be > 0, got {value}")));
    }
    Ok(())
}

fn check_nonneg(value: f64, what: &str) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::InvalidArgument(format!("{what} must be >= 0, got {value}")));
    }
    Ok(())
}

/// First-order drive inhomogeneity on a one-qubit gate.
///
/// Time-averaged: `2(Ω′/ω_a)²(2n̄+1)λ²`. Instantaneous (requires `t_g`):
/// `4(Ω′/ω_a)² sin²(ω_a t_g/2)(2n̄+1)λ²`.
pub fn infid_1q_inhomo1(
    omega_prime: f64,
    omega_a: f64,
    nbar: f64,
    lam_sigma: f64,
    time_averaged: bool,
    t_g: Option<f64>,
) -> Result<f64> {
    check_positive(omega_a, "omega_a")?;
    check_nonneg(nbar, "nbar")?;
    let x2 = (omega_prime / omega_a).powi(2);
    let occupancy = (2.0 * nbar + 1.0) * lam_sigma;
    if time_averaged {
        Ok(2.0 * x2 * occupancy)
    } else {
        let t_g = t_g.ok_or_else(|| {
            Error::InvalidArgument("instantaneous form needs the gate time".into())
        })?;
        Ok(4.0 * x2 * (omega_a * t_g / 2.0).sin().powi(2) * occupancy)
    }
}

/// Second-order drive inhomogeneity: `Ω″² t_g² (4n̄² + 4n̄ + 1) λ²`.
/// At fixed n this is `Ω″² t_g² (2n+1)² λ²`.
pub fn infid_1q_inhomo2(
    omega_dprime: f64,
    t_g: f64,
    nbar: f64,
    nbar2: f64,
    lam_sigma: f64,
) -> Result<f64> {
    check_positive(t_g, "t_g")?;
    check_nonneg(nbar, "nbar")?;
    Ok((omega_dprime * t_g).powi(2) * (4.0 * nbar2 + 4.0 * nbar + 1.0) * lam_sigma)
}

/// Cross-Kerr coupling, time-averaged:
/// `2(Ω″_ab/ω_ab)²(2n̄_a n̄_b + n̄_a + n̄_b)λ²` (modes assumed uncorrelated).
pub fn infid_1q_crosskerr(
    omega_dprime_ab: f64,
    omega_ab: f64,
    nbar_a: f64,
    nbar_b: f64,
    lam_sigma: f64,
) -> Result<f64> {
    if omega_ab == 0.0 || !omega_ab.is_finite() {
        return Err(Error::InvalidArgument("omega_ab must be nonzero".into()));
    }
    check_nonneg(nbar_a, "nbar_a")?;
    check_nonneg(nbar_b, "nbar_b")?;
    let x2 = (omega_dprime_ab / omega_ab).powi(2);
    Ok(2.0 * x2 * (2.0 * nbar_a * nbar_b + nbar_a + nbar_b) * lam_sigma)
}

/// Cross-Kerr coupling with the oscillatory factor kept:
/// `4(Ω″_ab/ω_ab)² sin²(ω_ab t_g/2)(2n̄_a n̄_b + n̄_a + n̄_b)λ²`.
pub fn infid_1q_crosskerr_instantaneous(
    omega_dprime_ab: f64,
    omega_ab: f64,
    t_g: f64,
    nbar_a: f64,
    nbar_b: f64,
    lam_sigma: f64,
) -> Result<f64> {
    let averaged = infid_1q_crosskerr(omega_dprime_ab, omega_ab, nbar_a, nbar_b, lam_sigma)?;
    check_positive(t_g, "t_g")?;
    Ok(2.0 * averaged * (omega_ab * t_g / 2.0).sin().powi(2))
}

/// Static motional frequency shift on an N-loop two-qubit gate:
/// `(π²δ²/64Ω²)[(2n̄+1)λ²_S + λ²_{S²}/(4N)]`.
pub fn infid_2q_static_shift(
    delta: f64,
    omega_2g: f64,
    n_loops: u32,
    nbar: f64,
    lam_s: f64,
    lam_s2: f64,
) -> Result<f64> {
    check_positive(omega_2g, "omega_2g")?;
    check_nonneg(nbar, "nbar")?;
    if n_loops < 1 {
        return Err(Error::InvalidArgument("n_loops must be >= 1".into()));
    }
    let n = n_loops as f64;
    let pref = PI * PI * delta * delta / (64.0 * omega_2g * omega_2g);
    Ok(pref * ((2.0 * nbar + 1.0) * lam_s + lam_s2 / (4.0 * n)))
}

/// Quartic trap anharmonicity on an N-loop two-qubit gate.
#[allow(clippy::too_many_arguments)]
pub fn infid_2q_anharmonic(
    epsilon: f64,
    omega_2g: f64,
    n_loops: u32,
    nbar: f64,
    nbar2: f64,
    nbar3: f64,
    lam_s: f64,
    lam_s2: f64,
) -> Result<f64> {
    check_positive(omega_2g, "omega_2g")?;
    check_nonneg(nbar, "nbar")?;
    check_nonneg(nbar2, "nbar2")?;
    check_nonneg(nbar3, "nbar3")?;
    if n_loops < 1 {
        return Err(Error::InvalidArgument("n_loops must be >= 1".into()));
    }
    let n = n_loops as f64;
    let pref = 9.0 * PI * PI * epsilon * epsilon / (16.0 * omega_2g * omega_2g);
    let bracket_s = 4.0 * (2.0 * nbar3 + 3.0 * nbar2 + 3.0 * nbar + 1.0)
        + 6.0 / n * (2.0 * nbar2 + 2.0 * nbar + 1.0)
        + 9.0 / (4.0 * n * n) * (2.0 * nbar + 1.0);
    let bracket_s2 = 3.0 / (8.0 * n) * (11.0 * nbar2 + 11.0 * nbar + 3.0)
        + 3.0 / (4.0 * n * n) * (2.0 * nbar + 1.0)
        + 9.0 / (64.0 * n * n * n);
    Ok(pref * (lam_s * bracket_s + lam_s2 * bracket_s2))
}

/// Gradient-field inhomogeneity on an N-loop two-qubit gate.
pub fn infid_2q_grad_inhomo(
    omega_2g_dprime: f64,
    omega_2g: f64,
    n_loops: u32,
    nbar: f64,
    nbar2: f64,
    lam_s: f64,
    lam_s2: f64,
) -> Result<f64> {
    check_positive(omega_2g, "omega_2g")?;
    check_nonneg(nbar, "nbar")?;
    check_nonneg(nbar2, "nbar2")?;
    if n_loops < 1 {
        return Err(Error::InvalidArgument("n_loops must be >= 1".into()));
    }
    let n = n_loops as f64;
    let pref = 9.0 * PI * PI * omega_2g_dprime * omega_2g_dprime
        / (16.0 * omega_2g * omega_2g);
    let bracket_s2 = 4.0 * nbar2
        + 4.0 * nbar
        + 1.0
        + 3.0 / (2.0 * n) * (2.0 * nbar + 1.0)
        + 9.0 / (16.0 * n * n);
    Ok(pref * (lam_s2 * bracket_s2 + 4.0 / n * lam_s * (2.0 * nbar + 1.0)))
}

/// Markovian heating: `πṅλ²_S/(8Ω√N)`. Independent of the initial motional
/// state, so there is deliberately no occupation parameter.
pub fn infid_2q_heating(ndot: f64, omega_2g: f64, n_loops: u32, lam_s: f64) -> Result<f64> {
    check_positive(omega_2g, "omega_2g")?;
    check_nonneg(ndot, "ndot")?;
    if n_loops < 1 {
        return Err(Error::InvalidArgument("n_loops must be >= 1".into()));
    }
    Ok(PI * ndot * lam_s / (8.0 * omega_2g * (n_loops as f64).sqrt()))
}

/// Markovian motional dephasing:
/// `(πη/16Ω√N)[(2n̄+1)λ²_S + (3/16N)λ²_{S²}]`.
pub fn infid_2q_dephasing(
    eta: f64,
    omega_2g: f64,
    n_loops: u32,
    nbar: f64,
    lam_s: f64,
    lam_s2: f64,
) -> Result<f64> {
    check_positive(omega_2g, "omega_2g")?;
    check_nonneg(eta, "eta")?;
    check_nonneg(nbar, "nbar")?;
    if n_loops < 1 {
        return Err(Error::InvalidArgument("n_loops must be >= 1".into()));
    }
    let n = n_loops as f64;
    Ok(PI * eta / (16.0 * omega_2g * n.sqrt())
        * ((2.0 * nbar + 1.0) * lam_s + 3.0 / (16.0 * n) * lam_s2))
}

/// Initial-state convention for the static qubit-shift formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitShiftState {
    /// Start in |↓⟩: `(δ²/Ω²) sin⁴(Ωt)`.
    Ground,
    /// Average over the Bloch sphere: `(2δ²/3Ω²) sin²(Ωt)`.
    BlochAveraged,
}

/// Static qubit frequency shift during a one-qubit gate.
pub fn infid_1q_qubit_shift(
    delta: f64,
    omega_1g: f64,
    t: f64,
    state: QubitShiftState,
) -> Result<f64> {
    check_positive(omega_1g, "omega_1g")?;
    let r2 = (delta / omega_1g).powi(2);
    let s = (omega_1g * t).sin();
    Ok(match state {
        QubitShiftState::Ground => r2 * s.powi(4),
        QubitShiftState::BlochAveraged => 2.0 / 3.0 * r2 * s * s,
    })
}

/// Static motional shift under a Walsh sequence of order k (N = 2^k loops):
/// `(πδ/Ω)^{2(k+1)}·2^{−(5k+6)}(2n̄+1)λ²_S + (π²δ²/Ω²)·2^{−(k+8)}λ²_{S²}`.
pub fn infid_2q_walsh(
    delta: f64,
    omega_2g: f64,
    k: u32,
    nbar: f64,
    lam_s: f64,
    lam_s2: f64,
) -> Result<f64> {
    check_positive(omega_2g, "omega_2g")?;
    check_nonneg(nbar, "nbar")?;
    if k > 16 {
        return Err(Error::InvalidArgument("Walsh order above 16 is not supported".into()));
    }
    let x = PI * delta / omega_2g;
    let displacement = x.abs().powi(2 * (k as i32 + 1)) * 2f64.powi(-(5 * k as i32 + 6))
        * (2.0 * nbar + 1.0)
        * lam_s;
    let phase = x * x * 2f64.powi(-(k as i32 + 8)) * lam_s2;
    Ok(displacement + phase)
}
