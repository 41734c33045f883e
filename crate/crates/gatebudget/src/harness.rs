//! Pairing of numeric and analytic infidelities: fidelity definitions,
//! parameter sweeps, ensemble averaging, and convergence analysis.

use ndarray::Array2;
use rayon::prelude::*;

use crate::analytic::{self, QubitShiftState, SpinVariances, PERTURBATIVE_LIMIT};
use crate::ensemble::{MotionalEnsemble, NumberMoments};
use crate::error::{Error, Result};
use crate::hamiltonians::{
    error_1q_crosskerr, error_1q_inhomo1, error_1q_inhomo2, error_1q_qubit_shift, error_2q,
    ideal_2q, ErrorChannel, GateConfig, GateKind, TimeDependentHamiltonian,
};
use crate::operators::spin_ops;
use crate::propagation::{
    propagate_lindblad, propagate_pure, walsh_sign_schedule, BathKind, BathSpec,
    IntegratorConfig,
};
use crate::space::HilbertSpace;
use crate::states::{DensityMatrix, StateVector};
use crate::C64;

/// Deepest Fock level the sweep machinery will enumerate for mixed
/// ensembles.
const MAX_ENSEMBLE_LEVEL: usize = 512;
/// Probability mass allowed to go uncovered when averaging over an
/// ensemble numerically.
const ENSEMBLE_COVER_LIMIT: f64 = 1e-6;
/// Numeric infidelity change allowed when the Fock truncation grows 25%.
pub const TRUNCATION_AUDIT_TOL: f64 = 1e-8;

/// Fidelity of a propagated pure state against the ideal qubit-only target:
/// `⟨target|Tr_motion(|ψ⟩⟨ψ|)|target⟩`.
pub fn fidelity_pure(psi_final: &StateVector, ideal_qubit_target: &StateVector) -> Result<f64> {
    if ideal_qubit_target.space().n_modes() != 0
        || ideal_qubit_target.space().qubit_dim() != psi_final.space().qubit_dim()
    {
        return Err(Error::SpaceMismatch(
            "fidelity target must be a bare qubit state of the same register".into(),
        ));
    }
    let qdim = psi_final.space().qubit_dim();
    let mdim = psi_final.space().motional_dim();
    let amps = psi_final.amplitudes();
    let target = ideal_qubit_target.amplitudes();
    let mut f = 0.0;
    for m in 0..mdim {
        let mut overlap = C64::new(0.0, 0.0);
        for q in 0..qdim {
            overlap += target[q].conj() * amps[q * mdim + m];
        }
        f += overlap.norm_sqr();
    }
    clamp_fidelity(f)
}

/// Fidelity of a propagated density matrix against the ideal qubit-only
/// target: `⟨target|Tr_motion(ρ)|target⟩`.
pub fn fidelity_mixed(rho_final: &DensityMatrix, ideal_qubit_target: &StateVector) -> Result<f64> {
    if ideal_qubit_target.space().n_modes() != 0
        || ideal_qubit_target.space().qubit_dim() != rho_final.space().qubit_dim()
    {
        return Err(Error::SpaceMismatch(
            "fidelity target must be a bare qubit state of the same register".into(),
        ));
    }
    let rho_q = rho_final.reduced_qubit_density();
    let target = ideal_qubit_target.amplitudes();
    let mut f = C64::new(0.0, 0.0);
    for (i, ti) in target.iter().enumerate() {
        for (j, tj) in target.iter().enumerate() {
            f += ti.conj() * rho_q[(i, j)] * tj;
        }
    }
    clamp_fidelity(f.re)
}

fn clamp_fidelity(f: f64) -> Result<f64> {
    if !(-1e-8..=1.0 + 1e-8).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "fidelity {f} outside [0, 1] beyond rounding slack"
        )));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Ideal final qubit state `U_g|ψ(0)⟩`, by exact exponentiation of the gate
/// generator on the qubit factor.
///
/// One qubit: `U = cos(Ωt_g)·I − i·sin(Ωt_g)·σ_α`. Two qubits:
/// `U = e^{iφS_α²} = I + (S_α²/4)(e^{4iφ} − 1)` with the configured
/// geometric phase φ.
pub fn ideal_target(cfg: &GateConfig, initial_qubit_state: &StateVector) -> Result<StateVector> {
    if initial_qubit_state.space().n_modes() != 0 {
        return Err(Error::InvalidArgument("ideal target expects a bare qubit state".into()));
    }
    let n_qubits = initial_qubit_state.space().n_qubits();
    let amps = initial_qubit_state.amplitudes();
    let out = match (cfg.kind(), n_qubits) {
        (GateKind::OneQubit, 1) => {
            let theta = cfg.omega() * cfg.gate_time();
            let sigma = spin_ops(1, cfg.axis())?;
            let m = sigma.matrix();
            let (c, s) = (theta.cos(), theta.sin());
            (0..2)
                .map(|i| {
                    C64::new(c, 0.0) * amps[i]
                        + C64::new(0.0, -s) * (0..2).map(|j| m[(i, j)] * amps[j]).sum::<C64>()
                })
                .collect::<Vec<C64>>()
        }
        (GateKind::TwoQubit, 2) => {
            let s = spin_ops(2, cfg.axis())?;
            let s2 = s.dot(&s)?;
            let m = s2.matrix();
            let factor = (C64::new(0.0, 4.0 * cfg.geometric_phase()).exp() - 1.0) / 4.0;
            (0..4)
                .map(|i| amps[i] + factor * (0..4).map(|j| m[(i, j)] * amps[j]).sum::<C64>())
                .collect::<Vec<C64>>()
        }
        _ => {
            return Err(Error::InvalidArgument(
                "gate kind does not match the qubit register".into(),
            ))
        }
    };
    StateVector::from_amplitudes(out, initial_qubit_state.space().clone())
}

/// Probability-weighted infidelity `I = Σ_n P_n I_n` over per-level
/// results. Every level carrying more than [`ENSEMBLE_COVER_LIMIT`] of
/// probability must be present.
pub fn ensemble_infidelity(
    records_per_n: &[(usize, f64)],
    ens: &MotionalEnsemble,
) -> Result<f64> {
    if records_per_n.is_empty() {
        return Err(Error::InvalidArgument("no per-level infidelities given".into()));
    }
    let max_n = records_per_n.iter().map(|&(n, _)| n).max().unwrap_or(0);
    let probs = ens.probabilities_with_limit(max_n, ENSEMBLE_COVER_LIMIT)?;
    let mut total = 0.0;
    for (n, p) in probs {
        let i_n = records_per_n
            .iter()
            .find(|&&(m, _)| m == n)
            .map(|&(_, i)| i)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "level {n} carries probability {p} but has no infidelity record"
                ))
            })?;
        total += p * i_n;
    }
    Ok(total)
}

/// Which analytic variant a sweep compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// Keep oscillatory `sin²` factors evaluated at the gate time.
    Instantaneous,
    /// Replace `sin²` factors by their time average 1/2.
    TimeAveraged,
}

/// One error channel swept over a strength grid.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub channel: ErrorChannel,
    pub gate: GateConfig,
    pub initial_qubit_state: StateVector,
    pub motional: MotionalEnsemble,
    /// Second-mode ensemble, required by the cross-Kerr channel.
    pub motional_b: Option<MotionalEnsemble>,
    pub sweep_values: Vec<f64>,
    pub comparison: Comparison,
    /// Walsh order; `Some(k)` requires `gate.loops == 2^k` and applies the
    /// sign schedule (static-shift channel only).
    pub walsh_k: Option<u32>,
    pub integrator: IntegratorConfig,
    /// Re-run each point with 25% larger Fock truncations and require the
    /// numeric infidelity to be stable within [`TRUNCATION_AUDIT_TOL`].
    pub audit: bool,
}

impl SweepPlan {
    pub fn new(
        channel: ErrorChannel,
        gate: GateConfig,
        initial_qubit_state: StateVector,
        motional: MotionalEnsemble,
        sweep_values: Vec<f64>,
    ) -> Self {
        Self {
            channel,
            gate,
            initial_qubit_state,
            motional,
            motional_b: None,
            sweep_values,
            comparison: Comparison::Instantaneous,
            walsh_k: None,
            integrator: IntegratorConfig::default(),
            audit: true,
        }
    }

    fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.channel.gate_kind() != self.gate.kind() {
            return Err(Error::InvalidArgument(format!(
                "channel {} does not apply to this gate kind",
                self.channel.name()
            )));
        }
        let mut last = f64::NEG_INFINITY;
        for &v in &self.sweep_values {
            if !v.is_finite() || v <= last {
                return Err(Error::InvalidArgument(
                    "sweep_values must be finite and strictly increasing".into(),
                ));
            }
            last = v;
        }
        if matches!(self.channel, ErrorChannel::CrossKerr { .. }) && self.motional_b.is_none() {
            return Err(Error::InvalidArgument(
                "cross-Kerr sweeps need a second-mode ensemble".into(),
            ));
        }
        if let Some(k) = self.walsh_k {
            if !matches!(self.channel, ErrorChannel::MotionalShift2Q { .. }) {
                return Err(Error::InvalidArgument(
                    "Walsh schedules apply to the static motional shift channel".into(),
                ));
            }
            if self.gate.loops() != 1 << k {
                return Err(Error::InvalidArgument(format!(
                    "Walsh order {k} needs a 2^k = {} loop gate, got {}",
                    1 << k,
                    self.gate.loops()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditOutcome {
    Passed,
    Failed,
    Skipped,
}

/// Paired analytic/numeric result at one sweep point.
#[derive(Debug, Clone)]
pub struct InfidelityRecord {
    pub strength: f64,
    pub analytic: f64,
    pub numeric: f64,
    /// Fixed n, or n̄ for mixed ensembles (mode a).
    pub n_or_nbar: f64,
    pub lambdas: SpinVariances,
    /// `numeric / analytic`; `None` when the analytic value is 0.
    pub ratio: Option<f64>,
    pub truncation_audit: AuditOutcome,
    /// Analytic value exceeds the perturbative validity limit.
    pub flagged: bool,
}

/// Figure-style normalization divisor ("phonon dependence" of the
/// analytic expression). 1 for channels plotted unnormalized.
pub fn phonon_normalizer(
    channel: &ErrorChannel,
    moments: &NumberMoments,
    moments_b: Option<&NumberMoments>,
) -> f64 {
    let norm = match channel {
        ErrorChannel::Inhomo1st { .. } => 2.0 * moments.nbar + 1.0,
        ErrorChannel::Inhomo2nd { .. } => 4.0 * moments.nbar2 + 4.0 * moments.nbar + 1.0,
        ErrorChannel::CrossKerr { .. } => {
            let b = moments_b.map(|m| m.nbar).unwrap_or(0.0);
            2.0 * moments.nbar * b + moments.nbar + b
        }
        _ => 1.0,
    };
    if norm > 0.0 {
        norm
    } else {
        1.0
    }
}

/// Space sized for one propagation: initial level plus headroom for the
/// drive displacement and the number spread it induces.
pub fn space_for(channel: &ErrorChannel, gate: &GateConfig, levels: &[usize]) -> Result<HilbertSpace> {
    match channel {
        ErrorChannel::Qubit1QShift { .. } => HilbertSpace::qubit_only(1),
        ErrorChannel::CrossKerr { .. } => {
            let (na, nb) = (levels[0], levels[1]);
            // the beam-splitter conserves total phonon number
            let dim = na + nb + 3;
            HilbertSpace::new(1, &[dim, dim])
        }
        ErrorChannel::Inhomo1st { omega_prime, omega_a } => {
            let amp = 2.0 * omega_prime.abs() / omega_a;
            HilbertSpace::new(1, &[fock_dim_for(levels[0], amp)])
        }
        ErrorChannel::Inhomo2nd { .. } => HilbertSpace::new(1, &[fock_dim_for(levels[0], 0.0)]),
        _ => {
            // two-qubit channels ride the geometric-phase drive:
            // displacement up to |S_α|·2Ω/Δ = 1/√N
            let amp = 1.0 / (gate.loops() as f64).sqrt();
            HilbertSpace::new(2, &[fock_dim_for(levels[0], amp)])
        }
    }
}

/// `n_max` plus headroom: a base buffer, the displacement reach, and the
/// `2|α|√n` number spread of a displaced Fock state.
pub fn fock_dim_for(n_max: usize, displacement: f64) -> usize {
    let spread = 2.0 * displacement * (n_max as f64 + 1.0).sqrt();
    n_max + (10.0 + 8.0 * displacement + spread).ceil() as usize + 1
}

fn build_hamiltonian(
    channel: &ErrorChannel,
    gate: &GateConfig,
    space: &HilbertSpace,
    walsh_k: Option<u32>,
) -> Result<TimeDependentHamiltonian> {
    let h = match channel {
        ErrorChannel::Qubit1QShift { .. } => error_1q_qubit_shift(gate, channel)?,
        ErrorChannel::Inhomo1st { .. } => error_1q_inhomo1(gate, channel, space)?,
        ErrorChannel::Inhomo2nd { .. } => error_1q_inhomo2(gate, channel, space)?,
        ErrorChannel::CrossKerr { .. } => error_1q_crosskerr(gate, channel, space)?,
        ErrorChannel::MotionalShift2Q { .. }
        | ErrorChannel::Anharmonic { .. }
        | ErrorChannel::GradInhomo2Q { .. } => error_2q(gate, channel, space)?,
        ErrorChannel::Heating { .. } | ErrorChannel::Dephasing { .. } => ideal_2q(gate, space)?,
    };
    Ok(match walsh_k {
        Some(k) => {
            let schedule = walsh_sign_schedule(k, gate.loop_time())?;
            h.with_sign_schedule(schedule.to_sign_schedule())
        }
        None => h,
    })
}

/// Numeric infidelity for a definite initial Fock level (or level pair for
/// two-mode channels), in a caller-chosen space.
pub fn numeric_infidelity_in_space(
    channel: &ErrorChannel,
    gate: &GateConfig,
    initial_qubit_state: &StateVector,
    levels: &[usize],
    space: &HilbertSpace,
    walsh_k: Option<u32>,
    integrator: &IntegratorConfig,
) -> Result<f64> {
    let target = ideal_target(gate, initial_qubit_state)?;
    let h = build_hamiltonian(channel, gate, space, walsh_k)?;
    let fidelity = match channel {
        ErrorChannel::Qubit1QShift { .. } => {
            let psi = propagate_pure(&h, initial_qubit_state, gate.gate_time(), integrator)?;
            fidelity_pure(&psi, &target)?
        }
        ErrorChannel::Heating { ndot } => {
            let psi0 = StateVector::compose(initial_qubit_state, space, levels)?;
            let rho0 = DensityMatrix::from_pure(&psi0);
            let bath = BathSpec::heating(*ndot)?;
            let rho = propagate_lindblad(&h, &bath, &rho0, gate.gate_time(), integrator)?;
            fidelity_mixed(&rho, &target)?
        }
        ErrorChannel::Dephasing { eta } => {
            let psi0 = StateVector::compose(initial_qubit_state, space, levels)?;
            let rho0 = DensityMatrix::from_pure(&psi0);
            let bath = BathSpec::dephasing(*eta)?;
            let rho = propagate_lindblad(&h, &bath, &rho0, gate.gate_time(), integrator)?;
            fidelity_mixed(&rho, &target)?
        }
        _ => {
            let psi0 = StateVector::compose(initial_qubit_state, space, levels)?;
            let psi = propagate_pure(&h, &psi0, gate.gate_time(), integrator)?;
            fidelity_pure(&psi, &target)?
        }
    };
    Ok(1.0 - fidelity)
}

/// Numeric infidelity with the default space sizing.
pub fn numeric_infidelity(
    channel: &ErrorChannel,
    gate: &GateConfig,
    initial_qubit_state: &StateVector,
    levels: &[usize],
    walsh_k: Option<u32>,
    integrator: &IntegratorConfig,
) -> Result<f64> {
    let space = space_for(channel, gate, levels)?;
    numeric_infidelity_in_space(
        channel,
        gate,
        initial_qubit_state,
        levels,
        &space,
        walsh_k,
        integrator,
    )
}

/// Analytic infidelity for the channel, using ensemble moments and the
/// plan's comparison convention.
pub fn analytic_infidelity(
    channel: &ErrorChannel,
    gate: &GateConfig,
    comparison: Comparison,
    moments: &NumberMoments,
    moments_b: Option<&NumberMoments>,
    lambdas: &SpinVariances,
    walsh_k: Option<u32>,
) -> Result<f64> {
    let t_g = gate.gate_time();
    match channel {
        ErrorChannel::Qubit1QShift { delta } => analytic::infid_1q_qubit_shift(
            *delta,
            gate.omega(),
            t_g,
            QubitShiftState::Ground,
        ),
        ErrorChannel::Inhomo1st { omega_prime, omega_a } => analytic::infid_1q_inhomo1(
            *omega_prime,
            *omega_a,
            moments.nbar,
            lambdas.lam_sigma,
            comparison == Comparison::TimeAveraged,
            Some(t_g),
        ),
        ErrorChannel::Inhomo2nd { omega_dprime } => analytic::infid_1q_inhomo2(
            *omega_dprime,
            t_g,
            moments.nbar,
            moments.nbar2,
            lambdas.lam_sigma,
        ),
        ErrorChannel::CrossKerr { omega_dprime_ab, omega_ab } => {
            let mb = moments_b.ok_or_else(|| {
                Error::InvalidArgument("cross-Kerr needs second-mode moments".into())
            })?;
            match comparison {
                Comparison::TimeAveraged => analytic::infid_1q_crosskerr(
                    *omega_dprime_ab,
                    *omega_ab,
                    moments.nbar,
                    mb.nbar,
                    lambdas.lam_sigma,
                ),
                Comparison::Instantaneous => analytic::infid_1q_crosskerr_instantaneous(
                    *omega_dprime_ab,
                    *omega_ab,
                    t_g,
                    moments.nbar,
                    mb.nbar,
                    lambdas.lam_sigma,
                ),
            }
        }
        ErrorChannel::MotionalShift2Q { delta } => match walsh_k {
            Some(k) => analytic::infid_2q_walsh(
                *delta,
                gate.omega(),
                k,
                moments.nbar,
                lambdas.lam_s,
                lambdas.lam_s2,
            ),
            None => analytic::infid_2q_static_shift(
                *delta,
                gate.omega(),
                gate.loops(),
                moments.nbar,
                lambdas.lam_s,
                lambdas.lam_s2,
            ),
        },
        ErrorChannel::Anharmonic { epsilon } => analytic::infid_2q_anharmonic(
            *epsilon,
            gate.omega(),
            gate.loops(),
            moments.nbar,
            moments.nbar2,
            moments.nbar3,
            lambdas.lam_s,
            lambdas.lam_s2,
        ),
        ErrorChannel::GradInhomo2Q { omega_2g_dprime } => analytic::infid_2q_grad_inhomo(
            *omega_2g_dprime,
            gate.omega(),
            gate.loops(),
            moments.nbar,
            moments.nbar2,
            lambdas.lam_s,
            lambdas.lam_s2,
        ),
        ErrorChannel::Heating { ndot } => {
            analytic::infid_2q_heating(*ndot, gate.omega(), gate.loops(), lambdas.lam_s)
        }
        ErrorChannel::Dephasing { eta } => analytic::infid_2q_dephasing(
            *eta,
            gate.omega(),
            gate.loops(),
            moments.nbar,
            lambdas.lam_s,
            lambdas.lam_s2,
        ),
    }
}

/// Run one sweep point: numeric (ensemble-averaged over initial levels),
/// with optional truncation audit.
fn evaluate_point(plan: &SweepPlan, strength: f64) -> Result<InfidelityRecord> {
    let channel = plan.channel.with_strength(strength);
    let lambdas = SpinVariances::from_qubit_state(&plan.initial_qubit_state, plan.gate.axis())?;
    let moments = plan.motional.moments(MAX_ENSEMBLE_LEVEL)?;
    let moments_b = match &plan.motional_b {
        Some(e) => Some(e.moments(MAX_ENSEMBLE_LEVEL)?),
        None => None,
    };

    let analytic_value = analytic_infidelity(
        &channel,
        &plan.gate,
        plan.comparison,
        &moments,
        moments_b.as_ref(),
        &lambdas,
        plan.walsh_k,
    )?;

    // numeric side: run every populated initial level, weight by P_n
    let level_sets: Vec<(Vec<usize>, f64)> = match &channel {
        ErrorChannel::Qubit1QShift { .. } => vec![(vec![], 1.0)],
        ErrorChannel::CrossKerr { .. } => {
            let pa = plan
                .motional
                .probabilities_with_limit(MAX_ENSEMBLE_LEVEL, ENSEMBLE_COVER_LIMIT)?;
            let pb = plan
                .motional_b
                .as_ref()
                .expect("validated")
                .probabilities_with_limit(MAX_ENSEMBLE_LEVEL, ENSEMBLE_COVER_LIMIT)?;
            let mut sets = Vec::new();
            for &(na, wa) in &pa {
                for &(nb, wb) in &pb {
                    sets.push((vec![na, nb], wa * wb));
                }
            }
            sets
        }
        _ => plan
            .motional
            .probabilities_with_limit(MAX_ENSEMBLE_LEVEL, ENSEMBLE_COVER_LIMIT)?
            .into_iter()
            .map(|(n, p)| (vec![n], p))
            .collect(),
    };

    let mut numeric = 0.0;
    let mut audit = AuditOutcome::Skipped;
    for (levels, weight) in &level_sets {
        let space = space_for(&channel, &plan.gate, levels)?;
        let i_n = numeric_infidelity_in_space(
            &channel,
            &plan.gate,
            &plan.initial_qubit_state,
            levels,
            &space,
            plan.walsh_k,
            &plan.integrator,
        )?;
        if plan.audit {
            if space.n_modes() == 0 {
                audit = AuditOutcome::Passed; // nothing truncated
            } else {
                let grown = space.with_grown_focks(1.25);
                let i_grown = numeric_infidelity_in_space(
                    &channel,
                    &plan.gate,
                    &plan.initial_qubit_state,
                    levels,
                    &grown,
                    plan.walsh_k,
                    &plan.integrator,
                )?;
                let stable = (i_grown - i_n).abs() < TRUNCATION_AUDIT_TOL;
                audit = match (audit, stable) {
                    (AuditOutcome::Failed, _) | (_, false) => AuditOutcome::Failed,
                    _ => AuditOutcome::Passed,
                };
            }
        }
        numeric += weight * i_n;
    }

    let ratio = if analytic_value != 0.0 { Some(numeric / analytic_value) } else { None };
    Ok(InfidelityRecord {
        strength,
        analytic: analytic_value,
        numeric,
        n_or_nbar: moments.nbar,
        lambdas,
        ratio,
        truncation_audit: audit,
        flagged: analytic_value > PERTURBATIVE_LIMIT,
    })
}

/// Evaluate the plan at every sweep strength. Points run in parallel;
/// results are ordered by the strength grid, so identical plans produce
/// identical output.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<InfidelityRecord>> {
    plan.validate()?;
    plan.sweep_values
        .par_iter()
        .map(|&x| {
            evaluate_point(plan, x).map_err(|e| Error::SweepPoint {
                strength: x,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Pass/fail thresholds for a sweep's convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCriteria {
    pub ratio_tolerance: f64,
    pub expected_exponent: f64,
    pub exponent_tolerance: f64,
}

impl ConvergenceCriteria {
    /// Defaults per channel: 10% ratio agreement; strength exponent 2 for
    /// coherent channels, 1 for Markovian rates.
    pub fn for_channel(channel: &ErrorChannel) -> Self {
        let expected_exponent = if channel.is_markovian() { 1.0 } else { 2.0 };
        Self { ratio_tolerance: 0.10, expected_exponent, exponent_tolerance: 0.1 }
    }

    /// Walsh comparisons tolerate 15%: the residual error is higher-order
    /// and smaller, which amplifies relative noise.
    pub fn walsh() -> Self {
        Self { ratio_tolerance: 0.15, expected_exponent: 2.0, exponent_tolerance: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// max |numeric/analytic − 1| over the smallest half of the strengths.
    pub max_ratio_deviation: f64,
    /// Least-squares slope of log(numeric) against log(strength).
    pub fitted_exponent: f64,
    pub criteria: ConvergenceCriteria,
    pub passed: bool,
}

/// Convergence summary over ≥ 4 sweep records.
pub fn convergence_report(
    records: &[InfidelityRecord],
    criteria: &ConvergenceCriteria,
) -> Result<ConvergenceReport> {
    if records.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "convergence report needs >= 4 records, got {}",
            records.len()
        )));
    }
    let half = records.len() / 2;
    let mut max_dev: f64 = 0.0;
    for r in &records[..half.max(1)] {
        let ratio = r.ratio.ok_or_else(|| {
            Error::InvalidArgument("ratio undefined (analytic = 0) in convergence report".into())
        })?;
        max_dev = max_dev.max((ratio - 1.0).abs());
    }

    let logs: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.strength > 0.0 && r.numeric > 0.0)
        .map(|r| (r.strength.ln(), r.numeric.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need >= 2 positive records to fit a scaling exponent".into(),
        ));
    }
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    let passed = max_dev <= criteria.ratio_tolerance
        && (fitted_exponent - criteria.expected_exponent).abs() <= criteria.exponent_tolerance;
    Ok(ConvergenceReport { max_ratio_deviation: max_dev, fitted_exponent, criteria: *criteria, passed })
}

/// Purity of the reduced qubit state (used by entanglement diagnostics).
pub fn qubit_purity(rho_q: &Array2<C64>) -> f64 {
    rho_q.dot(rho_q).diag().iter().map(|z| z.re).sum()
}
