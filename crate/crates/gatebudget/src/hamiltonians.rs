//! Rotating-frame Hamiltonians for the ideal gates and each coherent error
//! channel.
//!
//! All builders produce the post-rotating-wave forms: explicit `e^{±iωt}`
//! phases on spin-motion couplings, constant terms otherwise. `ħ = 1`, so
//! every coefficient is an angular frequency.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{embed, ladder_ops, spin_ops, Operator, SpinAxis};
use crate::space::{HilbertSpace, Subsystem};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    OneQubit,
    TwoQubit,
}

/// Ideal-gate parameters.
///
/// Two-qubit gates are calibrated so the detuning satisfies `Δ = 4Ω√N` and
/// the gate time `t_g = 2πN/Δ`, which fixes the geometric phase at `π/8`.
/// One-qubit gates default to `Ω t_g = π/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    kind: GateKind,
    omega: f64,
    axis: SpinAxis,
    loops: u32,
    detuning: f64,
    gate_time: f64,
}

impl GateConfig {
    pub fn one_qubit(omega: f64, axis: SpinAxis) -> Result<Self> {
        Self::one_qubit_with_angle(omega, axis, std::f64::consts::FRAC_PI_4)
    }

    /// One-qubit gate with a chosen rotation parameter `angle = Ω·t_g`.
    pub fn one_qubit_with_angle(omega: f64, axis: SpinAxis, angle: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be > 0, got {omega}")));
        }
        if !(angle.is_finite() && angle > 0.0) {
            return Err(Error::InvalidArgument(format!("gate angle must be > 0, got {angle}")));
        }
        Ok(Self {
            kind: GateKind::OneQubit,
            omega,
            axis,
            loops: 1,
            detuning: 0.0,
            gate_time: angle / omega,
        })
    }

    /// N-loop two-qubit gate with the standard calibration `Δ = 4Ω√N`,
    /// `t_g = 2πN/Δ`.
    pub fn two_qubit(omega: f64, axis: SpinAxis, loops: u32) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be > 0, got {omega}")));
        }
        if loops < 1 {
            return Err(Error::InvalidArgument("loop count must be >= 1".into()));
        }
        let detuning = 4.0 * omega * (loops as f64).sqrt();
        let gate_time = 2.0 * std::f64::consts::PI * loops as f64 / detuning;
        Ok(Self { kind: GateKind::TwoQubit, omega, axis, loops, detuning, gate_time })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn axis(&self) -> SpinAxis {
        self.axis
    }

    pub fn loops(&self) -> u32 {
        self.loops
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn gate_time(&self) -> f64 {
        self.gate_time
    }

    /// Single-loop time `2π/Δ` (two-qubit gates).
    pub fn loop_time(&self) -> f64 {
        self.gate_time / self.loops as f64
    }

    /// Entangling phase `2πNΩ²/Δ²`; equals `π/8` for the standard
    /// calibration.
    pub fn geometric_phase(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.loops as f64 * self.omega * self.omega
            / (self.detuning * self.detuning)
    }
}

/// One error mechanism with its physical parameters. Rates and strengths
/// are angular frequencies except `ndot` (phonons per unit time) and `eta`
/// (dephasing rate).
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorChannel {
    /// Static qubit frequency shift during a one-qubit gate.
    Qubit1QShift { delta: f64 },
    /// First derivative of the drive field projected on mode a.
    Inhomo1st { omega_prime: f64, omega_a: f64 },
    /// Second derivative of the drive field on mode a.
    Inhomo2nd { omega_dprime: f64 },
    /// Mixed second derivative coupling modes a and b.
    CrossKerr { omega_dprime_ab: f64, omega_ab: f64 },
    /// Static motional frequency shift during a two-qubit gate.
    MotionalShift2Q { delta: f64 },
    /// Quartic trap anharmonicity.
    Anharmonic { epsilon: f64 },
    /// Second derivative of the two-qubit gradient field.
    GradInhomo2Q { omega_2g_dprime: f64 },
    /// Markovian phonon heating at rate ṅ.
    Heating { ndot: f64 },
    /// Markovian motional dephasing at rate η.
    Dephasing { eta: f64 },
}

impl ErrorChannel {
    pub fn validate(&self) -> Result<()> {
        let all_finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let ok = match self {
            ErrorChannel::Qubit1QShift { delta } => all_finite(&[*delta]),
            ErrorChannel::Inhomo1st { omega_prime, omega_a } => {
                all_finite(&[*omega_prime, *omega_a]) && *omega_a > 0.0
            }
            ErrorChannel::Inhomo2nd { omega_dprime } => all_finite(&[*omega_dprime]),
            ErrorChannel::CrossKerr { omega_dprime_ab, omega_ab } => {
                all_finite(&[*omega_dprime_ab, *omega_ab]) && *omega_ab != 0.0
            }
            ErrorChannel::MotionalShift2Q { delta } => all_finite(&[*delta]),
            ErrorChannel::Anharmonic { epsilon } => all_finite(&[*epsilon]),
            ErrorChannel::GradInhomo2Q { omega_2g_dprime } => all_finite(&[*omega_2g_dprime]),
            ErrorChannel::Heating { ndot } => ndot.is_finite() && *ndot >= 0.0,
            ErrorChannel::Dephasing { eta } => eta.is_finite() && *eta >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid channel parameters: {self:?}")))
        }
    }

    /// The swept strength parameter of this channel.
    pub fn strength(&self) -> f64 {
        match self {
            ErrorChannel::Qubit1QShift { delta } => *delta,
            ErrorChannel::Inhomo1st { omega_prime, .. } => *omega_prime,
            ErrorChannel::Inhomo2nd { omega_dprime } => *omega_dprime,
            ErrorChannel::CrossKerr { omega_dprime_ab, .. } => *omega_dprime_ab,
            ErrorChannel::MotionalShift2Q { delta } => *delta,
            ErrorChannel::Anharmonic { epsilon } => *epsilon,
            ErrorChannel::GradInhomo2Q { omega_2g_dprime } => *omega_2g_dprime,
            ErrorChannel::Heating { ndot } => *ndot,
            ErrorChannel::Dephasing { eta } => *eta,
        }
    }

    /// Copy of this channel with the strength parameter replaced.
    pub fn with_strength(&self, strength: f64) -> Self {
        let mut ch = self.clone();
        match &mut ch {
            ErrorChannel::Qubit1QShift { delta } => *delta = strength,
            ErrorChannel::Inhomo1st { omega_prime, .. } => *omega_prime = strength,
            ErrorChannel::Inhomo2nd { omega_dprime } => *omega_dprime = strength,
            ErrorChannel::CrossKerr { omega_dprime_ab, .. } => *omega_dprime_ab = strength,
            ErrorChannel::MotionalShift2Q { delta } => *delta = strength,
            ErrorChannel::Anharmonic { epsilon } => *epsilon = strength,
            ErrorChannel::GradInhomo2Q { omega_2g_dprime } => *omega_2g_dprime = strength,
            ErrorChannel::Heating { ndot } => *ndot = strength,
            ErrorChannel::Dephasing { eta } => *eta = strength,
        }
        ch
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorChannel::Qubit1QShift { .. } => "qubit_shift_1q",
            ErrorChannel::Inhomo1st { .. } => "inhomo_1st_1q",
            ErrorChannel::Inhomo2nd { .. } => "inhomo_2nd_1q",
            ErrorChannel::CrossKerr { .. } => "cross_kerr_1q",
            ErrorChannel::MotionalShift2Q { .. } => "motional_shift_2q",
            ErrorChannel::Anharmonic { .. } => "anharmonic_2q",
            ErrorChannel::GradInhomo2Q { .. } => "grad_inhomo_2q",
            ErrorChannel::Heating { .. } => "heating_2q",
            ErrorChannel::Dephasing { .. } => "dephasing_2q",
        }
    }

    /// Gate kind this channel applies to.
    pub fn gate_kind(&self) -> GateKind {
        match self {
            ErrorChannel::Qubit1QShift { .. }
            | ErrorChannel::Inhomo1st { .. }
            | ErrorChannel::Inhomo2nd { .. }
            | ErrorChannel::CrossKerr { .. } => GateKind::OneQubit,
            _ => GateKind::TwoQubit,
        }
    }

    pub fn is_markovian(&self) -> bool {
        matches!(self, ErrorChannel::Heating { .. } | ErrorChannel::Dephasing { .. })
    }
}

/// Time dependence of one Hamiltonian term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Coefficient {
    Constant(f64),
    /// `amplitude · e^{i·frequency·t}` (frequency may be negative).
    Exponential { amplitude: f64, frequency: f64 },
    /// `amplitude · cos(frequency·t)`.
    Cosine { amplitude: f64, frequency: f64 },
}

impl Coefficient {
    pub(crate) fn at(&self, t: f64) -> C64 {
        match *self {
            Coefficient::Constant(a) => C64::new(a, 0.0),
            Coefficient::Exponential { amplitude, frequency } => {
                C64::new(0.0, frequency * t).exp() * amplitude
            }
            Coefficient::Cosine { amplitude, frequency } => {
                C64::new(amplitude * (frequency * t).cos(), 0.0)
            }
        }
    }

    fn amplitude(&self) -> f64 {
        match *self {
            Coefficient::Constant(a) => a,
            Coefficient::Exponential { amplitude, .. } => amplitude,
            Coefficient::Cosine { amplitude, .. } => amplitude,
        }
    }

    fn frequency(&self) -> f64 {
        match *self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Exponential { frequency, .. } => frequency,
            Coefficient::Cosine { frequency, .. } => frequency,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Term {
    pub op: Array2<C64>,
    pub coeff: Coefficient,
    /// Whether the term flips sign under a π-pulse schedule (spin-carrying
    /// drive terms do; motion-only error terms do not).
    pub drive: bool,
}

/// Piecewise-constant ±1 drive modulation (Walsh schedules).
#[derive(Debug, Clone, PartialEq)]
pub struct SignSchedule {
    segment_duration: f64,
    signs: Vec<f64>,
}

impl SignSchedule {
    pub fn new(segment_duration: f64, signs: Vec<f64>) -> Result<Self> {
        if !(segment_duration.is_finite() && segment_duration > 0.0) || signs.is_empty() {
            return Err(Error::InvalidArgument("empty or non-positive sign schedule".into()));
        }
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::InvalidArgument("schedule signs must be ±1".into()));
        }
        Ok(Self { segment_duration, signs })
    }

    pub fn segment_duration(&self) -> f64 {
        self.segment_duration
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn total_duration(&self) -> f64 {
        self.segment_duration * self.signs.len() as f64
    }

    pub fn sign_at(&self, t: f64) -> f64 {
        let idx = ((t / self.segment_duration).floor() as isize)
            .clamp(0, self.signs.len() as isize - 1) as usize;
        self.signs[idx]
    }

    /// Interior segment boundaries (t = k·duration for 0 < k < len).
    pub fn boundaries(&self) -> Vec<f64> {
        (1..self.signs.len()).map(|k| k as f64 * self.segment_duration).collect()
    }
}

/// Time-dependent Hamiltonian `H(t) = Σ_j s_j(t)·c_j(t)·M_j`, where `s_j`
/// is the sign schedule applied to drive terms.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    space: HilbertSpace,
    terms: Vec<Term>,
    schedule: Option<SignSchedule>,
    time_scale: f64,
}

impl TimeDependentHamiltonian {
    /// The zero Hamiltonian (identity evolution).
    pub fn zero(space: HilbertSpace) -> Self {
        Self { space, terms: Vec::new(), schedule: None, time_scale: 0.0 }
    }

    /// Copy of this Hamiltonian with additional terms (used by the bath
    /// ensemble). The sign schedule carries over.
    pub(crate) fn with_extra_terms(&self, extra: Vec<Term>, window: f64) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(extra);
        let mut h = Self::from_terms(self.space.clone(), terms, window)?;
        h.schedule = self.schedule.clone();
        Ok(h)
    }

    pub(crate) fn from_terms(
        space: HilbertSpace,
        terms: Vec<Term>,
        sample_window: f64,
    ) -> Result<Self> {
        // Angular scale governing integrator steps: the fastest oscillation
        // or the overall operator norm, whichever is larger.
        let mut time_scale: f64 = 0.0;
        let mut norm_scale: f64 = 0.0;
        for term in &terms {
            time_scale = time_scale.max(term.coeff.frequency().abs());
            norm_scale += term.coeff.amplitude().abs() * inf_norm(&term.op);
        }
        let h = Self { space, terms, schedule: None, time_scale: time_scale.max(norm_scale) };
        h.spot_check_hermiticity(sample_window)?;
        Ok(h)
    }

    /// Hermiticity spot check at 16 pseudo-random times in the sample
    /// window (fixed seed, so builds are deterministic).
    fn spot_check_hermiticity(&self, window: f64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let window = if window > 0.0 { window } else { 1.0 };
        for _ in 0..16 {
            let t = rng.gen_range(0.0..window);
            let m = self.matrix_at(t);
            let scale = linalg::max_abs(&m);
            let deviation = linalg::hermiticity_deviation(&m);
            if scale > 0.0 && deviation > 1e-12 * scale {
                return Err(Error::NotHermitian { deviation, scale });
            }
        }
        Ok(())
    }

    pub fn with_sign_schedule(mut self, schedule: SignSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn schedule(&self) -> Option<&SignSchedule> {
        self.schedule.as_ref()
    }

    /// Dominant angular frequency; integrator steps resolve `2π` of this.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub(crate) fn sign_at(&self, t: f64) -> f64 {
        self.schedule.as_ref().map_or(1.0, |s| s.sign_at(t))
    }

    pub(crate) fn matrix_at(&self, t: f64) -> Array2<C64> {
        let sign = self.sign_at(t);
        let mut m = Array2::<C64>::zeros((self.space.dim(), self.space.dim()));
        for term in &self.terms {
            let mut c = term.coeff.at(t);
            if term.drive {
                c *= sign;
            }
            m.zip_mut_with(&term.op, |out, &op| *out += c * op);
        }
        m
    }

    /// Evaluate `H(t)` as an [`Operator`].
    pub fn evaluate(&self, t: f64) -> Operator {
        Operator::new(self.matrix_at(t), self.space.clone())
            .expect("terms are dimension-checked at construction")
    }
}

fn inf_norm(m: &Array2<C64>) -> f64 {
    let mut best: f64 = 0.0;
    for row in m.rows() {
        best = best.max(row.iter().map(|z| z.norm()).sum());
    }
    best
}

fn require_kind(cfg: &GateConfig, kind: GateKind, what: &str) -> Result<()> {
    if cfg.kind() != kind {
        return Err(Error::InvalidArgument(format!(
            "{what} requires a {kind:?} gate configuration"
        )));
    }
    Ok(())
}

fn require_space(space: &HilbertSpace, n_qubits: usize, min_modes: usize) -> Result<()> {
    if space.n_qubits() != n_qubits || space.n_modes() < min_modes {
        return Err(Error::SpaceMismatch(format!(
            "need {n_qubits} qubit(s) and >= {min_modes} mode(s), got {} and {}",
            space.n_qubits(),
            space.n_modes()
        )));
    }
    Ok(())
}

/// Spin operator of the gate axis embedded in `space`.
fn embedded_spin(cfg: &GateConfig, space: &HilbertSpace) -> Result<Array2<C64>> {
    let spin = spin_ops(space.n_qubits(), cfg.axis())?;
    Ok(embed(&spin, space, Subsystem::Qubits)?.into_matrix())
}

/// Ladder operators of one mode embedded in `space`.
fn embedded_ladder(space: &HilbertSpace, mode: usize) -> Result<(Array2<C64>, Array2<C64>)> {
    let dim = space.subsystem_dim(Subsystem::Mode(mode))?;
    let (low, raise) = ladder_ops(dim)?;
    Ok((
        embed(&low, space, Subsystem::Mode(mode))?.into_matrix(),
        embed(&raise, space, Subsystem::Mode(mode))?.into_matrix(),
    ))
}

fn push_term(terms: &mut Vec<Term>, op: Array2<C64>, coeff: Coefficient, drive: bool) {
    if coeff.amplitude() != 0.0 {
        terms.push(Term { op, coeff, drive });
    }
}

fn ideal_1q_terms(cfg: &GateConfig, space: &HilbertSpace) -> Result<Vec<Term>> {
    require_kind(cfg, GateKind::OneQubit, "ideal_1q")?;
    require_space(space, 1, 0)?;
    let spin = embedded_spin(cfg, space)?;
    let mut terms = Vec::new();
    push_term(&mut terms, spin, Coefficient::Constant(cfg.omega()), true);
    Ok(terms)
}

/// Ideal one-qubit gate `H = Ω σ_α`.
pub fn ideal_1q(cfg: &GateConfig, space: &HilbertSpace) -> Result<TimeDependentHamiltonian> {
    let terms = ideal_1q_terms(cfg, space)?;
    TimeDependentHamiltonian::from_terms(space.clone(), terms, cfg.gate_time())
}

/// One-qubit gate with a first-order drive inhomogeneity:
/// `H = Ω σ_α + Ω′ σ_α (a† e^{iω_a t} + a e^{−iω_a t})`.
pub fn error_1q_inhomo1(
    cfg: &GateConfig,
    channel: &ErrorChannel,
    space: &HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    let ErrorChannel::Inhomo1st { omega_prime, omega_a } = *channel else {
        return Err(Error::InvalidArgument("error_1q_inhomo1 needs an Inhomo1st channel".into()));
    };
    channel.validate()?;
    require_space(space, 1, 1)?;
    let mut terms = ideal_1q_terms(cfg, space)?;
    let spin = embedded_spin(cfg, space)?;
    let (low, raise) = embedded_ladder(space, 0)?;
    push_term(
        &mut terms,
        spin.dot(&raise),
        Coefficient::Exponential { amplitude: omega_prime, frequency: omega_a },
        false,
    );
    push_term(
        &mut terms,
        spin.dot(&low),
        Coefficient::Exponential { amplitude: omega_prime, frequency: -omega_a },
        false,
    );
    TimeDependentHamiltonian::from_terms(space.clone(), terms, cfg.gate_time())
}

/// One-qubit gate with a second-order drive inhomogeneity:
/// `H = Ω σ_α + Ω″ σ_α (2a†a + 1)`.
pub fn error_1q_inhomo2(
    cfg: &GateConfig,
    channel: &ErrorChannel,
    space: &HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    let ErrorChannel::Inhomo2nd { omega_dprime } = *channel else {
        return Err(Error::InvalidArgument("error_1q_inhomo2 needs an Inhomo2nd channel".into()));
    };
    channel.validate()?;
    require_space(space, 1, 1)?;
    let mut terms = ideal_1q_terms(cfg, space)?;
    let spin = embedded_spin(cfg, space)?;
    let (low, raise) = embedded_ladder(space, 0)?;
    let two_n_plus_1 = raise.dot(&low).mapv(|z| z * 2.0) + Array2::<C64>::eye(space.dim());
    push_term(
        &mut terms,
        spin.dot(&two_n_plus_1),
        Coefficient::Constant(omega_dprime),
        false,
    );
    TimeDependentHamiltonian::from_terms(space.clone(), terms, cfg.gate_time())
}

/// One-qubit gate with a cross-Kerr (spin-dependent beam-splitter) error:
/// `H = Ω σ_α + Ω″_ab σ_α (a†b e^{iω_ab t} + a b† e^{−iω_ab t})`.
pub fn error_1q_crosskerr(
    cfg: &GateConfig,
    channel: &ErrorChannel,
    space: &HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    let ErrorChannel::CrossKerr { omega_dprime_ab, omega_ab } = *channel else {
        return Err(Error::InvalidArgument("error_1q_crosskerr needs a CrossKerr channel".into()));
    };
    channel.validate()?;
    require_space(space, 1, 2)?;
    let mut terms = ideal_1q_terms(cfg, space)?;
    let spin = embedded_spin(cfg, space)?;
    let (low_a, raise_a) = embedded_ladder(space, 0)?;
    let (low_b, raise_b) = embedded_ladder(space, 1)?;
    push_term(
        &mut terms,
        spin.dot(&raise_a).dot(&low_b),
        Coefficient::Exponential { amplitude: omega_dprime_ab, frequency: omega_ab },
        false,
    );
    push_term(
        &mut terms,
        spin.dot(&low_a).dot(&raise_b),
        Coefficient::Exponential { amplitude: omega_dprime_ab, frequency: -omega_ab },
        false,
    );
    TimeDependentHamiltonian::from_terms(space.clone(), terms, cfg.gate_time())
}

fn ideal_2q_terms(cfg: &GateConfig, space: &HilbertSpace) -> Result<Vec<Term>> {
    require_kind(cfg, GateKind::TwoQubit, "ideal_2q")?;
    require_space(space, 2, 1)?;
    let spin = embedded_spin(cfg, space)?;
    let (low, raise) = embedded_ladder(space, 0)?;
    let mut terms = Vec::new();
    push_term(
        &mut terms,
        spin.dot(&raise),
        Coefficient::Exponential { amplitude: cfg.omega(), frequency: cfg.detuning() },
        true,
    );
    push_term(
        &mut terms,
        spin.dot(&low),
        Coefficient::Exponential { amplitude: cfg.omega(), frequency: -cfg.detuning() },
        true,
    );
    Ok(terms)
}

/// Ideal two-qubit geometric phase gate
/// `H = Ω S_α (a† e^{iΔt} + a e^{−iΔt})`.
pub fn ideal_2q(cfg: &GateConfig, space: &HilbertSpace) -> Result<TimeDependentHamiltonian> {
    let terms = ideal_2q_terms(cfg, space)?;
    TimeDependentHamiltonian::from_terms(space.clone(), terms, cfg.gate_time())
}

/// Two-qubit gate plus one coherent error term (static motional shift,
/// trap anharmonicity, or gradient-field inhomogeneity).
pub fn error_2q(
    cfg: &GateConfig,
    channel: &ErrorChannel,
    space: &HilbertSpace,
) -> Result<TimeDependentHamiltonian> {
    channel.validate()?;
    let mut terms = ideal_2q_terms(cfg, space)?;
    let (low, raise) = embedded_ladder(space, 0)?;
    let number = raise.dot(&low);
    match *channel {
        ErrorChannel::MotionalShift2Q { delta } => {
            push_term(&mut terms, number, Coefficient::Constant(delta), false);
        }
        ErrorChannel::Anharmonic { epsilon } => {
            let op = &number + &number.dot(&number);
            push_term(&mut terms, op, Coefficient::Constant(6.0 * epsilon), false);
        }
        ErrorChannel::GradInhomo2Q { omega_2g_dprime } => {
            let spin = embedded_spin(cfg, space)?;
            let up = raise.dot(&low).dot(&raise); // a†aa†
            let down = low.dot(&raise).dot(&low); // aa†a
            push_term(
                &mut terms,
                spin.dot(&up),
                Coefficient::Exponential {
                    amplitude: 3.0 * omega_2g_dprime,
                    frequency: cfg.detuning(),
                },
                true,
            );
            push_term(
                &mut terms,
                spin.dot(&down),
                Coefficient::Exponential {
                    amplitude: 3.0 * omega_2g_dprime,
                    frequency: -cfg.detuning(),
                },
                true,
            );
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "error_2q applies to coherent two-qubit channels, got {}",
                channel.name()
            )));
        }
    }
    TimeDependentHamiltonian::from_terms(space.clone(), terms, cfg.gate_time())
}

/// One-qubit gate with a static qubit frequency shift:
/// `H = Ω σ_x + δ σ_z` on the bare qubit (drive polarized along x).
pub fn error_1q_qubit_shift(
    cfg: &GateConfig,
    channel: &ErrorChannel,
) -> Result<TimeDependentHamiltonian> {
    let ErrorChannel::Qubit1QShift { delta } = *channel else {
        return Err(Error::InvalidArgument(
            "error_1q_qubit_shift needs a Qubit1QShift channel".into(),
        ));
    };
    channel.validate()?;
    require_kind(cfg, GateKind::OneQubit, "error_1q_qubit_shift")?;
    if cfg.axis() != SpinAxis::X {
        return Err(Error::InvalidArgument(
            "the qubit-shift channel is defined for an x-polarized drive".into(),
        ));
    }
    let space = HilbertSpace::qubit_only(1)?;
    let sx = spin_ops(1, SpinAxis::X)?.into_matrix();
    let sz = spin_ops(1, SpinAxis::Z)?.into_matrix();
    let mut terms = Vec::new();
    push_term(&mut terms, sx, Coefficient::Constant(cfg.omega()), true);
    push_term(&mut terms, sz, Coefficient::Constant(delta), false);
    TimeDependentHamiltonian::from_terms(space, terms, cfg.gate_time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::StateVector;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn one_qubit_cfg() -> GateConfig {
        GateConfig::one_qubit(1.0, SpinAxis::X).unwrap()
    }

    #[test]
    fn gate_config_invariants() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 4).unwrap();
        assert_abs_diff_eq!(cfg.detuning() * cfg.gate_time(), 2.0 * PI * 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cfg.geometric_phase(), PI / 8.0, epsilon = 1e-12);
        assert!(GateConfig::two_qubit(0.0, SpinAxis::X, 1).is_err());
        assert!(GateConfig::one_qubit(-1.0, SpinAxis::X).is_err());

        let cfg1 = one_qubit_cfg();
        assert_abs_diff_eq!(cfg1.omega() * cfg1.gate_time(), PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn ideal_1q_is_time_independent() {
        let space = HilbertSpace::new(1, &[4]).unwrap();
        let h = ideal_1q(&one_qubit_cfg(), &space).unwrap();
        let m0 = h.matrix_at(0.0);
        let m1 = h.matrix_at(0.37);
        assert!(linalg::max_abs(&(m0.clone() - m1)) == 0.0);
        // ⟨↓|H|↓⟩ = 0 for α = x
        let down = StateVector::fock_basis(&space, &[0]).unwrap();
        let h0 = h.evaluate(0.0);
        assert_abs_diff_eq!(h0.expectation(&down).unwrap().re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inhomo1_matches_stated_form_at_t0_and_flips() {
        let cfg = one_qubit_cfg();
        let space = HilbertSpace::new(1, &[5]).unwrap();
        let omega_a = 20.0;
        let ch = ErrorChannel::Inhomo1st { omega_prime: 0.01, omega_a };
        let h = error_1q_inhomo1(&cfg, &ch, &space).unwrap();

        // H(0) = Ω σ_x + Ω′ σ_x (a† + a)
        let spin = embedded_spin(&cfg, &space).unwrap();
        let (low, raise) = embedded_ladder(&space, 0).unwrap();
        let expect0 = spin.mapv(|z| z * 1.0)
            + spin.dot(&(&raise + &low)).mapv(|z| z * 0.01);
        assert!(linalg::max_abs(&(h.matrix_at(0.0) - expect0)) < 1e-14);

        // at t = π/ω_a the motional term changes sign
        let expect_pi = spin.mapv(|z| z * 1.0)
            - spin.dot(&(&raise + &low)).mapv(|z| z * 0.01);
        assert!(linalg::max_abs(&(h.matrix_at(PI / omega_a) - expect_pi)) < 1e-13);
    }

    #[test]
    fn zero_strength_channels_reproduce_ideal_bitwise() {
        let cfg = one_qubit_cfg();
        let space = HilbertSpace::new(1, &[5]).unwrap();
        let ideal = ideal_1q(&cfg, &space).unwrap();
        let ch = ErrorChannel::Inhomo1st { omega_prime: 0.0, omega_a: 20.0 };
        let h = error_1q_inhomo1(&cfg, &ch, &space).unwrap();
        for &t in &[0.0, 0.123, 0.5, 0.777] {
            let a = ideal.matrix_at(t);
            let b = h.matrix_at(t);
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x == y));
        }

        let cfg2 = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space2 = HilbertSpace::new(2, &[6]).unwrap();
        let ideal2 = ideal_2q(&cfg2, &space2).unwrap();
        for ch in [
            ErrorChannel::MotionalShift2Q { delta: 0.0 },
            ErrorChannel::Anharmonic { epsilon: 0.0 },
            ErrorChannel::GradInhomo2Q { omega_2g_dprime: 0.0 },
        ] {
            let h = error_2q(&cfg2, &ch, &space2).unwrap();
            for &t in &[0.0, 0.3, 1.1] {
                let a = ideal2.matrix_at(t);
                let b = h.matrix_at(t);
                assert!(a.iter().zip(b.iter()).all(|(x, y)| x == y));
            }
        }
    }

    #[test]
    fn inhomo2_is_diagonal_in_fock_and_commutes() {
        let cfg = one_qubit_cfg();
        let space = HilbertSpace::new(1, &[6]).unwrap();
        let omega_dprime = 1e-3;
        let ch = ErrorChannel::Inhomo2nd { omega_dprime };
        let h = error_1q_inhomo2(&cfg, &ch, &space).unwrap();
        let ideal = ideal_1q(&cfg, &space).unwrap();
        let err = h.matrix_at(0.0) - ideal.matrix_at(0.0);
        // ⟨↑, n| err |↑, n⟩ = Ω″(2n+1) on the +1 eigenrow of σ_x... check
        // instead via the full matrix: err = Ω″ σ_x ⊗ (2N+1), so err² is
        // diagonal with entries Ω″²(2n+1)².
        let err2 = err.dot(&err);
        for n in 0..6 {
            let want = omega_dprime.powi(2) * (2.0 * n as f64 + 1.0).powi(2);
            for q in 0..2 {
                assert_abs_diff_eq!(err2[(q * 6 + n, q * 6 + n)].re, want, epsilon = 1e-15);
            }
        }
        // commutes with the ideal part at all times
        let comm = linalg::commutator(&ideal.matrix_at(0.4), &err);
        assert!(linalg::max_abs(&comm) < 1e-12);
    }

    #[test]
    fn crosskerr_conserves_total_phonons() {
        let cfg = one_qubit_cfg();
        let space = HilbertSpace::new(1, &[4, 4]).unwrap();
        let ch = ErrorChannel::CrossKerr { omega_dprime_ab: 0.02, omega_ab: 10.0 };
        let h = error_1q_crosskerr(&cfg, &ch, &space).unwrap();
        let (low_a, raise_a) = embedded_ladder(&space, 0).unwrap();
        let (low_b, raise_b) = embedded_ladder(&space, 1).unwrap();
        let total_n = raise_a.dot(&low_a) + raise_b.dot(&low_b);
        for &t in &[0.0, 0.21, 0.9, 1.7] {
            let comm = linalg::commutator(&h.matrix_at(t), &total_n);
            assert!(linalg::max_abs(&comm) < 1e-12);
        }
    }

    #[test]
    fn static_shift_error_term_is_delta_n() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[5]).unwrap();
        let delta = 0.05;
        let h = error_2q(&cfg, &ErrorChannel::MotionalShift2Q { delta }, &space).unwrap();
        let ideal = ideal_2q(&cfg, &space).unwrap();
        let err = h.matrix_at(0.62) - ideal.matrix_at(0.62);
        for q in 0..4 {
            for n in 0..5 {
                let idx = q * 5 + n;
                assert_abs_diff_eq!(err[(idx, idx)].re, delta * n as f64, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn anharmonic_error_term_diagonal_values() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[5]).unwrap();
        let eps = 1e-3;
        let h = error_2q(&cfg, &ErrorChannel::Anharmonic { epsilon: eps }, &space).unwrap();
        let ideal = ideal_2q(&cfg, &space).unwrap();
        let err = h.matrix_at(0.1) - ideal.matrix_at(0.1);
        for n in 0..5 {
            let nn = n as f64;
            assert_abs_diff_eq!(
                err[(n, n)].re,
                6.0 * eps * (nn + nn * nn),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn channel_gate_kind_mismatch_is_rejected() {
        let cfg1 = one_qubit_cfg();
        let space2 = HilbertSpace::new(2, &[4]).unwrap();
        assert!(error_2q(&cfg1, &ErrorChannel::MotionalShift2Q { delta: 0.1 }, &space2).is_err());
        let cfg2 = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        assert!(error_2q(&cfg2, &ErrorChannel::Heating { ndot: 0.1 }, &space2).is_err());
    }

    #[test]
    fn qubit_shift_eigenvalues() {
        // δ = Ω gives eigenvalues ±√2·Ω.
        let cfg = one_qubit_cfg();
        let h = error_1q_qubit_shift(&cfg, &ErrorChannel::Qubit1QShift { delta: 1.0 }).unwrap();
        let eigs = linalg::hermitian_eigenvalues(&h.matrix_at(0.0));
        assert_abs_diff_eq!(eigs[0], -(2f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], (2f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn sign_schedule_lookup() {
        let s = SignSchedule::new(0.5, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        assert_eq!(s.sign_at(0.1), 1.0);
        assert_eq!(s.sign_at(0.6), -1.0);
        assert_eq!(s.sign_at(1.2), -1.0);
        assert_eq!(s.sign_at(1.9), 1.0);
        // endpoint clamps into the last segment
        assert_eq!(s.sign_at(2.0), 1.0);
        assert_eq!(s.boundaries(), vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn hamiltonians_are_hermitian_at_sampled_times() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::Y, 2).unwrap();
        let space = HilbertSpace::new(2, &[6]).unwrap();
        let h = error_2q(&cfg, &ErrorChannel::GradInhomo2Q { omega_2g_dprime: 0.01 }, &space)
            .unwrap();
        for &t in &[0.0, 0.17, 0.71, 1.3] {
            assert!(linalg::is_hermitian(&h.matrix_at(t), 1e-12));
        }
    }
}
