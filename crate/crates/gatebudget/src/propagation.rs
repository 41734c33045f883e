//! Numerical propagation: Schrödinger evolution for pure states, Lindblad
//! evolution for Markovian baths, Walsh sign schedules, and an
//! ensemble-of-baths cross-validation mode.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonians::{Coefficient, SignSchedule, Term, TimeDependentHamiltonian};
use crate::linalg;
use crate::operators::ladder_ops;
use crate::space::Subsystem;
use crate::states::{DensityMatrix, StateVector};
use crate::C64;

/// Allowed norm (pure) / trace (Lindblad) drift over a full run.
pub const DRIFT_TOL: f64 = 1e-8;
/// Step-doubling agreement required when `convergence_check` is on.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Fixed-step classic Runge-Kutta.
    RungeKutta4,
    /// Per-step exponential of the midpoint Hamiltonian (norm-preserving;
    /// exact for time-independent Hamiltonians).
    ExpMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Steps used to resolve one period of the fastest angular scale in
    /// `H(t)`. Minimum 50.
    pub steps_per_fastest_period: usize,
    pub scheme: Scheme,
    /// Re-run at double the step count and require agreement within
    /// [`CONVERGENCE_TOL`].
    pub convergence_check: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps_per_fastest_period: 200, scheme: Scheme::RungeKutta4, convergence_check: false }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_fastest_period < 50 {
            return Err(Error::InvalidArgument(format!(
                "steps_per_fastest_period must be >= 50, got {}",
                self.steps_per_fastest_period
            )));
        }
        Ok(())
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps_per_fastest_period = steps;
        self
    }

    pub fn checked(mut self) -> Self {
        self.convergence_check = true;
        self
    }
}

/// Row-compressed view of a dense operator; the propagators apply terms in
/// O(nonzeros) instead of O(dim²).
struct CompressedOp {
    dim: usize,
    row_offsets: Vec<usize>,
    entries: Vec<(usize, C64)>,
}

impl CompressedOp {
    fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let mut row_offsets = Vec::with_capacity(dim + 1);
        let mut entries = Vec::new();
        row_offsets.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((j, v));
                }
            }
            row_offsets.push(entries.len());
        }
        Self { dim, row_offsets, entries }
    }

    /// `y += scale · Op · x`
    fn apply_vec(&self, scale: C64, x: &[C64], y: &mut [C64]) {
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for &(j, v) in &self.entries[self.row_offsets[i]..self.row_offsets[i + 1]] {
                acc += v * x[j];
            }
            y[i] += scale * acc;
        }
    }

    /// `out += scale · Op · rho` (row-major slices of dim×dim matrices)
    fn apply_left(&self, scale: C64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for &(k, v) in &self.entries[self.row_offsets[i]..self.row_offsets[i + 1]] {
                let sv = scale * v;
                let rho_row = &rho[k * d..(k + 1) * d];
                for (o, r) in out_row.iter_mut().zip(rho_row) {
                    *o += sv * r;
                }
            }
        }
    }

    /// `out += scale · rho · Op`
    fn apply_right(&self, scale: C64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let rho_row = &rho[i * d..(i + 1) * d];
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let rik = rho_row[k];
                if rik == C64::new(0.0, 0.0) {
                    continue;
                }
                let s = scale * rik;
                for &(j, v) in &self.entries[self.row_offsets[k]..self.row_offsets[k + 1]] {
                    out_row[j] += s * v;
                }
            }
        }
    }
}

struct CompiledTerm {
    op: CompressedOp,
    coeff: Coefficient,
    drive: bool,
}

fn compile_terms(h: &TimeDependentHamiltonian) -> Vec<CompiledTerm> {
    h.terms()
        .iter()
        .map(|t: &Term| CompiledTerm {
            op: CompressedOp::from_dense(&t.op),
            coeff: t.coeff,
            drive: t.drive,
        })
        .collect()
}

/// Integration grid: steps aligned exactly to sign-schedule boundaries.
fn segment_grid(
    h: &TimeDependentHamiltonian,
    t_g: f64,
    cfg: &IntegratorConfig,
    doubled: bool,
) -> Result<Vec<(f64, f64, usize)>> {
    let mut boundaries = vec![0.0];
    if let Some(s) = h.schedule() {
        let total = s.total_duration();
        if (total - t_g).abs() > 1e-9 * t_g.max(total) {
            return Err(Error::InvalidArgument(format!(
                "sign schedule covers {total}, gate time is {t_g}"
            )));
        }
        boundaries.extend(s.boundaries().into_iter().filter(|&b| b < t_g));
    }
    boundaries.push(t_g);

    let scale = h.time_scale();
    let min_steps = (cfg.steps_per_fastest_period / 4).max(16);
    let mut segments = Vec::new();
    for w in boundaries.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let mut n = if scale > 0.0 {
            let dt_target = 2.0 * std::f64::consts::PI
                / (scale * cfg.steps_per_fastest_period as f64);
            ((len / dt_target).ceil() as usize).max(min_steps)
        } else {
            min_steps
        };
        if doubled {
            n *= 2;
        }
        segments.push((a, b, n));
    }
    Ok(segments)
}

/// dψ/dt = −i Σ_j s_j(t) c_j(t) M_j ψ
fn schrodinger_rhs(
    terms: &[CompiledTerm],
    sign: f64,
    t: f64,
    psi: &[C64],
    out: &mut [C64],
) {
    out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    for term in terms {
        let mut c = term.coeff.at(t);
        if term.drive {
            c *= sign;
        }
        term.op.apply_vec(C64::new(0.0, -1.0) * c, psi, out);
    }
}

fn run_pure(
    h: &TimeDependentHamiltonian,
    terms: &[CompiledTerm],
    psi0: &Array1<C64>,
    t_g: f64,
    cfg: &IntegratorConfig,
    doubled: bool,
) -> Result<Array1<C64>> {
    let dim = psi0.len();
    let mut psi: Vec<C64> = psi0.to_vec();
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut work = k1.clone();

    for (a, b, n) in segment_grid(h, t_g, cfg, doubled)? {
        let dt = (b - a) / n as f64;
        // The drive sign is constant inside one segment.
        let sign = h.sign_at(0.5 * (a + b));
        for step in 0..n {
            let t = a + step as f64 * dt;
            match cfg.scheme {
                Scheme::RungeKutta4 => {
                    schrodinger_rhs(terms, sign, t, &psi, &mut k1);
                    for i in 0..dim {
                        work[i] = psi[i] + 0.5 * dt * k1[i];
                    }
                    schrodinger_rhs(terms, sign, t + 0.5 * dt, &work, &mut k2);
                    for i in 0..dim {
                        work[i] = psi[i] + 0.5 * dt * k2[i];
                    }
                    schrodinger_rhs(terms, sign, t + 0.5 * dt, &work, &mut k3);
                    for i in 0..dim {
                        work[i] = psi[i] + dt * k3[i];
                    }
                    schrodinger_rhs(terms, sign, t + dt, &work, &mut k4);
                    for i in 0..dim {
                        psi[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
                    }
                }
                Scheme::ExpMidpoint => {
                    exp_step(terms, sign, t + 0.5 * dt, dt, h.time_scale(), &mut psi, &mut work);
                }
            }
        }
    }
    Ok(Array1::from_vec(psi))
}

/// ψ ← exp(−i·dt·H(t_mid))·ψ by a scaled Taylor series of the action.
fn exp_step(
    terms: &[CompiledTerm],
    sign: f64,
    t_mid: f64,
    dt: f64,
    scale: f64,
    psi: &mut [C64],
    work: &mut [C64],
) {
    let substeps = (scale * dt).ceil().max(1.0) as usize;
    let sub_dt = dt / substeps as f64;
    let dim = psi.len();
    let mut term_vec = vec![C64::new(0.0, 0.0); dim];
    for _ in 0..substeps {
        term_vec.copy_from_slice(psi);
        let psi_scale = psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for order in 1..=48 {
            // work = H(t_mid)·term (with the −i folded into the prefactor)
            work.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for term in terms {
                let mut c = term.coeff.at(t_mid);
                if term.drive {
                    c *= sign;
                }
                term.op.apply_vec(c, &term_vec, work);
            }
            let factor = C64::new(0.0, -sub_dt) / order as f64;
            let mut largest: f64 = 0.0;
            for i in 0..dim {
                term_vec[i] = factor * work[i];
                psi[i] += term_vec[i];
                largest = largest.max(term_vec[i].norm());
            }
            if largest < 1e-18 * psi_scale.max(1e-300) {
                break;
            }
        }
    }
}

/// Propagate a pure state through `H(t)` for `t_g`.
///
/// The final norm may drift by at most [`DRIFT_TOL`] (the result is then
/// renormalized). With `convergence_check`, the run is repeated at double
/// the step count and the two results must agree within
/// [`CONVERGENCE_TOL`] in the 2-norm.
pub fn propagate_pure(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t_g: f64,
    cfg: &IntegratorConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if psi0.space() != h.space() {
        return Err(Error::SpaceMismatch("propagate_pure initial state".into()));
    }
    if !(t_g.is_finite() && t_g > 0.0) {
        return Err(Error::InvalidArgument(format!("gate time must be > 0, got {t_g}")));
    }
    let terms = compile_terms(h);
    let mut psi = run_pure(h, &terms, psi0.amplitudes(), t_g, cfg, false)?;
    if cfg.convergence_check {
        let psi2 = run_pure(h, &terms, psi0.amplitudes(), t_g, cfg, true)?;
        let delta = psi
            .iter()
            .zip(psi2.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if delta > CONVERGENCE_TOL {
            return Err(Error::StepSize { delta, limit: CONVERGENCE_TOL });
        }
        psi = psi2;
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > DRIFT_TOL {
        return Err(Error::IntegratorDiverged(format!(
            "norm drifted to {norm} (allowed {DRIFT_TOL:.1e})"
        )));
    }
    let psi = psi.mapv(|z| z / norm);
    StateVector::new(psi, h.space().clone())
}

/// Markovian bath acting on motional mode 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathKind {
    /// Phonon heating: jumps `a` and `a†`, each at rate ṅ.
    Heating,
    /// Motional dephasing: jump `a†a` at rate η.
    Dephasing,
}

/// Flat-band classical noise behind a Markovian rate: coupling `g` and
/// constant spectral density `S` at the band reference frequency. The
/// band half-width is `1/S`, so the rate conversions are
/// `ṅ = π g² S` (heating) and `η = π g² S / 2` (dephasing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNoise {
    pub coupling: f64,
    pub spectral_density: f64,
}

impl SpectralNoise {
    pub fn band_halfwidth(&self) -> f64 {
        1.0 / self.spectral_density
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub kind: BathKind,
    pub rate: f64,
    pub spectral: Option<SpectralNoise>,
}

impl BathSpec {
    pub fn heating(ndot: f64) -> Result<Self> {
        Self::build(BathKind::Heating, ndot, None)
    }

    pub fn dephasing(eta: f64) -> Result<Self> {
        Self::build(BathKind::Dephasing, eta, None)
    }

    /// Heating bath specified by its flat-band noise; `ṅ = π g² S`.
    pub fn heating_spectral(coupling: f64, spectral_density: f64) -> Result<Self> {
        let noise = SpectralNoise { coupling, spectral_density };
        let rate = std::f64::consts::PI * coupling * coupling * spectral_density;
        Self::build(BathKind::Heating, rate, Some(noise))
    }

    /// Dephasing bath specified by its flat-band noise; `η = π g² S / 2`.
    pub fn dephasing_spectral(coupling: f64, spectral_density: f64) -> Result<Self> {
        let noise = SpectralNoise { coupling, spectral_density };
        let rate = std::f64::consts::PI * coupling * coupling * spectral_density / 2.0;
        Self::build(BathKind::Dephasing, rate, Some(noise))
    }

    fn build(kind: BathKind, rate: f64, spectral: Option<SpectralNoise>) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bath rate must be finite and >= 0, got {rate}"
            )));
        }
        if let Some(s) = &spectral {
            if !(s.coupling.is_finite() && s.spectral_density.is_finite())
                || s.spectral_density <= 0.0
                || s.coupling < 0.0
            {
                return Err(Error::InvalidArgument(
                    "spectral noise needs coupling >= 0 and spectral density > 0".into(),
                ));
            }
        }
        Ok(Self { kind, rate, spectral })
    }
}

/// Propagate the Lindblad master equation `ρ̇ = −i[H(t),ρ] + D(ρ)` with the
/// bath's dissipator on mode 0.
///
/// Heating: `ṅ(a†ρa + aρa† − ½{a†a + aa†, ρ})`.
/// Dephasing: `η(NρN − ½{N², ρ})` with `N = a†a`.
pub fn propagate_lindblad(
    h: &TimeDependentHamiltonian,
    bath: &BathSpec,
    rho0: &DensityMatrix,
    t_g: f64,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    cfg.validate()?;
    if rho0.space() != h.space() {
        return Err(Error::SpaceMismatch("propagate_lindblad initial state".into()));
    }
    if !(t_g.is_finite() && t_g > 0.0) {
        return Err(Error::InvalidArgument(format!("gate time must be > 0, got {t_g}")));
    }
    let space = h.space().clone();
    if space.n_modes() == 0 {
        return Err(Error::SpaceMismatch("Lindblad bath needs a motional mode".into()));
    }

    let ham_terms = compile_terms(h);

    // Jump operators embedded in the composite space.
    let fock = space.subsystem_dim(Subsystem::Mode(0))?;
    let (low, raise) = ladder_ops(fock)?;
    let low_full = crate::operators::embed(&low, &space, Subsystem::Mode(0))?.into_matrix();
    let raise_full = crate::operators::embed(&raise, &space, Subsystem::Mode(0))?.into_matrix();
    let (jumps, anticomm): (Vec<Array2<C64>>, Array2<C64>) = match bath.kind {
        BathKind::Heating => {
            let k = raise_full.dot(&low_full) + low_full.dot(&raise_full);
            (vec![low_full, raise_full], k)
        }
        BathKind::Dephasing => {
            let n = raise_full.dot(&low_full);
            let n2 = n.dot(&n);
            (vec![n], n2)
        }
    };
    let jump_c: Vec<(CompressedOp, CompressedOp)> = jumps
        .iter()
        .map(|l| (CompressedOp::from_dense(l), CompressedOp::from_dense(&linalg::dagger(l))))
        .collect();
    let anticomm_c = CompressedOp::from_dense(&anticomm);
    let rate = bath.rate;

    let dim = space.dim();
    let n_elems = dim * dim;
    let mut rho: Vec<C64> = rho0.matrix().iter().copied().collect();
    let mut k1 = vec![C64::new(0.0, 0.0); n_elems];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    let mut jump_buf = k1.clone();

    let mut rhs = |t: f64, sign: f64, r: &[C64], out: &mut [C64], buf: &mut [C64]| {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        // −i[H, ρ]
        for term in &ham_terms {
            let mut c = term.coeff.at(t);
            if term.drive {
                c *= sign;
            }
            term.op.apply_left(C64::new(0.0, -1.0) * c, r, out);
            term.op.apply_right(C64::new(0.0, 1.0) * c, r, out);
        }
        if rate > 0.0 {
            let r_c = C64::new(rate, 0.0);
            for (l, l_dag) in &jump_c {
                buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                l.apply_left(r_c, r, buf);
                l_dag.apply_right(C64::new(1.0, 0.0), buf, out);
            }
            anticomm_c.apply_left(-0.5 * r_c, r, out);
            anticomm_c.apply_right(-0.5 * r_c, r, out);
        }
    };

    for (a, b, n) in segment_grid(h, t_g, cfg, false)? {
        let dt = (b - a) / n as f64;
        let sign = h.sign_at(0.5 * (a + b));
        for step in 0..n {
            let t = a + step as f64 * dt;
            rhs(t, sign, &rho, &mut k1, &mut jump_buf);
            for i in 0..n_elems {
                stage[i] = rho[i] + 0.5 * dt * k1[i];
            }
            rhs(t + 0.5 * dt, sign, &stage, &mut k2, &mut jump_buf);
            for i in 0..n_elems {
                stage[i] = rho[i] + 0.5 * dt * k2[i];
            }
            rhs(t + 0.5 * dt, sign, &stage, &mut k3, &mut jump_buf);
            for i in 0..n_elems {
                stage[i] = rho[i] + dt * k3[i];
            }
            rhs(t + dt, sign, &stage, &mut k4, &mut jump_buf);
            for i in 0..n_elems {
                rho[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            }
        }
    }

    let mut rho = Array2::from_shape_vec((dim, dim), rho).expect("shape is consistent");

    let trace: C64 = rho.diag().iter().sum();
    if (trace.re - 1.0).abs() > DRIFT_TOL || trace.im.abs() > DRIFT_TOL {
        return Err(Error::IntegratorDiverged(format!(
            "trace drifted to {trace} (allowed {DRIFT_TOL:.1e})"
        )));
    }
    let herm_dev = linalg::hermiticity_deviation(&rho);
    if herm_dev > 1e-10 {
        return Err(Error::IntegratorDiverged(format!(
            "Hermiticity drifted by {herm_dev:.3e} (allowed 1e-10)"
        )));
    }
    for k in 0..dim {
        let p = rho[(k, k)].re;
        if !(-DRIFT_TOL..=1.0 + DRIFT_TOL).contains(&p) {
            return Err(Error::IntegratorDiverged(format!(
                "population {p} outside [-1e-8, 1+1e-8]"
            )));
        }
    }
    // Exact unit trace and Hermitian symmetry for the returned state.
    rho.mapv_inplace(|z| z / trace);
    let rho_dag = linalg::dagger(&rho);
    let rho = (rho + rho_dag).mapv(|z| 0.5 * z);
    DensityMatrix::with_eig_tolerance(rho, space, 1e-6)
}

/// Walsh sequence of order k: 2^k equal segments whose drive signs follow
/// the recursive construction "repeat the previous order, then repeat it
/// negated".
#[derive(Debug, Clone, PartialEq)]
pub struct WalshSchedule {
    k: u32,
    loop_time: f64,
}

impl WalshSchedule {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn loop_time(&self) -> f64 {
        self.loop_time
    }

    pub fn segment_count(&self) -> usize {
        1usize << self.k
    }

    pub fn total_duration(&self) -> f64 {
        self.loop_time * self.segment_count() as f64
    }

    pub fn signs(&self) -> Vec<f64> {
        let mut signs = vec![1.0];
        for _ in 0..self.k {
            let negated: Vec<f64> = signs.iter().map(|s| -s).collect();
            signs.extend(negated);
        }
        signs
    }

    pub fn to_sign_schedule(&self) -> SignSchedule {
        SignSchedule::new(self.loop_time, self.signs()).expect("loop_time validated")
    }
}

/// Build the Walsh schedule of order `k` with the given per-segment
/// duration (one phase-space loop).
pub fn walsh_sign_schedule(k: u32, loop_time: f64) -> Result<WalshSchedule> {
    if !(loop_time.is_finite() && loop_time > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loop_time must be > 0, got {loop_time}"
        )));
    }
    if k > 16 {
        return Err(Error::InvalidArgument("Walsh order above 16 is not supported".into()));
    }
    Ok(WalshSchedule { k, loop_time })
}

/// Monte-Carlo fidelity over a flat band of classical bath frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleFidelity {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Average gate fidelity over a seeded ensemble of deterministic bath
/// drives, the spectral-average counterpart of [`propagate_lindblad`].
///
/// Heating samples add `g(a† e^{iω′t} + a e^{−iω′t})` with the detuning
/// from the mode frequency `ω′` drawn uniformly from `[−1/S, 1/S]`;
/// dephasing samples add `g·cos(ωt)·a†a` with `ω` uniform in `[0, 1/S]`.
/// With the conversions on [`BathSpec`], the mean fidelity reproduces the
/// matching Lindblad fidelity up to sampling error.
pub fn propagate_bath_ensemble(
    h_gate: &TimeDependentHamiltonian,
    bath: &BathSpec,
    psi0: &StateVector,
    ideal_qubit_target: &StateVector,
    t_g: f64,
    n_samples: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<EnsembleFidelity> {
    let spectral = bath.spectral.ok_or_else(|| {
        Error::MissingSpectral("ensemble propagation needs coupling and spectral density".into())
    })?;
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "ensemble estimates need n_samples >= 100, got {n_samples}"
        )));
    }
    let space = h_gate.space();
    if space.n_modes() == 0 {
        return Err(Error::SpaceMismatch("bath ensemble needs a motional mode".into()));
    }
    let fock = space.subsystem_dim(Subsystem::Mode(0))?;
    let (low, raise) = ladder_ops(fock)?;
    let low_full = crate::operators::embed(&low, space, Subsystem::Mode(0))?.into_matrix();
    let raise_full = crate::operators::embed(&raise, space, Subsystem::Mode(0))?.into_matrix();
    let number_full = raise_full.dot(&low_full);

    let halfwidth = spectral.band_halfwidth();
    let g = spectral.coupling;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<f64> = (0..n_samples)
        .map(|_| match bath.kind {
            BathKind::Heating => rng.gen_range(-halfwidth..halfwidth),
            BathKind::Dephasing => rng.gen_range(0.0..halfwidth),
        })
        .collect();

    // Per-sample runs skip the doubling check; the norm guard still applies.
    let sample_cfg = IntegratorConfig { convergence_check: false, ..*cfg };

    let fidelities: Vec<Result<f64>> = freqs
        .par_iter()
        .map(|&freq| {
            let extra = match bath.kind {
                BathKind::Heating => vec![
                    Term {
                        op: raise_full.clone(),
                        coeff: Coefficient::Exponential { amplitude: g, frequency: freq },
                        drive: false,
                    },
                    Term {
                        op: low_full.clone(),
                        coeff: Coefficient::Exponential { amplitude: g, frequency: -freq },
                        drive: false,
                    },
                ],
                BathKind::Dephasing => vec![Term {
                    op: number_full.clone(),
                    coeff: Coefficient::Cosine { amplitude: g, frequency: freq },
                    drive: false,
                }],
            };
            let h_sample = h_gate.with_extra_terms(extra, t_g)?;
            let psi = propagate_pure(&h_sample, psi0, t_g, &sample_cfg)?;
            crate::harness::fidelity_pure(&psi, ideal_qubit_target)
        })
        .collect();

    let mut values = Vec::with_capacity(n_samples);
    for f in fidelities {
        values.push(f?);
    }
    let mean = values.iter().sum::<f64>() / n_samples as f64;
    let var = if n_samples > 1 {
        values.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n_samples as f64 - 1.0)
    } else {
        0.0
    };
    let std_error = (var / n_samples as f64).sqrt();
    Ok(EnsembleFidelity { mean, std_error, n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{
        error_1q_qubit_shift, error_2q, ideal_1q, ideal_2q, ErrorChannel, GateConfig,
    };
    use crate::operators::{embed, spin_ops, SpinAxis};
    use crate::space::HilbertSpace;
    use crate::states::StateVector;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn down_with_fock(space: &HilbertSpace, n: usize) -> StateVector {
        let down = StateVector::qubit_basis(space.n_qubits(), 0).unwrap();
        StateVector::compose(&down, space, &[n]).unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity_evolution() {
        let space = HilbertSpace::new(1, &[3]).unwrap();
        let h = TimeDependentHamiltonian::zero(space.clone());
        let psi0 = down_with_fock(&space, 1);
        let psi = propagate_pure(&h, &psi0, 1.0, &IntegratorConfig::default()).unwrap();
        let overlap = psi0.overlap(&psi).unwrap();
        assert_abs_diff_eq!(overlap.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ideal_1q_pulse_matches_exact_rotation() {
        // Oracle: e^{−iθσ_x}|↓⟩ = cosθ|↓⟩ − i·sinθ|↑⟩ with θ = π/4.
        let cfg = GateConfig::one_qubit(1.0, SpinAxis::X).unwrap();
        let space = HilbertSpace::new(1, &[2]).unwrap();
        let h = ideal_1q(&cfg, &space).unwrap();
        let psi0 = down_with_fock(&space, 0);
        let psi = propagate_pure(
            &h,
            &psi0,
            cfg.gate_time(),
            &IntegratorConfig::default().with_steps(400).checked(),
        )
        .unwrap();
        let theta = PI / 4.0;
        // motional factor stays |0⟩ (fock dim 2, level 0)
        let expect = [
            C64::new(theta.cos(), 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, -theta.sin()),
            C64::new(0.0, 0.0),
        ];
        for (a, e) in psi.amplitudes().iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a.re, e.re, epsilon = 1e-9);
            assert_abs_diff_eq!(a.im, e.im, epsilon = 1e-9);
        }
    }

    #[test]
    fn exp_midpoint_agrees_with_rk4_on_time_independent_h() {
        let cfg = GateConfig::one_qubit(1.0, SpinAxis::X).unwrap();
        let space = HilbertSpace::new(1, &[4]).unwrap();
        let ch = ErrorChannel::Inhomo2nd { omega_dprime: 0.02 };
        let h = crate::hamiltonians::error_1q_inhomo2(&cfg, &ch, &space).unwrap();
        let psi0 = down_with_fock(&space, 2);
        let a = propagate_pure(
            &h,
            &psi0,
            cfg.gate_time(),
            &IntegratorConfig::default().with_steps(400),
        )
        .unwrap();
        let b = propagate_pure(
            &h,
            &psi0,
            cfg.gate_time(),
            &IntegratorConfig {
                scheme: Scheme::ExpMidpoint,
                steps_per_fastest_period: 200,
                convergence_check: false,
            },
        )
        .unwrap();
        let overlap = a.overlap(&b).unwrap().norm();
        assert!(overlap > 1.0 - 1e-9, "overlap {overlap}");
    }

    #[test]
    fn ideal_2q_produces_geometric_phase_gate() {
        // After one closed loop U = e^{iφS_x²} with φ = π/8 exactly.
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[16]).unwrap();
        let h = ideal_2q(&cfg, &space).unwrap();
        let psi0 = down_with_fock(&space, 0);
        let psi = propagate_pure(
            &h,
            &psi0,
            cfg.gate_time(),
            &IntegratorConfig::default().with_steps(800).checked(),
        )
        .unwrap();

        // target: (I + S²/4·(e^{iπ/2}−1))|↓↓⟩ ⊗ |0⟩
        let sx = spin_ops(2, SpinAxis::X).unwrap();
        let sx2 = sx.dot(&sx).unwrap();
        let down_down = StateVector::qubit_basis(2, 0).unwrap();
        let phase = (C64::new(0.0, 4.0 * cfg.geometric_phase()).exp() - 1.0) / 4.0;
        let target_amps: Vec<C64> = {
            let m = sx2.matrix();
            let v = down_down.amplitudes();
            (0..4)
                .map(|i| v[i] + phase * (0..4).map(|j| m[(i, j)] * v[j]).sum::<C64>())
                .collect()
        };
        let target_qubit = StateVector::from_amplitudes(
            target_amps,
            HilbertSpace::qubit_only(2).unwrap(),
        )
        .unwrap();
        let target = StateVector::compose(&target_qubit, &space, &[0]).unwrap();
        let overlap = target.overlap(&psi).unwrap().norm();
        assert!(overlap > 1.0 - 1e-6, "overlap {overlap}");
    }

    #[test]
    fn mid_loop_spin_motion_entanglement() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[16]).unwrap();
        let h = ideal_2q(&cfg, &space).unwrap();
        let psi0 = down_with_fock(&space, 0);
        let half = cfg.gate_time() / 2.0;
        let psi = propagate_pure(&h, &psi0, half, &IntegratorConfig::default().with_steps(800))
            .unwrap();
        let rho_q = psi.reduced_qubit_density();
        let purity: C64 = rho_q.dot(&rho_q).diag().iter().sum();
        assert!(purity.re < 1.0 - 1e-3, "purity {purity}");
    }

    #[test]
    fn loops_close_for_ideal_gate_from_excited_fock() {
        // After every integer multiple of 2π/Δ the motional population
        // returns to the initial |n⟩.
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 2).unwrap();
        let space = HilbertSpace::new(2, &[24]).unwrap();
        let h = ideal_2q(&cfg, &space).unwrap();
        let psi0 = down_with_fock(&space, 3);
        for loops in 1..=2 {
            let t = cfg.loop_time() * loops as f64;
            let psi =
                propagate_pure(&h, &psi0, t, &IntegratorConfig::default().with_steps(800))
                    .unwrap();
            // population of motional level 3, traced over qubits
            let mdim = space.motional_dim();
            let pop: f64 = (0..space.qubit_dim())
                .map(|q| psi.amplitudes()[q * mdim + 3].norm_sqr())
                .sum();
            assert!(pop > 1.0 - 1e-6, "loop {loops}: population {pop}");
        }
    }

    #[test]
    fn qubit_shift_matches_exact_two_level_solution() {
        // Oracle: U = cos(Ω′t)·I − i·sin(Ω′t)(n̂·σ), Ω′ = √(Ω²+δ²).
        let omega = 1.0;
        let delta = 0.3;
        let cfg = GateConfig::one_qubit(omega, SpinAxis::X).unwrap();
        let h = error_1q_qubit_shift(&cfg, &ErrorChannel::Qubit1QShift { delta }).unwrap();
        let psi0 = StateVector::qubit_basis(1, 0).unwrap();
        let t = cfg.gate_time();
        let psi = propagate_pure(&h, &psi0, t, &IntegratorConfig::default().with_steps(600))
            .unwrap();

        let omega_eff = (omega * omega + delta * delta).sqrt();
        let (c, s) = ((omega_eff * t).cos(), (omega_eff * t).sin());
        let nx = omega / omega_eff;
        let nz = delta / omega_eff;
        // |↓⟩ column of U in the (|↓⟩, |↑⟩) basis with σ_z = diag(−1, 1):
        let expect = [
            C64::new(c, 0.0) + C64::new(0.0, -s) * (-nz),
            C64::new(0.0, -s) * nx,
        ];
        for (a, e) in psi.amplitudes().iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a.re, e.re, epsilon = 1e-9);
            assert_abs_diff_eq!(a.im, e.im, epsilon = 1e-9);
        }
    }

    #[test]
    fn walsh_signs_follow_recursion() {
        assert_eq!(walsh_sign_schedule(0, 1.0).unwrap().signs(), vec![1.0]);
        assert_eq!(walsh_sign_schedule(1, 1.0).unwrap().signs(), vec![1.0, -1.0]);
        assert_eq!(
            walsh_sign_schedule(2, 1.0).unwrap().signs(),
            vec![1.0, -1.0, -1.0, 1.0]
        );
        assert_eq!(walsh_sign_schedule(3, 0.5).unwrap().total_duration(), 4.0);
    }

    #[test]
    fn single_flip_at_loop_boundary_closes_first_order_displacement() {
        // Quadrature of sign(t)·e^{iΔt} over a two-loop gate with the flip
        // at t_g/2 (a loop boundary) vanishes.
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 2).unwrap();
        let schedule = SignSchedule::new(cfg.gate_time() / 2.0, vec![1.0, -1.0]).unwrap();
        let n = 200_000;
        let dt = cfg.gate_time() / n as f64;
        let mut integral = C64::new(0.0, 0.0);
        for k in 0..n {
            let t = (k as f64 + 0.5) * dt;
            integral += schedule.sign_at(t) * C64::new(0.0, cfg.detuning() * t).exp() * dt;
        }
        assert!(integral.norm() < 1e-8 * cfg.gate_time());
    }

    #[test]
    fn walsh_residual_displacement_scaling() {
        // Static shift δ: residual displacement after the gate scales as δ
        // for k = 0 and as δ² for k = 1.
        let mut exponents = Vec::new();
        for k in [0u32, 1u32] {
            let loops = 1u32 << k;
            let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, loops).unwrap();
            let space = HilbertSpace::new(2, &[14]).unwrap();
            // S_x eigenstate with eigenvalue +2
            let plus_plus = StateVector::from_amplitudes(
                vec![C64::new(0.5, 0.0); 4],
                HilbertSpace::qubit_only(2).unwrap(),
            )
            .unwrap();
            let psi0 = StateVector::compose(&plus_plus, &space, &[0]).unwrap();
            let (low, _) = crate::operators::ladder_ops(14).unwrap();
            let a_op = embed(&low, &space, Subsystem::Mode(0)).unwrap();

            let deltas = [0.004, 0.008, 0.016, 0.04];
            let mut logs = Vec::new();
            for &d in &deltas {
                let schedule = walsh_sign_schedule(k, cfg.loop_time()).unwrap();
                let h = error_2q(&cfg, &ErrorChannel::MotionalShift2Q { delta: d }, &space)
                    .unwrap()
                    .with_sign_schedule(schedule.to_sign_schedule());
                let psi = propagate_pure(
                    &h,
                    &psi0,
                    cfg.gate_time(),
                    &IntegratorConfig::default().with_steps(600),
                )
                .unwrap();
                let disp = a_op.expectation(&psi).unwrap().norm();
                logs.push((d.ln(), disp.ln()));
            }
            // least-squares slope
            let n = logs.len() as f64;
            let sx: f64 = logs.iter().map(|p| p.0).sum();
            let sy: f64 = logs.iter().map(|p| p.1).sum();
            let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            exponents.push(slope);
        }
        assert!((exponents[0] - 1.0).abs() < 0.1, "k=0 exponent {}", exponents[0]);
        assert!((exponents[1] - 2.0).abs() < 0.1, "k=1 exponent {}", exponents[1]);
    }

    #[test]
    fn lindblad_zero_rate_matches_pure_propagation() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[12]).unwrap();
        let h = ideal_2q(&cfg, &space).unwrap();
        let psi0 = down_with_fock(&space, 1);
        let rho0 = DensityMatrix::from_pure(&psi0);
        let cfg_i = IntegratorConfig::default().with_steps(400);
        let rho = propagate_lindblad(
            &h,
            &BathSpec::heating(0.0).unwrap(),
            &rho0,
            cfg.gate_time(),
            &cfg_i,
        )
        .unwrap();
        let psi = propagate_pure(&h, &psi0, cfg.gate_time(), &cfg_i).unwrap();
        let rho_pure = DensityMatrix::from_pure(&psi);
        let diff = rho.matrix() - rho_pure.matrix();
        assert!(linalg::max_abs(&diff) < 1e-8);
    }

    #[test]
    fn heating_with_no_drive_grows_phonon_number_linearly() {
        let space = HilbertSpace::new(2, &[20]).unwrap();
        let h = TimeDependentHamiltonian::zero(space.clone());
        let psi0 = down_with_fock(&space, 0);
        let rho0 = DensityMatrix::from_pure(&psi0);
        let ndot = 0.02;
        let t = 1.3;
        let rho = propagate_lindblad(
            &h,
            &BathSpec::heating(ndot).unwrap(),
            &rho0,
            t,
            &IntegratorConfig::default().with_steps(200),
        )
        .unwrap();
        let (low, raise) = crate::operators::ladder_ops(20).unwrap();
        let n_op = embed(&raise.dot(&low).unwrap(), &space, Subsystem::Mode(0)).unwrap();
        let mean_n: C64 = n_op.matrix().dot(rho.matrix()).diag().iter().sum();
        assert_abs_diff_eq!(mean_n.re, ndot * t, epsilon = 1e-5);
    }

    #[test]
    fn dephasing_preserves_populations_and_decays_coherence() {
        // Closed form: ⟨0|ρ|1⟩ decays as e^{−ηt/2}; populations constant.
        let space = HilbertSpace::new(1, &[2]).unwrap();
        let h = TimeDependentHamiltonian::zero(space.clone());
        let amps = vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let psi0 = StateVector::from_amplitudes(amps, space.clone()).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi0);
        let eta = 0.35;
        let t = 2.0;
        let rho = propagate_lindblad(
            &h,
            &BathSpec::dephasing(eta).unwrap(),
            &rho0,
            t,
            &IntegratorConfig::default().with_steps(200),
        )
        .unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(
            rho.matrix()[(0, 1)].norm(),
            0.5 * (-eta * t / 2.0).exp(),
            epsilon = 1e-7
        );
    }

    #[test]
    fn ensemble_with_zero_coupling_is_noiseless_and_deterministic() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[12]).unwrap();
        let h = ideal_2q(&cfg, &space).unwrap();
        let psi0 = down_with_fock(&space, 0);
        let target = crate::harness::ideal_target(&cfg, &StateVector::qubit_basis(2, 0).unwrap())
            .unwrap();
        let bath = BathSpec::heating_spectral(0.0, 0.02).unwrap();
        let res = propagate_bath_ensemble(
            &h,
            &bath,
            &psi0,
            &target,
            cfg.gate_time(),
            100,
            42,
            &IntegratorConfig::default().with_steps(400),
        )
        .unwrap();
        assert!(res.mean > 1.0 - 1e-6);
        assert_eq!(res.std_error, 0.0);
    }

    #[test]
    fn spectral_rate_conversions() {
        let b = BathSpec::heating_spectral(0.1, 0.5).unwrap();
        assert_abs_diff_eq!(b.rate, PI * 0.01 * 0.5, epsilon = 1e-15);
        let b = BathSpec::dephasing_spectral(0.1, 0.5).unwrap();
        assert_abs_diff_eq!(b.rate, PI * 0.01 * 0.25, epsilon = 1e-15);
        assert!(BathSpec::heating(-0.1).is_err());
    }

    #[test]
    fn convergence_check_flags_coarse_steps() {
        let cfg = GateConfig::two_qubit(1.0, SpinAxis::X, 1).unwrap();
        let space = HilbertSpace::new(2, &[10]).unwrap();
        let h = error_2q(&cfg, &ErrorChannel::MotionalShift2Q { delta: 0.05 }, &space).unwrap();
        let psi0 = down_with_fock(&space, 0);
        let coarse = IntegratorConfig { steps_per_fastest_period: 50, ..Default::default() }
            .checked();
        let res = propagate_pure(&h, &psi0, cfg.gate_time(), &coarse);
        assert!(matches!(res, Err(Error::StepSize { .. })));
    }
}
