//! Quantum-trajectory unraveling of the driven cavity-QED master equation.
//!
//! Between detection events the conditional wavefunction evolves under the
//! non-Hermitian effective Hamiltonian, so its norm decays; a jump fires when
//! the squared norm crosses a uniform threshold, the collapse channel (mirror
//! photon or fluorescence photon) is selected proportionally to the channel
//! weights <C'C>, and the state is renormalized. Averaged over trajectories
//! this reproduces the Lindblad steady state; read individually it produces
//! the click records and conditioned field samples an experiment would.
//!
//! Drift integration is a fixed-step classical fourth-order step; jump times
//! are interpolated inside a step from the log of the squared norm (exact for
//! piecewise-exponential decay) and the step is re-entered from the collapsed
//! state, so records are reproducible for a given (seed, trajectory index)
//! regardless of how trajectories are scheduled across threads.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{AtomState, HilbertSpace};
use crate::mesolve::{apply_liouvillian, build_liouvillian, DensityOperator};
use crate::operators::{
    build_effective_hamiltonian, build_hamiltonian, build_operators, jump_operators, CMat,
    JumpScaling,
};
use crate::params::SystemParams;

const C_ZERO: C64 = C64::new(0.0, 0.0);
const C_ONE: C64 = C64::new(1.0, 0.0);

/// Stability/accuracy guard: dt times the largest rate in the problem.
pub const STEP_GUARD: f64 = 0.05;

/// Minimum trajectories for a meaningful ensemble-averaged density matrix.
pub const MIN_ENSEMBLE: usize = 100;

/// Minimum accumulated side clicks before the conditioned estimators run.
pub const MIN_SIDE_CLICKS: usize = 1000;

const BOOTSTRAP_REPS: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x626f_6f74;

/// Drive amplitude used for trajectory runs when the caller does not pick
/// one: large enough for click statistics at desk scale, small enough that
/// the finite-drive bias stays below the Monte Carlo error.
pub fn default_trajectory_drive(kappa: f64) -> f64 {
    0.05 * kappa
}

/// Conditional wavefunction at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialState {
    /// Empty cavity, atom in the ground state.
    Vacuum,
    /// Empty cavity, atom excited.
    ExcitedAtom,
}

/// Detection channel of a collapse event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Channel {
    /// Photon out the cavity mirror (transmitted light).
    Mirror,
    /// Spontaneous emission out the side (fluorescence).
    Side,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClickEvent {
    pub time: f64,
    pub channel: Channel,
}

/// Full detection record of one trajectory. Events cover the whole run;
/// the rates are computed over the sampling window only.
#[derive(Debug, Clone)]
pub struct ClickRecord {
    pub events: Vec<ClickEvent>,
    /// (burn-in end, total time): the window the rates and estimators use.
    pub window: (f64, f64),
    pub mirror_rate: f64,
    pub side_rate: f64,
}

impl ClickRecord {
    pub fn count_in_window(&self, channel: Channel) -> usize {
        self.events
            .iter()
            .filter(|e| e.channel == channel && e.time >= self.window.0 && e.time <= self.window.1)
            .count()
    }
}

/// Field reading taken right after one fluorescence collapse.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionedSample {
    pub time: f64,
    /// <a' + a> of the collapsed, renormalized state.
    pub quadrature: f64,
    /// Excited-state population of the collapsed state; a side collapse
    /// leaves the atom in the ground state, so this is exactly zero.
    pub excited_population: f64,
}

/// Time-integrated unconditioned expectations over the sampling window,
/// the baselines the conditioned samples are normalized against.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnconditionedAverages {
    pub quadrature_integral: f64,
    pub photon_integral: f64,
    pub excitation_integral: f64,
    pub duration: f64,
}

impl UnconditionedAverages {
    pub fn mean_quadrature(&self) -> f64 {
        self.quadrature_integral / self.duration
    }
    pub fn mean_photon(&self) -> f64 {
        self.photon_integral / self.duration
    }
    pub fn mean_excitation(&self) -> f64 {
        self.excitation_integral / self.duration
    }
}

/// Everything one trajectory produces.
#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    pub record: ClickRecord,
    pub samples: Vec<ConditionedSample>,
    pub baseline: UnconditionedAverages,
    /// Time-integrated projector |psi><psi| over the sampling window
    /// (unnormalized; divide by `baseline.duration`), when requested.
    pub averaged_state: Option<CMat>,
    pub final_state: DVector<C64>,
    /// Largest increase of the squared norm across a drift step; the decay
    /// of the norm is monotonic, so this stays at roundoff scale.
    pub max_norm_step_increase: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryConfig {
    /// Integrator step (units of inverse atomic linewidth).
    pub dt: f64,
    pub t_total: f64,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Discard interval before sampling starts.
    pub burn_in: f64,
    pub initial_state: InitialState,
    /// Accumulate the time-averaged projector (costs an outer product per
    /// step; only the ensemble-average comparison needs it).
    pub accumulate_average: bool,
}

impl TrajectoryConfig {
    /// Conservative defaults for the given rates: step at 80% of the guard,
    /// burn-in at ten relaxation times of the slowest channel.
    pub fn default_for(params: &SystemParams) -> Self {
        let burn_in = 10.0 / params.kappa.min(params.gamma / 2.0);
        TrajectoryConfig {
            dt: 0.8 * STEP_GUARD / params.max_rate(),
            t_total: burn_in + 500.0,
            n_trajectories: 100,
            seed: 1,
            burn_in,
            initial_state: InitialState::Vacuum,
            accumulate_average: false,
        }
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        params.validate()?;
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        let max_rate = params.max_rate();
        if self.dt * max_rate > STEP_GUARD {
            return Err(Error::StepTooLarge { dt: self.dt, max_rate, limit: STEP_GUARD });
        }
        let min_burn = 10.0 / params.kappa.min(params.gamma / 2.0);
        if self.burn_in < min_burn {
            return Err(Error::InvalidParameter(format!(
                "burn_in {} shorter than ten relaxation times {:.3}",
                self.burn_in, min_burn
            )));
        }
        if !self.t_total.is_finite() || self.t_total <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "t_total {} must exceed burn_in {}",
                self.t_total, self.burn_in
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter("n_trajectories must be positive".into()));
        }
        Ok(())
    }
}

/// Fixed-step fourth-order integrator for psi' = -i H_eff psi with
/// preallocated stage buffers.
struct DriftIntegrator {
    generator: CMat,
    k1: DVector<C64>,
    k2: DVector<C64>,
    k3: DVector<C64>,
    k4: DVector<C64>,
    stage: DVector<C64>,
}

impl DriftIntegrator {
    fn new(generator: CMat) -> Self {
        let dim = generator.nrows();
        DriftIntegrator {
            generator,
            k1: DVector::zeros(dim),
            k2: DVector::zeros(dim),
            k3: DVector::zeros(dim),
            k4: DVector::zeros(dim),
            stage: DVector::zeros(dim),
        }
    }

    fn step(&mut self, psi: &mut DVector<C64>, dt: f64) {
        let half = C64::new(0.5 * dt, 0.0);
        let full = C64::new(dt, 0.0);
        self.k1.gemv(C_ONE, &self.generator, psi, C_ZERO);
        self.stage.copy_from(psi);
        self.stage.axpy(half, &self.k1, C_ONE);
        self.k2.gemv(C_ONE, &self.generator, &self.stage, C_ZERO);
        self.stage.copy_from(psi);
        self.stage.axpy(half, &self.k2, C_ONE);
        self.k3.gemv(C_ONE, &self.generator, &self.stage, C_ZERO);
        self.stage.copy_from(psi);
        self.stage.axpy(full, &self.k3, C_ONE);
        self.k4.gemv(C_ONE, &self.generator, &self.stage, C_ZERO);
        let sixth = C64::new(dt / 6.0, 0.0);
        let third = C64::new(dt / 3.0, 0.0);
        psi.axpy(sixth, &self.k1, C_ONE);
        psi.axpy(third, &self.k2, C_ONE);
        psi.axpy(third, &self.k3, C_ONE);
        psi.axpy(sixth, &self.k4, C_ONE);
    }
}

fn photon_weight(space: HilbertSpace, psi: &DVector<C64>) -> f64 {
    let mut w = 0.0;
    for n in 1..=space.n_max() {
        for s in [AtomState::Ground, AtomState::Excited] {
            w += n as f64 * psi[space.index(n, s)].norm_sqr();
        }
    }
    w
}

fn excitation_weight(space: HilbertSpace, psi: &DVector<C64>) -> f64 {
    let mut w = 0.0;
    for n in 0..=space.n_max() {
        w += psi[space.index(n, AtomState::Excited)].norm_sqr();
    }
    w
}

/// <psi| a |psi>, unnormalized.
fn field_amplitude(space: HilbertSpace, psi: &DVector<C64>) -> C64 {
    let mut amp = C_ZERO;
    for n in 1..=space.n_max() {
        let root = C64::new((n as f64).sqrt(), 0.0);
        for s in [AtomState::Ground, AtomState::Excited] {
            amp += root * psi[space.index(n - 1, s)].conj() * psi[space.index(n, s)];
        }
    }
    amp
}

fn apply_annihilation(space: HilbertSpace, psi: &DVector<C64>, out: &mut DVector<C64>) {
    out.fill(C_ZERO);
    for n in 1..=space.n_max() {
        let root = C64::new((n as f64).sqrt(), 0.0);
        for s in [AtomState::Ground, AtomState::Excited] {
            out[space.index(n - 1, s)] = root * psi[space.index(n, s)];
        }
    }
}

fn apply_lowering(space: HilbertSpace, psi: &DVector<C64>, out: &mut DVector<C64>) {
    out.fill(C_ZERO);
    for n in 0..=space.n_max() {
        out[space.index(n, AtomState::Ground)] = psi[space.index(n, AtomState::Excited)];
    }
}

/// Uniform draw strictly inside (0, 1); a zero threshold would postpone the
/// next jump forever.
fn draw_threshold(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Evolve a single trajectory on the stream derived from
/// (config.seed, trajectory_index).
pub fn evolve_trajectory(
    params: &SystemParams,
    space: HilbertSpace,
    config: &TrajectoryConfig,
    trajectory_index: usize,
) -> Result<TrajectoryOutcome> {
    config.validate(params)?;
    let ops = build_operators(space);
    let h = build_hamiltonian(params, &ops);
    let jumps = jump_operators(params, &ops, JumpScaling::Standard);
    let h_eff = build_effective_hamiltonian(&h, &jumps);
    let generator = h_eff * C64::new(0.0, -1.0);
    let mut integrator = DriftIntegrator::new(generator);

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(trajectory_index as u64);

    let dim = space.dim();
    let mut psi = match config.initial_state {
        InitialState::Vacuum => space.basis_vector(0, AtomState::Ground),
        InitialState::ExcitedAtom => space.basis_vector(0, AtomState::Excited),
    };
    let mut psi_prev: DVector<C64> = DVector::zeros(dim);
    let mut scratch: DVector<C64> = DVector::zeros(dim);

    let mirror_rate_scale = 2.0 * params.kappa;
    let side_rate_scale = params.gamma;

    let mut threshold = draw_threshold(&mut rng);
    let mut events: Vec<ClickEvent> = Vec::new();
    let mut samples: Vec<ConditionedSample> = Vec::new();
    let mut baseline = UnconditionedAverages::default();
    let mut averaged = config.accumulate_average.then(|| CMat::zeros(dim, dim));
    let mut max_norm_step_increase = f64::NEG_INFINITY;

    let n_steps = (config.t_total / config.dt).ceil() as u64;
    for step_index in 0..n_steps {
        let t0 = step_index as f64 * config.dt;
        let t1 = (t0 + config.dt).min(config.t_total);
        let mut cursor = t0;
        let mut remaining = t1 - t0;

        // Drift across [t0, t1], collapsing as many times as the threshold
        // demands; each collapse re-enters the remainder of the interval.
        while remaining > 0.0 {
            psi_prev.copy_from(&psi);
            let norm_before = psi.norm_squared();
            integrator.step(&mut psi, remaining);
            let norm_after = psi.norm_squared();
            if norm_after > threshold {
                max_norm_step_increase = max_norm_step_increase.max(norm_after - norm_before);
                break;
            }

            // Jump inside this interval: locate the crossing of the squared
            // norm with the threshold in log space, exact for exponential
            // decay segments.
            let theta = ((threshold.ln() - norm_before.ln())
                / (norm_after.ln() - norm_before.ln()))
            .clamp(0.0, 1.0);
            let dt_jump = theta * remaining;
            psi.copy_from(&psi_prev);
            if dt_jump > 0.0 {
                integrator.step(&mut psi, dt_jump);
            }
            cursor += dt_jump;
            remaining -= dt_jump;

            let mirror_weight = mirror_rate_scale * photon_weight(space, &psi);
            let side_weight = side_rate_scale * excitation_weight(space, &psi);
            let u: f64 = rng.random();
            let channel = if u * (mirror_weight + side_weight) < mirror_weight {
                Channel::Mirror
            } else {
                Channel::Side
            };
            match channel {
                Channel::Mirror => apply_annihilation(space, &psi, &mut scratch),
                Channel::Side => apply_lowering(space, &psi, &mut scratch),
            }
            std::mem::swap(&mut psi, &mut scratch);
            let norm = psi.norm();
            psi /= C64::new(norm, 0.0);
            events.push(ClickEvent { time: cursor, channel });
            if channel == Channel::Side && cursor >= config.burn_in {
                samples.push(ConditionedSample {
                    time: cursor,
                    quadrature: 2.0 * field_amplitude(space, &psi).re,
                    excited_population: excitation_weight(space, &psi),
                });
            }
            threshold = draw_threshold(&mut rng);
        }

        // Accumulate unconditioned expectations over the part of this step
        // inside the sampling window, using the end-of-step state.
        let overlap = (t1.min(config.t_total) - t0.max(config.burn_in)).max(0.0);
        if overlap > 0.0 {
            let norm_sq = psi.norm_squared();
            baseline.quadrature_integral +=
                overlap * 2.0 * field_amplitude(space, &psi).re / norm_sq;
            baseline.photon_integral += overlap * photon_weight(space, &psi) / norm_sq;
            baseline.excitation_integral += overlap * excitation_weight(space, &psi) / norm_sq;
            baseline.duration += overlap;
            if let Some(acc) = averaged.as_mut() {
                acc.gerc(C64::new(overlap / norm_sq, 0.0), &psi, &psi, C_ONE);
            }
        }
    }

    let norm = psi.norm();
    psi /= C64::new(norm, 0.0);
    let duration = config.t_total - config.burn_in;
    let count = |channel: Channel| {
        events.iter().filter(|e| e.channel == channel && e.time >= config.burn_in).count()
    };
    let record = ClickRecord {
        mirror_rate: count(Channel::Mirror) as f64 / duration,
        side_rate: count(Channel::Side) as f64 / duration,
        window: (config.burn_in, config.t_total),
        events,
    };
    Ok(TrajectoryOutcome {
        record,
        samples,
        baseline,
        averaged_state: averaged,
        final_state: psi,
        max_norm_step_increase: if max_norm_step_increase.is_finite() {
            max_norm_step_increase
        } else {
            0.0
        },
    })
}

/// Run the whole ensemble. Trajectories are independent and deterministic
/// given (seed, index), so the result does not depend on scheduling.
pub fn run_ensemble(
    params: &SystemParams,
    space: HilbertSpace,
    config: &TrajectoryConfig,
) -> Result<Vec<TrajectoryOutcome>> {
    config.validate(params)?;
    (0..config.n_trajectories)
        .into_par_iter()
        .map(|index| evolve_trajectory(params, space, config, index))
        .collect()
}

/// A Monte Carlo point estimate with a bootstrap standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Conditioning events that entered the estimate.
    pub samples: usize,
}

fn bootstrap_stderr<F>(n_outcomes: usize, replicate: F) -> f64
where
    F: Fn(&mut dyn FnMut() -> usize) -> Option<f64>,
{
    let mut rng = ChaCha12Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut values = Vec::with_capacity(BOOTSTRAP_REPS);
    for _ in 0..BOOTSTRAP_REPS {
        let mut draw = || rng.random_range(0..n_outcomes);
        if let Some(v) = replicate(&mut draw) {
            values.push(v);
        }
    }
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

struct CoincidenceParts {
    coincidences: usize,
    side_used: usize,
    mirror: usize,
    duration: f64,
}

fn coincidence_parts(outcome: &TrajectoryOutcome, window: f64) -> CoincidenceParts {
    let (lo, hi) = outcome.record.window;
    let half = window / 2.0;
    // Guard band keeps every coincidence window fully inside the record.
    let side: Vec<f64> = outcome
        .record
        .events
        .iter()
        .filter(|e| e.channel == Channel::Side && e.time >= lo + half && e.time <= hi - half)
        .map(|e| e.time)
        .collect();
    let mirror: Vec<f64> = outcome
        .record
        .events
        .iter()
        .filter(|e| e.channel == Channel::Mirror && e.time >= lo && e.time <= hi)
        .map(|e| e.time)
        .collect();
    let mut coincidences = 0;
    let mut start = 0;
    for &ts in &side {
        while start < mirror.len() && mirror[start] < ts - half {
            start += 1;
        }
        let mut j = start;
        while j < mirror.len() && mirror[j] <= ts + half {
            coincidences += 1;
            j += 1;
        }
    }
    CoincidenceParts {
        coincidences,
        side_used: side.len(),
        mirror: mirror.len(),
        duration: hi - lo,
    }
}

fn g2_from_parts(parts: &[CoincidenceParts], window: f64) -> Option<f64> {
    let coincidences: usize = parts.iter().map(|p| p.coincidences).sum();
    let side: usize = parts.iter().map(|p| p.side_used).sum();
    let mirror: usize = parts.iter().map(|p| p.mirror).sum();
    let duration: f64 = parts.iter().map(|p| p.duration).sum();
    if side == 0 || mirror == 0 || duration <= 0.0 {
        return None;
    }
    let conditional_rate = coincidences as f64 / (side as f64 * window);
    let unconditional_rate = mirror as f64 / duration;
    Some(conditional_rate / unconditional_rate)
}

/// Coincidence-window estimator of the zero-delay transmitted/fluorescence
/// intensity cross-correlation: the mirror-click rate inside windows centered
/// on side clicks, over the unconditional mirror rate. The window should sit
/// well below the correlation time 1/max(kappa, gamma).
pub fn estimate_g2_tf(outcomes: &[TrajectoryOutcome], window: f64) -> Result<Estimate> {
    if window <= 0.0 || !window.is_finite() {
        return Err(Error::InvalidParameter(format!("window must be positive, got {window}")));
    }
    let accumulated: usize = outcomes.iter().map(|o| o.record.count_in_window(Channel::Side)).sum();
    if accumulated < MIN_SIDE_CLICKS {
        return Err(Error::InsufficientStatistics { have: accumulated, need: MIN_SIDE_CLICKS });
    }
    let parts: Vec<CoincidenceParts> =
        outcomes.iter().map(|o| coincidence_parts(o, window)).collect();
    let value = g2_from_parts(&parts, window)
        .ok_or(Error::DegenerateCorrelation { context: "no clicks inside the sampling window" })?;
    let stderr = bootstrap_stderr(parts.len(), |draw| {
        let resampled: Vec<CoincidenceParts> = (0..parts.len())
            .map(|_| {
                let p = &parts[draw()];
                CoincidenceParts {
                    coincidences: p.coincidences,
                    side_used: p.side_used,
                    mirror: p.mirror,
                    duration: p.duration,
                }
            })
            .collect();
        g2_from_parts(&resampled, window)
    });
    Ok(Estimate { value, stderr, samples: parts.iter().map(|p| p.side_used).sum() })
}

struct QuadratureParts {
    sample_sum: f64,
    sample_count: usize,
    baseline_integral: f64,
    duration: f64,
}

fn h_from_parts(parts: &[QuadratureParts]) -> Option<f64> {
    let sum: f64 = parts.iter().map(|p| p.sample_sum).sum();
    let count: usize = parts.iter().map(|p| p.sample_count).sum();
    let baseline: f64 = parts.iter().map(|p| p.baseline_integral).sum();
    let duration: f64 = parts.iter().map(|p| p.duration).sum();
    if count == 0 || duration <= 0.0 {
        return None;
    }
    let unconditioned = baseline / duration;
    if unconditioned.abs() < 1e-300 {
        return None;
    }
    Some((sum / count as f64) / unconditioned)
}

/// Conditioned-quadrature estimator of h(0): the transmitted-field
/// quadrature read off the conditional state at fluorescence clicks,
/// normalized by the unconditioned steady-state quadrature.
pub fn estimate_h_tf(outcomes: &[TrajectoryOutcome]) -> Result<Estimate> {
    let accumulated: usize = outcomes.iter().map(|o| o.samples.len()).sum();
    if accumulated < MIN_SIDE_CLICKS {
        return Err(Error::InsufficientStatistics { have: accumulated, need: MIN_SIDE_CLICKS });
    }
    let parts: Vec<QuadratureParts> = outcomes
        .iter()
        .map(|o| QuadratureParts {
            sample_sum: o.samples.iter().map(|s| s.quadrature).sum(),
            sample_count: o.samples.len(),
            baseline_integral: o.baseline.quadrature_integral,
            duration: o.baseline.duration,
        })
        .collect();
    let value = h_from_parts(&parts).ok_or(Error::DegenerateCorrelation {
        context: "unconditioned quadrature consistent with zero",
    })?;
    let stderr = bootstrap_stderr(parts.len(), |draw| {
        let resampled: Vec<QuadratureParts> = (0..parts.len())
            .map(|_| {
                let p = &parts[draw()];
                QuadratureParts {
                    sample_sum: p.sample_sum,
                    sample_count: p.sample_count,
                    baseline_integral: p.baseline_integral,
                    duration: p.duration,
                }
            })
            .collect();
        h_from_parts(&resampled)
    });
    Ok(Estimate { value, stderr, samples: accumulated })
}

/// Time-and-ensemble averaged density matrix, comparable to the
/// master-equation steady state. Requires outcomes recorded with
/// `accumulate_average` and at least `MIN_ENSEMBLE` trajectories.
pub fn ensemble_average(
    params: &SystemParams,
    space: HilbertSpace,
    outcomes: &[TrajectoryOutcome],
) -> Result<DensityOperator> {
    let contributing: Vec<&TrajectoryOutcome> = outcomes
        .iter()
        .filter(|o| o.averaged_state.is_some() && o.baseline.duration > 0.0)
        .collect();
    if contributing.len() < MIN_ENSEMBLE {
        return Err(Error::InsufficientStatistics { have: contributing.len(), need: MIN_ENSEMBLE });
    }
    let dim = space.dim();
    let mut rho = CMat::zeros(dim, dim);
    let mut weight = 0.0;
    for outcome in &contributing {
        rho += outcome.averaged_state.as_ref().unwrap();
        weight += outcome.baseline.duration;
    }
    rho /= C64::new(weight, 0.0);
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let trace = rho.trace();
    rho /= trace;
    let liouvillian = build_liouvillian(params, space)?;
    let residual = apply_liouvillian(&liouvillian, &rho).norm();
    Ok(DensityOperator { matrix: rho, space, residual })
}
