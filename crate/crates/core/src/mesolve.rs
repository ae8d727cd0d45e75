//! Lindblad steady-state solver: the independent finite-drive oracle for the
//! weak-drive closed forms.
//!
//! The density matrix evolves under
//!
//!   d rho/dt = L[rho] = -i [H, rho]
//!              + sum_j ( C_j rho C_j' - 1/2 {C_j' C_j, rho} )
//!
//! with the Hermitian H and collapse operators from `operators`. The
//! superoperator is materialized densely on column-major vectorized density
//! matrices, vec(A X B) = (B^T (x) A) vec(X), and the steady state is the
//! one-dimensional nullspace, extracted deterministically by replacing the
//! redundant d rho_00 / dt row with the trace constraint and solving the
//! bordered linear system.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{AtomState, HilbertSpace};
use crate::operators::{
    build_hamiltonian, build_operators, jump_operators, CMat, JumpScaling, OperatorSet,
};
use crate::params::SystemParams;

/// Hard cap on the Hilbert-space dimension for dense Liouvillian work; the
/// superoperator holds dim^4 complex entries (dim = 32 costs 16 MiB).
pub const MAX_DENSE_DIM: usize = 32;

/// Amplitude-scale floor below which a normalized correlation is treated as
/// 0/0: steady-state solves are accurate to ~1e-12 relative, so amplitudes
/// under 1e-10 are indistinguishable from solver noise.
const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Dense Lindblad superoperator together with the pieces it was built from.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: DMatrix<C64>,
    pub space: HilbertSpace,
    pub hamiltonian: CMat,
    pub jumps: Vec<CMat>,
}

/// Steady-state density matrix with its solve diagnostics.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub matrix: CMat,
    pub space: HilbertSpace,
    /// ||L vec(rho)||_2 of the returned (hermitized, normalized) state.
    pub residual: f64,
}

/// Raw expectation values of the steady state. Operators that are Hermitian
/// products (photon number, coincidence, quadrature-intensity cross) are
/// stored as reals; field and dipole moments keep their phases.
#[derive(Debug, Clone, Copy)]
pub struct SteadyStateObservables {
    /// <a>
    pub mean_field: C64,
    /// <sigma_->
    pub mean_dipole: C64,
    /// <a'a>
    pub mean_photon: f64,
    /// <sigma_+ sigma_->
    pub excited_pop: f64,
    /// <sigma_+ a>
    pub dipole_field: C64,
    /// <sigma_+ a'a sigma_->
    pub coincidence: f64,
    /// <a'a'aa>
    pub two_photon: f64,
    /// <(a'+a) sigma_+ sigma_->
    pub field_intensity_cross: f64,
    /// <a sigma_+ sigma_->; its normalized form is the complex saturation
    /// ratio q at leading order in the drive, at any detuning.
    pub field_excitation_cross: C64,
    /// Tr rho^2
    pub purity: f64,
}

/// Build the dense Lindblad superoperator for the standard collapse-operator
/// scaling. `build_liouvillian_with_scaling` exposes the mis-scaled variant
/// for negative-control tests.
pub fn build_liouvillian(params: &SystemParams, space: HilbertSpace) -> Result<Liouvillian> {
    build_liouvillian_with_scaling(params, space, JumpScaling::Standard)
}

pub fn build_liouvillian_with_scaling(
    params: &SystemParams,
    space: HilbertSpace,
    scaling: JumpScaling,
) -> Result<Liouvillian> {
    params.validate()?;
    let dim = space.dim();
    if dim > MAX_DENSE_DIM {
        return Err(Error::LiouvillianTooLarge { dim, max_dim: MAX_DENSE_DIM });
    }
    let ops = build_operators(space);
    let h = build_hamiltonian(params, &ops);
    let jumps = jump_operators(params, &ops, scaling);
    let eye = &ops.identity;
    let minus_i = C64::new(0.0, -1.0);
    // -i [H, rho]  ->  -i ( I (x) H - H^T (x) I )
    let mut l = (eye.kronecker(&h) - h.transpose().kronecker(eye)) * minus_i;
    for c in &jumps {
        let cdc = c.adjoint() * c;
        // C rho C'        ->  conj(C) (x) C
        l += c.map(|z| z.conj()).kronecker(c);
        // -1/2 C'C rho    ->  -1/2 I (x) C'C
        l -= eye.kronecker(&cdc) * C64::new(0.5, 0.0);
        // -1/2 rho C'C    ->  -1/2 (C'C)^T (x) I
        l -= cdc.transpose().kronecker(eye) * C64::new(0.5, 0.0);
    }
    Ok(Liouvillian { matrix: l, space, hamiltonian: h, jumps })
}

/// Apply the superoperator to a density matrix (for tests and residuals).
pub fn apply_liouvillian(l: &Liouvillian, rho: &CMat) -> CMat {
    let dim = l.space.dim();
    let v = DVector::from_column_slice(rho.as_slice());
    let out = &l.matrix * v;
    CMat::from_column_slice(dim, dim, out.as_slice())
}

/// Solve L[rho] = 0, tr rho = 1 by the bordered system: the d rho_00/dt row
/// (which the trace identity makes redundant) is replaced by the trace
/// functional and the right-hand side set to the unit vector e_0.
pub fn steady_state(l: &Liouvillian) -> Result<DensityOperator> {
    let dim = l.space.dim();
    let n = dim * dim;
    let mut bordered = l.matrix.clone();
    for col in 0..n {
        bordered[(0, col)] = C64::new(0.0, 0.0);
    }
    for i in 0..dim {
        // Column-major vec index of the diagonal entry (i, i).
        bordered[(0, i * (dim + 1))] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);
    let solution = bordered.lu().solve(&rhs).ok_or(Error::NonUniqueSteadyState)?;
    let mut rho = CMat::from_column_slice(dim, dim, solution.as_slice());
    // Enforce the exact symmetries the finite-precision solve only
    // approximates.
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let trace = rho.trace();
    if trace.norm() < 1e-300 {
        return Err(Error::NonUniqueSteadyState);
    }
    rho /= trace;
    let residual = apply_liouvillian(l, &rho).norm();
    let tolerance = 1e-10 * l.matrix.norm();
    if residual.is_nan() || residual > tolerance {
        return Err(Error::SteadyStateResidual { residual, tolerance });
    }
    Ok(DensityOperator { matrix: rho, space: l.space, residual })
}

impl DensityOperator {
    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Frobenius norm of rho - rho' (zero by construction after the solve;
    /// kept as an externally checkable invariant).
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// Tr rho^2.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Smallest eigenvalue; slightly negative values (>= -1e-9) are
    /// truncation leakage, anything lower is a genuine positivity failure.
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Partial trace over the field: the 2x2 atom density matrix.
    pub fn atom_reduced(&self) -> DMatrix<C64> {
        let mut atom = DMatrix::zeros(2, 2);
        for n in 0..=self.space.n_max() {
            for (s, row) in [AtomState::Ground, AtomState::Excited].into_iter().enumerate() {
                for (t, col) in [AtomState::Ground, AtomState::Excited].into_iter().enumerate() {
                    atom[(s, t)] +=
                        self.matrix[(self.space.index(n, row), self.space.index(n, col))];
                }
            }
        }
        atom
    }

    /// Concurrence proxy from the atom subsystem purity,
    /// C = sqrt(2 (1 - Tr rho_atom^2)): exact for a pure joint state, and a
    /// well-defined mixedness measure for the true (slightly mixed) steady
    /// state.
    pub fn concurrence_trace_proxy(&self) -> f64 {
        let atom = self.atom_reduced();
        let purity = (&atom * &atom).trace().re;
        (2.0 * (1.0 - purity)).max(0.0).sqrt()
    }

    /// Weak-drive amplitude of |n, atom> relative to the vacuum component,
    /// read off the rho |0g><0g| coherence column:
    /// psi_x = <x| rho |0g> / <0g| rho |0g>. For a nearly pure state this
    /// recovers the conditional wavefunction amplitudes and is directly
    /// comparable with the closed-form solutions.
    pub fn coherence_amplitude(&self, n: usize, atom: AtomState) -> C64 {
        let vac = self.space.index(0, AtomState::Ground);
        self.matrix[(self.space.index(n, atom), vac)] / self.matrix[(vac, vac)]
    }
}

fn expect(op: &CMat, rho: &CMat) -> C64 {
    (op * rho).trace()
}

/// All raw moments needed by the normalized correlations, in one pass.
pub fn observables(rho: &DensityOperator, ops: &OperatorSet) -> SteadyStateObservables {
    let n_op = &ops.a_dag * &ops.a;
    let excited_op = &ops.sigma_plus * &ops.sigma_minus;
    let quad = &ops.a_dag + &ops.a;
    SteadyStateObservables {
        mean_field: expect(&ops.a, &rho.matrix),
        mean_dipole: expect(&ops.sigma_minus, &rho.matrix),
        mean_photon: expect(&n_op, &rho.matrix).re,
        excited_pop: expect(&excited_op, &rho.matrix).re,
        dipole_field: expect(&(&ops.sigma_plus * &ops.a), &rho.matrix),
        coincidence: expect(&(&ops.sigma_plus * &n_op * &ops.sigma_minus), &rho.matrix).re,
        two_photon: expect(&(&ops.a_dag * &ops.a_dag * &ops.a * &ops.a), &rho.matrix).re,
        field_intensity_cross: expect(&(&quad * &excited_op), &rho.matrix).re,
        field_excitation_cross: expect(&(&ops.a * &excited_op), &rho.matrix),
        purity: rho.purity(),
    }
}

/// Finite-drive numerical correlations, the master-equation counterparts of
/// the analytic `CorrelationSet`:
///
///   g1_tf = |<sigma_+ a>| / (|<sigma_+>| |<a>|)
///   g2_tf = <sigma_+ a'a sigma_-> / (<a'a> <sigma_+ sigma_->)
///   h_tf  = <(a'+a) sigma_+ sigma_-> / (<a'+a> <sigma_+ sigma_->)
///   g2_tt = <a'a'aa> / <a'a>^2
///   g2_ff = 0 exactly (a single atom holds at most one excitation)
///
/// `q_complex` is <a sigma_+ sigma_-> / (<a> <sigma_+ sigma_->), whose
/// weak-drive limit is the complex saturation ratio q at any detuning. The
/// quadrature form h_tf coincides with Re q on resonance; off resonance the
/// two differ by the phase of the transmitted field (the analytic set
/// reports Re q by convention).
pub fn normalized_correlations(
    obs: &SteadyStateObservables,
) -> Result<crate::analytics::CorrelationSet> {
    if obs.mean_photon.sqrt() < AMPLITUDE_FLOOR || obs.mean_field.norm() < AMPLITUDE_FLOOR {
        return Err(Error::DegenerateCorrelation {
            context: "transmitted field consistent with zero (undriven cavity)",
        });
    }
    if obs.excited_pop.sqrt() < AMPLITUDE_FLOOR || obs.mean_dipole.norm() < AMPLITUDE_FLOOR {
        return Err(Error::DegenerateCorrelation {
            context: "fluorescence consistent with zero (uncoupled atom)",
        });
    }
    let g1_tf = obs.dipole_field.norm() / (obs.mean_dipole.norm() * obs.mean_field.norm());
    let g2_tf = obs.coincidence / (obs.mean_photon * obs.excited_pop);
    let quad_mean = 2.0 * obs.mean_field.re;
    let h_tf = obs.field_intensity_cross / (quad_mean * obs.excited_pop);
    let g2_tt = obs.two_photon / (obs.mean_photon * obs.mean_photon);
    let g2_ff = 0.0;
    let q_complex = obs.field_excitation_cross / (obs.mean_field * obs.excited_pop);
    let schwarz_lhs = (g2_tf - 1.0) * (g2_tf - 1.0);
    let schwarz_rhs = ((g2_tt - 1.0) * (g2_ff - 1.0)).abs();
    Ok(crate::analytics::CorrelationSet {
        g1_tf,
        g2_tf,
        h_tf,
        g2_tt,
        g2_ff,
        q_complex,
        schwarz_lhs,
        schwarz_rhs,
        schwarz_violated: schwarz_lhs > schwarz_rhs,
    })
}

/// One row of a truncation-convergence study.
#[derive(Debug, Clone, Copy)]
pub struct TruncationRow {
    pub n_max: usize,
    pub mean_photon: f64,
    pub excited_pop: f64,
    pub purity: f64,
}

#[derive(Debug, Clone)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    /// Successive max relative changes across the tracked observables.
    pub rel_changes: Vec<f64>,
    /// True when the final change dropped below 1e-8.
    pub converged: bool,
}

/// Re-solve the steady state across photon-number truncations and report
/// how the key observables settle.
pub fn truncation_convergence(
    params: &SystemParams,
    n_max_list: &[usize],
) -> Result<TruncationReport> {
    if n_max_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("truncation list must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(n_max_list.len());
    for &n_max in n_max_list {
        let space = HilbertSpace::new(n_max)?;
        let l = build_liouvillian(params, space)?;
        let rho = steady_state(&l)?;
        let ops = build_operators(space);
        let obs = observables(&rho, &ops);
        rows.push(TruncationRow {
            n_max,
            mean_photon: obs.mean_photon,
            excited_pop: obs.excited_pop,
            purity: obs.purity,
        });
    }
    let rel = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    };
    let rel_changes: Vec<f64> = rows
        .windows(2)
        .map(|w| {
            rel(w[1].mean_photon, w[0].mean_photon)
                .max(rel(w[1].excited_pop, w[0].excited_pop))
                .max(rel(w[1].purity, w[0].purity))
        })
        .collect();
    let converged = rel_changes.last().is_some_and(|&c| c < 1e-8);
    Ok(TruncationReport { rows, rel_changes, converged })
}

/// Convenience: params -> steady state in one call.
pub fn solve_steady_state(params: &SystemParams, n_max: usize) -> Result<DensityOperator> {
    let space = HilbertSpace::new(n_max)?;
    let l = build_liouvillian(params, space)?;
    steady_state(&l)
}

/// Steady state expanded in powers of the drive: rho = sum_k eps^k rho_k.
///
/// The orders solve the chain L0 rho_0 = 0 (tr rho_0 = 1) and
/// L0 rho_k = -D rho_{k-1} (tr rho_k = 0), where L0 is the undriven
/// Lindblad superoperator and D[rho] = [a' - a, rho] is the unit-drive
/// commutator. Every coefficient matrix is O(1), so quantities that are
/// tiny at finite drive — such as the eps^4 impurity of the atom at large
/// detuning — come out at full relative precision instead of drowning in
/// the cancellation noise of a finite-drive solve.
#[derive(Debug, Clone)]
pub struct WeakDriveExpansion {
    pub space: HilbertSpace,
    /// rho_0, rho_1, ..., rho_order.
    pub orders: Vec<CMat>,
}

/// Expand the steady state to the given order in the drive amplitude.
/// The drive strength in `params` is ignored (it is the expansion
/// parameter); everything else enters through the undriven Liouvillian.
pub fn weak_drive_expansion(
    params: &SystemParams,
    space: HilbertSpace,
    order: usize,
) -> Result<WeakDriveExpansion> {
    let undriven = SystemParams::new(params.g, params.kappa, params.gamma, 0.0, params.delta)?;
    let l0 = build_liouvillian(&undriven, space)?;
    let dim = space.dim();
    let n = dim * dim;
    let ops = build_operators(space);
    let drive_op = &ops.a_dag - &ops.a;
    // D rho = (a'-a) rho - rho (a'-a), vectorized column-major.
    let drive_super =
        ops.identity.kronecker(&drive_op) - drive_op.transpose().kronecker(&ops.identity);
    let mut bordered = l0.matrix.clone();
    for col in 0..n {
        bordered[(0, col)] = C64::new(0.0, 0.0);
    }
    for i in 0..dim {
        bordered[(0, i * (dim + 1))] = C64::new(1.0, 0.0);
    }
    let lu = bordered.lu();
    let mut orders = Vec::with_capacity(order + 1);
    let mut rho0 = CMat::zeros(dim, dim);
    rho0[(0, 0)] = C64::new(1.0, 0.0);
    orders.push(rho0);
    for _ in 1..=order {
        let prev = DVector::from_column_slice(orders.last().unwrap().as_slice());
        let mut rhs = -(&drive_super * prev);
        // The replaced row now encodes tr rho_k = 0.
        rhs[0] = C64::new(0.0, 0.0);
        let solution = lu.solve(&rhs).ok_or(Error::NonUniqueSteadyState)?;
        let mut rho_k = CMat::from_column_slice(dim, dim, solution.as_slice());
        // Each order is Hermitian on its own (the chain preserves
        // Hermiticity); symmetrize away roundoff.
        rho_k = (&rho_k + rho_k.adjoint()) * C64::new(0.5, 0.0);
        orders.push(rho_k);
    }
    Ok(WeakDriveExpansion { space, orders })
}

impl WeakDriveExpansion {
    /// Atom-reduced coefficient matrix at the given order.
    pub fn atom_reduced_order(&self, k: usize) -> DMatrix<C64> {
        let mut atom = DMatrix::zeros(2, 2);
        for n in 0..=self.space.n_max() {
            for (s, row) in [AtomState::Ground, AtomState::Excited].into_iter().enumerate() {
                for (t, col) in [AtomState::Ground, AtomState::Excited].into_iter().enumerate() {
                    atom[(s, t)] +=
                        self.orders[k][(self.space.index(n, row), self.space.index(n, col))];
                }
            }
        }
        atom
    }

    /// Coefficients of the atom impurity 1 - Tr rho_atom^2 as a power
    /// series in the drive: entry m is the eps^m coefficient. Odd orders
    /// and the eps^2 coefficient vanish identically (impurity starts at
    /// eps^4); their near-zero computed values double as a consistency
    /// check on the chain solve.
    pub fn atom_impurity_series(&self) -> Vec<f64> {
        let atoms: Vec<DMatrix<C64>> =
            (0..self.orders.len()).map(|k| self.atom_reduced_order(k)).collect();
        let mut series = vec![0.0; self.orders.len()];
        for m in 0..self.orders.len() {
            let mut purity_m = C64::new(0.0, 0.0);
            for j in 0..=m {
                purity_m += (&atoms[j] * &atoms[m - j]).trace();
            }
            series[m] = if m == 0 { 1.0 - purity_m.re } else { -purity_m.re };
        }
        series
    }

    /// Trace-purity concurrence proxy sqrt(2 (1 - Tr rho_atom^2)) with the
    /// impurity summed from the series at the given drive amplitude.
    pub fn concurrence_trace_proxy(&self, epsilon: f64) -> f64 {
        let impurity: f64 = self
            .atom_impurity_series()
            .iter()
            .enumerate()
            .map(|(m, c)| c * epsilon.powi(m as i32))
            .sum();
        (2.0 * impurity).max(0.0).sqrt()
    }

    /// Leading-order trace proxy eps^2 sqrt(2 c4), keeping only the
    /// first non-vanishing impurity coefficient (requires expansion order
    /// of at least four). The summed variant adds the identically-zero low
    /// orders, whose roundoff residue (about 1e-13) buries a genuinely
    /// small c4 eps^4; this form stays at full relative precision however
    /// small the leading term is.
    pub fn concurrence_trace_proxy_leading(&self, epsilon: f64) -> f64 {
        let c4 = self.atom_impurity_series()[4];
        epsilon * epsilon * (2.0 * c4).max(0.0).sqrt()
    }
}
