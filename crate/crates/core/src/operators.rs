//! Dense operator construction on the truncated space: ladder and atomic
//! operators, the drive-frame Hamiltonian, collapse operators, and the
//! non-Hermitian effective Hamiltonian used by the trajectory engine.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::hilbert::{AtomState, HilbertSpace};
use crate::params::SystemParams;

pub type CMat = DMatrix<C64>;

/// The elementary operators on the truncated product space.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub a: CMat,
    pub a_dag: CMat,
    pub sigma_minus: CMat,
    pub sigma_plus: CMat,
    pub identity: CMat,
}

/// Build annihilation, creation, lowering, raising and identity operators.
pub fn build_operators(space: HilbertSpace) -> OperatorSet {
    let dim = space.dim();
    let mut a = CMat::zeros(dim, dim);
    let mut sigma_minus = CMat::zeros(dim, dim);
    for n in 1..=space.n_max() {
        // a |n, s> = sqrt(n) |n-1, s>
        let amp = C64::new((n as f64).sqrt(), 0.0);
        for s in [AtomState::Ground, AtomState::Excited] {
            a[(space.index(n - 1, s), space.index(n, s))] = amp;
        }
    }
    for n in 0..=space.n_max() {
        // sigma_- |n, e> = |n, g>
        sigma_minus[(space.index(n, AtomState::Ground), space.index(n, AtomState::Excited))] =
            C64::new(1.0, 0.0);
    }
    let a_dag = a.adjoint();
    let sigma_plus = sigma_minus.adjoint();
    let identity = CMat::identity(dim, dim);
    OperatorSet { a, a_dag, sigma_minus, sigma_plus, identity }
}

/// Hermitian drive-frame Hamiltonian:
///
///   H = delta (a'a + sigma_+ sigma_-) + g (a' sigma_- + a sigma_+)
///       + i epsilon (a' - a)
pub fn build_hamiltonian(params: &SystemParams, ops: &OperatorSet) -> CMat {
    let delta = C64::new(params.delta, 0.0);
    let g = C64::new(params.g, 0.0);
    let i_eps = C64::new(0.0, params.epsilon);
    let number_like = &ops.a_dag * &ops.a + &ops.sigma_plus * &ops.sigma_minus;
    let exchange = &ops.a_dag * &ops.sigma_minus + &ops.a * &ops.sigma_plus;
    let drive = &ops.a_dag - &ops.a;
    number_like * delta + exchange * g + drive * i_eps
}

/// Scaling convention applied to the collapse operators.
///
/// `Standard` is the physically consistent set for field-amplitude decay
/// kappa and full atomic linewidth gamma: sqrt(2 kappa) a from the mirror,
/// sqrt(gamma) sigma_- out the side. `Halved` divides both decay *rates* by
/// two (sqrt(kappa) a, sqrt(gamma/2) sigma_-); it exists as a deliberate
/// mis-scaling for negative-control tests, which must detect the mismatch
/// against the closed-form weak-drive theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpScaling {
    Standard,
    Halved,
}

/// The two collapse operators, mirror output first, side emission second.
pub fn jump_operators(params: &SystemParams, ops: &OperatorSet, scaling: JumpScaling) -> Vec<CMat> {
    let (field_rate, atom_rate) = match scaling {
        JumpScaling::Standard => (2.0 * params.kappa, params.gamma),
        JumpScaling::Halved => (params.kappa, params.gamma / 2.0),
    };
    vec![
        &ops.a * C64::new(field_rate.sqrt(), 0.0),
        &ops.sigma_minus * C64::new(atom_rate.sqrt(), 0.0),
    ]
}

/// Non-Hermitian effective Hamiltonian H - (i/2) sum_j C_j' C_j driving the
/// no-click evolution between quantum jumps. With the standard scaling this
/// is H - i kappa a'a - i (gamma/2) sigma_+ sigma_-.
pub fn build_effective_hamiltonian(h: &CMat, jumps: &[CMat]) -> CMat {
    let mut h_eff = h.clone();
    for c in jumps {
        h_eff -= (c.adjoint() * c) * C64::new(0.0, 0.5);
    }
    h_eff
}
