//! Truncated Hilbert space of one cavity mode and one two-level atom, with
//! an explicit index convention and the dressed (polariton) basis.
//!
//! Index convention: field-major. A basis state |n, s> (n photons, atom
//! state s) sits at index 2*n + s, with s = 0 for ground and s = 1 for
//! excited. So |0g>, |0e>, |1g>, |1e>, ... in order.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Atom level, used wherever a basis index is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomState {
    Ground,
    Excited,
}

impl AtomState {
    pub fn index(self) -> usize {
        match self {
            AtomState::Ground => 0,
            AtomState::Excited => 1,
        }
    }
}

/// Photon-number-truncated product space. `n_max` is the highest Fock state
/// kept, so the dimension is 2 * (n_max + 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter(
                "n_max must be >= 1: at least one photon is needed to couple atom and field".into(),
            ));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    /// Flat index of |n, atom>.
    pub fn index(&self, n: usize, atom: AtomState) -> usize {
        assert!(n <= self.n_max, "photon number {n} exceeds n_max {}", self.n_max);
        2 * n + atom.index()
    }

    /// Inverse of `index`.
    pub fn unindex(&self, idx: usize) -> (usize, AtomState) {
        assert!(idx < self.dim(), "index {idx} out of range for dim {}", self.dim());
        let atom = if idx.is_multiple_of(2) { AtomState::Ground } else { AtomState::Excited };
        (idx / 2, atom)
    }

    /// Unit column vector for |n, atom>.
    pub fn basis_vector(&self, n: usize, atom: AtomState) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(self.dim());
        v[self.index(n, atom)] = C64::new(1.0, 0.0);
        v
    }
}

/// Which vacuum-Rabi branch of the n-excitation doublet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DressedBranch {
    Upper,
    Lower,
}

/// The dressed basis of the undriven resonant Jaynes-Cummings ladder:
///
///   |n, +/-> = (|n, g> +/- |n-1, e>) / sqrt(2),  energy shift -/+ g sqrt(n)
///
/// relative to n quanta. In the +delta drive-frame convention used here, a
/// drive detuned to delta = +g is resonant with the *lower* branch |1, ->
/// and delta = -g with the upper branch |1, +>.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    space: HilbertSpace,
    /// Unitary whose columns are the dressed states expressed in the bare
    /// basis. Column layout: |0g>, then (|1,+>, |1,->), (|2,+>, |2,->), ...,
    /// and finally the uncoupled truncation edge state |n_max, e>.
    unitary: DMatrix<C64>,
}

impl DressedBasis {
    pub fn new(space: HilbertSpace) -> Self {
        let dim = space.dim();
        let mut u = DMatrix::zeros(dim, dim);
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        // Column 0: the ground state |0, g> is already dressed.
        u[(space.index(0, AtomState::Ground), 0)] = C64::new(1.0, 0.0);
        for n in 1..=space.n_max() {
            let col_plus = 2 * n - 1;
            let col_minus = 2 * n;
            let ng = space.index(n, AtomState::Ground);
            let ne = space.index(n - 1, AtomState::Excited);
            u[(ng, col_plus)] = inv_sqrt2;
            u[(ne, col_plus)] = inv_sqrt2;
            u[(ng, col_minus)] = inv_sqrt2;
            u[(ne, col_minus)] = -inv_sqrt2;
        }
        // The state |n_max, e> has no partner |n_max + 1, g> inside the
        // truncation; keep it as the final column so U stays unitary.
        u[(space.index(space.n_max(), AtomState::Excited), dim - 1)] = C64::new(1.0, 0.0);
        Self { space, unitary: u }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn unitary(&self) -> &DMatrix<C64> {
        &self.unitary
    }

    /// Column index of |n, branch> in the unitary, n >= 1.
    pub fn column(&self, n: usize, branch: DressedBranch) -> usize {
        assert!(n >= 1 && n <= self.space.n_max(), "dressed doublets exist for 1 <= n <= n_max");
        match branch {
            DressedBranch::Upper => 2 * n - 1,
            DressedBranch::Lower => 2 * n,
        }
    }

    /// The dressed state |n, branch> as a bare-basis column vector.
    pub fn state(&self, n: usize, branch: DressedBranch) -> nalgebra::DVector<C64> {
        self.unitary.column(self.column(n, branch)).into_owned()
    }

    /// Overlap <n, branch | psi> for a bare-basis vector psi.
    pub fn overlap(&self, n: usize, branch: DressedBranch, psi: &nalgebra::DVector<C64>) -> C64 {
        self.state(n, branch).dotc(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn index_roundtrip_and_ordering() {
        let space = HilbertSpace::new(3).unwrap();
        assert_eq!(space.dim(), 8);
        assert_eq!(space.index(0, AtomState::Ground), 0);
        assert_eq!(space.index(0, AtomState::Excited), 1);
        assert_eq!(space.index(2, AtomState::Ground), 4);
        for idx in 0..space.dim() {
            let (n, s) = space.unindex(idx);
            assert_eq!(space.index(n, s), idx);
        }
    }

    #[test]
    fn rejects_zero_photon_truncation() {
        assert!(HilbertSpace::new(0).is_err());
    }

    #[test]
    fn dressed_basis_is_unitary() {
        let space = HilbertSpace::new(3).unwrap();
        let dressed = DressedBasis::new(space);
        let u = dressed.unitary();
        let gram = u.adjoint() * u;
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram[(i, j)].re, want, epsilon = 1e-14);
                assert_relative_eq!(gram[(i, j)].im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dressed_states_have_expected_components() {
        let space = HilbertSpace::new(2).unwrap();
        let dressed = DressedBasis::new(space);
        let plus = dressed.state(1, DressedBranch::Upper);
        let minus = dressed.state(1, DressedBranch::Lower);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(plus[space.index(1, AtomState::Ground)].re, s, epsilon = 1e-15);
        assert_relative_eq!(plus[space.index(0, AtomState::Excited)].re, s, epsilon = 1e-15);
        assert_relative_eq!(minus[space.index(1, AtomState::Ground)].re, s, epsilon = 1e-15);
        assert_relative_eq!(minus[space.index(0, AtomState::Excited)].re, -s, epsilon = 1e-15);
    }
}
