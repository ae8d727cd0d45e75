//! Physical parameters of the driven atom-cavity system and the handful of
//! dimensionless combinations (cooperativities, saturation parameters) that
//! the weak-drive theory is written in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates of the coherently driven Jaynes-Cummings system, all in the same
/// frequency units (hbar = 1; the natural choice is units of the atomic
/// linewidth `gamma`, but nothing below assumes gamma = 1).
///
/// Conventions:
/// - `kappa` is the *field-amplitude* decay rate of the cavity, so photon
///   number decays at 2*kappa and the mirror jump operator is sqrt(2 kappa) a.
/// - `gamma` is the full spontaneous-emission rate of the atom (population
///   decays at gamma; the side jump operator is sqrt(gamma) sigma_minus).
/// - `delta = omega - omega_l`: atom and cavity are mutually resonant at
///   `omega`, detuned from the drive laser at `omega_l`. In the drive frame
///   the Hamiltonian picks up +delta (a'a + sigma_+ sigma_-).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atom-cavity dipole coupling rate, g >= 0.
    pub g: f64,
    /// Cavity field-amplitude decay rate, kappa > 0.
    pub kappa: f64,
    /// Atomic spontaneous-emission rate, gamma > 0.
    pub gamma: f64,
    /// Coherent drive amplitude on the cavity, epsilon >= 0.
    pub epsilon: f64,
    /// Common atom/cavity detuning from the drive, unrestricted.
    pub delta: f64,
}

impl SystemParams {
    pub fn new(g: f64, kappa: f64, gamma: f64, epsilon: f64, delta: f64) -> Result<Self> {
        let params = Self { g, kappa, gamma, epsilon, delta };
        params.validate()?;
        Ok(params)
    }

    /// Re-check the invariants. Useful after deserializing or building the
    /// struct literally, which bypass `new`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParameter(format!("g = {} must be >= 0", self.g)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!("kappa = {} must be > 0", self.kappa)));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!("gamma = {} must be > 0", self.gamma)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} must be >= 0",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Parameters on resonance (delta = 0).
    pub fn resonant(g: f64, kappa: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(g, kappa, gamma, epsilon, 0.0)
    }

    /// Copy with a different detuning.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Copy with a different drive amplitude.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Single-atom cooperativity C1 = g^2 / (kappa gamma).
    pub fn c1(&self) -> f64 {
        self.g * self.g / (self.kappa * self.gamma)
    }

    /// Primed cooperativity C1' = C1 * 2 kappa / (2 kappa + gamma), the
    /// two-excitation analogue that controls the saturation corrections.
    pub fn c1_prime(&self) -> f64 {
        self.c1() * 2.0 * self.kappa / (2.0 * self.kappa + self.gamma)
    }

    /// Saturation parameter p = 1 - 2 C1' (real, resonant form).
    pub fn saturation_p(&self) -> f64 {
        1.0 - 2.0 * self.c1_prime()
    }

    /// Saturation parameter q = (1 + 2 C1) / (1 + 2 C1 - 2 C1') (real,
    /// resonant form). The denominator 1 + 2 C1 gamma/(2 kappa + gamma) is
    /// strictly positive, so q >= 1 always.
    pub fn saturation_q(&self) -> f64 {
        let two_c1 = 2.0 * self.c1();
        (1.0 + two_c1) / (1.0 + two_c1 - 2.0 * self.c1_prime())
    }

    /// Entanglement scale xi = (2g / (gamma (1+2C1)^2)) (q - 1), the
    /// drive-independent factor in C = 2 (epsilon/kappa)^2 |xi|.
    pub fn xi(&self) -> f64 {
        let denom = 1.0 + 2.0 * self.c1();
        2.0 * self.g / (self.gamma * denom * denom) * (self.saturation_q() - 1.0)
    }

    /// Weak-drive validity check: (epsilon/kappa)^2 <= threshold * |xi|.
    /// The two-state entanglement picture needs the two-excitation amplitude
    /// to stay perturbative relative to the entangled component.
    pub fn is_weak(&self, threshold: f64) -> bool {
        let eok = self.epsilon / self.kappa;
        eok * eok <= threshold * self.xi().abs()
    }

    /// Largest rate in play; step-size guards scale against this.
    pub fn max_rate(&self) -> f64 {
        self.kappa.max(self.gamma).max(self.g).max(self.delta.abs()).max(self.epsilon)
    }
}
