//! Steady-state atom-field entanglement in a weakly driven single-atom
//! cavity.
//!
//! A two-level atom couples to one cavity mode (strength `g`); the cavity
//! is driven by a weak coherent field (amplitude `epsilon`, detuning
//! `delta`) and decays through the mirror at rate `kappa`, while the atom
//! emits out the side at rate `gamma`. In the weak-drive limit the steady
//! state is pure through second order in the drive, and its five basis
//! amplitudes have closed forms from which everything else follows:
//! entanglement (concurrence and entropy via the factorization defect),
//! the saturation ratios `q` and `p` (the two-excitation amplitudes
//! relative to the products of single-excitation ones), the normalized
//! cross-correlations `g2_tf`, `h_tf`, `g2_tt` they fix, and the Schwarz
//! inequality those correlations can violate.
//!
//! Three independent backends cross-check each other:
//!
//! - [`analytics`]: the closed-form amplitudes and everything derived
//!   from them, at any detuning.
//! - [`mesolve`]: a Lindblad steady-state solver on the truncated
//!   atom-cavity space, plus an order-by-order weak-drive expansion whose
//!   coefficients stay exact where finite-drive arithmetic cancels.
//! - [`trajectory`]: a Monte Carlo unraveling into mirror and side
//!   emission channels with click-stream estimators for the same
//!   correlations.
//!
//! [`sweep`] ties them together: parameter grids, peak location, detuning
//! asymptotics, a three-backend verification pipeline, and deterministic
//! CSV / JSON-lines export.
//!
//! ```
//! use cqed_core::{
//!     correlation_set, entanglement_report, resonant_amplitudes, SystemParams,
//! };
//!
//! // Strongly coupled point: g = 1, kappa = 0.5, gamma = 1, drive 0.01.
//! let params = SystemParams::resonant(1.0, 0.5, 1.0, 0.01)?;
//! let amps = resonant_amplitudes(&params)?;
//! let report = entanglement_report(&amps, params.epsilon / params.kappa);
//! assert!((report.concurrence - 4.2667e-5).abs() < 1e-9);
//!
//! // The same point bunches the cross-correlations and violates Schwarz.
//! let corr = correlation_set(&amps)?;
//! assert!((corr.g2_tf - 25.0 / 9.0).abs() < 1e-12);
//! assert!(corr.schwarz_violated);
//! # Ok::<(), cqed_core::Error>(())
//! ```

pub mod analytics;
pub mod error;
pub mod hilbert;
pub mod mesolve;
pub mod operators;
pub mod params;
pub mod sweep;
pub mod trajectory;

pub use analytics::{
    concurrence_closed_form, concurrence_from_xi, correlation_set, detuned_amplitudes,
    dressed_state_projection, entanglement_report, resonant_amplitudes, witness_identity_check,
    CorrelationSet, DressedProjection, EntanglementReport, WeakDriveAmplitudes, WitnessCheck,
};
pub use error::{Error, Result};
pub use hilbert::{AtomState, DressedBasis, DressedBranch, HilbertSpace};
pub use mesolve::{
    build_liouvillian, normalized_correlations, observables, solve_steady_state, steady_state,
    truncation_convergence, weak_drive_expansion, DensityOperator, Liouvillian,
    SteadyStateObservables, WeakDriveExpansion,
};
pub use operators::{
    build_effective_hamiltonian, build_hamiltonian, build_operators, jump_operators, CMat,
    JumpScaling, OperatorSet,
};
pub use params::SystemParams;
pub use sweep::{
    find_peak, find_schwarz_counterexample, fit_detuning_slope, run_sweep, verify_pipeline,
    write_csv, write_json_lines, AxisScale, AxisSpec, Backend, ParamAxis, Peak, Quantity,
    RowStatus, SchwarzPoint, SchwarzRegion, SlopeFit, SlopeSource, SweepResult, SweepRow,
    SweepSpec, VerificationReport, VerifyConfig,
};
pub use trajectory::{
    default_trajectory_drive, ensemble_average, estimate_g2_tf, estimate_h_tf, evolve_trajectory,
    run_ensemble, Channel, ClickEvent, ClickRecord, ConditionedSample, Estimate, InitialState,
    TrajectoryConfig, TrajectoryOutcome,
};
