//! Acceptance gates: one independent check per shipped claim, each printing
//! a single PASS/FAIL line with its measured value and pinned tolerance.
//!
//! Gate 6 (detuning asymptotics of the concurrence) asserts the documented
//! target slope of -3 over detuning/linewidth in [30, 300]. The model's own
//! algebra gives -5 on that window: the two leading detuning orders of q - 1
//! cancel identically, leaving the factorization defect to fall as the fifth
//! power. The gate is kept as stated and fails; the library's regression
//! tests pin the true exponents (-5 for the amplitude path, -4 for the
//! mixed-state trace proxy) where they are enforced green.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use cqed_core::{
    build_liouvillian, build_operators, concurrence_closed_form, concurrence_from_xi,
    correlation_set, detuned_amplitudes, entanglement_report, estimate_g2_tf, estimate_h_tf,
    find_peak, find_schwarz_counterexample, fit_detuning_slope, normalized_correlations,
    observables, resonant_amplitudes, run_ensemble, steady_state, Channel, DressedBasis,
    HilbertSpace, ParamAxis, Quantity, SchwarzRegion, SlopeSource, SystemParams, TrajectoryConfig,
    WeakDriveAmplitudes,
};

fn report(number: u32, name: &str, pass: bool, detail: &str) {
    println!("[criterion {number}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn rel_dev(measured: f64, expected: f64) -> f64 {
    (measured - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_1_closed_form_consistency() {
    const TOL: f64 = 1e-10;
    const DRAWS: usize = 1000;
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xc1);
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let log_range = (0.05f64.ln(), 5.0f64.ln());
        let g = rng.random_range(log_range.0..log_range.1).exp();
        let kappa = rng.random_range(log_range.0..log_range.1).exp();
        let gamma = rng.random_range(log_range.0..log_range.1).exp();
        let epsilon = kappa * 10f64.powf(rng.random_range(-4.0..-2.0));
        let params = SystemParams::resonant(g, kappa, gamma, epsilon).unwrap();
        let via_xi = concurrence_from_xi(&params).unwrap();
        let closed = concurrence_closed_form(&params).unwrap();
        worst = worst.max(rel_dev(via_xi, closed));
    }
    let elapsed = start.elapsed();
    let pass = worst <= TOL && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "closed-form consistency",
        pass,
        &format!(
            "max rel dev {worst:.3e} over {DRAWS} draws (tol {TOL:.0e}), {:.0} ms (limit 1 s)",
            elapsed.as_secs_f64() * 1e3
        ),
    );
    assert!(pass, "worst deviation {worst:.3e}, elapsed {elapsed:?}");
}

#[test]
fn criterion_2_worked_point_fixture() {
    const TOL: f64 = 1e-9;
    let params = SystemParams::resonant(1.0, 0.5, 1.0, 0.01).unwrap();
    let amps = resonant_amplitudes(&params).unwrap();
    let measures = entanglement_report(&amps, params.epsilon / params.kappa);
    let corr = correlation_set(&amps).unwrap();

    let concurrence_expected = 2.0 * (0.01f64 / 0.5).powi(2) * (4.0 / 75.0);
    let checks = [
        ("C1", rel_dev(amps.c1, 2.0)),
        ("C1'", rel_dev(amps.c1p, 1.0)),
        ("p", (amps.p - C64::new(-1.0, 0.0)).norm()),
        ("q", (amps.q - C64::new(5.0 / 3.0, 0.0)).norm() / (5.0 / 3.0)),
        ("C", rel_dev(measures.concurrence, concurrence_expected)),
        ("g2_tf", rel_dev(corr.g2_tf, 25.0 / 9.0)),
        ("h_tf", rel_dev(corr.h_tf, 5.0 / 3.0)),
    ];
    let worst =
        checks.iter().fold(("", 0.0f64), |acc, (n, d)| if *d > acc.1 { (n, *d) } else { acc });
    let pass = worst.1 <= TOL && corr.schwarz_violated;
    report(
        2,
        "worked-point fixture",
        pass,
        &format!(
            "C1=2 C1'=1 p=-1 q=5/3 C=4.2667e-5 g2_tf=25/9 h_tf=5/3 Schwarz violated; \
             worst rel dev {:.3e} at {} (tol {TOL:.0e})",
            worst.1, worst.0
        ),
    );
    assert!(pass, "worst deviation {:.3e} at {}", worst.1, worst.0);
}

#[test]
fn criterion_3_master_equation_oracle() {
    const TOL: f64 = 1e-3;
    const SLOPE_BAND: f64 = 0.1;
    let base = SystemParams::resonant(1.0, 0.5, 1.0, 1e-3).unwrap();
    let space = HilbertSpace::new(4).unwrap();
    let ops = build_operators(space);

    let pooled_error = |epsilon: f64| -> f64 {
        let params = base.with_epsilon(epsilon);
        let amps = resonant_amplitudes(&params).unwrap();
        let reference = correlation_set(&amps).unwrap();
        let rho = steady_state(&build_liouvillian(&params, space).unwrap()).unwrap();
        let obs = observables(&rho, &ops);
        let corr = normalized_correlations(&obs).unwrap();
        let errs = [
            rel_dev(obs.mean_field.norm(), amps.a1g.norm()),
            rel_dev(corr.g2_tf, reference.g2_tf),
            rel_dev(corr.g2_tt, reference.g2_tt),
            rel_dev(corr.h_tf, reference.h_tf),
        ];
        (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
    };

    // Values at the tested drive against the closed forms.
    let params = base;
    let amps = resonant_amplitudes(&params).unwrap();
    let alpha_expected = params.epsilon / (params.kappa * (1.0 + 2.0 * amps.c1));
    let q = 5.0 / 3.0;
    let p = -1.0;
    let rho = steady_state(&build_liouvillian(&params, space).unwrap()).unwrap();
    let obs = observables(&rho, &ops);
    let corr = normalized_correlations(&obs).unwrap();
    let value_checks = [
        ("|<a>|", rel_dev(obs.mean_field.norm(), alpha_expected)),
        ("g2_tf", rel_dev(corr.g2_tf, q * q)),
        ("g2_tt", rel_dev(corr.g2_tt, q * q * p * p)),
        ("h_tf", rel_dev(corr.h_tf, q)),
    ];
    let worst = value_checks.iter().fold(
        ("", 0.0f64),
        |acc, (n, d)| {
            if *d > acc.1 {
                (n, *d)
            } else {
                acc
            }
        },
    );

    // Deviation from the weak-drive forms must shrink as the drive squared.
    let eps_list: [f64; 3] = [1e-2, 3e-3, 1e-3];
    let points: Vec<(f64, f64)> =
        eps_list.iter().map(|&e| (e.ln(), pooled_error(e).ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();

    let pass = worst.1 <= TOL && (slope - 2.0).abs() <= SLOPE_BAND;
    report(
        3,
        "master-equation oracle",
        pass,
        &format!(
            "n_max=4, drive 1e-3: worst rel dev {:.3e} at {} (tol {TOL:.0e}); \
             deviation slope {slope:.4} vs drive (band 2 +- {SLOPE_BAND})",
            worst.1, worst.0
        ),
    );
    assert!(pass, "worst {:.3e} at {}, slope {slope:.4}", worst.1, worst.0);
}

#[test]
fn criterion_4_steady_state_purity() {
    let space = HilbertSpace::new(4).unwrap();
    let points = [
        SystemParams::new(1.0, 0.5, 1.0, 1e-3, 0.0).unwrap(),
        SystemParams::new(1.0, 0.5, 1.0, 1e-2, 0.0).unwrap(),
        SystemParams::new(2.0, 0.5, 1.0, 1e-2, 0.0).unwrap(),
        SystemParams::new(1.0, 10.0, 1.0, 5e-2, 0.0).unwrap(),
        SystemParams::new(1.0, 0.5, 1.0, 1e-2, 1.0).unwrap(),
        SystemParams::new(1.0, 1.0, 1.0, 1e-2, 0.0).unwrap(),
    ];
    let mut worst_margin = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut pass = true;
    for params in &points {
        let rho = steady_state(&build_liouvillian(params, space).unwrap()).unwrap();
        let impurity = 1.0 - rho.purity();
        let bound = 10.0 * (params.epsilon / params.kappa).powi(2);
        if impurity > bound {
            pass = false;
        }
        let margin = bound / impurity.max(f64::MIN_POSITIVE);
        if margin < worst_margin {
            worst_margin = margin;
            worst = (impurity, bound);
        }
    }
    report(
        4,
        "steady-state purity",
        pass,
        &format!(
            "1 - Tr rho^2 <= 10 (eps/kappa)^2 at {} points; tightest {:.3e} vs bound {:.3e}",
            points.len(),
            worst.0,
            worst.1
        ),
    );
    assert!(pass, "impurity {:.3e} exceeded bound {:.3e}", worst.0, worst.1);
}

#[test]
fn criterion_5_peak_structure() {
    let start = Instant::now();
    let fast_cavity = SystemParams::new(1.0, 10.0, 1.0, 0.01, 0.0).unwrap();
    let fast = find_peak(&fast_cavity, ParamAxis::G, (0.5, 8.0), Quantity::Concurrence).unwrap();
    let slow_cavity = SystemParams::new(1.0, 0.5, 1.0, 0.01, 0.0).unwrap();
    let slow = find_peak(&slow_cavity, ParamAxis::G, (0.1, 3.0), Quantity::Concurrence).unwrap();
    let ratio = slow.max_value / fast.max_value;
    let elapsed = start.elapsed();
    let pass = (3.0..=5.0).contains(&fast.argmax)
        && (25.0..=35.0).contains(&ratio)
        && elapsed.as_secs_f64() < 1.0;
    report(
        5,
        "peak structure",
        pass,
        &format!(
            "argmax_g C = {:.4} at kappa/gamma=10 (window [3, 5]); peak ratio \
             kappa/gamma=0.5 over 10 = {ratio:.2} (window [25, 35]); {:.0} ms",
            fast.argmax,
            elapsed.as_secs_f64() * 1e3
        ),
    );
    assert!(pass, "argmax {:.4}, ratio {ratio:.3}", fast.argmax);
}

#[test]
fn criterion_6_detuning_asymptotics() {
    const TARGET: f64 = -3.0;
    const BAND: f64 = 0.1;
    let params = SystemParams::resonant(1.0, 0.5, 1.0, 0.01).unwrap();
    let fit =
        fit_detuning_slope(&params, (30.0, 300.0), 25, SlopeSource::AnalyticAmplitudes).unwrap();
    let pass = (fit.slope - TARGET).abs() <= BAND;
    report(
        6,
        "detuning asymptotics",
        pass,
        &format!(
            "log-log slope of C over detuning/linewidth in [30, 300] = {:.4} \
             (target {TARGET} +- {BAND}); the amplitude algebra gives -5 here: \
             the two leading detuning orders of q - 1 cancel identically, so the \
             factorization defect falls as the fifth power and no quantity in \
             this model falls as the third",
            fit.slope
        ),
    );
    assert!(
        pass,
        "measured slope {:.4} (residual {:.2e}); the target -3 +- {BAND} is \
         unreachable: q - 1 loses its two leading detuning orders to an exact \
         cancellation, leaving C ~ detuning^-5 (and the mixed-state trace proxy \
         ~ detuning^-4); the true exponents are pinned green in the library's \
         regression tests",
        fit.slope, fit.residual_rms
    );
}

#[test]
fn criterion_7_trajectory_witness_estimates() {
    const MIN_SIDE_CLICKS: usize = 10_000;
    const WINDOW: f64 = 0.1;
    let start = Instant::now();
    let kappa = 2.0;
    let params = SystemParams::new(1.0, kappa, 1.0, 0.05 * kappa, 0.0).unwrap();
    let space = HilbertSpace::new(3).unwrap();
    let mut config = TrajectoryConfig::default_for(&params);
    config.n_trajectories = 420;
    config.t_total = config.burn_in + 10_600.0;
    config.seed = 0x0ace;
    let outcomes = run_ensemble(&params, space, &config).unwrap();

    let side_clicks: usize = outcomes.iter().map(|o| o.record.count_in_window(Channel::Side)).sum();
    let grounded = outcomes.iter().flat_map(|o| &o.samples).all(|s| s.excited_population == 0.0);
    let sample_count: usize = outcomes.iter().map(|o| o.samples.len()).sum();

    let reference = {
        let rho = steady_state(&build_liouvillian(&params, space).unwrap()).unwrap();
        let ops = build_operators(space);
        normalized_correlations(&observables(&rho, &ops)).unwrap()
    };
    let g2 = estimate_g2_tf(&outcomes, WINDOW).unwrap();
    let h = estimate_h_tf(&outcomes).unwrap();
    let g2_dev_se = (g2.value - reference.g2_tf).abs() / g2.stderr;
    let h_dev_se = (h.value - reference.h_tf).abs() / h.stderr;
    let elapsed = start.elapsed();

    let pass = side_clicks >= MIN_SIDE_CLICKS && grounded && g2_dev_se <= 3.0 && h_dev_se <= 3.0;
    report(
        7,
        "trajectory witness estimates",
        pass,
        &format!(
            "drive = 0.05 kappa, {side_clicks} side clicks (need >= {MIN_SIDE_CLICKS}): \
             g2_tf = {:.3} +- {:.3} vs {:.3} ({g2_dev_se:.2} SE), \
             h_tf = {:.4} +- {:.4} vs {:.4} ({h_dev_se:.2} SE), \
             atom in its ground state after all {sample_count} side collapses: {grounded}; \
             {:.0} s",
            g2.value,
            g2.stderr,
            reference.g2_tf,
            h.value,
            h.stderr,
            reference.h_tf,
            elapsed.as_secs_f64()
        ),
    );
    assert!(
        pass,
        "side clicks {side_clicks}, g2 {g2_dev_se:.2} SE, h {h_dev_se:.2} SE, grounded {grounded}"
    );
}

#[test]
fn criterion_8_property_suite() {
    const UNITARITY_TOL: f64 = 1e-12;
    let mut rng = ChaCha12Rng::seed_from_u64(0xc8);
    let mut pass = true;
    let mut detail = Vec::new();

    // Factorized two-mode amplitudes: zero concurrence, unit correlations.
    let mut worst_c = 0.0f64;
    let mut worst_corr = 0.0f64;
    for _ in 0..100 {
        let mut draw = || {
            let r = 10f64.powf(rng.random_range(-4.0..-1.0));
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(r, phase)
        };
        let a1g = draw();
        let a0e = draw();
        let amps = WeakDriveAmplitudes {
            a1g,
            a0e,
            a2g: a1g * a1g / C64::new(2.0f64.sqrt(), 0.0),
            a1e: a1g * a0e,
            alpha: a1g,
            beta: a0e,
            p: C64::new(1.0, 0.0),
            q: C64::new(1.0, 0.0),
            c1: 0.0,
            c1p: 0.0,
            xi: 0.0,
        };
        worst_c = worst_c.max(entanglement_report(&amps, 0.0).concurrence);
        let corr = correlation_set(&amps).unwrap();
        for value in [corr.g1_tf, corr.g2_tf, corr.h_tf, corr.g2_tt] {
            worst_corr = worst_corr.max((value - 1.0).abs());
        }
    }
    pass &= worst_c <= 1e-12 && worst_corr <= 1e-12;
    detail.push(format!(
        "factorized: C <= {worst_c:.1e}, correlations off unity by <= {worst_corr:.1e}"
    ));

    // No coupling: no entanglement.
    let uncoupled = SystemParams::new(0.0, 0.5, 1.0, 0.01, 0.0).unwrap();
    let amps = detuned_amplitudes(&uncoupled).unwrap();
    let c_uncoupled = entanglement_report(&amps, 0.02).concurrence;
    pass &= c_uncoupled == 0.0;
    detail.push(format!("g=0: C = {c_uncoupled:.1e}"));

    // Doubling the drive quadruples the concurrence.
    let mut worst_ratio_dev = 0.0f64;
    for _ in 0..100 {
        let g = 10f64.powf(rng.random_range(-1.0..0.7));
        let kappa = 10f64.powf(rng.random_range(-1.0..0.7));
        let gamma = 10f64.powf(rng.random_range(-1.0..0.7));
        let delta = rng.random_range(-2.0..2.0);
        let epsilon = 1e-3 * kappa;
        let params = SystemParams::new(g, kappa, gamma, epsilon, delta).unwrap();
        let single = entanglement_report(&detuned_amplitudes(&params).unwrap(), 0.0).concurrence;
        let doubled = entanglement_report(
            &detuned_amplitudes(&params.with_epsilon(2.0 * epsilon)).unwrap(),
            0.0,
        )
        .concurrence;
        worst_ratio_dev = worst_ratio_dev.max(rel_dev(doubled, 4.0 * single));
    }
    pass &= worst_ratio_dev <= 1e-12;
    detail.push(format!("drive doubling: C ratio off 4 by <= {worst_ratio_dev:.1e}"));

    // q = 1 pins the cross-correlations at unity whatever p does.
    let mut worst_q1 = 0.0f64;
    for _ in 0..100 {
        let mut draw = || {
            let r = 10f64.powf(rng.random_range(-4.0..-1.0));
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(r, phase)
        };
        let a1g = draw();
        let a0e = draw();
        let p = C64::from_polar(
            rng.random_range(0.1..3.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let amps = WeakDriveAmplitudes {
            a1g,
            a0e,
            a2g: p * a1g * a1g / C64::new(2.0f64.sqrt(), 0.0),
            a1e: a1g * a0e,
            alpha: a1g,
            beta: a0e,
            p,
            q: C64::new(1.0, 0.0),
            c1: 0.0,
            c1p: 0.0,
            xi: 0.0,
        };
        let corr = correlation_set(&amps).unwrap();
        worst_q1 = worst_q1.max((corr.g2_tf - 1.0).abs().max((corr.h_tf - 1.0).abs()));
    }
    pass &= worst_q1 <= 1e-12;
    detail.push(format!("q=1: g2_tf and h_tf off unity by <= {worst_q1:.1e}"));

    // Dressed change of basis is unitary.
    let mut worst_unitarity = 0.0f64;
    for n_max in 1..=8 {
        let space = HilbertSpace::new(n_max).unwrap();
        let basis = DressedBasis::new(space);
        let u = basis.unitary();
        let gram = u.adjoint() * u;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expected = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst_unitarity = worst_unitarity.max((gram[(i, j)] - expected).norm());
            }
        }
    }
    pass &= worst_unitarity <= UNITARITY_TOL;
    detail.push(format!("dressed unitarity off identity by <= {worst_unitarity:.1e}"));

    report(8, "property suite", pass, &detail.join("; "));
    assert!(pass, "{}", detail.join("; "));
}

#[test]
fn criterion_9_schwarz_independence() {
    let base = SystemParams::resonant(1.0, 0.5, 1.0, 0.01).unwrap();
    let region = SchwarzRegion {
        g_range: (0.1, 5.0),
        kappa_range: (0.1, 10.0),
        g_count: 50,
        kappa_count: 100,
    };
    let hit = find_schwarz_counterexample(&base, &region).unwrap();
    // Committed fixture: the first row-major hit of this scan.
    let fixture_ok = rel_dev(hit.params.g, 0.1) <= 1e-12 && rel_dev(hit.params.kappa, 0.1) <= 1e-12;
    let pass = fixture_ok
        && hit.concurrence > 0.0
        && !hit.correlations.schwarz_violated
        && hit.correlations.schwarz_lhs <= hit.correlations.schwarz_rhs;
    report(
        9,
        "schwarz independence",
        pass,
        &format!(
            "committed point g={:.3} kappa={:.3}: C = {:.3e} > 0 with \
             (g2_tf-1)^2 = {:.3e} <= |(g2_tt-1)(g2_ff-1)| = {:.3e} (no violation)",
            hit.params.g,
            hit.params.kappa,
            hit.concurrence,
            hit.correlations.schwarz_lhs,
            hit.correlations.schwarz_rhs
        ),
    );
    assert!(pass, "hit at g={} kappa={}", hit.params.g, hit.params.kappa);
}
