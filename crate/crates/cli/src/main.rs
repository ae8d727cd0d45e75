//! `cqed`: command-line front end for the driven atom-cavity entanglement
//! library. Point evaluations (amplitudes, measures, correlations), grid
//! sweeps, master-equation solves, Monte Carlo trajectory runs, the
//! three-backend verification pipeline, and the Schwarz-independence scan.
//!
//! Parameters come from flags or a flat TOML config file (flags win);
//! unless `--units absolute` is given, rates and detunings are in units of
//! the atomic linewidth gamma, whose absolute scale is set by `--gamma`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 verification failure,
//! 4 insufficient statistics.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use cqed_core::{
    build_liouvillian, correlation_set, default_trajectory_drive, detuned_amplitudes,
    entanglement_report, estimate_g2_tf, estimate_h_tf, find_schwarz_counterexample,
    normalized_correlations, observables, run_ensemble, run_sweep, steady_state,
    truncation_convergence, verify_pipeline, write_csv, write_json_lines, AtomState, AxisScale,
    AxisSpec, Backend, Channel, Error, HilbertSpace, JumpScaling, ParamAxis, Quantity,
    SchwarzRegion, SweepSpec, SystemParams, TrajectoryConfig, VerifyConfig,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;
const EXIT_STATISTICS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "cqed",
    version,
    about = "Steady-state entanglement of a weakly driven atom-cavity system",
    max_term_width = 100
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat TOML config file mirroring the flags; explicit flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Atom-cavity coupling.
    #[arg(long, global = true)]
    g: Option<f64>,
    /// Cavity field decay rate.
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Atomic linewidth (also the unit scale unless --units absolute).
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Drive amplitude.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Drive detuning from the common atom/cavity resonance.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Photon-number truncation for the master-equation backend.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Evaluation backend: analytic, master-equation, or both.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Random seed for trajectory runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Machine format: csv or json-lines (default: human-readable text).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Interpret numeric parameters in units of gamma (default) or as-is.
    #[arg(long, global = true)]
    units: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form weak-drive amplitudes and the saturation ratios q, p.
    Amplitudes,
    /// Entanglement measures: factorization defect, concurrence, entropy.
    Measures,
    /// Normalized cross-correlations and the Schwarz inequality test.
    Correlations,
    /// Evaluate quantities over a one- or two-axis parameter grid.
    Sweep(SweepArgs),
    /// Solve the truncated master equation for the steady state.
    Mesolve(MesolveArgs),
    /// Unravel the master equation into Monte Carlo click records.
    Trajectories(TrajectoryArgs),
    /// Chain analytics, master equation, and trajectories; check agreement.
    Verify(VerifyArgs),
    /// Scan for entangled points that satisfy the Schwarz inequality.
    SchwarzScan(SchwarzArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Axis as `param:min:max:count[:log]`; repeat once for a second axis.
    /// Defaults to the kappa x g contour grid.
    #[arg(long = "axis", value_name = "SPEC")]
    axes: Vec<String>,
    /// Comma-separated quantities: concurrence, concurrence-scaled, entropy,
    /// q, p, g2-tf, h-tf, g2-tt, schwarz, trace-proxy.
    #[arg(long, value_delimiter = ',')]
    quantities: Vec<String>,
}

#[derive(Args)]
struct MesolveArgs {
    /// Ascending truncation list (e.g. 2,4,8): report convergence of the
    /// key observables instead of a single solve.
    #[arg(long = "nmax-list", value_delimiter = ',')]
    nmax_list: Vec<usize>,
}

#[derive(Args)]
struct TrajectoryArgs {
    /// Ensemble size.
    #[arg(long = "n-traj")]
    n_trajectories: Option<usize>,
    /// Length of each trajectory (after which sampling stops).
    #[arg(long = "t-total")]
    t_total: Option<f64>,
    /// Integrator step.
    #[arg(long)]
    dt: Option<f64>,
    /// Discard interval before sampling starts.
    #[arg(long = "burn-in")]
    burn_in: Option<f64>,
    /// Coincidence window for the g2 estimator.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated drive amplitudes for the convergence study.
    #[arg(long = "epsilon-list", value_delimiter = ',')]
    epsilon_list: Vec<f64>,
    /// Also run the trajectory leg (slower).
    #[arg(long = "with-trajectories")]
    with_trajectories: bool,
    /// Ensemble size for the trajectory leg.
    #[arg(long = "n-traj")]
    n_trajectories: Option<usize>,
    /// Trajectory length for the trajectory leg.
    #[arg(long = "t-total")]
    t_total: Option<f64>,
    /// Test hook: halve the collapse-operator rates. The field-amplitude
    /// check must fail, proving the pipeline catches the mis-scaling.
    #[arg(long = "corrupt-jumps")]
    corrupt_jumps: bool,
}

#[derive(Args)]
struct SchwarzArgs {
    /// Coupling range `lo:hi`.
    #[arg(long = "g-range", default_value = "0.1:5")]
    g_range: String,
    /// Cavity-rate range `lo:hi`.
    #[arg(long = "kappa-range", default_value = "0.1:10")]
    kappa_range: String,
    /// Grid resolution `g-count:kappa-count`.
    #[arg(long, default_value = "50:100")]
    grid: String,
}

/// Config-file twin of the flags. Unknown keys are rejected so a typo
/// cannot silently fall back to a default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    g: Option<f64>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    delta: Option<f64>,
    nmax: Option<usize>,
    backend: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
    units: Option<String>,
    axis: Option<String>,
    axis2: Option<String>,
    quantities: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = Failure;
    fn from_str(s: &str) -> Result<Self, Failure> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json-lines" => Ok(OutputFormat::JsonLines),
            other => Err(Failure::validation(format!(
                "unknown format `{other}` (expected csv or json-lines)"
            ))),
        }
    }
}

/// Everything a subcommand needs, merged from flags over config over
/// defaults and converted to absolute units.
struct Inputs {
    g: f64,
    kappa: f64,
    gamma: f64,
    epsilon: Option<f64>,
    delta: f64,
    nmax: usize,
    backend: Backend,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    /// Multiplier taking flag values to absolute units (gamma, or 1 when
    /// `--units absolute`); ranges and axes follow the same convention.
    unit_scale: f64,
    axis_strings: Vec<String>,
    quantity_strings: Vec<String>,
}

impl Inputs {
    /// Parameter point with the standard weak drive fallback.
    fn params(&self) -> Result<SystemParams, Failure> {
        let epsilon = self.epsilon.unwrap_or(0.01 * self.gamma);
        SystemParams::new(self.g, self.kappa, self.gamma, epsilon, self.delta)
            .map_err(Failure::from)
    }

    /// Parameter point defaulting the drive to the trajectory convention
    /// (a twentieth of the cavity rate).
    fn params_for_trajectories(&self) -> Result<SystemParams, Failure> {
        let epsilon = self.epsilon.unwrap_or_else(|| default_trajectory_drive(self.kappa));
        SystemParams::new(self.g, self.kappa, self.gamma, epsilon, self.delta)
            .map_err(Failure::from)
    }
}

#[derive(Debug)]
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure { message: message.into(), code: EXIT_VALIDATION }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InsufficientStatistics { .. } => EXIT_STATISTICS,
            _ => EXIT_VALIDATION,
        };
        Failure { message: e.to_string(), code }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let inputs = resolve(&cli.common)?;
    match &cli.command {
        Command::Amplitudes => cmd_amplitudes(&inputs),
        Command::Measures => cmd_measures(&inputs),
        Command::Correlations => cmd_correlations(&inputs),
        Command::Sweep(args) => cmd_sweep(&inputs, args),
        Command::Mesolve(args) => cmd_mesolve(&inputs, args),
        Command::Trajectories(args) => cmd_trajectories(&inputs, args),
        Command::Verify(args) => cmd_verify(&inputs, args),
        Command::SchwarzScan(args) => cmd_schwarz_scan(&inputs, args),
    }
}

fn resolve(common: &CommonArgs) -> Result<Inputs, Failure> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::validation(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let units = common.units.clone().or(file.units).unwrap_or_else(|| "gamma".into());
    let scale = match units.as_str() {
        "gamma" => None,
        "absolute" => Some(1.0),
        other => {
            return Err(Failure::validation(format!(
                "unknown units `{other}` (expected gamma or absolute)"
            )))
        }
    };
    let gamma = common.gamma.or(file.gamma).unwrap_or(1.0);
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Failure::validation(format!("gamma must be positive, got {gamma}")));
    }
    // In gamma units every other parameter is a multiple of gamma.
    let scale = scale.unwrap_or(gamma);

    let backend = common
        .backend
        .as_deref()
        .or(file.backend.as_deref())
        .map(Backend::from_str)
        .transpose()?
        .unwrap_or(Backend::Analytic);
    let format = common
        .format
        .as_deref()
        .or(file.format.as_deref())
        .map(OutputFormat::from_str)
        .transpose()?;
    let mut axis_strings = Vec::new();
    if let Some(a) = &file.axis {
        axis_strings.push(a.clone());
    }
    if let Some(a) = &file.axis2 {
        if axis_strings.is_empty() {
            return Err(Failure::validation("config sets axis2 without axis"));
        }
        axis_strings.push(a.clone());
    }

    Ok(Inputs {
        g: common.g.or(file.g).unwrap_or(1.0) * scale,
        kappa: common.kappa.or(file.kappa).unwrap_or(0.5) * scale,
        gamma,
        epsilon: common.epsilon.or(file.epsilon).map(|e| e * scale),
        delta: common.delta.or(file.delta).unwrap_or(0.0) * scale,
        nmax: common.nmax.or(file.nmax).unwrap_or(4),
        backend,
        seed: common.seed.or(file.seed),
        out: common.out.clone().or(file.out),
        format,
        unit_scale: scale,
        axis_strings,
        quantity_strings: file
            .quantities
            .map(|q| q.split(',').map(|s| s.trim().to_string()).collect())
            .unwrap_or_default(),
    })
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match out {
        Some(path) => {
            Ok(Box::new(fs::File::create(path).map_err(|e| {
                Failure::validation(format!("cannot create {}: {e}", path.display()))
            })?))
        }
        None => Ok(Box::new(io::stdout())),
    }
}

/// (label, value) rows rendered as aligned text, `key,value` CSV, or one
/// JSON object line.
fn emit_rows(inputs: &Inputs, header: &str, rows: &[(&str, String)]) -> Result<u8, Failure> {
    let mut out = open_out(&inputs.out)?;
    match inputs.format {
        None => {
            writeln!(out, "{header}")?;
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (key, value) in rows {
                writeln!(out, "  {key:<width$}  {value}")?;
            }
        }
        Some(OutputFormat::Csv) => {
            writeln!(out, "key,value")?;
            for (key, value) in rows {
                writeln!(out, "{key},{value}")?;
            }
        }
        Some(OutputFormat::JsonLines) => {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .iter()
                .map(|(k, v)| {
                    let value = if let Ok(x) = v.parse::<f64>() {
                        serde_json::Value::from(x)
                    } else if let Ok(b) = v.parse::<bool>() {
                        serde_json::Value::from(b)
                    } else {
                        serde_json::Value::from(v.clone())
                    };
                    (k.to_string(), value)
                })
                .collect();
            writeln!(out, "{}", serde_json::Value::from(map))?;
        }
    }
    Ok(0)
}

fn fmt_c(z: num_complex::Complex64) -> String {
    format!("{:.12e} {:+.12e}i", z.re, z.im)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

fn point_header(params: &SystemParams) -> String {
    format!(
        "g={} kappa={} gamma={} epsilon={} delta={}",
        params.g, params.kappa, params.gamma, params.epsilon, params.delta
    )
}

fn cmd_amplitudes(inputs: &Inputs) -> Result<u8, Failure> {
    let params = inputs.params()?;
    let amps = detuned_amplitudes(&params)?;
    let rows = vec![
        ("a1g", fmt_c(amps.a1g)),
        ("a0e", fmt_c(amps.a0e)),
        ("a2g", fmt_c(amps.a2g)),
        ("a1e", fmt_c(amps.a1e)),
        ("alpha", fmt_c(amps.alpha)),
        ("beta", fmt_c(amps.beta)),
        ("q", fmt_c(amps.q)),
        ("p", fmt_c(amps.p)),
        ("c1", fmt_f(amps.c1)),
        ("c1_prime", fmt_f(amps.c1p)),
        ("xi", fmt_f(amps.xi)),
    ];
    emit_rows(inputs, &point_header(&params), &rows)
}

fn cmd_measures(inputs: &Inputs) -> Result<u8, Failure> {
    let params = inputs.params()?;
    let amps = detuned_amplitudes(&params)?;
    let report = entanglement_report(&amps, params.epsilon / params.kappa);
    let rows = vec![
        ("factorization_defect", fmt_f(report.factorization_defect)),
        ("concurrence", fmt_f(report.concurrence)),
        ("concurrence_weak_drive", fmt_f(report.concurrence_weak_drive)),
        ("lambda1", fmt_f(report.lambda1)),
        ("lambda2", fmt_f(report.lambda2)),
        ("entropy_bits", fmt_f(report.entropy)),
    ];
    emit_rows(inputs, &point_header(&params), &rows)
}

fn cmd_correlations(inputs: &Inputs) -> Result<u8, Failure> {
    let params = inputs.params()?;
    let amps = detuned_amplitudes(&params)?;
    let corr = correlation_set(&amps)?;
    let rows = vec![
        ("g1_tf", fmt_f(corr.g1_tf)),
        ("g2_tf", fmt_f(corr.g2_tf)),
        ("h_tf", fmt_f(corr.h_tf)),
        ("g2_tt", fmt_f(corr.g2_tt)),
        ("g2_ff", fmt_f(corr.g2_ff)),
        ("q", fmt_c(corr.q_complex)),
        ("schwarz_lhs", fmt_f(corr.schwarz_lhs)),
        ("schwarz_rhs", fmt_f(corr.schwarz_rhs)),
        ("schwarz_violated", corr.schwarz_violated.to_string()),
    ];
    emit_rows(inputs, &point_header(&params), &rows)
}

fn parse_axis(s: &str, scale_for: impl Fn(ParamAxis) -> f64) -> Result<AxisSpec, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 4 || parts.len() > 5 {
        return Err(Failure::validation(format!("axis `{s}` is not param:min:max:count[:log]")));
    }
    let param = ParamAxis::from_str(parts[0])?;
    let parse = |v: &str, what: &str| {
        v.parse::<f64>().map_err(|_| Failure::validation(format!("axis `{s}`: bad {what} `{v}`")))
    };
    let scale = scale_for(param);
    let min = parse(parts[1], "min")? * scale;
    let max = parse(parts[2], "max")? * scale;
    let count = parts[3]
        .parse::<usize>()
        .map_err(|_| Failure::validation(format!("axis `{s}`: bad count `{}`", parts[3])))?;
    let axis_scale = match parts.get(4) {
        None | Some(&"linear") => AxisScale::Linear,
        Some(&"log") => AxisScale::Log,
        Some(other) => {
            return Err(Failure::validation(format!("axis `{s}`: unknown scale `{other}`")))
        }
    };
    Ok(AxisSpec { param, min, max, count, scale: axis_scale })
}

fn cmd_sweep(inputs: &Inputs, args: &SweepArgs) -> Result<u8, Failure> {
    let base = inputs.params()?;
    // Gamma stays absolute on its own axis (a gamma range in units of
    // gamma is self-referential); everything else follows the unit
    // convention.
    let scale_for = |param: ParamAxis| match param {
        ParamAxis::Gamma => 1.0,
        _ => inputs.unit_scale,
    };
    let mut axis_strings = args.axes.clone();
    if axis_strings.is_empty() {
        axis_strings = inputs.axis_strings.clone();
    }
    let axes: Vec<AxisSpec> = if axis_strings.is_empty() {
        vec![
            AxisSpec {
                param: ParamAxis::Kappa,
                min: 0.1 * base.gamma,
                max: 10.0 * base.gamma,
                count: 101,
                scale: AxisScale::Log,
            },
            AxisSpec {
                param: ParamAxis::G,
                min: 0.1 * base.gamma,
                max: 10.0 * base.gamma,
                count: 101,
                scale: AxisScale::Log,
            },
        ]
    } else {
        axis_strings.iter().map(|s| parse_axis(s, scale_for)).collect::<Result<_, _>>()?
    };
    let mut quantity_strings = args.quantities.clone();
    if quantity_strings.is_empty() {
        quantity_strings = inputs.quantity_strings.clone();
    }
    let quantities: Vec<Quantity> = if quantity_strings.is_empty() {
        vec![Quantity::ConcurrenceScaled]
    } else {
        quantity_strings
            .iter()
            .map(|s| Quantity::from_str(s).map_err(Failure::from))
            .collect::<Result<_, _>>()?
    };
    let spec = SweepSpec { axes, base, quantities, backend: inputs.backend, n_max: inputs.nmax };
    let result = run_sweep(&spec)?;
    let mut out = open_out(&inputs.out)?;
    match inputs.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => write_csv(&result, &mut out)?,
        OutputFormat::JsonLines => write_json_lines(&result, &mut out)?,
    }
    Ok(0)
}

fn cmd_mesolve(inputs: &Inputs, args: &MesolveArgs) -> Result<u8, Failure> {
    let params = inputs.params()?;
    if !args.nmax_list.is_empty() {
        let report = truncation_convergence(&params, &args.nmax_list)?;
        let mut rows: Vec<(&str, String)> = Vec::new();
        let labels: Vec<String> = report
            .rows
            .iter()
            .map(|r| {
                format!(
                    "n_max={}: photon={:.12e} excited={:.12e} purity={:.12e}",
                    r.n_max, r.mean_photon, r.excited_pop, r.purity
                )
            })
            .collect();
        for label in &labels {
            rows.push(("truncation", label.clone()));
        }
        for change in &report.rel_changes {
            rows.push(("rel_change", fmt_f(*change)));
        }
        rows.push(("converged", report.converged.to_string()));
        return emit_rows(inputs, &point_header(&params), &rows);
    }

    let space = HilbertSpace::new(inputs.nmax)?;
    let liouvillian = build_liouvillian(&params, space)?;
    let rho = steady_state(&liouvillian)?;
    let ops = cqed_core::build_operators(space);
    let obs = observables(&rho, &ops);
    let a1g = rho.coherence_amplitude(1, AtomState::Ground);
    let a0e = rho.coherence_amplitude(0, AtomState::Excited);
    let mut rows = vec![
        ("n_max", inputs.nmax.to_string()),
        ("residual", fmt_f(rho.residual)),
        ("purity", fmt_f(obs.purity)),
        ("impurity", fmt_f(1.0 - obs.purity)),
        ("min_eigenvalue", fmt_f(rho.min_eigenvalue())),
        ("mean_photon", fmt_f(obs.mean_photon)),
        ("excited_pop", fmt_f(obs.excited_pop)),
        ("mean_field", fmt_c(obs.mean_field)),
        ("a1g", fmt_c(a1g)),
        ("a0e", fmt_c(a0e)),
        ("concurrence_trace_proxy", fmt_f(rho.concurrence_trace_proxy())),
    ];
    match normalized_correlations(&obs) {
        Ok(corr) => {
            rows.push(("g2_tf", fmt_f(corr.g2_tf)));
            rows.push(("h_tf", fmt_f(corr.h_tf)));
            rows.push(("g2_tt", fmt_f(corr.g2_tt)));
            rows.push(("q", fmt_c(corr.q_complex)));
            rows.push(("schwarz_violated", corr.schwarz_violated.to_string()));
        }
        Err(Error::DegenerateCorrelation { .. }) => {
            rows.push(("correlations", "degenerate".into()));
        }
        Err(e) => return Err(e.into()),
    }
    emit_rows(inputs, &point_header(&params), &rows)
}

fn cmd_trajectories(inputs: &Inputs, args: &TrajectoryArgs) -> Result<u8, Failure> {
    let params = inputs.params_for_trajectories()?;
    let space = HilbertSpace::new(inputs.nmax)?;
    let mut config = TrajectoryConfig::default_for(&params);
    if let Some(n) = args.n_trajectories {
        config.n_trajectories = n;
    }
    if let Some(t) = args.t_total {
        config.t_total = config.burn_in + t;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(burn) = args.burn_in {
        let sampling = config.t_total - config.burn_in;
        config.burn_in = burn;
        config.t_total = burn + sampling;
    }
    if let Some(seed) = inputs.seed {
        config.seed = seed;
    }
    let outcomes = run_ensemble(&params, space, &config)?;

    // Click records go to --out so the summary stays readable on stdout.
    if let Some(path) = &inputs.out {
        let mut out = open_out(&inputs.out)?;
        match inputs.format.unwrap_or(OutputFormat::Csv) {
            OutputFormat::Csv => {
                writeln!(out, "trajectory,time,channel")?;
                for (index, outcome) in outcomes.iter().enumerate() {
                    for event in &outcome.record.events {
                        writeln!(
                            out,
                            "{index},{:.12e},{}",
                            event.time,
                            match event.channel {
                                Channel::Mirror => "mirror",
                                Channel::Side => "side",
                            }
                        )?;
                    }
                }
            }
            OutputFormat::JsonLines => {
                for (index, outcome) in outcomes.iter().enumerate() {
                    for event in &outcome.record.events {
                        let line = serde_json::json!({
                            "trajectory": index,
                            "time": event.time,
                            "channel": event.channel,
                        });
                        writeln!(out, "{line}")?;
                    }
                }
            }
        }
        eprintln!("click records written to {}", path.display());
    }

    let sampling_time = config.t_total - config.burn_in;
    let total: f64 = outcomes.len() as f64 * sampling_time;
    let mirror: usize = outcomes.iter().map(|o| o.record.count_in_window(Channel::Mirror)).sum();
    let side: usize = outcomes.iter().map(|o| o.record.count_in_window(Channel::Side)).sum();
    println!(
        "ensemble: {} trajectories x {:.1} sampling time (seed {})",
        outcomes.len(),
        sampling_time,
        config.seed
    );
    println!("mirror clicks: {mirror} (rate {:.6e})", mirror as f64 / total);
    println!("side clicks:   {side} (rate {:.6e})", side as f64 / total);

    let window = args.window.unwrap_or(0.1 / params.kappa.max(params.gamma));
    let reference = {
        let liouvillian = build_liouvillian(&params, space)?;
        let rho = steady_state(&liouvillian)?;
        let ops = cqed_core::build_operators(space);
        normalized_correlations(&observables(&rho, &ops))?
    };
    let g2 = estimate_g2_tf(&outcomes, window)?;
    println!(
        "g2_tf = {:.6e} +- {:.3e} ({} coincidence samples, window {window:.3e}); master equation {:.6e}",
        g2.value, g2.stderr, g2.samples, reference.g2_tf
    );
    let h = estimate_h_tf(&outcomes)?;
    println!(
        "h_tf  = {:.6e} +- {:.3e} ({} conditioned samples); master equation {:.6e}",
        h.value, h.stderr, h.samples, reference.h_tf
    );
    Ok(0)
}

fn cmd_verify(inputs: &Inputs, args: &VerifyArgs) -> Result<u8, Failure> {
    let params = inputs.params()?;
    let mut config = VerifyConfig::default_for(&params);
    config.n_max = inputs.nmax;
    if !args.epsilon_list.is_empty() {
        config.epsilon_list = args.epsilon_list.clone();
    }
    if args.corrupt_jumps {
        config.scaling = JumpScaling::Halved;
    }
    if args.with_trajectories {
        let drive = params.with_epsilon(default_trajectory_drive(params.kappa));
        let mut traj = TrajectoryConfig::default_for(&drive);
        if let Some(n) = args.n_trajectories {
            traj.n_trajectories = n;
        }
        if let Some(t) = args.t_total {
            traj.t_total = traj.burn_in + t;
        }
        if let Some(seed) = inputs.seed {
            traj.seed = seed;
        }
        config.trajectory = Some(traj);
    }
    let report = verify_pipeline(&params, &config)?;
    let mut out = open_out(&inputs.out)?;
    out.write_all(report.to_text().as_bytes())?;
    Ok(if report.passed { 0 } else { EXIT_VERIFICATION })
}

fn cmd_schwarz_scan(inputs: &Inputs, args: &SchwarzArgs) -> Result<u8, Failure> {
    let parse_range = |s: &str, what: &str| -> Result<(f64, f64), Failure> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Failure::validation(format!("{what} range `{s}` is not lo:hi"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let lo = parts[0].parse::<f64>().map_err(|_| bad())?;
        let hi = parts[1].parse::<f64>().map_err(|_| bad())?;
        Ok((lo * inputs.unit_scale, hi * inputs.unit_scale))
    };
    let g_range = parse_range(&args.g_range, "coupling")?;
    let kappa_range = parse_range(&args.kappa_range, "cavity-rate")?;
    let grid_parts: Vec<&str> = args.grid.split(':').collect();
    let bad_grid =
        || Failure::validation(format!("grid `{}` is not g-count:kappa-count", args.grid));
    if grid_parts.len() != 2 {
        return Err(bad_grid());
    }
    let g_count = grid_parts[0].parse::<usize>().map_err(|_| bad_grid())?;
    let kappa_count = grid_parts[1].parse::<usize>().map_err(|_| bad_grid())?;

    let base = inputs.params()?;
    let region = SchwarzRegion { g_range, kappa_range, g_count, kappa_count };
    match find_schwarz_counterexample(&base, &region) {
        Ok(hit) => {
            let rows = vec![
                ("g", fmt_f(hit.params.g)),
                ("kappa", fmt_f(hit.params.kappa)),
                ("gamma", fmt_f(hit.params.gamma)),
                ("epsilon", fmt_f(hit.params.epsilon)),
                ("delta", fmt_f(hit.params.delta)),
                ("concurrence", fmt_f(hit.concurrence)),
                ("g2_tf", fmt_f(hit.correlations.g2_tf)),
                ("g2_tt", fmt_f(hit.correlations.g2_tt)),
                ("schwarz_lhs", fmt_f(hit.correlations.schwarz_lhs)),
                ("schwarz_rhs", fmt_f(hit.correlations.schwarz_rhs)),
                ("schwarz_violated", hit.correlations.schwarz_violated.to_string()),
            ];
            emit_rows(inputs, "entangled without a Schwarz violation", &rows)
        }
        Err(Error::NotFound) => {
            println!("no entangled Schwarz-satisfying point in the scanned region");
            Ok(0)
        }
        Err(e) => Err(e.into()),
    }
}
