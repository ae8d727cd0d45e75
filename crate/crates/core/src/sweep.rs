//! Parameter sweeps and cross-backend verification: grid evaluation of the
//! entanglement and correlation quantities, peak location, detuning
//! asymptotics, a three-backend consistency pipeline, and deterministic
//! CSV / JSON-lines export.
//!
//! Sweeps never abort on physically degenerate grid points (no drive, no
//! coupling): those rows carry a `degenerate` status and empty value cells
//! instead of NaN. Output ordering is row-major over the axes as declared,
//! and the writers format every number with fixed precision, so identical
//! specs produce identical bytes.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    correlation_set, detuned_amplitudes, entanglement_report, CorrelationSet, WeakDriveAmplitudes,
};
use crate::error::{Error, Result};
use crate::hilbert::{AtomState, HilbertSpace};
use crate::mesolve::{
    build_liouvillian_with_scaling, normalized_correlations, observables, steady_state,
    weak_drive_expansion,
};
use crate::operators::{build_operators, JumpScaling};
use crate::params::SystemParams;
use crate::trajectory::{
    default_trajectory_drive, estimate_g2_tf, estimate_h_tf, run_ensemble, Estimate,
    TrajectoryConfig,
};

/// Schema tag written into every export header.
pub const SCHEMA_VERSION: &str = "sweep-v1";

/// Entanglement floor for the Schwarz-independence scan: a point counts as
/// entangled when C exceeds this times the squared drive.
pub const ENTANGLEMENT_FLOOR_PER_DRIVE_SQ: f64 = 1e-8;

/// Coherence-amplitude floor below which normalized ratios read from the
/// steady state are solver noise.
const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Parameter a sweep axis or peak scan can range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamAxis {
    G,
    Kappa,
    Gamma,
    Epsilon,
    Delta,
}

impl ParamAxis {
    pub fn name(self) -> &'static str {
        match self {
            ParamAxis::G => "g",
            ParamAxis::Kappa => "kappa",
            ParamAxis::Gamma => "gamma",
            ParamAxis::Epsilon => "epsilon",
            ParamAxis::Delta => "delta",
        }
    }

    fn apply(self, base: &SystemParams, value: f64) -> Result<SystemParams> {
        let mut p = (base.g, base.kappa, base.gamma, base.epsilon, base.delta);
        match self {
            ParamAxis::G => p.0 = value,
            ParamAxis::Kappa => p.1 = value,
            ParamAxis::Gamma => p.2 = value,
            ParamAxis::Epsilon => p.3 = value,
            ParamAxis::Delta => p.4 = value,
        }
        SystemParams::new(p.0, p.1, p.2, p.3, p.4)
    }

    /// Smallest admissible axis value (rates must stay positive).
    fn lower_limit(self) -> f64 {
        match self {
            ParamAxis::Kappa | ParamAxis::Gamma => f64::MIN_POSITIVE,
            ParamAxis::G | ParamAxis::Epsilon => 0.0,
            ParamAxis::Delta => f64::NEG_INFINITY,
        }
    }
}

impl FromStr for ParamAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(ParamAxis::G),
            "kappa" => Ok(ParamAxis::Kappa),
            "gamma" => Ok(ParamAxis::Gamma),
            "epsilon" => Ok(ParamAxis::Epsilon),
            "delta" => Ok(ParamAxis::Delta),
            other => Err(Error::InvalidParameter(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxisSpec {
    pub param: ParamAxis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: AxisScale,
}

impl AxisSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidParameter(format!(
                "axis {} needs at least 2 points, got {}",
                self.param.name(),
                self.count
            )));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.min >= self.max {
            return Err(Error::InvalidParameter(format!(
                "axis {} range [{}, {}] is not an increasing finite interval",
                self.param.name(),
                self.min,
                self.max
            )));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "log axis {} requires a positive range, got min {}",
                self.param.name(),
                self.min
            )));
        }
        if self.min < self.param.lower_limit() {
            return Err(Error::InvalidParameter(format!(
                "axis {} extends below the admissible domain",
                self.param.name()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.scale {
                    AxisScale::Linear => self.min + f * (self.max - self.min),
                    AxisScale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Analytic,
    MasterEquation,
    Both,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Analytic => "analytic",
            Backend::MasterEquation => "master_equation",
            Backend::Both => "both",
        }
    }

    fn uses_analytic(self) -> bool {
        matches!(self, Backend::Analytic | Backend::Both)
    }

    fn uses_master_equation(self) -> bool {
        matches!(self, Backend::MasterEquation | Backend::Both)
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Backend::Analytic),
            "master-equation" | "master_equation" | "me" => Ok(Backend::MasterEquation),
            "both" => Ok(Backend::Both),
            other => Err(Error::InvalidParameter(format!("unknown backend `{other}`"))),
        }
    }
}

/// Per-point quantity a sweep can evaluate. Complex saturation ratios expand
/// to real/imaginary column pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Concurrence,
    /// Concurrence divided by the squared drive amplitude (the natural
    /// contour variable: the weak-drive concurrence scales exactly as the
    /// drive squared).
    ConcurrenceScaled,
    Entropy,
    SaturationQ,
    SaturationP,
    G2Tf,
    HTf,
    G2Tt,
    SchwarzViolated,
    /// sqrt(2 (1 - Tr rho_atom^2)) on the mixed steady state; master-equation
    /// backend only.
    ConcurrenceTraceProxy,
}

impl Quantity {
    pub fn base_columns(self) -> &'static [&'static str] {
        match self {
            Quantity::Concurrence => &["concurrence"],
            Quantity::ConcurrenceScaled => &["concurrence_per_drive_sq"],
            Quantity::Entropy => &["entropy"],
            Quantity::SaturationQ => &["q_re", "q_im"],
            Quantity::SaturationP => &["p_re", "p_im"],
            Quantity::G2Tf => &["g2_tf"],
            Quantity::HTf => &["h_tf"],
            Quantity::G2Tt => &["g2_tt"],
            Quantity::SchwarzViolated => &["schwarz_violated"],
            Quantity::ConcurrenceTraceProxy => &["concurrence_trace_proxy"],
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concurrence" => Ok(Quantity::Concurrence),
            "concurrence-scaled" => Ok(Quantity::ConcurrenceScaled),
            "entropy" => Ok(Quantity::Entropy),
            "q" => Ok(Quantity::SaturationQ),
            "p" => Ok(Quantity::SaturationP),
            "g2-tf" => Ok(Quantity::G2Tf),
            "h-tf" => Ok(Quantity::HTf),
            "g2-tt" => Ok(Quantity::G2Tt),
            "schwarz" => Ok(Quantity::SchwarzViolated),
            "trace-proxy" => Ok(Quantity::ConcurrenceTraceProxy),
            other => Err(Error::InvalidParameter(format!("unknown quantity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    /// One or two axes; the first axis is the outer (slowest) loop.
    pub axes: Vec<AxisSpec>,
    /// Values for every parameter not being swept.
    pub base: SystemParams,
    pub quantities: Vec<Quantity>,
    pub backend: Backend,
    /// Fock truncation for the master-equation backend.
    pub n_max: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "sweeps take one or two axes, got {}",
                self.axes.len()
            )));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(Error::InvalidParameter(format!(
                "both axes range over `{}`",
                self.axes[0].param.name()
            )));
        }
        if self.quantities.is_empty() {
            return Err(Error::InvalidParameter("no quantities requested".into()));
        }
        if self.quantities.contains(&Quantity::ConcurrenceTraceProxy)
            && !self.backend.uses_master_equation()
        {
            return Err(Error::InvalidParameter(
                "the trace-proxy concurrence is defined on the master-equation backend".into(),
            ));
        }
        if self.backend.uses_master_equation() && self.n_max < 2 {
            return Err(Error::InvalidParameter(
                "master-equation sweeps need n_max >= 2 for the two-photon quantities".into(),
            ));
        }
        Ok(())
    }

    /// Value columns in output order: for every requested quantity, the
    /// analytic column(s), then the master-equation column(s) when both
    /// backends run.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        for q in &self.quantities {
            for name in q.base_columns() {
                match self.backend {
                    Backend::Analytic | Backend::MasterEquation => cols.push((*name).to_string()),
                    Backend::Both => {
                        cols.push(format!("{name}_analytic"));
                        cols.push(format!("{name}_me"));
                    }
                }
            }
        }
        cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Degenerate,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub schema: &'static str,
    pub version: &'static str,
    pub spec: SweepSpec,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Everything the analytic backend can say about one parameter point.
struct AnalyticPoint {
    amps: WeakDriveAmplitudes,
    concurrence: f64,
    entropy: f64,
    scaled: f64,
    corr: Option<CorrelationSet>,
}

fn analytic_point(params: &SystemParams) -> Result<AnalyticPoint> {
    let amps = detuned_amplitudes(params)?;
    let report = entanglement_report(&amps, params.epsilon / params.kappa);
    // The factorization defect scales exactly as the squared drive, so the
    // scaled concurrence is the defect of the unit-drive solution.
    let unit = detuned_amplitudes(&params.with_epsilon(1.0))?;
    let scaled = entanglement_report(&unit, 1.0 / params.kappa).concurrence;
    let corr = match correlation_set(&amps) {
        Ok(c) => Some(c),
        Err(Error::DegenerateCorrelation { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(AnalyticPoint {
        amps,
        concurrence: report.concurrence,
        entropy: report.entropy,
        scaled,
        corr,
    })
}

impl AnalyticPoint {
    fn cell(&self, quantity: Quantity) -> Vec<Option<f64>> {
        match quantity {
            Quantity::Concurrence => vec![Some(self.concurrence)],
            Quantity::ConcurrenceScaled => vec![Some(self.scaled)],
            Quantity::Entropy => vec![Some(self.entropy)],
            Quantity::SaturationQ => vec![Some(self.amps.q.re), Some(self.amps.q.im)],
            Quantity::SaturationP => vec![Some(self.amps.p.re), Some(self.amps.p.im)],
            Quantity::G2Tf => vec![self.corr.as_ref().map(|c| c.g2_tf)],
            Quantity::HTf => vec![self.corr.as_ref().map(|c| c.h_tf)],
            Quantity::G2Tt => vec![self.corr.as_ref().map(|c| c.g2_tt)],
            Quantity::SchwarzViolated => {
                vec![self.corr.as_ref().map(|c| if c.schwarz_violated { 1.0 } else { 0.0 })]
            }
            Quantity::ConcurrenceTraceProxy => vec![None],
        }
    }
}

struct MasterEquationPoint {
    corr: Option<CorrelationSet>,
    concurrence: f64,
    entropy: f64,
    scaled: Option<f64>,
    saturation_q: Option<C64>,
    saturation_p: Option<C64>,
    trace_proxy: f64,
}

fn master_equation_point(
    params: &SystemParams,
    n_max: usize,
    scaling: JumpScaling,
) -> Result<MasterEquationPoint> {
    let space = HilbertSpace::new(n_max)?;
    let liouvillian = build_liouvillian_with_scaling(params, space, scaling)?;
    let rho = steady_state(&liouvillian)?;
    let ops = build_operators(space);
    let obs = observables(&rho, &ops);
    let corr = match normalized_correlations(&obs) {
        Ok(c) => Some(c),
        Err(Error::DegenerateCorrelation { .. }) => None,
        Err(e) => return Err(e),
    };

    let a1g = rho.coherence_amplitude(1, AtomState::Ground);
    let a0e = rho.coherence_amplitude(0, AtomState::Excited);
    let a1e = rho.coherence_amplitude(1, AtomState::Excited);
    let a2g = rho.coherence_amplitude(2, AtomState::Ground);
    let defect = (a1g * a0e - a1e).norm();
    let concurrence = 2.0 * defect;
    let lambda1 = (defect * defect).min(1.0);
    let entropy = entropy_bits(lambda1);
    let scaled = (params.epsilon > 0.0).then(|| concurrence / (params.epsilon * params.epsilon));
    let resolvable = a1g.norm() > AMPLITUDE_FLOOR && a0e.norm() > AMPLITUDE_FLOOR;
    let saturation_q = resolvable.then(|| a1e / (a1g * a0e));
    let saturation_p = resolvable.then(|| {
        let pq = C64::new(2.0f64.sqrt(), 0.0) * a2g / (a1g * a1g);
        pq * (a1g * a0e) / a1e
    });
    Ok(MasterEquationPoint {
        corr,
        concurrence,
        entropy,
        scaled,
        saturation_q,
        saturation_p,
        trace_proxy: rho.concurrence_trace_proxy(),
    })
}

fn entropy_bits(lambda1: f64) -> f64 {
    let lambda2 = 1.0 - lambda1;
    let term = |l: f64| if l > 0.0 { -l * l.log2() } else { 0.0 };
    term(lambda1) + term(lambda2)
}

impl MasterEquationPoint {
    fn cell(&self, quantity: Quantity) -> Vec<Option<f64>> {
        match quantity {
            Quantity::Concurrence => vec![Some(self.concurrence)],
            Quantity::ConcurrenceScaled => vec![self.scaled],
            Quantity::Entropy => vec![Some(self.entropy)],
            Quantity::SaturationQ => match self.saturation_q {
                Some(q) => vec![Some(q.re), Some(q.im)],
                None => vec![None, None],
            },
            Quantity::SaturationP => match self.saturation_p {
                Some(p) => vec![Some(p.re), Some(p.im)],
                None => vec![None, None],
            },
            Quantity::G2Tf => vec![self.corr.as_ref().map(|c| c.g2_tf)],
            Quantity::HTf => vec![self.corr.as_ref().map(|c| c.h_tf)],
            Quantity::G2Tt => vec![self.corr.as_ref().map(|c| c.g2_tt)],
            Quantity::SchwarzViolated => {
                vec![self.corr.as_ref().map(|c| if c.schwarz_violated { 1.0 } else { 0.0 })]
            }
            Quantity::ConcurrenceTraceProxy => vec![Some(self.trace_proxy)],
        }
    }
}

fn evaluate_point(
    params: &SystemParams,
    spec: &SweepSpec,
) -> Result<(Vec<Option<f64>>, RowStatus)> {
    let analytic = spec.backend.uses_analytic().then(|| analytic_point(params)).transpose()?;
    let master = spec
        .backend
        .uses_master_equation()
        .then(|| master_equation_point(params, spec.n_max, JumpScaling::Standard))
        .transpose()?;
    let mut values = Vec::new();
    for quantity in &spec.quantities {
        let a_cells = analytic.as_ref().map(|a| a.cell(*quantity));
        let m_cells = master.as_ref().map(|m| m.cell(*quantity));
        let width = quantity.base_columns().len();
        for i in 0..width {
            if let Some(cells) = &a_cells {
                values.push(cells[i]);
            }
            if let Some(cells) = &m_cells {
                values.push(cells[i]);
            }
        }
    }
    let status =
        if values.iter().any(Option::is_none) { RowStatus::Degenerate } else { RowStatus::Ok };
    Ok((values, status))
}

/// Evaluate the requested quantities over the grid. Rows come back in
/// row-major order over the declared axes, independent of how the points
/// were scheduled.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let axis_values: Vec<Vec<f64>> = spec.axes.iter().map(AxisSpec::values).collect();
    let coords: Vec<Vec<f64>> = match axis_values.len() {
        1 => axis_values[0].iter().map(|&v| vec![v]).collect(),
        _ => {
            let mut all = Vec::with_capacity(axis_values[0].len() * axis_values[1].len());
            for &outer in &axis_values[0] {
                for &inner in &axis_values[1] {
                    all.push(vec![outer, inner]);
                }
            }
            all
        }
    };
    let rows: Result<Vec<SweepRow>> = coords
        .into_par_iter()
        .map(|coord| {
            let mut params = spec.base;
            for (axis, &value) in spec.axes.iter().zip(&coord) {
                params = axis.param.apply(&params, value)?;
            }
            let (values, status) = evaluate_point(&params, spec)?;
            Ok(SweepRow { coords: coord, values, status })
        })
        .collect();
    Ok(SweepResult {
        schema: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        spec: spec.clone(),
        columns: spec.columns(),
        rows: rows?,
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.12e}")
}

/// CSV with a `#`-prefixed metadata header block; identical inputs produce
/// identical bytes.
pub fn write_csv<W: Write>(result: &SweepResult, out: &mut W) -> io::Result<()> {
    let spec = &result.spec;
    writeln!(out, "# schema: {}", result.schema)?;
    writeln!(out, "# version: {}", result.version)?;
    writeln!(out, "# backend: {}", spec.backend.name())?;
    if spec.backend.uses_master_equation() {
        writeln!(out, "# n_max: {}", spec.n_max)?;
    }
    writeln!(
        out,
        "# fixed: g={} kappa={} gamma={} epsilon={} delta={}",
        spec.base.g, spec.base.kappa, spec.base.gamma, spec.base.epsilon, spec.base.delta
    )?;
    for axis in &spec.axes {
        writeln!(
            out,
            "# axis: {} {} {} {} {}",
            axis.param.name(),
            match axis.scale {
                AxisScale::Linear => "linear",
                AxisScale::Log => "log",
            },
            axis.min,
            axis.max,
            axis.count
        )?;
    }
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.param.name().to_string()).collect();
    header.extend(result.columns.iter().cloned());
    header.push("status".into());
    writeln!(out, "{}", header.join(","))?;
    for row in &result.rows {
        let mut fields: Vec<String> = row.coords.iter().map(|&c| fmt_float(c)).collect();
        for value in &row.values {
            fields.push(value.map(fmt_float).unwrap_or_default());
        }
        fields.push(row.status.to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// JSON-lines export: one metadata object, then one object per row.
pub fn write_json_lines<W: Write>(result: &SweepResult, out: &mut W) -> io::Result<()> {
    let spec = &result.spec;
    let meta = serde_json::json!({
        "schema": result.schema,
        "version": result.version,
        "backend": spec.backend.name(),
        "n_max": spec.n_max,
        "fixed": {
            "g": spec.base.g,
            "kappa": spec.base.kappa,
            "gamma": spec.base.gamma,
            "epsilon": spec.base.epsilon,
            "delta": spec.base.delta,
        },
        "axes": spec.axes,
        "columns": result.columns,
    });
    writeln!(out, "{meta}")?;
    for row in &result.rows {
        let coords: serde_json::Map<String, serde_json::Value> = spec
            .axes
            .iter()
            .zip(&row.coords)
            .map(|(a, &v)| (a.param.name().to_string(), serde_json::json!(v)))
            .collect();
        let values: serde_json::Map<String, serde_json::Value> = result
            .columns
            .iter()
            .zip(&row.values)
            .map(|(c, v)| (c.clone(), serde_json::json!(v)))
            .collect();
        let line = serde_json::json!({
            "coords": coords,
            "values": values,
            "status": row.status,
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Peak {
    pub argmax: f64,
    pub max_value: f64,
}

/// Argmax resolution of `find_peak`, in axis units.
pub const PEAK_TOLERANCE: f64 = 1e-4;

fn peak_objective(
    base: &SystemParams,
    axis: ParamAxis,
    quantity: Quantity,
) -> impl Fn(f64) -> Result<f64> + '_ {
    move |value: f64| {
        let params = axis.apply(base, value)?;
        let point = analytic_point(&params)?;
        let cells = point.cell(quantity);
        Ok(cells[0].unwrap_or(f64::NEG_INFINITY))
    }
}

/// Locate the maximum of an analytic quantity along one axis: a coarse scan
/// establishes a single interior bracket (anything else is rejected), then
/// golden-section refinement narrows it to `PEAK_TOLERANCE`.
pub fn find_peak(
    base: &SystemParams,
    axis: ParamAxis,
    range: (f64, f64),
    quantity: Quantity,
) -> Result<Peak> {
    let (lo, hi) = range;
    if lo >= hi || !lo.is_finite() || !hi.is_finite() || lo < axis.lower_limit() {
        return Err(Error::InvalidParameter(format!(
            "scan range [{lo}, {hi}] invalid for {}",
            axis.name()
        )));
    }
    let objective = peak_objective(base, axis, quantity);
    const COARSE: usize = 101;
    let xs: Vec<f64> =
        (0..COARSE).map(|i| lo + (hi - lo) * i as f64 / (COARSE - 1) as f64).collect();
    let mut ys = Vec::with_capacity(COARSE);
    for &x in &xs {
        ys.push(objective(x)?);
    }
    let mut maxima: Vec<usize> =
        (1..COARSE - 1).filter(|&i| ys[i] > ys[i - 1] && ys[i] > ys[i + 1]).collect();
    // A flat-top pair (equal neighbors from an even sampling of a smooth
    // peak) is still one maximum.
    maxima.dedup_by(|b, a| *b == *a + 1);
    if maxima.len() != 1 {
        return Err(Error::NotUnimodal);
    }
    let peak_idx = maxima[0];
    let global_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if ys[peak_idx] < global_max {
        // The interior bump is not the global maximum: the quantity keeps
        // rising toward a boundary.
        return Err(Error::NotUnimodal);
    }

    let mut a = xs[peak_idx - 1];
    let mut b = xs[peak_idx + 1];
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while b - a > PEAK_TOLERANCE {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let argmax = 0.5 * (a + b);
    Ok(Peak { argmax, max_value: objective(argmax)? })
}

/// Which concurrence the detuning-asymptotics fit follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSource {
    /// Pure-state concurrence from the closed-form amplitudes.
    AnalyticAmplitudes,
    /// Trace-purity proxy on the mixed steady state, evaluated from the
    /// leading drive-expansion coefficient so deep-asymptotic values stay at
    /// full relative precision.
    TraceProxyMasterEquation,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit, natural-log units.
    pub residual_rms: f64,
    pub points: usize,
}

/// Least-squares slope of log C versus log detuning over a log-spaced grid.
/// The window must sit in the asymptotic regime: min detuning at least ten
/// times every other rate.
pub fn fit_detuning_slope(
    base: &SystemParams,
    delta_range: (f64, f64),
    points: usize,
    source: SlopeSource,
) -> Result<SlopeFit> {
    let (lo, hi) = delta_range;
    if !(0.0 < lo && lo < hi) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "detuning range [{lo}, {hi}] must be positive and increasing"
        )));
    }
    let scale = base.g.max(base.kappa).max(base.gamma);
    if lo < 10.0 * scale {
        return Err(Error::InvalidParameter(format!(
            "detuning window starts at {lo}, inside the non-asymptotic region (need >= {})",
            10.0 * scale
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter("slope fit needs at least 2 points".into()));
    }
    if base.epsilon <= 0.0 {
        return Err(Error::InvalidParameter("slope fit needs a positive drive amplitude".into()));
    }
    let space = HilbertSpace::new(3)?;
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let delta = (lo.ln() + f * (hi.ln() - lo.ln())).exp();
        let params = base.with_delta(delta);
        let c = match source {
            SlopeSource::AnalyticAmplitudes => {
                let amps = detuned_amplitudes(&params)?;
                entanglement_report(&amps, params.epsilon / params.kappa).concurrence
            }
            SlopeSource::TraceProxyMasterEquation => {
                let expansion = weak_drive_expansion(&params, space, 4)?;
                expansion.concurrence_trace_proxy_leading(params.epsilon)
            }
        };
        if c.is_nan() || c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "concurrence vanished at delta = {delta}; nothing to fit"
            )));
        }
        xs.push(delta.ln());
        ys.push(c.ln());
    }
    let n = points as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(SlopeFit { slope, intercept, residual_rms: (ss_res / n).sqrt(), points })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComparisonRow {
    pub quantity: &'static str,
    pub epsilon: f64,
    pub analytic: f64,
    pub master_equation: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    /// Fitted slope of the pooled relative deviation versus drive.
    pub slope: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRow {
    pub quantity: &'static str,
    pub estimate: Estimate,
    pub reference: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub comparisons: Vec<ComparisonRow>,
    pub convergence: Option<ConvergenceRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub passed: bool,
}

impl VerificationReport {
    /// Deterministic plain-text rendering (fixed float precision, fixed row
    /// order), so identical runs are byte-identical.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("quantity      epsilon      analytic          master-eq         rel-err    tol        status\n");
        for row in &self.comparisons {
            s.push_str(&format!(
                "{:<13} {:<12.4e} {:<17.10e} {:<17.10e} {:<10.3e} {:<10.3e} {}\n",
                row.quantity,
                row.epsilon,
                row.analytic,
                row.master_equation,
                row.relative_error,
                row.tolerance,
                if row.passed { "pass" } else { "FAIL" }
            ));
        }
        if let Some(conv) = &self.convergence {
            s.push_str(&format!(
                "drive-power convergence slope {:.4} (expect 2 +- 0.1) {}\n",
                conv.slope,
                if conv.passed { "pass" } else { "FAIL" }
            ));
        }
        for row in &self.trajectory {
            s.push_str(&format!(
                "trajectory {:<8} {:.6e} +- {:.3e} (n={}) vs {:.6e} {}\n",
                row.quantity,
                row.estimate.value,
                row.estimate.stderr,
                row.estimate.samples,
                row.reference,
                if row.passed { "pass" } else { "FAIL" }
            ));
        }
        s.push_str(if self.passed { "verification: pass\n" } else { "verification: FAIL\n" });
        s
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Drive amplitudes for the analytic/master-equation comparison, largest
    /// first; the convergence slope is fitted across them.
    pub epsilon_list: Vec<f64>,
    pub n_max: usize,
    /// When set, run the trajectory leg and compare its estimators against
    /// the master equation at the same drive.
    pub trajectory: Option<TrajectoryConfig>,
    /// Coincidence window for the trajectory g2 estimator.
    pub coincidence_window: f64,
    /// Collapse-operator scaling handed to the master-equation solver. The
    /// halved variant exists as a deliberate corruption for negative-control
    /// tests; it must fail the field-amplitude check.
    pub scaling: JumpScaling,
}

impl VerifyConfig {
    pub fn default_for(params: &SystemParams) -> Self {
        VerifyConfig {
            epsilon_list: vec![1e-2, 3e-3, 1e-3],
            n_max: 4,
            trajectory: None,
            coincidence_window: 0.1 / params.kappa.max(params.gamma),
            scaling: JumpScaling::Standard,
        }
    }
}

/// Comparison tolerance for a normalized quantity at the given drive: the
/// finite-drive bias of the weak-drive closed forms enters at the squared
/// drive with O(1)..O(10) prefactors, plus a solver-noise floor.
fn comparison_tolerance(params: &SystemParams, epsilon: f64) -> f64 {
    let x = epsilon / params.kappa.min(params.gamma);
    1e-8 + 50.0 * x * x
}

/// Chain the three backends at one parameter point: closed-form amplitudes
/// against the master-equation steady state across a list of drives (values
/// and convergence rate), and optionally against trajectory estimates with
/// bootstrap errors. `passed` folds every row.
pub fn verify_pipeline(params: &SystemParams, config: &VerifyConfig) -> Result<VerificationReport> {
    params.validate()?;
    if config.epsilon_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "verification needs at least two drive amplitudes for the convergence fit".into(),
        ));
    }
    let space = HilbertSpace::new(config.n_max)?;
    let mut comparisons = Vec::new();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    for &epsilon in &config.epsilon_list {
        let point = params.with_epsilon(epsilon);
        let amps = detuned_amplitudes(&point)?;
        let analytic_corr = correlation_set(&amps)?;
        let liouvillian = build_liouvillian_with_scaling(&point, space, config.scaling)?;
        let rho = steady_state(&liouvillian)?;
        let ops = build_operators(space);
        let obs = observables(&rho, &ops);
        let corr = normalized_correlations(&obs)?;
        let tolerance = comparison_tolerance(&point, epsilon);

        let mut push = |quantity: &'static str, analytic: f64, me: f64| {
            let relative_error = (me - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE);
            comparisons.push(ComparisonRow {
                quantity,
                epsilon,
                analytic,
                master_equation: me,
                relative_error,
                tolerance,
                passed: relative_error <= tolerance,
            });
            relative_error
        };
        let mut errs = vec![
            push("field", amps.a1g.norm(), obs.mean_field.norm()),
            push("q", amps.q.re, corr.q_complex.re),
            push("g2_tf", analytic_corr.g2_tf, corr.g2_tf),
            push("g2_tt", analytic_corr.g2_tt, corr.g2_tt),
        ];
        if params.delta == 0.0 {
            errs.push(push("h_tf", analytic_corr.h_tf, corr.h_tf));
        }
        let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        pooled.push((epsilon.ln(), rms.max(f64::MIN_POSITIVE).ln()));
    }

    let convergence = {
        let n = pooled.len() as f64;
        let mean_x = pooled.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = pooled.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pooled.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
        let sxy: f64 = pooled.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let slope = sxy / sxx;
        Some(ConvergenceRow { slope, passed: (slope - 2.0).abs() <= 0.1 })
    };

    let mut trajectory_rows = Vec::new();
    if let Some(traj_config) = &config.trajectory {
        let drive = default_trajectory_drive(params.kappa);
        let point = params.with_epsilon(drive);
        let outcomes = run_ensemble(&point, space, traj_config)?;
        let liouvillian = build_liouvillian_with_scaling(&point, space, config.scaling)?;
        let rho = steady_state(&liouvillian)?;
        let ops = build_operators(space);
        let corr = normalized_correlations(&observables(&rho, &ops))?;
        let g2 = estimate_g2_tf(&outcomes, config.coincidence_window)?;
        trajectory_rows.push(TrajectoryRow {
            quantity: "g2_tf",
            estimate: g2,
            reference: corr.g2_tf,
            passed: (g2.value - corr.g2_tf).abs() <= 3.0 * g2.stderr,
        });
        let h = estimate_h_tf(&outcomes)?;
        trajectory_rows.push(TrajectoryRow {
            quantity: "h_tf",
            estimate: h,
            reference: corr.h_tf,
            passed: (h.value - corr.h_tf).abs() <= 3.0 * h.stderr,
        });
    }

    let passed = comparisons.iter().all(|r| r.passed)
        && convergence.map(|c| c.passed).unwrap_or(true)
        && trajectory_rows.iter().all(|r| r.passed);
    Ok(VerificationReport { comparisons, convergence, trajectory: trajectory_rows, passed })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SchwarzRegion {
    pub g_range: (f64, f64),
    pub kappa_range: (f64, f64),
    pub g_count: usize,
    pub kappa_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchwarzPoint {
    pub params: SystemParams,
    pub concurrence: f64,
    pub correlations: CorrelationSet,
}

/// Scan the (coupling, cavity-rate) region row-major for the first point
/// that is entangled (C above the floor times the squared drive) while the
/// classical-field inequality (g2_tf - 1)^2 <= |(g2_tt - 1)(g2_ff - 1)|
/// holds: entanglement without a Schwarz violation, showing the witness
/// and the measure are logically independent.
pub fn find_schwarz_counterexample(
    base: &SystemParams,
    region: &SchwarzRegion,
) -> Result<SchwarzPoint> {
    if base.epsilon <= 0.0 {
        return Err(Error::InvalidParameter("the scan needs a positive drive".into()));
    }
    let axis = |range: (f64, f64), count: usize, name: &str| -> Result<Vec<f64>> {
        if !(range.0 > 0.0 && range.0 < range.1) || count < 2 {
            return Err(Error::InvalidParameter(format!(
                "{name} range ({}, {}] with {count} points is not scannable",
                range.0, range.1
            )));
        }
        Ok((0..count)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64)
            .collect())
    };
    let g_values = axis(region.g_range, region.g_count, "coupling")?;
    let kappa_values = axis(region.kappa_range, region.kappa_count, "cavity rate")?;
    let floor = ENTANGLEMENT_FLOOR_PER_DRIVE_SQ * base.epsilon * base.epsilon;
    for &g in &g_values {
        for &kappa in &kappa_values {
            let params = SystemParams::new(g, kappa, base.gamma, base.epsilon, base.delta)?;
            let amps = detuned_amplitudes(&params)?;
            let corr = match correlation_set(&amps) {
                Ok(c) => c,
                Err(Error::DegenerateCorrelation { .. }) => continue,
                Err(e) => return Err(e),
            };
            let concurrence = entanglement_report(&amps, params.epsilon / params.kappa).concurrence;
            if concurrence > floor && !corr.schwarz_violated {
                return Ok(SchwarzPoint { params, concurrence, correlations: corr });
            }
        }
    }
    Err(Error::NotFound)
}
