//! Density flows under repeated decimation and the phase classifier built
//! on them.
//!
//! For a random table whose outputs are independently one with probability
//! `p0`, one decimation gives independent outputs with probability
//! `2 p (1 - p)`, so after `ell` steps the density is
//! `(1 - (1 - 2 p0)^(2^ell)) / 2`. Low-degree polynomials instead reach the
//! zero function and sum-dependent functions keep densities a polynomially
//! small distance from one half.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{self, BoundParams, DecompositionReport};
use crate::error::{Error, Result};
use crate::rg::{decimation_path, DecimationOrder, OrderSampling};
use crate::symmetric::SymmetricFunction;
use crate::truth_table::{Density, TruthTable, N_MAX};

/// What a flow step removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decimated {
    /// The undecimated starting function.
    Start,
    /// An original-variable label.
    Variable(usize),
    /// One input of a symmetric function (all inputs are interchangeable).
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityValue {
    Exact(Density),
    Real(f64),
}

impl DensityValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            DensityValue::Exact(d) => d.to_f64(),
            DensityValue::Real(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.to_f64() == 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub step: usize,
    pub remaining_arity: usize,
    pub decimated: Decimated,
    pub density: DensityValue,
}

/// Densities along a decimation sequence; row 0 is the starting function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub start_arity: usize,
    pub steps: Vec<FlowStep>,
}

impl FlowTrace {
    pub fn densities(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.density.to_f64()).collect()
    }

    fn is_symmetric(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s.density, DensityValue::Real(_)))
    }

    /// Writes the CSV form; `analytic_p0` appends an `analytic_density`
    /// column evaluated at each step.
    pub fn write_csv<W: Write>(&self, w: W, analytic_p0: Option<f64>) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let symmetric = self.is_symmetric();
        let mut header = vec!["step", "remaining_arity", "decimated_var"];
        if symmetric {
            header.push("density_real");
        } else {
            header.extend(["density_num", "density_den"]);
        }
        if analytic_p0.is_some() {
            header.push("analytic_density");
        }
        out.write_record(&header)?;
        for s in &self.steps {
            let mut rec = vec![s.step.to_string(), s.remaining_arity.to_string()];
            rec.push(match s.decimated {
                Decimated::Start => String::new(),
                Decimated::Variable(v) => v.to_string(),
                Decimated::Symmetric => "SYMMETRIC".to_string(),
            });
            match s.density {
                DensityValue::Exact(d) if !symmetric => {
                    rec.push(d.numerator().to_string());
                    rec.push(d.denominator().to_string());
                }
                other => rec.push(format!("{:e}", other.to_f64())),
            }
            if let Some(p0) = analytic_p0 {
                rec.push(format!("{:e}", analytic_density(p0, s.step)?));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Parses CSV written by [`FlowTrace::write_csv`]; extra columns are ignored.
    pub fn read_csv<R: Read>(r: R) -> Result<FlowTrace> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (step_c, arity_c, var_c) = match (col("step"), col("remaining_arity"), col("decimated_var")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::Format("flow CSV is missing required columns".into())),
        };
        let real_c = col("density_real");
        let ratio_c = col("density_num").zip(col("density_den"));
        if real_c.is_none() && ratio_c.is_none() {
            return Err(Error::Format("flow CSV has no density column".into()));
        }
        let parse_err = |what: &str| Error::Format(format!("unparsable {what}"));
        let mut steps = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let step: usize = rec[step_c].parse().map_err(|_| parse_err("step"))?;
            let remaining_arity: usize = rec[arity_c].parse().map_err(|_| parse_err("remaining_arity"))?;
            let decimated = match &rec[var_c] {
                "" => Decimated::Start,
                "SYMMETRIC" => Decimated::Symmetric,
                v => Decimated::Variable(v.parse().map_err(|_| parse_err("decimated_var"))?),
            };
            let density = if let Some((nc, dc)) = ratio_c {
                let num: u64 = rec[nc].parse().map_err(|_| parse_err("density_num"))?;
                let den: u64 = rec[dc].parse().map_err(|_| parse_err("density_den"))?;
                if !den.is_power_of_two() {
                    return Err(parse_err("density_den"));
                }
                DensityValue::Exact(Density::new(num, den.trailing_zeros() as usize))
            } else {
                let c = real_c.expect("checked above");
                DensityValue::Real(rec[c].parse().map_err(|_| parse_err("density_real"))?)
            };
            steps.push(FlowStep {
                step,
                remaining_arity,
                decimated,
                density,
            });
        }
        let start_arity = steps.first().map(|s| s.remaining_arity + s.step).unwrap_or(0);
        Ok(FlowTrace { start_arity, steps })
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

/// Closed-form density after `ell` decimations of a random table with
/// density `p0`: `(1 - (1 - 2 p0)^(2^ell)) / 2`.
pub fn analytic_density(p0: f64, ell: usize) -> Result<f64> {
    check_probability(p0)?;
    if ell == 0 {
        return Ok(p0);
    }
    // after one step the flow is symmetric under p0 -> 1 - p0
    let m = p0.min(1.0 - p0);
    if m == 0.0 {
        return Ok(0.0);
    }
    let log_base = (-2.0 * m).ln_1p();
    let exponent = 2f64.powi(ell.min(2000) as i32);
    Ok(-0.5 * (exponent * log_base).exp_m1())
}

/// One application of `p -> 2 p (1 - p)`.
pub fn density_recursion_step(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

/// Small-density growth `min(2^ell p0, 1)`, valid while the result is much
/// less than one.
pub fn small_p_prediction(p0: f64, ell: usize) -> Result<f64> {
    if p0 < 0.0 || p0.is_nan() {
        return Err(Error::InvalidProbability(p0));
    }
    Ok((2f64.powi(ell.min(2000) as i32) * p0).min(1.0))
}

/// Exact densities of the successive decimations of `t` along `order`.
pub fn empirical_flow(t: &TruthTable, order: &DecimationOrder) -> Result<FlowTrace> {
    let path = decimation_path(t, order)?;
    let steps = path
        .iter()
        .enumerate()
        .map(|(i, table)| FlowStep {
            step: i,
            remaining_arity: table.arity(),
            decimated: if i == 0 {
                Decimated::Start
            } else {
                Decimated::Variable(order.vars()[i - 1])
            },
            density: DensityValue::Exact(table.density()),
        })
        .collect();
    Ok(FlowTrace {
        start_arity: t.arity(),
        steps,
    })
}

/// Classifier thresholds. The constants are calibrated on the generator
/// families, and every report echoes the values it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Steps skipped before the generic and composite tests.
    pub burn_in: usize,
    /// Generic band half-width is `generic_band * 2^(-(n - ell)/2)`.
    pub generic_band: f64,
    /// Composite threshold is `max(composite_tau_min, composite_c / sqrt(n - ell))`.
    pub composite_tau_min: f64,
    pub composite_c: f64,
    /// Steps leaving fewer rows than this are excluded from the statistics.
    pub min_rows: u64,
    /// Largest annihilation depth searched; `None` picks the last step that
    /// still has `min_rows` rows (all steps when the arity is tiny).
    pub annihilation_cap: Option<usize>,
    pub sampling: OrderSampling,
    /// Steps computed for symmetric inputs.
    pub sym_steps: usize,
    /// Runs the near-polynomial stage at this degree bound when set.
    pub near_polynomial: Option<NearPolynomialConfig>,
    pub max_reported_traces: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearPolynomialConfig {
    pub xi: usize,
    pub bound: BoundParams,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            burn_in: 2,
            generic_band: 4.0,
            composite_tau_min: 0.02,
            composite_c: 1.0,
            min_rows: 64,
            annihilation_cap: None,
            sampling: OrderSampling::default(),
            sym_steps: 64,
            near_polynomial: None,
            max_reported_traces: 4,
        }
    }
}

impl ClassifyConfig {
    fn validate(&self, arity: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.generic_band.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return bad(format!("generic band {} must be positive", self.generic_band));
        }
        if !(self.composite_tau_min >= 0.0 && self.composite_c >= 0.0) {
            return bad("composite thresholds must be nonnegative".into());
        }
        if self.composite_tau_min >= 0.5 {
            return bad("composite threshold of 1/2 or more can never fire".into());
        }
        if !self.min_rows.is_power_of_two() {
            return bad(format!("min_rows {} must be a power of two", self.min_rows));
        }
        if let Some(cap) = self.annihilation_cap {
            if cap > arity {
                return bad(format!("annihilation cap {cap} exceeds arity {arity}"));
            }
        }
        if self.sampling.samples == 0 {
            return bad("order sampling needs at least one order".into());
        }
        if let Some(np) = &self.near_polynomial {
            if np.xi > arity {
                return bad(format!("near-polynomial degree {} exceeds arity {arity}", np.xi));
            }
            np.bound.validate()?;
        }
        Ok(())
    }

    /// Last step whose table still has `min_rows` rows.
    fn window_end(&self, arity: usize) -> Option<usize> {
        let k = self.min_rows.trailing_zeros() as usize;
        arity.checked_sub(k)
    }

    fn default_cap(&self, arity: usize) -> usize {
        self.annihilation_cap.unwrap_or_else(|| match self.window_end(arity) {
            Some(end) if end > 0 => end,
            _ => arity,
        })
    }

    pub fn composite_threshold(&self, remaining_arity: usize) -> f64 {
        let scaled = if remaining_arity == 0 {
            f64::INFINITY
        } else {
            self.composite_c / (remaining_arity as f64).sqrt()
        };
        self.composite_tau_min.max(scaled)
    }

    pub fn generic_band_at(&self, remaining_arity: usize) -> f64 {
        self.generic_band * 2f64.powf(-(remaining_arity as f64) / 2.0)
    }
}

/// Phase label assigned by [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseLabel {
    Generic,
    Annihilated,
    CompositeSuspect,
    NearPolynomial,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub burn_in: usize,
    pub generic_band: f64,
    pub composite_tau_min: f64,
    pub composite_c: f64,
    pub min_rows: u64,
    pub annihilation_cap: usize,
    /// Last step used by the generic and composite tests.
    pub window_end: Option<usize>,
    pub orders_checked: usize,
    pub orders_exhaustive: bool,
}

/// Evidence for the composite test: the trace and steps that deviated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeEvidence {
    pub trace_index: usize,
    pub min_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub label: PhaseLabel,
    /// Degree for `ANNIHILATED` and `NEAR_POLYNOMIAL`.
    pub xi: Option<usize>,
    pub thresholds: Thresholds,
    pub traces: Vec<FlowTrace>,
    pub annihilation_depth: Option<usize>,
    pub composite: Option<CompositeEvidence>,
    pub detector: Option<DecompositionReport>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Input to [`classify`].
#[derive(Clone, Copy, Debug)]
pub enum Subject<'a> {
    Table(&'a TruthTable),
    Symmetric(&'a SymmetricFunction),
}

/// Assigns a phase by the decision list: annihilation, then persistent
/// polynomial-scale deviation from 1/2, then a near-polynomial witness, then
/// the exponentially narrow generic band.
pub fn classify(subject: Subject<'_>, config: &ClassifyConfig) -> Result<ClassificationReport> {
    let arity = match subject {
        Subject::Table(t) => t.arity(),
        Subject::Symmetric(f) => f.arity(),
    };
    config.validate(arity)?;
    let window_end = config.window_end(arity);
    let mut notes = Vec::new();

    let (traces, cap, exhaustive) = match subject {
        Subject::Table(t) => {
            let cap = config.default_cap(arity);
            let len = cap.max(window_end.unwrap_or(0)).min(arity);
            let (orders, exhaustive) = config.sampling.orders(arity, len);
            let traces = orders
                .par_iter()
                .map(|o| empirical_flow(t, o))
                .collect::<Result<Vec<_>>>()?;
            (traces, cap, exhaustive)
        }
        Subject::Symmetric(f) => {
            let steps = config.sym_steps.min(arity);
            let cap = config.default_cap(arity).min(steps);
            if steps < arity {
                notes.push(format!("symmetric flow computed for {steps} of {arity} steps"));
            }
            let flow = f.flow(steps, None)?;
            (vec![flow.trace], cap, true)
        }
    };

    let annihilation_depth = annihilation_from_traces(&traces, cap);
    let thresholds = Thresholds {
        burn_in: config.burn_in,
        generic_band: config.generic_band,
        composite_tau_min: config.composite_tau_min,
        composite_c: config.composite_c,
        min_rows: config.min_rows,
        annihilation_cap: cap,
        window_end,
        orders_checked: traces.len(),
        orders_exhaustive: exhaustive,
    };
    let mut report = ClassificationReport {
        label: PhaseLabel::Unclassified,
        xi: None,
        thresholds,
        traces: traces.iter().take(config.max_reported_traces).cloned().collect(),
        annihilation_depth,
        composite: None,
        detector: None,
        notes,
    };

    if let Some(depth) = annihilation_depth {
        report.label = PhaseLabel::Annihilated;
        report.xi = Some(depth.saturating_sub(1));
        return Ok(report);
    }

    let window: Vec<usize> = match window_end {
        Some(end) => (config.burn_in..=end).collect(),
        None => Vec::new(),
    };
    let window: Vec<usize> = window
        .into_iter()
        .filter(|&l| traces.iter().all(|t| l < t.steps.len()))
        .collect();
    if window.is_empty() {
        report
            .notes
            .push("no steps left after burn-in with enough rows for statistics".into());
    } else if let Some(ev) = composite_evidence(&traces, &window, config) {
        report.label = PhaseLabel::CompositeSuspect;
        report.composite = Some(ev);
        return Ok(report);
    }

    if let Some(np) = &config.near_polynomial {
        let table = match subject {
            Subject::Table(t) => Some(t.clone()),
            Subject::Symmetric(f) if arity <= N_MAX => Some(f.expand()?),
            Subject::Symmetric(_) => None,
        };
        match table {
            Some(t) => {
                let dec = detector::nearest_polynomial_auto(&t, np.xi, np.bound)?;
                let hit = dec.witness_monomials.is_some() && dec.meets_bound;
                let remainder_xi = dec.xi;
                report.detector = Some(dec);
                if hit {
                    report.label = PhaseLabel::NearPolynomial;
                    report.xi = Some(remainder_xi);
                    return Ok(report);
                }
            }
            None => report
                .notes
                .push("near-polynomial stage skipped: arity above the table limit".into()),
        }
    }

    if !window.is_empty() && is_generic(&traces, &window, config) {
        report.label = PhaseLabel::Generic;
    }
    Ok(report)
}

fn annihilation_from_traces(traces: &[FlowTrace], cap: usize) -> Option<usize> {
    traces.iter().try_fold(0usize, |acc, t| {
        t.steps
            .iter()
            .take(cap + 1)
            .position(|s| s.density.is_zero())
            .map(|z| acc.max(z))
    })
}

fn composite_evidence(traces: &[FlowTrace], window: &[usize], config: &ClassifyConfig) -> Option<CompositeEvidence> {
    traces.iter().enumerate().find_map(|(i, t)| {
        let excess = window
            .iter()
            .map(|&l| {
                let s = &t.steps[l];
                (s.density.to_f64() - 0.5).abs() - config.composite_threshold(s.remaining_arity)
            })
            .fold(f64::INFINITY, f64::min);
        (excess > 0.0).then_some(CompositeEvidence {
            trace_index: i,
            min_excess: excess,
        })
    })
}

fn is_generic(traces: &[FlowTrace], window: &[usize], config: &ClassifyConfig) -> bool {
    traces.iter().all(|t| {
        window.iter().all(|&l| {
            let s = &t.steps[l];
            (s.density.to_f64() - 0.5).abs() <= config.generic_band_at(s.remaining_arity)
        })
    })
}
