//! Perceptron, Normalized Perceptron and Von Neumann-Gilbert iterations with full
//! trace recording.
//!
//! All three start from `w_0 = a_1`. Ties in argmin/argmax break to the lowest
//! column index, so every trace is reproducible bit for bit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ProblemInstance, SimplexPoint};
use crate::linalg::{argmax, argmin, axpy, dist, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Perceptron,
    NormalizedPerceptron,
    Vng,
}

impl Algorithm {
    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::Perceptron => "perceptron",
            Algorithm::NormalizedPerceptron => "np",
            Algorithm::Vng => "vng",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Stop at the first `w` with `min_i w . a_i > 0`.
    PrimalFeasibility,
    /// Stop at the first `||w|| <= target_eps`.
    DualCertificate,
    /// Run to `max_iters`.
    MarginMaximization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub max_iters: usize,
    pub target_eps: f64,
    pub mode: Mode,
    /// Unused under the deterministic tie-break.
    pub seed: u64,
    pub tie_break: TieBreak,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            target_eps: 1e-6,
            mode: Mode::PrimalFeasibility,
            seed: 0,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

impl AlgorithmConfig {
    pub fn new(mode: Mode, max_iters: usize, target_eps: f64) -> Self {
        Self {
            max_iters,
            target_eps,
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.target_eps >= 0.0) {
            return Err(Error::InvalidArgument(
                "target_eps must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    PrimalFeasible,
    DualCertificate,
    MaxIterations,
    /// VNG line search made no progress (`lambda* = 1` or `w = a_i`).
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub t: usize,
    pub w: Vec<f64>,
    /// `w_t = A alpha_t` for NP and VNG; absent for the classical perceptron.
    pub alpha: Option<SimplexPoint>,
    pub norm_w: f64,
    /// `min_i (w_t / ||w_t||) . a_i`, undefined at `w_t = 0`.
    pub margin: Option<f64>,
    pub loss: f64,
    /// Column used to produce `w_t`; none at `t = 0`.
    pub chosen_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub algorithm: Algorithm,
    pub records: Vec<IterateRecord>,
    pub termination: Termination,
}

impl IterateTrace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace always holds w_0")
    }

    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.last().t
    }

    pub fn at(&self, t: usize) -> Option<&IterateRecord> {
        self.records.get(t).filter(|r| r.t == t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    PrimalFeasible,
    DualEpsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub w: Vec<f64>,
    pub p: Option<SimplexPoint>,
    /// Normalized margin `min_i w . a_i / ||w||` for a primal certificate, `||A p||`
    /// for a dual one.
    pub epsilon: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// `None` when the run ended without meeting its mode's stopping rule.
    pub certificate: Option<Certificate>,
    pub trace: IterateTrace,
}

/// `L(w) = 1/2 ||w||^2 - min_i w . a_i`
pub fn loss(instance: &ProblemInstance, w: &[f64]) -> f64 {
    0.5 * dot(w, w) - instance.min_dot(w)
}

fn record(
    instance: &ProblemInstance,
    t: usize,
    w: &[f64],
    alpha: Option<&SimplexPoint>,
    chosen_index: Option<usize>,
) -> IterateRecord {
    let norm_w = norm(w);
    let min_dot = instance.min_dot(w);
    IterateRecord {
        t,
        w: w.to_vec(),
        alpha: alpha.cloned(),
        norm_w,
        margin: (norm_w > 0.0).then(|| min_dot / norm_w),
        loss: 0.5 * norm_w * norm_w - min_dot,
        chosen_index,
    }
}

fn prepare(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<()> {
    config.validate()?;
    if let Some(i) = instance.first_non_unit_column() {
        return Err(Error::NotNormalized(i));
    }
    Ok(())
}

fn primal_certificate(instance: &ProblemInstance, w: &[f64], p: Option<SimplexPoint>, t: usize) -> Certificate {
    Certificate {
        kind: CertificateKind::PrimalFeasible,
        w: w.to_vec(),
        p,
        epsilon: instance.min_dot(w) / norm(w),
        iterations: t,
    }
}

/// Classical perceptron: add the lowest-index column with `w . a_i <= 0`.
pub fn perceptron_classic(
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
) -> Result<RunOutcome> {
    prepare(instance, config)?;
    let mut w = instance.column(0).to_vec();
    let mut records = vec![record(instance, 0, &w, None, None)];
    let mut t = 0;
    loop {
        let mistake = (0..instance.n()).find(|&i| dot(&w, instance.column(i)) <= 0.0);
        let Some(i) = mistake else {
            let cert = primal_certificate(instance, &w, None, t);
            return Ok(RunOutcome {
                certificate: Some(cert),
                trace: IterateTrace {
                    algorithm: Algorithm::Perceptron,
                    records,
                    termination: Termination::PrimalFeasible,
                },
            });
        };
        if t == config.max_iters {
            return Ok(RunOutcome {
                certificate: None,
                trace: IterateTrace {
                    algorithm: Algorithm::Perceptron,
                    records,
                    termination: Termination::MaxIterations,
                },
            });
        }
        axpy(&mut w, 1.0, instance.column(i));
        t += 1;
        records.push(record(instance, t, &w, None, Some(i)));
    }
}

/// Stopping test shared by NP and VNG.
fn mode_stop(
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
    w: &[f64],
    alpha: &SimplexPoint,
    t: usize,
) -> Option<(Termination, Certificate)> {
    match config.mode {
        Mode::PrimalFeasibility if instance.min_dot(w) > 0.0 => Some((
            Termination::PrimalFeasible,
            primal_certificate(instance, w, Some(alpha.clone()), t),
        )),
        Mode::DualCertificate if norm(w) <= config.target_eps => Some((
            Termination::DualCertificate,
            Certificate {
                kind: CertificateKind::DualEpsilon,
                w: w.to_vec(),
                p: Some(alpha.clone()),
                epsilon: norm(&instance.combine(alpha).unwrap_or_else(|_| w.to_vec())),
                iterations: t,
            },
        )),
        _ => None,
    }
}

/// Normalized perceptron: `w_t = (1 - 1/t) w_{t-1} + (1/t) a_i` with `i` the worst
/// column, `argmin_i w_{t-1} . a_i`.
pub fn perceptron_normalized(
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
) -> Result<RunOutcome> {
    prepare(instance, config)?;
    let n = instance.n();
    let mut w = instance.column(0).to_vec();
    let mut alpha = SimplexPoint::vertex(n, 0);
    let mut records = vec![record(instance, 0, &w, Some(&alpha), None)];
    let mut t = 0;
    let termination = loop {
        if let Some((reason, cert)) = mode_stop(instance, config, &w, &alpha, t) {
            return Ok(RunOutcome {
                certificate: Some(cert),
                trace: IterateTrace {
                    algorithm: Algorithm::NormalizedPerceptron,
                    records,
                    termination: reason,
                },
            });
        }
        if t == config.max_iters {
            break Termination::MaxIterations;
        }
        let (i, _) = argmin(instance.dots(&w)).expect("instance is non-empty");
        t += 1;
        let s = 1.0 / t as f64;
        for (wj, aj) in w.iter_mut().zip(instance.column(i)) {
            *wj = (1.0 - s) * *wj + s * aj;
        }
        alpha.step_toward_vertex(i, s);
        records.push(record(instance, t, &w, Some(&alpha), Some(i)));
    };
    Ok(RunOutcome {
        certificate: None,
        trace: IterateTrace {
            algorithm: Algorithm::NormalizedPerceptron,
            records,
            termination,
        },
    })
}

/// Von Neumann-Gilbert: move toward the column furthest from `w` with an exact line
/// search, i.e. Frank-Wolfe on `min_{p in simplex} ||A p||`.
pub fn vng(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<RunOutcome> {
    prepare(instance, config)?;
    let n = instance.n();
    let mut w = instance.column(0).to_vec();
    let mut alpha = SimplexPoint::vertex(n, 0);
    let mut records = vec![record(instance, 0, &w, Some(&alpha), None)];
    let mut t = 0;
    let termination = loop {
        if let Some((reason, cert)) = mode_stop(instance, config, &w, &alpha, t) {
            return Ok(RunOutcome {
                certificate: Some(cert),
                trace: IterateTrace {
                    algorithm: Algorithm::Vng,
                    records,
                    termination: reason,
                },
            });
        }
        if t == config.max_iters {
            break Termination::MaxIterations;
        }
        let (i, _) = argmax(instance.columns().iter().map(|a| dist(&w, a)))
            .expect("instance is non-empty");
        let a = instance.column(i);
        let dd: f64 = w.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
        if dd == 0.0 {
            break Termination::Stalled;
        }
        // minimizer of ||lambda w + (1 - lambda) a||^2
        let lambda = ((dot(a, a) - dot(&w, a)) / dd).clamp(0.0, 1.0);
        if lambda >= 1.0 {
            break Termination::Stalled;
        }
        for (wj, aj) in w.iter_mut().zip(a) {
            *wj = lambda * *wj + (1.0 - lambda) * aj;
        }
        alpha.step_toward_vertex(i, 1.0 - lambda);
        t += 1;
        records.push(record(instance, t, &w, Some(&alpha), Some(i)));
    };
    Ok(RunOutcome {
        certificate: None,
        trace: IterateTrace {
            algorithm: Algorithm::Vng,
            records,
            termination,
        },
    })
}

pub fn run(
    algorithm: Algorithm,
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
) -> Result<RunOutcome> {
    match algorithm {
        Algorithm::Perceptron => perceptron_classic(instance, config),
        Algorithm::NormalizedPerceptron => perceptron_normalized(instance, config),
        Algorithm::Vng => vng(instance, config),
    }
}

/// Interval `[||w_t|| - eps, ||w_t||]` containing `rho_A^+`, from `ceil(4 / eps^2)`
/// NP steps.
pub fn margin_estimate_np(instance: &ProblemInstance, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let steps = (4.0 / (eps * eps)).ceil() as usize;
    let config = AlgorithmConfig::new(Mode::MarginMaximization, steps.max(1), 0.0);
    let out = perceptron_normalized(instance, &config)?;
    let upper = out.trace.last().norm_w;
    Ok((upper - eps, upper))
}

fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Writes `t,norm_w,margin_t,loss,chosen_index` rows with 17 significant digits.
pub fn write_trace_csv<W: Write>(trace: &IterateTrace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,norm_w,margin_t,loss,chosen_index")?;
    for r in &trace.records {
        let chosen = r.chosen_index.map(|i| i.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t,
            sci(r.norm_w),
            sci(r.margin.unwrap_or(f64::NAN)),
            sci(r.loss),
            chosen
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaDump {
    pub algorithm: Algorithm,
    pub t: Vec<usize>,
    pub alpha: Vec<Vec<f64>>,
}

/// Dual coefficients of every recorded iterate, or `None` for the classical
/// perceptron.
pub fn alpha_dump(trace: &IterateTrace) -> Option<AlphaDump> {
    let mut t = Vec::with_capacity(trace.records.len());
    let mut alpha = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        t.push(r.t);
        alpha.push(r.alpha.as_ref()?.weights().to_vec());
    }
    Some(AlphaDump {
        algorithm: trace.algorithm,
        t,
        alpha,
    })
}
