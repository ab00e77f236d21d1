use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use margin_core::algorithms::{Algorithm, AlgorithmConfig, CertificateKind, Mode, RunOutcome, Termination};
use margin_core::checks::{trace_checks, BoundCheck};
use margin_core::margin::margin_report;
use margin_core::{Error, MarginReport, ProblemInstance};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleMargins {
    pub rho_affine: f64,
    pub rho_classical: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub rank: usize,
    pub dim: usize,
    pub ill_posed: bool,
}

impl From<&MarginReport> for OracleMargins {
    fn from(r: &MarginReport) -> Self {
        Self {
            rho_affine: r.rho_affine,
            rho_classical: r.rho_classical,
            rho_plus: r.rho_plus,
            rho_minus: r.rho_minus,
            rank: r.rank,
            dim: r.dim,
            ill_posed: r.ill_posed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance: String,
    /// Absent when the instance is too large for exact enumeration.
    pub oracle: Option<OracleMargins>,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub max_iters: usize,
    pub eps: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub certificate: Option<CertificateKind>,
    pub final_norm_w: f64,
    pub checks_passed: usize,
    pub checks_failed: usize,
    pub checks: Vec<BoundCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.checks_failed == 0
    }
}

pub fn summarize(
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
    outcome: &RunOutcome,
) -> anyhow::Result<RunSummary> {
    let (oracle, checks, note) = match margin_report(instance) {
        Ok(report) => {
            let checks = trace_checks(instance, &report, config, outcome)?;
            (Some(OracleMargins::from(&report)), checks, None)
        }
        Err(Error::BudgetExceeded { n, budget }) => (
            None,
            Vec::new(),
            Some(format!("{n} columns exceed the exact budget of {budget}; bounds not checked")),
        ),
        Err(e) => return Err(e.into()),
    };
    let checks_failed = checks.iter().filter(|c| !c.passed()).count();
    Ok(RunSummary {
        instance: instance.name().to_string(),
        oracle,
        algorithm: outcome.trace.algorithm,
        mode: config.mode,
        max_iters: config.max_iters,
        eps: config.target_eps,
        iterations: outcome.trace.iterations(),
        termination: outcome.trace.termination,
        certificate: outcome.certificate.as_ref().map(|c| c.kind),
        final_norm_w: outcome.trace.last().norm_w,
        checks_passed: checks.len() - checks_failed,
        checks_failed,
        checks,
        note,
    })
}

#[derive(Debug, Default, Serialize)]
pub struct AlgorithmTally {
    pub runs: usize,
    pub certified: usize,
    pub checks_passed: usize,
    pub checks_failed: usize,
}

#[derive(Debug, Serialize)]
pub struct FailedRun {
    pub file: String,
    pub failed_checks: Vec<BoundCheck>,
}

#[derive(Debug, Default, Serialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub by_algorithm: BTreeMap<String, AlgorithmTally>,
    pub failed_runs: Vec<FailedRun>,
}

pub fn aggregate(dir: &Path) -> anyhow::Result<AggregateReport> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".summary.json"))
        .collect();
    files.sort();
    let mut report = AggregateReport::default();
    for path in files {
        let text = fs::read_to_string(&path)?;
        let s: RunSummary =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        report.runs += 1;
        let tally = report
            .by_algorithm
            .entry(s.algorithm.short_name().to_string())
            .or_default();
        tally.runs += 1;
        tally.certified += usize::from(s.certificate.is_some());
        tally.checks_passed += s.checks_passed;
        tally.checks_failed += s.checks_failed;
        if !s.passed() {
            report.failed_runs.push(FailedRun {
                file: path.file_name().unwrap().to_string_lossy().into_owned(),
                failed_checks: s.checks.into_iter().filter(|c| !c.passed()).collect(),
            });
        }
    }
    Ok(report)
}
