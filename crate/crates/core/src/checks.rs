//! Replays a finished run against the rate and bound guarantees that apply to its
//! algorithm and instance, using exact oracle values.

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, AlgorithmConfig, Mode, RunOutcome};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::linalg::{dist, norm};
use crate::margin::{minimum_enclosing_ball, MarginReport};
use crate::theorems::simplex_witness_distance;

/// Slack for the direction-error inequalities.
pub const MARGIN_RATE_SLACK: f64 = 1e-7;
/// Slack for the remaining inequalities.
pub const BOUND_SLACK: f64 = 1e-9;
/// Slack for the per-step VNG norm comparisons.
pub const CONTRACTION_SLACK: f64 = 1e-12;
/// Dual-rate targets.
pub const DUAL_EPSILONS: [f64; 3] = [0.5, 0.2, 0.1];
/// Iterations at which the dual witness distance is measured.
pub const WITNESS_DISTANCE_TIMES: [usize; 3] = [10, 100, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `rhs - lhs` seen; negative beyond the slack means violated.
    pub worst_margin: f64,
    pub slack: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundCheck {
    pub fn new(name: &str, slack: f64) -> Self {
        Self {
            name: name.to_string(),
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            slack,
            note: None,
        }
    }

    /// Records one instance of `lhs <= rhs`.
    pub fn record(&mut self, lhs: f64, rhs: f64) {
        let m = rhs - lhs;
        self.checked += 1;
        self.worst_margin = self.worst_margin.min(m);
        if !(m >= -self.slack) {
            self.violations += 1;
        }
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.checked += 1;
        self.violations += 1;
        self.note = Some(note.into());
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn trace_checks(
    instance: &ProblemInstance,
    report: &MarginReport,
    config: &AlgorithmConfig,
    outcome: &RunOutcome,
) -> Result<Vec<BoundCheck>> {
    let trace = &outcome.trace;
    let rho = report.rho_affine;
    let feasible = rho > 0.0 && !report.ill_posed;
    let infeasible = rho < 0.0 && !report.ill_posed;
    let origin_in_hull = report.rho_plus == 0.0;
    let mut out = Vec::new();

    if trace.algorithm != Algorithm::Perceptron {
        let mut c = BoundCheck::new("iterates are convex combinations with norm <= 1", BOUND_SLACK);
        for r in &trace.records {
            if let Some(alpha) = &r.alpha {
                c.record(dist(&instance.combine(alpha)?, &r.w), 0.0);
            }
            if r.t >= 1 {
                c.record(r.norm_w, 1.0);
            }
        }
        out.push(c);
    }

    let primal_mode = trace.algorithm == Algorithm::Perceptron
        || (trace.algorithm == Algorithm::NormalizedPerceptron
            && config.mode == Mode::PrimalFeasibility);
    if primal_mode {
        if feasible {
            let limit = (1.0 / (rho * rho)).ceil();
            let mut c = BoundCheck::new("updates to a feasible w <= ceil(1/rho^2)", 0.0);
            match &outcome.certificate {
                Some(cert) => c.record(cert.iterations as f64, limit),
                None if (config.max_iters as f64) < limit => {
                    c = c.with_note("iteration budget below the bound; inconclusive");
                }
                None => c.fail("no feasible w found within the bound"),
            }
            out.push(c);
        }
        if origin_in_hull && !report.ill_posed {
            let mut c = BoundCheck::new("no strictly feasible w when 0 is in conv(A)", 0.0);
            if outcome.certificate.is_some() {
                c.fail("a strictly feasible w contradicts the alternative");
            } else {
                c.checked = 1;
                c.worst_margin = 0.0;
                c.note = Some("primal problem infeasible; the dual alternative holds".into());
            }
            out.push(c);
        }
    }

    if trace.algorithm == Algorithm::NormalizedPerceptron {
        if origin_in_hull {
            let mut c = BoundCheck::new("||A alpha_t|| <= eps by t = ceil(1/eps^2)", BOUND_SLACK);
            for eps in DUAL_EPSILONS {
                let t = (1.0 / (eps * eps)).ceil() as usize;
                if let Some(r) = trace.at(t) {
                    c.record(r.norm_w, eps);
                } else if trace.last().norm_w <= eps {
                    // stopped early with the target met
                    c.record(trace.last().norm_w, eps);
                }
            }
            out.push(c);
        }

        let mut sandwich = BoundCheck::new("rho+ <= ||w_t|| <= rho+ + 2/sqrt(t)", BOUND_SLACK);
        for r in trace.records.iter().filter(|r| r.t >= 1) {
            sandwich.record(report.rho_plus, r.norm_w);
            sandwich.record(r.norm_w, report.rho_plus + 2.0 / (r.t as f64).sqrt());
        }
        out.push(sandwich);

        if feasible {
            let ball = minimum_enclosing_ball(instance)?;
            let cn = norm(&ball.center);
            let w_star: Vec<f64> = ball.center.iter().map(|x| x / cn).collect();
            let mut gap = BoundCheck::new(
                "rho+ - rho_t <= ||w_t/||w_t|| - w*||",
                MARGIN_RATE_SLACK,
            );
            let mut dir = BoundCheck::new(
                "||w_t/||w_t|| - w*|| <= 4/(rho+ sqrt(t))",
                MARGIN_RATE_SLACK,
            );
            let mut center = BoundCheck::new("||w_t - rho+ w*|| <= 2/sqrt(t)", BOUND_SLACK);
            for r in trace.records.iter().filter(|r| r.t >= 1) {
                let sqrt_t = (r.t as f64).sqrt();
                let u: Vec<f64> = r.w.iter().map(|x| x / r.norm_w).collect();
                let err = dist(&u, &w_star);
                gap.record(rho - r.margin.unwrap_or(f64::NEG_INFINITY), err);
                dir.record(err, 4.0 / (rho * sqrt_t));
                center.record(dist(&r.w, &ball.center), 2.0 / sqrt_t);
            }
            out.extend([gap, dir, center]);
        }

        if infeasible {
            let mut c = BoundCheck::new(
                "dist_1(alpha_t, W) <= 2/(|rho-| sqrt(t))",
                BOUND_SLACK,
            );
            for t in WITNESS_DISTANCE_TIMES {
                let Some(r) = trace.at(t) else { continue };
                let alpha = r.alpha.as_ref().expect("NP records carry alpha");
                match simplex_witness_distance(instance, alpha)? {
                    Some(d) => c.record(d, 2.0 / (-rho * (t as f64).sqrt())),
                    None => c.fail("witness set is empty"),
                }
            }
            out.push(c);
        }
    }

    if trace.algorithm == Algorithm::Vng {
        let mut mono = BoundCheck::new("||w_t|| is non-increasing", CONTRACTION_SLACK);
        for pair in trace.records.windows(2) {
            mono.record(pair[1].norm_w, pair[0].norm_w);
        }
        out.push(mono);
        if infeasible {
            let factor = (1.0 - rho * rho).max(0.0).sqrt();
            let mut c = BoundCheck::new(
                "||w_t+1|| <= ||w_t|| sqrt(1 - rho-^2)",
                CONTRACTION_SLACK,
            );
            for pair in trace.records.windows(2) {
                c.record(pair[1].norm_w, pair[0].norm_w * factor);
            }
            out.push(c);
        }
    }
    Ok(out)
}
