use std::path::PathBuf;

use clap::{Args, ValueEnum};
use margin_core::linalg::dist;
use margin_core::margin::{inscribed_ball_check, margin_report, minimum_enclosing_ball};
use margin_core::theorems::{
    gordan_exclusivity, gordan_from_report, hoffman_dual_from_report, hoffman_primal_from_report,
    hoffman_simplex_from_report, BALL_SAMPLES,
};
use margin_core::SimplexPoint;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{load_instance, print_json, Global, Status};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Gordan1,
    Gordan2,
    Gordan3,
    HoffmanDual,
    HoffmanSimplex,
    HoffmanPrimal,
    Meb,
    Radius,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    pub instance: PathBuf,
    #[arg(value_enum)]
    pub selector: Selector,
    /// Margin threshold for the alternatives.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Right-hand side `b` of `A x = b, x >= 0` (default 0).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub b: Option<Vec<f64>>,
    /// Point `x` to measure (default e1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    /// Simplex point `p` to measure (default e1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Option<Vec<f64>>,
    /// Right-hand side `c` of `A^T w >= c` (default all ones).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c: Option<Vec<f64>>,
    /// Point `w` to measure (default 0).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub w: Option<Vec<f64>>,
    /// Random samples for the ball checks.
    #[arg(long, default_value_t = BALL_SAMPLES)]
    pub samples: usize,
}

#[derive(Serialize)]
struct CertificateReport {
    instance: String,
    selector: String,
    verified: bool,
    detail: Value,
}

fn e1(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

pub fn cmd_certify(global: &Global, args: &CertifyArgs) -> anyhow::Result<Status> {
    let a = load_instance(&args.instance, global)?;
    let report = margin_report(&a)?;
    let (n, d) = (a.n(), a.dim());
    let (verified, detail) = match args.selector {
        Selector::Gordan1 | Selector::Gordan2 | Selector::Gordan3 => {
            let part = match args.selector {
                Selector::Gordan1 => 1,
                Selector::Gordan2 => 2,
                _ => 3,
            };
            let verdict = gordan_from_report(&a, &report, args.gamma, part, global.seed)?;
            let exclusivity = gordan_exclusivity(&a, &report, &verdict, args.samples, global.seed)?;
            (
                verdict.verified && exclusivity.other_refuted,
                json!({ "verdict": verdict, "exclusivity": exclusivity }),
            )
        }
        Selector::HoffmanDual => {
            let b = args.b.clone().unwrap_or_else(|| vec![0.0; d]);
            let x = args.x.clone().unwrap_or_else(|| e1(n));
            let h = hoffman_dual_from_report(&a, &report, &b, &x)?;
            (h.verified, serde_json::to_value(&h)?)
        }
        Selector::HoffmanSimplex => {
            let p = SimplexPoint::new(args.p.clone().unwrap_or_else(|| e1(n)))?;
            let h = hoffman_simplex_from_report(&a, &report, &p)?;
            (h.verified, serde_json::to_value(&h)?)
        }
        Selector::HoffmanPrimal => {
            let c = args.c.clone().unwrap_or_else(|| vec![1.0; n]);
            let w = args.w.clone().unwrap_or_else(|| vec![0.0; d]);
            let h = hoffman_primal_from_report(&a, &report, &c, &w)?;
            (h.verified, serde_json::to_value(&h)?)
        }
        Selector::Meb => {
            let ball = minimum_enclosing_ball(&a)?;
            let farthest = a
                .columns()
                .iter()
                .map(|c| dist(c, &ball.center))
                .fold(0.0, f64::max);
            let identity = ball.radius * ball.radius + report.rho_plus * report.rho_plus - 1.0;
            let ok = farthest <= ball.radius + 1e-9 && identity.abs() <= 1e-9;
            (
                ok,
                json!({
                    "ball": ball,
                    "rho_plus": report.rho_plus,
                    "farthest_column": farthest,
                    "radius_identity_residual": identity,
                }),
            )
        }
        Selector::Radius => {
            let check = inscribed_ball_check(&a, args.samples, global.seed)?;
            (check.passed(), serde_json::to_value(&check)?)
        }
    };
    let selector = args
        .selector
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    print_json(&CertificateReport {
        instance: a.name().to_string(),
        selector,
        verified,
        detail,
    })?;
    Ok(if verified { Status::Ok } else { Status::Violation })
}
