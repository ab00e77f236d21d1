//! Constructive verifiers for the margin forms of Gordan's alternative and the
//! three Hoffman-type distance bounds. Each verifier builds the witness the proof
//! constructs and reports its residuals next to exact LP/QP distances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{PrimalDirection, ProblemInstance, SimplexPoint};
use crate::linalg::{dist, dist1, dot, norm, norm_inf, scale, sub};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::margin::{margin_report, representable, MarginReport, ILL_POSED_TOL};

/// Residual tolerance for constructed witnesses.
pub const WITNESS_TOL: f64 = 1e-9;
/// Random directions sampled when certifying that a ball lies in `conv(A)`.
pub const BALL_SAMPLES: usize = 32;
const ZERO_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSample {
    pub v: Vec<f64>,
    pub p: Option<SimplexPoint>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GordanWitness {
    Direction { w: PrimalDirection },
    Weights { p: SimplexPoint, norm: f64 },
    BallSamples { samples: Vec<BallSample> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordanVerdict {
    pub gamma: f64,
    pub part: u8,
    pub rho_affine: f64,
    pub alternative_held: Alternative,
    pub witness: GordanWitness,
    /// First alternative: `w . a_i - (+-gamma)` per column. Second alternative:
    /// `gamma - ||A p||` (parts 1 and 2) or `||A p_v - v||` per sample (part 3).
    pub residuals: Vec<f64>,
    /// Every residual met its requirement.
    pub verified: bool,
}

fn check_part(part: u8, gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be finite and non-negative, got {gamma}"
        )));
    }
    match part {
        1 if gamma != 0.0 => Err(Error::InvalidArgument(
            "part 1 is the gamma = 0 statement".into(),
        )),
        1..=3 => Ok(()),
        _ => Err(Error::InvalidArgument(format!("part must be 1, 2 or 3, got {part}"))),
    }
}

/// Threshold compared against `rho_A` to decide which alternative holds.
fn threshold(part: u8, gamma: f64) -> f64 {
    if part == 3 {
        -gamma
    } else {
        gamma
    }
}

pub fn gordan_decide(instance: &ProblemInstance, gamma: f64, part: u8) -> Result<GordanVerdict> {
    gordan_decide_with(instance, gamma, part, 0)
}

/// Decides which alternative holds and builds its witness. `seed` drives the random
/// directions of the part 3 ball check.
pub fn gordan_decide_with(
    instance: &ProblemInstance,
    gamma: f64,
    part: u8,
    seed: u64,
) -> Result<GordanVerdict> {
    check_part(part, gamma)?;
    let report = margin_report(instance)?;
    gordan_from_report(instance, &report, gamma, part, seed)
}

pub fn gordan_from_report(
    instance: &ProblemInstance,
    report: &MarginReport,
    gamma: f64,
    part: u8,
    seed: u64,
) -> Result<GordanVerdict> {
    check_part(part, gamma)?;
    let rho = report.rho_affine;
    let thr = threshold(part, gamma);
    if (rho - thr).abs() <= ILL_POSED_TOL {
        return Err(Error::IllPosed(format!(
            "affine margin {rho:e} is within {ILL_POSED_TOL:e} of {thr:e}"
        )));
    }
    if rho > thr {
        let w = report
            .witness_direction
            .clone()
            .ok_or_else(|| Error::Precondition("margin report has no witness".into()))?;
        let residuals: Vec<f64> = instance.dots(&w.vector).iter().map(|x| x - thr).collect();
        let verified = residuals.iter().all(|&s| s > WITNESS_TOL) && w.is_unit(1e-12);
        return Ok(GordanVerdict {
            gamma,
            part,
            rho_affine: rho,
            alternative_held: Alternative::First,
            witness: GordanWitness::Direction { w },
            residuals,
            verified,
        });
    }
    if part <= 2 {
        let p = report
            .witness_weights
            .clone()
            .ok_or_else(|| Error::Precondition("margin report has no weights".into()))?;
        let ap_norm = norm(&instance.combine(&p)?);
        let residual = gamma - ap_norm;
        let verified = if part == 1 {
            ap_norm <= WITNESS_TOL
        } else {
            residual >= -WITNESS_TOL
        };
        return Ok(GordanVerdict {
            gamma,
            part,
            rho_affine: rho,
            alternative_held: Alternative::Second,
            witness: GordanWitness::Weights { p, norm: ap_norm },
            residuals: vec![residual],
            verified,
        });
    }
    let samples = ball_samples(instance, gamma, seed)?;
    let residuals: Vec<f64> = samples.iter().map(|s| s.residual).collect();
    let verified = residuals.iter().all(|&r| r <= WITNESS_TOL);
    Ok(GordanVerdict {
        gamma,
        part,
        rho_affine: rho,
        alternative_held: Alternative::Second,
        witness: GordanWitness::BallSamples { samples },
        residuals,
        verified,
    })
}

/// `+-gamma b_j` for each basis vector of `lin(A)` plus [`BALL_SAMPLES`] random
/// directions of length `gamma`, each with its representation in `conv(A)`.
fn ball_samples(instance: &ProblemInstance, gamma: f64, seed: u64) -> Result<Vec<BallSample>> {
    let basis = instance.basis();
    let mut points = Vec::new();
    for b in &basis.basis {
        points.push(scale(b, gamma));
        points.push(scale(b, -gamma));
    }
    for dir in random_unit_directions(instance, BALL_SAMPLES, seed) {
        points.push(scale(&dir, gamma));
    }
    points
        .into_iter()
        .map(|v| {
            let p = representable(instance, &v)?;
            let residual = match &p {
                Some(p) => dist(&instance.combine(p)?, &v),
                None => f64::INFINITY,
            };
            Ok(BallSample { v, p, residual })
        })
        .collect()
}

/// Uniform random unit vectors in `lin(A)`.
pub fn random_unit_directions(instance: &ProblemInstance, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let basis = instance.basis();
    let r = basis.rank;
    if r == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            let gn = norm(&g);
            basis.lift(&scale(&g, 1.0 / gn), instance.dim())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusivityCheck {
    /// The alternative not held was refuted.
    pub other_refuted: bool,
    pub detail: String,
}

/// Attempts the alternative a verdict did not choose and reports whether that
/// attempt fails, as the alternatives are mutually exclusive.
///
/// A first-alternative verdict refutes the second with its own witness `w`: for any
/// `p` in the simplex, `w . A p >= min_i w . a_i`. A second-alternative verdict
/// refutes the first because any unit `w` in `lin(A)` has
/// `min_i w . a_i <= w . v` for every `v` in `conv(A)`; this is checked on the oracle
/// direction and on random directions.
pub fn gordan_exclusivity(
    instance: &ProblemInstance,
    report: &MarginReport,
    verdict: &GordanVerdict,
    samples: usize,
    seed: u64,
) -> Result<ExclusivityCheck> {
    let thr = threshold(verdict.part, verdict.gamma);
    match (&verdict.witness, verdict.part) {
        (GordanWitness::Direction { w }, part) => {
            let worst = instance.min_dot(&w.vector);
            let (refuted, detail) = match part {
                1 => {
                    let zero = vec![0.0; instance.dim()];
                    let r = representable(instance, &zero)?.is_none() && worst > 0.0;
                    (r, format!("0 representable: {}", !r))
                }
                2 => {
                    // any p: ||A p|| >= w . A p >= min_i w . a_i > gamma
                    let plus = report.rho_plus;
                    let r = worst > verdict.gamma && plus > verdict.gamma;
                    (r, format!("min ||Ap|| = {plus:e} vs gamma {:e}", verdict.gamma))
                }
                _ => {
                    let v = scale(&w.vector, -verdict.gamma);
                    let r = worst > thr && representable(instance, &v)?.is_none();
                    (r, format!("-gamma w representable: {}", !r))
                }
            };
            Ok(ExclusivityCheck {
                other_refuted: refuted,
                detail,
            })
        }
        (_, _) => {
            let mut dirs = random_unit_directions(instance, samples, seed);
            if let Some(w) = &report.witness_direction {
                dirs.push(w.vector.clone());
            }
            // the best direction still fails `min_i w . a_i > thr`
            let best = dirs
                .iter()
                .map(|w| instance.min_dot(w))
                .fold(f64::NEG_INFINITY, f64::max);
            let refuted = best <= thr + WITNESS_TOL;
            Ok(ExclusivityCheck {
                other_refuted: refuted,
                detail: format!("best sampled min_i w.a_i = {best:e} vs {thr:e}"),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoffmanVariant {
    DualGeneral,
    DualSimplex,
    Primal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoffmanReport {
    pub variant: HoffmanVariant,
    pub bound_value: f64,
    /// `2 ||p||_G / |rho_A^-|` for the simplex variant.
    pub relaxed_bound: Option<f64>,
    pub constructed_witness: Vec<f64>,
    /// Violation of the target system by the witness.
    pub witness_residual: f64,
    /// Distance from the input point to the witness, in the variant's norm.
    pub witness_distance: f64,
    pub exact_distance: Option<f64>,
    /// `bound_value - exact_distance`
    pub slack: Option<f64>,
    /// Primal variant: value of the LP `max h . p` s.t. `A p = mu`, `p >= 0` along
    /// the exact projection direction `mu`, with `h = c - A^T w`.
    pub lp_chain_value: Option<f64>,
    /// Input was already in the target set.
    pub short_circuit: bool,
    pub verified: bool,
}

impl HoffmanReport {
    fn zero(variant: HoffmanVariant, witness: Vec<f64>, residual: f64) -> Self {
        Self {
            variant,
            bound_value: 0.0,
            relaxed_bound: (variant == HoffmanVariant::DualSimplex).then_some(0.0),
            constructed_witness: witness,
            witness_residual: residual,
            witness_distance: 0.0,
            exact_distance: Some(0.0),
            slack: Some(0.0),
            lp_chain_value: None,
            short_circuit: true,
            verified: residual <= WITNESS_TOL,
        }
    }

    fn finish(mut self) -> Self {
        self.slack = self.exact_distance.map(|e| self.bound_value - e);
        let chain_ok = match (self.lp_chain_value, self.exact_distance) {
            (Some(v), Some(e)) => (v - e).abs() <= 1e-7 * (1.0 + e),
            _ => true,
        };
        self.verified = self.witness_residual <= WITNESS_TOL
            && self.witness_distance <= self.bound_value + WITNESS_TOL
            && self.slack.is_none_or(|s| s >= -WITNESS_TOL)
            && chain_ok;
        self
    }
}

/// Rows `(b_k . a_i)_i` expressing `A p` in the orthonormal basis of `lin(A)`.
fn coordinate_rows(instance: &ProblemInstance) -> Vec<Vec<f64>> {
    instance
        .basis()
        .basis
        .iter()
        .map(|b| instance.columns().iter().map(|c| dot(b, c)).collect())
        .collect()
}

fn strictly_negative(report: &MarginReport) -> Result<f64> {
    if report.rho_affine < 0.0 && !report.ill_posed {
        Ok(-report.rho_affine)
    } else {
        Err(Error::Inapplicable(format!(
            "needs |rho_A^-| > 0, affine margin is {:e}",
            report.rho_affine
        )))
    }
}

/// `dist_1(p, W)` for `W = {q in simplex : A q = 0}`, or `None` if `W` is empty.
pub fn simplex_witness_distance(instance: &ProblemInstance, p: &SimplexPoint) -> Result<Option<f64>> {
    let rows = coordinate_rows(instance);
    let rhs = vec![0.0; rows.len()];
    let proj = lp::dist_l1_to_simplex_slice(p.weights(), &rows, &rhs)?;
    Ok((proj.status == LpStatus::Optimal).then_some(proj.distance))
}

/// `dist_1(x, W) <= ||A x - b|| / |rho_A^-|` for `W = {x >= 0 : A x = b}`.
pub fn hoffman_dual(instance: &ProblemInstance, b: &[f64], x: &[f64]) -> Result<HoffmanReport> {
    let report = margin_report(instance)?;
    hoffman_dual_from_report(instance, &report, b, x)
}

pub fn hoffman_dual_from_report(
    instance: &ProblemInstance,
    report: &MarginReport,
    b: &[f64],
    x: &[f64],
) -> Result<HoffmanReport> {
    instance.check_dim(b)?;
    if x.len() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: x.len(),
        });
    }
    if x.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument("x must be non-negative".into()));
    }
    let rho = strictly_negative(report)?;
    let basis = instance.basis();
    if basis.orthogonal_residual(b) > WITNESS_TOL * norm(b).max(1.0) {
        return Err(Error::Precondition("b is not in the column space".into()));
    }
    let rows = coordinate_rows(instance);
    let rhs = basis.coords(b);
    let mut feas = LinearProgram::new(vec![0.0; instance.n()]);
    for (row, &r) in rows.iter().zip(&rhs) {
        feas = feas.eq(row.clone(), r);
    }
    if lp::solve(&feas)?.status != LpStatus::Optimal {
        return Err(Error::Precondition("the set {x >= 0 : Ax = b} is empty".into()));
    }

    let ax = instance.apply(x)?;
    let r = norm(&sub(&ax, b));
    if r <= ZERO_RESIDUAL * (1.0 + norm(b)) {
        return Ok(HoffmanReport::zero(HoffmanVariant::DualGeneral, x.to_vec(), r));
    }
    let bound = r / rho;
    let v = scale(&sub(b, &ax), rho / r);
    let (witness, residual) = match representable(instance, &v)? {
        Some(p) => {
            let xbar: Vec<f64> = x.iter().zip(p.weights()).map(|(xi, pi)| xi + pi * bound).collect();
            let res = norm(&sub(&instance.apply(&xbar)?, b));
            (xbar, res)
        }
        None => (x.to_vec(), f64::INFINITY),
    };
    let exact = match lp::dist_l1_to_polyhedron(x, &rows, &rhs, true) {
        Ok(p) if p.status == LpStatus::Optimal => Some(p.distance),
        Ok(_) => None,
        Err(Error::LpTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(HoffmanReport {
        variant: HoffmanVariant::DualGeneral,
        bound_value: bound,
        relaxed_bound: None,
        witness_distance: dist1(&witness, x),
        constructed_witness: witness,
        witness_residual: residual,
        exact_distance: exact,
        slack: None,
        lp_chain_value: None,
        short_circuit: false,
        verified: false,
    }
    .finish())
}

/// `dist_1(p, W) <= 2 ||A p|| / (||A p|| + |rho_A^-|)` for
/// `W = {q in simplex : A q = 0}`.
pub fn hoffman_simplex(instance: &ProblemInstance, p: &SimplexPoint) -> Result<HoffmanReport> {
    let report = margin_report(instance)?;
    hoffman_simplex_from_report(instance, &report, p)
}

pub fn hoffman_simplex_from_report(
    instance: &ProblemInstance,
    report: &MarginReport,
    p: &SimplexPoint,
) -> Result<HoffmanReport> {
    if p.len() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: p.len(),
        });
    }
    let rho = strictly_negative(report)?;
    let ap = instance.combine(p)?;
    let nap = norm(&ap);
    if nap <= ZERO_RESIDUAL {
        return Ok(HoffmanReport::zero(
            HoffmanVariant::DualSimplex,
            p.weights().to_vec(),
            nap,
        ));
    }
    let bound = 2.0 * nap / (nap + rho);
    let relaxed = 2.0 * instance.gram().seminorm(p.weights()) / rho;
    let v = scale(&ap, -rho / nap);
    let lambda = nap / (nap + rho);
    let (witness, residual) = match representable(instance, &v)? {
        Some(q) => {
            let tilde: Vec<f64> = q
                .weights()
                .iter()
                .zip(p.weights())
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let res = norm(&instance.apply(&tilde)?);
            (tilde, res)
        }
        None => (p.weights().to_vec(), f64::INFINITY),
    };
    let exact = match simplex_witness_distance(instance, p) {
        Ok(d) => d,
        Err(Error::LpTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(HoffmanReport {
        variant: HoffmanVariant::DualSimplex,
        bound_value: bound,
        relaxed_bound: Some(relaxed),
        witness_distance: dist1(&witness, p.weights()),
        constructed_witness: witness,
        witness_residual: residual,
        exact_distance: exact,
        slack: None,
        lp_chain_value: None,
        short_circuit: false,
        verified: false,
    }
    .finish())
}

/// `dist(w, S) <= ||[A^T w - c]^-||_inf / rho_A^+` for `S = {y : A^T y >= c}`.
pub fn hoffman_primal(instance: &ProblemInstance, c: &[f64], w: &[f64]) -> Result<HoffmanReport> {
    let report = margin_report(instance)?;
    hoffman_primal_from_report(instance, &report, c, w)
}

pub fn hoffman_primal_from_report(
    instance: &ProblemInstance,
    report: &MarginReport,
    c: &[f64],
    w: &[f64],
) -> Result<HoffmanReport> {
    instance.check_dim(w)?;
    if c.len() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: c.len(),
        });
    }
    if !(report.rho_affine > 0.0) || report.ill_posed {
        return Err(Error::Inapplicable(format!(
            "needs rho_A^+ > 0, affine margin is {:e}",
            report.rho_affine
        )));
    }
    let rho = report.rho_plus;
    let h: Vec<f64> = instance
        .dots(w)
        .iter()
        .zip(c)
        .map(|(aw, ci)| ci - aw)
        .collect();
    let a: Vec<f64> = h.iter().map(|x| x.max(0.0)).collect();
    let a_inf = norm_inf(&a);
    if a_inf == 0.0 {
        return Ok(HoffmanReport::zero(HoffmanVariant::Primal, w.to_vec(), 0.0));
    }
    let bound = a_inf / rho;
    let wbar = report
        .witness_direction
        .as_ref()
        .ok_or_else(|| Error::Precondition("margin report has no witness".into()))?;
    let witness: Vec<f64> = w.iter().zip(&wbar.vector).map(|(x, y)| x + bound * y).collect();
    let residual = violation(instance, c, &witness);

    let projection = lp::dist_l2_to_halfspaces(instance.columns(), c, w);
    let exact = projection.as_ref().map(|p| p.distance);
    let chain = match &projection {
        Some(p) if p.distance > 0.0 => lp_chain_value(instance, &h, &sub(&p.point, w))?,
        _ => None,
    };
    Ok(HoffmanReport {
        variant: HoffmanVariant::Primal,
        bound_value: bound,
        relaxed_bound: None,
        witness_distance: dist(&witness, w),
        constructed_witness: witness,
        witness_residual: residual,
        exact_distance: exact,
        slack: None,
        lp_chain_value: chain,
        short_circuit: false,
        verified: false,
    }
    .finish())
}

/// Largest violation of `A^T y >= c`.
fn violation(instance: &ProblemInstance, c: &[f64], y: &[f64]) -> f64 {
    instance
        .dots(y)
        .iter()
        .zip(c)
        .map(|(ay, ci)| (ci - ay).max(0.0))
        .fold(0.0, f64::max)
}

/// `max h . p` s.t. `A p = z / ||z||`, `p >= 0`. By LP duality this equals the
/// distance `||z||` when `z` is the exact projection step.
fn lp_chain_value(instance: &ProblemInstance, h: &[f64], z: &[f64]) -> Result<Option<f64>> {
    let zn = norm(z);
    let mu = scale(z, 1.0 / zn);
    let basis = instance.basis();
    let target = basis.coords(&mu);
    let mut prog = LinearProgram::new(h.iter().map(|x| -x).collect());
    for (row, &t) in coordinate_rows(instance).into_iter().zip(&target) {
        prog = prog.eq(row, t);
    }
    let sol = match lp::solve(&prog) {
        Ok(s) => s,
        Err(Error::LpTooLarge { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(match sol.status {
        LpStatus::Optimal => Some(-sol.objective_value),
        LpStatus::Unbounded => Some(f64::INFINITY),
        LpStatus::Infeasible => None,
    })
}
