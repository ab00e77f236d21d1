//! Exact desk-scale margins.
//!
//! The affine margin `rho_A = sup_{w in lin(A), |w| = 1} min_i w . a_i` is computed
//! through its two geometric characterizations:
//!
//! * when the origin is outside `conv(A)`, `rho_A` is the distance from the origin to
//!   the hull. [`positive_margin_exact`] finds it by enumerating affinely independent
//!   support sets and solving the least-norm problem on each face.
//! * when the origin is inside, `|rho_A|` is the radius of the largest ball about the
//!   origin inside the hull, relative to `lin(A)`. [`negative_margin_exact`] finds it
//!   by enumerating the supporting hyperplanes of the hull in basis coordinates.
//!
//! Both are exponential in `n` and guarded by an enumeration budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{PrimalDirection, ProblemInstance, SimplexPoint};
use crate::linalg::{dot, for_each_subset, norm, scale};
use crate::lp::{self, LinearProgram, LpStatus};

pub const DEFAULT_ENUMERATION_BUDGET: usize = 14;
/// `|rho_A|` at or below this is reported as ill-posed.
pub const ILL_POSED_TOL: f64 = 1e-9;
/// Absolute slack allowed when testing that all columns lie on one side of a
/// candidate supporting hyperplane.
pub const SUPPORT_SIDE_TOL: f64 = 1e-9;
/// Residual accepted for `A p = v` in [`representable`].
pub const REPRESENTATION_TOL: f64 = 1e-9;

const WEIGHT_NEG_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginMethod {
    Enumeration,
    Grid,
    Iterative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub rho_classical: f64,
    pub rho_affine: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// Unit `w` in `lin(A)` attaining the supremum in the margin definition.
    pub witness_direction: Option<PrimalDirection>,
    /// `p` in the simplex attaining `min ||A p||`.
    pub witness_weights: Option<SimplexPoint>,
    pub method: MarginMethod,
    pub rank: usize,
    pub dim: usize,
    pub rank_tolerance: f64,
    /// `|rho_A| <= 1e-9`: both alternatives are numerically contestable.
    pub ill_posed: bool,
    /// Some supporting hyperplane was accepted with a column violating the side
    /// test by less than the tolerance.
    pub tolerance_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub support_weights: SimplexPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeMargin {
    /// `|rho_A^-|`
    pub magnitude: f64,
    pub direction: PrimalDirection,
    pub flagged: bool,
}

fn check_budget(instance: &ProblemInstance, budget: usize) -> Result<()> {
    if instance.n() > budget {
        return Err(Error::BudgetExceeded {
            n: instance.n(),
            budget,
        });
    }
    Ok(())
}

/// `rho_A^+ = min_{p in simplex} ||A p||` with a minimizing `p`.
pub fn positive_margin_exact(instance: &ProblemInstance) -> Result<(f64, SimplexPoint)> {
    positive_margin_exact_with(instance, DEFAULT_ENUMERATION_BUDGET)
}

pub fn positive_margin_exact_with(
    instance: &ProblemInstance,
    budget: usize,
) -> Result<(f64, SimplexPoint)> {
    check_budget(instance, budget)?;
    let n = instance.n();
    let max_size = (instance.rank() + 1).min(instance.dim() + 1).min(n);
    let zero_tol = TIE_TOL * instance.max_column_norm().max(1.0);

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for_each_subset(n, 1, max_size, |s| {
        let cols: Vec<&[f64]> = s.iter().map(|&i| instance.column(i)).collect();
        let Some(face) = lp::min_norm_on_face(&cols) else {
            return;
        };
        if face.weights.iter().any(|&q| q < -WEIGHT_NEG_TOL) {
            return;
        }
        let better = match &best {
            None => true,
            Some((b, _, _)) => face.norm < b - TIE_TOL,
        };
        if better {
            best = Some((face.norm, s.to_vec(), face.weights));
        }
    });
    let (value, support, q) =
        best.ok_or_else(|| Error::Precondition("no feasible face found".into()))?;
    let mut weights = vec![0.0; n];
    for (&i, &w) in support.iter().zip(&q) {
        weights[i] = w;
    }
    let p = SimplexPoint::from_approx(weights)?;
    let value = if value <= zero_tol { 0.0 } else { value };
    Ok((value, p))
}

/// `|rho_A^-|` and the unit witness `w` in `lin(A)` with `min_i w . a_i = rho_A`,
/// for instances whose hull contains the origin.
pub fn negative_margin_exact(instance: &ProblemInstance) -> Result<(f64, PrimalDirection)> {
    let neg = negative_margin_exact_with(instance, DEFAULT_ENUMERATION_BUDGET)?;
    Ok((neg.magnitude, neg.direction))
}

pub fn negative_margin_exact_with(
    instance: &ProblemInstance,
    budget: usize,
) -> Result<NegativeMargin> {
    check_budget(instance, budget)?;
    let (plus, _) = positive_margin_exact_with(instance, budget)?;
    if plus > 0.0 {
        return Err(Error::OriginNotInHull);
    }
    let basis = instance.basis();
    let r = basis.rank;
    if r == 0 {
        return Err(Error::Precondition(
            "column space is trivial; the margin is undefined".into(),
        ));
    }
    let ys: Vec<Vec<f64>> = instance.columns().iter().map(|c| basis.coords(c)).collect();
    let scale_y = ys.iter().map(|y| norm(y)).fold(0.0, f64::max).max(1e-300);

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for_each_subset(instance.n(), r, r, |s| {
        let Some(normal) = hyperplane_normal(&ys, s, scale_y) else {
            return;
        };
        for u in [normal.clone(), scale(&normal, -1.0)] {
            let beta = dot(&u, &ys[s[0]]);
            let mut supporting = true;
            let mut flagged = false;
            for y in &ys {
                let slack = dot(&u, y) - beta;
                if slack < -SUPPORT_SIDE_TOL {
                    supporting = false;
                    break;
                }
                if slack < -TIE_TOL {
                    flagged = true;
                }
            }
            if !supporting {
                continue;
            }
            // points lie on the `u . y >= beta` side, so u points inward
            let distance = (-beta).max(0.0);
            let better = match &best {
                None => true,
                Some((b, _, _)) => distance < b - TIE_TOL,
            };
            if better {
                best = Some((distance, u, flagged));
            }
        }
    });
    let (magnitude, u, flagged) =
        best.ok_or_else(|| Error::Precondition("no supporting hyperplane found".into()))?;
    let magnitude = if magnitude <= TIE_TOL { 0.0 } else { magnitude };
    let mut w = basis.lift(&u, instance.dim());
    let wn = norm(&w);
    w.iter_mut().for_each(|x| *x /= wn);
    Ok(NegativeMargin {
        magnitude,
        direction: PrimalDirection {
            vector: w,
            in_column_space: true,
        },
        flagged,
    })
}

/// Unit normal of the hyperplane through the points `ys[s]` in `R^r` (`|s| = r`),
/// or `None` when those points are affinely dependent.
fn hyperplane_normal(ys: &[Vec<f64>], s: &[usize], scale_y: f64) -> Option<Vec<f64>> {
    let r = s.len();
    if r == 1 {
        return Some(vec![1.0]);
    }
    let base = &ys[s[0]];
    let m = nalgebra::DMatrix::from_fn(r, r, |i, j| {
        if i + 1 < r {
            ys[s[i + 1]][j] - base[j]
        } else {
            0.0
        }
    });
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    // r - 1 difference vectors must be independent
    if sv[order[r - 2]] <= lp::AFFINE_DEPENDENCE_RTOL * scale_y {
        return None;
    }
    let k = order[r - 1];
    let u: Vec<f64> = (0..r).map(|j| v_t[(k, j)]).collect();
    let un = norm(&u);
    Some(u.iter().map(|x| x / un).collect())
}

pub fn margin_report(instance: &ProblemInstance) -> Result<MarginReport> {
    margin_report_with(instance, DEFAULT_ENUMERATION_BUDGET)
}

pub fn margin_report_with(instance: &ProblemInstance, budget: usize) -> Result<MarginReport> {
    check_budget(instance, budget)?;
    let rank = instance.rank();
    let dim = instance.dim();
    let (plus, p) = positive_margin_exact_with(instance, budget)?;
    let (rho_affine, direction, flagged) = if plus > 0.0 {
        let ap = instance.combine(&p)?;
        let n = norm(&ap);
        let w = PrimalDirection {
            vector: ap.iter().map(|x| x / n).collect(),
            in_column_space: true,
        };
        (plus, w, false)
    } else {
        let neg = negative_margin_exact_with(instance, budget)?;
        (-neg.magnitude, neg.direction, neg.flagged)
    };
    let rho_classical = if rank == dim {
        rho_affine
    } else {
        rho_affine.max(0.0)
    };
    Ok(MarginReport {
        rho_classical,
        rho_affine,
        rho_plus: rho_affine.max(0.0),
        rho_minus: rho_affine.min(0.0),
        witness_direction: Some(direction),
        witness_weights: Some(p),
        method: MarginMethod::Enumeration,
        rank,
        dim,
        rank_tolerance: instance.rank_tolerance(),
        ill_posed: rho_affine.abs() <= ILL_POSED_TOL,
        tolerance_flagged: flagged,
    })
}

/// Lower estimate of `rho_A` from a grid of unit directions in basis coordinates of
/// `lin(A)`; within `2 pi / resolution * max_i |a_i|` of the exact value.
pub fn margin_grid_estimate(instance: &ProblemInstance, resolution: usize) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let basis = instance.basis();
    let ys: Vec<Vec<f64>> = instance.columns().iter().map(|c| basis.coords(c)).collect();
    let worst = |w: &[f64]| ys.iter().map(|y| dot(w, y)).fold(f64::INFINITY, f64::min);
    let tau = std::f64::consts::TAU;
    let pi = std::f64::consts::PI;
    let best = match basis.rank {
        1 => worst(&[1.0]).max(worst(&[-1.0])),
        2 => (0..resolution)
            .map(|k| {
                let t = tau * k as f64 / resolution as f64;
                worst(&[t.cos(), t.sin()])
            })
            .fold(f64::NEG_INFINITY, f64::max),
        3 => {
            let mut best = f64::NEG_INFINITY;
            for j in 0..resolution {
                let theta = pi * (j as f64 + 0.5) / resolution as f64;
                let (st, ct) = theta.sin_cos();
                for k in 0..resolution {
                    let phi = tau * k as f64 / resolution as f64;
                    best = best.max(worst(&[st * phi.cos(), st * phi.sin(), ct]));
                }
            }
            best
        }
        r => return Err(Error::UnsupportedRank(r)),
    };
    Ok(best)
}

/// Minimum enclosing ball of `conv(A)` for unit columns: radius `sqrt(1 - rho^+^2)`
/// about `A p*`, or the unit ball about the origin when `rho_A <= 0`.
pub fn minimum_enclosing_ball(instance: &ProblemInstance) -> Result<BallReport> {
    if let Some(i) = instance.first_non_unit_column() {
        return Err(Error::NotNormalized(i));
    }
    let (plus, p) = positive_margin_exact(instance)?;
    if plus > 0.0 {
        Ok(BallReport {
            center: instance.combine(&p)?,
            radius: (1.0 - plus * plus).max(0.0).sqrt(),
            support_weights: p,
        })
    } else {
        Ok(BallReport {
            center: vec![0.0; instance.dim()],
            radius: 1.0,
            support_weights: p,
        })
    }
}

/// Largest ball about the origin inside `conv(A)` relative to `lin(A)`; radius
/// `|rho_A^-|`.
pub fn inscribed_ball(instance: &ProblemInstance) -> Result<BallReport> {
    let (plus, p) = positive_margin_exact(instance)?;
    if plus > 0.0 {
        return Err(Error::OriginNotInHull);
    }
    let (magnitude, _) = negative_margin_exact(instance)?;
    Ok(BallReport {
        center: vec![0.0; instance.dim()],
        radius: magnitude,
        support_weights: p,
    })
}

/// `p` in the simplex with `A p = v`, if `v` is in `conv(A)`. Solved as a phase-1
/// feasibility LP in basis coordinates of `lin(A)`.
pub fn representable(instance: &ProblemInstance, v: &[f64]) -> Result<Option<SimplexPoint>> {
    instance.check_dim(v)?;
    let basis = instance.basis();
    if basis.orthogonal_residual(v) > REPRESENTATION_TOL * norm(v).max(1.0) {
        return Ok(None);
    }
    let n = instance.n();
    let target = basis.coords(v);
    let mut prog = LinearProgram::new(vec![0.0; n]);
    for (k, b) in basis.basis.iter().enumerate() {
        let row: Vec<f64> = instance.columns().iter().map(|c| dot(b, c)).collect();
        prog = prog.eq(row, target[k]);
    }
    prog = prog.eq(vec![1.0; n], 1.0);
    let sol = lp::solve(&prog)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let p = SimplexPoint::from_approx(sol.x)?;
    let ap = instance.combine(&p)?;
    if crate::linalg::dist(&ap, v) > REPRESENTATION_TOL {
        return Ok(None);
    }
    Ok(Some(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InscribedBallCheck {
    pub radius: f64,
    pub samples: usize,
    /// Sampled interior points that failed to be representable.
    pub inner_failures: usize,
    pub worst_inner_residual: f64,
    /// Whether the point just outside the nearest facet was (correctly) rejected.
    pub outer_rejected: bool,
}

impl InscribedBallCheck {
    pub fn passed(&self) -> bool {
        self.inner_failures == 0 && self.outer_rejected
    }
}

/// Checks the inscribed-ball characterization by sampling: points of norm at most
/// `0.99 |rho_A^-|` in `lin(A)` must be representable, while
/// `-(1 + 1e-3) |rho_A^-| w` (past the nearest facet) must not be.
pub fn inscribed_ball_check(
    instance: &ProblemInstance,
    samples: usize,
    seed: u64,
) -> Result<InscribedBallCheck> {
    let report = margin_report(instance)?;
    if report.rho_affine >= 0.0 || report.ill_posed {
        return Err(Error::Inapplicable(
            "inscribed ball needs a strictly negative affine margin".into(),
        ));
    }
    let radius = -report.rho_affine;
    let basis = instance.basis();
    let r = basis.rank;
    let d = instance.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for b in &basis.basis {
        points.push(scale(b, 0.99 * radius));
        points.push(scale(b, -0.99 * radius));
    }
    for _ in 0..samples {
        let g: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
        let gn = norm(&g);
        let u: f64 = rand::Rng::random::<f64>(&mut rng);
        let rad = 0.99 * radius * u.powf(1.0 / r as f64);
        points.push(basis.lift(&scale(&g, rad / gn), d));
    }
    let mut inner_failures = 0;
    let mut worst: f64 = 0.0;
    for v in &points {
        match representable(instance, v)? {
            Some(p) => {
                let ap = instance.combine(&p)?;
                worst = worst.max(crate::linalg::dist(&ap, v));
            }
            None => inner_failures += 1,
        }
    }
    let w = report
        .witness_direction
        .as_ref()
        .ok_or_else(|| Error::Precondition("missing witness".into()))?;
    let outside = scale(&w.vector, -(1.0 + 1e-3) * radius);
    let outer_rejected = representable(instance, &outside)?.is_none();
    Ok(InscribedBallCheck {
        radius,
        samples: points.len(),
        inner_failures,
        worst_inner_residual: worst,
        outer_rejected,
    })
}
