//! Acceptance battery. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::f64::consts::{PI, SQRT_2};
use std::panic::AssertUnwindSafe;
use std::process::ExitCode;
use std::time::Instant;

use margin_core::algorithms::{
    margin_estimate_np, perceptron_classic, perceptron_normalized, vng, AlgorithmConfig, Mode,
    Termination,
};
use margin_core::generate::{generate, template_inradius, GeneratorKind, GeneratorSpec};
use margin_core::linalg::{dist, norm};
use margin_core::lp::{self, LinearProgram, LpStatus};
use margin_core::margin::{
    inscribed_ball_check, margin_grid_estimate, margin_report, minimum_enclosing_ball,
};
use margin_core::theorems::{
    gordan_exclusivity, gordan_from_report, hoffman_dual_from_report, hoffman_primal_from_report,
    hoffman_simplex_from_report, simplex_witness_distance,
};
use margin_core::{Error, ProblemInstance, SimplexPoint};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(violations: usize, detail: String) -> Verdict {
    Verdict {
        passed: violations == 0,
        detail,
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// instance batteries

fn planted_positive(seed: u64, max_d: usize, max_n: usize) -> ProblemInstance {
    let mut r = rng(seed ^ 0x5eed_0001);
    let d = r.random_range(2..=max_d);
    let n = r.random_range(2..=max_n);
    let mut tau = r.random_range(0.1..0.5);
    loop {
        match generate(&GeneratorSpec::new(GeneratorKind::PlantedPositive, d, n, tau, seed)) {
            Ok(a) => return a,
            Err(Error::Generation(_)) => tau *= 0.5,
            Err(e) => panic!("planted-positive generation failed: {e}"),
        }
    }
}

fn planted_negative(seed: u64, max_d: usize, max_n: usize) -> ProblemInstance {
    let mut r = rng(seed ^ 0x5eed_0002);
    let d = r.random_range(2..=max_d);
    let n = r.random_range(3..=max_n);
    let k = d.min(n - 1);
    let tau = -r.random_range(0.1..0.8) * template_inradius(k, n);
    let mut jitter = 0.1;
    loop {
        let spec = GeneratorSpec::new(GeneratorKind::PlantedNegative, d, n, tau, seed).with_jitter(jitter);
        match generate(&spec) {
            Ok(a) => return a,
            Err(Error::Generation(_)) => jitter *= 0.5,
            Err(e) => panic!("planted-negative generation failed: {e}"),
        }
    }
}

fn rank_deficient(seed: u64, max_d: usize, max_n: usize) -> ProblemInstance {
    let mut r = rng(seed ^ 0x5eed_0003);
    let d = r.random_range(2..=max_d);
    let n = r.random_range(2..=max_n);
    let tau = if r.random::<bool>() {
        r.random_range(0.1..0.5)
    } else {
        let k = (d - 1).min(n - 1);
        -r.random_range(0.1..0.8) * template_inradius(k, n)
    };
    let mut jitter = 0.1;
    loop {
        let spec = GeneratorSpec::new(GeneratorKind::RankDeficient, d, n, tau, seed).with_jitter(jitter);
        match generate(&spec) {
            Ok(a) => return a,
            Err(Error::Generation(_)) => jitter *= 0.5,
            Err(e) => panic!("rank-deficient generation failed: {e}"),
        }
    }
}

fn near_ill_posed(seed: u64, max_d: usize, max_n: usize) -> ProblemInstance {
    let mut r = rng(seed ^ 0x5eed_0004);
    let d = r.random_range(1..=max_d);
    let n = r.random_range(1..=max_n);
    generate(&GeneratorSpec::new(GeneratorKind::NearIllPosed, d, n, 0.0, seed)).unwrap()
}

/// Gaussian columns, normalized.
fn gaussian(seed: u64, max_d: usize, max_n: usize) -> ProblemInstance {
    let mut r = rng(seed ^ 0x5eed_0005);
    let d = r.random_range(1..=max_d);
    let n = r.random_range(1..=max_n);
    let cols = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut r)).collect())
        .collect();
    ProblemInstance::ingest(cols, true).unwrap()
}

/// Instances with a strictly negative affine margin.
fn negative_battery(seed: u64) -> ProblemInstance {
    if seed % 4 == 3 {
        let mut r = rng(seed ^ 0x5eed_0006);
        let d = r.random_range(2..=5);
        let n = r.random_range(3..=10);
        let k = (d - 1).min(n - 1);
        let tau = -r.random_range(0.1..0.8) * template_inradius(k, n);
        let spec = GeneratorSpec::new(GeneratorKind::RankDeficient, d, n, tau, seed).with_jitter(0.05);
        if let Ok(a) = generate(&spec) {
            return a;
        }
    }
    planted_negative(seed, 5, 10)
}

fn mixed(seed: u64) -> ProblemInstance {
    match seed % 5 {
        0 => planted_positive(seed, 5, 10),
        1 => planted_negative(seed, 5, 10),
        2 => rank_deficient(seed, 5, 10),
        3 => near_ill_posed(seed, 5, 10),
        _ => gaussian(seed, 5, 10),
    }
}

// ---------------------------------------------------------------------------
// criteria

fn gordan_exclusivity_battery() -> Verdict {
    let mut verdicts = 0;
    let mut refused = 0;
    let mut violations = Vec::new();
    for seed in 0..1000u64 {
        let a = mixed(seed);
        let report = margin_report(&a).unwrap();
        let rho = report.rho_affine.abs();
        let mut first_part1 = None;
        for part in 1..=3u8 {
            let gammas: &[f64] = if part == 1 { &[0.0] } else { &[0.0, 0.5 * rho, 2.0 * rho] };
            for &gamma in gammas {
                let v = match gordan_from_report(&a, &report, gamma, part, seed) {
                    Ok(v) => v,
                    Err(Error::IllPosed(_)) => {
                        refused += 1;
                        continue;
                    }
                    Err(e) => panic!("seed {seed}: {e}"),
                };
                verdicts += 1;
                let flip = gordan_exclusivity(&a, &report, &v, 32, seed).unwrap();
                if !v.verified || !flip.other_refuted {
                    violations.push(format!("seed {seed} part {part} gamma {gamma}: {}", flip.detail));
                }
                if gamma == 0.0 {
                    match first_part1 {
                        None => first_part1 = Some(v.alternative_held),
                        Some(alt) if alt != v.alternative_held => {
                            violations.push(format!("seed {seed}: part {part} at gamma 0 disagrees with part 1"))
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    let detail = format!(
        "{verdicts} verdicts on 1000 instances, {refused} refused in the ill-posed band, {} violations{}",
        violations.len(),
        violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
    );
    verdict(violations.len(), detail)
}

fn mistake_bound_battery() -> Verdict {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let a = planted_positive(1000 + seed, 5, 10);
        let rho = margin_report(&a).unwrap().rho_affine;
        let limit = (1.0 / (rho * rho)).ceil() as usize;
        let cfg = AlgorithmConfig::new(Mode::PrimalFeasibility, 10 * limit + 10, 0.0);
        for out in [perceptron_classic(&a, &cfg).unwrap(), perceptron_normalized(&a, &cfg).unwrap()] {
            match out.certificate {
                Some(c) if c.iterations <= limit && a.min_dot(&c.w) > 0.0 => {
                    worst = worst.max(c.iterations as f64 / limit as f64);
                }
                _ => violations += 1,
            }
        }
    }
    verdict(
        violations,
        format!("400 runs, {violations} violations, largest updates/bound ratio {worst:.3}"),
    )
}

fn dual_rate_battery() -> Verdict {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let a = negative_battery(2000 + seed);
        let cfg = AlgorithmConfig::new(Mode::MarginMaximization, 100, 0.0);
        let out = perceptron_normalized(&a, &cfg).unwrap();
        for eps in [0.5f64, 0.2, 0.1] {
            let t = (1.0 / (eps * eps)).ceil() as usize;
            let alpha = out.trace.at(t).unwrap().alpha.as_ref().unwrap();
            let value = norm(&a.combine(alpha).unwrap());
            worst = worst.max(value / eps);
            if value > eps {
                violations += 1;
            }
        }
    }
    verdict(
        violations,
        format!("600 checks, {violations} violations, largest ||A alpha_t||/eps {worst:.3}"),
    )
}

struct NpBattery {
    rho: f64,
    center: Vec<f64>,
    outcome: margin_core::algorithms::RunOutcome,
    instance: ProblemInstance,
}

fn np_battery() -> Vec<NpBattery> {
    (0..100u64)
        .map(|seed| {
            let a = planted_positive(3000 + seed, 5, 10);
            let rho = margin_report(&a).unwrap().rho_affine;
            let ball = minimum_enclosing_ball(&a).unwrap();
            let cfg = AlgorithmConfig::new(Mode::MarginMaximization, 10_000, 0.0);
            let outcome = perceptron_normalized(&a, &cfg).unwrap();
            NpBattery {
                rho,
                center: ball.center,
                outcome,
                instance: a,
            }
        })
        .collect()
}

fn margin_maximization_battery() -> Verdict {
    let mut violations = 0;
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for run in np_battery() {
        let cn = norm(&run.center);
        let w_star: Vec<f64> = run.center.iter().map(|x| x / cn).collect();
        for r in run.outcome.trace.records.iter().filter(|r| r.t >= 1) {
            let u: Vec<f64> = r.w.iter().map(|x| x / r.norm_w).collect();
            let err = dist(&u, &w_star);
            let rho_t = run.instance.min_dot(&u);
            let bound = 4.0 / (run.rho * (r.t as f64).sqrt());
            checked += 1;
            tightest = tightest.min(bound - err);
            if run.rho - rho_t > err + 1e-7 || err > bound + 1e-7 {
                violations += 1;
            }
        }
    }
    verdict(
        violations,
        format!("{checked} iterates on 100 runs to t = 10^4, {violations} violations, smallest bound slack {tightest:.3e}"),
    )
}

fn meb_convergence_battery() -> Verdict {
    const SLACK: f64 = 1e-9;
    let mut violations = 0;
    let mut checked = 0;
    let mut interval_checks = 0;
    for run in np_battery() {
        for r in run.outcome.trace.records.iter().filter(|r| r.t >= 1) {
            let s = 2.0 / (r.t as f64).sqrt();
            checked += 1;
            if dist(&r.w, &run.center) > s + SLACK
                || r.norm_w < run.rho - SLACK
                || r.norm_w > run.rho + s + SLACK
            {
                violations += 1;
            }
        }
        for eps in [0.5, 0.1] {
            let (lo, hi) = margin_estimate_np(&run.instance, eps).unwrap();
            interval_checks += 1;
            if !(lo - SLACK <= run.rho && run.rho <= hi + SLACK) {
                violations += 1;
            }
        }
    }
    verdict(
        violations,
        format!("{checked} iterates and {interval_checks} estimate intervals, {violations} violations"),
    )
}

fn dual_witness_distance_battery() -> Verdict {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let a = planted_negative(4000 + seed, 5, 10);
        let rho = -margin_report(&a).unwrap().rho_affine;
        let cfg = AlgorithmConfig::new(Mode::MarginMaximization, 1000, 0.0);
        let out = perceptron_normalized(&a, &cfg).unwrap();
        for t in [10, 100, 1000] {
            let alpha = out.trace.at(t).unwrap().alpha.as_ref().unwrap();
            let d = simplex_witness_distance(&a, alpha).unwrap().expect("0 in conv(A)");
            let bound = 2.0 / (rho * (t as f64).sqrt());
            worst = worst.max(d / bound);
            if d > bound + 1e-9 {
                violations += 1;
            }
        }
    }
    verdict(
        violations,
        format!("300 checks, {violations} violations, largest distance/bound {worst:.3}"),
    )
}

fn vng_linear_rate_battery() -> Verdict {
    let mut contraction_violations = 0;
    let mut rate_violations = 0;
    let mut steps_checked = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut first_rate_failure = None;
    for seed in 0..100u64 {
        let a = planted_negative(4000 + seed, 5, 10);
        let rho = -margin_report(&a).unwrap().rho_affine;
        let factor = (1.0 - rho * rho).sqrt();
        let budget = ((1.0 / (rho * rho)) * (1e6f64).ln()).ceil() as usize + 1;
        let cfg = AlgorithmConfig::new(Mode::MarginMaximization, budget, 0.0);
        let out = vng(&a, &cfg).unwrap();
        for pair in out.trace.records.windows(2) {
            steps_checked += 1;
            if pair[1].norm_w > pair[0].norm_w * factor + 1e-12 {
                contraction_violations += 1;
            }
            if pair[0].norm_w > 1e-9 {
                worst_ratio = worst_ratio.max(pair[1].norm_w / (pair[0].norm_w * factor));
            }
        }
        let reached = out.trace.records.iter().position(|r| r.norm_w <= 1e-6);
        if reached.is_none() {
            rate_violations += 1;
            first_rate_failure.get_or_insert_with(|| {
                format!(
                    "seed {}: ||w|| = {:.3e} after {} steps (|rho-| = {rho:.4}, {:?})",
                    4000 + seed,
                    out.trace.last().norm_w,
                    out.trace.iterations(),
                    out.trace.termination
                )
            });
        } else if out.trace.termination == Termination::Stalled
            && out.trace.last().norm_w > 1e-6
        {
            rate_violations += 1;
        }
    }
    verdict(
        contraction_violations + rate_violations,
        format!(
            "{steps_checked} steps, {contraction_violations} contraction violations (largest ratio to bound above 1e-9 {worst_ratio:.4}), {rate_violations} runs missing ||w|| <= 1e-6 in budget{}",
            first_rate_failure.map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn random_simplex_point(r: &mut ChaCha8Rng, n: usize) -> SimplexPoint {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(r)).collect();
    let s: f64 = raw.iter().sum();
    SimplexPoint::from_approx(raw.into_iter().map(|x| x / s).collect()).unwrap()
}

fn hoffman_battery() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut counts = [0usize; 3];
    let mut seed = 5000u64;
    while counts[0] < 100 || counts[1] < 100 {
        seed += 1;
        let a = negative_battery(seed);
        let report = margin_report(&a).unwrap();
        let mut r = rng(seed);
        if counts[0] < 100 {
            let x: Vec<f64> = (0..a.n()).map(|_| Exp1.sample(&mut r)).collect();
            let xp: Vec<f64> = (0..a.n()).map(|_| Exp1.sample(&mut r)).collect();
            let b = a.apply(&xp).unwrap();
            let h = hoffman_dual_from_report(&a, &report, &b, &x).unwrap();
            counts[0] += 1;
            if !h.verified || h.exact_distance.is_none() {
                failures.push(format!("dual seed {seed}: {h:?}"));
            }
        }
        if counts[1] < 100 {
            let p = random_simplex_point(&mut r, a.n());
            let h = hoffman_simplex_from_report(&a, &report, &p).unwrap();
            counts[1] += 1;
            if !h.verified || h.exact_distance.is_none() {
                failures.push(format!("simplex seed {seed}: {h:?}"));
            }
        }
    }
    while counts[2] < 100 {
        seed += 1;
        let a = planted_positive(seed, 5, 10);
        let report = margin_report(&a).unwrap();
        let mut r = rng(seed);
        let c: Vec<f64> = (0..a.n()).map(|_| StandardNormal.sample(&mut r)).collect();
        let w: Vec<f64> = (0..a.dim()).map(|_| StandardNormal.sample(&mut r)).collect();
        let h = hoffman_primal_from_report(&a, &report, &c, &w).unwrap();
        counts[2] += 1;
        if !h.verified || (!h.short_circuit && (h.exact_distance.is_none() || h.lp_chain_value.is_none())) {
            failures.push(format!("primal seed {seed}: {h:?}"));
        }
    }

    let seg = ProblemInstance::ingest(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], false).unwrap();
    let h = hoffman_dual_from_report(&seg, &margin_report(&seg).unwrap(), &[0.0, 0.0], &[1.0, 0.0]).unwrap();
    if (h.bound_value - 1.0).abs() > 1e-9 || (h.exact_distance.unwrap() - 1.0).abs() > 1e-9 {
        failures.push(format!("tight dual example: {h:?}"));
    }
    let quad = ProblemInstance::ingest(vec![vec![1.0, 0.0], vec![0.0, 1.0]], false).unwrap();
    let h = hoffman_primal_from_report(&quad, &margin_report(&quad).unwrap(), &[1.0, 1.0], &[0.0, 0.0]).unwrap();
    if (h.bound_value - SQRT_2).abs() > 1e-9 || (h.exact_distance.unwrap() - SQRT_2).abs() > 1e-9 {
        failures.push(format!("tight primal example: {h:?}"));
    }
    verdict(
        failures.len(),
        format!(
            "{} dual, {} simplex, {} primal triples plus 2 tight examples, {} failures{}",
            counts[0],
            counts[1],
            counts[2],
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn geometry_battery() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    // enclosing ball: optimality by the support condition, then radius^2 + rho^2 = 1
    for seed in 0..200u64 {
        let a = planted_positive(6000 + seed, 5, 10);
        let rho = margin_report(&a).unwrap().rho_plus;
        let ball = minimum_enclosing_ball(&a).unwrap();
        let far = a.columns().iter().map(|c| dist(c, &ball.center)).fold(0.0, f64::max);
        let support_ok = ball
            .support_weights
            .support()
            .iter()
            .all(|&i| (dist(a.column(i), &ball.center) - far).abs() <= 1e-9);
        let center_ok = dist(&a.combine(&ball.support_weights).unwrap(), &ball.center) <= 1e-9;
        if !support_ok || !center_ok || (far * far + rho * rho - 1.0).abs() > 1e-9 {
            failures.push(format!("enclosing ball seed {}", 6000 + seed));
        }
    }
    // inscribed ball
    for seed in 0..100u64 {
        let a = negative_battery(7000 + seed);
        let check = inscribed_ball_check(&a, 32, seed).unwrap();
        if !check.passed() {
            failures.push(format!("inscribed ball seed {}: {check:?}", 7000 + seed));
        }
    }
    // grid against enumeration
    let mut grid_checked = 0;
    for seed in 0..300u64 {
        let a = mixed(8000 + seed);
        let report = margin_report(&a).unwrap();
        if report.rank > 3 {
            continue;
        }
        let resolution = if report.rank == 3 { 200 } else { 4000 };
        let est = margin_grid_estimate(&a, resolution).unwrap();
        let tol = 2.0 * PI / resolution as f64 * a.max_column_norm();
        grid_checked += 1;
        if (est - report.rho_affine).abs() > tol || est > report.rho_affine + 1e-12 {
            failures.push(format!(
                "grid seed {}: grid {est} vs exact {} (tol {tol:e})",
                8000 + seed,
                report.rho_affine
            ));
        }
    }
    verdict(
        failures.len(),
        format!(
            "200 enclosing balls, 100 inscribed balls, {grid_checked} grid comparisons, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// LP oracle against vertex enumeration

/// Vertices of `{x >= 0 : eq x = eq_rhs, ub x <= ub_rhs}` by brute force over
/// active sets.
fn vertices(n: usize, eq: &[(Vec<f64>, f64)], ub: &[(Vec<f64>, f64)]) -> Vec<Vec<f64>> {
    let mut optional: Vec<(Vec<f64>, f64)> = ub.to_vec();
    for j in 0..n {
        let mut row = vec![0.0; n];
        row[j] = -1.0;
        optional.push((row, 0.0));
    }
    let mut all_eq: Vec<(Vec<f64>, f64)> = eq.to_vec();
    let need = n.saturating_sub(all_eq.len().min(n));
    if all_eq.len() > n {
        all_eq.truncate(n);
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let feasible = |x: &[f64]| {
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-9 * scale;
        x.iter().all(|&v| v >= -tol)
            && eq.iter().all(|(r, b)| (dot(r, x) - b).abs() <= tol)
            && ub.iter().all(|(r, b)| dot(r, x) <= b + tol)
    };
    let m = optional.len();
    let mut idx: Vec<usize> = (0..need).collect();
    loop {
        let mut rows: Vec<&(Vec<f64>, f64)> = all_eq.iter().collect();
        rows.extend(idx.iter().map(|&i| &optional[i]));
        if rows.len() == n {
            let a = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
            let b = DVector::from_fn(n, |i, _| rows[i].1);
            let lu = a.clone().full_piv_lu();
            let sv = a.singular_values();
            let smax = sv.max();
            if sv.min() > 1e-10 * smax.max(1.0) {
                if let Some(x) = lu.solve(&b) {
                    let x: Vec<f64> = x.iter().copied().collect();
                    if feasible(&x) {
                        out.push(x);
                    }
                }
            }
        }
        // next combination
        if need == 0 {
            break;
        }
        let mut k = need;
        while k > 0 && idx[k - 1] == m - need + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for j in k..need {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, PartialEq)]
enum OracleStatus {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

fn enumerate_lp(n: usize, c: &[f64], eq: &[(Vec<f64>, f64)], ub: &[(Vec<f64>, f64)]) -> OracleStatus {
    let verts = vertices(n, eq, ub);
    if verts.is_empty() {
        return OracleStatus::Infeasible;
    }
    // recession directions d >= 0, eq d = 0, ub d <= 0, sum d = 1
    let mut req: Vec<(Vec<f64>, f64)> = eq.iter().map(|(r, _)| (r.clone(), 0.0)).collect();
    req.push((vec![1.0; n], 1.0));
    let rub: Vec<(Vec<f64>, f64)> = ub.iter().map(|(r, _)| (r.clone(), 0.0)).collect();
    let rays = vertices(n, &req, &rub);
    if rays.iter().any(|d| dot(c, d) < -1e-9) {
        return OracleStatus::Unbounded;
    }
    OracleStatus::Optimal(verts.iter().map(|x| dot(c, x)).fold(f64::INFINITY, f64::min))
}

fn lp_battery() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut tally = [0usize; 3];
    for seed in 0..500u64 {
        let mut r = rng(9000 + seed);
        let n = r.random_range(1..=8);
        let rows = r.random_range(1..=8);
        let n_eq = if r.random::<bool>() { r.random_range(0..=rows.min(3)) } else { 0 };
        let int = |r: &mut ChaCha8Rng, lo: i32, hi: i32| r.random_range(lo..=hi) as f64;
        let c: Vec<f64> = (0..n).map(|_| int(&mut r, -4, 4)).collect();
        let mut eq = Vec::new();
        let mut ub = Vec::new();
        for k in 0..rows {
            let row: Vec<f64> = (0..n).map(|_| int(&mut r, -4, 4)).collect();
            let rhs = int(&mut r, -2, 6);
            if k < n_eq {
                eq.push((row, rhs));
            } else {
                ub.push((row, rhs));
            }
        }
        let mut prog = LinearProgram::new(c.clone());
        for (row, b) in &eq {
            prog = prog.eq(row.clone(), *b);
        }
        for (row, b) in &ub {
            prog = prog.le(row.clone(), *b);
        }
        let sol = lp::solve(&prog).unwrap();
        let oracle = enumerate_lp(n, &c, &eq, &ub);
        let ok = match (&oracle, sol.status) {
            (OracleStatus::Optimal(v), LpStatus::Optimal) => {
                tally[0] += 1;
                (v - sol.objective_value).abs() <= 1e-8 && sol.max_violation <= 1e-9
            }
            (OracleStatus::Infeasible, LpStatus::Infeasible) => {
                tally[1] += 1;
                true
            }
            (OracleStatus::Unbounded, LpStatus::Unbounded) => {
                tally[2] += 1;
                true
            }
            _ => false,
        };
        if !ok {
            failures.push(format!(
                "seed {}: simplex {:?} {} vs enumeration {oracle:?}",
                9000 + seed,
                sol.status,
                sol.objective_value
            ));
        }
    }
    verdict(
        failures.len(),
        format!(
            "500 LPs ({} optimal, {} infeasible, {} unbounded), {} mismatches{}",
            tally[0],
            tally[1],
            tally[2],
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------

type Criterion = (usize, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "Gordan exclusivity with margins", gordan_exclusivity_battery),
    (2, "perceptron mistake bound", mistake_bound_battery),
    (3, "normalized perceptron dual certificate", dual_rate_battery),
    (4, "normalized perceptron margin maximization", margin_maximization_battery),
    (5, "enclosing-ball convergence and norm sandwich", meb_convergence_battery),
    (6, "dual witness distance", dual_witness_distance_battery),
    (7, "VNG linear convergence", vng_linear_rate_battery),
    (8, "Hoffman bounds", hoffman_battery),
    (9, "geometry oracles", geometry_battery),
    (10, "LP oracle soundness", lp_battery),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected: Vec<&Criterion> = CRITERIA
        .iter()
        .filter(|(id, _, _)| filter.is_empty() || filter.iter().any(|f| f == &id.to_string()))
        .collect();
    let results: Vec<(usize, &str, Verdict, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&&(id, name, run)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let v = std::panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Verdict {
                            passed: false,
                            detail: format!("panicked: {msg}"),
                        }
                    });
                    (id, name, v, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut all = true;
    for (id, name, v, secs) in &results {
        all &= v.passed;
        println!(
            "{} [{id:>2}] {name}: {} ({secs:.1}s)",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
