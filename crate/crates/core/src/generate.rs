//! Seeded instance generators with planted margins. Every planted instance is
//! verified by the exact oracle before it is returned, and the oracle value is
//! stored in the instance metadata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{dot, norm};
use crate::margin::{margin_report, DEFAULT_ENUMERATION_BUDGET};

pub const MAX_REJECTION_DRAWS: usize = 1_000_000;
pub const NEAR_ILL_POSED_MARGIN: f64 = 1e-4;
pub const DEFAULT_JITTER: f64 = 0.1;
const MAX_JITTER_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    PlantedPositive,
    PlantedNegative,
    NearIllPosed,
    RankDeficient,
}

impl GeneratorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::PlantedPositive => "planted-positive",
            GeneratorKind::PlantedNegative => "planted-negative",
            GeneratorKind::NearIllPosed => "near-ill-posed",
            GeneratorKind::RankDeficient => "rank-deficient",
        }
    }
}

fn default_jitter() -> f64 {
    DEFAULT_JITTER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub d: usize,
    pub n: usize,
    pub target_margin: f64,
    pub seed: u64,
    /// Perturbation of the planted-negative template.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, d: usize, n: usize, target_margin: f64, seed: u64) -> Self {
        Self {
            kind,
            d,
            n,
            target_margin,
            seed,
            jitter: DEFAULT_JITTER,
        }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.n < 1 {
            return Err(Error::InvalidArgument("d and n must be at least 1".into()));
        }
        if !(self.jitter >= 0.0) || !self.jitter.is_finite() {
            return Err(Error::InvalidArgument("jitter must be non-negative".into()));
        }
        let tau = self.target_margin;
        match self.kind {
            GeneratorKind::PlantedPositive if !(tau > 0.0 && tau < 1.0) => Err(
                Error::InvalidArgument("planted-positive needs target_margin in (0, 1)".into()),
            ),
            GeneratorKind::PlantedNegative if !(tau > -1.0 && tau < 0.0) => Err(
                Error::InvalidArgument("planted-negative needs target_margin in (-1, 0)".into()),
            ),
            GeneratorKind::PlantedNegative if self.n < 2 => Err(Error::InvalidArgument(
                "planted-negative needs n >= 2".into(),
            )),
            GeneratorKind::RankDeficient if self.d < 2 => Err(Error::InvalidArgument(
                "rank-deficient needs d >= 2".into(),
            )),
            GeneratorKind::RankDeficient if !(tau > -1.0 && tau < 1.0 && tau != 0.0) => {
                Err(Error::InvalidArgument(
                    "rank-deficient needs a non-zero target_margin in (-1, 1)".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn default_name(&self) -> String {
        format!(
            "{}-d{}-n{}-s{}",
            self.kind.as_str(),
            self.d,
            self.n,
            self.seed
        )
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let columns = match spec.kind {
        GeneratorKind::PlantedPositive => planted_positive(&mut rng, spec.d, spec.n, spec.target_margin)?,
        GeneratorKind::NearIllPosed => planted_positive(&mut rng, spec.d, spec.n, NEAR_ILL_POSED_MARGIN)?,
        GeneratorKind::PlantedNegative => {
            planted_negative(&mut rng, spec.d, spec.n, spec.target_margin, spec.jitter)?
        }
        GeneratorKind::RankDeficient => {
            let inner = if spec.target_margin > 0.0 {
                planted_positive(&mut rng, spec.d - 1, spec.n, spec.target_margin)?
            } else {
                planted_negative(&mut rng, spec.d - 1, spec.n, spec.target_margin, spec.jitter)?
            };
            let frame = random_frame(&mut rng, spec.d, spec.d - 1);
            inner.iter().map(|y| lift(&frame, y)).collect()
        }
    };
    let instance = ProblemInstance::ingest(columns, false)?.with_name(spec.default_name());
    let target = match spec.kind {
        GeneratorKind::NearIllPosed => NEAR_ILL_POSED_MARGIN,
        _ => spec.target_margin,
    };
    attach_oracle(instance, spec, target)
}

/// Stores the oracle margins in the metadata after checking the plant.
fn attach_oracle(instance: ProblemInstance, spec: &GeneratorSpec, target: f64) -> Result<ProblemInstance> {
    let mut meta = json!({
        "generator": spec.kind.as_str(),
        "d": spec.d,
        "n": spec.n,
        "seed": spec.seed,
        "target_margin": target,
    });
    if matches!(spec.kind, GeneratorKind::PlantedNegative)
        || (spec.kind == GeneratorKind::RankDeficient && target < 0.0)
    {
        meta["jitter"] = json!(spec.jitter);
    }
    if instance.n() <= DEFAULT_ENUMERATION_BUDGET {
        let report = margin_report(&instance)?;
        let ok = if target > 0.0 {
            report.rho_affine >= target - 1e-12
        } else {
            report.rho_affine <= target + 1e-12
        };
        if !ok {
            return Err(Error::Generation(format!(
                "oracle margin {} does not meet the plant {}",
                report.rho_affine, target
            )));
        }
        meta["rho_affine"] = json!(report.rho_affine);
        meta["rho_classical"] = json!(report.rho_classical);
        meta["rank"] = json!(report.rank);
    } else {
        meta["rho_affine"] = serde_json::Value::Null;
        meta["oracle"] = json!("skipped: n exceeds the enumeration budget");
    }
    Ok(instance.with_metadata(meta))
}

fn gaussian_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&g);
        if n > 1e-12 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Unit columns with `w* . a >= tau` for a random unit `w*`, by rejection.
fn planted_positive(rng: &mut ChaCha8Rng, d: usize, n: usize, tau: f64) -> Result<Vec<Vec<f64>>> {
    let w_star = gaussian_unit(rng, d);
    let mut columns = Vec::with_capacity(n);
    let mut draws = 0;
    while columns.len() < n {
        if draws == MAX_REJECTION_DRAWS {
            return Err(Error::Generation(format!(
                "rejection sampling exceeded {MAX_REJECTION_DRAWS} draws; try a smaller target_margin"
            )));
        }
        draws += 1;
        let a = gaussian_unit(rng, d);
        if dot(&a, &w_star) >= tau {
            columns.push(a);
        }
    }
    Ok(columns)
}

/// Inradius of the template used for `k`-dimensional planted-negative instances
/// with `n` columns.
pub fn template_inradius(k: usize, n: usize) -> f64 {
    match k {
        1 => 1.0,
        2 => (std::f64::consts::PI / n as f64).cos(),
        _ => 1.0 / k as f64,
    }
}

/// Unit columns spanning `k = min(d, n - 1)` coordinates whose hull contains the
/// ball of radius `|tau|` in their span.
fn planted_negative(
    rng: &mut ChaCha8Rng,
    d: usize,
    n: usize,
    tau: f64,
    jitter: f64,
) -> Result<Vec<Vec<f64>>> {
    let k = d.min(n - 1);
    let radius = template_inradius(k, n);
    if radius < -tau {
        return Err(Error::Generation(format!(
            "a {k}-dimensional template with {n} columns has inradius {radius}; |target_margin| must not exceed it"
        )));
    }
    let template = negative_template(rng, k, n);
    let embed = |cols: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        cols.into_iter()
            .map(|mut c| {
                c.resize(d, 0.0);
                c
            })
            .collect()
    };
    if jitter == 0.0 {
        return Ok(embed(template));
    }
    for _ in 0..MAX_JITTER_ATTEMPTS {
        let cols: Vec<Vec<f64>> = template
            .iter()
            .map(|c| {
                let p: Vec<f64> = c
                    .iter()
                    .map(|x| {
                        let g: f64 = StandardNormal.sample(rng);
                        x + jitter * g
                    })
                    .collect::<Vec<f64>>();
                let pn = norm(&p);
                p.into_iter().map(|x| x / pn).collect()
            })
            .collect();
        if n > DEFAULT_ENUMERATION_BUDGET {
            return Err(Error::Generation(
                "jittered templates need the exact oracle; use jitter 0 or n <= 14".into(),
            ));
        }
        let inst = ProblemInstance::ingest(cols.clone(), false)?;
        let report = margin_report(&inst)?;
        if report.rank == k && report.rho_affine <= tau {
            return Ok(embed(cols));
        }
    }
    Err(Error::Generation(format!(
        "no jittered template kept the ball of radius {} after {MAX_JITTER_ATTEMPTS} attempts; lower the jitter",
        -tau
    )))
}

fn negative_template(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Vec<Vec<f64>> {
    match k {
        1 => {
            let mut cols = vec![vec![1.0], vec![-1.0]];
            for _ in 2..n {
                cols.push(vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]);
            }
            cols
        }
        2 => (0..n)
            .map(|j| {
                let t = std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * j as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut cols = regular_simplex(k);
            for _ in k + 1..n {
                cols.push(gaussian_unit(rng, k));
            }
            cols
        }
    }
}

/// `k + 1` unit vertices of a regular simplex centred at the origin of `R^k`.
fn regular_simplex(k: usize) -> Vec<Vec<f64>> {
    let m = k + 1;
    let s = (m as f64 / k as f64).sqrt();
    (0..m)
        .map(|i| {
            // coordinates of s (e_i - 1/m) in the Helmert basis of the sum-zero plane
            (1..=k)
                .map(|j| {
                    let jf = j as f64;
                    let h = |idx: usize| -> f64 {
                        if idx < j {
                            1.0
                        } else if idx == j {
                            -jf
                        } else {
                            0.0
                        }
                    };
                    s * h(i) / (jf * (jf + 1.0)).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Orthonormal `d x k` frame from Gram-Schmidt on Gaussian vectors.
fn random_frame(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v = gaussian_unit(rng, d);
        for _ in 0..2 {
            for f in &frame {
                let c = dot(&v, f);
                v.iter_mut().zip(f).for_each(|(x, y)| *x -= c * y);
            }
        }
        let vn = norm(&v);
        if vn > 1e-6 {
            frame.push(v.into_iter().map(|x| x / vn).collect());
        }
    }
    frame
}

fn lift(frame: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let d = frame[0].len();
    let mut out = vec![0.0; d];
    for (f, &c) in frame.iter().zip(y) {
        out.iter_mut().zip(f).for_each(|(o, fi)| *o += c * fi);
    }
    out
}

/// Zero-pads every column of `instance` to dimension `d`.
pub fn embed_instance(instance: &ProblemInstance, d: usize) -> Result<ProblemInstance> {
    if d < instance.dim() {
        return Err(Error::InvalidArgument(format!(
            "cannot embed a {}-dimensional instance into R^{d}",
            instance.dim()
        )));
    }
    let cols = instance
        .columns()
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.resize(d, 0.0);
            c
        })
        .collect();
    let mut out = ProblemInstance::ingest(cols, false)?
        .with_name(format!("{}-embedded-d{d}", instance.name()));
    if instance.n() <= DEFAULT_ENUMERATION_BUDGET {
        let report = margin_report(&out)?;
        out = out.with_metadata(json!({
            "generator": "rank-deficient",
            "source": instance.name(),
            "d": d,
            "n": instance.n(),
            "rho_affine": report.rho_affine,
            "rho_classical": report.rho_classical,
            "rank": report.rank,
        }));
    }
    Ok(out)
}
