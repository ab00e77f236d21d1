//! Problem instances: the columns `a_1..a_n` of a `d x n` matrix `A`, their Gram
//! matrix, and an orthonormal basis of the column space `lin(A)`.
//!
//! Instances are immutable once built. The Gram matrix and the column-space basis
//! are computed on first use and cached for the lifetime of the instance.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};

/// Relative rank cutoff, scaled by the largest column norm.
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;
/// Entries of a simplex point within this distance of zero are stored as exact zero.
pub const SIMPLEX_ZERO_TOL: f64 = 1e-12;
/// Allowed deviation of a simplex point's weight sum from one.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Deviation from unit norm accepted for a "normalized" column.
pub const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    name: String,
    columns: Vec<Vec<f64>>,
    dim: usize,
    normalized: bool,
    rank_tol: Option<f64>,
    metadata: Option<serde_json::Value>,
    gram: OnceLock<GramMatrix>,
    basis: OnceLock<ColumnSpaceBasis>,
}

/// Symmetric `n x n` table `G = A^T A`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpaceBasis {
    pub basis: Vec<Vec<f64>>,
    pub rank: usize,
    pub tolerance: f64,
}

/// A probability vector over the columns: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

/// A vector `w` in `R^d`, optionally known to lie in `lin(A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDirection {
    pub vector: Vec<f64>,
    pub in_column_space: bool,
}

/// On-disk instance format. `columns[i]` is the i-th column `a_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub columns: Vec<Vec<f64>>,
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl ProblemInstance {
    /// Builds an instance from raw columns, optionally rescaling each to unit norm.
    pub fn ingest(raw_columns: Vec<Vec<f64>>, normalize: bool) -> Result<Self> {
        let first = raw_columns.first().ok_or(Error::EmptyInstance)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::ZeroDimension(0));
        }
        for (i, c) in raw_columns.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::RaggedColumns {
                    index: i,
                    expected: dim,
                    found: c.len(),
                });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        let columns = if normalize {
            raw_columns
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    let nrm = norm(&c);
                    if nrm == 0.0 {
                        Err(Error::ZeroColumn(i))
                    } else {
                        Ok(c.iter().map(|x| x / nrm).collect())
                    }
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            raw_columns
        };
        Ok(Self {
            name: String::from("unnamed"),
            columns,
            dim,
            normalized: normalize,
            rank_tol: None,
            metadata: None,
            gram: OnceLock::new(),
            basis: OnceLock::new(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Overrides the absolute rank cutoff used for `lin(A)`.
    pub fn with_rank_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rank tolerance must be positive, got {tol}"
            )));
        }
        self.rank_tol = Some(tol);
        self.basis = OnceLock::new();
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metadata(&self) -> Option<&serde_json::Value> {
        self.metadata.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn normalized_flag(&self) -> bool {
        self.normalized
    }

    /// True when every column has unit norm, whatever the ingestion flag said.
    pub fn has_unit_columns(&self) -> bool {
        self.first_non_unit_column().is_none()
    }

    pub fn first_non_unit_column(&self) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| (norm(c) - 1.0).abs() > UNIT_NORM_TOL)
    }

    pub fn max_column_norm(&self) -> f64 {
        self.columns.iter().map(|c| norm(c)).fold(0.0, f64::max)
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tol
            .unwrap_or_else(|| DEFAULT_RANK_RTOL * self.max_column_norm().max(f64::MIN_POSITIVE))
    }

    pub fn gram(&self) -> &GramMatrix {
        self.gram.get_or_init(|| GramMatrix::from_columns(&self.columns))
    }

    /// Column-space basis at the instance's rank tolerance.
    pub fn basis(&self) -> &ColumnSpaceBasis {
        self.basis
            .get_or_init(|| ColumnSpaceBasis::compute(&self.columns, self.dim, self.rank_tolerance()))
    }

    pub fn rank(&self) -> usize {
        self.basis().rank
    }

    /// Orthonormal basis of `lin(A)` computed at an explicit tolerance (not cached).
    pub fn column_space_basis(&self, tol: f64) -> ColumnSpaceBasis {
        ColumnSpaceBasis::compute(&self.columns, self.dim, tol)
    }

    /// `A p` for a simplex point `p`.
    pub fn combine(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        self.apply(p.weights())
    }

    /// `A alpha` for an arbitrary coefficient vector.
    pub fn apply(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: alpha.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for (c, &a) in self.columns.iter().zip(alpha) {
            if a != 0.0 {
                axpy(&mut out, a, c);
            }
        }
        Ok(out)
    }

    /// `A^T w`, the vector of dot products `w . a_i`.
    pub fn dots(&self, w: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, w)).collect()
    }

    pub fn min_dot(&self, w: &[f64]) -> f64 {
        self.columns
            .iter()
            .map(|c| dot(c, w))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn project_to_column_space(&self, w: &[f64]) -> Result<PrimalDirection> {
        self.check_dim(w)?;
        Ok(PrimalDirection {
            vector: self.basis().project(w),
            in_column_space: true,
        })
    }

    pub fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let inst = Self::ingest(file.columns, file.normalize)?.with_name(file.name);
        Ok(match file.metadata {
            Some(m) => inst.with_metadata(m),
            None => inst,
        })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            name: self.name.clone(),
            columns: self.columns.clone(),
            normalize: self.normalized,
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }
}

impl GramMatrix {
    fn from_columns(columns: &[Vec<f64>]) -> Self {
        let n = columns.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let g = dot(&columns[i], &columns[j]);
                entries[i * n + j] = g;
                entries[j * n + i] = g;
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// `alpha^T G alpha`, clamped at zero against rounding.
    pub fn quad_form(&self, alpha: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            if alpha[i] == 0.0 {
                continue;
            }
            let row = &self.entries[i * self.n..(i + 1) * self.n];
            s += alpha[i] * dot(row, alpha);
        }
        s.max(0.0)
    }

    /// The semi-norm `||alpha||_G`.
    pub fn seminorm(&self, alpha: &[f64]) -> f64 {
        self.quad_form(alpha).sqrt()
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }
}

impl ColumnSpaceBasis {
    /// Modified Gram-Schmidt with column pivoting: the remaining column of largest
    /// residual norm is taken next, and orthogonalization stops once that norm
    /// falls to `tol` or below.
    pub fn compute(columns: &[Vec<f64>], dim: usize, tol: f64) -> Self {
        let mut work: Vec<Vec<f64>> = columns.to_vec();
        let mut used = vec![false; work.len()];
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < dim {
            let pick = (0..work.len())
                .filter(|&j| !used[j])
                .map(|j| (j, norm(&work[j])))
                .fold(None, |best: Option<(usize, f64)>, (j, v)| match best {
                    Some((_, b)) if v <= b => best,
                    _ => Some((j, v)),
                });
            let Some((j, nrm)) = pick else { break };
            if nrm <= tol {
                break;
            }
            used[j] = true;
            let mut q = work[j].clone();
            // second pass against the accepted basis keeps q orthogonal to working precision
            for b in &basis {
                let c = dot(&q, b);
                axpy(&mut q, -c, b);
            }
            let qn = norm(&q);
            if qn <= tol {
                continue;
            }
            q.iter_mut().for_each(|x| *x /= qn);
            for (k, w) in work.iter_mut().enumerate() {
                if !used[k] {
                    let c = dot(w, &q);
                    axpy(w, -c, &q);
                }
            }
            basis.push(q);
        }
        let rank = basis.len();
        Self {
            basis,
            rank,
            tolerance: tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.rank
    }

    /// Coordinates `B^T v` in the basis.
    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, v)).collect()
    }

    /// `B y`, mapping basis coordinates back to `R^d`.
    pub fn lift(&self, y: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (b, &c) in self.basis.iter().zip(y) {
            axpy(&mut out, c, b);
        }
        out
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(v), v.len())
    }

    /// Norm of the component of `v` orthogonal to the basis span.
    pub fn orthogonal_residual(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        crate::linalg::dist(v, &p)
    }
}

impl SimplexPoint {
    /// Validates `weights` as a probability vector. Entries within `1e-12` of zero
    /// are stored as exact zeros.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSimplexPoint("no weights".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidSimplexPoint(format!(
                "weight {i} is not finite"
            )));
        }
        if let Some(i) = weights.iter().position(|&w| w < -SIMPLEX_ZERO_TOL) {
            return Err(Error::InvalidSimplexPoint(format!(
                "weight {i} = {} is negative",
                weights[i]
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidSimplexPoint(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self::clamped(weights))
    }

    /// Projects an approximately-feasible weight vector (e.g. an LP solution) onto
    /// the simplex by clamping negatives and rescaling the sum.
    pub fn from_approx(weights: Vec<f64>) -> Result<Self> {
        let clipped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clipped.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::InvalidSimplexPoint(format!(
                "cannot rescale weights with sum {sum}"
            )));
        }
        Ok(Self::clamped(clipped.iter().map(|w| w / sum).collect()))
    }

    fn clamped(mut weights: Vec<f64>) -> Self {
        for w in &mut weights {
            if w.abs() <= SIMPLEX_ZERO_TOL {
                *w = 0.0;
            }
        }
        Self { weights }
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        Self {
            weights: crate::linalg::unit(n, i),
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `(1 - s) * self + s * e_i`, the convex step shared by the averaging algorithms.
    pub(crate) fn step_toward_vertex(&mut self, i: usize, s: f64) {
        for w in &mut self.weights {
            *w *= 1.0 - s;
        }
        self.weights[i] += s;
    }
}

impl PrimalDirection {
    pub fn new(vector: Vec<f64>) -> Self {
        Self {
            vector,
            in_column_space: false,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vector)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn inst(cols: &[&[f64]], normalize: bool) -> ProblemInstance {
        ProblemInstance::ingest(cols.iter().map(|c| c.to_vec()).collect(), normalize).unwrap()
    }

    #[test]
    fn ingest_rescales_columns() {
        let a = inst(&[&[2.0, 0.0], &[0.0, 3.0]], true);
        assert_eq!(a.columns(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(a.normalized_flag());
    }

    #[test]
    fn ingest_raw_single_column() {
        let a = inst(&[&[1.0, 0.0]], false);
        assert_eq!(a.n(), 1);
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn ingest_rejects_zero_column_naming_index() {
        let err = ProblemInstance::ingest(vec![vec![0.0, 0.0], vec![1.0, 0.0]], true).unwrap_err();
        assert!(matches!(err, Error::ZeroColumn(0)), "{err}");
        // without normalization the zero column is fine
        assert!(ProblemInstance::ingest(vec![vec![0.0, 0.0], vec![1.0, 0.0]], false).is_ok());
    }

    #[test]
    fn ingest_rejects_ragged_and_empty() {
        let err = ProblemInstance::ingest(vec![vec![1.0, 0.0], vec![1.0]], false).unwrap_err();
        assert!(matches!(err, Error::RaggedColumns { index: 1, .. }));
        assert!(matches!(
            ProblemInstance::ingest(vec![], false),
            Err(Error::EmptyInstance)
        ));
        assert!(matches!(
            ProblemInstance::ingest(vec![vec![f64::NAN]], false),
            Err(Error::NonFinite(0))
        ));
    }

    #[test]
    fn gram_examples() {
        let a = inst(&[&[1.0, 0.0], &[0.0, 1.0]], false);
        assert_eq!(a.gram().rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = inst(&[&[1.0, 0.0], &[-1.0, 0.0]], false);
        assert_eq!(b.gram().rows(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = inst(&[&[1.0, 0.0], &[s, s]], false);
        assert_abs_diff_eq!(c.gram().get(0, 1), s, epsilon = 1e-15);
        assert_abs_diff_eq!(c.gram().get(1, 0), s, epsilon = 1e-15);
    }

    #[test]
    fn basis_examples() {
        let a = inst(&[&[1.0, 0.0], &[-1.0, 0.0]], false);
        let b = a.basis();
        assert_eq!(b.rank, 1);
        assert_abs_diff_eq!(b.basis[0][0].abs(), 1.0, epsilon = 1e-15);

        let c = inst(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], false);
        assert_eq!(c.rank(), 2);

        // second pivot is ~1e-14 / 2, well below the 1e-10 cutoff
        let d = inst(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-14]], true);
        assert_eq!(d.rank(), 1);
        // an explicit tighter tolerance sees both directions
        assert_eq!(d.column_space_basis(1e-16).rank, 2);
    }

    #[test]
    fn combine_examples() {
        let a = inst(&[&[1.0, 0.0], &[0.0, 1.0]], false);
        let p = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(a.combine(&p).unwrap(), vec![0.5, 0.5]);
        assert_eq!(a.combine(&SimplexPoint::vertex(2, 1)).unwrap(), vec![0.0, 1.0]);
        let b = inst(&[&[1.0, 0.0], &[-1.0, 0.0]], false);
        assert_eq!(b.combine(&p).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            b.combine(&SimplexPoint::vertex(3, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let a = inst(&[&[1.0, 0.0], &[-1.0, 0.0]], false);
        let p = a.project_to_column_space(&[0.0, 1.0]).unwrap();
        assert!(p.in_column_space);
        assert_abs_diff_eq!(p.norm(), 0.0, epsilon = 1e-15);
        let q = a.project_to_column_space(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(q.vector[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.vector[1], 0.0, epsilon = 1e-14);
        let r = a.project_to_column_space(&[-2.5, 0.0]).unwrap();
        assert_abs_diff_eq!(r.vector[0], -2.5, epsilon = 1e-12);
        assert!(a.project_to_column_space(&[1.0]).is_err());
    }

    #[test]
    fn simplex_point_validation_and_clamping() {
        let p = SimplexPoint::new(vec![0.5, 0.5 + 5e-13, -5e-13]).unwrap();
        assert_eq!(p.weights()[2], 0.0);
        assert_eq!(p.support(), vec![0, 1]);
        assert!(SimplexPoint::new(vec![1.1, -0.1]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.4]).is_err());
        assert!(SimplexPoint::new(vec![]).is_err());
        let q = SimplexPoint::from_approx(vec![0.5, 0.5 + 1e-9, -1e-10]).unwrap();
        assert_abs_diff_eq!(q.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip_preserves_columns() {
        let a = inst(&[&[3.0, 4.0], &[0.0, 2.0]], true).with_name("demo");
        let text = a.to_json().unwrap();
        let b = ProblemInstance::from_json(&text).unwrap();
        assert_eq!(b.name(), "demo");
        for (x, y) in a.columns().iter().zip(b.columns()) {
            for (u, v) in x.iter().zip(y) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-15);
            }
        }
        let raw: InstanceFile =
            serde_json::from_str(r#"{"name":"x","columns":[[2,0],[0,3]],"normalize":true}"#).unwrap();
        let c = ProblemInstance::from_file(raw).unwrap();
        assert_eq!(c.columns(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    }
}
