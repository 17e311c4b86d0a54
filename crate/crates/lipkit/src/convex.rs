//! Symmetric polyhedral gauges `phi(x) = max_i |<v_i, x>|` on R^dim:
//! support values over the unit sublevel polyhedron (with explicit
//! unboundedness), barrier-cone and polar membership, recession directions,
//! and norming constants of finite dual sets.
//!
//! Restricting to this polyhedral form keeps every supremum a finite linear
//! program, and boundedness of the sublevel set becomes a rank condition on
//! the rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LpSolution};

/// Residual threshold for the row-span membership test.
const SPAN_TOL: f64 = 1e-7;
/// Pivot threshold for rank decisions.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexError {
    #[error("ambient dimension must be at least 1")]
    ZeroDimension,
    #[error("vector has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row} has {got} coordinates, expected {expected}")]
    RowLengthMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite coordinate in row {row}")]
    NonFiniteRow { row: usize },
    #[error("the dual set has no nonzero functionals")]
    EmptySet,
}

/// `max_i |<v_i, x>|` for a finite list of functionals `v_i`.
///
/// Symmetric and positively homogeneous by construction; definite exactly
/// when the rows span the ambient space, recorded in the `degenerate` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaugeRecord", into = "GaugeRecord")]
pub struct PolyhedralGauge {
    dim: usize,
    rows: Vec<Vec<f64>>,
    rank: usize,
    degenerate: bool,
}

#[derive(Serialize, Deserialize, Clone)]
struct GaugeRecord {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl From<PolyhedralGauge> for GaugeRecord {
    fn from(g: PolyhedralGauge) -> Self {
        GaugeRecord {
            dim: g.dim,
            rows: g.rows,
        }
    }
}

impl TryFrom<GaugeRecord> for PolyhedralGauge {
    type Error = ConvexError;

    fn try_from(rec: GaugeRecord) -> Result<Self, ConvexError> {
        PolyhedralGauge::new(rec.dim, rec.rows)
    }
}

impl PolyhedralGauge {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self, ConvexError> {
        if dim == 0 {
            return Err(ConvexError::ZeroDimension);
        }
        for (row, v) in rows.iter().enumerate() {
            if v.len() != dim {
                return Err(ConvexError::RowLengthMismatch {
                    row,
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ConvexError::NonFiniteRow { row });
            }
        }
        let rank = numeric_rank(&rows, dim);
        Ok(Self {
            dim,
            rows,
            rank,
            degenerate: rank < dim,
        })
    }

    /// The coordinate box gauge (the sup-norm) in `dim` dimensions.
    pub fn unit_box(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|i| {
                let mut r = vec![0.0; dim];
                r[i] = 1.0;
                r
            })
            .collect();
        Self::new(dim, rows).expect("basis rows are valid")
    }

    /// The strip `|x_1| <= 1` in the plane; the canonical unbounded example.
    pub fn strip() -> Self {
        Self::new(2, vec![vec![1.0, 0.0]]).expect("single row is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True when the rows do not span the space, so the gauge vanishes on a
    /// nontrivial subspace.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ConvexError> {
        if x.len() != self.dim {
            return Err(ConvexError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| dot(row, x).abs())
            .fold(0.0, f64::max))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Support value of the unit sublevel polyhedron in a dual direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SupportValue {
    Finite(f64),
    Unbounded,
}

impl SupportValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, SupportValue::Finite(_))
    }
}

/// `sup { <xstar, x> : |<v_i, x>| <= 1 for all i }`, solved as a linear
/// program; unbounded exactly when `xstar` has a component outside the row
/// span of the gauge.
pub fn support_value(
    gauge: &PolyhedralGauge,
    xstar: &[f64],
) -> Result<SupportValue, ConvexError> {
    if xstar.len() != gauge.dim {
        return Err(ConvexError::DimensionMismatch {
            expected: gauge.dim,
            got: xstar.len(),
        });
    }
    let mut rows = Vec::with_capacity(2 * gauge.rows.len());
    let mut rhs = Vec::with_capacity(2 * gauge.rows.len());
    for v in &gauge.rows {
        rows.push(v.clone());
        rhs.push(1.0);
        rows.push(v.iter().map(|c| -c).collect());
        rhs.push(1.0);
    }
    match lp::maximize(xstar, &rows, &rhs) {
        LpSolution::Optimal { value, .. } => Ok(SupportValue::Finite(value)),
        LpSolution::Unbounded => Ok(SupportValue::Unbounded),
        LpSolution::Infeasible => unreachable!("the sublevel set contains the origin"),
    }
}

/// Whether `xstar` has finite supremum on the unit sublevel set.
pub fn barrier_membership(gauge: &PolyhedralGauge, xstar: &[f64]) -> Result<bool, ConvexError> {
    Ok(support_value(gauge, xstar)?.is_finite())
}

/// Whether the supremum is at most one.
pub fn polar_membership(gauge: &PolyhedralGauge, xstar: &[f64]) -> Result<bool, ConvexError> {
    Ok(match support_value(gauge, xstar)? {
        SupportValue::Finite(v) => v <= 1.0 + 1e-9,
        SupportValue::Unbounded => false,
    })
}

/// Boundedness of the unit sublevel set, with a recession direction when
/// unbounded: a unit vector on which the gauge vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub bounded: bool,
    pub recession_witness: Option<Vec<f64>>,
}

pub fn boundedness_check(gauge: &PolyhedralGauge) -> BoundednessReport {
    if !gauge.degenerate {
        return BoundednessReport {
            bounded: true,
            recession_witness: None,
        };
    }
    let witness = null_space_vector(&gauge.rows, gauge.dim)
        .expect("degenerate gauge has a null direction");
    BoundednessReport {
        bounded: false,
        recession_witness: Some(witness),
    }
}

/// Algebraic membership test `xstar in span(rows)`, the independent
/// counterpart of the linear-program route in [`barrier_membership`].
pub fn row_span_contains(gauge: &PolyhedralGauge, xstar: &[f64]) -> Result<bool, ConvexError> {
    if xstar.len() != gauge.dim {
        return Err(ConvexError::DimensionMismatch {
            expected: gauge.dim,
            got: xstar.len(),
        });
    }
    let projection = row_space_projection(gauge, xstar)?;
    let scale = xstar.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let residual = xstar
        .iter()
        .zip(&projection)
        .map(|(x, p)| (x - p).abs())
        .fold(0.0, f64::max);
    Ok(residual <= SPAN_TOL * scale)
}

/// Orthogonal projection of a vector onto the span of the gauge rows.
pub fn row_space_projection(
    gauge: &PolyhedralGauge,
    v: &[f64],
) -> Result<Vec<f64>, ConvexError> {
    if v.len() != gauge.dim {
        return Err(ConvexError::DimensionMismatch {
            expected: gauge.dim,
            got: v.len(),
        });
    }
    let basis = orthonormal_basis(&gauge.rows, gauge.dim);
    let mut projection = vec![0.0; gauge.dim];
    for q in &basis {
        let coeff = dot(q, v);
        for (p, qi) in projection.iter_mut().zip(q) {
            *p += coeff * qi;
        }
    }
    Ok(projection)
}

/// Gram-Schmidt with re-scaling; rows that are numerically dependent on the
/// previous ones are dropped.
fn orthonormal_basis(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(1.0f64, |acc, x| acc.max(x.abs()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let mut residual = row.clone();
        for q in &basis {
            let coeff = dot(q, &residual);
            for (r, qi) in residual.iter_mut().zip(q) {
                *r -= coeff * qi;
            }
        }
        let norm = dot(&residual, &residual).sqrt();
        if norm > RANK_TOL * scale {
            for r in residual.iter_mut() {
                *r /= norm;
            }
            basis.push(residual);
        }
        if basis.len() == dim {
            break;
        }
    }
    basis
}

fn numeric_rank(rows: &[Vec<f64>], dim: usize) -> usize {
    orthonormal_basis(rows, dim).len()
}

/// A unit vector orthogonal to every row, if one exists.
fn null_space_vector(rows: &[Vec<f64>], dim: usize) -> Option<Vec<f64>> {
    let basis = orthonormal_basis(rows, dim);
    if basis.len() >= dim {
        return None;
    }
    // project coordinate vectors off the row space and keep the largest
    let mut best: Option<(f64, Vec<f64>)> = None;
    for i in 0..dim {
        let mut candidate = vec![0.0; dim];
        candidate[i] = 1.0;
        for q in &basis {
            let coeff = dot(q, &candidate);
            for (c, qi) in candidate.iter_mut().zip(q) {
                *c -= coeff * qi;
            }
        }
        let norm = dot(&candidate, &candidate).sqrt();
        if best.as_ref().map_or(true, |(b, _)| norm > *b) {
            best = Some((norm, candidate));
        }
    }
    let (norm, mut v) = best?;
    if norm == 0.0 {
        return None;
    }
    for c in v.iter_mut() {
        *c /= norm;
    }
    Some(v)
}

/// Which polyhedral norm the ambient space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyhedralNorm {
    L1,
    Linf,
}

/// Norming diagnostics of a finite dual set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormingReport {
    /// `min over the unit sphere of max_k |<x*_k, x>| / ||x*_k||`; positive
    /// exactly when the set is separating.
    pub constant: f64,
    /// Whether the nonzero functionals span the dual.
    pub separating: bool,
}

/// Evaluates how well a finite dual set norms the space.
///
/// Functionals are normalized by the dual norm of the ambient norm; the
/// constant is minimized over the unit sphere piece by piece (per sign
/// pattern for the cross-polytope, per facet for the box), each piece a
/// linear program. Exact zero functionals are ignored.
pub fn norming_constant(
    duals: &[Vec<f64>],
    dim: usize,
    norm: PolyhedralNorm,
) -> Result<NormingReport, ConvexError> {
    if dim == 0 {
        return Err(ConvexError::ZeroDimension);
    }
    for (row, v) in duals.iter().enumerate() {
        if v.len() != dim {
            return Err(ConvexError::RowLengthMismatch {
                row,
                expected: dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ConvexError::NonFiniteRow { row });
        }
    }
    let normalized: Vec<Vec<f64>> = duals
        .iter()
        .filter(|v| v.iter().any(|&x| x != 0.0))
        .map(|v| {
            // dual norm: sup-norm functionals pair with the 1-norm and
            // vice versa
            let len = match norm {
                PolyhedralNorm::L1 => v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())),
                PolyhedralNorm::Linf => v.iter().map(|x| x.abs()).sum(),
            };
            v.iter().map(|x| x / len).collect()
        })
        .collect();
    if normalized.is_empty() {
        return Err(ConvexError::EmptySet);
    }
    let separating = numeric_rank(&normalized, dim) == dim;
    let constant = if separating {
        min_max_abs_on_sphere(&normalized, dim, norm)
    } else {
        0.0
    };
    Ok(NormingReport {
        constant,
        separating,
    })
}

/// Minimum of the gauge over the unit sphere of a polyhedral norm; positive
/// exactly when the sublevel set is bounded.
pub fn min_gauge_on_sphere(gauge: &PolyhedralGauge, norm: PolyhedralNorm) -> f64 {
    if gauge.rows.is_empty() {
        return 0.0;
    }
    min_max_abs_on_sphere(&gauge.rows, gauge.dim, norm)
}

/// `min over the unit sphere of max_k |<dirs_k, x>|`, piece by piece.
fn min_max_abs_on_sphere(dirs: &[Vec<f64>], dim: usize, norm: PolyhedralNorm) -> f64 {
    let mut best = f64::INFINITY;
    match norm {
        PolyhedralNorm::L1 => {
            // each sign pattern gives the simplex { sigma_i x_i >= 0,
            // sum sigma_i x_i = 1 }
            for mask in 0..(1usize << dim) {
                let sigma: Vec<f64> = (0..dim)
                    .map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 })
                    .collect();
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                piece_objective_rows(dirs, &mut rows, &mut rhs);
                // sum sigma_i x_i = 1
                let mut eq: Vec<f64> = sigma.clone();
                eq.push(0.0);
                rows.push(eq.clone());
                rhs.push(1.0);
                rows.push(eq.iter().map(|c| -c).collect());
                rhs.push(-1.0);
                // orthant constraints -sigma_i x_i <= 0
                for i in 0..dim {
                    let mut row = vec![0.0; dim + 1];
                    row[i] = -sigma[i];
                    rows.push(row);
                    rhs.push(0.0);
                }
                if let Some(v) = solve_piece(dim, &rows, &rhs) {
                    best = best.min(v);
                }
            }
        }
        PolyhedralNorm::Linf => {
            // each facet fixes one coordinate to +-1 and boxes the rest
            for j in 0..dim {
                for &eta in &[1.0, -1.0] {
                    let mut rows = Vec::new();
                    let mut rhs = Vec::new();
                    piece_objective_rows(dirs, &mut rows, &mut rhs);
                    let mut fix = vec![0.0; dim + 1];
                    fix[j] = 1.0;
                    rows.push(fix.clone());
                    rhs.push(eta);
                    rows.push(fix.iter().map(|c| -c).collect());
                    rhs.push(-eta);
                    for i in 0..dim {
                        if i == j {
                            continue;
                        }
                        let mut row = vec![0.0; dim + 1];
                        row[i] = 1.0;
                        rows.push(row.clone());
                        rhs.push(1.0);
                        row[i] = -1.0;
                        rows.push(row);
                        rhs.push(1.0);
                    }
                    if let Some(v) = solve_piece(dim, &rows, &rhs) {
                        best = best.min(v);
                    }
                }
            }
        }
    }
    best
}

/// Constraints `|<dirs_k, x>| <= t` over variables `(x, t)`.
fn piece_objective_rows(dirs: &[Vec<f64>], rows: &mut Vec<Vec<f64>>, rhs: &mut Vec<f64>) {
    for d in dirs {
        let mut row: Vec<f64> = d.clone();
        row.push(-1.0);
        rows.push(row);
        rhs.push(0.0);
        let mut row: Vec<f64> = d.iter().map(|c| -c).collect();
        row.push(-1.0);
        rows.push(row);
        rhs.push(0.0);
    }
}

/// Minimize `t` over the piece; `None` for infeasible pieces.
fn solve_piece(dim: usize, rows: &[Vec<f64>], rhs: &[f64]) -> Option<f64> {
    let mut objective = vec![0.0; dim + 1];
    objective[dim] = -1.0;
    match lp::maximize(&objective, rows, rhs) {
        LpSolution::Optimal { value, .. } => Some(-value),
        LpSolution::Infeasible => None,
        LpSolution::Unbounded => unreachable!("t is bounded below by 0 on a bounded piece"),
    }
}

/// Seeded random gauge with exact rank `rank`: `rank` well-separated basis
/// rows plus `extra_rows` random combinations of them.
pub fn random_gauge(dim: usize, rank: usize, extra_rows: usize, seed: u64) -> PolyhedralGauge {
    assert!(dim >= 1 && rank >= 1 && rank <= dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis_rows: Vec<Vec<f64>> = Vec::new();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    while basis_rows.len() < rank {
        let candidate: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut residual = candidate.clone();
        for q in &ortho {
            let coeff = dot(q, &residual);
            for (r, qi) in residual.iter_mut().zip(q) {
                *r -= coeff * qi;
            }
        }
        let norm = dot(&residual, &residual).sqrt();
        if norm <0.3 {
            continue; // too close to the current span; resample
        }
        for r in residual.iter_mut() {
            *r /= norm;
        }
        ortho.push(residual);
        let scale = rng.gen_range(0.5..=2.0);
        basis_rows.push(candidate.iter().map(|c| c * scale).collect());
    }
    let mut rows = basis_rows.clone();
    for _ in 0..extra_rows {
        let mut combo = vec![0.0; dim];
        for base in &basis_rows {
            let coeff = rng.gen_range(-1.0..=1.0);
            for (c, b) in combo.iter_mut().zip(base) {
                *c += coeff * b;
            }
        }
        rows.push(combo);
    }
    PolyhedralGauge::new(dim, rows).expect("generated rows are valid")
}
