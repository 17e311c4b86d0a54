//! Vector-valued functions on a finite metric space that vanish at the base
//! point: Lipschitz norms, gauge seminorms, bounded-ratio class membership,
//! seeded sampling, and the inf-convolution (McShane) extension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{FiniteMetricSpace, GaugePair, MetricError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LipError {
    #[error("function has {got} rows, space has {expected} points")]
    WrongRowCount { expected: usize, got: usize },
    #[error("row {row} has {got} coordinates, target dimension is {expected}")]
    WrongColumnCount {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("target dimension must be at least 1")]
    EmptyTarget,
    #[error("function must vanish at the base point (row {index})")]
    BaseRowNonzero { index: usize },
    #[error("operation needs at least two points")]
    SingletonSpace,
    #[error("class bound must be positive, got {bound}")]
    NonPositiveBound { bound: f64 },
    #[error("subset of sample points is empty")]
    EmptySubset,
    #[error("sample index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("sample index {index} appears twice")]
    DuplicateIndex { index: usize },
    #[error("declared Lipschitz bound must be nonnegative, got {bound}")]
    NegativeBound { bound: f64 },
    #[error("samples violate the declared Lipschitz bound at pair ({i}, {j})")]
    BoundViolated { i: usize, j: usize },
    #[error("sample at the base point must be zero, got {value}")]
    BaseValueNonzero { value: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Norm used on the coordinate target space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Linf => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
        }
    }
}

/// Finite-dimensional target space `R^m` with a coordinate norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpace {
    pub m: usize,
    pub norm: NormKind,
}

impl TargetSpace {
    pub fn new(m: usize, norm: NormKind) -> Self {
        Self { m, norm }
    }

    pub fn scalar() -> Self {
        Self {
            m: 1,
            norm: NormKind::L2,
        }
    }
}

/// A function from the points of a space into `R^m`, stored as one row of
/// coordinates per point; the base row is exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFunction {
    pub values: Vec<Vec<f64>>,
    pub target: TargetSpace,
}

impl PointFunction {
    pub fn new(
        space: &FiniteMetricSpace,
        target: TargetSpace,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, LipError> {
        if target.m == 0 {
            return Err(LipError::EmptyTarget);
        }
        if values.len() != space.n() {
            return Err(LipError::WrongRowCount {
                expected: space.n(),
                got: values.len(),
            });
        }
        for (row, coords) in values.iter().enumerate() {
            if coords.len() != target.m {
                return Err(LipError::WrongColumnCount {
                    row,
                    expected: target.m,
                    got: coords.len(),
                });
            }
        }
        if values[space.base()].iter().any(|&x| x != 0.0) {
            return Err(LipError::BaseRowNonzero {
                index: space.base(),
            });
        }
        Ok(Self { values, target })
    }

    pub fn zero(space: &FiniteMetricSpace, target: TargetSpace) -> Self {
        Self {
            values: vec![vec![0.0; target.m]; space.n()],
            target,
        }
    }

    /// Scalar function from one value per point.
    pub fn scalar(space: &FiniteMetricSpace, values: Vec<f64>) -> Result<Self, LipError> {
        let wrapped = values.into_iter().map(|v| vec![v]).collect();
        Self::new(space, TargetSpace::scalar(), wrapped)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Target-norm of `f(i) - f(j)`.
    pub fn diff_norm(&self, i: usize, j: usize) -> f64 {
        let diff: Vec<f64> = self.values[i]
            .iter()
            .zip(&self.values[j])
            .map(|(a, b)| a - b)
            .collect();
        self.target.norm.eval(&diff)
    }

    /// `self + coeff * other`, pointwise.
    pub fn add_scaled(&self, coeff: f64, other: &Self) -> Self {
        assert_eq!(self.target, other.target, "mismatched targets");
        assert_eq!(self.values.len(), other.values.len(), "mismatched points");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + coeff * y).collect())
            .collect();
        Self {
            values,
            target: self.target,
        }
    }

    pub fn diff(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    pub fn scale(&self, coeff: f64) -> Self {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|x| x * coeff).collect())
            .collect();
        Self {
            values,
            target: self.target,
        }
    }
}

/// A gauge together with a positive ratio bound; functions whose gauge
/// seminorm stays within the bound form the class of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub gauge: GaugePair,
    pub bound: f64,
}

impl ClassParams {
    pub fn new(gauge: GaugePair, bound: f64) -> Result<Self, LipError> {
        if !(bound > 0.0) {
            return Err(LipError::NonPositiveBound { bound });
        }
        Ok(Self { gauge, bound })
    }
}

fn check_shape(space: &FiniteMetricSpace, f: &PointFunction) -> Result<(), LipError> {
    if f.values.len() != space.n() {
        return Err(LipError::WrongRowCount {
            expected: space.n(),
            got: f.values.len(),
        });
    }
    Ok(())
}

/// Largest ratio `||f(i) - f(j)|| / d(i, j)` over unordered pairs, with the
/// attaining pair (lexicographic tie-break). Zero function gives `(0, (0, 1))`.
pub fn lip_norm(
    space: &FiniteMetricSpace,
    f: &PointFunction,
) -> Result<(f64, (usize, usize)), LipError> {
    check_shape(space, f)?;
    if space.n() < 2 {
        return Err(LipError::SingletonSpace);
    }
    let mut best = f64::NEG_INFINITY;
    let mut pair = (0, 1);
    for i in 0..space.n() {
        for j in (i + 1)..space.n() {
            let ratio = f.diff_norm(i, j) / space.distance(i, j);
            if ratio > best {
                best = ratio;
                pair = (i, j);
            }
        }
    }
    Ok((best, pair))
}

/// Largest ratio `||f(i) - f(j)|| / gauge(i, j)` over unordered pairs.
pub fn gauge_seminorm(
    f: &PointFunction,
    gauge: &GaugePair,
) -> Result<(f64, (usize, usize)), LipError> {
    if f.values.len() != gauge.n() {
        return Err(LipError::WrongRowCount {
            expected: gauge.n(),
            got: f.values.len(),
        });
    }
    if gauge.n() < 2 {
        return Err(LipError::SingletonSpace);
    }
    let mut best = f64::NEG_INFINITY;
    let mut pair = (0, 1);
    for i in 0..gauge.n() {
        for j in (i + 1)..gauge.n() {
            let ratio = f.diff_norm(i, j) / gauge.value(i, j);
            if ratio > best {
                best = ratio;
                pair = (i, j);
            }
        }
    }
    Ok((best, pair))
}

/// Whether the gauge seminorm of `f` is at most `params.bound` (non-strict).
/// A one-point space has no pairs, so membership holds vacuously.
pub fn in_class(f: &PointFunction, params: &ClassParams) -> bool {
    if params.gauge.n() < 2 {
        return true;
    }
    let (value, _) = gauge_seminorm(f, &params.gauge).expect("shape checked by gauge");
    value <= params.bound
}

/// Extends scalar samples `(point, value)` to the whole space with Lipschitz
/// constant at most `bound` via the inf-convolution formula
/// `f(y) = min over samples of (g(v) + bound * d(y, v))`.
///
/// On the sampled points the result equals the samples exactly. If the base
/// point is not sampled, the result is shifted by `-f(base)` so it vanishes
/// there; the shift changes no differences.
pub fn mcshane_extend(
    space: &FiniteMetricSpace,
    samples: &[(usize, f64)],
    bound: f64,
) -> Result<PointFunction, LipError> {
    if samples.is_empty() {
        return Err(LipError::EmptySubset);
    }
    if bound < 0.0 {
        return Err(LipError::NegativeBound { bound });
    }
    let n = space.n();
    let mut assigned: Vec<Option<f64>> = vec![None; n];
    for &(index, value) in samples {
        if index >= n {
            return Err(LipError::IndexOutOfRange { index, n });
        }
        if assigned[index].is_some() {
            return Err(LipError::DuplicateIndex { index });
        }
        if index == space.base() && value != 0.0 {
            return Err(LipError::BaseValueNonzero { value });
        }
        assigned[index] = Some(value);
    }
    for (pos, &(i, gi)) in samples.iter().enumerate() {
        for &(j, gj) in &samples[pos + 1..] {
            if (gi - gj).abs() > bound * space.distance(i, j) + 1e-12 {
                return Err(LipError::BoundViolated { i, j });
            }
        }
    }

    let mut values = vec![0.0; n];
    for y in 0..n {
        values[y] = match assigned[y] {
            Some(g) => g,
            None => samples
                .iter()
                .map(|&(v, g)| g + bound * space.distance(y, v))
                .fold(f64::INFINITY, f64::min),
        };
    }
    if assigned[space.base()].is_none() {
        let shift = values[space.base()];
        for v in values.iter_mut() {
            *v -= shift;
        }
        values[space.base()] = 0.0;
    }
    PointFunction::scalar(space, values)
}

/// Seeded sample from the class of functions whose `d^beta` seminorm is at
/// most `bound`: coordinates are drawn uniformly from `[-1, 1]`, the base row
/// is zeroed, and the function is rescaled by `bound / max(1, seminorm)`.
///
/// Output is a deterministic function of the seed.
pub fn sample_function(
    space: &FiniteMetricSpace,
    target: TargetSpace,
    beta: f64,
    bound: f64,
    seed: u64,
) -> Result<PointFunction, LipError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(MetricError::ExponentOutOfRange { alpha: beta }.into());
    }
    if !(bound > 0.0) {
        return Err(LipError::NonPositiveBound { bound });
    }
    if target.m == 0 {
        return Err(LipError::EmptyTarget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<Vec<f64>> = (0..space.n())
        .map(|_| (0..target.m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    values[space.base()] = vec![0.0; target.m];
    let mut f = PointFunction { values, target };
    if space.n() >= 2 {
        let gauge = GaugePair::metric_power(space, beta)?;
        let (seminorm, _) = gauge_seminorm(&f, &gauge)?;
        let mut scale = bound / seminorm.max(1.0);
        if seminorm > 1.0 {
            // keep the rescaled seminorm strictly within the bound despite
            // the rounding of bound/seminorm
            scale *= 1.0 - 1e-14;
        }
        f = f.scale(scale);
    }
    Ok(f)
}
