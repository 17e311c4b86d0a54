//! Finite pointed metric spaces and pair gauges.
//!
//! A [`FiniteMetricSpace`] is a validated symmetric distance matrix together
//! with a distinguished base point. A [`GaugePair`] is a positive symmetric
//! pair function used to carve out bounded-ratio classes of functions. Gauges
//! are always materialized as full matrices, so evaluating one is a plain
//! lookup and never re-runs `powf`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for symmetry and triangle checks. Inputs are small,
/// well-scaled matrices, so an absolute tolerance is appropriate.
pub const METRIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("distance matrix is empty")]
    EmptyMatrix,
    #[error("row {row} has {got} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("base index {base} out of range for {n} points")]
    BaseOutOfRange { base: usize, n: usize },
    #[error("non-finite entry at ({i}, {j})")]
    NonFiniteEntry { i: usize, j: usize },
    #[error("negative distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("zero off-diagonal distance at ({i}, {j})")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("asymmetric entries at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("triangle inequality fails: d({i},{j}) > d({i},{via}) + d({via},{j})")]
    TriangleViolation { i: usize, j: usize, via: usize },
    #[error("exponent {alpha} outside (0, 1]")]
    ExponentOutOfRange { alpha: f64 },
    #[error("operation needs at least two points")]
    SingletonSpace,
    #[error("gauge is over {got} points, space has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gauge value at ({i}, {j}) must be positive off the diagonal")]
    NonPositiveGauge { i: usize, j: usize },
    #[error("metric-power gauge record is missing its exponent")]
    MissingExponent,
    #[error("unknown gauge kind {0:?}")]
    UnknownGaugeKind(String),
}

/// A finite metric space with points indexed `0..n` and a base point.
///
/// Construction validates all three metric axioms; instances are immutable
/// afterwards and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRecord")]
pub struct FiniteMetricSpace {
    n: usize,
    base: usize,
    dist: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct SpaceRecord {
    n: usize,
    base: usize,
    dist: Vec<Vec<f64>>,
}

impl TryFrom<SpaceRecord> for FiniteMetricSpace {
    type Error = MetricError;

    fn try_from(rec: SpaceRecord) -> Result<Self, MetricError> {
        if rec.dist.len() != rec.n {
            return Err(MetricError::NotSquare {
                row: 0,
                expected: rec.n,
                got: rec.dist.len(),
            });
        }
        FiniteMetricSpace::new(rec.dist, rec.base)
    }
}

impl FiniteMetricSpace {
    /// Validates a distance matrix and base index into a metric space.
    ///
    /// Symmetry and the triangle inequality are checked to [`METRIC_TOL`];
    /// the zero/positive pattern of entries is checked exactly.
    pub fn new(dist: Vec<Vec<f64>>, base: usize) -> Result<Self, MetricError> {
        let n = dist.len();
        if n == 0 {
            return Err(MetricError::EmptyMatrix);
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NotSquare {
                    row: i,
                    expected: n,
                    got: row.len(),
                });
            }
        }
        if base >= n {
            return Err(MetricError::BaseOutOfRange { base, n });
        }
        for i in 0..n {
            for j in 0..n {
                if !dist[i][j].is_finite() {
                    return Err(MetricError::NonFiniteEntry { i, j });
                }
            }
        }
        for (i, row) in dist.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i });
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && dist[i][j] < 0.0 {
                    return Err(MetricError::NegativeDistance {
                        i,
                        j,
                        value: dist[i][j],
                    });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dist[i][j] == 0.0 {
                    return Err(MetricError::ZeroOffDiagonal { i, j });
                }
                if (dist[i][j] - dist[j][i]).abs() > METRIC_TOL {
                    return Err(MetricError::AsymmetricMatrix { i, j });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for via in 0..n {
                    if via == i || via == j {
                        continue;
                    }
                    if dist[i][j] > dist[i][via] + dist[via][j] + METRIC_TOL {
                        return Err(MetricError::TriangleViolation { i, j, via });
                    }
                }
            }
        }
        Ok(Self { n, base, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// Raises every distance to the power `alpha` in `(0, 1]`, which is again
    /// a metric; the result is re-validated.
    pub fn snowflake(&self, alpha: f64) -> Result<Self, MetricError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(MetricError::ExponentOutOfRange { alpha });
        }
        if alpha == 1.0 {
            return Ok(self.clone());
        }
        let dist = self
            .dist
            .iter()
            .map(|row| row.iter().map(|&d| metric_pow(d, alpha)).collect())
            .collect();
        Self::new(dist, self.base)
    }

    /// Smallest off-diagonal distance with an attaining pair (lexicographic
    /// tie-break on `(i, j)` with `i < j`).
    pub fn min_gap(&self) -> Result<(f64, (usize, usize)), MetricError> {
        if self.n < 2 {
            return Err(MetricError::SingletonSpace);
        }
        let mut best = f64::INFINITY;
        let mut pair = (0, 1);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.dist[i][j] < best {
                    best = self.dist[i][j];
                    pair = (i, j);
                }
            }
        }
        Ok((best, pair))
    }

    /// Minimum over unordered pairs of `gauge(i, j) / d(i, j)`, with the
    /// attaining pair (lexicographic tie-break).
    pub fn gauge_ratio_inf(&self, gauge: &GaugePair) -> Result<(f64, (usize, usize)), MetricError> {
        if gauge.n() != self.n {
            return Err(MetricError::DimensionMismatch {
                expected: self.n,
                got: gauge.n(),
            });
        }
        if self.n < 2 {
            return Err(MetricError::SingletonSpace);
        }
        let mut best = f64::INFINITY;
        let mut pair = (0, 1);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let ratio = gauge.value(i, j) / self.dist[i][j];
                if ratio < best {
                    best = ratio;
                    pair = (i, j);
                }
            }
        }
        Ok((best, pair))
    }
}

/// `x^alpha` with exact fast paths for the exponents used most.
fn metric_pow(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else if alpha == 0.5 {
        x.sqrt()
    } else {
        x.powf(alpha)
    }
}

/// Points `{0} ∪ {2^-k : 1 <= k <= levels}` on the line with the absolute
/// value metric; index `k` holds coordinate `2^-k` and the base is the
/// point at the origin.
pub fn dyadic_chain(levels: usize) -> FiniteMetricSpace {
    assert!(levels >= 1, "dyadic_chain needs at least one level");
    let coords: Vec<f64> = std::iter::once(0.0)
        .chain((1..=levels).map(|k| 2f64.powi(-(k as i32))))
        .collect();
    let n = coords.len();
    let dist = (0..n)
        .map(|i| (0..n).map(|j| (coords[i] - coords[j]).abs()).collect())
        .collect();
    FiniteMetricSpace::new(dist, 0).expect("dyadic chain is a metric")
}

/// Seeded random metric space: off-diagonal entries uniform in `[0.1, 1]`,
/// symmetrized and repaired into a metric with all-pairs shortest paths.
/// The base point is index 0.
pub fn random_space(n: usize, seed: u64) -> FiniteMetricSpace {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rng.gen_range(0.1..=1.0);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    for via in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let detour = dist[i][via] + dist[via][j];
                    if detour < dist[i][j] {
                        dist[i][j] = detour;
                    }
                }
            }
        }
    }
    FiniteMetricSpace::new(dist, 0).expect("shortest-path repair yields a metric")
}

/// How a gauge's matrix was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum GaugeKind {
    /// Elementwise power `d^alpha` of the distances of a source space.
    MetricPower { alpha: f64 },
    /// The distance matrix of a second metric on the same points.
    SecondMetric,
    /// An arbitrary positive symmetric pair function; no triangle inequality
    /// is required.
    Raw,
}

/// A symmetric pair function that is zero exactly on the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaugeRecord", into = "GaugeRecord")]
pub struct GaugePair {
    kind: GaugeKind,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct GaugeRecord {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    values: Vec<Vec<f64>>,
}

impl From<GaugePair> for GaugeRecord {
    fn from(g: GaugePair) -> Self {
        let (kind, alpha) = match g.kind {
            GaugeKind::MetricPower { alpha } => ("power", Some(alpha)),
            GaugeKind::SecondMetric => ("metric", None),
            GaugeKind::Raw => ("raw", None),
        };
        GaugeRecord {
            kind: kind.to_string(),
            alpha,
            values: g.values,
        }
    }
}

impl TryFrom<GaugeRecord> for GaugePair {
    type Error = MetricError;

    fn try_from(rec: GaugeRecord) -> Result<Self, MetricError> {
        let kind = match rec.kind.as_str() {
            "power" => {
                let alpha = rec.alpha.ok_or(MetricError::MissingExponent)?;
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(MetricError::ExponentOutOfRange { alpha });
                }
                GaugeKind::MetricPower { alpha }
            }
            "metric" => GaugeKind::SecondMetric,
            "raw" => GaugeKind::Raw,
            other => return Err(MetricError::UnknownGaugeKind(other.to_string())),
        };
        GaugePair::with_kind(kind, rec.values)
    }
}

impl GaugePair {
    fn with_kind(kind: GaugeKind, values: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = values.len();
        if n == 0 {
            return Err(MetricError::EmptyMatrix);
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NotSquare {
                    row: i,
                    expected: n,
                    got: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !values[i][j].is_finite() {
                    return Err(MetricError::NonFiniteEntry { i, j });
                }
            }
        }
        for (i, row) in values.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[i][j] <= 0.0 {
                    return Err(MetricError::NonPositiveGauge { i, j });
                }
                if (values[i][j] - values[j][i]).abs() > METRIC_TOL {
                    return Err(MetricError::AsymmetricMatrix { i, j });
                }
            }
        }
        Ok(Self { kind, values })
    }

    /// Gauge `d^alpha` materialized from the distances of `space`.
    pub fn metric_power(space: &FiniteMetricSpace, alpha: f64) -> Result<Self, MetricError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(MetricError::ExponentOutOfRange { alpha });
        }
        let values = space
            .matrix()
            .iter()
            .map(|row| row.iter().map(|&d| metric_pow(d, alpha)).collect())
            .collect();
        Self::with_kind(GaugeKind::MetricPower { alpha }, values)
    }

    /// Gauge given by the distances of a second metric on the same points.
    pub fn second_metric(other: &FiniteMetricSpace) -> Self {
        Self {
            kind: GaugeKind::SecondMetric,
            values: other.matrix().to_vec(),
        }
    }

    /// Arbitrary positive symmetric pair values.
    pub fn raw(values: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        Self::with_kind(GaugeKind::Raw, values)
    }

    pub fn kind(&self) -> &GaugeKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}
