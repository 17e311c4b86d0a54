//! The finite Lipschitz-free space: zero-sum weight vectors over the points
//! ("molecules"), their transport norm computed two independent ways (a
//! minimum-cost flow primal and a Lipschitz-1 dual linear program), lifted
//! operators of base-preserving point maps, and the adjoint-composition and
//! adjoint-preimage machinery.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lip::{mcshane_extend, LipError, PointFunction};
use crate::lp::{self, LpSolution};
use crate::metric::{FiniteMetricSpace, MetricError};

/// Tolerance for the zero-sum molecule invariant.
pub const BALANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FreeError {
    #[error("molecule weights sum to {sum}, expected 0")]
    UnbalancedMolecule { sum: f64 },
    #[error("molecule has {got} weights, space has {expected} points")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error("non-finite weight at index {index}")]
    NonFiniteWeight { index: usize },
    #[error("assignment has {got} entries, source has {expected} points")]
    AssignmentLengthMismatch { expected: usize, got: usize },
    #[error("assignment value {value} at {index} out of range for {target_n} target points")]
    AssignmentOutOfRange {
        index: usize,
        value: usize,
        target_n: usize,
    },
    #[error("map must send the source base point to the target base point, got {maps_to}")]
    BaseNotPreserved { maps_to: usize },
    #[error("map is not injective: points {first} and {second} share image {image}")]
    NonInjectiveMap {
        first: usize,
        second: usize,
        image: usize,
    },
    #[error("operation needs at least two source points")]
    SingletonSpace,
    #[error("expected a scalar function, target dimension is {got}")]
    ScalarFunctionRequired { got: usize },
    #[error("minimum-cost flow failed to settle")]
    SolverStall,
    #[error("internal dual norm solve failed: {0}")]
    InternalLp(&'static str),
    #[error(transparent)]
    Lip(#[from] LipError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Zero-sum real weights over the points of a space; the coefficient vector
/// of a combination of point evaluations, quotiented by the base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MoleculeRecord")]
pub struct Molecule {
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct MoleculeRecord {
    weights: Vec<f64>,
}

impl TryFrom<MoleculeRecord> for Molecule {
    type Error = FreeError;

    fn try_from(rec: MoleculeRecord) -> Result<Self, FreeError> {
        Molecule::new(rec.weights)
    }
}

impl Molecule {
    pub fn new(weights: Vec<f64>) -> Result<Self, FreeError> {
        for (index, w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(FreeError::NonFiniteWeight { index });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum.abs() > BALANCE_TOL {
            return Err(FreeError::UnbalancedMolecule { sum });
        }
        Ok(Self { weights })
    }

    /// Builds a molecule from point-mass terms `(index, coefficient)`.
    ///
    /// The base-point weight is adjusted to restore the zero sum: adding
    /// point mass at the base is a no-op in the quotient, so arbitrary
    /// combinations canonicalize this way.
    pub fn from_dirac_combination(
        n: usize,
        base: usize,
        terms: &[(usize, f64)],
    ) -> Result<Self, FreeError> {
        let mut weights = vec![0.0; n];
        for &(index, coeff) in terms {
            if index >= n {
                return Err(FreeError::WeightCountMismatch {
                    expected: n,
                    got: index + 1,
                });
            }
            weights[index] += coeff;
        }
        let sum: f64 = weights.iter().sum();
        weights[base] -= sum;
        Self::new(weights)
    }

    /// The molecule of a point pair, `delta_x - delta_y`.
    pub fn dirac_difference(n: usize, x: usize, y: usize) -> Result<Self, FreeError> {
        let mut weights = vec![0.0; n];
        if x >= n || y >= n {
            return Err(FreeError::WeightCountMismatch {
                expected: n,
                got: x.max(y) + 1,
            });
        }
        weights[x] += 1.0;
        weights[y] -= 1.0;
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self, FreeError> {
        if self.len() != other.len() {
            return Err(FreeError::WeightCountMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Self::new(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, coeff: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * coeff).collect(),
        }
    }
}

/// Sparse transport plan: `(source point, sink point, mass)` triplets.
pub type TransportPlan = Vec<(usize, usize, f64)>;

fn check_molecule(space: &FiniteMetricSpace, molecule: &Molecule) -> Result<(), FreeError> {
    if molecule.len() != space.n() {
        return Err(FreeError::WeightCountMismatch {
            expected: space.n(),
            got: molecule.len(),
        });
    }
    let sum: f64 = molecule.weights().iter().sum();
    if sum.abs() > BALANCE_TOL {
        return Err(FreeError::UnbalancedMolecule { sum });
    }
    Ok(())
}

/// Transport norm of a molecule: the minimum cost of routing its positive
/// part onto its negative part, with the distance as unit cost.
///
/// Solved by successive shortest augmenting paths on the complete bipartite
/// residual network between positive- and negative-weight points; the base
/// point participates as an ordinary node. Returns the optimal value and a
/// sparse plan.
pub fn kr_norm_primal(
    space: &FiniteMetricSpace,
    molecule: &Molecule,
) -> Result<(f64, TransportPlan), FreeError> {
    check_molecule(space, molecule)?;

    let mut sources: Vec<(usize, f64)> = Vec::new();
    let mut sinks: Vec<(usize, f64)> = Vec::new();
    for (i, &w) in molecule.weights().iter().enumerate() {
        if w > BALANCE_TOL {
            sources.push((i, w));
        } else if w < -BALANCE_TOL {
            sinks.push((i, -w));
        }
    }
    if sources.is_empty() || sinks.is_empty() {
        return Ok((0.0, Vec::new()));
    }

    let p = sources.len();
    let q = sinks.len();
    let mut supply: Vec<f64> = sources.iter().map(|&(_, a)| a).collect();
    let mut demand: Vec<f64> = sinks.iter().map(|&(_, b)| b).collect();
    let mut flow = vec![vec![0.0; q]; p];
    let cost =
        |u: usize, v: usize| space.distance(sources[u].0, sinks[v].0);

    // Node ids: 0..p sources, p..p+q sinks.
    let total_nodes = p + q;
    let max_rounds = 4 * total_nodes * total_nodes + 16;
    let mut rounds = 0;
    loop {
        let active_supply: f64 = supply.iter().sum();
        if active_supply <= BALANCE_TOL {
            break;
        }
        rounds += 1;
        if rounds > max_rounds {
            return Err(FreeError::SolverStall);
        }

        // Bellman-Ford over the residual network from all active sources.
        let mut dist = vec![f64::INFINITY; total_nodes];
        let mut parent: Vec<Option<usize>> = vec![None; total_nodes];
        for (u, &s) in supply.iter().enumerate() {
            if s > BALANCE_TOL {
                dist[u] = 0.0;
            }
        }
        for _ in 0..total_nodes {
            let mut changed = false;
            for u in 0..p {
                if dist[u].is_finite() {
                    for v in 0..q {
                        let cand = dist[u] + cost(u, v);
                        if cand < dist[p + v] - 1e-15 {
                            dist[p + v] = cand;
                            parent[p + v] = Some(u);
                            changed = true;
                        }
                    }
                }
            }
            for v in 0..q {
                if dist[p + v].is_finite() {
                    for u in 0..p {
                        if flow[u][v] > 0.0 {
                            let cand = dist[p + v] - cost(u, v);
                            if cand < dist[u] - 1e-15 {
                                dist[u] = cand;
                                parent[u] = Some(p + v);
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut best_sink: Option<usize> = None;
        for (v, &d) in demand.iter().enumerate() {
            if d > BALANCE_TOL && dist[p + v].is_finite() {
                let better = match best_sink {
                    None => true,
                    Some(cur) => dist[p + v] < dist[p + cur],
                };
                if better {
                    best_sink = Some(v);
                }
            }
        }
        let Some(sink) = best_sink else {
            break; // residual dust only
        };

        // Walk the path back to a source, collecting the bottleneck.
        let mut bottleneck = demand[sink];
        let mut node = p + sink;
        loop {
            let Some(prev) = parent[node] else { break };
            if node >= p {
                // arrived via forward arc prev -> node
            } else {
                // arrived via residual arc (sink prev) -> (source node)
                bottleneck = bottleneck.min(flow[node][prev - p]);
            }
            node = prev;
        }
        bottleneck = bottleneck.min(supply[node]);
        if bottleneck <= 0.0 {
            return Err(FreeError::SolverStall);
        }

        let mut node = p + sink;
        loop {
            let Some(prev) = parent[node] else { break };
            if node >= p {
                flow[prev][node - p] += bottleneck;
            } else {
                flow[node][prev - p] -= bottleneck;
            }
            node = prev;
        }
        supply[node] -= bottleneck;
        demand[sink] -= bottleneck;
    }

    let mut value = 0.0;
    let mut plan = Vec::new();
    for u in 0..p {
        for v in 0..q {
            if flow[u][v] > BALANCE_TOL {
                value += flow[u][v] * cost(u, v);
                plan.push((sources[u].0, sinks[v].0, flow[u][v]));
            }
        }
    }
    Ok((value, plan))
}

/// Transport norm by its dual program: the largest pairing of the molecule
/// against a scalar function that vanishes at the base point and has all
/// pairwise ratios at most one. Returns the value and an optimal function.
pub fn kr_norm_dual(
    space: &FiniteMetricSpace,
    molecule: &Molecule,
) -> Result<(f64, PointFunction), FreeError> {
    check_molecule(space, molecule)?;
    let n = space.n();
    if n == 1 {
        return Ok((0.0, PointFunction::scalar(space, vec![0.0])?));
    }

    // Variables: one value per non-base point.
    let mut var_of = vec![usize::MAX; n];
    let mut points = Vec::with_capacity(n - 1);
    for i in 0..n {
        if i != space.base() {
            var_of[i] = points.len();
            points.push(i);
        }
    }
    let nv = points.len();
    let objective: Vec<f64> = points.iter().map(|&i| molecule.weights()[i]).collect();

    let mut rows = Vec::with_capacity(n * (n - 1));
    let mut rhs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut row = vec![0.0; nv];
            if i != space.base() {
                row[var_of[i]] = 1.0;
            }
            if j != space.base() {
                row[var_of[j]] = -1.0;
            }
            rows.push(row.clone());
            rhs.push(space.distance(i, j));
            rows.push(row.iter().map(|c| -c).collect());
            rhs.push(space.distance(i, j));
        }
    }

    match lp::maximize(&objective, &rows, &rhs) {
        LpSolution::Optimal { value, point } => {
            let mut values = vec![0.0; n];
            for (k, &i) in points.iter().enumerate() {
                values[i] = point[k];
            }
            let optimizer = PointFunction::scalar(space, values)?;
            Ok((value, optimizer))
        }
        LpSolution::Unbounded => Err(FreeError::InternalLp("dual program unbounded")),
        LpSolution::Infeasible => Err(FreeError::InternalLp("dual program infeasible")),
    }
}

/// A base-preserving map between the points of two spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipMap {
    assignment: Vec<usize>,
    source_base: usize,
    target_base: usize,
    target_n: usize,
}

impl LipMap {
    pub fn new(
        source: &FiniteMetricSpace,
        target: &FiniteMetricSpace,
        assignment: Vec<usize>,
    ) -> Result<Self, FreeError> {
        if assignment.len() != source.n() {
            return Err(FreeError::AssignmentLengthMismatch {
                expected: source.n(),
                got: assignment.len(),
            });
        }
        for (index, &value) in assignment.iter().enumerate() {
            if value >= target.n() {
                return Err(FreeError::AssignmentOutOfRange {
                    index,
                    value,
                    target_n: target.n(),
                });
            }
        }
        if assignment[source.base()] != target.base() {
            return Err(FreeError::BaseNotPreserved {
                maps_to: assignment[source.base()],
            });
        }
        Ok(Self {
            assignment,
            source_base: source.base(),
            target_base: target.base(),
            target_n: target.n(),
        })
    }

    pub fn identity(space: &FiniteMetricSpace) -> Self {
        Self {
            assignment: (0..space.n()).collect(),
            source_base: space.base(),
            target_base: space.base(),
            target_n: space.n(),
        }
    }

    pub fn apply(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn source_n(&self) -> usize {
        self.assignment.len()
    }

    pub fn target_n(&self) -> usize {
        self.target_n
    }
}

/// The linear operator on molecules induced by a point map: point mass at
/// `i` goes to point mass at `map(i)`. Zero sums are preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOperator {
    matrix: Vec<Vec<f64>>, // target_n x source_n
}

pub fn lift_map(map: &LipMap) -> LiftedOperator {
    let mut matrix = vec![vec![0.0; map.source_n()]; map.target_n()];
    for (i, &image) in map.assignment.iter().enumerate() {
        matrix[image][i] = 1.0;
    }
    LiftedOperator { matrix }
}

impl LiftedOperator {
    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn apply(&self, molecule: &Molecule) -> Result<Molecule, FreeError> {
        let source_n = self.matrix.first().map_or(0, Vec::len);
        if molecule.len() != source_n {
            return Err(FreeError::WeightCountMismatch {
                expected: source_n,
                got: molecule.len(),
            });
        }
        let weights: Vec<f64> = self
            .matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(molecule.weights())
                    .map(|(m, w)| m * w)
                    .sum()
            })
            .collect();
        Molecule::new(weights)
    }

    /// Matrix product `self * other`, the lift of the composed point map.
    pub fn compose(&self, other: &LiftedOperator) -> LiftedOperator {
        let rows = self.matrix.len();
        let mid = other.matrix.len();
        let cols = other.matrix.first().map_or(0, Vec::len);
        let mut matrix = vec![vec![0.0; cols]; rows];
        for (i, out_row) in matrix.iter_mut().enumerate() {
            for k in 0..mid {
                let a = self.matrix[i][k];
                if a != 0.0 {
                    for (j, cell) in out_row.iter_mut().enumerate() {
                        *cell += a * other.matrix[k][j];
                    }
                }
            }
        }
        LiftedOperator { matrix }
    }
}

/// Pullback of a function on the target along a point map: `f . map`.
pub fn adjoint_compose(f: &PointFunction, map: &LipMap) -> Result<PointFunction, FreeError> {
    if f.n() != map.target_n() {
        return Err(FreeError::WeightCountMismatch {
            expected: map.target_n(),
            got: f.n(),
        });
    }
    let values: Vec<Vec<f64>> = map
        .assignment
        .iter()
        .map(|&image| f.values[image].clone())
        .collect();
    Ok(PointFunction {
        values,
        target: f.target,
    })
}

/// Two-sided distortion constants of a point map.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseConstants {
    /// Smallest ratio `d'(F(i), F(j)) / d(i, j)`; zero when the map collides
    /// two points.
    pub alpha_star: f64,
    /// Largest ratio; the Lipschitz constant of the map.
    pub beta_star: f64,
    pub min_pair: (usize, usize),
    pub max_pair: (usize, usize),
}

pub fn coarse_constants(
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
    map: &LipMap,
) -> Result<CoarseConstants, FreeError> {
    if map.source_n() != source.n() {
        return Err(FreeError::AssignmentLengthMismatch {
            expected: source.n(),
            got: map.source_n(),
        });
    }
    if source.n() < 2 {
        return Err(FreeError::SingletonSpace);
    }
    let mut alpha_star = f64::INFINITY;
    let mut beta_star = f64::NEG_INFINITY;
    let mut min_pair = (0, 1);
    let mut max_pair = (0, 1);
    for i in 0..source.n() {
        for j in (i + 1)..source.n() {
            let ratio = target.distance(map.apply(i), map.apply(j)) / source.distance(i, j);
            if ratio < alpha_star {
                alpha_star = ratio;
                min_pair = (i, j);
            }
            if ratio > beta_star {
                beta_star = ratio;
                max_pair = (i, j);
            }
        }
    }
    Ok(CoarseConstants {
        alpha_star,
        beta_star,
        min_pair,
        max_pair,
    })
}

/// For an injective map, produces a scalar function `f` on the target with
/// `f . map = g` exactly: `f` equals `g` on the image (transported through
/// the bijection) and is extended elsewhere by inf-convolution with the
/// tight Lipschitz constant measured on the image.
pub fn adjoint_preimage(
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
    g: &PointFunction,
    map: &LipMap,
) -> Result<PointFunction, FreeError> {
    if g.target.m != 1 {
        return Err(FreeError::ScalarFunctionRequired { got: g.target.m });
    }
    if g.n() != source.n() || map.source_n() != source.n() || map.target_n() != target.n() {
        return Err(FreeError::WeightCountMismatch {
            expected: source.n(),
            got: g.n(),
        });
    }
    let mut seen: Vec<Option<usize>> = vec![None; target.n()];
    for i in 0..source.n() {
        let image = map.apply(i);
        if let Some(first) = seen[image] {
            return Err(FreeError::NonInjectiveMap {
                first,
                second: i,
                image,
            });
        }
        seen[image] = Some(i);
    }

    // Tight constant of the transported samples, measured in the target
    // metric on the image.
    let mut tight = 0.0f64;
    for i in 0..source.n() {
        for j in (i + 1)..source.n() {
            let gap = (g.values[i][0] - g.values[j][0]).abs();
            let d = target.distance(map.apply(i), map.apply(j));
            tight = tight.max(gap / d);
        }
    }
    let samples: Vec<(usize, f64)> = (0..source.n())
        .map(|i| (map.apply(i), g.values[i][0]))
        .collect();
    Ok(mcshane_extend(target, &samples, tight)?)
}

/// Largest transport-norm dilation of a lifted operator over the point-pair
/// molecules; equals the Lipschitz constant of the underlying map.
pub fn lifted_operator_norm(
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
    map: &LipMap,
) -> Result<f64, FreeError> {
    if source.n() < 2 {
        return Err(FreeError::SingletonSpace);
    }
    let lifted = lift_map(map);
    let mut best = 0.0f64;
    for i in 0..source.n() {
        for j in (i + 1)..source.n() {
            let pair = Molecule::dirac_difference(source.n(), i, j)?;
            let (pushed, _) = kr_norm_primal(target, &lifted.apply(&pair)?)?;
            best = best.max(pushed / source.distance(i, j));
        }
    }
    Ok(best)
}

// Check that the optimizer returned by the dual program certifies its value:
// used by tests and the verification paths.
#[allow(dead_code)]
pub(crate) fn pairing(molecule: &Molecule, f: &PointFunction) -> f64 {
    molecule
        .weights()
        .iter()
        .zip(&f.values)
        .map(|(w, row)| w * row[0])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lip::lip_norm;
    use crate::metric::{dyadic_chain, random_space};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_molecule(n: usize, base: usize, seed: u64) -> Molecule {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, rng.gen_range(-1.0..=1.0)))
            .collect();
        Molecule::from_dirac_combination(n, base, &terms).unwrap()
    }

    #[test]
    fn molecule_must_balance() {
        assert!(matches!(
            Molecule::new(vec![1.0, 0.0]),
            Err(FreeError::UnbalancedMolecule { .. })
        ));
        let m = Molecule::from_dirac_combination(3, 0, &[(1, 1.0)]).unwrap();
        assert_eq!(m.weights(), &[-1.0, 1.0, 0.0]);
    }

    #[test]
    fn point_pair_norm_is_the_distance() {
        let space = dyadic_chain(4);
        for i in 0..space.n() {
            for j in 0..space.n() {
                if i == j {
                    continue;
                }
                let m = Molecule::dirac_difference(space.n(), i, j).unwrap();
                let (value, plan) = kr_norm_primal(&space, &m).unwrap();
                assert!((value - space.distance(i, j)).abs() < 1e-12);
                assert_eq!(plan.len(), 1);
            }
        }
    }

    #[test]
    fn zero_molecule_has_zero_norm() {
        let space = dyadic_chain(3);
        let m = Molecule::new(vec![0.0; space.n()]).unwrap();
        let (value, plan) = kr_norm_primal(&space, &m).unwrap();
        assert_eq!(value, 0.0);
        assert!(plan.is_empty());
    }

    #[test]
    fn two_sinks_route_to_the_base() {
        // points 0, 1/2, 1/4; masses at 1/4 and 1/2 both drain to the base
        let space = dyadic_chain(2);
        let m = Molecule::new(vec![-2.0, 1.0, 1.0]).unwrap();
        let (value, plan) = kr_norm_primal(&space, &m).unwrap();
        assert!((value - 0.75).abs() < 1e-12);
        assert_eq!(plan.len(), 2);
    }

    #[test]
    fn dual_matches_primal_on_seeded_spaces() {
        for seed in 0..10 {
            let space = random_space(6, 2000 + seed);
            let m = random_molecule(space.n(), space.base(), 3000 + seed);
            let (primal, _) = kr_norm_primal(&space, &m).unwrap();
            let (dual, optimizer) = kr_norm_dual(&space, &m).unwrap();
            assert!(
                (primal - dual).abs() <= 1e-8,
                "seed {seed}: primal {primal} vs dual {dual}"
            );
            // the optimizer certifies its value and is 1-Lipschitz
            assert!((pairing(&m, &optimizer) - dual).abs() < 1e-9);
            let (lip, _) = lip_norm(&space, &optimizer).unwrap();
            assert!(lip <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn dual_of_point_pair_is_tight() {
        let space = dyadic_chain(3);
        let m = Molecule::dirac_difference(space.n(), 2, 0).unwrap();
        let (value, optimizer) = kr_norm_dual(&space, &m).unwrap();
        assert!((value - space.distance(0, 2)).abs() < 1e-9);
        assert!((pairing(&m, &optimizer) - value).abs() < 1e-12);
    }

    #[test]
    fn lift_of_identity_is_identity() {
        let space = dyadic_chain(3);
        let lifted = lift_map(&LipMap::identity(&space));
        let m = random_molecule(space.n(), space.base(), 17);
        assert_eq!(lifted.apply(&m).unwrap(), m);
    }

    #[test]
    fn lift_of_collapse_kills_molecules() {
        let space = dyadic_chain(3);
        let collapse = LipMap::new(&space, &space, vec![0; space.n()]).unwrap();
        let lifted = lift_map(&collapse);
        let m = Molecule::dirac_difference(space.n(), 1, 3).unwrap();
        let pushed = lifted.apply(&m).unwrap();
        assert!(pushed.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn lift_respects_composition() {
        let a = dyadic_chain(3);
        let b = dyadic_chain(4);
        let c = dyadic_chain(2);
        let f = LipMap::new(&a, &b, vec![0, 2, 3, 4]).unwrap();
        let g = LipMap::new(&b, &c, vec![0, 1, 2, 2, 1]).unwrap();
        let composed_assignment: Vec<usize> = (0..a.n()).map(|i| g.apply(f.apply(i))).collect();
        let gf = LipMap::new(&a, &c, composed_assignment).unwrap();
        assert_eq!(lift_map(&g).compose(&lift_map(&f)), lift_map(&gf));
    }

    #[test]
    fn operator_norm_equals_lipschitz_constant() {
        let source = dyadic_chain(3).snowflake(0.5).unwrap();
        let target = dyadic_chain(3);
        let map = LipMap::identity(&source);
        let norm = lifted_operator_norm(&source, &target, &map).unwrap();
        let coarse = coarse_constants(&source, &target, &map).unwrap();
        assert!((norm - coarse.beta_star).abs() < 1e-9);
    }

    #[test]
    fn coarse_constants_of_identity() {
        let space = dyadic_chain(3);
        let c = coarse_constants(&space, &space, &LipMap::identity(&space)).unwrap();
        assert_eq!(c.alpha_star, 1.0);
        assert_eq!(c.beta_star, 1.0);
    }

    #[test]
    fn coarse_constants_detect_collisions() {
        let space = dyadic_chain(2);
        let map = LipMap::new(&space, &space, vec![0, 1, 1]).unwrap();
        let c = coarse_constants(&space, &space, &map).unwrap();
        assert_eq!(c.alpha_star, 0.0);
        assert_eq!(c.min_pair, (1, 2));
    }

    #[test]
    fn snowflake_identity_expansion_constants() {
        // identity from the snowflaked chain to the plain chain
        let chain = dyadic_chain(3);
        let source = chain.snowflake(0.5).unwrap();
        let map = LipMap::identity(&source);
        let c = coarse_constants(&source, &chain, &map).unwrap();
        // ratio d / d^{1/2} = d^{1/2}, minimized at the min gap
        let (gap, _) = chain.min_gap().unwrap();
        assert!((c.alpha_star - gap.sqrt()).abs() < 1e-12);
        let diameter = chain.distance(0, 1);
        assert!((c.beta_star - diameter.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_into_the_snowflake_expands_small_gaps() {
        // identity from the plain chain into its snowflake: the ratio
        // d^{1/2} / d = d^{-1/2} peaks at the min gap and bottoms out at
        // the diameter
        let chain = dyadic_chain(3);
        let target = chain.snowflake(0.5).unwrap();
        let map = LipMap::identity(&chain);
        let c = coarse_constants(&chain, &target, &map).unwrap();
        let (gap, gap_pair) = chain.min_gap().unwrap();
        assert!((c.beta_star - gap.sqrt() / gap).abs() < 1e-12);
        assert_eq!(c.max_pair, gap_pair);
        let diameter = chain.distance(0, 1);
        assert!((c.alpha_star - diameter.sqrt() / diameter).abs() < 1e-12);
        assert_eq!(c.min_pair, (0, 1));
    }

    #[test]
    fn adjoint_compose_identity_and_zero() {
        let space = dyadic_chain(3);
        let map = LipMap::identity(&space);
        let f = random_molecule(space.n(), space.base(), 5); // reuse as values
        let values: Vec<f64> = f.weights().iter().map(|w| w - f.weights()[0]).collect();
        let func = PointFunction::scalar(&space, values).unwrap();
        assert_eq!(adjoint_compose(&func, &map).unwrap(), func);

        let zero = PointFunction::zero(&space, crate::lip::TargetSpace::scalar());
        let pulled = adjoint_compose(&zero, &map).unwrap();
        assert_eq!(pulled, zero);
    }

    #[test]
    fn adjoint_preimage_round_trips() {
        let chain = dyadic_chain(3);
        let target = chain.clone();
        let source = chain.snowflake(0.5).unwrap();
        let map = LipMap::identity(&source);
        let coords: Vec<f64> = std::iter::once(0.0)
            .chain((1..=3).map(|k| 2f64.powi(-k)))
            .collect();
        let g = PointFunction::scalar(&source, coords).unwrap();
        let f = adjoint_preimage(&source, &target, &g, &map).unwrap();
        assert_eq!(adjoint_compose(&f, &map).unwrap(), g);
        // tight constant on the image
        let mut tight = 0.0f64;
        for i in 0..source.n() {
            for j in (i + 1)..source.n() {
                tight = tight
                    .max((g.values[i][0] - g.values[j][0]).abs() / target.distance(i, j));
            }
        }
        let (lip, _) = lip_norm(&target, &f).unwrap();
        assert!(lip <= tight + 1e-12);
    }

    #[test]
    fn adjoint_preimage_rejects_collisions() {
        let space = dyadic_chain(2);
        let map = LipMap::new(&space, &space, vec![0, 1, 1]).unwrap();
        // a function separating the collided points has no preimage
        let g = PointFunction::scalar(&space, vec![0.0, 0.25, 0.5]).unwrap();
        let err = adjoint_preimage(&space, &space, &g, &map).unwrap_err();
        assert_eq!(
            err,
            FreeError::NonInjectiveMap {
                first: 1,
                second: 2,
                image: 1
            }
        );
    }

    #[test]
    fn molecule_json_round_trip() {
        let m = Molecule::new(vec![0.5, -0.25, -0.25]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: Molecule = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_str::<Molecule>(r#"{"weights":[1.0,0.5]}"#).is_err());
    }

    #[test]
    fn transport_plans_serialize_as_triplets() {
        let space = dyadic_chain(2);
        let m = Molecule::new(vec![-2.0, 1.0, 1.0]).unwrap();
        let (_, plan) = kr_norm_primal(&space, &m).unwrap();
        let text = serde_json::to_string(&plan).unwrap();
        assert_eq!(text, "[[1,0,1.0],[2,0,1.0]]");
    }
}
