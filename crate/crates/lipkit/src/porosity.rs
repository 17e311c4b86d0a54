//! Escape certificates: finite, re-checkable records proving that a whole
//! Lipschitz-norm ball around a perturbed function misses the bounded-ratio
//! class `{ f : gauge seminorm of f <= bound }`.
//!
//! Given a class member `f` and a pair whose gauge-to-distance ratio `r` is
//! small, the engine perturbs `f` by `sqrt(r)` times a unit-gap witness
//! function. Every function within `(1/(2K)) * ||f_m - f||_L` of the
//! perturbed `f_m` then has pair ratio at least `1/(2 sqrt(r)) - bound`,
//! which exceeds the bound once `r < 1/(16 bound^2)`. All quantities are
//! stored, so a certificate can be re-verified from its fields alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lip::{gauge_seminorm, lip_norm, ClassParams, LipError, PointFunction, TargetSpace};
use crate::metric::{FiniteMetricSpace, GaugePair, MetricError};

/// Tolerance for certificate-invariant checks.
pub const CERT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PorosityError {
    #[error("pair indices must differ, got ({index}, {index})")]
    DegeneratePair { index: usize },
    #[error("pair index {index} out of range for {n} points")]
    PairOutOfRange { index: usize, n: usize },
    #[error("witness direction must be a unit vector, norm is {norm}")]
    NonUnitDirection { norm: f64 },
    #[error("witness direction has {got} coordinates, target dimension is {expected}")]
    DirectionDimMismatch { expected: usize, got: usize },
    #[error("function is outside the class: seminorm {seminorm} > bound {bound}")]
    NotInClass { seminorm: f64, bound: f64 },
    #[error("pair ratio {ratio} is not below the escape threshold {threshold}")]
    RatioTooLarge { ratio: f64, threshold: f64 },
    #[error("construction invariant {check} failed with residual {residual}")]
    InvariantViolation {
        check: &'static str,
        residual: f64,
    },
    #[error(transparent)]
    Lip(#[from] LipError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A bounded-norm function realizing the full distance of a pair as a value
/// gap. Vanishes at the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct PorosityWitness {
    pub function: PointFunction,
    /// Upper bound on the witness Lipschitz norm (the constant `K`).
    pub lip_bound: f64,
    pub pair: (usize, usize),
}

/// First coordinate basis vector of the target; a unit vector for every
/// supported coordinate norm.
pub fn default_direction(target: &TargetSpace) -> Vec<f64> {
    let mut e = vec![0.0; target.m];
    if !e.is_empty() {
        e[0] = 1.0;
    }
    e
}

/// The distance-to-a-point witness for a pair `(a, b)`:
/// `p(x) = (d(x, b) - d(base, b)) * direction`. It is 1-Lipschitz by the
/// triangle inequality, realizes `||p(a) - p(b)|| = d(a, b)`, and vanishes
/// at the base point by the subtracted constant.
pub fn metric_witness(
    space: &FiniteMetricSpace,
    pair: (usize, usize),
    target: &TargetSpace,
    direction: &[f64],
) -> Result<PorosityWitness, PorosityError> {
    let (a, b) = pair;
    if a == b {
        return Err(PorosityError::DegeneratePair { index: a });
    }
    for &index in &[a, b] {
        if index >= space.n() {
            return Err(PorosityError::PairOutOfRange {
                index,
                n: space.n(),
            });
        }
    }
    if direction.len() != target.m {
        return Err(PorosityError::DirectionDimMismatch {
            expected: target.m,
            got: direction.len(),
        });
    }
    let norm = target.norm.eval(direction);
    if (norm - 1.0).abs() > CERT_TOL {
        return Err(PorosityError::NonUnitDirection { norm });
    }

    let offset = space.distance(space.base(), b);
    let values: Vec<Vec<f64>> = (0..space.n())
        .map(|x| {
            let scale = space.distance(x, b) - offset;
            direction.iter().map(|e| scale * e).collect()
        })
        .collect();
    let function = PointFunction::new(space, *target, values)?;

    let witness = PorosityWitness {
        function,
        lip_bound: 1.0,
        pair,
    };
    check_witness(space, &witness)?;
    Ok(witness)
}

fn check_witness(
    space: &FiniteMetricSpace,
    witness: &PorosityWitness,
) -> Result<(), PorosityError> {
    let (lip, _) = lip_norm(space, &witness.function)?;
    if lip > witness.lip_bound + CERT_TOL {
        return Err(PorosityError::InvariantViolation {
            check: "witness norm bound",
            residual: lip - witness.lip_bound,
        });
    }
    let gap = witness.function.diff_norm(witness.pair.0, witness.pair.1);
    let want = space.distance(witness.pair.0, witness.pair.1);
    if (gap - want).abs() > CERT_TOL {
        return Err(PorosityError::InvariantViolation {
            check: "witness value gap",
            residual: (gap - want).abs(),
        });
    }
    Ok(())
}

/// The full escape record: class member, pair ratio, witness, perturbed
/// function, excluded-ball radius, and the guaranteed ratio lower bound
/// inside the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CertificateRecord", from = "CertificateRecord")]
pub struct EscapeCertificate {
    pub pair: (usize, usize),
    /// Gauge-to-distance ratio of the pair.
    pub ratio: f64,
    /// Class bound the certificate escapes from.
    pub class_bound: f64,
    pub witness: PorosityWitness,
    /// The class member being escaped from.
    pub center: PointFunction,
    /// `center + sqrt(ratio) * witness`.
    pub perturbed: PointFunction,
    /// Excluded-ball radius `(1/(2K)) * ||perturbed - center||_L`.
    pub radius: f64,
    /// Guaranteed pair ratio inside the ball: `1/(2 sqrt(ratio)) - bound`.
    pub lower_bound: f64,
}

#[derive(Serialize, Deserialize, Clone)]
struct CertificateRecord {
    pair: (usize, usize),
    r: f64,
    s: f64,
    #[serde(rename = "K")]
    k: f64,
    radius: f64,
    lower_bound: f64,
    f: PointFunction,
    p: PointFunction,
    f_m: PointFunction,
}

impl From<EscapeCertificate> for CertificateRecord {
    fn from(c: EscapeCertificate) -> Self {
        CertificateRecord {
            pair: c.pair,
            r: c.ratio,
            s: c.class_bound,
            k: c.witness.lip_bound,
            radius: c.radius,
            lower_bound: c.lower_bound,
            f: c.center,
            p: c.witness.function,
            f_m: c.perturbed,
        }
    }
}

impl From<CertificateRecord> for EscapeCertificate {
    fn from(r: CertificateRecord) -> Self {
        EscapeCertificate {
            pair: r.pair,
            ratio: r.r,
            class_bound: r.s,
            witness: PorosityWitness {
                function: r.p,
                lip_bound: r.k,
                pair: r.pair,
            },
            center: r.f,
            perturbed: r.f_m,
            radius: r.radius,
            lower_bound: r.lower_bound,
        }
    }
}

/// A certificate bundled with the space and gauge it refers to; the
/// self-contained on-disk form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub space: FiniteMetricSpace,
    pub gauge: GaugePair,
    pub certificate: EscapeCertificate,
}

/// Builds the escape certificate for a class member at a pair.
///
/// Fails with [`PorosityError::RatioTooLarge`] when the pair ratio is not
/// strictly below `1/(16 bound^2)`; the boundary case is rejected.
pub fn build_escape(
    space: &FiniteMetricSpace,
    f: &PointFunction,
    params: &ClassParams,
    pair: (usize, usize),
) -> Result<EscapeCertificate, PorosityError> {
    let (a, b) = pair;
    if a == b {
        return Err(PorosityError::DegeneratePair { index: a });
    }
    for &index in &[a, b] {
        if index >= space.n() {
            return Err(PorosityError::PairOutOfRange {
                index,
                n: space.n(),
            });
        }
    }
    let (seminorm, _) = gauge_seminorm(f, &params.gauge)?;
    if seminorm > params.bound {
        return Err(PorosityError::NotInClass {
            seminorm,
            bound: params.bound,
        });
    }

    let ratio = params.gauge.value(a, b) / space.distance(a, b);
    let threshold = 1.0 / (16.0 * params.bound * params.bound);
    if !(ratio < threshold) {
        return Err(PorosityError::RatioTooLarge { ratio, threshold });
    }

    let direction = default_direction(&f.target);
    let witness = metric_witness(space, pair, &f.target, &direction)?;
    let sqrt_ratio = ratio.sqrt();
    let perturbed = f.add_scaled(sqrt_ratio, &witness.function);
    let (step_norm, _) = lip_norm(space, &perturbed.diff(f))?;
    let radius = step_norm / (2.0 * witness.lip_bound);
    let lower_bound = 1.0 / (2.0 * sqrt_ratio) - params.bound;

    // Construction-time invariants, re-derived from the stored fields.
    let (witness_lip, _) = lip_norm(space, &witness.function)?;
    let radius_closed_form = sqrt_ratio * witness_lip / (2.0 * witness.lip_bound);
    if (radius - radius_closed_form).abs() > CERT_TOL {
        return Err(PorosityError::InvariantViolation {
            check: "radius closed form",
            residual: (radius - radius_closed_form).abs(),
        });
    }
    if !(lower_bound > params.bound) {
        return Err(PorosityError::InvariantViolation {
            check: "ratio lower bound exceeds class bound",
            residual: params.bound - lower_bound,
        });
    }

    Ok(EscapeCertificate {
        pair,
        ratio,
        class_bound: params.bound,
        witness,
        center: f.clone(),
        perturbed,
        radius,
        lower_bound,
    })
}

/// One verified inequality group: `pass` plus the smallest margin observed
/// across the group's conditions (negative means violated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub pass: bool,
    pub margin: f64,
}

impl CheckEntry {
    fn and(self, pass: bool, margin: f64) -> Self {
        CheckEntry {
            pass: self.pass && pass,
            margin: self.margin.min(margin),
        }
    }

    fn start() -> Self {
        CheckEntry {
            pass: true,
            margin: f64::INFINITY,
        }
    }

    fn failed() -> Self {
        CheckEntry {
            pass: false,
            margin: -1.0,
        }
    }
}

/// Outcome of re-verifying a certificate from its stored fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    /// Shapes, indices, and scalar fields are coherent.
    pub structure_ok: bool,
    /// Witness norm bound, value gap, and vanishing at the base point.
    pub witness_invariants: CheckEntry,
    /// Stored ratio matches the pair and sits strictly below the threshold.
    pub ratio_threshold: CheckEntry,
    /// Radius equals `(1/(2K)) * ||perturbed - center||_L`.
    pub radius_formula: CheckEntry,
    /// The inequality chain that excludes the whole ball.
    pub analytic_chain: CheckEntry,
    /// The center really is a class member.
    pub class_membership: CheckEntry,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.structure_ok
            && self.witness_invariants.pass
            && self.ratio_threshold.pass
            && self.radius_formula.pass
            && self.analytic_chain.pass
            && self.class_membership.pass
    }

    pub fn entries(&self) -> [(&'static str, CheckEntry); 5] {
        [
            ("witness_invariants", self.witness_invariants),
            ("ratio_threshold", self.ratio_threshold),
            ("radius_formula", self.radius_formula),
            ("analytic_chain", self.analytic_chain),
            ("class_membership", self.class_membership),
        ]
    }

    fn structural_failure() -> Self {
        CheckReport {
            structure_ok: false,
            witness_invariants: CheckEntry::failed(),
            ratio_threshold: CheckEntry::failed(),
            radius_formula: CheckEntry::failed(),
            analytic_chain: CheckEntry::failed(),
            class_membership: CheckEntry::failed(),
        }
    }
}

fn structure_ok(
    space: &FiniteMetricSpace,
    gauge: &GaugePair,
    cert: &EscapeCertificate,
) -> bool {
    let n = space.n();
    let (a, b) = cert.pair;
    let shapes = cert.center.n() == n
        && cert.perturbed.n() == n
        && cert.witness.function.n() == n
        && gauge.n() == n
        && cert.center.target == cert.perturbed.target
        && cert.center.target == cert.witness.function.target
        && cert.center.target.m >= 1;
    let scalars = cert.ratio.is_finite()
        && cert.class_bound.is_finite()
        && cert.class_bound > 0.0
        && cert.witness.lip_bound.is_finite()
        && cert.witness.lip_bound > 0.0
        && cert.radius.is_finite()
        && cert.lower_bound.is_finite();
    shapes && scalars && a != b && a < n && b < n && cert.witness.pair == cert.pair && n >= 2
}

/// Re-derives every certificate guarantee from the stored fields.
///
/// The ball exclusion (check 4) is established analytically: the pair gap of
/// the perturbed function, the radius-times-inverse-ratio bound, and the
/// strict threshold inequality are each verified numerically, and together
/// they imply that every function within `radius` of the perturbed center
/// keeps a pair ratio above the class bound.
pub fn verify_certificate(
    space: &FiniteMetricSpace,
    gauge: &GaugePair,
    cert: &EscapeCertificate,
) -> CheckReport {
    if !structure_ok(space, gauge, cert) {
        return CheckReport::structural_failure();
    }
    let (a, b) = cert.pair;
    let distance = space.distance(a, b);
    let gauge_value = gauge.value(a, b);
    let bound = cert.class_bound;
    let k = cert.witness.lip_bound;

    // (1) witness invariants
    let mut witness = CheckEntry::start();
    let (witness_lip, _) = lip_norm(space, &cert.witness.function).expect("shape checked");
    witness = witness.and(
        witness_lip <= k + CERT_TOL,
        k + CERT_TOL - witness_lip,
    );
    let gap = cert.witness.function.diff_norm(a, b);
    witness = witness.and(
        (gap - distance).abs() <= CERT_TOL,
        CERT_TOL - (gap - distance).abs(),
    );
    let base_row_max = cert.witness.function.values[space.base()]
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    witness = witness.and(base_row_max <= CERT_TOL, CERT_TOL - base_row_max);

    // (2) stored ratio is the pair ratio and clears the strict threshold
    let mut ratio_check = CheckEntry::start();
    let actual_ratio = gauge_value / distance;
    ratio_check = ratio_check.and(
        (cert.ratio - actual_ratio).abs() <= CERT_TOL,
        CERT_TOL - (cert.ratio - actual_ratio).abs(),
    );
    let threshold = 1.0 / (16.0 * bound * bound);
    ratio_check = ratio_check.and(cert.ratio < threshold, threshold - cert.ratio);
    ratio_check = ratio_check.and(cert.ratio > 0.0, cert.ratio);

    // (3) radius formula
    let (step_norm, _) = lip_norm(space, &cert.perturbed.diff(&cert.center)).expect("shape");
    let radius_residual = (cert.radius - step_norm / (2.0 * k)).abs();
    let radius_check = CheckEntry::start().and(
        radius_residual <= CERT_TOL,
        CERT_TOL - radius_residual,
    );

    // (4) analytic exclusion chain
    let sqrt_ratio = cert.ratio.sqrt();
    let mut chain = CheckEntry::start();
    // perturbed pair gap: at least 1/sqrt(r) - bound
    let perturbed_ratio = cert.perturbed.diff_norm(a, b) / gauge_value;
    let step_one = perturbed_ratio - (1.0 / sqrt_ratio - bound);
    chain = chain.and(step_one >= -CERT_TOL, step_one + CERT_TOL);
    // ball dilation: radius * d / gauge at most 1/(2 sqrt(r))
    let dilation = cert.radius * distance / gauge_value;
    let step_two = 1.0 / (2.0 * sqrt_ratio) - dilation;
    chain = chain.and(step_two >= -CERT_TOL, step_two + CERT_TOL);
    // stored lower bound matches and strictly exceeds the class bound
    let lb_residual = (cert.lower_bound - (1.0 / (2.0 * sqrt_ratio) - bound)).abs();
    chain = chain.and(lb_residual <= CERT_TOL, CERT_TOL - lb_residual);
    chain = chain.and(
        cert.lower_bound > bound,
        cert.lower_bound - bound,
    );

    // (5) the center is a class member
    let (seminorm, _) = gauge_seminorm(&cert.center, gauge).expect("shape checked");
    let membership = CheckEntry::start().and(seminorm <= bound, bound - seminorm);

    CheckReport {
        structure_ok: true,
        witness_invariants: witness,
        ratio_threshold: ratio_check,
        radius_formula: radius_check,
        analytic_chain: chain,
        class_membership: membership,
    }
}

/// Result of empirically probing the excluded ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub count: usize,
    /// Samples whose pair ratio strictly exceeds the class bound.
    pub excluded: usize,
    pub all_excluded: bool,
    /// Smallest pair ratio seen across the samples.
    pub min_pair_ratio: f64,
    /// The certificate's analytic lower bound, for comparison.
    pub lower_bound: f64,
}

/// Draws `count` functions uniformly-in-radius from the certified ball and
/// reports how many have pair ratio strictly above the class bound.
///
/// Each sample is `perturbed + h` where `h` is a random direction rescaled
/// to a uniform fraction of the radius. Deterministic in the seed.
pub fn sample_ball_exclusion(
    space: &FiniteMetricSpace,
    gauge: &GaugePair,
    cert: &EscapeCertificate,
    count: usize,
    seed: u64,
) -> ExclusionReport {
    assert!(count >= 1, "need at least one sample");
    let (a, b) = cert.pair;
    let gauge_value = gauge.value(a, b);
    let target = cert.center.target;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut excluded = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..count {
        let mut values: Vec<Vec<f64>> = (0..space.n())
            .map(|_| (0..target.m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        values[space.base()] = vec![0.0; target.m];
        let direction = PointFunction { values, target };
        let fraction: f64 = rng.gen_range(0.0..=1.0);
        let (dir_norm, _) = lip_norm(space, &direction).expect("sample shapes match");
        let sample = if dir_norm > 1e-300 {
            cert.perturbed
                .add_scaled(fraction * cert.radius / dir_norm, &direction)
        } else {
            cert.perturbed.clone()
        };
        let ratio = sample.diff_norm(a, b) / gauge_value;
        if ratio > cert.class_bound {
            excluded += 1;
        }
        if ratio < min_ratio {
            min_ratio = ratio;
        }
    }
    ExclusionReport {
        count,
        excluded,
        all_excluded: excluded == count,
        min_pair_ratio: min_ratio,
        lower_bound: cert.lower_bound,
    }
}

/// One member of an escape family: a space, a class, and a member function.
#[derive(Debug, Clone)]
pub struct EscapeFamilyMember {
    pub space: FiniteMetricSpace,
    pub f: PointFunction,
    pub params: ClassParams,
}

/// Per-member outcome of [`escape_sequence`].
#[derive(Debug, Clone)]
pub enum SequenceOutcome {
    Certified(Box<EscapeCertificate>),
    /// The best pair ratio was not below the member's threshold.
    Skipped { ratio: f64, threshold: f64 },
}

/// Builds one certificate per family member at the pair attaining the
/// member's smallest gauge-to-distance ratio. Members whose best ratio is
/// too large are skipped and recorded; other failures abort.
pub fn escape_sequence(
    members: &[EscapeFamilyMember],
) -> Result<Vec<SequenceOutcome>, PorosityError> {
    members
        .iter()
        .map(|member| {
            let (_, pair) = member.space.gauge_ratio_inf(&member.params.gauge)?;
            match build_escape(&member.space, &member.f, &member.params, pair) {
                Ok(cert) => Ok(SequenceOutcome::Certified(Box::new(cert))),
                Err(PorosityError::RatioTooLarge { ratio, threshold }) => {
                    Ok(SequenceOutcome::Skipped { ratio, threshold })
                }
                Err(other) => Err(other),
            }
        })
        .collect()
}
