//! Barrier-cone geometry of polyhedral gauges, plus the escape construction
//! in the dual: for an unbounded sublevel set, dual vectors with a bounded
//! gauge pairing form a thin class, certified by excluded balls around
//! perturbed functionals on a witness line through the recession direction.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use super::output::{scatter_two_class, write_json, write_text, Formats};
use super::{derive_seed, ExperimentError};
use crate::convex::{
    barrier_membership, boundedness_check, min_gauge_on_sphere, polar_membership, random_gauge,
    row_space_projection, row_span_contains, PolyhedralGauge, PolyhedralNorm,
};
use crate::lip::{ClassParams, PointFunction, TargetSpace};
use crate::metric::{FiniteMetricSpace, GaugePair};
use crate::porosity::{
    build_escape, sample_ball_exclusion, verify_certificate, CertificateDocument,
    ExclusionReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierPreset {
    Strip,
    Box,
    Random,
}

impl FromStr for BarrierPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strip" => Ok(BarrierPreset::Strip),
            "box" => Ok(BarrierPreset::Box),
            "random" => Ok(BarrierPreset::Random),
            other => Err(format!("unknown preset {other:?} (strip, box, random)")),
        }
    }
}

impl BarrierPreset {
    fn name(&self) -> &'static str {
        match self {
            BarrierPreset::Strip => "strip",
            BarrierPreset::Box => "box",
            BarrierPreset::Random => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierConfig {
    pub dim: usize,
    pub preset: BarrierPreset,
    pub class_bound: f64,
    pub ball_samples: usize,
    /// Grid points per axis for dim <= 2.
    pub grid: usize,
    /// Seeded dual samples for dim >= 3.
    pub dual_samples: usize,
    /// Points on the recession witness line used for escape certificates.
    pub line_points: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

#[derive(Debug, Clone, Serialize)]
struct BarrierParams {
    preset: String,
    dim: usize,
    s: f64,
    samples: usize,
    grid: usize,
    dual_samples: usize,
    line_points: usize,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipRow {
    pub dual: Vec<f64>,
    pub barrier: bool,
    pub span: bool,
    pub polar: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeRow {
    pub f_index: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<ExclusionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_path: Option<String>,
    /// Minimum of the gauge over the unit sphere, reported when the
    /// sublevel set is bounded and no escape exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sphere_minimum: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub experiment: String,
    params: BarrierParams,
    pub gauge: PolyhedralGauge,
    pub bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recession_witness: Option<Vec<f64>>,
    pub membership: Vec<MembershipRow>,
    pub barrier_fraction: f64,
    pub escapes: Vec<EscapeRow>,
}

fn validate(cfg: &BarrierConfig) -> Result<(), ExperimentError> {
    let c = |msg: String| Err(ExperimentError::Config(msg));
    if cfg.dim < 1 || cfg.dim > 6 {
        return c(format!("dimension must be in 1..=6, got {}", cfg.dim));
    }
    if cfg.preset == BarrierPreset::Strip && cfg.dim != 2 {
        return c("the strip preset is two-dimensional".into());
    }
    if !(cfg.class_bound > 0.0) {
        return c(format!("class bound must be positive, got {}", cfg.class_bound));
    }
    if cfg.ball_samples < 1 || cfg.ball_samples > 1_000_000 {
        return c(format!("ball samples out of range: {}", cfg.ball_samples));
    }
    if cfg.grid < 3 || cfg.grid > 101 || cfg.grid % 2 == 0 {
        return c(format!("grid must be odd and in 3..=101, got {}", cfg.grid));
    }
    if cfg.dual_samples < 1 || cfg.dual_samples > 100_000 {
        return c(format!("dual samples out of range: {}", cfg.dual_samples));
    }
    if cfg.line_points < 2 || cfg.line_points > 24 {
        return c(format!(
            "line points must be in 2..=24, got {}",
            cfg.line_points
        ));
    }
    Ok(())
}

fn preset_gauge(cfg: &BarrierConfig) -> PolyhedralGauge {
    match cfg.preset {
        BarrierPreset::Strip => PolyhedralGauge::strip(),
        BarrierPreset::Box => PolyhedralGauge::unit_box(cfg.dim),
        BarrierPreset::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xB0, 0));
            let rank = rng.gen_range(1..=cfg.dim);
            let extra = rng.gen_range(0..=2);
            random_gauge(cfg.dim, rank, extra, derive_seed(cfg.seed, 0xB1, 0))
        }
    }
}

/// Dual vectors to tabulate: an exact grid for low dimensions, otherwise a
/// seeded mix of in-span projections and (for degenerate gauges) vectors
/// pushed off the span along the recession direction.
fn membership_duals(
    cfg: &BarrierConfig,
    gauge: &PolyhedralGauge,
    witness: Option<&Vec<f64>>,
) -> Result<Vec<Vec<f64>>, ExperimentError> {
    if cfg.dim <= 2 {
        let half = (cfg.grid / 2) as i64;
        let step = 3.0 / (cfg.grid - 1) as f64;
        let axis: Vec<f64> = (-half..=half).map(|i| i as f64 * step).collect();
        let mut duals = Vec::new();
        if cfg.dim == 1 {
            for &x in &axis {
                duals.push(vec![x]);
            }
        } else {
            for &x in &axis {
                for &y in &axis {
                    duals.push(vec![x, y]);
                }
            }
        }
        return Ok(duals);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xD0, 0));
    let mut duals = Vec::with_capacity(cfg.dual_samples);
    for index in 0..cfg.dual_samples {
        let raw: Vec<f64> = (0..cfg.dim).map(|_| rng.gen_range(-1.5..=1.5)).collect();
        let dual = if index % 2 == 0 {
            row_space_projection(gauge, &raw).map_err(|e| {
                ExperimentError::Invariant(format!("projection failed: {e}"))
            })?
        } else if let Some(z) = witness {
            let projected = row_space_projection(gauge, &raw)
                .map_err(|e| ExperimentError::Invariant(format!("projection failed: {e}")))?;
            let push = rng.gen_range(0.3..=1.0);
            projected
                .iter()
                .zip(z)
                .map(|(p, zi)| p + push * zi)
                .collect()
        } else {
            raw
        };
        duals.push(dual);
    }
    Ok(duals)
}

/// Points `k * z + (1 + 2^-k) * delta * w` on the recession line, plus the
/// origin as base: gauge values along the line shrink geometrically while
/// distances grow linearly, so pair ratios fall well below any threshold.
fn witness_line_space(
    gauge: &PolyhedralGauge,
    recession: &[f64],
    class_bound: f64,
    line_points: usize,
) -> Result<(FiniteMetricSpace, GaugePair, Vec<Vec<f64>>), ExperimentError> {
    let first_row = gauge
        .rows()
        .first()
        .ok_or_else(|| ExperimentError::Invariant("gauge has no rows".into()))?;
    let gain = gauge
        .eval(first_row)
        .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
    if gain <= 0.0 {
        return Err(ExperimentError::Invariant(
            "first gauge row evaluates to zero".into(),
        ));
    }
    let delta = 1.0 / (32.0 * class_bound * class_bound);
    let lateral: Vec<f64> = first_row.iter().map(|c| c * delta / gain).collect();

    let mut points: Vec<Vec<f64>> = vec![vec![0.0; gauge.dim()]];
    for k in 1..=line_points {
        let stretch = 1.0 + 2f64.powi(-(k as i32));
        let point: Vec<f64> = recession
            .iter()
            .zip(&lateral)
            .map(|(z, w)| k as f64 * z + stretch * w)
            .collect();
        points.push(point);
    }

    let count = points.len();
    let mut dist = vec![vec![0.0; count]; count];
    let mut gauge_values = vec![vec![0.0; count]; count];
    for i in 0..count {
        for j in 0..count {
            if i == j {
                continue;
            }
            let diff: Vec<f64> = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a - b)
                .collect();
            dist[i][j] = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            gauge_values[i][j] = gauge
                .eval(&diff)
                .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
        }
    }
    let space = FiniteMetricSpace::new(dist, 0)?;
    let pair_gauge = GaugePair::raw(gauge_values)?;
    Ok((space, pair_gauge, points))
}

fn escape_rows(
    cfg: &BarrierConfig,
    gauge: &PolyhedralGauge,
    bounded: bool,
    witness: Option<&Vec<f64>>,
) -> Result<(Vec<EscapeRow>, Vec<(String, CertificateDocument)>), ExperimentError> {
    if bounded {
        return Ok((
            vec![EscapeRow {
                f_index: 0,
                status: "bounded_no_escape".into(),
                r_star: None,
                pair: None,
                radius: None,
                lower_bound: None,
                exclusion: None,
                certificate_path: None,
                sphere_minimum: Some(min_gauge_on_sphere(gauge, PolyhedralNorm::Linf)),
            }],
            Vec::new(),
        ));
    }
    let recession = witness.expect("unbounded gauge carries a recession witness");
    let (space, pair_gauge, points) =
        witness_line_space(gauge, recession, cfg.class_bound, cfg.line_points)?;
    let params = ClassParams::new(pair_gauge.clone(), cfg.class_bound)?;

    // Class members: the zero functional and a scaled first-row functional,
    // whose pairing is dominated by the gauge by construction.
    let first_row = &gauge.rows()[0];
    let linear_values: Vec<f64> = points
        .iter()
        .map(|p| {
            0.9 * cfg.class_bound * p.iter().zip(first_row).map(|(x, v)| x * v).sum::<f64>()
        })
        .collect();
    let members = vec![
        PointFunction::zero(&space, TargetSpace::scalar()),
        PointFunction::scalar(&space, linear_values)?,
    ];

    let (r_star, pair) = space.gauge_ratio_inf(&pair_gauge)?;
    let mut rows = Vec::new();
    let mut certificates = Vec::new();
    for (f_index, f) in members.iter().enumerate() {
        let cert = build_escape(&space, f, &params, pair)?;
        let report = verify_certificate(&space, &pair_gauge, &cert);
        if !report.all_passed() {
            return Err(ExperimentError::Invariant(format!(
                "dual escape certificate {f_index} failed verification: {report:?}"
            )));
        }
        let exclusion = sample_ball_exclusion(
            &space,
            &pair_gauge,
            &cert,
            cfg.ball_samples,
            derive_seed(cfg.seed, 0xE5, f_index as u64),
        );
        if !exclusion.all_excluded {
            return Err(ExperimentError::Invariant(format!(
                "verified dual certificate {f_index} failed empirical exclusion: {}/{} samples",
                exclusion.excluded, exclusion.count
            )));
        }
        let path = format!("certs/cert_f{f_index}.json");
        rows.push(EscapeRow {
            f_index,
            status: "certified".into(),
            r_star: Some(r_star),
            pair: Some(pair),
            radius: Some(cert.radius),
            lower_bound: Some(cert.lower_bound),
            exclusion: Some(exclusion),
            certificate_path: Some(path.clone()),
            sphere_minimum: None,
        });
        certificates.push((
            path,
            CertificateDocument {
                space: space.clone(),
                gauge: pair_gauge.clone(),
                certificate: cert,
            },
        ));
    }
    Ok((rows, certificates))
}

pub fn run_barrier(cfg: &BarrierConfig) -> Result<BarrierReport, ExperimentError> {
    validate(cfg)?;
    std::fs::create_dir_all(cfg.out_dir.join("certs"))?;

    let gauge = preset_gauge(cfg);
    let boundedness = boundedness_check(&gauge);
    let duals = membership_duals(cfg, &gauge, boundedness.recession_witness.as_ref())?;

    let mut membership = Vec::with_capacity(duals.len());
    for dual in duals {
        let barrier = barrier_membership(&gauge, &dual)
            .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
        let span = row_span_contains(&gauge, &dual)
            .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
        let polar = polar_membership(&gauge, &dual)
            .map_err(|e| ExperimentError::Invariant(e.to_string()))?;
        if barrier != span {
            return Err(ExperimentError::Invariant(format!(
                "support-program and row-span tests disagree at {dual:?}"
            )));
        }
        if polar && !barrier {
            return Err(ExperimentError::Invariant(format!(
                "polar member outside the barrier cone at {dual:?}"
            )));
        }
        membership.push(MembershipRow {
            dual,
            barrier,
            span,
            polar,
        });
    }
    let barrier_fraction =
        membership.iter().filter(|row| row.barrier).count() as f64 / membership.len() as f64;

    let (escapes, certificates) = escape_rows(
        cfg,
        &gauge,
        boundedness.bounded,
        boundedness.recession_witness.as_ref(),
    )?;

    let report = BarrierReport {
        experiment: "barrier".into(),
        params: BarrierParams {
            preset: cfg.preset.name().into(),
            dim: cfg.dim,
            s: cfg.class_bound,
            samples: cfg.ball_samples,
            grid: cfg.grid,
            dual_samples: cfg.dual_samples,
            line_points: cfg.line_points,
            seed: cfg.seed,
        },
        gauge,
        bounded: boundedness.bounded,
        recession_witness: boundedness.recession_witness,
        membership,
        barrier_fraction,
        escapes,
    };

    for (path, doc) in &certificates {
        write_json(&cfg.out_dir.join(path), doc)?;
    }
    if cfg.formats.json {
        write_json(&cfg.out_dir.join("report.json"), &report)?;
    }
    if cfg.formats.csv {
        write_text(&cfg.out_dir.join("membership.csv"), &membership_csv(&report))?;
        write_text(&cfg.out_dir.join("escapes.csv"), &escapes_csv(&report))?;
    }
    if cfg.formats.svg && cfg.dim == 2 {
        write_text(&cfg.out_dir.join("report.svg"), &to_svg(&report))?;
    }
    Ok(report)
}

fn membership_csv(report: &BarrierReport) -> String {
    let mut out = String::from("dual,barrier,span,polar\n");
    for row in &report.membership {
        let coords: Vec<String> = row.dual.iter().map(f64::to_string).collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            coords.join(";"),
            row.barrier,
            row.span,
            row.polar
        ));
    }
    out
}

fn escapes_csv(report: &BarrierReport) -> String {
    let mut out = String::from(
        "f_index,status,r_star,radius,lower_bound,samples,excluded,min_pair_ratio,sphere_minimum\n",
    );
    for row in &report.escapes {
        let (samples, excluded, min_ratio) = match &row.exclusion {
            Some(e) => (
                e.count.to_string(),
                e.excluded.to_string(),
                e.min_pair_ratio.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.f_index,
            row.status,
            opt(&row.r_star),
            opt(&row.radius),
            opt(&row.lower_bound),
            samples,
            excluded,
            min_ratio,
            opt(&row.sphere_minimum),
        ));
    }
    out
}

fn to_svg(report: &BarrierReport) -> String {
    let inside: Vec<(f64, f64)> = report
        .membership
        .iter()
        .filter(|r| r.barrier)
        .map(|r| (r.dual[0], r.dual[1]))
        .collect();
    let outside: Vec<(f64, f64)> = report
        .membership
        .iter()
        .filter(|r| !r.barrier)
        .map(|r| (r.dual[0], r.dual[1]))
        .collect();
    scatter_two_class(
        "barrier-cone membership over the dual grid",
        "x*_1",
        "x*_2",
        ("barrier", &inside),
        ("outside", &outside),
    )
}
