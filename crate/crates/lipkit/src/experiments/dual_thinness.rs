//! Escape strength of the sup-norm gauge against the 1-norm metric on a
//! finite witness set in `R^n` (the origin, the signed basis vectors, and
//! the all-ones vector). The all-ones pair drives the best ratio down to
//! `1/n`, so the certified ratio lower bound grows like `sqrt(n)/2`.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::output::{csv_opt, line_chart, write_json, write_text, Formats};
use super::{derive_seed, ExperimentError};
use crate::lip::{ClassParams, PointFunction, TargetSpace};
use crate::metric::{FiniteMetricSpace, GaugePair};
use crate::porosity::{
    build_escape, sample_ball_exclusion, verify_certificate, CertificateDocument,
    ExclusionReport, PorosityError,
};

#[derive(Debug, Clone)]
pub struct DualThinnessConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub class_bound: f64,
    pub ball_samples: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

#[derive(Debug, Clone, Serialize)]
struct ThinnessParams {
    n_min: usize,
    n_max: usize,
    s: f64,
    samples: usize,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThinnessRow {
    pub n: usize,
    pub status: String,
    pub r_star: f64,
    pub pair: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<ExclusionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_path: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualThinnessReport {
    pub experiment: String,
    params: ThinnessParams,
    pub rows: Vec<ThinnessRow>,
}

/// Witness points: the origin (base), `+e_i`, `-e_i`, and the all-ones
/// vector, with the 1-norm as the metric and the sup-norm as the gauge.
pub(crate) fn thinness_space(n: usize) -> (FiniteMetricSpace, GaugePair) {
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        points.push(e);
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = -1.0;
        points.push(e);
    }
    points.push(vec![1.0; n]);

    let count = points.len();
    let mut one_norm = vec![vec![0.0; count]; count];
    let mut sup_norm = vec![vec![0.0; count]; count];
    for i in 0..count {
        for j in 0..count {
            if i == j {
                continue;
            }
            let mut l1 = 0.0;
            let mut linf = 0.0f64;
            for c in 0..n {
                let diff = (points[i][c] - points[j][c]).abs();
                l1 += diff;
                linf = linf.max(diff);
            }
            one_norm[i][j] = l1;
            sup_norm[i][j] = linf;
        }
    }
    let space = FiniteMetricSpace::new(one_norm, 0).expect("1-norm distances form a metric");
    let gauge_space =
        FiniteMetricSpace::new(sup_norm, 0).expect("sup-norm distances form a metric");
    (space, GaugePair::second_metric(&gauge_space))
}

fn validate(cfg: &DualThinnessConfig) -> Result<(), ExperimentError> {
    let c = |msg: String| Err(ExperimentError::Config(msg));
    if cfg.n_min < 2 || cfg.n_min > cfg.n_max || cfg.n_max > 64 {
        return c(format!(
            "need 2 <= n_min <= n_max <= 64, got {}..{}",
            cfg.n_min, cfg.n_max
        ));
    }
    if !(cfg.class_bound > 0.0) {
        return c(format!("class bound must be positive, got {}", cfg.class_bound));
    }
    if cfg.ball_samples < 1 || cfg.ball_samples > 1_000_000 {
        return c(format!("ball samples out of range: {}", cfg.ball_samples));
    }
    Ok(())
}

fn run_member(
    cfg: &DualThinnessConfig,
    n: usize,
) -> Result<(ThinnessRow, Option<(String, CertificateDocument)>), ExperimentError> {
    let (space, gauge) = thinness_space(n);
    let (r_star, pair) = space.gauge_ratio_inf(&gauge)?;
    let threshold = 1.0 / (16.0 * cfg.class_bound * cfg.class_bound);
    let f = PointFunction::zero(&space, TargetSpace::scalar());
    let params = ClassParams::new(gauge.clone(), cfg.class_bound)?;

    match build_escape(&space, &f, &params, pair) {
        Ok(cert) => {
            let report = verify_certificate(&space, &gauge, &cert);
            if !report.all_passed() {
                return Err(ExperimentError::Invariant(format!(
                    "certificate for n={n} failed verification: {report:?}"
                )));
            }
            let exclusion = sample_ball_exclusion(
                &space,
                &gauge,
                &cert,
                cfg.ball_samples,
                derive_seed(cfg.seed, n as u64, 0),
            );
            if !exclusion.all_excluded {
                return Err(ExperimentError::Invariant(format!(
                    "verified certificate for n={n} failed empirical exclusion: {}/{} samples",
                    exclusion.excluded, exclusion.count
                )));
            }
            let path = format!("certs/cert_n{n}.json");
            let row = ThinnessRow {
                n,
                status: "certified".into(),
                r_star,
                pair,
                threshold: Some(threshold),
                radius: Some(cert.radius),
                lower_bound: Some(cert.lower_bound),
                exclusion: Some(exclusion),
                certificate_path: Some(path.clone()),
            };
            let doc = CertificateDocument {
                space,
                gauge,
                certificate: cert,
            };
            Ok((row, Some((path, doc))))
        }
        Err(PorosityError::RatioTooLarge { ratio, threshold }) => Ok((
            ThinnessRow {
                n,
                status: "skipped_ratio_too_large".into(),
                r_star: ratio,
                pair,
                threshold: Some(threshold),
                radius: None,
                lower_bound: None,
                exclusion: None,
                certificate_path: None,
            },
            None,
        )),
        Err(other) => Err(other.into()),
    }
}

pub fn run_dual_thinness(cfg: &DualThinnessConfig) -> Result<DualThinnessReport, ExperimentError> {
    validate(cfg)?;
    std::fs::create_dir_all(cfg.out_dir.join("certs"))?;

    let outputs: Vec<(ThinnessRow, Option<(String, CertificateDocument)>)> = (cfg.n_min
        ..=cfg.n_max)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| run_member(cfg, n))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut certificates = Vec::new();
    for (row, cert) in outputs {
        rows.push(row);
        if let Some(pair) = cert {
            certificates.push(pair);
        }
    }
    let report = DualThinnessReport {
        experiment: "dual-thinness".into(),
        params: ThinnessParams {
            n_min: cfg.n_min,
            n_max: cfg.n_max,
            s: cfg.class_bound,
            samples: cfg.ball_samples,
            seed: cfg.seed,
        },
        rows,
    };

    for (path, doc) in &certificates {
        write_json(&cfg.out_dir.join(path), doc)?;
    }
    if cfg.formats.json {
        write_json(&cfg.out_dir.join("report.json"), &report)?;
    }
    if cfg.formats.csv {
        write_text(&cfg.out_dir.join("report.csv"), &to_csv(&report))?;
    }
    if cfg.formats.svg {
        write_text(&cfg.out_dir.join("report.svg"), &to_svg(&report))?;
    }
    Ok(report)
}

fn to_csv(report: &DualThinnessReport) -> String {
    let mut out = String::from(
        "n,status,r_star,pair_a,pair_b,threshold,radius,lower_bound,samples,excluded,min_pair_ratio\n",
    );
    for row in &report.rows {
        let (samples, excluded, min_ratio) = match &row.exclusion {
            Some(e) => (
                e.count.to_string(),
                e.excluded.to_string(),
                e.min_pair_ratio.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.n,
            row.status,
            row.r_star,
            row.pair.0,
            row.pair.1,
            csv_opt(&row.threshold),
            csv_opt(&row.radius),
            csv_opt(&row.lower_bound),
            samples,
            excluded,
            min_ratio,
        ));
    }
    out
}

fn to_svg(report: &DualThinnessReport) -> String {
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|row| row.lower_bound.map(|lb| (row.n as f64, lb)))
        .collect();
    line_chart(
        "guaranteed pair-ratio lower bound per dimension",
        "dimension n",
        "lower bound",
        &points,
    )
}
