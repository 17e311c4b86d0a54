//! Escape certificates across a family of dyadic chains: base metric
//! `d^alpha`, gauge `d^beta` with `alpha < beta`, so the best pair ratio
//! `2^(-levels (beta - alpha))` shrinks as the chain deepens and the
//! certificates tighten.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::output::{csv_opt, line_chart, write_json, write_text, Formats};
use super::{derive_seed, ExperimentError};
use crate::lip::{sample_function, ClassParams, PointFunction, TargetSpace};
use crate::metric::{dyadic_chain, GaugePair};
use crate::porosity::{
    build_escape, sample_ball_exclusion, verify_certificate, CertificateDocument,
    ExclusionReport, PorosityError,
};

#[derive(Debug, Clone)]
pub struct SnowflakeConfig {
    pub alpha: f64,
    pub beta: f64,
    pub class_bound: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// Ball-exclusion samples per certificate.
    pub ball_samples: usize,
    /// Seeded class members per chain, in addition to the zero function.
    pub sampled_functions: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

/// Scientific parameters echoed into the report (no paths, so identical
/// configs give identical bytes regardless of output location).
#[derive(Debug, Clone, Serialize)]
struct SnowflakeParams {
    alpha: f64,
    beta: f64,
    s: f64,
    k_min: usize,
    k_max: usize,
    samples: usize,
    funcs: usize,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnowflakeRow {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_index: Option<usize>,
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
pub struct SnowflakeReport {
    pub experiment: String,
    #[serde(rename = "params")]
    params: SnowflakeParams,
    pub rows: Vec<SnowflakeRow>,
}

struct MemberOutput {
    rows: Vec<SnowflakeRow>,
    certificates: Vec<(String, CertificateDocument)>,
}

fn validate(cfg: &SnowflakeConfig) -> Result<(), ExperimentError> {
    let c = |msg: String| Err(ExperimentError::Config(msg));
    if !(cfg.alpha > 0.0 && cfg.alpha < cfg.beta && cfg.beta <= 1.0) {
        return c(format!(
            "need 0 < alpha < beta <= 1, got alpha={} beta={}",
            cfg.alpha, cfg.beta
        ));
    }
    if !(cfg.class_bound > 0.0) {
        return c(format!("class bound must be positive, got {}", cfg.class_bound));
    }
    if cfg.k_min < 1 || cfg.k_min > cfg.k_max || cfg.k_max > 32 {
        return c(format!(
            "need 1 <= k_min <= k_max <= 32, got {}..{}",
            cfg.k_min, cfg.k_max
        ));
    }
    if cfg.ball_samples < 1 || cfg.ball_samples > 1_000_000 {
        return c(format!("ball samples out of range: {}", cfg.ball_samples));
    }
    if cfg.sampled_functions > 64 {
        return c(format!("too many sampled functions: {}", cfg.sampled_functions));
    }
    Ok(())
}

fn run_member(cfg: &SnowflakeConfig, k: usize) -> Result<MemberOutput, ExperimentError> {
    let chain = dyadic_chain(k);
    let space = chain.snowflake(cfg.alpha)?;
    let gauge = GaugePair::metric_power(&chain, cfg.beta)?;
    let (r_star, pair) = space.gauge_ratio_inf(&gauge)?;
    let threshold = 1.0 / (16.0 * cfg.class_bound * cfg.class_bound);

    if !(r_star < threshold) {
        return Ok(MemberOutput {
            rows: vec![SnowflakeRow {
                k,
                f_index: None,
                status: "skipped_ratio_too_large".into(),
                r_star,
                pair,
                threshold: Some(threshold),
                radius: None,
                lower_bound: None,
                exclusion: None,
                certificate_path: None,
            }],
            certificates: Vec::new(),
        });
    }

    let params = ClassParams::new(gauge.clone(), cfg.class_bound)?;
    let mut members: Vec<PointFunction> =
        vec![PointFunction::zero(&space, TargetSpace::scalar())];
    for j in 0..cfg.sampled_functions {
        members.push(sample_function(
            &chain,
            TargetSpace::scalar(),
            cfg.beta,
            cfg.class_bound,
            derive_seed(cfg.seed, k as u64, j as u64),
        )?);
    }

    let mut rows = Vec::new();
    let mut certificates = Vec::new();
    for (f_index, f) in members.iter().enumerate() {
        let cert = match build_escape(&space, f, &params, pair) {
            Ok(cert) => cert,
            Err(PorosityError::RatioTooLarge { ratio, threshold }) => {
                rows.push(SnowflakeRow {
                    k,
                    f_index: Some(f_index),
                    status: "skipped_ratio_too_large".into(),
                    r_star: ratio,
                    pair,
                    threshold: Some(threshold),
                    radius: None,
                    lower_bound: None,
                    exclusion: None,
                    certificate_path: None,
                });
                continue;
            }
            Err(other) => return Err(other.into()),
        };
        let report = verify_certificate(&space, &gauge, &cert);
        if !report.all_passed() {
            return Err(ExperimentError::Invariant(format!(
                "certificate for k={k} f={f_index} failed verification: {report:?}"
            )));
        }
        let exclusion = sample_ball_exclusion(
            &space,
            &gauge,
            &cert,
            cfg.ball_samples,
            derive_seed(cfg.seed, 0x5a5a ^ k as u64, f_index as u64),
        );
        if !exclusion.all_excluded {
            return Err(ExperimentError::Invariant(format!(
                "verified certificate for k={k} f={f_index} failed empirical exclusion: \
                 {}/{} samples",
                exclusion.excluded, exclusion.count
            )));
        }
        let path = format!("certs/cert_k{k}_f{f_index}.json");
        rows.push(SnowflakeRow {
            k,
            f_index: Some(f_index),
            status: "certified".into(),
            r_star,
            pair,
            threshold: Some(threshold),
            radius: Some(cert.radius),
            lower_bound: Some(cert.lower_bound),
            exclusion: Some(exclusion),
            certificate_path: Some(path.clone()),
        });
        certificates.push((
            path,
            CertificateDocument {
                space: space.clone(),
                gauge: gauge.clone(),
                certificate: cert,
            },
        ));
    }
    Ok(MemberOutput { rows, certificates })
}

pub fn run_snowflake(cfg: &SnowflakeConfig) -> Result<SnowflakeReport, ExperimentError> {
    validate(cfg)?;
    std::fs::create_dir_all(cfg.out_dir.join("certs"))?;

    let outputs: Vec<MemberOutput> = (cfg.k_min..=cfg.k_max)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| run_member(cfg, k))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut certificates = Vec::new();
    for output in outputs {
        rows.extend(output.rows);
        certificates.extend(output.certificates);
    }
    let report = SnowflakeReport {
        experiment: "snowflake".into(),
        params: SnowflakeParams {
            alpha: cfg.alpha,
            beta: cfg.beta,
            s: cfg.class_bound,
            k_min: cfg.k_min,
            k_max: cfg.k_max,
            samples: cfg.ball_samples,
            funcs: cfg.sampled_functions,
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

fn to_csv(report: &SnowflakeReport) -> String {
    let mut out = String::from(
        "k,f_index,status,r_star,pair_a,pair_b,threshold,radius,lower_bound,samples,excluded,min_pair_ratio\n",
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
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.k,
            csv_opt(&row.f_index),
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

fn to_svg(report: &SnowflakeReport) -> String {
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|row| row.f_index == Some(0))
        .filter_map(|row| row.radius.map(|radius| (row.k as f64, radius)))
        .collect();
    line_chart(
        "excluded-ball radius per chain depth",
        "chain levels",
        "radius",
        &points,
    )
}
