//! Drivers behind the command-line subcommands. Each returns its output
//! files in memory; writing them is left to the caller.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Geometry, RunConfig};
use crate::construct::{
    build_product_surface, check_immersion_rank, verify_construction, verify_semihelix, ParametricBase, RankSweep,
    SemiHelixSpec, VerificationReport,
};
use crate::curves::{fit_circle, theta_linearity, trace_integral_curve, CircleFit, ClosedFormArc, LineFit};
use crate::direction_fit::{fit_direction, sample_cloud, DirectionFit, OrientedPointCloud};
use crate::error::{Error, Result};
use crate::euclid::VecN;
use crate::export::{csv_table, obj_mesh, to_json};
use crate::reconstruct::{reconstruct_local, ReconstructOptions, ReconstructionReport};
use crate::surface::{ParamImmersion, SampleGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutput {
    pub files: Vec<OutputFile>,
    pub notices: Vec<String>,
    /// Verdict of commands that certify something.
    pub pass: Option<bool>,
}

impl CommandOutput {
    fn push(&mut self, name: &str, contents: String) {
        self.files.push(OutputFile {
            name: name.to_string(),
            contents,
        });
    }
}

/// The sampled chart, plus the construction data for `base` configs.
pub struct Chart {
    pub surface: ParamImmersion<f64>,
    pub spec: Option<SemiHelixSpec<f64>>,
}

pub fn chart(cfg: &RunConfig) -> Result<Chart> {
    match cfg.geometry {
        Geometry::Base(preset) => {
            let base = ParametricBase::new(preset.immersion(cfg.n - 1)?, &cfg.d, cfg.flip_eta)?;
            let r = cfg
                .r
                .ok_or_else(|| Error::InvalidInput("sweep radius missing".into()))?;
            let spec = SemiHelixSpec::new(Arc::new(base), r, cfg.window, cfg.d.clone())?;
            let surface = build_product_surface(&spec, cfg.jacobian)?;
            Ok(Chart {
                surface,
                spec: Some(spec),
            })
        }
        Geometry::Surface(preset) => Ok(Chart {
            surface: preset.immersion(cfg.n)?.with_mode(cfg.jacobian),
            spec: None,
        }),
    }
}

fn grid(cfg: &RunConfig, m: &ParamImmersion<f64>) -> Result<SampleGrid> {
    if cfg.grid.len() != m.domain_dim() {
        return Err(Error::InvalidInput(format!(
            "grid has {} axes, chart has {}",
            cfg.grid.len(),
            m.domain_dim()
        )));
    }
    SampleGrid::new(cfg.grid.clone())
}

fn json<S: Serialize>(value: &S) -> Result<String> {
    to_json(value).map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

fn start_point(cfg: &RunConfig, m: &ParamImmersion<f64>) -> Vec<f64> {
    cfg.start.clone().unwrap_or_else(|| m.domain().center())
}

/// Samples the chart: CSV of chart coordinates and points, OBJ for `n = 3`.
pub fn cmd_build(cfg: &RunConfig) -> Result<CommandOutput> {
    let Chart { surface: m, spec } = chart(cfg)?;
    let grid = grid(cfg, &m)?;
    let nodes = grid.nodes(m.domain());
    let points = nodes
        .par_iter()
        .map(|u| m.evaluate(u))
        .collect::<Result<Vec<VecN<f64>>>>()?;

    let k = m.domain_dim();
    let mut header: Vec<String> = (1..=k).map(|i| format!("u{i}")).collect();
    if spec.is_some() {
        header[k - 1] = "theta".into();
    }
    header.extend((1..=cfg.n).map(|i| format!("x{i}")));
    let rows: Vec<Vec<f64>> = nodes
        .iter()
        .zip(&points)
        .map(|(u, p)| u.iter().chain(p.as_slice()).copied().collect())
        .collect();

    let mut out = CommandOutput::default();
    out.push("surface.csv", csv_table(&header, &rows));
    if cfg.n == 3 && k == 2 {
        let xyz: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
        out.push("surface.obj", obj_mesh(&xyz, [grid.counts()[0], grid.counts()[1]]));
    } else {
        out.notices
            .push(format!("OBJ export skipped: no standard mesh format for n = {}", cfg.n));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct VerifyDocument<'a> {
    command: &'static str,
    geometry: String,
    grid: &'a [usize],
    report: VerificationReport<f64>,
    rank: RankSweep<f64>,
    pass: bool,
}

/// Certifies the window on the grid and sweeps the immersion rank.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput> {
    let Chart { surface: m, spec } = chart(cfg)?;
    let grid = grid(cfg, &m)?;
    let report = match &spec {
        Some(spec) => verify_construction(spec, &grid, cfg.jacobian)?,
        None => verify_semihelix(&m, &cfg.d, &cfg.window, &grid)?,
    };
    let rank = check_immersion_rank(&m, &grid)?;
    let pass = report.pass && !rank.below_gate;
    let doc = VerifyDocument {
        command: "verify",
        geometry: m.name().to_string(),
        grid: &cfg.grid,
        report,
        rank,
        pass,
    };
    let mut out = CommandOutput {
        pass: Some(pass),
        ..Default::default()
    };
    out.push("verify.json", json(&doc)?);
    Ok(out)
}

#[derive(Debug, Serialize)]
struct TraceDocument {
    command: &'static str,
    start: Vec<f64>,
    span: f64,
    step: f64,
    nodes: usize,
    domain_exit: bool,
    max_speed_error: f64,
    circle_fit: Option<CircleFit<f64>>,
    circle_fit_error: Option<String>,
    theta_linearity: Option<LineFit<f64>>,
    expected_radius: Option<f64>,
    closed_form_max_deviation: Option<f64>,
}

/// Traces the `T_θ` flow line from `start` and fits its circle.
pub fn cmd_trace(cfg: &RunConfig) -> Result<CommandOutput> {
    let Chart { surface: m, spec } = chart(cfg)?;
    let u0 = start_point(cfg, &m);
    let curve = trace_integral_curve(&m, &cfg.d, &u0, cfg.span, cfg.step)?;

    let mut header = vec!["t".to_string()];
    header.extend((1..=cfg.n).map(|i| format!("x{i}")));
    header.push("theta".into());
    let rows: Vec<Vec<f64>> = curve
        .t
        .iter()
        .zip(&curve.points)
        .zip(&curve.angles)
        .map(|((&t, p), &th)| {
            std::iter::once(t)
                .chain(p.as_slice().iter().copied())
                .chain([th])
                .collect()
        })
        .collect();

    let (circle_fit, circle_fit_error) = match fit_circle(&curve.points) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let closed_form_max_deviation = match &spec {
        Some(spec) => {
            let k = m.domain_dim();
            let b = spec.sample(&u0[..k - 1])?;
            let arc = ClosedFormArc::from_construction(&b, u0[k - 1], spec.r, &spec.d)?;
            Some(
                curve
                    .t
                    .iter()
                    .zip(&curve.points)
                    .map(|(&t, p)| p.distance(&arc.eval(t)))
                    .fold(0.0, f64::max),
            )
        }
        None => None,
    };
    let doc = TraceDocument {
        command: "trace",
        start: u0,
        span: cfg.span,
        step: cfg.step,
        nodes: curve.len(),
        domain_exit: curve.domain_exit,
        max_speed_error: curve.max_speed_error(),
        circle_fit,
        circle_fit_error,
        theta_linearity: theta_linearity(&curve).ok(),
        expected_radius: spec.as_ref().map(|s| s.r),
        closed_form_max_deviation,
    };
    let mut out = CommandOutput::default();
    out.push("curve.csv", csv_table(&header, &rows));
    out.push("circle_fit.json", json(&doc)?);
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ReconstructDocument {
    command: &'static str,
    point: Vec<f64>,
    expected_radius: Option<f64>,
    radius_error: Option<f64>,
    report: Option<ReconstructionReport<f64>>,
    error: Option<String>,
    pass: bool,
}

/// Local reconstruction around `start`; for constructed charts the chart
/// is also rebuilt from the recovered base and the radius is checked.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<CommandOutput> {
    let Chart { surface: m, spec } = chart(cfg)?;
    let u_p = start_point(cfg, &m);
    let mut opts = ReconstructOptions::default();
    if let Some(spec) = &spec {
        opts.rebuild = Some((spec.window, grid(cfg, &m)?));
    }
    let expected_radius = spec.as_ref().map(|s| s.r);
    let doc = match reconstruct_local(&m, &cfg.d, &u_p, &opts) {
        Ok(report) => {
            let radius_error = expected_radius.map(|r| (report.r_hat - r).abs());
            let radius_ok = match (radius_error, expected_radius) {
                (Some(e), Some(r)) => e <= 1e-4 * r,
                _ => true,
            };
            ReconstructDocument {
                command: "reconstruct",
                point: u_p,
                expected_radius,
                radius_error,
                pass: report.pass && radius_ok,
                report: Some(report),
                error: None,
            }
        }
        Err(e) => ReconstructDocument {
            command: "reconstruct",
            point: u_p,
            expected_radius,
            radius_error: None,
            report: None,
            error: Some(e.to_string()),
            pass: false,
        },
    };
    let mut out = CommandOutput {
        pass: Some(doc.pass),
        ..Default::default()
    };
    out.push("reconstruction.json", json(&doc)?);
    Ok(out)
}

/// Reads `x1..xn, n1..nn` rows; a non-numeric first row is a header.
pub fn parse_cloud_csv(text: &str) -> Result<OrientedPointCloud<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("cloud CSV: {e}")))?;
        let values: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::InvalidInput(format!("cloud CSV row {}: {e}", i + 1))),
        };
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(Error::InvalidInput(format!(
                "cloud CSV row {} needs 2n columns, got {}",
                i + 1,
                values.len()
            )));
        }
        let (p, nrm) = values.split_at(values.len() / 2);
        points.push(VecN::from_slice(p)?);
        normals.push(VecN::from_slice(nrm)?);
    }
    OrientedPointCloud::new(points, normals)
}

#[derive(Debug, Serialize)]
struct DirectionDocument {
    command: &'static str,
    source: String,
    samples: usize,
    fit: DirectionFit<f64>,
    /// Angle between the fitted axis and the configured `d`, as lines.
    angle_to_config_d: f64,
}

/// Fits the axis to a cloud read from CSV text, or to a seeded sample of
/// the configured chart when `cloud_csv` is `None`.
pub fn cmd_fit_direction(cfg: &RunConfig, cloud_csv: Option<&str>) -> Result<CommandOutput> {
    let (cloud, source) = match cloud_csv {
        Some(text) => (
            parse_cloud_csv(text)?,
            cfg.cloud
                .as_ref()
                .map_or_else(|| "csv".to_string(), |p| p.display().to_string()),
        ),
        None => {
            let Chart { surface: m, .. } = chart(cfg)?;
            (
                sample_cloud(&m, &cfg.d, cfg.cloud_samples, cfg.seed)?,
                format!("{} (seed {})", m.name(), cfg.seed),
            )
        }
    };
    if cloud.dim() != cfg.n {
        return Err(Error::InvalidInput(format!(
            "cloud lives in R^{}, config says n = {}",
            cloud.dim(),
            cfg.n
        )));
    }
    let fit = fit_direction(&cloud)?;
    let angle = fit.direction.dot(cfg.d.as_vec()).abs().min(1.0).acos();
    let doc = DirectionDocument {
        command: "fit-direction",
        source,
        samples: cloud.len(),
        fit,
        angle_to_config_d: angle,
    };
    let mut out = CommandOutput::default();
    if doc.fit.ambiguous {
        out.notices
            .push("two orthogonal axes fit equally well; the first is reported".into());
    }
    out.push("direction.json", json(&doc)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const FIXTURE: &str = "n = 3\nbase = circle(1)\nr = 1\nepsilon = 0.5236\ngrid = 16,9\n";

    fn file<'a>(out: &'a CommandOutput, name: &str) -> &'a str {
        &out.files.iter().find(|f| f.name == name).expect(name).contents
    }

    #[test]
    fn build_writes_csv_and_obj() {
        let out = cmd_build(&parse_config(FIXTURE).unwrap()).unwrap();
        let csv = file(&out, "surface.csv");
        assert_eq!(csv.lines().count(), 1 + 16 * 9);
        assert_eq!(csv.lines().next().unwrap(), "u1,theta,x1,x2,x3");
        let obj = file(&out, "surface.obj");
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 144);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 15 * 8);
    }

    #[test]
    fn build_in_four_dimensions_skips_obj() {
        let cfg = parse_config("n=4\nbase=sphere(1)\nr=0.5\nepsilon=0.3\ngrid=4\n").unwrap();
        let out = cmd_build(&cfg).unwrap();
        assert_eq!(out.files.len(), 1);
        assert_eq!(file(&out, "surface.csv").lines().count(), 1 + 64);
        assert_eq!(out.notices.len(), 1);
    }

    #[test]
    fn verify_verdicts() {
        assert_eq!(cmd_verify(&parse_config(FIXTURE).unwrap()).unwrap().pass, Some(true));
        let plane = parse_config("n=3\nsurface=plane\nepsilon=0.5\ngrid=5\n").unwrap();
        assert_eq!(cmd_verify(&plane).unwrap().pass, Some(false));
        let cyl = parse_config("n=3\nsurface=cylinder(1)\nepsilon=0\ngrid=32,8\n").unwrap();
        assert_eq!(cmd_verify(&cyl).unwrap().pass, Some(true));
    }

    #[test]
    fn trace_reports_circle() {
        let cfg = parse_config(&format!("{FIXTURE}start=0,0\nspan=0.4\nstep=0.001\n")).unwrap();
        let out = cmd_trace(&cfg).unwrap();
        let doc: serde_json::Value = serde_json::from_str(file(&out, "circle_fit.json")).unwrap();
        assert!((doc["circle_fit"]["radius"].as_f64().unwrap() - 1.0).abs() < 1e-6);
        assert!((doc["theta_linearity"]["slope"].as_f64().unwrap() - 1.0).abs() < 1e-6);
        assert!(doc["closed_form_max_deviation"].as_f64().unwrap() < 1e-8);
        assert_eq!(file(&out, "curve.csv").lines().next().unwrap(), "t,x1,x2,x3,theta");

        let cyl = parse_config("n=3\nsurface=cylinder(1)\nepsilon=0\nstart=1,0\n").unwrap();
        let doc: serde_json::Value = serde_json::from_str(file(&cmd_trace(&cyl).unwrap(), "circle_fit.json")).unwrap();
        assert!(doc["circle_fit"].is_null());
        assert!(doc["circle_fit_error"].as_str().unwrap().contains("collinear"));
    }

    #[test]
    fn reconstruct_fixture_passes() {
        let cfg = parse_config(&format!("{FIXTURE}start=1,0.2\n")).unwrap();
        let out = cmd_reconstruct(&cfg).unwrap();
        assert_eq!(out.pass, Some(true), "{}", file(&out, "reconstruction.json"));
        let doc: serde_json::Value = serde_json::from_str(file(&out, "reconstruction.json")).unwrap();
        for key in ["r_hat", "theta_p", "q"] {
            assert!(!doc["report"][key].is_null(), "{key}");
        }
    }

    #[test]
    fn reconstruct_failure_is_reported() {
        let cfg = parse_config("n=3\nsurface=plane\nepsilon=0.5\nstart=0,0\n").unwrap();
        let out = cmd_reconstruct(&cfg).unwrap();
        assert_eq!(out.pass, Some(false));
        assert!(file(&out, "reconstruction.json").contains("\"error\""));
    }

    #[test]
    fn fit_direction_from_samples_and_csv() {
        let cfg = parse_config("n=3\nsurface=cylinder(1)\nepsilon=0\nseed=5\ncloud_samples=100\n").unwrap();
        let out = cmd_fit_direction(&cfg, None).unwrap();
        let doc: serde_json::Value = serde_json::from_str(file(&out, "direction.json")).unwrap();
        assert!(doc["fit"]["spread"].as_f64().unwrap() < 1e-9);

        let mut csv = String::from("x1,x2,x3,n1,n2,n3\n");
        for i in 0..12 {
            let a = i as f64 * 0.5;
            csv.push_str(&format!(
                "{},{},{},{},{},0\n",
                a.cos(),
                a.sin(),
                i as f64 * 0.1,
                a.cos(),
                a.sin()
            ));
        }
        let out = cmd_fit_direction(&cfg, Some(&csv)).unwrap();
        let doc: serde_json::Value = serde_json::from_str(file(&out, "direction.json")).unwrap();
        assert!(doc["angle_to_config_d"].as_f64().unwrap() < 1e-6);
        assert!(parse_cloud_csv("1,2,3\n").is_err());
    }
}
