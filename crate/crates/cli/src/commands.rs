//! Subcommand drivers. Each returns the JSON report as text.

use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use gaussgeo_core::cluster::{
    gmm_quantize, kcenter_gonzalez, kmedioid, miniball, miniball_embedded, Distance, Geodesic, MetricSpace,
};
use gaussgeo_core::fisherrao::{
    calvo_oller_lower_bound, fr_distance_approx_with, fr_length_approx, ApproxConfig, FrGeodesic, Midpoint,
};
use gaussgeo_core::gaussian::{exponential_geodesic, jeffreys, kl_divergence, mixture_geodesic};
use gaussgeo_core::hilbert::{hilbert_distance_mvn, hilbert_geodesic_mvn, HilbertMethod};
use gaussgeo_core::Mvn;
use serde_json::{json, Value};

use crate::args::*;
use crate::dataset::Dataset;
use crate::output::{format_f64, mvn_record, report, to_json};
use crate::{CliError, CliResult};

fn name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Runs one command; the returned string is the newline-terminated JSON report.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let start = Instant::now();
    let (command, parameters, outputs, warnings) = match &cli.command {
        Command::Distance(a) => distance(a)?,
        Command::Geodesic(a) => geodesic(a)?,
        Command::Cluster(a) => cluster(a)?,
        Command::Quantize(a) => quantize(a)?,
        Command::Miniball(a) => miniball_cmd(a)?,
    };
    let seconds = cli.timing.then(|| start.elapsed().as_secs_f64());
    Ok(to_json(&report(command, parameters, outputs, warnings, seconds)))
}

type Parts = (&'static str, Value, Value, Vec<String>);

fn pair(input: &Path, i: usize, j: usize) -> CliResult<(Mvn, Mvn)> {
    let mvns = Dataset::load(input)?.into_mvns()?;
    let n = mvns.len();
    if i >= n || j >= n {
        return Err(CliError::Input(format!("indices ({i}, {j}) out of range for {n} normals")));
    }
    Ok((mvns[i].clone(), mvns[j].clone()))
}

fn distance(a: &DistanceArgs) -> CliResult<Parts> {
    let (n0, n1) = pair(&a.input, a.i, a.j)?;
    let mut warnings = Vec::new();
    let mut params = json!({
        "input": a.input.display().to_string(),
        "i": a.i,
        "j": a.j,
        "method": name(&a.method),
    });
    let outputs = match a.method {
        DistanceMethod::FrApprox => {
            params["epsilon"] = json!(a.epsilon);
            params["midpoint"] = json!(name(&a.midpoint));
            let cfg = ApproxConfig {
                midpoint: match a.midpoint {
                    MidpointArg::Geodesic => Midpoint::Geodesic,
                    MidpointArg::Ahm => Midpoint::Ahm,
                },
                ..ApproxConfig::new(a.epsilon)
            };
            let r = fr_distance_approx_with(&n0, &n1, &cfg)?;
            if r.worst_ratio > 1.0 + a.epsilon {
                warnings.push(format!(
                    "recursion depth limit reached; worst segment ratio {}",
                    format_f64(r.worst_ratio)
                ));
            }
            json!({"value": r.value, "lower": r.lower, "upper": r.upper, "segments": r.segments})
        }
        DistanceMethod::FrT => {
            params["steps"] = json!(a.steps);
            json!({"value": fr_length_approx(&n0, &n1, a.steps)?})
        }
        DistanceMethod::Fr => json!({"value": if n0 == n1 { 0.0 } else { FrGeodesic::new(&n0, &n1)?.length() }}),
        DistanceMethod::JeffreysSqrt => json!({"value": jeffreys(&n0, &n1)?.max(0.0).sqrt()}),
        DistanceMethod::CalvoOller => json!({"value": calvo_oller_lower_bound(&n0, &n1)?}),
        DistanceMethod::Hilbert => json!({"value": hilbert_distance_mvn(&n0, &n1, HilbertMethod::Exact)?}),
        DistanceMethod::Kl => json!({"value": kl_divergence(&n0, &n1)?}),
    };
    Ok(("distance", params, outputs, warnings))
}

fn curve_point(curve: CurveArg, fr: Option<&FrGeodesic>, n0: &Mvn, n1: &Mvn, t: f64) -> CliResult<Mvn> {
    Ok(match curve {
        CurveArg::FisherRao => fr.expect("built for fisher-rao").at(t)?,
        CurveArg::Mixture => mixture_geodesic(n0, n1, t)?,
        CurveArg::Exponential => exponential_geodesic(n0, n1, t)?,
        CurveArg::Hilbert => hilbert_geodesic_mvn(n0, n1, t)?,
    })
}

fn geodesic(a: &GeodesicArgs) -> CliResult<Parts> {
    if a.samples < 2 {
        return Err(CliError::Input("--samples must be at least 2".into()));
    }
    let (n0, n1) = pair(&a.input, a.i, a.j)?;
    let d = n0.dim();
    if a.ellipses.is_some() && (d < 2 || a.ellipse_vertices < 3) {
        return Err(CliError::Input("ellipses need dimension ≥ 2 and at least 3 vertices".into()));
    }
    let fr = match a.curve {
        CurveArg::FisherRao => Some(FrGeodesic::new(&n0, &n1)?),
        _ => None,
    };
    let last = (a.samples - 1) as f64;
    let samples: Vec<(f64, Mvn)> = (0..a.samples)
        .map(|k| {
            let t = if k + 1 == a.samples { 1.0 } else { k as f64 / last };
            curve_point(a.curve, fr.as_ref(), &n0, &n1, t).map(|p| (t, p))
        })
        .collect::<CliResult<_>>()?;

    let mut header = vec!["t".to_owned()];
    header.extend((0..d).map(|i| format!("mean_{i}")));
    for i in 0..d {
        header.extend((i..d).map(|j| format!("cov_{i}_{j}")));
    }
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| io_err(&a.out, e))?;
    w.write_record(&header).map_err(|e| io_err(&a.out, e))?;
    for (t, p) in &samples {
        let c = p.cov().matrix();
        let mut row = vec![format_f64(*t)];
        row.extend(p.mean().iter().map(|&x| format_f64(x)));
        for i in 0..d {
            row.extend((i..d).map(|j| format_f64(c[(i, j)])));
        }
        w.write_record(&row).map_err(|e| io_err(&a.out, e))?;
    }
    w.flush().map_err(|e| io_err(&a.out, e))?;

    let mut params = json!({
        "input": a.input.display().to_string(),
        "i": a.i,
        "j": a.j,
        "curve": name(&a.curve),
        "samples": a.samples,
        "out": a.out.display().to_string(),
    });
    let mut outputs = json!({"rows": a.samples, "dimension": d, "csv": a.out.display().to_string()});
    if let Some(fr) = &fr {
        outputs["length"] = json!(fr.length());
    }
    if let Some(path) = &a.ellipses {
        write_ellipses(path, &samples, a.ellipse_vertices)?;
        params["ellipses"] = json!(path.display().to_string());
        params["ellipse_vertices"] = json!(a.ellipse_vertices);
        outputs["ellipses"] = json!(path.display().to_string());
    }
    Ok(("geodesic", params, outputs, Vec::new()))
}

/// Closed polylines `μ + L (cos θ, sin θ)` of the first two coordinates, `L` the Cholesky factor.
fn write_ellipses(path: &Path, samples: &[(f64, Mvn)], vertices: usize) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["sample", "t", "vertex", "x", "y"]).map_err(|e| io_err(path, e))?;
    for (s, (t, p)) in samples.iter().enumerate() {
        let (m, c) = (p.mean(), p.cov().matrix());
        let l11 = c[(0, 0)].sqrt();
        let l21 = c[(1, 0)] / l11;
        let l22 = (c[(1, 1)] - l21 * l21).max(0.0).sqrt();
        for v in 0..=vertices {
            let th = std::f64::consts::TAU * v as f64 / vertices as f64;
            let (u0, u1) = (th.cos(), th.sin());
            let x = m[0] + l11 * u0;
            let y = m[1] + l21 * u0 + l22 * u1;
            w.write_record([s.to_string(), format_f64(*t), v.to_string(), format_f64(x), format_f64(y)])
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn metric_space(m: &MetricOpts, seed: u64) -> CliResult<(MetricSpace, Value)> {
    let mut params = json!({"metric": name(&m.metric)});
    let (distance, geodesic) = match m.metric {
        MetricArg::Fr => (Distance::FisherRao, Geodesic::FisherRao),
        MetricArg::FrApprox => {
            if m.epsilon.is_nan() || m.epsilon <= 0.0 {
                return Err(CliError::Input("--epsilon must be positive".into()));
            }
            params["epsilon"] = json!(m.epsilon);
            (Distance::FisherRaoApprox { epsilon: m.epsilon }, Geodesic::FisherRao)
        }
        MetricArg::FrT => {
            if m.steps == 0 {
                return Err(CliError::Input("--steps must be at least 1".into()));
            }
            params["steps"] = json!(m.steps);
            (Distance::FisherRaoT { steps: m.steps }, Geodesic::FisherRao)
        }
        MetricArg::Hilbert => (Distance::Hilbert(HilbertMethod::Exact), Geodesic::Hilbert),
        MetricArg::HilbertPower => {
            params["power_iterations"] = json!(m.power_iterations);
            (Distance::Hilbert(HilbertMethod::Power { iterations: m.power_iterations, seed }), Geodesic::Hilbert)
        }
        MetricArg::JeffreysSqrt => (Distance::JeffreysSqrt, Geodesic::Mixture),
        MetricArg::CalvoOller => (Distance::CalvoOller, Geodesic::FisherRao),
    };
    Ok((MetricSpace::with_geodesic(distance, geodesic), params))
}

fn non_metric_warning(m: MetricArg) -> Option<String> {
    matches!(m, MetricArg::JeffreysSqrt | MetricArg::CalvoOller | MetricArg::FrT | MetricArg::FrApprox).then(|| {
        format!("{} is not known to satisfy the triangle inequality; k-center's factor-2 guarantee may not hold", name(&m))
    })
}

fn cluster(a: &ClusterArgs) -> CliResult<Parts> {
    let points = Dataset::load(&a.input)?.into_mvns()?;
    let (metric, mut params) = metric_space(&a.metric, a.seed)?;
    params["input"] = json!(a.input.display().to_string());
    params["k"] = json!(a.k);
    params["algo"] = json!(name(&a.algo));
    params["seed"] = json!(a.seed);
    let mut warnings = Vec::new();
    let c = match a.algo {
        ClusterAlgo::Kcenter => {
            warnings.extend(non_metric_warning(a.metric.metric));
            kcenter_gonzalez(&points, a.k, metric, a.seed)?
        }
        ClusterAlgo::Kmedioid => kmedioid(&points, None, a.k, metric, a.seed)?,
    };
    let mut outputs = json!({
        "centers": c.centers.iter().map(mvn_record).collect::<Vec<_>>(),
        "center_indices": c.center_indices,
        "assignment": c.assignment,
        "radius": c.radius,
        "cost": c.cost,
    });
    if a.algo == ClusterAlgo::Kmedioid {
        outputs["cost_history"] = json!(c.cost_history);
    }
    Ok(("cluster", params, outputs, warnings))
}

fn quantize(a: &QuantizeArgs) -> CliResult<Parts> {
    let gmms = Dataset::load(&a.input)?.into_gmms()?;
    let (metric, mut params) = metric_space(&a.metric, a.seed)?;
    params["input"] = json!(a.input.display().to_string());
    params["k"] = json!(a.k);
    params["seed"] = json!(a.seed);
    let warnings = non_metric_warning(a.metric.metric).into_iter().collect();
    let q = gmm_quantize(&gmms, a.k, metric, a.seed)?;
    let outputs = json!({
        "codebook": q.codebook.iter().map(mvn_record).collect::<Vec<_>>(),
        "weights": q.weights,
        "radius": q.radius,
    });
    Ok(("quantize", params, outputs, warnings))
}

fn miniball_cmd(a: &MiniballArgs) -> CliResult<Parts> {
    if a.iters == 0 {
        return Err(CliError::Input("--iters must be at least 1".into()));
    }
    let points = Dataset::load(&a.input)?.into_mvns()?;
    let (mut metric, mut params) = metric_space(&a.metric, a.seed)?;
    if let Some(g) = a.geodesic {
        metric.geodesic = Some(match g {
            GeodesicArg::FisherRao => Geodesic::FisherRao,
            GeodesicArg::Hilbert => Geodesic::Hilbert,
            GeodesicArg::Mixture => Geodesic::Mixture,
        });
    }
    params["input"] = json!(a.input.display().to_string());
    params["iters"] = json!(a.iters);
    params["algo"] = json!(name(&a.algo));
    params["seed"] = json!(a.seed);
    params["geodesic"] = json!(match metric.geodesic {
        Some(Geodesic::FisherRao) => "fisher-rao",
        Some(Geodesic::Hilbert) => "hilbert",
        _ => "mixture",
    });
    let mut outputs = match a.algo {
        MiniballAlgo::Direct => {
            let b = miniball(&points, metric, a.iters)?;
            json!({
                "center": mvn_record(&b.center),
                "radius": b.radius,
                "radius_trace": b.radius_trace.iter().map(|&(t, r)| json!([t, r])).collect::<Vec<_>>(),
            })
        }
        MiniballAlgo::Embedded => {
            let b = miniball_embedded(&points, a.iters)?;
            let ecc = points
                .iter()
                .map(|p| metric.distance(&b.center, p))
                .collect::<Result<Vec<f64>, _>>()?
                .into_iter()
                .fold(0.0, f64::max);
            json!({
                "center": mvn_record(&b.center),
                "radius": ecc,
                "cone_radius": b.radius,
                "radius_trace": b.radius_trace.iter().map(|&(t, r)| json!([t, r])).collect::<Vec<_>>(),
            })
        }
    };
    outputs["points"] = json!(points.len());
    Ok(("miniball", params, outputs, Vec::new()))
}
