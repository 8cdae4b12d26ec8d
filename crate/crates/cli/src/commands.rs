use hyperwave::kernel::{critical_exponent, log_grid, schur_study, SchurGrids};
use hyperwave::quadrature::{panels_for, QuadGrid};
use hyperwave::schroedinger::{
    ball_grid, check_order, convergence_study, default_time_grid, maximal_study, propagate,
    MaximalGrids,
};
use hyperwave::spherical::{phi_asymptotic_leading, phi_local_bessel, phi_report};
use hyperwave::transform::{
    calibrate_normalization, default_family, forward, inverse, inverse_field, relative_l2_error,
    ProfileSpec,
};
use hyperwave::SpaceParams;
use serde_json::{json, Value};

use crate::config::{ConvergeArgs, EvolveArgs, GridArgs, MaximalArgs, PhiArgs, SchurArgs, TransformArgs};
use crate::output::{grid_summary, num, Output};
use crate::Failure;

/// What an experiment reports back for the manifest.
pub struct Report {
    pub inputs: Value,
    pub grids: Value,
    pub summary: Value,
    pub space: SpaceParams,
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Config(format!("missing required option --{name}")))
}

fn finite(x: f64, name: &str) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Config(format!("--{name} must be finite, got {x}")))
    }
}

fn positive(x: f64, name: &str) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Config(format!("--{name} must be positive, got {x}")))
    }
}

fn order(a: Option<f64>) -> Result<f64, Failure> {
    let a = required(a, "a")?;
    check_order(a).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(a)
}

fn profile(text: &str) -> Result<ProfileSpec, Failure> {
    ProfileSpec::parse(text).map_err(|e| Failure::Config(e.to_string()))
}

fn calibrated(space: &SpaceParams) -> Result<SpaceParams, Failure> {
    calibrate_normalization(space).map_err(Failure::numerical)
}

fn grid(hi: f64, panels: usize, name: &str) -> Result<QuadGrid, Failure> {
    let hi = positive(hi, &format!("{name}-max"))?;
    if panels == 0 {
        return Err(Failure::Config(format!("--{name}-panels must be at least 1")));
    }
    QuadGrid::from_origin(hi, panels).map_err(|e| Failure::Config(e.to_string()))
}

/// Radial extent where the profile has decayed to round-off.
fn radial_extent(p: &ProfileSpec) -> f64 {
    match *p {
        ProfileSpec::Family { .. } => 6.0,
        ProfileSpec::Heat { tau } => (128.0 * tau).sqrt().ceil().max(6.0),
    }
}

/// Radial and spectral grids for a profile, each resolving the other's extent.
fn paired_grids(space: &SpaceParams, p: &ProfileSpec, g: &GridArgs) -> Result<(QuadGrid, QuadGrid, GridArgs), Failure> {
    let r_max = g.radial_max.unwrap_or_else(|| radial_extent(p));
    let l_max = g.spectral_max.unwrap_or_else(|| p.spectral_extent(space).ceil());
    let r_max = positive(r_max, "radial-max")?;
    let l_max = positive(l_max, "spectral-max")?;
    let r_panels = g.radial_panels.unwrap_or_else(|| panels_for(r_max, l_max));
    let l_panels = g.spectral_panels.unwrap_or_else(|| panels_for(l_max, r_max));
    let resolved = GridArgs {
        radial_max: Some(r_max),
        radial_panels: Some(r_panels),
        spectral_max: Some(l_max),
        spectral_panels: Some(l_panels),
    };
    Ok((grid(r_max, r_panels, "radial")?, grid(l_max, l_panels, "spectral")?, resolved))
}

fn inputs<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

pub fn phi(space: &SpaceParams, args: &PhiArgs, out: &mut Output) -> Result<Report, Failure> {
    let lambda = finite(required(args.lambda, "lambda")?, "lambda")?;
    let t = finite(required(args.t, "t")?, "t")?;
    if t < 0.0 {
        return Err(Failure::Config(format!("--t must be non-negative, got {t}")));
    }
    let path = args.path.clone().unwrap_or_else(|| "ode".into());
    let report = match path.as_str() {
        "ode" => phi_report(space, lambda, t),
        "bessel" => phi_local_bessel(space, lambda, t, 0),
        "asym" => phi_asymptotic_leading(space, lambda, t),
        other => {
            return Err(Failure::Config(format!(
                "unknown path '{other}' (expected ode, bessel or asym)"
            )))
        }
    }
    .map_err(|e| match e {
        hyperwave::Error::Domain(_) | hyperwave::Error::InvalidParameter(_) => Failure::Config(e.to_string()),
        e => Failure::numerical(e),
    })?;
    let value = json!({
        "space": space.label(),
        "lambda": report.lambda,
        "t": report.t,
        "path": report.path,
        "value": report.value,
        "est_error": report.est_error,
    });
    println!("{}", serde_json::to_string(&value).expect("report serializes"));
    out.json("phi.json", &value)?;
    Ok(Report {
        inputs: inputs(&PhiArgs {
            lambda: Some(lambda),
            t: Some(t),
            path: Some(path),
        }),
        grids: Value::Null,
        summary: value,
        space: space.clone(),
    })
}

pub fn transform(space: &SpaceParams, args: &TransformArgs, out: &mut Output) -> Result<Report, Failure> {
    let text = args.profile.clone().unwrap_or_else(|| "heat".into());
    let p = profile(&text)?;
    let dir = args.dir.clone().unwrap_or_else(|| "roundtrip".into());
    if !matches!(dir.as_str(), "forward" | "inverse" | "roundtrip") {
        return Err(Failure::Config(format!(
            "unknown direction '{dir}' (expected forward, inverse or roundtrip)"
        )));
    }
    let (radial, spectral, resolved) = paired_grids(space, &p, &args.grids)?;
    let space = calibrated(space)?;
    let fh = p.sample(&space, &spectral).map_err(Failure::numerical)?;
    let header = ["grid", "value_re", "value_im"];
    let mut summary = json!({ "profile_id": p.id(), "direction": dir });
    let (nodes, values) = match dir.as_str() {
        "inverse" => {
            let f = inverse_field(&fh, &radial).map_err(Failure::numerical)?;
            (radial.nodes().to_vec(), f.values().to_vec())
        }
        "forward" => {
            let f = inverse(&fh, &radial).map_err(Failure::numerical)?;
            let g = forward(&f, &spectral).map_err(Failure::numerical)?;
            (spectral.nodes().to_vec(), g.values().to_vec())
        }
        _ => {
            let f = inverse(&fh, &radial).map_err(Failure::numerical)?;
            let back = inverse(&forward(&f, &spectral).map_err(Failure::numerical)?, &radial)
                .map_err(Failure::numerical)?;
            let err = relative_l2_error(&f, &back).map_err(Failure::numerical)?;
            summary["relative_l2_error"] = json!(err);
            let values = back.values().iter().map(|&v| v.into()).collect();
            (radial.nodes().to_vec(), values)
        }
    };
    let rows: Vec<Vec<String>> = nodes
        .iter()
        .zip(&values)
        .map(|(x, v)| vec![num(*x), num(v.re), num(v.im)])
        .collect();
    out.csv(&format!("transform_{dir}.csv"), &header, &rows)?;
    Ok(Report {
        inputs: inputs(&TransformArgs {
            profile: Some(text),
            dir: Some(dir),
            grids: resolved,
        }),
        grids: json!({ "radial": grid_summary(&radial), "spectral": grid_summary(&spectral) }),
        summary,
        space,
    })
}

pub fn evolve(space: &SpaceParams, args: &EvolveArgs, out: &mut Output) -> Result<Report, Failure> {
    let a = order(args.a)?;
    let text = required(args.profile.clone(), "profile")?;
    let p = profile(&text)?;
    let t = finite(required(args.t, "t")?, "t")?;
    let (radial, spectral, resolved) = paired_grids(space, &p, &args.grids)?;
    let space = calibrated(space)?;
    let fh = p.sample(&space, &spectral).map_err(Failure::numerical)?;
    let field = propagate(&fh, t, a, &radial).map_err(Failure::numerical)?;
    let rows: Vec<Vec<String>> = radial
        .nodes()
        .iter()
        .zip(field.values())
        .map(|(r, v)| vec![num(*r), num(v.re), num(v.im)])
        .collect();
    out.csv("evolve.csv", &["radius", "re", "im"], &rows)?;
    Ok(Report {
        inputs: inputs(&EvolveArgs {
            a: Some(a),
            profile: Some(text),
            t: Some(t),
            grids: resolved,
        }),
        grids: json!({ "radial": grid_summary(&radial), "spectral": grid_summary(&spectral) }),
        summary: json!({ "profile_id": p.id(), "l2_norm": field.l2_norm() }),
        space,
    })
}

/// Spectral grid of the maximal-function studies with optional overrides.
fn study_spectral(max: Option<f64>, panels: Option<usize>) -> Result<QuadGrid, Failure> {
    let standard = MaximalGrids::standard().spectral;
    let hi = max.unwrap_or(standard.upper());
    let panels = panels.unwrap_or_else(|| {
        if max.is_some() {
            (hi / standard.max_panel_width()).ceil() as usize
        } else {
            standard.panel_count()
        }
    });
    grid(hi, panels, "spectral")
}

pub fn converge(space: &SpaceParams, args: &ConvergeArgs, out: &mut Output) -> Result<Report, Failure> {
    let a = order(args.a)?;
    let s = positive(required(args.s, "s")?, "s")?;
    let text = match &args.profile {
        Some(t) => t.clone(),
        None => ProfileSpec::Family {
            q: 0.5 * f64::from(space.n()) + s + 0.1,
            cutoff: 16.0,
        }
        .id(),
    };
    let p = profile(&text)?;
    let times = args.times.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
    if times.is_empty() {
        return Err(Failure::Config("--times needs at least one time".into()));
    }
    for &t in &times {
        positive(t, "times")?;
    }
    let ball_panels = args.ball_panels.unwrap_or(24).max(1);
    let spectral = study_spectral(args.spectral_max, args.spectral_panels)?;
    let ball = ball_grid(ball_panels).map_err(|e| Failure::Config(e.to_string()))?;
    let space = calibrated(space)?;
    let fh = p.sample(&space, &spectral).map_err(Failure::numerical)?;
    let rows = convergence_study(&fh, a, &times, &ball).map_err(Failure::numerical)?;
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error_on_ball).collect();
    let decreasing = l2.windows(2).all(|w| w[1] < w[0]);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.t), num(r.l2_error_on_ball), num(r.sup_error_on_ball)])
        .collect();
    out.csv("converge.csv", &["t", "l2_error_on_B", "sup_error_on_B"], &table)?;
    Ok(Report {
        inputs: inputs(&ConvergeArgs {
            a: Some(a),
            s: Some(s),
            profile: Some(text),
            times: Some(times),
            ball_panels: Some(ball_panels),
            spectral_max: Some(spectral.upper()),
            spectral_panels: Some(spectral.panel_count()),
        }),
        grids: json!({ "spectral": grid_summary(&spectral), "ball": grid_summary(&ball) }),
        summary: json!({
            "profile_id": p.id(),
            "regularity": p.regularity(&space),
            "l2_strictly_decreasing": decreasing,
        }),
        space,
    })
}

pub fn maximal(space: &SpaceParams, args: &MaximalArgs, out: &mut Output) -> Result<Report, Failure> {
    let a = order(args.a)?;
    let s = positive(required(args.s, "s")?, "s")?;
    let family = args.family.clone().unwrap_or_else(|| "default".into());
    let profiles = if family == "default" {
        default_family(space)
    } else {
        family.split(';').map(|t| profile(t.trim())).collect::<Result<Vec<_>, _>>()?
    };
    let time_points = args.time_points.unwrap_or(512);
    if time_points == 0 {
        return Err(Failure::Config("--time-points must be at least 1".into()));
    }
    let ball_panels = args.ball_panels.unwrap_or(24).max(1);
    let grids = MaximalGrids {
        spectral: study_spectral(args.spectral_max, args.spectral_panels)?,
        ball: ball_grid(ball_panels).map_err(|e| Failure::Config(e.to_string()))?,
        times: default_time_grid(time_points),
    };
    let space = calibrated(space)?;
    let rows = maximal_study(&space, &profiles, a, s, &grids).map_err(Failure::numerical)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.profile_id.clone(), num(r.hs_norm), num(r.maximal_l2), num(r.ratio)])
        .collect();
    out.csv("maximal.csv", &["profile_id", "hs_norm", "maximal_l2", "ratio"], &table)?;
    let sup = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    Ok(Report {
        inputs: inputs(&MaximalArgs {
            a: Some(a),
            s: Some(s),
            family: Some(family),
            time_points: Some(time_points),
            ball_panels: Some(ball_panels),
            spectral_max: Some(grids.spectral.upper()),
            spectral_panels: Some(grids.spectral.panel_count()),
        }),
        grids: json!({
            "spectral": grid_summary(&grids.spectral),
            "ball": grid_summary(&grids.ball),
            "times": { "count": grids.times.len(), "first": grids.times[0], "last": grids.times[grids.times.len() - 1] },
        }),
        summary: json!({ "sup_ratio": sup }),
        space,
    })
}

pub fn schur(space: &SpaceParams, args: &SchurArgs, out: &mut Output) -> Result<Report, Failure> {
    let a = order(args.a)?;
    let s_text = args.s.clone().unwrap_or_else(|| "auto".into());
    let s = if s_text == "auto" {
        critical_exponent(a)
    } else {
        let v = s_text
            .parse::<f64>()
            .map_err(|_| Failure::Config(format!("--s must be 'auto' or a number, got '{s_text}'")))?;
        positive(v, "s")?
    };
    let standard = SchurGrids::standard();
    let eta_points = args.eta_points.unwrap_or(standard.etas.len());
    let eta_min = positive(args.eta_min.unwrap_or(standard.etas[0]), "eta-min")?;
    let eta_max = positive(args.eta_max.unwrap_or(standard.etas[standard.etas.len() - 1]), "eta-max")?;
    let lambda_cut = positive(args.lambda_cut.unwrap_or(standard.lambda_cut), "lambda-cut")?;
    if eta_points < 2 || eta_min >= eta_max {
        return Err(Failure::Config(format!(
            "eta grid needs at least 2 points and eta-min < eta-max, got {eta_points} points on [{eta_min}, {eta_max}]"
        )));
    }
    let grids = SchurGrids {
        etas: log_grid(eta_min, eta_max, eta_points),
        lambda_cut,
        density: 1.0,
    };
    let space = calibrated(space)?;
    let study = schur_study(&space, s, a, &grids).map_err(Failure::numerical)?;
    let table: Vec<Vec<String>> = study
        .base
        .rows
        .iter()
        .map(|r| vec![num(r.eta), num(r.i1), num(r.i2), num(r.i3), num(r.total)])
        .collect();
    out.csv("schur.csv", &["eta", "I1", "I2", "I3", "row_integral"], &table)?;
    let summary = json!({
        "s": s,
        "a": a,
        "gamma": study.base.gamma,
        "beta": study.base.beta,
        "sup_row": study.base.sup_row,
        "sup_row_at": study.base.sup_row_at,
        "sup_col": study.base.sup_col,
        "sup_col_at": study.base.sup_col_at,
        "refined_sup_row": study.refined.sup_row,
        "refined_sup_col": study.refined.sup_col,
        "stability_pct": study.stability_pct,
        "any_truncated": study.base.any_truncated || study.refined.any_truncated,
    });
    out.json("schur_summary.json", &summary)?;
    Ok(Report {
        inputs: inputs(&SchurArgs {
            a: Some(a),
            s: Some(s_text),
            eta_points: Some(eta_points),
            eta_min: Some(eta_min),
            eta_max: Some(eta_max),
            lambda_cut: Some(lambda_cut),
        }),
        grids: json!({
            "eta": { "count": eta_points, "min": eta_min, "max": eta_max, "spacing": "log" },
            "lambda_cut": lambda_cut,
            "refined_lambda_cut": 2.0 * lambda_cut,
        }),
        summary,
        space,
    })
}
