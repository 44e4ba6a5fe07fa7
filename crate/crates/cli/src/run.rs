//! The three commands. Each builds a JSON document embedding the resolved
//! configuration; writing files is kept separate so the documents can be
//! compared in memory.

use std::f64::consts::TAU;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};
use torsion_core::concavity::{
    boundary_gradient_stats, concavity_exponent, is_power_concave, level_set_bound_check,
    local_property_a_check, property_a_check, Verdict,
};
use torsion_core::field_calculus::EvaluableField;
use torsion_core::geometry::GridMask;
use torsion_core::harmonic::{
    decompose, ellipse_noise_floor, harmonicity_check, leading_term_fit, radial_sign_quantity,
};
use torsion_core::solver::{sig12, solve_torsion, SolveResult, SolveSummary};
use torsion_core::{Point, TorsionError};

use crate::config::{closed_form, Check, FieldSource, RunConfig};
use crate::error::CliError;

/// Files written by a command and whether the analysis flagged a violation.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub violation: bool,
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = sig12(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect())
        }
        other => other,
    }
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

/// Results are rounded to 12 significant digits; the configuration is echoed
/// at full precision so that feeding it back reproduces the run exactly.
fn document(command: &str, cfg: &RunConfig, result: Value) -> Value {
    json!({
        "tool": "torsion-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": to_value(cfg),
        "result": round_floats(result),
    })
}

fn run_solver(cfg: &RunConfig) -> Result<SolveResult, CliError> {
    let mask = GridMask::build(cfg.domain()?, cfg.h)?;
    Ok(solve_torsion(mask, cfg.solver_tol)?)
}

/// The field an analysis runs on, with the solve summary when it was solved.
pub struct LoadedField {
    pub field: EvaluableField,
    pub source: FieldSource,
    pub solve: Option<SolveSummary>,
}

pub fn load_field(cfg: &RunConfig) -> Result<LoadedField, CliError> {
    let exact = closed_form(cfg.domain()?);
    let source = match (cfg.field, &exact) {
        (FieldSource::Exact, None) => {
            return Err(CliError::Usage(
                "this domain has no closed-form torsion function".into(),
            ))
        }
        (FieldSource::Auto, Some(_)) | (FieldSource::Exact, Some(_)) => FieldSource::Exact,
        _ => FieldSource::Solved,
    };
    match (source, exact) {
        (FieldSource::Exact, Some(f)) => Ok(LoadedField {
            field: f.into(),
            source,
            solve: None,
        }),
        _ => {
            let r = run_solver(cfg)?;
            Ok(LoadedField {
                field: EvaluableField::from_solve(&r)?,
                source,
                solve: Some(r.summary()),
            })
        }
    }
}

/// Summary document and field CSV of a solve.
pub fn solve_document(cfg: &RunConfig) -> Result<(Value, String), CliError> {
    cfg.validate()?;
    let r = run_solver(cfg)?;
    Ok((
        document("solve", cfg, to_value(&r.summary())),
        r.field.to_csv(),
    ))
}

/// Report document of the requested checks; the flag is set when a check
/// fails.
pub fn analyze_document(cfg: &RunConfig) -> Result<(Value, bool), CliError> {
    cfg.validate()?;
    let a = &cfg.analyze;
    let loaded = load_field(cfg)?;
    let f = &loaded.field;
    let mut checks = a.checks.clone();
    checks.sort();
    checks.dedup();
    let mut out = Map::new();
    let mut violation = false;
    let mut flag = |verdict: Verdict| violation |= verdict == Verdict::Fails;
    for check in checks {
        let (name, value) = match check {
            Check::Power => {
                let r = is_power_concave(f, a.alpha, &a.options)?;
                flag(r.verdict);
                ("power", json!({ "alpha": a.alpha, "report": r }))
            }
            Check::AlphaStar => (
                "alpha_star",
                to_value(&concavity_exponent(f, a.width, &a.options)?),
            ),
            Check::PropertyA => {
                let r = property_a_check(f, &a.options)?;
                flag(r.verdict);
                ("property_a", to_value(&r))
            }
            Check::LocalPropertyA => {
                let (top, _) = f.max();
                let x0 = a.x0.map_or(top, |p| Point::new(p[0], p[1]));
                let radius = a
                    .radius
                    .unwrap_or_else(|| 0.5 * (f.domain().boundary_distance(x0) - f.jet_margin()));
                let r = local_property_a_check(f, x0, radius, &a.options)?;
                flag(r.verdict);
                (
                    "local_property_a",
                    json!({ "x0": [x0.x, x0.y], "radius": radius, "report": r }),
                )
            }
            Check::Serrin => ("serrin", to_value(&boundary_gradient_stats(f, a.samples)?)),
            Check::LevelSetBound => {
                let eps = a.eps.unwrap_or(f.max().1 / 250.0);
                (
                    "level_set_bound",
                    to_value(&level_set_bound_check(f, a.level_alpha, eps)?),
                )
            }
        };
        out.insert(name.into(), value);
    }
    let result = json!({
        "field": loaded.source,
        "solve": loaded.solve,
        "max": { "point": [f.max().0.x, f.max().0.y], "value": f.max().1 },
        "checks": out,
        "violation": violation,
    });
    Ok((document("analyze", cfg, result), violation))
}

/// Harmonic decomposition document; the flag is set when a retained mode
/// fails the pure-power check.
pub fn harmonic_document(cfg: &RunConfig) -> Result<(Value, bool), CliError> {
    cfg.validate()?;
    let hc = &cfg.harmonic;
    let loaded = load_field(cfg)?;
    let f = &loaded.field;
    let mut params = hc.params.clone();
    if params.noise_floor.is_none() && hc.ellipse_floor && loaded.source == FieldSource::Solved {
        params.noise_floor = Some(ellipse_noise_floor(cfg.h, &params)?);
    }
    let d = decompose(f, &params)?;
    let checks = harmonicity_check(&d, hc.harmonicity_tol);
    let violation = checks.iter().any(|c| c.failed());

    let base = Point::new(d.base[0], d.base[1]);
    let dirs: Vec<(f64, Point)> = (0..hc.directions)
        .map(|i| {
            let t = TAU * i as f64 / hc.directions as f64;
            (t, Point::new(t.cos(), t.sin()))
        })
        .collect();
    let r = d.rho / 4.0;
    let mut scan = Vec::with_capacity(dirs.len());
    for &(t, xi) in &dirs {
        scan.push((t, radial_sign_quantity(f, base, xi, r)?));
    }
    let (min_theta, min_q) =
        scan.iter().copied().fold(
            (0.0, f64::INFINITY),
            |acc, s| if s.1 < acc.1 { s } else { acc },
        );
    let negative = scan.iter().filter(|s| s.1 < 0.0).count();

    let leading = match d.k_bar {
        None => json!({ "skipped": "no retained mode" }),
        Some(k) => {
            // direction in which the first mode is most negative
            let mut best = (0.0, Point::new(1.0, 0.0), f64::INFINITY);
            for &(t, xi) in &dirs {
                let z = d.mode_value(k, xi).unwrap_or(0.0);
                if z < best.2 {
                    best = (t, xi, z);
                }
            }
            let (theta, xi, _) = best;
            let [lo, hi] = hc.fit_range.unwrap_or([d.rho / 80.0, d.rho / 8.0]);
            match leading_term_fit(f, &d, xi, lo, hi, hc.fit_points) {
                Ok(fit) => json!({ "theta": theta, "range": [lo, hi], "fit": fit }),
                Err(TorsionError::FitRejected(msg)) => {
                    json!({ "theta": theta, "range": [lo, hi], "rejected": msg })
                }
                Err(e) => return Err(e.into()),
            }
        }
    };

    let result = json!({
        "field": loaded.source,
        "solve": loaded.solve,
        "noise_floor": params.noise_floor,
        "decomposition": d,
        "harmonicity": checks,
        "sign_scan": {
            "radius": r,
            "directions": hc.directions,
            "negative": negative,
            "min": min_q,
            "min_theta": min_theta,
        },
        "leading_term": leading,
        "violation": violation,
    });
    Ok((document("harmonic", cfg, result), violation))
}

fn write_json(cfg: &RunConfig, name: &str, doc: &Value) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(name);
    let mut text = serde_json::to_string_pretty(doc).expect("JSON values serialize");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (doc, csv) = solve_document(cfg)?;
    let summary = write_json(cfg, "summary.json", &doc)?;
    let field = cfg.out_dir.join("field.csv");
    fs::write(&field, csv)?;
    Ok(Outcome {
        files: vec![summary, field],
        violation: false,
    })
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (doc, violation) = analyze_document(cfg)?;
    Ok(Outcome {
        files: vec![write_json(cfg, "report.json", &doc)?],
        violation,
    })
}

pub fn cmd_harmonic(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (doc, violation) = harmonic_document(cfg)?;
    Ok(Outcome {
        files: vec![write_json(cfg, "harmonic.json", &doc)?],
        violation,
    })
}
