//! Browser demo. Three operations on a preset domain, each returning a JSON
//! string: solve (field lattice for a heatmap), concavity (property (A) and
//! the exponent bracket), harmonic (modes about the maximum).
//!
//! The `*_view` functions hold the logic and build on any target; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use serde_json::{json, Value};
use torsion_core::closed_forms::{ball_torsion, ellipsoid_torsion, triangle_torsion, SmoothField};
use torsion_core::concavity::{
    concavity_exponent, is_power_concave, property_a_check, CheckOptions,
};
use torsion_core::field_calculus::EvaluableField;
use torsion_core::geometry::{Domain, GridMask};
use torsion_core::harmonic::{decompose, ellipse_noise_floor, harmonicity_check, HarmonicParams};
use torsion_core::solver::{solve_torsion, SolveResult, DEFAULT_TOL};
use torsion_core::{Point, Result, TorsionError};
use wasm_bindgen::prelude::*;

/// Preset domain and its closed form, if any. `a1` is the first ellipse
/// coefficient; the second is `2 - a1`.
pub fn preset(name: &str, a1: f64) -> Result<(Domain, Option<SmoothField>)> {
    match name {
        "disk" => Ok((Domain::unit_disk(), Some(ball_torsion(&[0.0, 0.0], 1.0)?))),
        "ellipse" => {
            let a = [a1, 2.0 - a1];
            let domain = Domain::ellipse(Point::zeros(), a, 1.0);
            domain.validate()?;
            Ok((domain, Some(ellipsoid_torsion(&[0.0, 0.0], &a, 1.0)?)))
        }
        "square" => Ok((Domain::square(1.0), None)),
        "triangle" => Ok((Domain::paper_triangle(), Some(triangle_torsion()))),
        other => Err(TorsionError::InvalidParameter(format!(
            "unknown preset {other:?}"
        ))),
    }
}

fn check_spacing(h: f64) -> Result<()> {
    if (1.0 / 256.0..=0.25).contains(&h) {
        Ok(())
    } else {
        Err(TorsionError::InvalidParameter(format!(
            "spacing {h} outside [1/256, 1/4]"
        )))
    }
}

fn run_solver(domain: &Domain, h: f64) -> Result<SolveResult> {
    check_spacing(h)?;
    solve_torsion(GridMask::build(domain, h)?, DEFAULT_TOL)
}

/// The closed form when there is one and `exact` is set, else the solved
/// field.
fn load(name: &str, a1: f64, h: f64, exact: bool) -> Result<(EvaluableField, bool)> {
    let (domain, closed) = preset(name, a1)?;
    match closed {
        Some(f) if exact => Ok((f.into(), true)),
        _ => Ok((EvaluableField::from_solve(&run_solver(&domain, h)?)?, false)),
    }
}

/// Solve summary plus the node lattice (row-major from the lower-left
/// corner, `null` outside the domain).
pub fn solve_view(name: &str, a1: f64, h: f64) -> Result<Value> {
    let (domain, _) = preset(name, a1)?;
    let r = run_solver(&domain, h)?;
    let mask = r.field.mask();
    let (nx, ny) = mask.dims();
    let values: Vec<Option<f64>> = (0..mask.node_count())
        .map(|k| mask.unknown(k).map(|_| r.field.values()[k]))
        .collect();
    let origin = mask.origin();
    Ok(json!({
        "summary": r.summary(),
        "nx": nx,
        "ny": ny,
        "origin": [origin.x, origin.y],
        "h": h,
        "values": values,
    }))
}

pub fn concavity_view(name: &str, a1: f64, h: f64, exact: bool) -> Result<Value> {
    let (f, used_exact) = load(name, a1, h, exact)?;
    let opts = CheckOptions::default();
    Ok(json!({
        "exact": used_exact,
        "half_power": is_power_concave(&f, 0.5, &opts)?,
        "property_a": property_a_check(&f, &opts)?,
        "alpha_star": concavity_exponent(&f, 0.01, &opts)?,
    }))
}

pub fn harmonic_view(name: &str, a1: f64, h: f64, exact: bool) -> Result<Value> {
    let (f, used_exact) = load(name, a1, h, exact)?;
    let mut params = HarmonicParams::default();
    if !used_exact {
        params.noise_floor = Some(ellipse_noise_floor(h, &params)?);
    }
    let d = decompose(&f, &params)?;
    let modes: Vec<Value> = d
        .modes
        .iter()
        .map(|m| {
            json!({
                "k": m.k,
                "c_cos": m.c_cos,
                "c_sin": m.c_sin,
                "amplitude": m.amplitude,
                "threshold": m.threshold,
                "retained": m.retained,
            })
        })
        .collect();
    Ok(json!({
        "exact": used_exact,
        "base": d.base,
        "max_value": d.max_value,
        "lambda": d.lambda,
        "rotation": d.rotation,
        "rho": d.rho,
        "k_bar": d.k_bar,
        "modes": modes,
        "harmonicity": harmonicity_check(&d, 1e-3),
    }))
}

fn export(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn solve(preset: &str, a1: f64, h: f64) -> std::result::Result<String, JsError> {
    export(solve_view(preset, a1, h))
}

#[wasm_bindgen]
pub fn concavity(
    preset: &str,
    a1: f64,
    h: f64,
    exact: bool,
) -> std::result::Result<String, JsError> {
    export(concavity_view(preset, a1, h, exact))
}

#[wasm_bindgen]
pub fn harmonic(
    preset: &str,
    a1: f64,
    h: f64,
    exact: bool,
) -> std::result::Result<String, JsError> {
    export(harmonic_view(preset, a1, h, exact))
}
