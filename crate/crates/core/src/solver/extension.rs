//! Smooth extension of a grid field past the boundary.
//!
//! Nodes outside the domain but within a few layers of it receive the value of
//! a weighted least-squares quadratic fitted to nearby unknowns and to the
//! homogeneous Dirichlet data at the boundary crossings of their legs. The
//! extension reproduces quadratics exactly.

use nalgebra::{Matrix6, Vector6};

use crate::geometry::{GridMask, DIRECTIONS, GHOST_LAYERS};
use crate::Point;

const WINDOW: i64 = 4;

pub(crate) fn extend(mask: &GridMask, values: &[f64]) -> Vec<f64> {
    let (nx, ny) = mask.dims();
    let h = mask.spacing();
    let mut out = vec![f64::NAN; nx * ny];
    for &k in mask.unknown_nodes() {
        out[k] = values[k];
    }
    // distance (in layers) of every node from the set of unknowns
    let band = GHOST_LAYERS - 1;
    let mut near = vec![false; nx * ny];
    for &k in mask.unknown_nodes() {
        let (i, j) = mask.coords(k);
        for dj in -band..=band {
            for di in -band..=band {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny {
                    near[mask.index(a as usize, b as usize)] = true;
                }
            }
        }
    }
    let domain = mask.domain();
    for k in 0..nx * ny {
        if !near[k] || mask.unknown(k).is_some() {
            continue;
        }
        let p = mask.position(k);
        if domain.boundary_distance(p) <= 1e-9 * h {
            out[k] = 0.0;
            continue;
        }
        out[k] = fit_at(mask, values, k, p, h).unwrap_or(f64::NAN);
    }
    out
}

fn fit_at(mask: &GridMask, values: &[f64], k: usize, p: Point, h: f64) -> Option<f64> {
    let (nx, ny) = mask.dims();
    let (i, j) = mask.coords(k);
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    let mut count = 0;
    let mut add = |q: Point, v: f64| {
        let d = (q - p) / h;
        let w = 1.0 / (1.0 + d.norm_squared());
        let phi = Vector6::new(1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y);
        ata += phi * phi.transpose() * w;
        atb += phi * (w * v);
        count += 1;
    };
    for dj in -WINDOW..=WINDOW {
        for di in -WINDOW..=WINDOW {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            if a < 0 || b < 0 || a as usize >= nx || b as usize >= ny {
                continue;
            }
            let m = mask.index(a as usize, b as usize);
            if mask.unknown(m).is_none() {
                continue;
            }
            let q = mask.position(m);
            add(q, values[m]);
            for (d, (ei, ej)) in DIRECTIONS.iter().enumerate() {
                let theta = mask.legs(m)[d];
                let nb = mask.neighbor(m, d);
                if theta < 1.0 || nb.is_none_or(|nb| mask.unknown(nb).is_none()) {
                    add(q + Point::new(*ei as f64, *ej as f64) * (theta * h), 0.0);
                }
            }
        }
    }
    if count < 6 {
        return None;
    }
    let c = ata.cholesky()?.solve(&atb);
    Some(c[0])
}
