//! Circular-harmonic analysis of `v = M - u` about the maximum point.
//!
//! Near the maximum `x*`, `v = ½ xᵀ D²v(x*) x + z` where the remainder `z`
//! has vanishing 2-jet and, for a torsion function, is harmonic. Hence on
//! circles of radius `r` the Fourier mode `k` of `z` equals `c_k r^k` exactly,
//! modes 0, 1 and 2 vanish, and the first nonzero mode `k̄ ≥ 3` (if any)
//! separates the domain from an ellipse. Along a ray in direction `ξ` the
//! radial sign quantity `2 v v_rr - v_r²` then behaves like
//! `2 A(ξ) (k̄² - 3k̄ + 2) z_k̄(ξ) r^k̄` with `A(ξ) = ½ Σ λ_i ξ_i²`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::field_calculus::{eval_jet, radial_jet, EvaluableField};
use crate::geometry::{Domain, GridMask};
use crate::solver::solve_torsion;
use crate::{Point, Result, TorsionError};

/// Relative eigenvalue gap below which the frame is left unrotated.
pub const DEGENERACY_GAP: f64 = 1e-3;
/// A mode counts as detected when its contribution at the outer radius
/// reaches this fraction of `M`; the same level decides at which radii its
/// power law can be tested.
pub const DETECTION_LEVEL: f64 = 1e-4;
/// Radii needed to test a power law.
pub const MIN_RADII: usize = 3;

/// Sampling parameters of [`decompose`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarmonicParams {
    pub n_radii: usize,
    pub n_angles: usize,
    pub k_max: usize,
    /// Outer radius; defaults to `0.8 · dist(x*, boundary)`.
    pub rho: Option<f64>,
    /// Per-mode amplitude noise floor (index `k`), for instance from
    /// [`ellipse_noise_floor`].
    pub noise_floor: Option<Vec<f64>>,
}

impl Default for HarmonicParams {
    fn default() -> Self {
        Self {
            n_radii: 8,
            n_angles: 256,
            k_max: 12,
            rho: None,
            noise_floor: None,
        }
    }
}

/// Fitted amplitude of one circular mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    pub k: usize,
    pub c_cos: f64,
    pub c_sin: f64,
    pub amplitude: f64,
    pub threshold: f64,
    /// Largest relative deviation of `(a_k + i b_k)/r^k` from the fit over
    /// the resolved radii; `None` when fewer than [`MIN_RADII`] resolve it.
    pub harmonicity_dev: Option<f64>,
    /// Radii at which `|c_k| r^k ≥ DETECTION_LEVEL · M`.
    pub resolved_radii: usize,
    pub retained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicDecomposition {
    pub base: [f64; 2],
    pub max_value: f64,
    /// Eigenvalues of `D²v(x*)`, descending.
    pub lambda: [f64; 2],
    /// Angle of the first eigenvector, in `[0, π)`; zero when degenerate.
    pub rotation: f64,
    pub rho: f64,
    pub radii: Vec<f64>,
    /// `[a_k, b_k]` per radius and mode `k = 0..=k_max`.
    pub coefficients: Vec<Vec<[f64; 2]>>,
    /// Fits of modes `3..=k_max`.
    pub modes: Vec<ModeFit>,
    pub k_bar: Option<usize>,
    /// Largest `|a_k + i b_k|` over radii for `k ≤ 2`, relative to `M`.
    pub low_mode_residual: f64,
}

impl HarmonicDecomposition {
    pub fn mode(&self, k: usize) -> Option<&ModeFit> {
        self.modes.iter().find(|m| m.k == k)
    }

    /// Angle of `xi` measured in the eigenframe.
    pub fn frame_angle(&self, xi: Point) -> f64 {
        xi.y.atan2(xi.x) - self.rotation
    }

    /// `A(ξ) = ½ Σ λ_i ξ_i²` in the eigenframe.
    pub fn quadratic_weight(&self, xi: Point) -> f64 {
        let t = self.frame_angle(xi);
        0.5 * (self.lambda[0] * t.cos().powi(2) + self.lambda[1] * t.sin().powi(2))
    }

    /// `z_k(ξ) = c_cos cos kθ + c_sin sin kθ`.
    pub fn mode_value(&self, k: usize, xi: Point) -> Option<f64> {
        let t = self.frame_angle(xi);
        self.mode(k)
            .map(|m| m.c_cos * (k as f64 * t).cos() + m.c_sin * (k as f64 * t).sin())
    }

    /// Leading coefficient of `2 v v_rr - v_r²` predicted from the first mode.
    pub fn predicted_leading(&self, xi: Point) -> Option<f64> {
        let k = self.k_bar? as f64;
        let z = self.mode_value(self.k_bar?, xi)?;
        Some(2.0 * self.quadratic_weight(xi) * (k * k - 3.0 * k + 2.0) * z)
    }
}

fn eigenframe(d2v: &nalgebra::Matrix2<f64>) -> ([f64; 2], f64) {
    let (a, b, c) = (d2v[(0, 0)], 0.5 * (d2v[(0, 1)] + d2v[(1, 0)]), d2v[(1, 1)]);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda = [mean + rad, mean - rad];
    if 2.0 * rad <= DEGENERACY_GAP * (lambda[0].abs() + lambda[1].abs()) {
        return (lambda, 0.0);
    }
    // first eigenvector in the upper half-plane; directions within 1e-4 of
    // the negative x-axis are snapped to the positive one
    let pi = std::f64::consts::PI;
    let mut angle = 0.5 * (2.0 * b).atan2(a - c);
    if angle < 0.0 {
        angle += pi;
    }
    if angle > pi - 1e-4 {
        angle = 0.0;
    }
    (lambda, angle)
}

/// Expands `v = M - u` about the maximum and fits circular modes of the
/// remainder.
pub fn decompose(f: &EvaluableField, params: &HarmonicParams) -> Result<HarmonicDecomposition> {
    let HarmonicParams {
        n_radii,
        n_angles,
        k_max,
        ..
    } = *params;
    if n_angles < 4 * k_max || k_max < 3 {
        return Err(TorsionError::Aliasing {
            angles: n_angles,
            modes: k_max,
            needed: 4 * k_max.max(3),
        });
    }
    if n_radii < 2 {
        return Err(TorsionError::InvalidParameter(format!("{n_radii} radii")));
    }
    let domain = f.domain();
    let (top, m) = f.max();
    if !domain.contains(top) {
        return Err(TorsionError::ArgmaxOnBoundary);
    }
    let inscribed = domain.boundary_distance(top) - f.jet_margin();
    if !(inscribed > 0.0) {
        return Err(TorsionError::ArgmaxOnBoundary);
    }
    let rho = params.rho.unwrap_or(0.8 * domain.boundary_distance(top));
    if !(rho > 0.0) || rho > inscribed {
        return Err(TorsionError::RadiusTooLarge {
            radius: rho,
            inscribed,
        });
    }
    let d2v = -eval_jet(f, top)?.hessian;
    let (lambda, rotation) = eigenframe(&d2v);
    let (cr, sr) = (rotation.cos(), rotation.sin());

    let radii: Vec<f64> = (0..n_radii)
        .map(|j| rho / 16.0 * 8f64.powf(j as f64 / (n_radii - 1) as f64))
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_angles);
    let mut coefficients = Vec::with_capacity(n_radii);
    for &r in &radii {
        let mut buf = Vec::with_capacity(n_angles);
        for i in 0..n_angles {
            let t = std::f64::consts::TAU * i as f64 / n_angles as f64;
            let local = Point::new(r * t.cos(), r * t.sin());
            let offset = Point::new(cr * local.x - sr * local.y, sr * local.x + cr * local.y);
            let v = m - f.value(top + offset)?;
            let z = v - 0.5 * offset.dot(&(d2v * offset));
            buf.push(Complex::new(z, 0.0));
        }
        fft.process(&mut buf);
        let scale = 2.0 / n_angles as f64;
        let row: Vec<[f64; 2]> = (0..=k_max)
            .map(|k| {
                if k == 0 {
                    [buf[0].re / n_angles as f64, 0.0]
                } else {
                    [buf[k].re * scale, -buf[k].im * scale]
                }
            })
            .collect();
        coefficients.push(row);
    }

    let low_mode_residual = coefficients
        .iter()
        .flat_map(|row| row[..3].iter().map(|c| c[0].hypot(c[1])))
        .fold(0.0, f64::max)
        / m;

    let mut modes = Vec::new();
    for k in 3..=k_max {
        let kf = k as i32;
        let den: f64 = radii.iter().map(|r| r.powi(2 * kf)).sum();
        let fit = |idx: usize| -> f64 {
            radii
                .iter()
                .zip(&coefficients)
                .map(|(r, row)| row[k][idx] * r.powi(kf))
                .sum::<f64>()
                / den
        };
        let (c_cos, c_sin) = (fit(0), fit(1));
        let amplitude = c_cos.hypot(c_sin);
        // at radii where the mode sits below the detection level its
        // coefficient is dominated by evaluation noise
        let deviations: Vec<f64> = radii
            .iter()
            .zip(&coefficients)
            .filter(|(r, _)| amplitude * r.powi(kf) >= DETECTION_LEVEL * m)
            .map(|(r, row)| {
                let rk = r.powi(kf);
                (row[k][0] / rk - c_cos).hypot(row[k][1] / rk - c_sin) / amplitude
            })
            .collect();
        let resolved_radii = deviations.len();
        let harmonicity_dev =
            (resolved_radii >= MIN_RADII).then(|| deviations.iter().copied().fold(0.0, f64::max));
        let floor = params
            .noise_floor
            .as_ref()
            .and_then(|n| n.get(k).copied())
            .unwrap_or(0.0);
        let threshold = (DETECTION_LEVEL * m / rho.powi(kf)).max(5.0 * floor);
        modes.push(ModeFit {
            k,
            c_cos,
            c_sin,
            amplitude,
            threshold,
            harmonicity_dev,
            resolved_radii,
            retained: amplitude > threshold,
        });
    }
    let k_bar = modes.iter().find(|m| m.retained).map(|m| m.k);
    Ok(HarmonicDecomposition {
        base: [top.x, top.y],
        max_value: m,
        lambda,
        rotation,
        rho,
        radii,
        coefficients,
        modes,
        k_bar,
        low_mode_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeStatus {
    Pass,
    Fail,
    /// Too few radii resolve the mode to test its power law.
    Unresolved,
}

/// Per-mode outcome of [`harmonicity_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCheck {
    pub k: usize,
    pub deviation: Option<f64>,
    pub resolved_radii: usize,
    pub status: ModeStatus,
}

impl ModeCheck {
    pub fn failed(&self) -> bool {
        self.status == ModeStatus::Fail
    }
}

/// Checks that every retained mode scales as a pure power `r^k`.
pub fn harmonicity_check(d: &HarmonicDecomposition, tol: f64) -> Vec<ModeCheck> {
    d.modes
        .iter()
        .filter(|m| m.retained)
        .map(|m| ModeCheck {
            k: m.k,
            deviation: m.harmonicity_dev,
            resolved_radii: m.resolved_radii,
            status: match m.harmonicity_dev {
                None => ModeStatus::Unresolved,
                Some(dev) if dev <= tol => ModeStatus::Pass,
                Some(_) => ModeStatus::Fail,
            },
        })
        .collect()
}

/// `2 v v_rr - v_r²` along `base + r ξ`, proportional to the second radial
/// derivative of `√v`.
pub fn radial_sign_quantity(f: &EvaluableField, base: Point, xi: Point, r: f64) -> Result<f64> {
    let j = radial_jet(f, base, xi, r)?;
    Ok(2.0 * j.v * j.v_rr - j.v_r * j.v_r)
}

/// Power-law fit of the radial sign quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub exponent: f64,
    pub coefficient: f64,
    /// `2 A(ξ) (k̄² - 3k̄ + 2) z_k̄(ξ)` from the decomposition.
    pub predicted: Option<f64>,
}

/// Log-log least squares of `|2 v v_rr - v_r²|` against `r` on
/// `n` geometrically spaced radii in `[r_lo, r_hi]`.
pub fn leading_term_fit(
    f: &EvaluableField,
    d: &HarmonicDecomposition,
    xi: Point,
    r_lo: f64,
    r_hi: f64,
    n: usize,
) -> Result<LeadingTerm> {
    if !(r_lo > 0.0 && r_hi > r_lo) || n < 2 {
        return Err(TorsionError::InvalidParameter(format!(
            "fit range [{r_lo}, {r_hi}] with {n} radii"
        )));
    }
    if r_hi > d.rho {
        return Err(TorsionError::RadiusTooLarge {
            radius: r_hi,
            inscribed: d.rho,
        });
    }
    let base = Point::new(d.base[0], d.base[1]);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / (n - 1) as f64);
        pts.push((r, radial_sign_quantity(f, base, xi, r)?));
    }
    let m = d.max_value;
    let floor = 1e-12 * m * m / (d.rho * d.rho);
    if pts.iter().all(|p| p.1.abs() < floor) {
        return Err(TorsionError::FitRejected(
            "radial sign quantity is below the noise floor".into(),
        ));
    }
    let sign = pts[0].1.signum();
    if pts
        .iter()
        .any(|p| p.1.signum() != sign || p.1.abs() < floor)
    {
        return Err(TorsionError::FitRejected(
            "radial sign quantity changes sign in the fit range".into(),
        ));
    }
    let nf = n as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|(r, q)| (r.ln(), q.abs().ln())).unzip();
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let coefficient = sign * (my - exponent * mx).exp();
    Ok(LeadingTerm {
        exponent,
        coefficient,
        predicted: d.predicted_leading(xi / xi.norm()),
    })
}

/// Mode amplitudes of the solved torsion function of the ellipse
/// `1.5 x² + 0.5 y² < 1` at spacing `h`. The ellipse has no genuine modes,
/// so these measure discretization noise.
pub fn ellipse_noise_floor(h: f64, params: &HarmonicParams) -> Result<Vec<f64>> {
    let domain = Domain::ellipse(Point::zeros(), [1.5, 0.5], 1.0);
    let result = solve_torsion(GridMask::build(&domain, h)?, crate::solver::DEFAULT_TOL)?;
    let f = EvaluableField::from_solve(&result)?;
    let null = HarmonicParams {
        noise_floor: None,
        rho: None,
        ..params.clone()
    };
    let d = decompose(&f, &null)?;
    let mut out = vec![0.0; params.k_max + 1];
    for m in &d.modes {
        out[m.k] = m.amplitude;
    }
    Ok(out)
}
