//! Power concavity of torsion fields, the concavity exponent, convexity of
//! `√(M - u)` and boundary diagnostics.
//!
//! Every check combines two samplers. The Hessian sampler evaluates the
//! largest eigenvalue of `D²(f^α)` (or the smallest of `D²√v`) from the jet of
//! `f` by the chain rule at points at least `margin` from the boundary. The
//! midpoint sampler compares values at random pairs and their midpoints and
//! needs no derivatives, so it also covers the boundary layer.
//!
//! A sample violates the check when its defect exceeds the propagated
//! evaluation noise by more than the threshold. Thresholds scale with the
//! field: `tol · M^α / d²` for eigenvalues and `tol · M^α / d² · |x - y|² / 8`
//! for midpoint defects, `d` being the domain diameter. The verdict is
//! `Holds` when no sample exceeds its threshold, `Fails` when one exceeds ten
//! times its threshold, and `Inconclusive` in between.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_forms::Jet2;
use crate::field_calculus::{eval_jet, EvaluableField};
use crate::geometry::{
    is_convex_curve, marching_level_set, polygon_metrics, Domain, NodeGrid, NodeKind,
};
use crate::{Point, Result, TorsionError};

pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_PAIRS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_917;
/// A violation this many thresholds past the noise certifies failure.
pub const CERTIFY_FACTOR: f64 = 10.0;
/// Exponent range searched by [`concavity_exponent`].
pub const ALPHA_RANGE: (f64, f64) = (0.45, 1.10);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Eigenvalue of the wrong sign at `point` along `direction`.
    Hessian,
    /// Midpoint inequality broken for `pair`.
    Midpoint,
    /// Negative value of the local excess function at `point`.
    Negative,
}

/// The worst sample of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub point: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<[[f64; 2]; 2]>,
    /// Defect beyond the propagated evaluation noise.
    pub violation: f64,
    /// Threshold the violation is compared against.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub points_tested: usize,
    pub pairs_tested: usize,
    /// Samples whose violation exceeded their threshold.
    pub violations: usize,
    pub margin: f64,
    /// Eigenvalue threshold; midpoint thresholds derive from it.
    pub tolerance: f64,
}

/// Sampling and tolerance settings shared by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    /// Hessian samples keep this distance from the boundary; `None` picks
    /// `3h` for grid fields and `10⁻⁴ d` for analytic ones.
    pub margin: Option<f64>,
    /// Relative tolerance.
    pub tol: f64,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            margin: None,
            tol: DEFAULT_REL_TOL,
            pairs: DEFAULT_PAIRS,
            seed: DEFAULT_SEED,
        }
    }
}

impl CheckOptions {
    pub fn resolved_margin(&self, f: &EvaluableField) -> f64 {
        self.margin.unwrap_or_else(|| match f.spacing() {
            Some(h) => 3.0 * h,
            None => 1e-4 * f.domain().diameter(),
        })
    }

    fn validate(&self, f: &EvaluableField) -> Result<f64> {
        if !(self.tol > 0.0) {
            return Err(TorsionError::InvalidParameter(format!(
                "tolerance {}",
                self.tol
            )));
        }
        let margin = self.resolved_margin(f);
        if !(margin >= f.jet_margin() * (1.0 - 1e-12)) || !margin.is_finite() {
            return Err(TorsionError::InvalidParameter(format!(
                "margin {margin} is below the jet clearance {}",
                f.jet_margin()
            )));
        }
        Ok(margin)
    }
}

/// Bounds on the evaluation error of a field's value, gradient and Hessian.
///
/// Analytic fields carry roundoff only. For torsion fields solved at spacing
/// `h` the bounds are about twice the worst errors observed against the
/// closed forms at three spacings: value `h²/4`, gradient `h/100`, Hessian
/// `0.03/(δ - 1)² + 10⁻⁴` at `δ = dist/h` spacings from the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub value: f64,
    pub gradient: f64,
    spacing: Option<f64>,
    hessian_floor: f64,
}

impl NoiseModel {
    pub fn for_field(f: &EvaluableField) -> Self {
        let (_, m) = f.max();
        match f.spacing() {
            Some(h) => NoiseModel {
                value: 0.25 * h * h,
                gradient: 0.01 * h,
                spacing: Some(h),
                hessian_floor: 1e-4,
            },
            None => {
                let d = f.domain().diameter();
                NoiseModel {
                    value: 1e-14 * m.abs(),
                    gradient: 1e-14 * m.abs() / d,
                    spacing: None,
                    hessian_floor: 1e-14 * m.abs() / (d * d),
                }
            }
        }
    }

    /// Hessian error bound at distance `dist` from the boundary.
    pub fn hessian(&self, dist: f64) -> f64 {
        match self.spacing {
            Some(h) => {
                let delta = dist / h;
                if delta <= 1.0 {
                    f64::INFINITY
                } else {
                    0.03 / (delta - 1.0).powi(2) + self.hessian_floor
                }
            }
            None => self.hessian_floor,
        }
    }
}

/// Eigenvalues (ascending) and unit eigenvectors of a symmetric 2×2 matrix.
fn sym_eigen(m: &Matrix2<f64>) -> [(f64, Point); 2] {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let angle = 0.5 * (2.0 * b).atan2(a - c);
    let top = Point::new(angle.cos(), angle.sin());
    let bottom = Point::new(-top.y, top.x);
    [(mean - rad, bottom), (mean + rad, top)]
}

fn spectral_norm(m: &Matrix2<f64>) -> f64 {
    let [lo, hi] = sym_eigen(m);
    lo.0.abs().max(hi.0.abs())
}

fn arr(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

/// Running worst sample, measured by violation over threshold.
struct Tally {
    worst: f64,
    witness: Option<Witness>,
    violations: usize,
    points: usize,
    pairs: usize,
}

impl Tally {
    fn new() -> Self {
        Self {
            worst: f64::NEG_INFINITY,
            witness: None,
            violations: 0,
            points: 0,
            pairs: 0,
        }
    }

    fn record(&mut self, excess: f64, threshold: f64, witness: impl FnOnce() -> Witness) {
        let ratio = excess / threshold;
        if ratio > 1.0 {
            self.violations += 1;
        }
        if ratio > self.worst {
            self.worst = ratio;
            if ratio > 1.0 {
                let mut w = witness();
                w.violation = excess;
                w.threshold = threshold;
                self.witness = Some(w);
            }
        }
    }

    fn report(self, margin: f64, tolerance: f64) -> ConcavityReport {
        let verdict = if self.worst <= 1.0 {
            Verdict::Holds
        } else if self.worst > CERTIFY_FACTOR {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        };
        ConcavityReport {
            verdict,
            witness: self.witness,
            points_tested: self.points,
            pairs_tested: self.pairs,
            violations: self.violations,
            margin,
            tolerance,
        }
    }
}

/// Region in which samples are drawn: a convex set given by a membership
/// test and a bounding box.
struct Region<'a> {
    inside: &'a dyn Fn(Point) -> bool,
    lo: Point,
    hi: Point,
}

impl Region<'_> {
    fn uniform(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        for _ in 0..1000 {
            let p = Point::new(
                rng.gen_range(self.lo.x..self.hi.x),
                rng.gen_range(self.lo.y..self.hi.y),
            );
            if (self.inside)(p) {
                return Some(p);
            }
        }
        None
    }

    /// Point near the region's boundary: walk from a uniform point along a
    /// random direction to the boundary, then back off by a geometrically
    /// distributed fraction.
    fn near_boundary(&self, rng: &mut ChaCha8Rng, scale: f64) -> Option<Point> {
        let start = self.uniform(rng)?;
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let dir = Point::new(t.cos(), t.sin());
        let (mut a, mut b) = (0.0, 2.0 * scale);
        while (self.inside)(start + dir * b) {
            b *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if (self.inside)(start + dir * mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        let back = scale * 10f64.powf(rng.gen_range(-5.0..-1.0));
        let p = start + dir * (a - back);
        (self.inside)(p).then_some(p)
    }

    fn pairs(&self, n: usize, seed: u64, scale: f64) -> Vec<(Point, Point)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n && attempts < 50 * n.max(1) {
            attempts += 1;
            let pair = match out.len() % 4 {
                0 | 1 => self.uniform(&mut rng).zip(self.uniform(&mut rng)),
                flavor => {
                    let x = if flavor == 2 {
                        self.near_boundary(&mut rng, scale)
                    } else {
                        self.uniform(&mut rng)
                    };
                    x.and_then(|x| {
                        let t = rng.gen_range(0.0..std::f64::consts::TAU);
                        let len = scale * 10f64.powf(rng.gen_range(-3.0..-0.5));
                        let y = x + Point::new(t.cos(), t.sin()) * len;
                        (self.inside)(y).then_some((x, y))
                    })
                }
            };
            if let Some(p) = pair {
                out.push(p);
            }
        }
        out
    }
}

/// Hessian sample points at least `margin` from the boundary that satisfy
/// `keep`: grid nodes for grid fields, otherwise a lattice plus layers of
/// points at geometric distances from the boundary.
fn hessian_points(
    f: &EvaluableField,
    margin: f64,
    keep: &dyn Fn(Point) -> bool,
) -> Vec<(Point, f64)> {
    let domain = f.domain();
    let accept = |p: Point| -> Option<(Point, f64)> {
        if !domain.contains(p) || !keep(p) {
            return None;
        }
        let d = domain.boundary_distance(p);
        (d >= margin * (1.0 - 1e-9)).then_some((p, d))
    };
    match f {
        EvaluableField::Grid(g) => {
            let mask = g.field().mask();
            mask.unknown_nodes()
                .iter()
                .filter_map(|&k| accept(mask.position(k)))
                .collect()
        }
        EvaluableField::Smooth(_) => {
            let (lo, hi) = domain.bounding_box();
            let n = 100;
            let mut out = Vec::new();
            for j in 0..=n {
                for i in 0..=n {
                    let p = lo
                        + Point::new(
                            (hi.x - lo.x) * i as f64 / n as f64,
                            (hi.y - lo.y) * j as f64 / n as f64,
                        );
                    out.extend(accept(p));
                }
            }
            let reach = 0.2 * domain.inradius();
            let layers = 16;
            for b in domain.boundary_samples(400) {
                for l in 0..layers {
                    let offset = margin * (reach / margin).powf(l as f64 / (layers - 1) as f64);
                    out.extend(accept(b.point - b.normal * offset));
                }
            }
            out
        }
    }
}

/// Jets and values evaluated once so that checks at many exponents reuse
/// them.
pub struct PowerProbe {
    margin: f64,
    tol: f64,
    max_value: f64,
    diameter: f64,
    noise: NoiseModel,
    jets: Vec<(Point, f64, Jet2)>,
    triples: Vec<(Point, Point, [f64; 3])>,
}

impl PowerProbe {
    pub fn new(f: &EvaluableField, opts: &CheckOptions) -> Result<Self> {
        let margin = opts.validate(f)?;
        let domain = f.domain();
        let jets: Vec<_> = hessian_points(f, margin, &|_| true)
            .into_iter()
            .filter_map(|(p, d)| eval_jet(f, p).ok().map(|j| (p, d, j)))
            .collect();
        if jets.is_empty() {
            return Err(TorsionError::EmptySampleSet(margin));
        }
        let (lo, hi) = domain.bounding_box();
        let inside = |p: Point| domain.contains(p);
        let region = Region {
            inside: &inside,
            lo,
            hi,
        };
        let triples = region
            .pairs(opts.pairs, opts.seed, domain.diameter())
            .into_iter()
            .filter_map(|(x, y)| {
                let vals = [
                    f.value(x).ok()?,
                    f.value(y).ok()?,
                    f.value(0.5 * (x + y)).ok()?,
                ];
                Some((x, y, vals))
            })
            .collect();
        Ok(Self {
            margin,
            tol: opts.tol,
            max_value: f.max().1,
            diameter: domain.diameter(),
            noise: NoiseModel::for_field(f),
            jets,
            triples,
        })
    }

    /// Eigenvalue threshold at exponent `alpha`.
    pub fn tolerance(&self, alpha: f64) -> f64 {
        self.tol * self.max_value.powf(alpha) / (self.diameter * self.diameter)
    }

    /// Checks concavity of `f^α`.
    pub fn check(&self, alpha: f64) -> ConcavityReport {
        let tau = self.tolerance(alpha);
        let ev = self.noise.value;
        let eg = self.noise.gradient;
        let mut tally = Tally::new();
        for &(p, dist, ref jet) in &self.jets {
            let f = jet.value;
            if !(f > 2.0 * ev) {
                continue;
            }
            tally.points += 1;
            let g = jet.gradient;
            let b = (alpha - 1.0) * g * g.transpose() + f * jet.hessian;
            let [_, (top, dir)] = sym_eigen(&b);
            let scale = alpha * f.powf(alpha - 2.0);
            let db = (alpha - 1.0).abs() * (2.0 * g.norm() * eg + eg * eg)
                + f * self.noise.hessian(dist)
                + ev * spectral_norm(&jet.hessian);
            let noise = scale * (db + (alpha - 2.0).abs() * ev / f * spectral_norm(&b));
            tally.record(scale * top - noise, tau, || Witness {
                kind: WitnessKind::Hessian,
                point: arr(p),
                direction: Some(arr(dir)),
                pair: None,
                violation: 0.0,
                threshold: 0.0,
            });
        }
        let power = |f: f64| f.max(0.0).powf(alpha);
        let spread = |f: f64| power(f + ev) - power(f - ev);
        for &(x, y, [fx, fy, fm]) in &self.triples {
            tally.pairs += 1;
            let defect = 0.5 * (power(fx) + power(fy)) - power(fm);
            let noise = 0.5 * (spread(fx) + spread(fy)) + spread(fm);
            let threshold = tau * (x - y).norm_squared() / 8.0;
            tally.record(defect - noise, threshold, || Witness {
                kind: WitnessKind::Midpoint,
                point: arr(0.5 * (x + y)),
                direction: None,
                pair: Some([arr(x), arr(y)]),
                violation: 0.0,
                threshold: 0.0,
            });
        }
        tally.report(self.margin, tau)
    }
}

/// Is `f^α` concave? Hessian and midpoint sampling as described in the
/// module documentation.
pub fn is_power_concave(
    f: &EvaluableField,
    alpha: f64,
    opts: &CheckOptions,
) -> Result<ConcavityReport> {
    if !(alpha > 0.0) {
        return Err(TorsionError::InvalidParameter(format!("exponent {alpha}")));
    }
    Ok(PowerProbe::new(f, opts)?.check(alpha))
}

/// Bisection bracket for the concavity exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentBracket {
    /// Largest tested exponent at which `f^α` is concave.
    pub lo: f64,
    /// Smallest tested exponent at which concavity is not confirmed.
    pub hi: f64,
    /// Every exponent tested, in order, with its verdict.
    pub steps: Vec<(f64, Verdict)>,
}

/// Brackets `sup{α : f^α concave}` by bisection over [`ALPHA_RANGE`];
/// inconclusive verdicts count as not holding.
pub fn concavity_exponent(
    f: &EvaluableField,
    width: f64,
    opts: &CheckOptions,
) -> Result<ExponentBracket> {
    if !(width > 0.0) {
        return Err(TorsionError::InvalidParameter(format!(
            "bisection width {width}"
        )));
    }
    let probe = PowerProbe::new(f, opts)?;
    let (mut lo, mut hi) = ALPHA_RANGE;
    let mut steps = Vec::new();
    let mut test = |a: f64| {
        let v = probe.check(a).verdict;
        steps.push((a, v));
        v
    };
    let at_lo = test(lo);
    let at_hi = test(hi);
    if at_lo != Verdict::Holds || at_hi == Verdict::Holds {
        return Err(TorsionError::InconsistentBracket(format!(
            "{at_lo:?} at {lo}, {at_hi:?} at {hi}"
        )));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if test(mid) == Verdict::Holds {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ExponentBracket { lo, hi, steps })
}

/// Jet of the function whose square root should be convex, with its own
/// error bounds.
struct RootJet {
    v: f64,
    gradient: Point,
    hessian: Matrix2<f64>,
    noise_value: f64,
    noise_gradient: f64,
    noise_hessian: f64,
}

struct RootSample {
    point: Point,
    jet: RootJet,
}

/// Convexity of `√v` from Hessian samples and midpoint triples of `v`
/// (with per-point value noise). Optionally also checks `v ≥ -floor`.
fn root_convexity(
    samples: &[RootSample],
    triples: &[(Point, Point, [(f64, f64); 3])],
    tau: f64,
    negativity_floor: Option<f64>,
    margin: f64,
) -> ConcavityReport {
    let mut tally = Tally::new();
    for s in samples {
        let j = &s.jet;
        if let Some(floor) = negativity_floor {
            tally.record(-j.v - j.noise_value, floor, || Witness {
                kind: WitnessKind::Negative,
                point: arr(s.point),
                direction: None,
                pair: None,
                violation: 0.0,
                threshold: 0.0,
            });
        }
        if !(j.v > 2.0 * j.noise_value) || j.v <= 0.0 {
            continue;
        }
        tally.points += 1;
        let g = j.gradient;
        let c = j.hessian - g * g.transpose() / (2.0 * j.v);
        let q = 0.5 / j.v.sqrt();
        let [(bottom, dir), _] = sym_eigen(&c);
        let eg = j.noise_gradient;
        let dc = j.noise_hessian
            + (2.0 * g.norm() * eg + eg * eg) / (2.0 * j.v)
            + g.norm_squared() * j.noise_value / (2.0 * j.v * j.v);
        let noise = q * (dc + j.noise_value / (2.0 * j.v) * spectral_norm(&c));
        tally.record(-q * bottom - noise, tau, || Witness {
            kind: WitnessKind::Hessian,
            point: arr(s.point),
            direction: Some(arr(dir)),
            pair: None,
            violation: 0.0,
            threshold: 0.0,
        });
    }
    let root = |v: f64| v.max(0.0).sqrt();
    let spread = |(v, e): (f64, f64)| root(v + e) - root(v - e);
    for &(x, y, [a, b, m]) in triples {
        tally.pairs += 1;
        if let Some(floor) = negativity_floor {
            for (p, (v, e)) in [(x, a), (y, b)] {
                tally.record(-v - e, floor, || Witness {
                    kind: WitnessKind::Negative,
                    point: arr(p),
                    direction: None,
                    pair: None,
                    violation: 0.0,
                    threshold: 0.0,
                });
            }
        }
        let defect = root(m.0) - 0.5 * (root(a.0) + root(b.0));
        let noise = 0.5 * (spread(a) + spread(b)) + spread(m);
        let threshold = tau * (x - y).norm_squared() / 8.0;
        tally.record(defect - noise, threshold, || Witness {
            kind: WitnessKind::Midpoint,
            point: arr(0.5 * (x + y)),
            direction: None,
            pair: Some([arr(x), arr(y)]),
            violation: 0.0,
            threshold: 0.0,
        });
    }
    tally.report(margin, tau)
}

/// Radius around a base point where `√v` is not differentiable and Hessian
/// samples are skipped.
fn core_radius(f: &EvaluableField, scale: f64) -> f64 {
    match f.spacing() {
        Some(h) => 2.0 * h,
        None => 1e-3 * scale,
    }
}

/// Is `w = √(M - f)` convex on the domain?
pub fn property_a_check(f: &EvaluableField, opts: &CheckOptions) -> Result<ConcavityReport> {
    let margin = opts.validate(f)?;
    let domain = f.domain();
    let (top, m) = f.max();
    let noise = NoiseModel::for_field(f);
    let d = domain.diameter();
    let core = core_radius(f, d);
    let samples: Vec<RootSample> = hessian_points(f, margin, &|p| (p - top).norm() >= core)
        .into_iter()
        .filter_map(|(p, dist)| {
            let j = eval_jet(f, p).ok()?;
            Some(RootSample {
                point: p,
                jet: RootJet {
                    v: m - j.value,
                    gradient: -j.gradient,
                    hessian: -j.hessian,
                    noise_value: 2.0 * noise.value,
                    noise_gradient: noise.gradient,
                    noise_hessian: noise.hessian(dist),
                },
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(TorsionError::EmptySampleSet(margin));
    }
    let (lo, hi) = domain.bounding_box();
    let inside = |p: Point| domain.contains(p);
    let region = Region {
        inside: &inside,
        lo,
        hi,
    };
    let ev = 2.0 * noise.value;
    let triples: Vec<_> = region
        .pairs(opts.pairs, opts.seed, d)
        .into_iter()
        .filter_map(|(x, y)| {
            let v = |p: Point| f.value(p).ok().map(|u| (m - u, ev));
            Some((x, y, [v(x)?, v(y)?, v(0.5 * (x + y))?]))
        })
        .collect();
    let tau = opts.tol * m.sqrt() / (d * d);
    Ok(root_convexity(&samples, &triples, tau, None, margin))
}

/// Is `v(x) = u(x₀) + ∇u(x₀)·(x - x₀) - u(x)` nonnegative with `√v` convex
/// on the ball `B(x₀, radius)`?
pub fn local_property_a_check(
    f: &EvaluableField,
    x0: Point,
    radius: f64,
    opts: &CheckOptions,
) -> Result<ConcavityReport> {
    opts.validate(f)?;
    let domain = f.domain();
    if !(radius > 0.0)
        || !domain.contains(x0)
        || domain.boundary_distance(x0) < radius + f.jet_margin()
    {
        return Err(TorsionError::BallNotContained {
            x: x0.x,
            y: x0.y,
            radius,
        });
    }
    let base = eval_jet(f, x0)?;
    let noise = NoiseModel::for_field(f);
    let (_, m) = f.max();
    let core = core_radius(f, radius);
    let in_ball = |p: Point| (p - x0).norm() < radius;
    let excess = |p: Point, u: f64| base.value + base.gradient.dot(&(p - x0)) - u;
    let value_noise = |p: Point| 2.0 * noise.value + (p - x0).norm() * noise.gradient;

    let points: Vec<(Point, f64)> = match f {
        EvaluableField::Grid(_) => {
            hessian_points(f, 0.0, &|p| in_ball(p) && (p - x0).norm() >= core)
        }
        EvaluableField::Smooth(_) => {
            let n = 80;
            let mut out = Vec::new();
            for j in 0..=n {
                for i in 0..=n {
                    let p = x0
                        + Point::new(
                            radius * (2.0 * i as f64 / n as f64 - 1.0),
                            radius * (2.0 * j as f64 / n as f64 - 1.0),
                        );
                    if in_ball(p) && (p - x0).norm() >= core {
                        out.push((p, domain.boundary_distance(p)));
                    }
                }
            }
            out
        }
    };
    let samples: Vec<RootSample> = points
        .into_iter()
        .filter_map(|(p, dist)| {
            let j = eval_jet(f, p).ok()?;
            Some(RootSample {
                point: p,
                jet: RootJet {
                    v: excess(p, j.value),
                    gradient: base.gradient - j.gradient,
                    hessian: -j.hessian,
                    noise_value: value_noise(p),
                    noise_gradient: 2.0 * noise.gradient,
                    noise_hessian: noise.hessian(dist),
                },
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(TorsionError::EmptySampleSet(core));
    }
    let r = Point::new(radius, radius);
    let region = Region {
        inside: &in_ball,
        lo: x0 - r,
        hi: x0 + r,
    };
    let triples: Vec<_> = region
        .pairs(opts.pairs, opts.seed, 2.0 * radius)
        .into_iter()
        .filter_map(|(x, y)| {
            let v = |p: Point| f.value(p).ok().map(|u| (excess(p, u), value_noise(p)));
            Some((x, y, [v(x)?, v(y)?, v(0.5 * (x + y))?]))
        })
        .collect();
    let d = domain.diameter();
    let tau = opts.tol * m.sqrt() / (d * d);
    Ok(root_convexity(
        &samples,
        &triples,
        tau,
        Some(opts.tol * m),
        0.0,
    ))
}

/// `Δ(f^α) = α f^{α-2} [(α - 1)|∇f|² + f Δf]`; for a torsion function
/// `Δf = -1`.
pub fn excess_laplacian_power(f: &EvaluableField, alpha: f64, x: Point) -> Result<f64> {
    let j = eval_jet(f, x)?;
    if !(j.value > 0.0) {
        return Err(TorsionError::InvalidParameter(format!(
            "field value {} is not positive at ({}, {})",
            j.value, x.x, x.y
        )));
    }
    Ok(alpha
        * j.value.powf(alpha - 2.0)
        * ((alpha - 1.0) * j.gradient.norm_squared() + j.value * j.laplacian()))
}

/// Volume and perimeter of a superlevel set and the sign bracket
/// `(α - 1) Vol² / Per - ε Per`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetBound {
    pub level: f64,
    pub alpha: f64,
    pub volume: f64,
    pub perimeter: f64,
    pub bracket: f64,
    pub convex: bool,
}

/// Lattice of field values used for level-set extraction: the grid's own
/// extended nodes, or a fine sampling of an analytic field.
///
/// Values outside the domain are capped at zero (undefined ones become zero).
/// Past a corner the continuation of a torsion function turns positive again,
/// which would otherwise spawn spurious crossings of small positive levels.
pub fn level_grid(f: &EvaluableField) -> NodeGrid {
    match f {
        EvaluableField::Grid(g) => {
            let mask = g.field().mask();
            let (nx, ny) = mask.dims();
            let values = g
                .field()
                .extended_values()
                .iter()
                .enumerate()
                .map(|(k, &v)| match mask.kind(k) {
                    NodeKind::Exterior => v.min(0.0),
                    _ => v,
                })
                .collect();
            NodeGrid {
                origin: mask.origin(),
                h: mask.spacing(),
                nx,
                ny,
                values,
            }
        }
        EvaluableField::Smooth(s) => {
            let domain = f.domain();
            let (lo, hi) = domain.bounding_box();
            let h = domain.diameter() / 512.0;
            let pad = Point::new(2.0 * h, 2.0 * h);
            NodeGrid::sample(lo - pad, hi + pad, h, |p| s.jet2(p).value)
        }
    }
}

pub fn level_set_bound_check(f: &EvaluableField, alpha: f64, eps: f64) -> Result<LevelSetBound> {
    let (_, m) = f.max();
    if !(alpha > 1.0) {
        return Err(TorsionError::InvalidParameter(format!(
            "exponent {alpha} must exceed 1"
        )));
    }
    if !(eps > 0.0 && eps < 0.5 * m) {
        return Err(TorsionError::InvalidParameter(format!(
            "level {eps} must lie in (0, M/2) with M = {m}"
        )));
    }
    let grid = level_grid(f);
    let curve = marching_level_set(&grid, eps)?;
    let pm = polygon_metrics(&curve)?;
    Ok(LevelSetBound {
        level: eps,
        alpha,
        volume: pm.area,
        perimeter: pm.perimeter,
        bracket: (alpha - 1.0) * pm.area * pm.area / pm.perimeter - eps * pm.perimeter,
        convex: is_convex_curve(&curve, 0.5 * grid.h * grid.h),
    })
}

/// Statistics of `|∇u|` over boundary samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max - min) / mean`.
    pub spread: f64,
    pub samples: usize,
}

/// `|∇u|` on the boundary by one-sided differences along the inward normal:
/// with `u = 0` on the boundary, `∂u/∂n ≈ (4u(s) - u(2s)) / (2s)`, where
/// `s = 2h` for grid fields and `10⁻³ d` for analytic ones.
pub fn boundary_gradient_stats(f: &EvaluableField, samples: usize) -> Result<GradientStats> {
    let domain = f.domain();
    let s = match f.spacing() {
        Some(h) => 2.0 * h,
        None => 1e-3 * domain.diameter(),
    };
    let values: Vec<f64> = domain
        .boundary_samples(samples)
        .into_iter()
        .filter_map(|b| {
            let near = f.value(b.point - b.normal * s).ok()?;
            let far = f.value(b.point - b.normal * (2.0 * s)).ok()?;
            edge_distance_ok(&domain, b.point - b.normal * (2.0 * s), 2.0 * s)
                .then_some((4.0 * near - far) / (2.0 * s))
        })
        .map(f64::abs)
        .collect();
    if values.is_empty() {
        return Err(TorsionError::EmptySampleSet(s));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(GradientStats {
        min,
        max,
        mean,
        spread: (max - min) / mean,
        samples: values.len(),
    })
}

/// The stencil point should see the sampled edge first; near a vertex the
/// inward normal can approach another edge.
fn edge_distance_ok(domain: &Domain, p: Point, expected: f64) -> bool {
    domain.boundary_distance(p) >= expected * (1.0 - 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{ball_torsion, ellipsoid_torsion, triangle_torsion};
    use approx::assert_abs_diff_eq;

    fn disk() -> EvaluableField {
        ball_torsion(&[0.0, 0.0], 1.0).unwrap().into()
    }

    #[test]
    fn eigen_pairs() {
        let m = Matrix2::new(2.0, 1.0, 1.0, 2.0);
        let [(lo, vlo), (hi, vhi)] = sym_eigen(&m);
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!((m * vlo - vlo * lo).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((m * vhi - vhi * hi).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn laplacian_power_closed_form() {
        let f = disk();
        let x = Point::new(0.9, 0.0);
        assert_abs_diff_eq!(
            excess_laplacian_power(&f, 2.0, x).unwrap(),
            0.31,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            excess_laplacian_power(&f, 1.0, x).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        let at_max = excess_laplacian_power(&f, 0.7, Point::zeros()).unwrap();
        assert_abs_diff_eq!(at_max, -0.7 * 0.25f64.powf(-0.3), epsilon = 1e-12);
    }

    #[test]
    fn disk_power_concavity() {
        let f = disk();
        let opts = CheckOptions::default();
        assert_eq!(
            is_power_concave(&f, 0.5, &opts).unwrap().verdict,
            Verdict::Holds
        );
        assert_eq!(
            is_power_concave(&f, 1.0, &opts).unwrap().verdict,
            Verdict::Holds
        );
        let r = is_power_concave(&f, 1.1, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let w = r.witness.unwrap();
        assert!(Point::new(w.point[0], w.point[1]).norm() > 0.9);
    }

    #[test]
    fn property_a_on_quadratic_fields() {
        let opts = CheckOptions::default();
        assert_eq!(
            property_a_check(&disk(), &opts).unwrap().verdict,
            Verdict::Holds
        );
        let e: EvaluableField = ellipsoid_torsion(&[0.0, 0.0], &[1.5, 0.5], 1.0)
            .unwrap()
            .into();
        assert_eq!(property_a_check(&e, &opts).unwrap().verdict, Verdict::Holds);
        let t: EvaluableField = triangle_torsion().into();
        assert_eq!(property_a_check(&t, &opts).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn local_check_rejects_large_balls() {
        let err =
            local_property_a_check(&disk(), Point::new(0.5, 0.0), 0.6, &CheckOptions::default());
        assert!(matches!(err, Err(TorsionError::BallNotContained { .. })));
    }

    #[test]
    fn level_set_bracket_on_disk() {
        let b = level_set_bound_check(&disk(), 1.1, 1e-3).unwrap();
        assert!((b.bracket - 0.1489).abs() < 2e-3, "{b:?}");
        assert!(b.convex);
        assert!(level_set_bound_check(&disk(), 1.1, 0.1).unwrap().bracket < 0.0);
    }

    #[test]
    fn serrin_disk() {
        let s = boundary_gradient_stats(&disk(), 256).unwrap();
        assert_abs_diff_eq!(s.mean, 0.5, epsilon = 1e-6);
        assert!(s.spread < 1e-6);
    }
}
