//! Run configuration: defaults, then an optional JSON file, then flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use torsion_core::closed_forms::{ball_torsion, ellipsoid_torsion, triangle_torsion, SmoothField};
use torsion_core::concavity::{CheckOptions, DEFAULT_PAIRS, DEFAULT_REL_TOL, DEFAULT_SEED};
use torsion_core::geometry::Domain;
use torsion_core::harmonic::HarmonicParams;
use torsion_core::solver::DEFAULT_TOL;
use torsion_core::Point;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Disk,
    Ellipse,
    Square,
    PaperTriangle,
}

impl Preset {
    /// Builds the preset domain. `a` applies to the ellipse, `radius` is the
    /// disk or ellipse radius and the square's half side.
    pub fn domain(self, a: Option<[f64; 2]>, radius: Option<f64>) -> Result<Domain, CliError> {
        let r = radius.unwrap_or(1.0);
        if a.is_some() && self != Preset::Ellipse {
            return Err(CliError::Usage(
                "--a applies to the ellipse preset only".into(),
            ));
        }
        if radius.is_some() && self == Preset::PaperTriangle {
            return Err(CliError::Usage(
                "the paper triangle has a fixed size".into(),
            ));
        }
        let d = match self {
            Preset::Disk => Domain::disk(Point::zeros(), r),
            Preset::Ellipse => Domain::ellipse(Point::zeros(), a.unwrap_or([1.5, 0.5]), r),
            Preset::Square => Domain::square(r),
            Preset::PaperTriangle => Domain::paper_triangle(),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Which field the analysis commands work on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSource {
    /// The closed form when the domain has one, otherwise the solved field.
    #[default]
    Auto,
    Exact,
    Solved,
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Power,
    AlphaStar,
    PropertyA,
    LocalPropertyA,
    Serrin,
    LevelSetBound,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Power,
        Check::AlphaStar,
        Check::PropertyA,
        Check::LocalPropertyA,
        Check::Serrin,
        Check::LevelSetBound,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub checks: Vec<Check>,
    pub options: CheckOptions,
    /// Exponent of the `power` check.
    pub alpha: f64,
    /// Final bracket width of `alpha-star`.
    pub width: f64,
    /// Centre of `local-property-a`; defaults to the maximum point.
    pub x0: Option<[f64; 2]>,
    /// Ball radius of `local-property-a`; defaults to half the clearance.
    pub radius: Option<f64>,
    /// Exponent of `level-set-bound`.
    pub level_alpha: f64,
    /// Level of `level-set-bound`; defaults to `M / 250`.
    pub eps: Option<f64>,
    /// Boundary samples of `serrin`.
    pub samples: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            checks: Check::ALL.to_vec(),
            options: CheckOptions {
                margin: None,
                tol: DEFAULT_REL_TOL,
                pairs: DEFAULT_PAIRS,
                seed: DEFAULT_SEED,
            },
            alpha: 0.5,
            width: 0.01,
            x0: None,
            radius: None,
            level_alpha: 1.1,
            eps: None,
            samples: 720,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicConfig {
    pub params: HarmonicParams,
    /// Subtract the ellipse null-case noise from solved fields.
    pub ellipse_floor: bool,
    /// Tolerance of the pure-power check.
    pub harmonicity_tol: f64,
    /// Directions scanned for the radial sign quantity at `ρ / 4`.
    pub directions: usize,
    /// Leading-term fit range; defaults to `[ρ/80, ρ/8]`.
    pub fit_range: Option<[f64; 2]>,
    pub fit_points: usize,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        Self {
            params: HarmonicParams::default(),
            ellipse_floor: true,
            harmonicity_tol: 1e-3,
            directions: 64,
            fit_range: None,
            fit_points: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Name of the preset the domain came from, if any.
    pub preset: Option<Preset>,
    pub domain: Option<Domain>,
    pub h: f64,
    pub solver_tol: f64,
    pub field: FieldSource,
    pub analyze: AnalyzeConfig,
    pub harmonic: HarmonicConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            domain: None,
            h: 1.0 / 64.0,
            solver_tol: DEFAULT_TOL,
            field: FieldSource::Auto,
            analyze: AnalyzeConfig::default(),
            harmonic: HarmonicConfig::default(),
            out_dir: PathBuf::from("torsion-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn domain(&self) -> Result<&Domain, CliError> {
        self.domain
            .as_ref()
            .ok_or_else(|| CliError::Usage("no domain: pass --preset or --domain".into()))
    }

    /// Rejects nonpositive tolerances and malformed domains.
    pub fn validate(&self) -> Result<(), CliError> {
        self.domain()?.validate()?;
        let positive = [
            ("h", self.h),
            ("solver_tol", self.solver_tol),
            ("analyze.options.tol", self.analyze.options.tol),
            ("analyze.alpha", self.analyze.alpha),
            ("analyze.width", self.analyze.width),
            ("harmonic.harmonicity_tol", self.harmonic.harmonicity_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if self.analyze.options.pairs == 0 || self.analyze.samples == 0 {
            return Err(CliError::Usage("sample counts must be positive".into()));
        }
        if self.harmonic.directions == 0 || self.harmonic.fit_points < 2 {
            return Err(CliError::Usage(
                "harmonic sample counts are too small".into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form torsion function of a domain, when one is known.
pub fn closed_form(domain: &Domain) -> Option<SmoothField> {
    match domain {
        Domain::Disk { center, radius } => ball_torsion(center, *radius).ok(),
        Domain::Ellipse {
            center,
            coefficients,
            radius,
        } => ellipsoid_torsion(center, coefficients, *radius).ok(),
        Domain::Polygon { vertices } if is_paper_triangle(vertices) => Some(triangle_torsion()),
        _ => None,
    }
}

/// Matches the paper triangle up to rounding of its vertices.
fn is_paper_triangle(vertices: &[[f64; 2]]) -> bool {
    let Some(reference) = Domain::paper_triangle().vertices() else {
        return false;
    };
    vertices.len() == reference.len()
        && vertices
            .iter()
            .zip(&reference)
            .all(|(v, r)| (v[0] - r.x).abs() < 1e-9 && (v[1] - r.y).abs() < 1e-9)
}

/// Parses `x,y`.
pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|e| format!("{a}: {e}"))?,
            b.parse().map_err(|e| format!("{b}: {e}"))?,
        ]),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}
