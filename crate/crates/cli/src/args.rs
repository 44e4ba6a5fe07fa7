//! Command-line flags and their merge into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use torsion_core::geometry::Domain;

use crate::config::{parse_pair, Check, FieldSource, Preset, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "torsion-lab",
    version,
    about = "Torsion functions of planar convex domains: solve, test power concavity and property (A), expand about the maximum"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the torsion problem; writes summary.json and field.csv.
    Solve(SolveArgs),
    /// Concavity checks; writes report.json.
    Analyze(AnalyzeArgs),
    /// Circular-harmonic decomposition about the maximum; writes harmonic.json.
    Harmonic(HarmonicArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Named domain.
    #[arg(long, value_enum, conflicts_with = "domain")]
    pub preset: Option<Preset>,
    /// Ellipse coefficients `a1,a2` with `a1 + a2 = 2`.
    #[arg(long, value_parser = parse_pair)]
    pub a: Option<[f64; 2]>,
    /// Disk or ellipse radius, or half side of the square.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Domain as a JSON document, inline or a file path.
    #[arg(long)]
    pub domain: Option<String>,
    /// JSON configuration applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid spacing.
    #[arg(long = "h")]
    pub h: Option<f64>,
    /// Solver residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Closed form, solved field, or closed form when available.
    #[arg(long, value_enum)]
    pub field: Option<FieldSource>,
    /// Checks to run (repeatable or comma-separated); all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub check: Vec<Check>,
    /// Exponent of the power check.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Final bracket width of alpha-star.
    #[arg(long)]
    pub width: Option<f64>,
    /// Hessian sampling margin from the boundary.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Relative tolerance of the checks.
    #[arg(long)]
    pub check_tol: Option<f64>,
    /// Random midpoint pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Centre `x,y` of local-property-a.
    #[arg(long, value_parser = parse_pair)]
    pub x0: Option<[f64; 2]>,
    /// Ball radius of local-property-a.
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Exponent of level-set-bound (above 1).
    #[arg(long)]
    pub level_alpha: Option<f64>,
    /// Level of level-set-bound.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Boundary samples of serrin.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HarmonicArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub field: Option<FieldSource>,
    #[arg(long)]
    pub n_radii: Option<usize>,
    #[arg(long)]
    pub n_angles: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Outer sampling radius.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Keep solved-field thresholds at their analytic floor.
    #[arg(long)]
    pub no_ellipse_floor: bool,
    #[arg(long)]
    pub harmonicity_tol: Option<f64>,
    /// Directions scanned for the radial sign quantity.
    #[arg(long)]
    pub directions: Option<usize>,
    /// Leading-term fit range `lo,hi`.
    #[arg(long, value_parser = parse_pair)]
    pub fit_range: Option<[f64; 2]>,
    #[arg(long)]
    pub fit_points: Option<usize>,
}

fn read_domain(arg: &str) -> Result<Domain, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Usage(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("domain: {e}")))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(p) = self.preset {
            cfg.preset = Some(p);
            cfg.domain = Some(p.domain(self.a, self.radius)?);
        } else if let Some(d) = &self.domain {
            cfg.preset = None;
            cfg.domain = Some(read_domain(d)?);
        } else if self.a.is_some() || self.radius.is_some() {
            return Err(CliError::Usage("--a and --radius need --preset".into()));
        }
        set(&mut cfg.h, self.h);
        set(&mut cfg.solver_tol, self.tol);
        set(&mut cfg.out_dir, self.out.clone());
        Ok(cfg)
    }
}

impl Command {
    /// Merges defaults, the configuration file and the flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let cfg = match self {
            Command::Solve(a) => a.common.resolve()?,
            Command::Analyze(a) => {
                let mut cfg = a.common.resolve()?;
                set(&mut cfg.field, a.field);
                let c = &mut cfg.analyze;
                if !a.check.is_empty() {
                    c.checks = a.check.clone();
                }
                set(&mut c.alpha, a.alpha);
                set(&mut c.width, a.width);
                if a.margin.is_some() {
                    c.options.margin = a.margin;
                }
                set(&mut c.options.tol, a.check_tol);
                set(&mut c.options.pairs, a.pairs);
                set(&mut c.options.seed, a.seed);
                if a.x0.is_some() {
                    c.x0 = a.x0;
                }
                if a.ball_radius.is_some() {
                    c.radius = a.ball_radius;
                }
                set(&mut c.level_alpha, a.level_alpha);
                if a.eps.is_some() {
                    c.eps = a.eps;
                }
                set(&mut c.samples, a.samples);
                cfg
            }
            Command::Harmonic(a) => {
                let mut cfg = a.common.resolve()?;
                set(&mut cfg.field, a.field);
                let c = &mut cfg.harmonic;
                set(&mut c.params.n_radii, a.n_radii);
                set(&mut c.params.n_angles, a.n_angles);
                set(&mut c.params.k_max, a.k_max);
                if a.rho.is_some() {
                    c.params.rho = a.rho;
                }
                if a.no_ellipse_floor {
                    c.ellipse_floor = false;
                }
                set(&mut c.harmonicity_tol, a.harmonicity_tol);
                set(&mut c.directions, a.directions);
                if a.fit_range.is_some() {
                    c.fit_range = a.fit_range;
                }
                set(&mut c.fit_points, a.fit_points);
                cfg
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
