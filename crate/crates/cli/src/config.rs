//! Run configuration: a single TOML document per run. Parsing is strict
//! (unknown keys are errors), resolution fills every field the chosen
//! experiment consumes with that experiment's default, and the resolved
//! document is written back next to the records so a run is reproducible
//! from its own output directory.

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use lerwlab_core::field::{NuField, NuShape};
use serde::{Deserialize, Serialize};

/// The named experiments, one per family of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    HittingTriangle,
    CorrelatorCheck,
    CumulantCheck,
    EndpointDensity,
    LoewnerExactness,
    ZipperRoundtrip,
    MartingaleTest,
    DrivingStatistics,
    ToyAppendix,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::HittingTriangle,
        Experiment::CorrelatorCheck,
        Experiment::CumulantCheck,
        Experiment::EndpointDensity,
        Experiment::LoewnerExactness,
        Experiment::ZipperRoundtrip,
        Experiment::MartingaleTest,
        Experiment::DrivingStatistics,
        Experiment::ToyAppendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::HittingTriangle => "hitting-triangle",
            Experiment::CorrelatorCheck => "correlator-check",
            Experiment::CumulantCheck => "cumulant-check",
            Experiment::EndpointDensity => "endpoint-density",
            Experiment::LoewnerExactness => "loewner-exactness",
            Experiment::ZipperRoundtrip => "zipper-roundtrip",
            Experiment::MartingaleTest => "martingale-test",
            Experiment::DrivingStatistics => "driving-statistics",
            Experiment::ToyAppendix => "toy-appendix",
        }
    }

    pub fn parse(s: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }

    /// One-line description for `list-experiments`.
    pub fn blurb(self) -> &'static str {
        match self {
            Experiment::HittingTriangle => {
                "subinterval hitting probability three ways: closed form (critical), \
                 grid PDE solve, and weighted-walk Monte Carlo"
            }
            Experiment::CorrelatorCheck => {
                "conditional local-time moments of lattice walks against the exact \
                 one- and two-point correlators"
            }
            Experiment::CumulantCheck => {
                "factorization of correlators into connected chains plus loop cycles, \
                 including the recorded cycle-sign convention"
            }
            Experiment::EndpointDensity => {
                "landing histogram of sampled dipolar paths against the closed-form \
                 endpoint density, plus its quadrature and ratio identities"
            }
            Experiment::LoewnerExactness => {
                "zero-driving Loewner flow against the explicit sqrt(z^2 + 4t) map \
                 and its derivative"
            }
            Experiment::ZipperRoundtrip => {
                "driving -> trace -> driving round trip: RMS error and its halving \
                 under vertex-count doubling"
            }
            Experiment::MartingaleTest => {
                "one-point-function martingale checks along sampled paths, the bubble \
                 vs conformal-radius identity, and the two drift-correction routes"
            }
            Experiment::DrivingStatistics => {
                "quadratic variation of sampled driving and the pooled diffusivity of \
                 driving extracted from loop-erased lattice walks"
            }
            Experiment::ToyAppendix => {
                "one-dimensional weighted-walk closed forms vs enumeration and the \
                 mean-one reweighting checks"
            }
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometry knobs; each experiment consumes the subset it documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// source point on the real axis
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// target interval on the real axis, [lo, hi]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub universe: Option<[f64; 2]>,
    /// subinterval of the universe, [lo, hi]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub: Option<[f64; 2]>,
    /// chordal normalization point for driving extraction
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_inf: Option<f64>,
    /// lattice spacing / PDE grid spacing
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
    /// truncation box [x_lo, x_hi, y_hi]; the lower edge is the real axis
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_: Option<[f64; 3]>,
}

/// Killing-field specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    /// one of: constant | disk | gaussian-truncated
    pub shape: String,
    pub amplitude: f64,
    /// center [x, y] for disk and gaussian-truncated
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    /// disk radius
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// support box [x_lo, x_hi, y_lo, y_hi] for constant and gaussian-truncated
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_: Option<[f64; 4]>,
    /// gaussian width
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

/// Sampling budgets; each experiment consumes the subset it documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesSection {
    /// lattice walk count (attempts, not accepted curves)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_walks: Option<u64>,
    /// sampled continuum path count
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<u64>,
    /// histogram bin count
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bins: Option<usize>,
    /// step count for deterministic flows / vertex count for the round trip
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// SDE / flow time step
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// sampling horizon in capacity time
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

/// One run = one experiment + its knobs. Serializes back to the same TOML
/// shape it was parsed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// rayon worker count; 0 or absent picks the runtime default. Never
    /// affects results: sample streams are indexed, not shared.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_default_geometry")]
    pub geometry: GeometrySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSection>,
    #[serde(default, skip_serializing_if = "is_default_samples")]
    pub samples: SamplesSection,
}

fn is_default_geometry(g: &GeometrySection) -> bool {
    *g == GeometrySection::default()
}

fn is_default_samples(s: &SamplesSection) -> bool {
    *s == SamplesSection::default()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).context("config does not parse as a run document")?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("config does not serialize")
    }

    pub fn experiment(&self) -> Result<Experiment> {
        match Experiment::parse(&self.experiment) {
            Some(e) => Ok(e),
            None => {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                bail!(
                    "unknown experiment '{}'; expected one of: {}",
                    self.experiment,
                    names.join(", ")
                )
            }
        }
    }

    /// Builds the killing field named by the `[field]` section, or the zero
    /// field when the section is absent. All shape errors name the field.
    pub fn nu_field(&self) -> Result<NuField> {
        let Some(f) = &self.field else {
            return Ok(NuField::zero());
        };
        let field = match f.shape.as_str() {
            "constant" => {
                let b = f.box_.context("field.box = [x_lo, x_hi, y_lo, y_hi] required for shape = \"constant\"")?;
                NuField::constant_box(f.amplitude, b[0], b[1], b[2], b[3])
            }
            "disk" => {
                let c = f.center.context("field.center = [x, y] required for shape = \"disk\"")?;
                let r = f.radius.context("field.radius required for shape = \"disk\"")?;
                NuField::disk(f.amplitude, c[0], c[1], r)
            }
            "gaussian-truncated" => {
                let c = f
                    .center
                    .context("field.center = [x, y] required for shape = \"gaussian-truncated\"")?;
                let w = f.width.context("field.width required for shape = \"gaussian-truncated\"")?;
                let b = f.box_.context(
                    "field.box = [x_lo, x_hi, y_lo, y_hi] required for shape = \"gaussian-truncated\"",
                )?;
                NuField::new(
                    f.amplitude,
                    NuShape::GaussianBox {
                        center_x: c[0],
                        center_y: c[1],
                        sigma: w,
                        x0: b[0],
                        x1: b[1],
                        y0: b[2],
                        y1: b[3],
                    },
                )
            }
            other => bail!(
                "field.shape = \"{other}\" is not a known shape; expected constant | disk | gaussian-truncated"
            ),
        };
        field.context("field section rejected")
    }

    /// Fills every knob the experiment consumes with its default and
    /// validates the result, so the emitted document is self-describing.
    /// Knobs the experiment never reads are left untouched.
    pub fn resolved(&self) -> Result<ExperimentConfig> {
        let exp = self.experiment()?;
        let mut out = self.clone();
        out.seed = Some(self.seed.unwrap_or(DEFAULT_SEED));
        out.workers = Some(self.workers.unwrap_or(0));
        let g = &mut out.geometry;
        let s = &mut out.samples;
        match exp {
            Experiment::HittingTriangle => {
                g.x0.get_or_insert(0.0);
                g.universe.get_or_insert([1.0, 3.0]);
                g.sub.get_or_insert([1.0, 2.0]);
                g.mesh.get_or_insert(1.0 / 64.0);
                g.box_.get_or_insert([-3.0, 6.0, 4.0]);
                s.n_walks.get_or_insert(100_000);
            }
            Experiment::CorrelatorCheck => {
                g.x0.get_or_insert(0.0);
                g.universe.get_or_insert([0.25, 4.5]);
                g.mesh.get_or_insert(1.0 / 64.0);
                g.box_.get_or_insert([-5.0, 5.0, 5.0]);
                s.n_walks.get_or_insert(1_000_000);
            }
            Experiment::CumulantCheck => {
                g.x0.get_or_insert(0.0);
                g.universe.get_or_insert([1.0, 3.0]);
                g.x_inf.get_or_insert(4.0);
            }
            Experiment::EndpointDensity => {
                g.x0.get_or_insert(0.0);
                g.universe.get_or_insert([1.0, 3.0]);
                s.n_paths.get_or_insert(10_000);
                s.n_bins.get_or_insert(16);
                s.t_max.get_or_insert(400.0);
                s.dt.get_or_insert(1e-3);
            }
            Experiment::LoewnerExactness => {
                s.n_steps.get_or_insert(2000);
                s.dt.get_or_insert(5e-4);
            }
            Experiment::ZipperRoundtrip => {
                g.x_inf.get_or_insert(8.0);
                s.n_steps.get_or_insert(1000);
            }
            Experiment::MartingaleTest => {
                g.x0.get_or_insert(0.0);
                g.universe.get_or_insert([1.0, 3.0]);
                s.n_paths.get_or_insert(10_000);
                s.n_walks.get_or_insert(30_000);
                s.dt.get_or_insert(2e-4);
                s.t_max.get_or_insert(0.2);
            }
            Experiment::DrivingStatistics => {
                g.x0.get_or_insert(0.0);
                g.universe.get_or_insert([1.0, 3.0]);
                g.mesh.get_or_insert(1.0 / 64.0);
                g.box_.get_or_insert([-3.0, 5.0, 2.0]);
                s.n_paths.get_or_insert(5_000);
                s.n_walks.get_or_insert(5_000_000);
                s.dt.get_or_insert(1e-4);
                s.t_max.get_or_insert(0.2);
            }
            Experiment::ToyAppendix => {
                s.n_paths.get_or_insert(50_000);
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Cheap structural validation: everything an experiment will hand to
    /// the core library is constructed once here, so a bad document fails
    /// before any sampling starts.
    fn validate(&self) -> Result<()> {
        self.experiment()?;
        self.nu_field()?;
        if let Some([lo, hi]) = self.geometry.universe {
            if !(lo < hi) {
                bail!("geometry.universe = [{lo}, {hi}] must satisfy lo < hi");
            }
        }
        if let Some([lo, hi]) = self.geometry.sub {
            if !(lo < hi) {
                bail!("geometry.sub = [{lo}, {hi}] must satisfy lo < hi");
            }
        }
        if let Some(mesh) = self.geometry.mesh {
            if !(mesh > 0.0 && mesh.is_finite()) {
                bail!("geometry.mesh = {mesh} must be positive");
            }
        }
        if let Some([x_lo, x_hi, y_hi]) = self.geometry.box_ {
            if !(x_lo < x_hi && y_hi > 0.0) {
                bail!("geometry.box = [{x_lo}, {x_hi}, {y_hi}] must have x_lo < x_hi and y_hi > 0");
            }
        }
        if let Some(dt) = self.samples.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("samples.dt = {dt} must be positive");
            }
        }
        if let Some(t_max) = self.samples.t_max {
            if !(t_max > 0.0 && t_max.is_finite()) {
                bail!("samples.t_max = {t_max} must be positive");
            }
        }
        Ok(())
    }
}

pub const DEFAULT_SEED: u64 = 7;
