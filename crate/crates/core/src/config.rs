//! Run configuration: flat TOML sections with defaults for every field.
//!
//! ```toml
//! [model]
//! omega1 = 12500.0
//! omega2 = 12500.0
//! coupling = 100.0
//!
//! [bath]
//! xi = 0.001
//!
//! [run]
//! experiment = "beatmap"
//! ```
//!
//! Missing keys take the homodimer defaults; unknown keys are rejected with
//! the offending line and column.

use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::disorder::{DisorderSpec, Scheme};
use crate::error::{Error, Result};
use crate::model::DimerParams;
use crate::response::{check_nyquist, DipoleConfig};
use crate::units::nyquist_wavenumber;

/// Dimer parameters as written in a config file (site labels as given).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub omega1: f64,
    pub omega2: f64,
    pub coupling: f64,
    /// Common dipole magnitude.
    pub dipole: f64,
    /// Direction of site 1's transition dipole.
    pub d1: [f64; 3],
    /// Direction of site 2's transition dipole.
    pub d2: [f64; 3],
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = DimerParams::homodimer();
        let d = DipoleConfig::default();
        Self { omega1: p.omega1, omega2: p.omega2, coupling: p.coupling, dipole: 1.0, d1: d.d1, d2: d.d2 }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<DimerParams> {
        DimerParams::with_dipole(self.omega1, self.omega2, self.coupling, self.dipole)
    }

    /// Dipole directions normalized to unit length (magnitude comes from `dipole`).
    pub fn dipoles(&self) -> Result<DipoleConfig> {
        let unit = |v: [f64; 3], n: &str| -> Result<[f64; 3]> {
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::InvalidParameter(format!("model.{n} must be a non-zero finite vector")));
            }
            Ok(v.map(|x| x / len))
        };
        Ok(DipoleConfig { d1: unit(self.d1, "d1")?, d2: unit(self.d2, "d2")? })
    }
}

/// How 2D spectra are transformed from the time domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Exact half-line transforms of the mode expansion.
    Exact,
    /// Discrete transforms of sampled rotating-frame signals.
    Discrete,
}

/// Time and frequency grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// t₁ and t₃ step (fs) for the discrete route.
    pub t_step: f64,
    /// t₁ and t₃ sample count for the discrete route.
    pub t_points: usize,
    /// t₂ step (fs) for transients and 2D spectra.
    pub t2_step: f64,
    pub t2_points: usize,
    /// Waiting times (fs) at which 2D spectra are written.
    pub t2_slices: Vec<f64>,
    /// Rotating-frame carrier (cm⁻¹).
    pub carrier: f64,
    /// ω₁ and ω₃ range (cm⁻¹).
    pub w_min: f64,
    pub w_max: f64,
    pub w_points: usize,
    /// ω₂ range (cm⁻¹).
    pub w2_min: f64,
    pub w2_max: f64,
    pub w2_points: usize,
    /// Absorption ω range (cm⁻¹).
    pub abs_min: f64,
    pub abs_max: f64,
    pub abs_points: usize,
    pub route: Route,
    /// Finite t₂ window (fs) for beating maps; 0 means an infinite window.
    pub t2_window: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t_step: 4.0,
            t_points: 256,
            t2_step: 10.0,
            t2_points: 201,
            t2_slices: vec![0.0],
            carrier: 12500.0,
            w_min: 12100.0,
            w_max: 12900.0,
            w_points: 161,
            w2_min: -450.0,
            w2_max: 450.0,
            w2_points: 181,
            abs_min: 12000.0,
            abs_max: 13000.0,
            abs_points: 2001,
            route: Route::Exact,
            t2_window: 0.0,
        }
    }
}

impl GridSection {
    pub fn w(&self) -> Vec<f64> {
        crate::response::linspace(self.w_min, self.w_max, self.w_points)
    }

    pub fn w2(&self) -> Vec<f64> {
        crate::response::linspace(self.w2_min, self.w2_max, self.w2_points)
    }

    pub fn abs_w(&self) -> Vec<f64> {
        crate::response::linspace(self.abs_min, self.abs_max, self.abs_points)
    }

    pub fn t2(&self) -> Vec<f64> {
        (0..self.t2_points).map(|i| i as f64 * self.t2_step).collect()
    }

    pub fn window(&self) -> Option<f64> {
        (self.t2_window > 0.0).then_some(self.t2_window)
    }
}

/// Execution options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// absorption | rephasing2d | nonrephasing2d | beatmap | pathway-report | figure:N
    pub experiment: String,
    pub out: String,
    pub secular: bool,
    /// Oscillatory cutoff on |Im υ| in cm⁻¹.
    pub cutoff: f64,
    /// Normalize written spectra to max |S| = 1.
    pub normalize: bool,
    pub csv: bool,
    /// Worker threads (0 = automatic).
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            experiment: "absorption".into(),
            out: "out".into(),
            secular: false,
            cutoff: 1.0,
            normalize: true,
            csv: false,
            threads: 0,
        }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub bath: BathSection,
    pub disorder: DisorderSpec,
    pub grid: GridSection,
    pub run: RunSection,
}

/// Bath parameters as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub lambda: f64,
    /// Bath relaxation rate γ in fs⁻¹.
    pub gamma: f64,
    pub omega_s: f64,
    pub temperature: f64,
    /// Correlation length ξ in units of `distance`.
    pub xi: f64,
    pub distance: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        let b = BathSpec::default();
        Self { lambda: b.lambda, gamma: b.gamma, omega_s: b.omega_s, temperature: b.temperature, xi: b.xi, distance: b.distance }
    }
}

impl BathSection {
    pub fn spec(&self) -> BathSpec {
        BathSpec {
            lambda: self.lambda,
            gamma: self.gamma,
            omega_s: self.omega_s,
            temperature: self.temperature,
            xi: self.xi,
            distance: self.distance,
        }
    }
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warning,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub level: Level,
    /// Dotted field path, e.g. `grid.t_step`.
    pub field: String,
    pub message: String,
}

/// Experiments understood by the CLI.
pub const EXPERIMENTS: [&str; 10] = [
    "absorption",
    "rephasing2d",
    "nonrephasing2d",
    "beatmap",
    "pathway-report",
    "figure:2",
    "figure:4",
    "figure:5",
    "figure:6",
    "figure:7",
];

impl RunConfig {
    /// Parses TOML text; syntax errors and unknown fields carry line/column.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks ranges, grid sampling and disorder sanity.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = Vec::new();
        let mut err = |field: &str, message: String| d.push(Diagnostic { level: Level::Error, field: field.into(), message });
        let m = &self.model;
        for (f, v) in [("model.omega1", m.omega1), ("model.omega2", m.omega2), ("model.coupling", m.coupling), ("model.dipole", m.dipole)] {
            if !v.is_finite() {
                err(f, format!("must be finite, got {v}"));
            }
        }
        if !(m.dipole > 0.0) {
            err("model.dipole", "must be > 0".into());
        }
        if let Err(e) = m.dipoles() {
            err("model.d1/d2", e.to_string());
        }
        let b = &self.bath;
        if !(b.lambda >= 0.0 && b.lambda.is_finite()) {
            err("bath.lambda", format!("must be >= 0, got {}", b.lambda));
        }
        if !(b.gamma > 0.0 && b.gamma.is_finite()) {
            err("bath.gamma", format!("must be > 0, got {}", b.gamma));
        }
        if !b.omega_s.is_finite() {
            err("bath.omega_s", "must be finite".into());
        }
        if !(b.temperature > 0.0 && b.temperature.is_finite()) {
            err("bath.temperature", format!("must be > 0, got {}", b.temperature));
        }
        if !(b.xi > 0.0) {
            err("bath.xi", format!("must be > 0 (d/ξ is undefined otherwise), got {}", b.xi));
        }
        if !(b.distance >= 0.0 && b.distance.is_finite()) {
            err("bath.distance", format!("must be >= 0, got {}", b.distance));
        }
        let s = &self.disorder;
        if !(s.fwhm >= 0.0 && s.fwhm.is_finite()) {
            err("disorder.fwhm", format!("must be >= 0, got {}", s.fwhm));
        }
        if s.samples == 0 {
            err("disorder.samples", "must be >= 1".into());
        }
        for (field, n) in [("disorder.nodes", s.nodes), ("disorder.delta_points", s.delta_points)] {
            if n == 0 {
                err(field, "must be >= 1".into());
            }
        }
        if s.magnitude_average && s.scheme == Scheme::Split && s.fwhm > 0.0 {
            err("disorder.magnitude_average", "needs explicit realizations; use scheme = \"monte-carlo\" or \"gauss-hermite\"".into());
        }
        let g = &self.grid;
        if !(g.t_step > 0.0) || g.t_points < 2 {
            err("grid.t_step", "t grid needs step > 0 and >= 2 points".into());
        }
        if !(g.t2_step > 0.0) || g.t2_points < 1 {
            err("grid.t2_step", "t2 grid needs step > 0 and >= 1 point".into());
        }
        for (f, lo, hi, n) in [
            ("grid.w", g.w_min, g.w_max, g.w_points),
            ("grid.w2", g.w2_min, g.w2_max, g.w2_points),
            ("grid.abs", g.abs_min, g.abs_max, g.abs_points),
        ] {
            if !(hi > lo) || n < 2 {
                err(f, format!("range must satisfy max > min with >= 2 points (got [{lo}, {hi}], {n})"));
            }
        }
        if g.t2_slices.is_empty() || g.t2_slices.iter().any(|&t| !(t >= 0.0)) || g.t2_slices.windows(2).any(|w| w[1] <= w[0]) {
            err("grid.t2_slices", "must be a non-empty, strictly increasing list of times >= 0".into());
        }
        if g.route == Route::Discrete && self.disorder.fwhm > 0.0 {
            err("grid.route", "the discrete route does not support disorder ensembles; use route = \"exact\"".into());
        }
        if !(g.t2_window >= 0.0) {
            err("grid.t2_window", "must be >= 0 (0 = infinite)".into());
        }
        if !(self.run.cutoff > 0.0) {
            err("run.cutoff", "must be > 0".into());
        }
        if !EXPERIMENTS.contains(&self.run.experiment.as_str()) {
            err("run.experiment", format!("unknown experiment '{}'; expected one of {}", self.run.experiment, EXPERIMENTS.join(", ")));
        }
        if g.t_step > 0.0 {
            if let Ok(p) = m.params() {
                let basis = crate::model::exciton_basis(&p);
                if let Err(e) = check_nyquist(&basis, g.t_step, g.carrier) {
                    err("grid.t_step", format!("{e}; set grid.carrier near the transitions or reduce the step (Nyquist {:.1} cm-1)", nyquist_wavenumber(g.t_step)));
                }
            }
        }
        if let Ok(p) = m.params() {
            let split = crate::model::exciton_basis(&p).splitting();
            let need = 1.5 * split;
            let beat = matches!(self.run.experiment.as_str(), "beatmap" | "figure:4" | "figure:5" | "figure:6" | "figure:7");
            if beat && (g.w2_min > -need || g.w2_max < need) {
                err("grid.w2_min", format!("beating maps need the ω₂ grid to cover ±{need:.1} cm-1"));
            }
        }
        d
    }

    /// Errors only, joined into one message.
    pub fn check(&self) -> Result<()> {
        let errs: Vec<String> = self.validate().into_iter().filter(|d| d.level == Level::Error).map(|d| format!("{}: {}", d.field, d.message)).collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}
