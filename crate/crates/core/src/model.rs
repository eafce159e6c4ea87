//! Electronic dimer Hamiltonian and its exciton eigensystem.
//!
//! Hilbert-space ordering is fixed throughout the crate as
//! `{|g₁g₂⟩, |e₁g₂⟩, |g₁e₂⟩, |e₁e₂⟩}` in the site basis and
//! `{|g⟩, |ε₁⟩, |ε₂⟩, |f⟩}` in the exciton basis.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Site energies, electronic coupling and transition-dipole magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerParams {
    /// Site energy Ω₁ in cm⁻¹ (always ≥ Ω₂ after construction).
    pub omega1: f64,
    /// Site energy Ω₂ in cm⁻¹.
    pub omega2: f64,
    /// Electronic coupling J in cm⁻¹.
    pub coupling: f64,
    /// Common transition-dipole magnitude |d⃗| (arbitrary units).
    pub dipole: f64,
    /// True when the caller's site labels were exchanged to enforce Ω₁ ≥ Ω₂.
    #[serde(default)]
    pub swapped: bool,
}

impl DimerParams {
    /// Builds parameters, relabelling the sites so that Ω₁ ≥ Ω₂.
    pub fn new(omega1: f64, omega2: f64, coupling: f64) -> Result<Self> {
        Self::with_dipole(omega1, omega2, coupling, 1.0)
    }

    pub fn with_dipole(omega1: f64, omega2: f64, coupling: f64, dipole: f64) -> Result<Self> {
        for (name, v) in [("omega1", omega1), ("omega2", omega2), ("coupling", coupling), ("dipole", dipole)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        let swapped = omega1 < omega2;
        let (omega1, omega2) = if swapped { (omega2, omega1) } else { (omega1, omega2) };
        Ok(Self { omega1, omega2, coupling, dipole, swapped })
    }

    /// Homodimer used for the correlation sweeps: Ω₁ = Ω₂ = 12500, J = 100.
    pub fn homodimer() -> Self {
        Self { omega1: 12500.0, omega2: 12500.0, coupling: 100.0, dipole: 1.0, swapped: false }
    }

    /// Heterodimer: Ω₁ = 12600, Ω₂ = 12400, J = 100.
    pub fn heterodimer() -> Self {
        Self { omega1: 12600.0, omega2: 12400.0, coupling: 100.0, dipole: 1.0, swapped: false }
    }
}

impl Default for DimerParams {
    fn default() -> Self {
        Self::homodimer()
    }
}

/// Exciton eigensystem of the dimer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitonBasis {
    /// Mixing angle θ = ½·atan2(2J, Ω₁−Ω₂).
    pub theta: f64,
    /// sin 2θ = 2J/Δε, computed without going through θ.
    pub sin2theta: f64,
    /// cos 2θ = (Ω₁−Ω₂)/Δε; exactly 0 for a homodimer.
    pub cos2theta: f64,
    /// Eigenenergies `[ε_g, ε₁, ε₂, ε_f]` in cm⁻¹.
    pub energies: [f64; 4],
    /// Columns are the exciton states expressed in the site basis.
    pub vectors: Matrix4<f64>,
}

impl ExcitonBasis {
    pub fn eps1(&self) -> f64 {
        self.energies[1]
    }

    pub fn eps2(&self) -> f64 {
        self.energies[2]
    }

    pub fn eps_f(&self) -> f64 {
        self.energies[3]
    }

    /// Exciton splitting Δε = ε₂ − ε₁.
    pub fn splitting(&self) -> f64 {
        self.energies[2] - self.energies[1]
    }

    /// Rotates a site-basis operator into the exciton basis, Vᵀ A V.
    pub fn to_exciton(&self, a: &Matrix4<f64>) -> Matrix4<f64> {
        self.vectors.transpose() * a * self.vectors
    }
}

/// Site-basis Hamiltonian `diag(0, Ω₁, Ω₂, Ω₁+Ω₂)` plus the J coupling.
pub fn hamiltonian_matrix(p: &DimerParams) -> Matrix4<f64> {
    let mut h = Matrix4::zeros();
    h[(1, 1)] = p.omega1;
    h[(2, 2)] = p.omega2;
    h[(3, 3)] = p.omega1 + p.omega2;
    h[(1, 2)] = p.coupling;
    h[(2, 1)] = p.coupling;
    h
}

/// Closed-form exciton eigensystem.
///
/// |ε₁⟩ = −sinθ|e₁g₂⟩ + cosθ|g₁e₂⟩ and |ε₂⟩ = cosθ|e₁g₂⟩ + sinθ|g₁e₂⟩;
/// the biexciton is |f⟩ = |e₁e₂⟩ with ε_f = ε₁ + ε₂.
pub fn exciton_basis(p: &DimerParams) -> ExcitonBasis {
    let delta = p.omega1 - p.omega2;
    let theta = 0.5 * (2.0 * p.coupling).atan2(delta);
    let mean = 0.5 * (p.omega1 + p.omega2);
    let half = 0.5 * delta.hypot(2.0 * p.coupling);
    let (e1, e2) = (mean - half, mean + half);
    let (s, c) = theta.sin_cos();
    let (sin2theta, cos2theta) = if half > 0.0 { (p.coupling / half, 0.5 * delta / half) } else { (0.0, 1.0) };
    #[rustfmt::skip]
    let vectors = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0,  -s,   c, 0.0,
        0.0,   c,   s, 0.0,
        0.0, 0.0, 0.0, 1.0,
    );
    ExcitonBasis { theta, sin2theta, cos2theta, energies: [0.0, e1, e2, p.omega1 + p.omega2], vectors }
}

/// Excitation number of each exciton-basis level.
pub const EXCITATION: [usize; 4] = [0, 1, 1, 2];
