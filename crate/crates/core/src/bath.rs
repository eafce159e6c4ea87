//! Shifted Ohmic spectral density, thermal spectral function and the
//! spatially correlated cross-spectral functions C_jk(ω).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{rate_to_wavenumber, thermal_energy, KAPPA};

/// Phonon bath parameters shared by both sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Reorganization energy λ in cm⁻¹.
    pub lambda: f64,
    /// Bath relaxation rate γ in fs⁻¹.
    pub gamma: f64,
    /// Spectral-density shift Ω_s in cm⁻¹.
    pub omega_s: f64,
    /// Temperature in K.
    pub temperature: f64,
    /// Correlation length ξ (same units as `distance`).
    pub xi: f64,
    /// Inter-site distance d.
    pub distance: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self { lambda: 50.0, gamma: 1.0 / 50.0, omega_s: 200.0, temperature: 77.0, xi: 1e-3, distance: 1.0 }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be finite and > 0");
        }
        if !self.omega_s.is_finite() {
            return bad("omega_s must be finite");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be > 0");
        }
        if !(self.xi > 0.0) {
            return bad("xi must be > 0");
        }
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            return bad("distance must be finite and >= 0");
        }
        Ok(())
    }

    /// Returns a copy with ξ set as a multiple of the site distance.
    pub fn with_xi_over_d(mut self, ratio: f64) -> Self {
        self.xi = ratio * self.distance;
        self
    }

    /// ħγ in cm⁻¹.
    pub fn gamma_wavenumber(&self) -> f64 {
        rate_to_wavenumber(self.gamma)
    }

    /// Spatial correlation factor e^(−d/ξ).
    pub fn correlation(&self) -> f64 {
        (-self.distance / self.xi).exp()
    }

    /// Spectral density 𝒥(ω) in cm⁻¹ for ω ≥ 0 (cm⁻¹).
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Err(Error::InvalidParameter(format!("spectral density needs omega >= 0, got {omega}")));
        }
        Ok(self.density(omega))
    }

    fn density(&self, w: f64) -> f64 {
        let g = self.gamma_wavenumber();
        let (dm, dp) = (w - self.omega_s, w + self.omega_s);
        self.lambda / std::f64::consts::PI * (g * w / (g * g + dm * dm) + g * w / (g * g + dp * dp))
    }

    /// Spectral function C(ω) expressed as an energy in cm⁻¹.
    ///
    /// C(ω) = 2π𝒥(ω)(n(ω)+1) for ω > 0, 2π𝒥(|ω|)n(|ω|) for ω < 0, and the
    /// analytic limit 4λγk_BT/(γ²+Ω_s²) at ω = 0.
    pub fn spectral_function_cm(&self, omega: f64) -> f64 {
        let kt = thermal_energy(self.temperature);
        let two_pi = 2.0 * std::f64::consts::PI;
        if omega == 0.0 {
            let g = self.gamma_wavenumber();
            return 4.0 * self.lambda * g * kt / (g * g + self.omega_s * self.omega_s);
        }
        let a = omega.abs();
        let n = 1.0 / (a / kt).exp_m1();
        if omega > 0.0 {
            two_pi * self.density(a) * (n + 1.0)
        } else {
            two_pi * self.density(a) * n
        }
    }

    /// Spectral function C(ω) as a rate in rad/fs.
    pub fn spectral_function(&self, omega: f64) -> f64 {
        KAPPA * self.spectral_function_cm(omega)
    }

    /// Cross-spectral function C_jk(ω) in rad/fs for sites j, k ∈ {0, 1}.
    pub fn cross_spectral(&self, j: usize, k: usize, omega: f64) -> f64 {
        let c = self.spectral_function(omega);
        if j == k {
            c
        } else {
            self.correlation() * c
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_vanishes_at_zero() {
        let b = BathSpec::default();
        assert_eq!(b.spectral_density(0.0).unwrap(), 0.0);
        assert!(b.spectral_density(-1.0).is_err());
    }

    #[test]
    fn density_plug_in() {
        let b = BathSpec::default();
        let g = 1.0 / 50.0 / KAPPA;
        let w = 200.0;
        let expected = 50.0 / std::f64::consts::PI * (g * w / (g * g) + g * w / (g * g + 400.0 * 400.0));
        assert!((b.spectral_density(w).unwrap() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn zero_frequency_limit() {
        let b = BathSpec::default();
        let c0 = b.spectral_function_cm(0.0);
        let near = b.spectral_function_cm(1e-6);
        assert!((near - c0).abs() < 1e-6 * c0, "{near} vs {c0}");
        let near_neg = b.spectral_function_cm(-1e-6);
        assert!((near_neg - c0).abs() < 1e-6 * c0);
    }

    #[test]
    fn correlation_factors() {
        let b = BathSpec::default();
        assert!(b.with_xi_over_d(1e-3).correlation() < 1e-300);
        assert!((b.with_xi_over_d(1e3).correlation() - 1.0).abs() < 1e-3);
        assert!((b.with_xi_over_d(3.0).correlation() - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        let b3 = b.with_xi_over_d(3.0);
        assert!((b3.cross_spectral(0, 1, 150.0) / b3.cross_spectral(0, 0, 150.0) - 0.7165).abs() < 1e-4);
    }

    #[test]
    fn resonant_shift_beats_pure_dephasing() {
        let d = 80000f64.sqrt();
        let b = BathSpec { omega_s: d, ..BathSpec::default() };
        assert!(b.spectral_function(d) > b.spectral_function(0.0));
    }

    #[test]
    fn validation() {
        assert!(BathSpec { xi: 0.0, ..BathSpec::default() }.validate().is_err());
        assert!(BathSpec { gamma: -1.0, ..BathSpec::default() }.validate().is_err());
        assert!(BathSpec::default().validate().is_ok());
    }
}
