//! Unit conventions.
//!
//! Energies are quoted in wavenumbers (cm⁻¹) and times in femtoseconds at
//! every public boundary. Generator and propagator arithmetic runs in angular
//! frequency (rad/fs); [`KAPPA`] converts between the two.

/// Speed of light in cm/fs.
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// Angular frequency of one wavenumber, 2πc, in rad·fs⁻¹ per cm⁻¹.
pub const KAPPA: f64 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_FS;

/// Boltzmann constant expressed as k_B/(hc) in cm⁻¹·K⁻¹.
pub const BOLTZMANN_CM: f64 = 0.695_034_800;

/// Converts an energy in cm⁻¹ to an angular frequency in rad/fs.
#[inline]
pub fn angular_frequency(wavenumber: f64) -> f64 {
    KAPPA * wavenumber
}

/// Converts an angular frequency in rad/fs back to cm⁻¹.
#[inline]
pub fn wavenumber(omega: f64) -> f64 {
    omega / KAPPA
}

/// Thermal energy k_B·T in cm⁻¹.
#[inline]
pub fn thermal_energy(temperature: f64) -> f64 {
    BOLTZMANN_CM * temperature
}

/// Expresses a rate in fs⁻¹ as the energy ħγ in cm⁻¹.
#[inline]
pub fn rate_to_wavenumber(rate_per_fs: f64) -> f64 {
    rate_per_fs / KAPPA
}

/// Inverse of [`rate_to_wavenumber`].
#[inline]
pub fn wavenumber_to_rate(energy: f64) -> f64 {
    energy * KAPPA
}

/// Largest frequency offset (cm⁻¹) representable without aliasing on a time
/// grid of step `dt` fs, π/(κ·dt).
#[inline]
pub fn nyquist_wavenumber(dt: f64) -> f64 {
    std::f64::consts::PI / (KAPPA * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_value() {
        assert!((KAPPA - 1.8836e-4).abs() < 1e-7);
        assert_eq!(angular_frequency(0.0), 0.0);
    }

    #[test]
    fn round_trip() {
        for e in [1e-3, 1.0, 193.0, 12500.0, -283.0] {
            assert!((wavenumber(angular_frequency(e)) - e).abs() <= 1e-12 * e.abs());
        }
    }

    #[test]
    fn thermal_energy_at_77k() {
        assert!((thermal_energy(77.0) - 53.5).abs() < 0.1);
    }

    #[test]
    fn gamma_50fs_in_wavenumbers() {
        assert!((rate_to_wavenumber(1.0 / 50.0) - 106.2).abs() < 0.1);
    }
}
