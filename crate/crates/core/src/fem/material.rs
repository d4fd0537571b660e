use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Plate and fluid constants. Defaults are aluminium in air.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialProperties {
    pub youngs_modulus: f64,
    pub thickness: f64,
    pub poisson_ratio: f64,
    pub density_plate: f64,
    pub density_fluid: f64,
    pub speed_of_sound: f64,
    /// Structural loss factor applied as `(1 + iη) K_s`. Zero keeps the
    /// model undamped.
    pub loss_factor: f64,
}

impl Default for MaterialProperties {
    fn default() -> Self {
        Self {
            youngs_modulus: 70e9,
            thickness: 0.003,
            poisson_ratio: 0.3,
            density_plate: 2700.0,
            density_fluid: 1.21,
            speed_of_sound: 340.0,
            loss_factor: 0.0,
        }
    }
}

impl MaterialProperties {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mat.E", self.youngs_modulus),
            ("mat.t", self.thickness),
            ("mat.rho_s", self.density_plate),
            ("mat.rho_f", self.density_fluid),
            ("mat.c", self.speed_of_sound),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Config(format!(
                "mat.nu must lie in (0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.loss_factor >= 0.0 && self.loss_factor.is_finite()) {
            return Err(Error::Config(format!(
                "mat.eta must be non-negative, got {}",
                self.loss_factor
            )));
        }
        Ok(())
    }

    /// `B = E t³ / (12 (1 − ν²))`.
    pub fn bending_stiffness(&self) -> f64 {
        let t = self.thickness;
        self.youngs_modulus * t * t * t / (12.0 * (1.0 - self.poisson_ratio * self.poisson_ratio))
    }

    /// Mass per unit area `ρ_s t`.
    pub fn areal_mass(&self) -> f64 {
        self.density_plate * self.thickness
    }

    /// Free bending wavelength `2π (B / (ρ_s t ω²))^{1/4}`.
    pub fn bending_wavelength(&self, frequency_hz: f64) -> f64 {
        let omega = 2.0 * PI * frequency_hz;
        2.0 * PI * (self.bending_stiffness() / (self.areal_mass() * omega * omega)).powf(0.25)
    }

    pub fn acoustic_wavelength(&self, frequency_hz: f64) -> f64 {
        self.speed_of_sound / frequency_hz
    }

    /// Acoustic wavenumber `k = ω / c`.
    pub fn wavenumber(&self, omega: f64) -> f64 {
        omega / self.speed_of_sound
    }
}
