use crate::error::{Error, Result};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Viscosity pair and pressure law `P(ρ) = ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    mu: f64,
    lambda: f64,
    gamma: f64,
}

impl FluidParams {
    /// Validates `μ > 0`, `2μ + 3λ >= 0`, `μ > λ/2` and `γ >= 1`.
    pub fn new(mu: f64, lambda: f64, gamma: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                field: "mu",
                reason: "shear viscosity must be positive",
            });
        }
        if !lambda.is_finite() || 2.0 * mu + 3.0 * lambda < 0.0 {
            return Err(Error::InvalidParameter {
                field: "lambda",
                reason: "requires 2*mu + 3*lambda >= 0",
            });
        }
        if !(mu > 0.5 * lambda) {
            return Err(Error::InvalidParameter {
                field: "lambda",
                reason: "requires mu > lambda / 2",
            });
        }
        if !(gamma >= 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                field: "gamma",
                reason: "adiabatic exponent must be >= 1",
            });
        }
        Ok(Self { mu, lambda, gamma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Sound-speed coefficient `P'(1) = γ`.
    pub fn p_prime_1(&self) -> f64 {
        self.gamma
    }

    /// Longitudinal viscosity `ν = 2μ + λ`.
    pub fn nu(&self) -> f64 {
        2.0 * self.mu + self.lambda
    }

    /// `P(ρ) = ρ^γ`.
    pub fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    /// `P'(ρ) = γ ρ^{γ-1}`.
    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Wavenumber of the acoustic double root, `2 sqrt(P'(1)) / ν`.
    pub fn critical_wavenumber(&self) -> f64 {
        2.0 * self.p_prime_1().sqrt() / self.nu()
    }
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda: 0.0,
            gamma: 1.0,
        }
    }
}
