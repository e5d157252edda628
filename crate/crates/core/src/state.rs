//! Perturbation state `(ϱ, m)` with derived velocity `u = m / (1 + ϱ)`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{RealField, SpectralField, SpectralGrid};
use crate::spectral::gradient_energy;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Field selector for [`PerturbationState::sobolev_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Density,
    Velocity,
    Momentum,
}

/// Norm selector: `L²`, `H¹ = L² + ∇`, `H² = L² + ∇ + ∇²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormSpace {
    L2,
    H1,
    H2,
}

impl NormSpace {
    fn extra_orders(self) -> u32 {
        match self {
            NormSpace::L2 => 0,
            NormSpace::H1 => 1,
            NormSpace::H2 => 2,
        }
    }
}

#[derive(Debug, Clone)]
enum Velocity {
    Available([SpectralField; 3]),
    Unavailable { min_density: f64 },
}

/// Density perturbation and momentum on the periodic grid, in spectral form.
///
/// The velocity is derived pointwise from the grid samples, `u = m / (1+ϱ)`,
/// and is only available while `1 + ϱ > 0` everywhere.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    grid: SpectralGrid,
    time: f64,
    rho: SpectralField,
    momentum: [SpectralField; 3],
    velocity: Velocity,
    min_density: f64,
}

impl PerturbationState {
    /// The equilibrium `(ϱ, m) = (0, 0)`.
    pub fn zero(grid: &SpectralGrid) -> Self {
        let z = grid.zeros_spectral();
        Self {
            grid: grid.clone(),
            time: 0.0,
            rho: z.clone(),
            momentum: [z.clone(), z.clone(), z.clone()],
            velocity: Velocity::Available([z.clone(), z.clone(), z]),
            min_density: 1.0,
        }
    }

    /// Builds a state from spectral `ϱ̂` and `m̂`; the velocity is derived.
    pub fn from_momentum(grid: &SpectralGrid, time: f64, rho: SpectralField, momentum: [SpectralField; 3]) -> Result<Self> {
        check_len(grid, &rho)?;
        for m in &momentum {
            check_len(grid, m)?;
        }
        let rho_real = grid.inverse(&rho)?;
        let min_density = min_density_of(&rho_real);
        let velocity = if min_density > 0.0 {
            let mut u = [Vec::new(), Vec::new(), Vec::new()];
            for (ui, mi) in u.iter_mut().zip(&momentum) {
                let m_real = grid.inverse(mi)?;
                let q: RealField = m_real.iter().zip(&rho_real).map(|(m, r)| m / (1.0 + r)).collect();
                *ui = grid.forward(&q)?;
            }
            Velocity::Available(u)
        } else {
            Velocity::Unavailable { min_density }
        };
        Ok(Self {
            grid: grid.clone(),
            time,
            rho,
            momentum,
            velocity,
            min_density,
        })
    }

    /// Builds a state from spectral `ϱ̂` and `û`; the momentum is derived.
    pub fn from_velocity(grid: &SpectralGrid, time: f64, rho: SpectralField, velocity: [SpectralField; 3]) -> Result<Self> {
        check_len(grid, &rho)?;
        for u in &velocity {
            check_len(grid, u)?;
        }
        let rho_real = grid.inverse(&rho)?;
        let min_density = min_density_of(&rho_real);
        if !(min_density > 0.0) {
            return Err(Error::Positivity { min_density });
        }
        let mut momentum = [Vec::new(), Vec::new(), Vec::new()];
        for (mi, ui) in momentum.iter_mut().zip(&velocity) {
            let u_real = grid.inverse(ui)?;
            let q: RealField = u_real.iter().zip(&rho_real).map(|(u, r)| u * (1.0 + r)).collect();
            *mi = grid.forward(&q)?;
        }
        Ok(Self {
            grid: grid.clone(),
            time,
            rho,
            momentum,
            velocity: Velocity::Available(velocity),
            min_density,
        })
    }

    /// Builds a state from real-space samples of `ϱ` and `m`.
    pub fn from_real(grid: &SpectralGrid, time: f64, rho: &[f64], momentum: [&[f64]; 3]) -> Result<Self> {
        let rho_hat = grid.forward(rho)?;
        let m_hat = [grid.forward(momentum[0])?, grid.forward(momentum[1])?, grid.forward(momentum[2])?];
        Self::from_momentum(grid, time, rho_hat, m_hat)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn rho(&self) -> &SpectralField {
        &self.rho
    }

    pub fn momentum(&self) -> &[SpectralField; 3] {
        &self.momentum
    }

    /// Derived velocity; fails when the density is not positive.
    pub fn velocity(&self) -> Result<&[SpectralField; 3]> {
        match &self.velocity {
            Velocity::Available(u) => Ok(u),
            Velocity::Unavailable { min_density } => Err(Error::Positivity { min_density: *min_density }),
        }
    }

    /// `min_x (1 + ϱ(x))` over the grid samples.
    pub fn min_density(&self) -> f64 {
        self.min_density
    }

    /// Real samples of `ϱ`.
    pub fn rho_real(&self) -> RealField {
        self.grid.inverse(&self.rho).expect("state fields match their grid")
    }

    /// Real samples of one momentum component.
    pub fn momentum_real(&self, axis: usize) -> RealField {
        self.grid.inverse(&self.momentum[axis]).expect("state fields match their grid")
    }

    /// Mass perturbation `∫ ϱ dx`, read from the zero mode.
    pub fn mass(&self) -> f64 {
        self.rho[0].re * self.grid.length().powf(1.5)
    }

    /// `‖∇^d f‖` in `L²`, `H¹` or `H²`, as Plancherel sums.
    pub fn sobolev_norm(&self, component: Component, order: u32, space: NormSpace) -> Result<f64> {
        let fields: &[SpectralField] = match component {
            Component::Density => core::slice::from_ref(&self.rho),
            Component::Momentum => &self.momentum,
            Component::Velocity => self.velocity()?,
        };
        let mut sum = 0.0;
        for f in fields {
            for j in 0..=space.extra_orders() {
                sum += gradient_energy(f, &self.grid, order + j);
            }
        }
        Ok(sum.sqrt())
    }
}

/// `min_x (1 + ϱ(x))`; the density floor monitor.
pub fn density_floor_check(state: &PerturbationState) -> f64 {
    state.min_density()
}

pub(crate) fn min_density_of(rho_real: &[f64]) -> f64 {
    rho_real.iter().fold(f64::INFINITY, |acc, r| acc.min(1.0 + r))
}

fn check_len(grid: &SpectralGrid, f: &[Complex64]) -> Result<()> {
    if f.len() != grid.spectral_len() {
        return Err(Error::DimensionMismatch {
            expected: grid.spectral_len(),
            actual: f.len(),
        });
    }
    Ok(())
}
