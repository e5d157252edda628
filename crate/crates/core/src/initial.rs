//! Initial perturbations built mode by mode from radial frequency profiles.
//!
//! A continuum profile `f̂(|ξ|)` is placed on the lattice through
//! `c_ξ = (2π/L)^{3/2} f̂(ξ)` and multiplied by a random phase `e^{iθ(ξ)}`
//! with `θ(-ξ) = -θ(ξ)`, shared by all components of one mode. The phase
//! leaves every linear norm unchanged, so the grid data and the continuum
//! profile describe the same linear evolution.

use alloc::format;
use alloc::string::String;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::continuum::RadialProfileData;
use crate::error::{Error, Result};
use crate::grid::{RealField, SpectralField, SpectralGrid};
use crate::params::FluidParams;
use crate::spectral::{derivative, gradient_energy, lp_quadrature};
use crate::state::PerturbationState;

/// Family of generated data.
#[derive(Debug, Clone)]
pub enum DataKind {
    /// `ϱ̂₀ = A e^{-(k/w)²}`, `m̂₀ = 0`: a low-frequency density floor and no
    /// momentum.
    DensityFloor,
    /// Density, longitudinal and solenoidal momentum all `A k^η e^{-(k/w)²}`.
    GenericEta,
    /// `ϱ₀ = 0`, divergence-free momentum `A k^η e^{-(k/w)²}`.
    Solenoidal,
    /// User profiles, rescaled to the requested amplitude.
    CustomProfile(RadialProfileData),
}

impl DataKind {
    pub fn name(&self) -> &'static str {
        match self {
            DataKind::DensityFloor => "density-floor",
            DataKind::GenericEta => "generic-eta",
            DataKind::Solenoidal => "solenoidal",
            DataKind::CustomProfile(_) => "custom-profile",
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialDataSpec {
    pub kind: DataKind,
    /// `max |ϱ₀|` on the grid, or `max |m₀|` when the density vanishes.
    pub amplitude: f64,
    /// Required lower bound of `|ϱ̂₀(ξ)|` for `0 < |ξ| <= k_cut`.
    pub c0: f64,
    pub k_cut: f64,
    pub eta: f64,
    pub seed: u64,
    /// Envelope width `w`; `None` picks a quarter of the dealiasing radius.
    pub width: Option<f64>,
    /// Generated data must satisfy `1 + ϱ₀ >= floor`.
    pub floor: f64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            kind: DataKind::DensityFloor,
            amplitude: 0.5,
            c0: 1e-3,
            k_cut: 0.5,
            eta: 1.0,
            seed: 0,
            width: None,
            floor: 0.1,
        }
    }
}

/// Output of [`generate`].
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub state: PerturbationState,
    /// Continuum profile with the same magnitudes on every resolved mode.
    pub profile: Option<RadialProfileData>,
    /// `min |ϱ̂₀(ξ)|` over `0 < |ξ| <= k_cut`, in continuum units.
    pub low_frequency_floor: Option<f64>,
    /// Largest amplitude keeping `1 + ϱ₀ >= floor` for this shape.
    pub max_admissible_amplitude: f64,
}

/// Radius of the ball of resolved modes, `κ N/3`.
pub fn resolved_radius(grid: &SpectralGrid) -> f64 {
    grid.base_wavenumber() * grid.dealias_cutoff() as f64
}

// fixed irrational axis: `ξ × a` never vanishes for a lattice vector ξ ≠ 0
const AXIS: [f64; 3] = [0.433_012_701_892_219_3, 0.612_372_435_695_794_6, 0.661_437_827_766_147_8];

fn transverse(xi: [f64; 3]) -> [f64; 3] {
    let c = [
        xi[1] * AXIS[2] - xi[2] * AXIS[1],
        xi[2] * AXIS[0] - xi[0] * AXIS[2],
        xi[0] * AXIS[1] - xi[1] * AXIS[0],
    ];
    let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Phase `e^{iθ(k)}` from a counter-based stream keyed by the mode's integer
/// wavevector, so the draw does not depend on `N` or traversal order.
pub fn mode_phase(seed: u64, k: [i64; 3]) -> Complex64 {
    let neg = [-k[0], -k[1], -k[2]];
    if k == neg {
        return Complex64::new(1.0, 0.0);
    }
    let canonical = k > neg;
    let rep = if canonical { k } else { neg };
    let key = rep
        .iter()
        .fold(0u64, |acc, &c| (acc << 21) | ((c + (1 << 20)) as u64 & ((1 << 21) - 1)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    let theta = core::f64::consts::TAU * rng.random::<f64>();
    let z = Complex64::from_polar(1.0, theta);
    if canonical {
        z
    } else {
        z.conj()
    }
}

fn unit_profile(kind: &DataKind, eta: f64, width: f64, cutoff: f64) -> RadialProfileData {
    match kind {
        DataKind::DensityFloor => RadialProfileData::gaussian_density(1.0, width, cutoff),
        DataKind::GenericEta => RadialProfileData::generic_eta([1.0, 1.0, 1.0], eta, width, cutoff),
        DataKind::Solenoidal => RadialProfileData::generic_eta([0.0, 0.0, 1.0], eta, width, cutoff),
        DataKind::CustomProfile(p) => p.clone(),
    }
}

/// Places a continuum profile on the grid with seeded phases; modes beyond
/// `profile.cutoff` or outside the dealiased band are zero.
pub fn sample_profile(profile: &RadialProfileData, grid: &SpectralGrid, seed: u64) -> (SpectralField, [SpectralField; 3]) {
    let to_grid = (core::f64::consts::TAU / grid.length()).powf(1.5);
    let mut rho = grid.zeros_spectral();
    let mut m = [grid.zeros_spectral(), grid.zeros_spectral(), grid.zeros_spectral()];
    let i = Complex64::new(0.0, 1.0);
    for md in grid.modes() {
        let k = md.xi_sq.sqrt();
        if k == 0.0 || md.aliased || k > profile.cutoff {
            continue;
        }
        let phase = mode_phase(seed, md.k) * to_grid;
        let n = [md.xi[0] / k, md.xi[1] / k, md.xi[2] / k];
        let e = transverse(md.xi);
        let (r, b, s) = ((profile.rho)(k), (profile.longitudinal)(k), (profile.solenoidal)(k));
        rho[md.index] = phase * r;
        for c in 0..3 {
            m[c][md.index] = phase * (-i * b * n[c] + i * s * e[c]);
        }
    }
    (rho, m)
}

fn sup(grid: &SpectralGrid, f: &[Complex64]) -> Result<(f64, f64)> {
    let r = grid.inverse(f)?;
    Ok(r.iter().fold((f64::INFINITY, 0.0f64), |(lo, a), &x| (lo.min(x), a.max(x.abs()))))
}

fn momentum_sup(grid: &SpectralGrid, m: &[SpectralField; 3]) -> Result<f64> {
    let r: [RealField; 3] = [grid.inverse(&m[0])?, grid.inverse(&m[1])?, grid.inverse(&m[2])?];
    Ok((0..grid.real_len())
        .map(|p| (r[0][p] * r[0][p] + r[1][p] * r[1][p] + r[2][p] * r[2][p]).sqrt())
        .fold(0.0, f64::max))
}

/// Builds the initial state for `spec` on `grid`.
pub fn generate(spec: &InitialDataSpec, grid: &SpectralGrid) -> Result<GeneratedData> {
    let kmax = resolved_radius(grid);
    if !(spec.amplitude >= 0.0) || !spec.amplitude.is_finite() {
        return Err(Error::InvalidParameter {
            field: "initial.amplitude",
            reason: "must be non-negative and finite",
        });
    }
    if !(spec.eta >= 0.0) {
        return Err(Error::InvalidParameter {
            field: "initial.eta",
            reason: "must be non-negative",
        });
    }
    if !(spec.floor >= 0.0 && spec.floor < 1.0) {
        return Err(Error::InvalidParameter {
            field: "initial.floor",
            reason: "must lie in [0, 1)",
        });
    }
    let density_floor = matches!(spec.kind, DataKind::DensityFloor);
    if density_floor {
        if !(spec.k_cut < kmax) {
            return Err(Error::InvalidParameter {
                field: "initial.k_cut",
                reason: "must lie below the dealiasing radius",
            });
        }
        if spec.k_cut < grid.base_wavenumber() {
            return Err(Error::InvalidParameter {
                field: "initial.k_cut",
                reason: "no grid mode lies in 0 < |xi| <= k_cut",
            });
        }
        if !(spec.c0 > 0.0) {
            return Err(Error::InvalidParameter {
                field: "initial.c0",
                reason: "must be positive",
            });
        }
    }
    let width = match spec.width {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(_) => {
            return Err(Error::InvalidParameter {
                field: "initial.width",
                reason: "must be positive and finite",
            })
        }
        None => kmax / 4.0,
    };
    let unit = unit_profile(&spec.kind, spec.eta, width, kmax);
    let (rho_u, m_u) = sample_profile(&unit, grid, spec.seed);
    let (rho_min, rho_sup) = sup(grid, &rho_u)?;
    let (norm, has_density) = if rho_sup > 0.0 {
        (rho_sup, true)
    } else {
        (momentum_sup(grid, &m_u)?, false)
    };
    if norm == 0.0 {
        if spec.amplitude == 0.0 {
            return Ok(GeneratedData {
                state: PerturbationState::zero(grid),
                profile: Some(unit.scaled(0.0)),
                low_frequency_floor: density_floor.then_some(0.0),
                max_admissible_amplitude: f64::INFINITY,
            });
        }
        return Err(Error::InsufficientData("profile vanishes on every resolved mode"));
    }
    let factor = spec.amplitude / norm;
    // 1 + factor·ρ_u >= floor  <=>  amplitude <= (1 - floor)·norm / (-min ρ_u)
    let max_admissible = if has_density && rho_min < 0.0 {
        (1.0 - spec.floor) * norm / (-rho_min)
    } else {
        f64::INFINITY
    };
    if spec.amplitude > max_admissible {
        return Err(Error::AmplitudeTooLarge {
            amplitude: spec.amplitude,
            max_admissible,
        });
    }
    let scale = |f: &SpectralField| -> SpectralField { f.iter().map(|c| c * factor).collect() };
    let rho = scale(&rho_u);
    let m = [scale(&m_u[0]), scale(&m_u[1]), scale(&m_u[2])];
    let mut profile = unit.scaled(factor);
    profile.density_floor = density_floor && factor > 0.0;
    let low_frequency_floor = if density_floor {
        let from_grid = (grid.length() / core::f64::consts::TAU).powf(1.5);
        let level = grid
            .modes()
            .filter(|md| md.xi_sq > 0.0 && !md.aliased && md.xi_sq.sqrt() <= spec.k_cut)
            .map(|md| rho[md.index].norm() * from_grid)
            .fold(f64::INFINITY, f64::min);
        if spec.amplitude > 0.0 && level < spec.c0 {
            return Err(Error::FloorNotMet { level, c0: spec.c0 });
        }
        Some(level)
    } else {
        None
    };
    let state = PerturbationState::from_momentum(grid, 0.0, rho, m)?;
    Ok(GeneratedData {
        state,
        profile: Some(profile),
        low_frequency_floor,
        max_admissible_amplitude: max_admissible,
    })
}

/// `L²` norm of the difference between two evaluations of `∂ₜu` at `t = 0`:
///
/// ```text
/// a = -u·∇u + (1/ρ)(μΔu + (μ+λ)∇div u) - (1/ρ)∇(ρ^γ)
/// b = (∂ₜm - u ∂ₜρ)/ρ,  ∂ₜm = -div(ρu⊗u) - P'(ρ)∇ρ + μΔu + (μ+λ)∇div u,  ∂ₜρ = -div(ρu)
/// ```
///
/// `a` is the compatibility formula with the viscous sign of the momentum
/// equation. The two agree in the continuum, so the residual measures
/// discretization consistency of the data.
pub fn admissible_residual(grid: &SpectralGrid, rho0: &SpectralField, u0: &[SpectralField; 3], params: &FluidParams) -> Result<f64> {
    let rho_r = grid.inverse(rho0)?;
    let min_density = crate::state::min_density_of(&rho_r);
    if !(min_density > 0.0) {
        return Err(Error::Positivity { min_density });
    }
    let n = grid.real_len();
    let (mu, ml) = (params.mu(), params.mu() + params.lambda());
    let dens: RealField = rho_r.iter().map(|r| 1.0 + r).collect();
    let u: [RealField; 3] = [grid.inverse(&u0[0])?, grid.inverse(&u0[1])?, grid.inverse(&u0[2])?];
    let mut grad_u = [
        [RealField::new(), RealField::new(), RealField::new()],
        [RealField::new(), RealField::new(), RealField::new()],
        [RealField::new(), RealField::new(), RealField::new()],
    ];
    for i in 0..3 {
        for j in 0..3 {
            grad_u[i][j] = grid.inverse(&derivative(&u0[i], grid, j))?;
        }
    }
    let mut visc_hat = [grid.zeros_spectral(), grid.zeros_spectral(), grid.zeros_spectral()];
    for m in grid.modes() {
        let k = m.index;
        let xu = m.xi[0] * u0[0][k] + m.xi[1] * u0[1][k] + m.xi[2] * u0[2][k];
        for i in 0..3 {
            visc_hat[i][k] = -mu * m.xi_sq * u0[i][k] - ml * m.xi[i] * xu;
        }
    }
    let visc: [RealField; 3] = [
        grid.inverse(&visc_hat[0])?,
        grid.inverse(&visc_hat[1])?,
        grid.inverse(&visc_hat[2])?,
    ];
    let pow: RealField = dens.iter().map(|r| params.pressure(*r)).collect();
    let pow_hat = grid.forward(&pow)?;
    let grad_rho: [RealField; 3] = [
        grid.inverse(&derivative(rho0, grid, 0))?,
        grid.inverse(&derivative(rho0, grid, 1))?,
        grid.inverse(&derivative(rho0, grid, 2))?,
    ];
    // ∂ₜρ = -div(ρu)
    let flux_hat = [0, 1, 2].map(|j| {
        let f: RealField = (0..n).map(|p| dens[p] * u[j][p]).collect();
        grid.forward(&f)
    });
    let mut dt_rho_hat = grid.zeros_spectral();
    for (j, f) in flux_hat.iter().enumerate() {
        let f = f.as_ref().map_err(|e| e.clone())?;
        let d = derivative(f, grid, j);
        for (a, b) in dt_rho_hat.iter_mut().zip(&d) {
            *a -= b;
        }
    }
    let dt_rho = grid.inverse(&dt_rho_hat)?;
    let mut sq = 0.0;
    for i in 0..3 {
        let grad_pow = grid.inverse(&derivative(&pow_hat, grid, i))?;
        let mut div_conv = grid.zeros_spectral();
        for j in 0..3 {
            let f: RealField = (0..n).map(|p| dens[p] * u[i][p] * u[j][p]).collect();
            let d = derivative(&grid.forward(&f)?, grid, j);
            for (a, b) in div_conv.iter_mut().zip(&d) {
                *a += b;
            }
        }
        let div_conv = grid.inverse(&div_conv)?;
        for p in 0..n {
            let adv: f64 = (0..3).map(|j| u[j][p] * grad_u[i][j][p]).sum();
            let a = -adv + (visc[i][p] - grad_pow[p]) / dens[p];
            let dt_m = -div_conv[p] - params.pressure_derivative(dens[p]) * grad_rho[i][p] + visc[i][p];
            let b = (dt_m - u[i][p] * dt_rho[p]) / dens[p];
            sq += (a - b) * (a - b);
        }
    }
    Ok((sq * grid.cell_volume()).sqrt())
}

/// `L¹, L², H¹, H²` norms of one field (vector fields use the Euclidean
/// magnitude for `L¹`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SobolevNorms {
    pub l1: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    pub rho: SobolevNorms,
    pub u: SobolevNorms,
}

fn sobolev_of(grid: &SpectralGrid, fields: &[SpectralField]) -> Result<SobolevNorms> {
    let e = |d: u32| fields.iter().map(|f| gradient_energy(f, grid, d)).sum::<f64>();
    let (e0, e1, e2) = (e(0), e(1), e(2));
    let l1 = if fields.len() == 1 {
        lp_quadrature(&grid.inverse(&fields[0])?, grid, 1.0)
    } else {
        let r: alloc::vec::Vec<RealField> = fields.iter().map(|f| grid.inverse(f)).collect::<Result<_>>()?;
        let mag: RealField = (0..grid.real_len())
            .map(|p| r.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt())
            .collect();
        lp_quadrature(&mag, grid, 1.0)
    };
    Ok(SobolevNorms {
        l1,
        l2: e0.sqrt(),
        h1: (e0 + e1).sqrt(),
        h2: (e0 + e1 + e2).sqrt(),
    })
}

/// Integrability and regularity norms of `ϱ` and `u`; `L¹` by rectangle
/// quadrature, the rest by Plancherel.
pub fn norm_report(state: &PerturbationState) -> Result<NormReport> {
    let grid = state.grid();
    Ok(NormReport {
        rho: sobolev_of(grid, core::slice::from_ref(state.rho()))?,
        u: sobolev_of(grid, state.velocity()?)?,
    })
}

/// Short description used in manifests.
pub fn describe(spec: &InitialDataSpec) -> String {
    format!(
        "{}(amplitude={}, k_cut={}, eta={}, seed={})",
        spec.kind.name(),
        spec.amplitude,
        spec.k_cut,
        spec.eta,
        spec.seed
    )
}
