//! Whole-space linear evolution of isotropic data by radial quadrature.
//!
//! For radial profiles the linear solution stays radial in each Helmholtz
//! component, and with the unitary transform on `ℝ³`
//!
//! ```text
//! ‖∇^d ϱ_l(t)‖² = 4π ∫₀^∞ k^{2d+2} |α(k,t)|² dk
//! ‖∇^d m_l(t)‖² = 4π ∫₀^∞ k^{2d+2} (|b(k,t)|² + e^{-2μk²t} |s₀(k)|²) dk
//! ```
//!
//! where `(α, b) = e^{tA(k)} (ϱ̂₀, b₀)` is the acoustic pair and `s₀` the
//! solenoidal amplitude.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::Result;
use crate::fit::{self, Comparison, DecayFitResult};
use crate::params::FluidParams;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::semigroup::acoustic_exp;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// A real function of `|ξ|`.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Isotropic initial data in frequency space.
///
/// The momentum transform is `m̂₀(ξ) = -i b₀(|ξ|) ξ̂ + i s₀(|ξ|) e(ξ)` for a
/// unit vector field `e ⊥ ξ`, odd in `ξ`, so real profiles describe real
/// fields.
#[derive(Clone)]
pub struct RadialProfileData {
    pub rho: Profile,
    pub longitudinal: Profile,
    pub solenoidal: Profile,
    /// Profiles are treated as zero beyond this radius.
    pub cutoff: f64,
    /// Free-form description of the envelope, e.g. `gaussian(w=0.05)`.
    pub smoothness: String,
    /// `|ϱ̂₀| >= c₀` and `m̂₀ = 0` near the origin.
    pub density_floor: bool,
    /// Order of vanishing of `|(ϱ̂₀, m̂₀)|` at the origin.
    pub eta: f64,
}

impl fmt::Debug for RadialProfileData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfileData")
            .field("cutoff", &self.cutoff)
            .field("smoothness", &self.smoothness)
            .field("density_floor", &self.density_floor)
            .field("eta", &self.eta)
            .finish_non_exhaustive()
    }
}

fn zero_profile() -> Profile {
    Arc::new(|_| 0.0)
}

impl RadialProfileData {
    /// `ϱ̂₀ = a e^{-(k/w)²}`, `m̂₀ = 0`: the lower-bound hypothesis with
    /// `c₀ = a e^{-(k_cut/w)²}` on `|ξ| <= k_cut`.
    pub fn gaussian_density(amplitude: f64, width: f64, cutoff: f64) -> Self {
        Self {
            rho: Arc::new(move |k| amplitude * (-(k / width).powi(2)).exp()),
            longitudinal: zero_profile(),
            solenoidal: zero_profile(),
            cutoff,
            smoothness: alloc::format!("gaussian(w={width})"),
            density_floor: amplitude != 0.0,
            eta: 0.0,
        }
    }

    /// Every component `a_j k^η e^{-(k/w)²}` with amplitudes
    /// `(ϱ, longitudinal, solenoidal)`.
    pub fn generic_eta(amplitudes: [f64; 3], eta: f64, width: f64, cutoff: f64) -> Self {
        let shape = move |a: f64| -> Profile { Arc::new(move |k: f64| a * k.powf(eta) * (-(k / width).powi(2)).exp()) };
        Self {
            rho: shape(amplitudes[0]),
            longitudinal: shape(amplitudes[1]),
            solenoidal: shape(amplitudes[2]),
            cutoff,
            smoothness: alloc::format!("k^{eta} gaussian(w={width})"),
            density_floor: false,
            eta,
        }
    }

    /// Every profile multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let wrap = |f: &Profile| -> Profile {
            let f = f.clone();
            Arc::new(move |k| factor * f(k))
        };
        Self {
            rho: wrap(&self.rho),
            longitudinal: wrap(&self.longitudinal),
            solenoidal: wrap(&self.solenoidal),
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        // profiles are continuous; a coarse scan is enough to spot all-zero data
        (0..=64).all(|j| {
            let k = self.cutoff * j as f64 / 64.0;
            (self.rho)(k) == 0.0 && (self.longitudinal)(k) == 0.0 && (self.solenoidal)(k) == 0.0
        })
    }
}

/// `‖∇^d ϱ_l‖` and `‖∇^d m_l‖` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumNorms {
    pub rho: f64,
    pub momentum: f64,
}

impl ContinuumNorms {
    /// `‖(ϱ_l, m_l)‖ = ‖ϱ_l‖ + ‖m_l‖`.
    pub fn total(&self) -> f64 {
        self.rho + self.momentum
    }
}

/// Requested relative accuracy of each radial integral.
pub const CONTINUUM_REL_TOL: f64 = 1e-8;

/// Linear solution norms at time `t` by adaptive radial quadrature.
pub fn linear_l2_norm_continuum(data: &RadialProfileData, t: f64, order: u32, params: &FluidParams) -> Result<ContinuumNorms> {
    if !(t >= 0.0) {
        return Err(crate::error::Error::NegativeTime(t));
    }
    let nu = params.nu();
    let p = params.p_prime_1();
    let mu = params.mu();
    // beyond √(80/(νt)) every branch of the symbol has damped by e^{-80}
    let mut upper = data.cutoff;
    if t * p / nu > 40.0 {
        upper = upper.min((80.0 / (nu * t)).sqrt());
    }
    let waves = upper * t * p.sqrt() * 2.0 / PI;
    let opts = QuadratureOptions {
        rel_tol: CONTINUUM_REL_TOL,
        abs_tol: 0.0,
        initial_pieces: (waves.ceil() as usize).clamp(8, 200_000),
        max_intervals: 2_000_000,
    };
    let weight = move |k: f64| 4.0 * PI * k.powi(2 * order as i32 + 2);
    let pair = |k: f64| -> (f64, f64) {
        let e = acoustic_exp(k, t, params);
        let (r0, b0) = ((data.rho)(k), (data.longitudinal)(k));
        (e[0][0] * r0 + e[0][1] * b0, e[1][0] * r0 + e[1][1] * b0)
    };
    let rho = integrate(|k| weight(k) * pair(k).0.powi(2), 0.0, upper, opts)?;
    let mom = integrate(
        |k| {
            let s = (data.solenoidal)(k) * (-mu * k * k * t).exp();
            weight(k) * (pair(k).1.powi(2) + s * s)
        },
        0.0,
        upper,
        opts,
    )?;
    Ok(ContinuumNorms {
        rho: rho.value.max(0.0).sqrt(),
        momentum: mom.value.max(0.0).sqrt(),
    })
}

/// Continuum norms at each of `times`.
pub fn linear_decay_series(
    data: &RadialProfileData,
    times: &[f64],
    order: u32,
    params: &FluidParams,
) -> Result<Vec<(f64, ContinuumNorms)>> {
    times
        .iter()
        .map(|&t| linear_l2_norm_continuum(data, t, order, params).map(|n| (t, n)))
        .collect()
}

/// Fits of the linear decay for one data set.
#[derive(Debug, Clone)]
pub struct LinearDecayCheck {
    pub series: Vec<(f64, ContinuumNorms)>,
    /// `‖ϱ_l‖`, `‖m_l‖` against `-(3/4 + η/2)` as an upper bound.
    pub upper: [DecayFitResult; 2],
    /// `‖ϱ_l‖`, `‖m_l‖` against `-3/4`, only for lower-bound data.
    pub lower: Option<[DecayFitResult; 2]>,
}

impl LinearDecayCheck {
    pub fn pass(&self) -> bool {
        self.upper.iter().all(|f| f.pass || f.degenerate) && self.lower.as_ref().is_none_or(|l| l.iter().all(|f| f.pass))
    }
}

/// Number of log-spaced samples used by [`verify_linear_decay`].
pub const LINEAR_FIT_SAMPLES: usize = 32;

/// Measures the decay exponents of `‖ϱ_l‖` and `‖m_l‖` over `window`.
pub fn verify_linear_decay(data: &RadialProfileData, eta: f64, window: (f64, f64), params: &FluidParams) -> Result<LinearDecayCheck> {
    let times = fit::log_spaced(window.0, window.1, LINEAR_FIT_SAMPLES);
    let series = linear_decay_series(data, &times, 0, params)?;
    let fit_one = |name: &str, pick: fn(&ContinuumNorms) -> f64, target: f64, cmp: Comparison| -> Result<DecayFitResult> {
        let pts: Vec<(f64, f64)> = series.iter().map(|(t, n)| (*t, pick(n))).collect();
        if pts.iter().all(|p| p.1 == 0.0) {
            return Ok(DecayFitResult::degenerate(
                name,
                window,
                target,
                fit::CONTINUUM_TOLERANCE,
                cmp,
                pts.len(),
            ));
        }
        fit::fit_power_law(name, &pts, window, target, fit::CONTINUUM_TOLERANCE, cmp)
    };
    let up = fit::target_eta(eta);
    let upper = [
        fit_one("rho_l", |n| n.rho, up, Comparison::AtMost)?,
        fit_one("m_l", |n| n.momentum, up, Comparison::AtMost)?,
    ];
    let lower = if data.density_floor {
        Some([
            fit_one("rho_l", |n| n.rho, fit::TARGET_LOWER, Comparison::TwoSided)?,
            fit_one("m_l", |n| n.momentum, fit::TARGET_LOWER, Comparison::TwoSided)?,
        ])
    } else {
        None
    };
    Ok(LinearDecayCheck { series, upper, lower })
}
