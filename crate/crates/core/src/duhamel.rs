//! Nonlinear minus linear evolution from the same data.
//!
//! `(ϱ_δ, m_δ) = (ϱ, m) - K(t)(ϱ₀, m₀)` is obtained by running the momentum
//! form alongside the exact grid semigroup. Pair norms follow
//! `‖(A, B)‖ = ‖A‖ + ‖B‖`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fit::{self, Comparison, DecayFitResult};
use crate::grid::{RealField, SpectralField};
use crate::params::FluidParams;
use crate::semigroup::apply_semigroup_grid;
use crate::solver::{simulate, Form, Observer, SolverConfig};
use crate::spectral::{gradient_energy, lp_quadrature};
use crate::state::PerturbationState;

/// One row of the difference series. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DifferenceSample {
    pub t: f64,
    /// `‖ϱ_δ‖ + ‖m_δ‖`.
    pub delta: f64,
    /// `‖ϱ_l‖ + ‖m_l‖`.
    pub linear: f64,
    /// `‖ϱ‖ + ‖m‖`.
    pub full: f64,
    pub rho_delta_l2: f64,
    pub m_delta_l2: f64,
    pub rho_lin_l2: f64,
    pub m_lin_l2: f64,
    pub rho_l2: f64,
    pub m_l2: f64,
    pub u_l2: f64,
    pub rho_l3: f64,
    pub u_l6: f64,
}

impl DifferenceSample {
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "delta",
        "linear",
        "full",
        "rho_delta_l2",
        "m_delta_l2",
        "rho_lin_l2",
        "m_lin_l2",
        "rho_l2",
        "m_l2",
        "u_l2",
        "rho_l3",
        "u_l6",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.delta,
            self.linear,
            self.full,
            self.rho_delta_l2,
            self.m_delta_l2,
            self.rho_lin_l2,
            self.m_lin_l2,
            self.rho_l2,
            self.m_l2,
            self.u_l2,
            self.rho_l3,
            self.u_l6,
        ]
    }

    /// `‖m‖ - ‖ϱ‖_{L³}‖u‖_{L⁶}`, the lower bound for `‖u‖` from Hölder.
    pub fn velocity_floor(&self) -> f64 {
        self.m_l2 - self.rho_l3 * self.u_l6
    }
}

/// Output of [`coupled_run`]; `failure` is set when the nonlinear run
/// stopped early, and `samples` then ends at the last good record.
#[derive(Debug)]
pub struct DifferenceSeries {
    pub samples: Vec<DifferenceSample>,
    pub failure: Option<Error>,
}

fn l2(fields: &[SpectralField], state: &PerturbationState) -> f64 {
    fields.iter().map(|f| gradient_energy(f, state.grid(), 0)).sum::<f64>().sqrt()
}

fn diff(a: &SpectralField, b: &SpectralField) -> SpectralField {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Norms of a nonlinear state against the linear evolution of `init`.
pub fn difference_sample(state: &PerturbationState, init: &PerturbationState, params: &FluidParams) -> Result<DifferenceSample> {
    let grid = state.grid();
    let lin = apply_semigroup_grid(init, state.time() - init.time(), params)?;
    let dr = diff(state.rho(), lin.rho());
    let dm: Vec<SpectralField> = (0..3).map(|i| diff(&state.momentum()[i], &lin.momentum()[i])).collect();
    let rho_delta_l2 = l2(core::slice::from_ref(&dr), state);
    let m_delta_l2 = l2(&dm, state);
    let rho_lin_l2 = l2(core::slice::from_ref(lin.rho()), &lin);
    let m_lin_l2 = l2(lin.momentum(), &lin);
    let rho_l2 = l2(core::slice::from_ref(state.rho()), state);
    let m_l2 = l2(state.momentum(), state);
    let u = state.velocity()?;
    let u_real: Vec<RealField> = u.iter().map(|f| grid.inverse(f)).collect::<Result<_>>()?;
    let mag: RealField = (0..grid.real_len())
        .map(|p| (u_real[0][p].powi(2) + u_real[1][p].powi(2) + u_real[2][p].powi(2)).sqrt())
        .collect();
    Ok(DifferenceSample {
        t: state.time(),
        delta: rho_delta_l2 + m_delta_l2,
        linear: rho_lin_l2 + m_lin_l2,
        full: rho_l2 + m_l2,
        rho_delta_l2,
        m_delta_l2,
        rho_lin_l2,
        m_lin_l2,
        rho_l2,
        m_l2,
        u_l2: l2(u, state),
        rho_l3: lp_quadrature(&state.rho_real(), grid, 3.0),
        u_l6: lp_quadrature(&mag, grid, 6.0),
    })
}

struct DifferenceRecorder<'a> {
    init: &'a PerturbationState,
    params: FluidParams,
    samples: Vec<DifferenceSample>,
}

impl Observer for DifferenceRecorder<'_> {
    fn observe(&mut self, state: &PerturbationState, _step: u64) -> Result<()> {
        self.samples.push(difference_sample(state, self.init, &self.params)?);
        Ok(())
    }
}

/// Runs the momentum form from `init` and records the difference to the
/// linear evolution at every recording step. The form in `config` is
/// overridden to [`Form::Momentum`].
pub fn coupled_run(
    init: &PerturbationState,
    config: SolverConfig,
    params: FluidParams,
    extra: &mut [&mut dyn Observer],
) -> Result<DifferenceSeries> {
    let config = SolverConfig {
        form: Form::Momentum,
        ..config
    };
    let mut rec = DifferenceRecorder {
        init,
        params,
        samples: Vec::new(),
    };
    let mut observers: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
    observers.push(&mut rec);
    for o in extra.iter_mut() {
        observers.push(&mut **o);
    }
    let outcome = simulate(init, config, params, &mut observers)?;
    drop(observers);
    Ok(DifferenceSeries {
        samples: rec.samples,
        failure: outcome.failure,
    })
}

/// Smallest factor `end/start` a fit window must span.
pub const MIN_WINDOW_SPAN: f64 = 10.0;

/// Required gap between the linear and difference exponents.
pub const EXPONENT_GAP: f64 = 0.3;

/// Allowed mismatch between full and linear exponents.
pub const SANDWICH_TOLERANCE: f64 = 0.1;

fn check_window(window: (f64, f64)) -> Result<()> {
    let start = window.0.max(0.0);
    // spans are measured in 1 + t, the fit variable
    let required_end = MIN_WINDOW_SPAN * (1.0 + start) - 1.0;
    if !(window.1 >= required_end) {
        return Err(Error::WindowTooShort {
            start: window.0,
            end: window.1,
            required_end,
        });
    }
    Ok(())
}

/// Exponents of the difference, linear and full series and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceCheck {
    pub difference: DecayFitResult,
    pub linear: DecayFitResult,
    pub full: DecayFitResult,
    /// `α_linear - α_difference`.
    pub gap: f64,
    pub pass: bool,
}

/// Faster decay of the difference and the full/linear sandwich:
/// `α_δ <= α_l - 0.3` and `|α_full - α_l| <= 0.1`. Samples at the initial
/// time, where the difference vanishes, are left out of all three fits.
pub fn difference_decay_check(samples: &[DifferenceSample], window: (f64, f64)) -> Result<DifferenceCheck> {
    check_window(window)?;
    let t0 = samples.first().map_or(f64::NEG_INFINITY, |s| s.t);
    let series =
        |pick: fn(&DifferenceSample) -> f64| -> Vec<(f64, f64)> { samples.iter().filter(|s| s.t > t0).map(|s| (s.t, pick(s))).collect() };
    let difference = fit::fit_power_law(
        "difference",
        &series(|s| s.delta),
        window,
        fit::TARGET_DIFFERENCE,
        fit::GRID_TOLERANCE,
        Comparison::AtMost,
    )?;
    let linear = fit::fit_power_law(
        "linear",
        &series(|s| s.linear),
        window,
        fit::TARGET_LOWER,
        fit::GRID_TOLERANCE,
        Comparison::TwoSided,
    )?;
    let full = fit::fit_power_law(
        "full",
        &series(|s| s.full),
        window,
        linear.exponent,
        SANDWICH_TOLERANCE,
        Comparison::TwoSided,
    )?;
    let gap = linear.exponent - difference.exponent;
    let pass = gap >= EXPONENT_GAP && full.pass;
    Ok(DifferenceCheck {
        difference,
        linear,
        full,
        gap,
        pass,
    })
}

/// Velocity lower bound: the Hölder floor at every sample and the fitted
/// `‖u‖` exponent against `-3/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityLowerBound {
    pub fit: DecayFitResult,
    /// Samples with `‖u‖ < ‖m‖ - ‖ϱ‖_{L³}‖u‖_{L⁶}` beyond rounding.
    pub violations: usize,
    pub pass: bool,
}

pub fn velocity_lower_bound_check(samples: &[DifferenceSample], window: (f64, f64)) -> Result<VelocityLowerBound> {
    check_window(window)?;
    let violations = samples.iter().filter(|s| s.u_l2 < s.velocity_floor() - 1e-12 * s.m_l2).count();
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.u_l2)).collect();
    let fit = fit::fit_power_law("u", &pts, window, fit::TARGET_LOWER, fit::GRID_TOLERANCE, Comparison::TwoSided)?;
    let pass = fit.pass && violations == 0;
    Ok(VelocityLowerBound { fit, violations, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use crate::initial::{generate, DataKind, InitialDataSpec};
    use core::f64::consts::PI;

    fn cfg(dt: f64, t_end: f64) -> SolverConfig {
        SolverConfig {
            dt,
            t_end,
            record_every: 1,
            ..SolverConfig::default()
        }
    }

    fn data(g: &SpectralGrid, amplitude: f64) -> PerturbationState {
        let spec = InitialDataSpec {
            kind: DataKind::GenericEta,
            amplitude,
            eta: 0.0,
            width: Some(2.0),
            ..InitialDataSpec::default()
        };
        generate(&spec, g).unwrap().state
    }

    #[test]
    fn zero_data_gives_zero_series() {
        let g = SpectralGrid::new(2.0 * PI, 8).unwrap();
        let s = coupled_run(&PerturbationState::zero(&g), cfg(0.1, 0.5), FluidParams::default(), &mut []).unwrap();
        assert!(s.failure.is_none());
        assert_eq!(s.samples.len(), 6);
        assert!(s.samples.iter().all(|r| r.delta == 0.0 && r.linear == 0.0 && r.full == 0.0));
    }

    #[test]
    fn difference_starts_at_zero_and_obeys_triangle_inequality() {
        let g = SpectralGrid::new(2.0 * PI, 16).unwrap();
        let init = data(&g, 0.3);
        let s = coupled_run(&init, cfg(0.05, 1.0), FluidParams::default(), &mut []).unwrap();
        assert_eq!(s.samples[0].delta, 0.0);
        assert!(s.samples[1].delta > 0.0);
        for r in &s.samples {
            assert!(r.full >= r.linear - r.delta - 1e-14);
            assert!(r.u_l2 >= r.velocity_floor() - 1e-12);
        }
    }

    #[test]
    fn linear_configuration_has_no_difference() {
        let g = SpectralGrid::new(2.0 * PI, 16).unwrap();
        let init = data(&g, 0.3);
        let c = SolverConfig {
            nonlinear: false,
            ..cfg(0.1, 2.0)
        };
        let s = coupled_run(&init, c, FluidParams::default(), &mut []).unwrap();
        assert!(s.samples.iter().all(|r| r.delta <= 1e-10));
    }

    #[test]
    fn difference_is_quadratic_in_amplitude() {
        let g = SpectralGrid::new(2.0 * PI, 16).unwrap();
        let at = |eps: f64| {
            let s = coupled_run(&data(&g, eps), cfg(0.02, 1.0), FluidParams::default(), &mut []).unwrap();
            s.samples.last().unwrap().delta
        };
        let d: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&e| at(e)).collect();
        for w in d.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{d:?}");
        }
    }

    fn synthetic(diff_slope: f64, full_slope: f64) -> Vec<DifferenceSample> {
        fit::log_spaced(10.0, 1e3, 40)
            .into_iter()
            .map(|t| {
                let s = 1.0 + t;
                DifferenceSample {
                    t,
                    delta: 0.1 * s.powf(diff_slope),
                    linear: s.powf(-0.75),
                    full: 1.1 * s.powf(full_slope),
                    m_l2: s.powf(-0.75),
                    u_l2: s.powf(-0.75),
                    ..DifferenceSample::default()
                }
            })
            .collect()
    }

    #[test]
    fn synthetic_checks() {
        let ok = difference_decay_check(&synthetic(-1.25, -0.75), (10.0, 1e3)).unwrap();
        assert!(ok.pass);
        assert!((ok.gap - 0.5).abs() < 1e-10);
        let flat = difference_decay_check(&synthetic(-0.75, -0.75), (10.0, 1e3)).unwrap();
        assert!(!flat.pass);
        assert!(flat.gap.abs() < 1e-10);
        let off = difference_decay_check(&synthetic(-1.25, -0.5), (10.0, 1e3)).unwrap();
        assert!(!off.pass);
        let short = difference_decay_check(&synthetic(-1.25, -0.75), (10.0, 50.0)).unwrap_err();
        assert!(matches!(short, Error::WindowTooShort { required_end, .. } if (required_end - 109.0).abs() < 1e-9));
        let v = velocity_lower_bound_check(&synthetic(-1.25, -0.75), (10.0, 1e3)).unwrap();
        assert!(v.pass && v.violations == 0);
    }

    #[test]
    fn window_may_start_at_the_initial_time() {
        let mut s = synthetic(-1.25, -0.75);
        s.insert(
            0,
            DifferenceSample {
                linear: 1.0,
                full: 1.1,
                ..DifferenceSample::default()
            },
        );
        let c = difference_decay_check(&s, (0.0, 1e3)).unwrap();
        assert!(c.pass);
        assert_eq!(c.difference.samples, 40);
    }

    #[test]
    fn zero_density_means_equal_u_and_m() {
        let g = SpectralGrid::new(2.0 * PI, 8).unwrap();
        let spec = InitialDataSpec {
            kind: DataKind::Solenoidal,
            amplitude: 0.2,
            width: Some(1.5),
            ..InitialDataSpec::default()
        };
        let init = generate(&spec, &g).unwrap().state;
        let s = difference_sample(&init, &init, &FluidParams::default()).unwrap();
        assert_eq!(s.u_l2, s.m_l2);
        assert_eq!(s.rho_l3, 0.0);
    }
}
