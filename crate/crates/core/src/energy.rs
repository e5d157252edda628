//! Energy functionals, Fourier splitting and the dissipation inequality,
//! evaluated on solver snapshots.
//!
//! All norms are Plancherel sums over the half spectrum. The cross term is
//!
//! ```text
//! ∫ ∇u · ∇²ϱ dx = Σ_ξ |ξ|² Im((ξ·û) conj(ϱ̂))
//! ```

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::params::FluidParams;
use crate::solver::{nonlinear_terms_velocity, Observer};
use crate::spectral::{gradient_energy, weighted_energy};
use crate::state::{Component, NormSpace, PerturbationState};

/// Constants of the higher-order energy functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConfig {
    pub delta0: f64,
    /// Fourier splitting radius constant.
    pub r: f64,
    /// Integrability index of the initial data.
    pub p: f64,
    params: FluidParams,
}

impl EnergyConfig {
    pub const DEFAULT_DELTA0: f64 = 0.05;

    /// `R` defaults to `6 C₁ / (p c_*)` with the constructive `C₁`.
    pub fn new(params: FluidParams, delta0: f64, p: f64, r: Option<f64>) -> Result<Self> {
        let bound = 0.5 * params.p_prime_1().min(1.0);
        if !(delta0 >= 0.0 && delta0 <= bound) {
            return Err(Error::InvalidParameter {
                field: "energy.delta0",
                reason: "must lie in [0, min(1, P'(1))/2]",
            });
        }
        if !(1.0..2.0).contains(&p) {
            return Err(Error::InvalidParameter {
                field: "energy.p",
                reason: "must lie in [1, 2)",
            });
        }
        let mut cfg = Self { delta0, r: 0.0, p, params };
        cfg.r = match r {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(_) => {
                return Err(Error::InvalidParameter {
                    field: "energy.r",
                    reason: "must be positive and finite",
                })
            }
            None if delta0 == 0.0 => {
                return Err(Error::InvalidParameter {
                    field: "energy.r",
                    reason: "required when delta0 = 0",
                })
            }
            None => 6.0 * cfg.equivalence_constants().1 / (p * cfg.c_star()),
        };
        Ok(cfg)
    }

    pub fn with_defaults(params: FluidParams) -> Self {
        Self::new(params, Self::DEFAULT_DELTA0, 1.0, None).expect("default energy constants are valid")
    }

    pub fn params(&self) -> &FluidParams {
        &self.params
    }

    /// `c_* = min(μ, δ₀ P'(1))`.
    pub fn c_star(&self) -> f64 {
        self.params.mu().min(self.delta0 * self.params.p_prime_1())
    }

    /// `(c₁, C₁)` with `c₁ X ≤ E₁² ≤ C₁ X`, `X = ‖∇u‖²_{H¹} + ‖∇ϱ‖²_{H¹}`.
    ///
    /// From `2δ₀|∫∇u·∇²ϱ| ≤ δ₀(‖∇u‖² + ‖∇²ϱ‖²)`:
    /// `c₁ = min(1, P'(1)) - δ₀` and `C₁ = max(1, P'(1)) + δ₀`.
    pub fn equivalence_constants(&self) -> (f64, f64) {
        let pp = self.params.p_prime_1();
        (pp.min(1.0) - self.delta0, pp.max(1.0) + self.delta0)
    }

    /// Radius of the low-frequency ball `S₀` at time `t`.
    pub fn split_radius(&self, t: f64) -> f64 {
        (self.r / (1.0 + t)).sqrt()
    }
}

/// `E₁²` and its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyE1 {
    pub value: f64,
    /// `‖∇u‖²_{H¹}`.
    pub grad_u_sq: f64,
    /// `‖∇ϱ‖²_{H¹}`.
    pub grad_rho_sq: f64,
    /// `∫ ∇u · ∇²ϱ dx`.
    pub cross: f64,
}

fn cross_term(state: &PerturbationState, u: &[SpectralField; 3]) -> f64 {
    let rho = state.rho();
    state
        .grid()
        .modes()
        .map(|m| {
            let j = m.index;
            let xu = m.xi[0] * u[0][j] + m.xi[1] * u[1][j] + m.xi[2] * u[2][j];
            m.weight * m.xi_sq * (xu * rho[j].conj()).im
        })
        .sum()
}

/// `E₁² = ‖∇u‖²_{H¹} + P'(1)‖∇ϱ‖²_{H¹} + 2δ₀ ∫∇u·∇²ϱ dx`.
pub fn energy_e1(state: &PerturbationState, config: &EnergyConfig) -> Result<EnergyE1> {
    let u = state.velocity()?;
    let grad_u_sq = state.sobolev_norm(Component::Velocity, 1, NormSpace::H1)?.powi(2);
    let grad_rho_sq = state.sobolev_norm(Component::Density, 1, NormSpace::H1)?.powi(2);
    let cross = cross_term(state, u);
    Ok(EnergyE1 {
        value: grad_u_sq + config.params.p_prime_1() * grad_rho_sq + 2.0 * config.delta0 * cross,
        grad_u_sq,
        grad_rho_sq,
        cross,
    })
}

/// `(‖∇²u‖²_{H¹}, ‖∇²ϱ‖²_{L²})`.
pub fn dissipation_terms(state: &PerturbationState) -> Result<(f64, f64)> {
    Ok((
        state.sobolev_norm(Component::Velocity, 2, NormSpace::H1)?.powi(2),
        state.sobolev_norm(Component::Density, 2, NormSpace::L2)?.powi(2),
    ))
}

/// Low/high split of one norm across `S₀`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Split {
    pub low: f64,
    pub high: f64,
}

impl Split {
    pub fn total(&self) -> f64 {
        self.low.hypot(self.high)
    }
}

/// Split norms of `‖∇^d u‖` and `‖∇^d ϱ‖`, `d = 0, 1, 2`, and the three
/// Fourier splitting inequalities at radius `sqrt(R/(1+t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitReport {
    pub radius: f64,
    pub u: [Split; 3],
    pub rho: [Split; 3],
    /// Left minus right side of each inequality; non-negative when it holds.
    pub margins: [f64; 3],
    /// Whether each inequality holds up to rounding.
    pub holds: [bool; 3],
}

impl SplitReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|h| *h)
    }
}

fn split_of(fields: &[SpectralField], state: &PerturbationState, order: u32, radius_sq: f64) -> Split {
    let grid = state.grid();
    let (mut low, mut high) = (0.0, 0.0);
    for f in fields {
        low += weighted_energy(f, grid, |k2| if k2 <= radius_sq { k2.powi(order as i32) } else { 0.0 });
        high += weighted_energy(f, grid, |k2| if k2 > radius_sq { k2.powi(order as i32) } else { 0.0 });
    }
    Split {
        low: low.sqrt(),
        high: high.sqrt(),
    }
}

/// Fourier splitting diagnostics at time `t`:
///
/// ```text
/// ‖∇²u‖² ≥ a‖∇u‖² − a²‖u‖²
/// ‖∇³u‖² ≥ a‖∇²u‖² − a²‖∇u‖²
/// ‖∇²ϱ‖² ≥ a‖∇ϱ‖² − a²‖ϱ‖²,      a = R/(1+t)
/// ```
pub fn fourier_split_norms(state: &PerturbationState, t: f64, config: &EnergyConfig) -> Result<SplitReport> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let grid = state.grid();
    let u = state.velocity()?;
    let radius = config.split_radius(t);
    let r2 = radius * radius;
    let us = [0, 1, 2].map(|d| split_of(u, state, d, r2));
    let rs = [0, 1, 2].map(|d| split_of(core::slice::from_ref(state.rho()), state, d, r2));
    let a = config.r / (1.0 + t);
    let ue = |d: u32| u.iter().map(|f| gradient_energy(f, grid, d)).sum::<f64>();
    let re = |d: u32| gradient_energy(state.rho(), grid, d);
    let triples = [(ue(2), ue(1), ue(0)), (ue(3), ue(2), ue(1)), (re(2), re(1), re(0))];
    let mut margins = [0.0; 3];
    let mut holds = [true; 3];
    for (i, (hi, mid, lo)) in triples.into_iter().enumerate() {
        margins[i] = hi - (a * mid - a * a * lo);
        let scale = hi + a * mid + a * a * lo;
        holds[i] = margins[i] >= -1e-12 * scale;
    }
    Ok(SplitReport {
        radius,
        u: us,
        rho: rs,
        margins,
        holds,
    })
}

/// `(‖∂ₜϱ‖_{L²}, ‖∂ₜu‖_{L²})` from the equations, with dealiased nonlinear terms.
pub fn time_derivative_norms(state: &PerturbationState, params: &FluidParams) -> Result<(f64, f64)> {
    let grid = state.grid();
    let u = state.velocity()?;
    let terms = nonlinear_terms_velocity(state, params, true)?;
    let s1 = terms.s1.as_ref().expect("velocity terms carry S1");
    let s2 = terms.s2.as_ref().expect("velocity terms carry S2");
    let (mu, ml, pp) = (params.mu(), params.mu() + params.lambda(), params.p_prime_1());
    let rho = state.rho();
    let i = num_complex::Complex64::new(0.0, 1.0);
    let (mut dr, mut du) = (0.0, 0.0);
    for m in grid.modes() {
        let j = m.index;
        let xu = m.xi[0] * u[0][j] + m.xi[1] * u[1][j] + m.xi[2] * u[2][j];
        dr += m.weight * (-i * xu + s1[j]).norm_sqr();
        for c in 0..3 {
            let v = -mu * m.xi_sq * u[c][j] - ml * m.xi[c] * xu - i * pp * m.xi[c] * rho[j] + s2[c][j];
            du += m.weight * v.norm_sqr();
        }
    }
    Ok((dr.sqrt(), du.sqrt()))
}

/// One diagnostic sample. Field order is the `energy.csv` column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub rho_l2: f64,
    pub u_l2: f64,
    pub grad_rho_h1: f64,
    pub grad_u_h1: f64,
    pub grad2_u_h1: f64,
    pub grad2_rho_l2: f64,
    pub e1_sq: f64,
    pub cross_term: f64,
    pub split: SplitReport,
    pub dt_rho_l2: f64,
    pub dt_u_l2: f64,
    pub min_density: f64,
    pub floor_ok: bool,
}

impl EnergyReport {
    /// Names of the twelve split columns, in order.
    pub const SPLIT_COLUMNS: [&'static str; 12] = [
        "u_l2_low",
        "u_l2_high",
        "grad_u_l2_low",
        "grad_u_l2_high",
        "grad2_u_l2_low",
        "grad2_u_l2_high",
        "rho_l2_low",
        "rho_l2_high",
        "grad_rho_l2_low",
        "grad_rho_l2_high",
        "grad2_rho_l2_low",
        "grad2_rho_l2_high",
    ];

    pub fn split_values(&self) -> [f64; 12] {
        let s = &self.split;
        [
            s.u[0].low,
            s.u[0].high,
            s.u[1].low,
            s.u[1].high,
            s.u[2].low,
            s.u[2].high,
            s.rho[0].low,
            s.rho[0].high,
            s.rho[1].low,
            s.rho[1].high,
            s.rho[2].low,
            s.rho[2].high,
        ]
    }

    /// `E₁²` recomputed from the stored norms.
    pub fn e1_from_parts(&self, config: &EnergyConfig) -> f64 {
        self.grad_u_h1.powi(2) + config.params.p_prime_1() * self.grad_rho_h1.powi(2) + 2.0 * config.delta0 * self.cross_term
    }

    /// `‖∇²u‖²_{H¹} + ‖∇²ϱ‖²_{L²}`.
    pub fn dissipation(&self) -> f64 {
        self.grad2_u_h1.powi(2) + self.grad2_rho_l2.powi(2)
    }

    pub fn split_ok(&self) -> bool {
        self.split.all_hold()
    }
}

/// All diagnostics of one snapshot.
pub fn energy_report(state: &PerturbationState, config: &EnergyConfig, floor: f64) -> Result<EnergyReport> {
    let e1 = energy_e1(state, config)?;
    let (d_u, d_rho) = dissipation_terms(state)?;
    let split = fourier_split_norms(state, state.time().max(0.0), config)?;
    let (dt_rho, dt_u) = time_derivative_norms(state, &config.params)?;
    Ok(EnergyReport {
        t: state.time(),
        rho_l2: state.sobolev_norm(Component::Density, 0, NormSpace::L2)?,
        u_l2: state.sobolev_norm(Component::Velocity, 0, NormSpace::L2)?,
        grad_rho_h1: e1.grad_rho_sq.sqrt(),
        grad_u_h1: e1.grad_u_sq.sqrt(),
        grad2_u_h1: d_u.sqrt(),
        grad2_rho_l2: d_rho.sqrt(),
        e1_sq: e1.value,
        cross_term: e1.cross,
        split,
        dt_rho_l2: dt_rho,
        dt_u_l2: dt_u,
        min_density: state.min_density(),
        floor_ok: state.min_density() >= floor,
    })
}

/// Outcome of [`check_energy_inequality`].
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    /// Earliest sample time from which no violation occurs; `None` if the
    /// last sample violates.
    pub first_time_satisfied: Option<f64>,
    /// Largest `dE₁²/dt + c_*·D` over the series.
    pub max_violation: f64,
    pub violations: usize,
    /// `(t, dE₁²/dt + c_*·D)` per sample.
    pub residuals: Vec<(f64, f64)>,
}

/// Derivative of samples `(t, y)` by three-point stencils on a possibly
/// non-uniform grid; one-sided at the ends.
pub fn discrete_derivative(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if n < 3 || y.len() != n {
        return Err(Error::InsufficientData("derivative needs at least 3 samples"));
    }
    let mut out = Vec::with_capacity(n);
    let three = |i0: usize, x: f64| {
        let (a, b, c) = (t[i0], t[i0 + 1], t[i0 + 2]);
        // derivative of the quadratic interpolant through three points at x
        y[i0] * (2.0 * x - b - c) / ((a - b) * (a - c))
            + y[i0 + 1] * (2.0 * x - a - c) / ((b - a) * (b - c))
            + y[i0 + 2] * (2.0 * x - a - b) / ((c - a) * (c - b))
    };
    out.push(three(0, t[0]));
    for i in 1..n - 1 {
        out.push(three(i - 1, t[i]));
    }
    out.push(three(n - 3, t[n - 1]));
    Ok(out)
}

/// Checks `dE₁²/dt + c_*(‖∇²u‖²_{H¹} + ‖∇²ϱ‖²_{L²}) ≤ 0` on a recorded series.
///
/// A sample violates when the residual exceeds `1e-6·|E₁²|·max(1, 1/Δt)`,
/// `Δt` the local spacing.
pub fn check_energy_inequality(series: &[EnergyReport], config: &EnergyConfig) -> Result<InequalityReport> {
    if series.len() < 3 {
        return Err(Error::InsufficientData("energy inequality needs at least 3 samples"));
    }
    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let e: Vec<f64> = series.iter().map(|r| r.e1_sq).collect();
    let de = discrete_derivative(&t, &e)?;
    let cs = config.c_star();
    let mut residuals = Vec::with_capacity(series.len());
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut last_bad = None;
    for (i, r) in series.iter().enumerate() {
        let res = de[i] + cs * r.dissipation();
        let dt = if i == 0 { t[1] - t[0] } else { t[i] - t[i - 1] };
        let tol = 1e-6 * r.e1_sq.abs() * (1.0 / dt).max(1.0);
        if res > tol {
            violations += 1;
            last_bad = Some(i);
        }
        max_violation = max_violation.max(res);
        residuals.push((r.t, res));
    }
    let first_time_satisfied = match last_bad {
        None => Some(t[0]),
        Some(i) if i + 1 < t.len() => Some(t[i + 1]),
        Some(_) => None,
    };
    Ok(InequalityReport {
        first_time_satisfied,
        max_violation,
        violations,
        residuals,
    })
}

/// Running `∫₀ᵗ (1+τ)² D(τ) dτ` with `D` the dissipation.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationIntegral {
    pub values: Vec<(f64, f64)>,
    /// Relative growth over the last decade of time is below 1%.
    pub plateau: bool,
    pub last_decade_growth: f64,
}

/// Trapezoidal accumulation over `(t, D(t))` samples.
pub fn weighted_dissipation_integral(series: &[(f64, f64)]) -> Result<DissipationIntegral> {
    if series.len() < 2 {
        return Err(Error::InsufficientData("dissipation integral needs at least 2 samples"));
    }
    let f = |&(t, d): &(f64, f64)| (1.0 + t).powi(2) * d;
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(series.len());
    values.push((series[0].0, 0.0));
    for w in series.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (f(&w[0]) + f(&w[1]));
        values.push((w[1].0, acc));
    }
    let (t_end, total) = *values.last().expect("non-empty");
    let t_mid = t_end / 10.0;
    if t_mid < values[0].0 {
        return Err(Error::InsufficientData("series does not span a decade of time"));
    }
    // linear interpolation of the running value at t_end/10
    let at_mid = {
        let k = values.partition_point(|(t, _)| *t < t_mid).max(1);
        let (t0, v0) = values[k - 1];
        let (t1, v1) = values[k];
        if t1 == t0 {
            v1
        } else {
            v0 + (v1 - v0) * (t_mid - t0) / (t1 - t0)
        }
    };
    let growth = if total > 0.0 { (total - at_mid) / total } else { 0.0 };
    Ok(DissipationIntegral {
        values,
        plateau: growth < 0.01,
        last_decade_growth: growth,
    })
}

/// Observer collecting [`EnergyReport`]s during a run.
#[derive(Debug, Clone)]
pub struct EnergyRecorder {
    pub config: EnergyConfig,
    pub floor: f64,
    pub reports: Vec<EnergyReport>,
}

impl EnergyRecorder {
    pub fn new(config: EnergyConfig, floor: f64) -> Self {
        Self {
            config,
            floor,
            reports: Vec::new(),
        }
    }
}

impl Observer for EnergyRecorder {
    fn observe(&mut self, state: &PerturbationState, _step: u64) -> Result<()> {
        self.reports.push(energy_report(state, &self.config, self.floor)?);
        Ok(())
    }
}
