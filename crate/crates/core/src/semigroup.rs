//! Exact linear propagation `e^{tB̂(ξ)}` on the grid.
//!
//! Per mode the symbol splits into two solenoidal heat modes with rate `-μ|ξ|²`
//! and a 2×2 acoustic block. Writing `a = ϱ̂` and `b = i ξ̂·m̂`, the acoustic
//! block is the real matrix
//!
//! ```text
//! A = [[0, -k], [P'(1) k, -ν k²]],   k = |ξ|, ν = 2μ + λ,
//! ```
//!
//! whose exponential, `φ₁` and `φ₂` are evaluated in closed form. The same
//! operator propagates `(ϱ, m)` and `(ϱ, u)`, since both forms share the
//! linear part.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpectralField, SpectralGrid};
use crate::params::FluidParams;
use crate::state::PerturbationState;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Real 2×2 matrix, row-major.
pub type Block2 = [[f64; 2]; 2];

const IDENTITY: Block2 = [[1.0, 0.0], [0.0, 1.0]];

fn mul(a: &Block2, b: &Block2) -> Block2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn add_scaled(a: &Block2, s: f64, b: &Block2) -> Block2 {
    [
        [a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]],
        [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]],
    ]
}

fn scale(a: &Block2, s: f64) -> Block2 {
    [[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]]
}

fn norm1(a: &Block2) -> f64 {
    (a[0][0].abs() + a[1][0].abs()).max(a[0][1].abs() + a[1][1].abs())
}

/// Acoustic block `A(k)` in the `(a, b)` basis.
pub fn acoustic_matrix(k: f64, params: &FluidParams) -> Block2 {
    [[0.0, -k], [params.p_prime_1() * k, -params.nu() * k * k]]
}

/// `e^{tA(k)}` in closed form, uniform across the double root.
///
/// With `c = -νk²/2` and `D = c² - P'(1)k²`, `(A - cI)² = D·I`, so
/// `e^{tA} = e^{tc} [C(t²D) I + t S(t²D) (A - cI)]` where `C(z) = cosh √z`
/// and `S(z) = sinh √z / √z`, both entire in `z`.
pub fn acoustic_exp(k: f64, t: f64, params: &FluidParams) -> Block2 {
    if k == 0.0 || t == 0.0 {
        return IDENTITY;
    }
    let p = params.p_prime_1();
    let c = -0.5 * params.nu() * k * k;
    let d = c * c - p * k * k;
    let z = t * t * d;
    let a = acoustic_matrix(k, params);
    let shifted = add_scaled(&a, -c, &IDENTITY);
    let (even, odd) = if z > 1.0 {
        // real distinct roots; avoid cosh overflow and the cancellation in
        // λ₊ = c + √D by using λ₊ λ₋ = P'(1) k²
        let sq = d.sqrt();
        let lm = c - sq;
        let lp = p * k * k / lm;
        let (ep, em) = ((t * lp).exp(), (t * lm).exp());
        (0.5 * (ep + em), (ep - em) / (2.0 * sq))
    } else {
        let (cz, sz) = cosh_sinhc(z);
        let e = (t * c).exp();
        (e * cz, e * t * sz)
    };
    add_scaled(&scale(&IDENTITY, even), odd, &shifted)
}

/// `(cosh √z, sinh √z / √z)` for `z <= 1`, continued to `z < 0` as
/// `(cos √-z, sin √-z / √-z)`.
fn cosh_sinhc(z: f64) -> (f64, f64) {
    if z.abs() < 1.0 {
        let mut c = 0.0;
        let mut s = 0.0;
        let mut term = 1.0; // z^j / (2j)!
        for j in 0..24 {
            c += term;
            s += term / (2 * j + 1) as f64;
            term *= z / ((2 * j + 1) * (2 * j + 2)) as f64;
        }
        (c, s)
    } else if z < 0.0 {
        let w = (-z).sqrt();
        (w.cos(), w.sin() / w)
    } else {
        let w = z.sqrt();
        (w.cosh(), w.sinh() / w)
    }
}

fn inverse(a: &Block2) -> Block2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// `(e^{X}, φ₁(X), φ₂(X))` for `X = hA(k)`, where `φ₁(z) = (e^z - 1)/z` and
/// `φ₂(z) = (e^z - 1 - z)/z²`.
pub fn acoustic_phi(k: f64, h: f64, params: &FluidParams) -> (Block2, Block2, Block2) {
    let e = acoustic_exp(k, h, params);
    let x = scale(&acoustic_matrix(k, params), h);
    if norm1(&x) <= 1.0 {
        let mut phi1 = [[0.0; 2]; 2];
        let mut phi2 = [[0.0; 2]; 2];
        let mut power = IDENTITY; // X^j
        let mut fact = 1.0; // (j+1)!
        for j in 0..30 {
            phi1 = add_scaled(&phi1, 1.0 / fact, &power);
            phi2 = add_scaled(&phi2, 1.0 / (fact * (j + 2) as f64), &power);
            power = mul(&power, &x);
            fact *= (j + 2) as f64;
        }
        return (e, phi1, phi2);
    }
    let xinv = inverse(&x);
    let phi1 = mul(&xinv, &add_scaled(&e, -1.0, &IDENTITY));
    let phi2 = mul(&xinv, &add_scaled(&phi1, -1.0, &IDENTITY));
    (e, phi1, phi2)
}

/// Scalar `(e^z, φ₁(z), φ₂(z))`.
pub fn scalar_phi(z: f64) -> (f64, f64, f64) {
    if z.abs() <= 1.0 {
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut term = 1.0; // z^j / (j+1)!
        for j in 0..30 {
            p1 += term;
            p2 += term / (j + 2) as f64;
            term *= z / (j + 2) as f64;
        }
        return (z.exp(), p1, p2);
    }
    let e = z.exp();
    let p1 = (e - 1.0) / z;
    (e, p1, (p1 - 1.0) / z)
}

/// A linear operator that is a function of `B̂(ξ)`: a real 2×2 action on the
/// acoustic pair plus a scalar on the solenoidal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOperator {
    pub acoustic: Block2,
    pub solenoidal: f64,
}

impl ModeOperator {
    pub const IDENTITY: ModeOperator = ModeOperator {
        acoustic: IDENTITY,
        solenoidal: 1.0,
    };

    /// Applies the operator to `(ϱ̂, v̂)` at wavevector `xi` with `|xi| = k`.
    #[inline]
    pub fn apply(&self, xi: [f64; 3], k: f64, rho: Complex64, v: [Complex64; 3]) -> (Complex64, [Complex64; 3]) {
        if k == 0.0 {
            return (rho, v);
        }
        let n = [xi[0] / k, xi[1] / k, xi[2] / k];
        let beta = n[0] * v[0] + n[1] * v[1] + n[2] * v[2];
        let perp = [v[0] - n[0] * beta, v[1] - n[1] * beta, v[2] - n[2] * beta];
        let i = Complex64::new(0.0, 1.0);
        let b = i * beta;
        let a = rho;
        let e = &self.acoustic;
        let a1 = e[0][0] * a + e[0][1] * b;
        let b1 = e[1][0] * a + e[1][1] * b;
        let beta1 = -i * b1;
        let s = self.solenoidal;
        (
            a1,
            [s * perp[0] + n[0] * beta1, s * perp[1] + n[1] * beta1, s * perp[2] + n[2] * beta1],
        )
    }
}

/// `e^{tB̂}` for one wavenumber magnitude.
pub fn exp_operator(k: f64, t: f64, params: &FluidParams) -> ModeOperator {
    ModeOperator {
        acoustic: acoustic_exp(k, t, params),
        solenoidal: (-params.mu() * k * k * t).exp(),
    }
}

/// Per-shell propagators of an exponential integrator with step `h`.
///
/// Grid wavenumbers satisfy `|ξ|² = κ² n²` with integer `n²`, so every
/// operator is tabulated once per shell.
#[derive(Debug, Clone)]
pub struct PropagatorTable {
    h: f64,
    exp: Vec<ModeOperator>,
    phi1: Vec<ModeOperator>,
    phi2: Vec<ModeOperator>,
    shell: Vec<u32>,
}

impl PropagatorTable {
    pub fn new(grid: &SpectralGrid, params: &FluidParams, h: f64) -> Self {
        let half = grid.n() / 2;
        let shells = 3 * half * half + 1;
        let kappa = grid.base_wavenumber();
        let mut exp = Vec::with_capacity(shells);
        let mut phi1 = Vec::with_capacity(shells);
        let mut phi2 = Vec::with_capacity(shells);
        for n2 in 0..shells {
            let k = kappa * (n2 as f64).sqrt();
            let (e, p1, p2) = acoustic_phi(k, h, params);
            let (se, sp1, sp2) = scalar_phi(-params.mu() * k * k * h);
            exp.push(ModeOperator {
                acoustic: e,
                solenoidal: se,
            });
            phi1.push(ModeOperator {
                acoustic: p1,
                solenoidal: sp1,
            });
            phi2.push(ModeOperator {
                acoustic: p2,
                solenoidal: sp2,
            });
        }
        let shell = grid
            .modes()
            .map(|m| (m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2]) as u32)
            .collect();
        Self { h, exp, phi1, phi2, shell }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Shell index `n²` of every half-spectrum mode.
    pub fn shells(&self) -> &[u32] {
        &self.shell
    }

    pub fn exp(&self, shell: u32) -> &ModeOperator {
        &self.exp[shell as usize]
    }

    pub fn phi1(&self, shell: u32) -> &ModeOperator {
        &self.phi1[shell as usize]
    }

    pub fn phi2(&self, shell: u32) -> &ModeOperator {
        &self.phi2[shell as usize]
    }
}

/// Applies a per-shell operator to the spectral fields `(ϱ̂, v̂)` in place.
pub fn apply_per_shell(grid: &SpectralGrid, fields: &mut [SpectralField; 4], op: impl Fn(u32) -> ModeOperator) {
    for m in grid.modes() {
        let shell = (m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2]) as u32;
        let i = m.index;
        let (r, v) = op(shell).apply(m.xi, m.xi_sq.sqrt(), fields[0][i], [fields[1][i], fields[2][i], fields[3][i]]);
        fields[0][i] = r;
        fields[1][i] = v[0];
        fields[2][i] = v[1];
        fields[3][i] = v[2];
    }
}

/// `K(t) = e^{tB}` applied to `(ϱ̂, m̂)` of a grid state.
///
/// The zero mode is left unchanged and the result carries time
/// `state.time() + t`.
pub fn apply_semigroup_grid(state: &PerturbationState, t: f64, params: &FluidParams) -> Result<PerturbationState> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.grid();
    let m = state.momentum();
    let mut fields = [state.rho().clone(), m[0].clone(), m[1].clone(), m[2].clone()];
    let kappa = grid.base_wavenumber();
    let half = grid.n() / 2;
    let table: Vec<ModeOperator> = (0..=3 * half * half)
        .map(|n2| exp_operator(kappa * (n2 as f64).sqrt(), t, params))
        .collect();
    apply_per_shell(grid, &mut fields, |s| table[s as usize]);
    let [rho, m0, m1, m2] = fields;
    PerturbationState::from_momentum(grid, state.time() + t, rho, [m0, m1, m2])
}

/// Zeroed four-component spectral storage for `(ϱ̂, v̂)`.
pub fn zero_fields(grid: &SpectralGrid) -> [SpectralField; 4] {
    let z = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    [z.clone(), z.clone(), z.clone(), z]
}
