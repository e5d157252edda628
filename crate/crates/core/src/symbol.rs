//! The 4×4 Fourier symbol of the linearised operator and its eigenstructure.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::FluidParams;
use crate::semigroup::{acoustic_exp, Block2};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Complex 4×4 matrix acting on `(ϱ̂, m̂₁, m̂₂, m̂₃)`.
pub type Matrix4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn zero4() -> Matrix4 {
    [[ZERO; 4]; 4]
}

pub fn identity4() -> Matrix4 {
    let mut m = zero4();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn matmul4(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    let mut out = zero4();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn add4(a: &Matrix4, s: Complex64, b: &Matrix4) -> Matrix4 {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += s * b[i][j];
        }
    }
    out
}

/// Largest entry modulus.
pub fn max_abs4(a: &Matrix4) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `B̂(ξ)`: `∂ₜϱ̂ = -iξ·m̂`, `∂ₜm̂ = -iP'(1)ξϱ̂ - μ|ξ|²m̂ - (μ+λ)ξ(ξ·m̂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMatrix {
    pub xi: [f64; 3],
    pub entries: Matrix4,
}

pub fn symbol(xi: [f64; 3], params: &FluidParams) -> SymbolMatrix {
    let p = params.p_prime_1();
    let mu = params.mu();
    let ml = params.mu() + params.lambda();
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let mut e = zero4();
    for j in 0..3 {
        e[0][j + 1] = -I * xi[j];
        e[j + 1][0] = -I * (p * xi[j]);
        for l in 0..3 {
            let diag = if j == l { -mu * k2 } else { 0.0 };
            e[j + 1][l + 1] = Complex64::new(diag - ml * xi[j] * xi[l], 0.0);
        }
    }
    SymbolMatrix { xi, entries: e }
}

impl SymbolMatrix {
    pub fn apply(&self, v: [Complex64; 4]) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(&self.entries) {
            *o = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Acoustic eigenvalues `λ± = -ν|ξ|²/2 ± √(ν²|ξ|⁴/4 - P'(1)|ξ|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcousticPair {
    Distinct {
        plus: Complex64,
        minus: Complex64,
    },
    /// Within relative distance `1e-6` of the double root `2√P'(1)/ν`.
    Degenerate {
        root: f64,
    },
}

/// Helmholtz split of `B̂(ξ)`: solenoidal heat modes plus the acoustic block.
#[derive(Debug, Clone, Copy)]
pub struct ModeDecomposition {
    pub xi: [f64; 3],
    pub params: FluidParams,
    /// `-μ|ξ|²`, multiplicity two.
    pub solenoidal: f64,
    pub acoustic: AcousticPair,
    /// Projector onto `{ϱ̂ = 0, m̂ ⊥ ξ}`.
    pub solenoidal_projector: Matrix4,
    /// `[P₊, P₋]` when distinct; `[P, N]` with `N` nilpotent when degenerate.
    pub acoustic_parts: [Matrix4; 2],
}

const DEGENERATE_TOL: f64 = 1e-6;

/// Eigenvalues and spectral projectors of `B̂(ξ)`; `ξ = 0` is an error.
pub fn eigenmodes(xi: [f64; 3], params: &FluidParams) -> Result<ModeDecomposition> {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if k2 == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let k = k2.sqrt();
    let n = [xi[0] / k, xi[1] / k, xi[2] / k];
    let mut sol = zero4();
    for j in 0..3 {
        for l in 0..3 {
            let d = if j == l { 1.0 } else { 0.0 };
            sol[j + 1][l + 1] = Complex64::new(d - n[j] * n[l], 0.0);
        }
    }
    let nu = params.nu();
    let c = -0.5 * nu * k2;
    // complex 2×2 block in the orthonormal basis e₀ = (1, 0), e₁ = (0, ξ̂)
    let m = [[ZERO, -I * k], [-I * (params.p_prime_1() * k), Complex64::new(-nu * k2, 0.0)]];
    let embed = |b: [[Complex64; 2]; 2]| -> Matrix4 {
        let v = [
            [Complex64::new(1.0, 0.0), ZERO],
            [ZERO, Complex64::new(n[0], 0.0)],
            [ZERO, Complex64::new(n[1], 0.0)],
            [ZERO, Complex64::new(n[2], 0.0)],
        ];
        let mut out = zero4();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = ZERO;
                for p in 0..2 {
                    for q in 0..2 {
                        s += v[i][p] * b[p][q] * v[j][q].conj();
                    }
                }
                out[i][j] = s;
            }
        }
        out
    };
    let kstar = params.critical_wavenumber();
    let one = Complex64::new(1.0, 0.0);
    let (acoustic, parts) = if (k - kstar).abs() <= DEGENERATE_TOL * kstar {
        let p = embed([[one, ZERO], [ZERO, one]]);
        let nil = embed([[m[0][0] - c, m[0][1]], [m[1][0], m[1][1] - c]]);
        (AcousticPair::Degenerate { root: c }, [p, nil])
    } else {
        let d = Complex64::new(c * c - params.p_prime_1() * k2, 0.0);
        let sq = d.sqrt();
        let plus = c + sq;
        let minus = c - sq;
        let proj = |lam: Complex64, other: Complex64| {
            let s = one / (lam - other);
            embed([[(m[0][0] - other) * s, m[0][1] * s], [m[1][0] * s, (m[1][1] - other) * s]])
        };
        (AcousticPair::Distinct { plus, minus }, [proj(plus, minus), proj(minus, plus)])
    };
    Ok(ModeDecomposition {
        xi,
        params: *params,
        solenoidal: -params.mu() * k2,
        acoustic,
        solenoidal_projector: sol,
        acoustic_parts: parts,
    })
}

impl ModeDecomposition {
    /// All four eigenvalues, solenoidal pair first.
    pub fn eigenvalues(&self) -> [Complex64; 4] {
        let s = Complex64::new(self.solenoidal, 0.0);
        match self.acoustic {
            AcousticPair::Distinct { plus, minus } => [s, s, plus, minus],
            AcousticPair::Degenerate { root } => [s, s, Complex64::new(root, 0.0), Complex64::new(root, 0.0)],
        }
    }

    /// Projectors in the order solenoidal, acoustic (the whole block when
    /// degenerate, `P₊ + P₋` otherwise).
    pub fn projectors(&self) -> [Matrix4; 2] {
        let ac = match self.acoustic {
            AcousticPair::Distinct { .. } => add4(&self.acoustic_parts[0], Complex64::new(1.0, 0.0), &self.acoustic_parts[1]),
            AcousticPair::Degenerate { .. } => self.acoustic_parts[0],
        };
        [self.solenoidal_projector, ac]
    }

    /// `Σ λᵢ Pᵢ` (plus the nilpotent part at the double root).
    pub fn reconstruct(&self) -> Matrix4 {
        let mut out = add4(&zero4(), Complex64::new(self.solenoidal, 0.0), &self.solenoidal_projector);
        match self.acoustic {
            AcousticPair::Distinct { plus, minus } => {
                out = add4(&out, plus, &self.acoustic_parts[0]);
                out = add4(&out, minus, &self.acoustic_parts[1]);
            }
            AcousticPair::Degenerate { root } => {
                out = add4(&out, Complex64::new(root, 0.0), &self.acoustic_parts[0]);
                out = add4(&out, Complex64::new(1.0, 0.0), &self.acoustic_parts[1]);
            }
        }
        out
    }

    /// `e^{tB̂(ξ)}`: heat factor on the solenoidal plane, closed-form 2×2
    /// exponential on the acoustic block.
    pub fn exp(&self, t: f64) -> Matrix4 {
        let k2 = -self.solenoidal / self.params.mu();
        let k = k2.sqrt();
        let e: Block2 = acoustic_exp(k, t, &self.params);
        let n = [self.xi[0] / k, self.xi[1] / k, self.xi[2] / k];
        // (ϱ, β) = S (a, b) with S = diag(1, -i)
        let b = [
            [Complex64::new(e[0][0], 0.0), I * e[0][1]],
            [-I * e[1][0], Complex64::new(e[1][1], 0.0)],
        ];
        let mut out = add4(
            &zero4(),
            Complex64::new((self.solenoidal * t).exp(), 0.0),
            &self.solenoidal_projector,
        );
        let v = |i: usize, p: usize| -> f64 {
            match (i, p) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 0.0,
                (i, _) => n[i - 1],
            }
        };
        for i in 0..4 {
            for j in 0..4 {
                for p in 0..2 {
                    for q in 0..2 {
                        out[i][j] += v(i, p) * b[p][q] * v(j, q);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_frequency() {
        let p = FluidParams::default();
        assert_eq!(symbol([0.0; 3], &p).entries, zero4());
        assert!(matches!(eigenmodes([0.0; 3], &p), Err(Error::ZeroFrequency)));
    }

    #[test]
    fn unit_wavevector_entries() {
        let e = symbol([1.0, 0.0, 0.0], &FluidParams::default()).entries;
        assert_eq!(e[1][1], c(-2.0, 0.0));
        assert_eq!(e[2][2], c(-1.0, 0.0));
        assert_eq!(e[3][3], c(-1.0, 0.0));
        assert_eq!(e[0][1], c(0.0, -1.0));
        assert_eq!(e[1][0], c(0.0, -1.0));
        assert_eq!(e[0][2], c(0.0, 0.0));
    }

    #[test]
    fn symbol_matches_operator_on_a_plane_wave() {
        // B applied to (ϱ, m) = (r, v) e^{iξ·x}: derivatives become iξ
        let p = FluidParams::new(0.8, 0.3, 1.5).unwrap();
        let xi = [0.3, -1.1, 0.7];
        let r = c(0.2, -0.4);
        let v = [c(1.0, 0.5), c(-0.3, 0.2), c(0.1, 0.0)];
        let ixi = [I * xi[0], I * xi[1], I * xi[2]];
        let div: Complex64 = (0..3).map(|j| ixi[j] * v[j]).sum();
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        let mut want = [-div, ZERO, ZERO, ZERO];
        for j in 0..3 {
            want[j + 1] = -p.p_prime_1() * ixi[j] * r - p.mu() * k2 * v[j] + (p.mu() + p.lambda()) * ixi[j] * div;
        }
        let got = symbol(xi, &p).apply([r, v[0], v[1], v[2]]);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_at_half_and_unit_wavenumber() {
        let p = FluidParams::default();
        let d = eigenmodes([0.5, 0.0, 0.0], &p).unwrap();
        assert!((d.solenoidal + 0.25).abs() < 1e-15);
        match d.acoustic {
            AcousticPair::Distinct { plus, minus } => {
                assert!((plus - c(-0.25, 3f64.sqrt() / 4.0)).norm() < 1e-12);
                assert!((minus - c(-0.25, -3f64.sqrt() / 4.0)).norm() < 1e-12);
            }
            _ => panic!("expected distinct roots"),
        }
        let d = eigenmodes([0.0, 0.0, 1.0], &p).unwrap();
        assert_eq!(d.acoustic, AcousticPair::Degenerate { root: -1.0 });
    }

    #[test]
    fn low_frequency_expansion() {
        let p = FluidParams::new(1.0, 0.5, 1.4).unwrap();
        for k in [1e-2, 1e-3] {
            let d = eigenmodes([k, 0.0, 0.0], &p).unwrap();
            let AcousticPair::Distinct { plus, .. } = d.acoustic else {
                panic!()
            };
            let want = c(-0.5 * p.nu() * k * k, p.p_prime_1().sqrt() * k);
            // next correction is O(k³)
            assert!((plus - want).norm() < 2.0 * k * k * k);
        }
    }

    #[test]
    fn projectors_are_complementary_idempotents_commuting_with_symbol() {
        let p = FluidParams::new(0.9, 0.2, 1.3).unwrap();
        let xi = [0.4, -0.2, 0.9];
        let d = eigenmodes(xi, &p).unwrap();
        let [ps, pa] = d.projectors();
        let sum = add4(&ps, c(1.0, 0.0), &pa);
        assert!(max_abs4(&add4(&sum, c(-1.0, 0.0), &identity4())) < 1e-14);
        for q in [ps, pa, d.acoustic_parts[0], d.acoustic_parts[1]] {
            assert!(max_abs4(&add4(&matmul4(&q, &q), c(-1.0, 0.0), &q)) < 1e-13);
            let b = symbol(xi, &p).entries;
            assert!(max_abs4(&add4(&matmul4(&q, &b), c(-1.0, 0.0), &matmul4(&b, &q))) < 1e-13);
        }
    }

    // Taylor series with scaling and squaring, independent of the eigen split
    fn expm_dense(a: &Matrix4) -> Matrix4 {
        let mut x = *a;
        let mut squarings = 0;
        while max_abs4(&x) * 4.0 > 0.5 {
            x = add4(&zero4(), c(0.5, 0.0), &x);
            squarings += 1;
        }
        let mut sum = identity4();
        let mut term = identity4();
        for j in 1..30 {
            term = add4(&zero4(), c(1.0 / j as f64, 0.0), &matmul4(&term, &x));
            sum = add4(&sum, c(1.0, 0.0), &term);
        }
        for _ in 0..squarings {
            sum = matmul4(&sum, &sum);
        }
        sum
    }

    #[test]
    fn exponential_matches_dense_oracle_including_double_root() {
        let p = FluidParams::default();
        for xi in [[0.5, 0.0, 0.0], [0.0, 0.6, 0.8], [0.3, 0.2, -0.1], [2.0, 1.0, -1.5]] {
            for t in [0.1, 1.0, 5.0] {
                let d = eigenmodes(xi, &p).unwrap();
                let b = symbol(xi, &p).entries;
                let want = expm_dense(&add4(&zero4(), c(t, 0.0), &b));
                let err = max_abs4(&add4(&d.exp(t), c(-1.0, 0.0), &want));
                assert!(err < 1e-12 * max_abs4(&want), "xi={xi:?} t={t} err={err}");
            }
        }
    }

    proptest! {
        #[test]
        fn symbol_at_minus_xi_is_conjugate(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
            let p = FluidParams::new(1.2, 0.1, 1.4).unwrap();
            let a = symbol([x, y, z], &p).entries;
            let b = symbol([-x, -y, -z], &p).entries;
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert_eq!(b[i][j], a[i][j].conj());
                }
            }
        }

        #[test]
        fn reconstruction_and_dissipativity(
            x in -3.0..3.0f64, y in -3.0..3.0f64, z in 0.05..3.0f64,
            mu in 0.1..2.0f64, lam_frac in 0.0..1.0f64, gamma in 1.0..2.0f64,
        ) {
            // lambda spans [-2μ/3, 2μ)
            let lambda = -2.0 * mu / 3.0 + lam_frac * (8.0 * mu / 3.0) * 0.999;
            let p = FluidParams::new(mu, lambda, gamma).unwrap();
            let xi = [x, y, z];
            let d = eigenmodes(xi, &p).unwrap();
            for l in d.eigenvalues() {
                prop_assert!(l.re <= 0.0);
            }
            if let AcousticPair::Distinct { plus, minus } = d.acoustic {
                // skip the ill-conditioned neighbourhood of the double root
                prop_assume!((plus - minus).norm() > 1e-3 * plus.norm());
            }
            let b = symbol(xi, &p).entries;
            let err = max_abs4(&add4(&d.reconstruct(), c(-1.0, 0.0), &b));
            prop_assert!(err <= 1e-10 * max_abs4(&b));
        }
    }
}
