//! Transforms, Plancherel norms, spectral derivatives and dealiasing.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{RealField, SpectralField, SpectralGrid};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Real samples to unitary coefficients.
pub fn forward_transform(field: &[f64], grid: &SpectralGrid) -> Result<SpectralField> {
    grid.forward(field)
}

/// Unitary coefficients to real samples.
pub fn inverse_transform(coeffs: &[Complex64], grid: &SpectralGrid) -> Result<RealField> {
    grid.inverse(coeffs)
}

/// Two-thirds rule: zero every mode with some `|k_i| > N/3`.
pub fn dealias(coeffs: &[Complex64], grid: &SpectralGrid) -> SpectralField {
    let mut out = coeffs.to_vec();
    dealias_in_place(&mut out, grid);
    out
}

pub fn dealias_in_place(coeffs: &mut [Complex64], grid: &SpectralGrid) {
    for m in grid.modes() {
        if m.aliased {
            coeffs[m.index] = Complex64::new(0.0, 0.0);
        }
    }
}

/// `Σ_ξ |ξ|^{2d} |f̂(ξ)|²` over the full spectrum, i.e. `‖∇^d f‖²_{L²}`.
pub fn gradient_energy(coeffs: &[Complex64], grid: &SpectralGrid, order: u32) -> f64 {
    grid.modes()
        .map(|m| m.weight * m.xi_sq.powi(order as i32) * coeffs[m.index].norm_sqr())
        .sum()
}

/// `Σ_ξ w(|ξ|²) |f̂(ξ)|²` for an arbitrary radial weight.
pub fn weighted_energy(coeffs: &[Complex64], grid: &SpectralGrid, weight: impl Fn(f64) -> f64) -> f64 {
    grid.modes().map(|m| m.weight * weight(m.xi_sq) * coeffs[m.index].norm_sqr()).sum()
}

/// Plancherel inner product `∫ f g dx` of two real fields.
pub fn inner_product(f: &[Complex64], g: &[Complex64], grid: &SpectralGrid) -> f64 {
    grid.modes().map(|m| m.weight * (f[m.index] * g[m.index].conj()).re).sum()
}

/// Rectangle-rule `‖f‖_{L²}` of real samples.
pub fn l2_quadrature(field: &[f64], grid: &SpectralGrid) -> f64 {
    (field.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume()).sqrt()
}

/// Rectangle-rule `‖f‖_{L^p}`.
pub fn lp_quadrature(field: &[f64], grid: &SpectralGrid, p: f64) -> f64 {
    (field.iter().map(|x| x.abs().powf(p)).sum::<f64>() * grid.cell_volume()).powf(1.0 / p)
}

/// Spectral partial derivative along `axis`.
pub fn derivative(coeffs: &[Complex64], grid: &SpectralGrid, axis: usize) -> SpectralField {
    let mut out = grid.zeros_spectral();
    for m in grid.modes() {
        out[m.index] = Complex64::new(0.0, m.xi[axis]) * coeffs[m.index];
    }
    out
}

/// Spectral Laplacian.
pub fn laplacian(coeffs: &[Complex64], grid: &SpectralGrid) -> SpectralField {
    let mut out = grid.zeros_spectral();
    for m in grid.modes() {
        out[m.index] = -m.xi_sq * coeffs[m.index];
    }
    out
}

/// Spectral divergence of a vector field.
pub fn divergence(v: &[SpectralField; 3], grid: &SpectralGrid) -> SpectralField {
    let mut out = grid.zeros_spectral();
    for m in grid.modes() {
        let i = m.index;
        out[i] = Complex64::new(0.0, 1.0) * (m.xi[0] * v[0][i] + m.xi[1] * v[1][i] + m.xi[2] * v[2][i]);
    }
    out
}

/// Largest violation of conjugate symmetry on the self-conjugate planes,
/// relative to the largest coefficient.
pub fn conjugate_symmetry_defect(coeffs: &[Complex64], grid: &SpectralGrid) -> f64 {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for m in grid.modes() {
        if let Some(c) = grid.conjugate_index(m.index) {
            worst = worst.max((coeffs[m.index] - coeffs[c].conj()).norm());
        }
    }
    worst / scale
}

/// Projects coefficients onto the conjugate-symmetric subspace.
pub fn enforce_conjugate_symmetry(coeffs: &mut [Complex64], grid: &SpectralGrid) {
    let pairs: Vec<(usize, usize)> = grid
        .modes()
        .filter_map(|m| grid.conjugate_index(m.index).map(|c| (m.index, c)))
        .filter(|(a, c)| a <= c)
        .collect();
    for (a, c) in pairs {
        let avg = 0.5 * (coeffs[a] + coeffs[c].conj());
        coeffs[a] = avg;
        coeffs[c] = avg.conj();
    }
}

/// Copies every resolved mode of `coeffs` onto `target`, which must have the
/// same box length; Nyquist modes are dropped and new modes are zero.
pub fn resample(coeffs: &[Complex64], from: &SpectralGrid, target: &SpectralGrid) -> Result<SpectralField> {
    if (from.length() - target.length()).abs() > 1e-12 * from.length() {
        return Err(Error::Grid("resampling requires equal box lengths"));
    }
    let (n, h) = (target.n() as i64, target.half());
    let nyq = from.n() as i64 / 2;
    let mut out = target.zeros_spectral();
    for m in from.modes() {
        let raw = m.k;
        if m.k.iter().any(|k| 2 * k.abs() >= n) {
            continue;
        }
        // a stored zero on an axis may stand for the Nyquist index
        let [i, j, kz] = from.index_triple(m.index);
        if [i, j, kz].iter().any(|&a| a as i64 == nyq) {
            continue;
        }
        let wrap = |k: i64| k.rem_euclid(n) as usize;
        let idx = (wrap(raw[0]) * n as usize + wrap(raw[1])) * h + raw[2] as usize;
        out[idx] = coeffs[m.index];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn random_field(grid: &SpectralGrid, seed: u64) -> RealField {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        (0..grid.real_len())
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn resampling_preserves_band_limited_fields() {
        let small = SpectralGrid::new(3.0, 8).unwrap();
        let big = SpectralGrid::new(3.0, 32).unwrap();
        let f = |p: [f64; 3]| (2.0 * PI * p[0] / 3.0).sin() * (4.0 * PI * p[2] / 3.0).cos() + 0.3;
        let c = small.forward(&small.sample(f)).unwrap();
        let up = big.inverse(&resample(&c, &small, &big).unwrap()).unwrap();
        let exact = big.sample(f);
        assert!(up.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-13));
        let back = resample(&resample(&c, &small, &big).unwrap(), &big, &small).unwrap();
        assert!(back.iter().zip(&c).all(|(a, b)| (a - b).norm() < 1e-15));
        assert!(resample(&c, &small, &SpectralGrid::new(2.0, 8).unwrap()).is_err());
    }

    #[test]
    fn constant_field_lands_in_zero_mode() {
        let grid = SpectralGrid::new(2.0, 8).unwrap();
        let c = 0.75;
        let coeffs = forward_transform(&alloc::vec![c; grid.real_len()], &grid).unwrap();
        assert!((coeffs[0] - Complex64::new(c * 2.0f64.powf(1.5), 0.0)).norm() < 1e-14);
        assert!(coeffs[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn single_cosine_has_two_conjugate_coefficients() {
        let grid = SpectralGrid::new(3.0, 8).unwrap();
        let l = grid.length();
        let f = grid.sample(|x| (2.0 * PI * x[0] / l).cos());
        let coeffs = forward_transform(&f, &grid).unwrap();
        let nonzero: Vec<_> = grid.modes().filter(|m| coeffs[m.index].norm() > 1e-12).collect();
        assert_eq!(nonzero.len(), 2);
        assert_eq!(nonzero[0].k, [1, 0, 0]);
        assert_eq!(nonzero[1].k, [-1, 0, 0]);
        assert!((coeffs[nonzero[0].index] - coeffs[nonzero[1].index].conj()).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let grid = SpectralGrid::new(1.0, 8).unwrap();
        assert!(forward_transform(&[0.0; 10], &grid).is_err());
        assert!(inverse_transform(&[Complex64::new(0.0, 0.0); 3], &grid).is_err());
    }

    #[test]
    fn single_mode_gradient_norm_scales_with_wavenumber() {
        let grid = SpectralGrid::new(5.0, 8).unwrap();
        let xi0 = 2.0 * PI / grid.length();
        let f = grid.sample(|x| 0.3 * (xi0 * x[1]).cos());
        let c = forward_transform(&f, &grid).unwrap();
        let l2 = gradient_energy(&c, &grid, 0).sqrt();
        let grad = gradient_energy(&c, &grid, 1).sqrt();
        assert!((grad - xi0 * l2).abs() < 1e-13 * grad);
    }

    #[test]
    fn dealias_zeroes_modes_above_cutoff() {
        let grid = SpectralGrid::new(1.0, 16).unwrap();
        let l = grid.length();
        let n = grid.n() as f64;
        let f = grid.sample(|x| (2.0 * PI * (n / 2.0 - 1.0) * x[0] / l).cos());
        let c = dealias(&forward_transform(&f, &grid).unwrap(), &grid);
        assert!(c.iter().all(|z| z.norm() < 1e-15));
        let zero = dealias(&grid.zeros_spectral(), &grid);
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn dealiased_product_equals_direct_convolution() {
        // N = 16, two resolvable modes; the product of their samples, once
        // dealiased, must equal the truncated convolution of their spectra.
        let grid = SpectralGrid::new(2.0 * PI, 16).unwrap();
        let f = grid.sample(|x| (2.0 * x[0] + x[1]).cos() + 0.5 * (x[2]).sin());
        let g = grid.sample(|x| (3.0 * x[0]).sin() - 0.25 * (x[1] - 2.0 * x[2]).cos());
        let fh = forward_transform(&f, &grid).unwrap();
        let gh = forward_transform(&g, &grid).unwrap();
        let prod: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        let ph = dealias(&forward_transform(&prod, &grid).unwrap(), &grid);

        // oracle: explicit double sum over integer wavenumbers of full spectra
        let n = grid.n() as i64;
        let full = |c: &[Complex64], k: [i64; 3]| -> Complex64 {
            let wrap = |a: i64| a.rem_euclid(n) as usize;
            let h = grid.half();
            if k.iter().any(|&a| 2 * a.abs() >= n) {
                return Complex64::new(0.0, 0.0);
            }
            if k[2] >= 0 {
                c[(wrap(k[0]) * grid.n() + wrap(k[1])) * h + k[2] as usize]
            } else {
                c[(wrap(-k[0]) * grid.n() + wrap(-k[1])) * h + (-k[2]) as usize].conj()
            }
        };
        let scale = 1.0 / grid.length().powf(1.5);
        let band = 4i64;
        for m in grid.modes().filter(|m| !m.aliased) {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in -band..=band {
                for b in -band..=band {
                    for c in -band..=band {
                        let p = [a, b, c];
                        let q = [m.k[0] - a, m.k[1] - b, m.k[2] - c];
                        acc += full(&fh, p) * full(&gh, q);
                    }
                }
            }
            assert!((ph[m.index] - acc * scale).norm() < 1e-12, "mode {:?}", m.k);
        }
    }

    #[test]
    fn mean_is_untouched_by_dealias() {
        let grid = SpectralGrid::new(1.0, 8).unwrap();
        let f = random_field(&grid, 3);
        let c = forward_transform(&f, &grid).unwrap();
        assert_eq!(dealias(&c, &grid)[0], c[0]);
    }

    #[test]
    fn h1_norm_matches_finite_difference_quadrature() {
        // smooth trigonometric field; oracle uses 8th-order central
        // differences on a 4x finer real-space lattice
        let grid = SpectralGrid::new(2.0 * PI, 16).unwrap();
        let f = |x: [f64; 3]| (x[0] + x[1]).sin() + 0.3 * (x[2] - x[0]).cos() + 0.1;
        let c = forward_transform(&grid.sample(f), &grid).unwrap();
        let h1_sq = gradient_energy(&c, &grid, 0) + gradient_energy(&c, &grid, 1);

        let fine = 64usize;
        let dx = 2.0 * PI / fine as f64;
        let stencil = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let mut l2 = 0.0;
        let mut grad = 0.0;
        for i in 0..fine {
            for j in 0..fine {
                for k in 0..fine {
                    let x = [i as f64 * dx, j as f64 * dx, k as f64 * dx];
                    l2 += f(x).powi(2);
                    for axis in 0..3 {
                        let mut d = 0.0;
                        for (s, w) in stencil.iter().enumerate() {
                            let mut p = x;
                            let mut q = x;
                            p[axis] += (s + 1) as f64 * dx;
                            q[axis] -= (s + 1) as f64 * dx;
                            d += w * (f(p) - f(q));
                        }
                        grad += (d / dx).powi(2);
                    }
                }
            }
        }
        let vol = dx * dx * dx;
        let oracle = (l2 + grad) * vol;
        assert!((h1_sq - oracle).abs() < 1e-9 * oracle, "{h1_sq} vs {oracle}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn roundtrip_and_plancherel(seed in 0u64..1_000_000, len in 0.5f64..50.0) {
            let grid = SpectralGrid::new(len, 8).unwrap();
            let f = random_field(&grid, seed);
            let c = forward_transform(&f, &grid).unwrap();
            prop_assert!(conjugate_symmetry_defect(&c, &grid) < 1e-14);
            let back = inverse_transform(&c, &grid).unwrap();
            let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            let err = f.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err < 1e-12 * norm);
            let spectral = gradient_energy(&c, &grid, 0);
            let quad = l2_quadrature(&f, &grid).powi(2);
            prop_assert!((spectral - quad).abs() < 1e-10 * quad);
        }

        #[test]
        fn derivatives_preserve_conjugate_symmetry(seed in 0u64..1_000_000) {
            let grid = SpectralGrid::new(1.0, 8).unwrap();
            let c = forward_transform(&random_field(&grid, seed), &grid).unwrap();
            for axis in 0..3 {
                prop_assert!(conjugate_symmetry_defect(&derivative(&c, &grid, axis), &grid) < 1e-14);
            }
            prop_assert!(conjugate_symmetry_defect(&dealias(&c, &grid), &grid) < 1e-14);
            prop_assert!(conjugate_symmetry_defect(&laplacian(&c, &grid), &grid) < 1e-14);
        }
    }
}
