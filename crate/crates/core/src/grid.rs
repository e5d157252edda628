//! Periodic cube discretisation and the unitary transform convention.
//!
//! Spectral coefficients are scaled as `c_k = L^{3/2} / N³ · DFT(f)_k`, so that
//! `Σ_k |c_k|² = ∫_box |f|² dx` exactly (rectangle-rule quadrature). A constant
//! field `c` therefore has zero-mode coefficient `c · L^{3/2}`.
//!
//! Wavenumbers are `2π k / L` with integer `k`; the Nyquist index `N/2` is
//! assigned wavenumber zero on every axis so that the lattice of wavevectors is
//! symmetric under `ξ -> -ξ` and every real-coefficient symbol maps real fields
//! to real fields.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{PortableFft, Transform3};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Real-space samples of a scalar field, row-major `[i][j][k]`.
pub type RealField = Vec<f64>;

/// Half-spectrum coefficients of a real scalar field.
pub type SpectralField = Vec<Complex64>;

/// Geometry of the periodic box plus the transform backend.
#[derive(Clone)]
pub struct SpectralGrid {
    length: f64,
    n: usize,
    fft: Arc<dyn Transform3>,
    // integer wavenumber per axis index, Nyquist mapped to zero
    kint: Vec<i64>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

/// One spectral mode as visited by [`SpectralGrid::modes`].
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    /// Index into a half-spectrum array.
    pub index: usize,
    /// Integer lattice wavenumber (Nyquist components are zero).
    pub k: [i64; 3],
    /// Physical wavevector `2π k / L`.
    pub xi: [f64; 3],
    /// `|ξ|²`.
    pub xi_sq: f64,
    /// Multiplicity in full-spectrum sums: 1 on the `kz = 0` and `kz = N/2`
    /// planes, 2 elsewhere.
    pub weight: f64,
    /// True when the mode lies outside the two-thirds band.
    pub aliased: bool,
}

impl SpectralGrid {
    /// Grid with the dependency-free transform backend.
    pub fn new(length: f64, n: usize) -> Result<Self> {
        Self::with_backend(length, Arc::new(PortableFft::new(n.max(2))))
    }

    /// Grid using a caller-supplied backend; `n` is taken from the backend.
    pub fn with_backend(length: f64, fft: Arc<dyn Transform3>) -> Result<Self> {
        let n = fft.size();
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Grid("box length must be positive and finite"));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Grid("points per axis must be even and at least 8"));
        }
        let kint = (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as i64
                } else if j == n / 2 {
                    0
                } else {
                    j as i64 - n as i64
                }
            })
            .collect();
        Ok(Self { length, n, fft, kint })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of the last spectral axis, `N/2 + 1`.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn real_len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn spectral_len(&self) -> usize {
        self.n * self.n * self.half()
    }

    /// Smallest nonzero wavenumber magnitude, `2π / L`.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Grid spacing `L / N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Volume element of the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        let dx = self.spacing();
        dx * dx * dx
    }

    pub fn backend(&self) -> &Arc<dyn Transform3> {
        &self.fft
    }

    /// Integer wavenumber of spectral axis index `j` (Nyquist maps to zero).
    pub fn axis_wavenumber(&self, j: usize) -> i64 {
        self.kint[j]
    }

    /// Largest integer wavenumber kept by two-thirds dealiasing.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Magnitude of the largest wavevector inside the two-thirds band.
    pub fn max_resolved_wavenumber(&self) -> f64 {
        self.base_wavenumber() * (3.0 * (self.dealias_cutoff() * self.dealias_cutoff()) as f64).sqrt()
    }

    /// Coordinates of real-space point `(i, j, k)`.
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let dx = self.spacing();
        [i as f64 * dx, j as f64 * dx, k as f64 * dx]
    }

    /// Visits every half-spectrum mode in storage order.
    pub fn modes(&self) -> Modes<'_> {
        Modes {
            grid: self,
            kappa: self.base_wavenumber(),
            next: 0,
            i: 0,
            j: 0,
            kz: 0,
        }
    }

    /// Storage indices `[i, j, kz]` of a half-spectrum index.
    pub fn index_triple(&self, index: usize) -> [usize; 3] {
        let h = self.half();
        [index / (h * self.n), (index / h) % self.n, index % h]
    }

    /// Half-spectrum index of the mode conjugate to `index` (same index on
    /// the `kz = 0, N/2` planes is possible).
    pub fn conjugate_index(&self, index: usize) -> Option<usize> {
        let n = self.n;
        let h = self.half();
        let kz = index % h;
        if kz != 0 && kz != n / 2 {
            return None;
        }
        let j = (index / h) % n;
        let i = index / (h * n);
        let flip = |a: usize| (n - a) % n;
        Some((flip(i) * n + flip(j)) * h + kz)
    }

    fn forward_scale(&self) -> f64 {
        self.length.powf(1.5) / self.real_len() as f64
    }

    /// Real samples to unitary spectral coefficients.
    pub fn forward(&self, field: &[f64]) -> Result<SpectralField> {
        if field.len() != self.real_len() {
            return Err(Error::DimensionMismatch {
                expected: self.real_len(),
                actual: field.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.spectral_len()];
        self.forward_into(field, &mut out);
        Ok(out)
    }

    pub(crate) fn forward_into(&self, field: &[f64], out: &mut [Complex64]) {
        self.fft.forward(field, out);
        let s = self.forward_scale();
        for c in out.iter_mut() {
            *c *= s;
        }
    }

    /// Unitary spectral coefficients back to real samples.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<RealField> {
        if coeffs.len() != self.spectral_len() {
            return Err(Error::DimensionMismatch {
                expected: self.spectral_len(),
                actual: coeffs.len(),
            });
        }
        let mut scratch = coeffs.to_vec();
        let mut out = vec![0.0; self.real_len()];
        self.inverse_into(&mut scratch, &mut out);
        Ok(out)
    }

    /// Inverse transform that consumes `scratch`.
    pub(crate) fn inverse_into(&self, scratch: &mut [Complex64], out: &mut [f64]) {
        self.fft.inverse(scratch, out);
        let s = 1.0 / self.length.powf(1.5);
        for x in out.iter_mut() {
            *x *= s;
        }
    }

    /// Real samples of `f(x)` at the grid points.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> RealField {
        let n = self.n;
        let mut out = Vec::with_capacity(self.real_len());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(f(self.point(i, j, k)));
                }
            }
        }
        out
    }

    pub fn zeros_spectral(&self) -> SpectralField {
        vec![Complex64::new(0.0, 0.0); self.spectral_len()]
    }
}


/// Iterator returned by [`SpectralGrid::modes`].
#[derive(Debug, Clone)]
pub struct Modes<'a> {
    grid: &'a SpectralGrid,
    kappa: f64,
    next: usize,
    i: usize,
    j: usize,
    kz: usize,
}

impl Iterator for Modes<'_> {
    type Item = Mode;

    #[inline]
    fn next(&mut self) -> Option<Mode> {
        let n = self.grid.n;
        if self.i == n {
            return None;
        }
        let (i, j, kz) = (self.i, self.j, self.kz);
        let kint = &self.grid.kint;
        let k = [kint[i], kint[j], if kz == n / 2 { 0 } else { kz as i64 }];
        let xi = [self.kappa * k[0] as f64, self.kappa * k[1] as f64, self.kappa * k[2] as f64];
        // an index is aliased when its true |k| exceeds N/3, Nyquist included
        let raw = |a: usize| if a <= n / 2 { a } else { n - a };
        let aliased = 3 * raw(i) > n || 3 * raw(j) > n || 3 * kz > n;
        let mode = Mode {
            index: self.next,
            k,
            xi,
            xi_sq: xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2],
            weight: if kz == 0 || kz == n / 2 { 1.0 } else { 2.0 },
            aliased,
        };
        self.next += 1;
        self.kz += 1;
        if self.kz > n / 2 {
            self.kz = 0;
            self.j += 1;
            if self.j == n {
                self.j = 0;
                self.i += 1;
            }
        }
        Some(mode)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.grid.spectral_len() - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Modes<'_> {}
