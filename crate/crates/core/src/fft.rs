//! Three-dimensional real-to-complex transforms on an `n³` periodic lattice.
//!
//! Real arrays are row-major `[i][j][k]` with `k` fastest. Spectral arrays keep
//! the non-redundant half `[i][j][kz]` with `kz in 0..=n/2` fastest; the other
//! half follows from conjugate symmetry. Both directions are unnormalised; the
//! Plancherel scaling lives in [`crate::grid::SpectralGrid`].
//!
//! [`Transform3`] is the backend seam. [`PortableFft`] needs nothing beyond
//! `alloc`; hosted builds plug in a faster backend.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// An unnormalised 3D real/complex transform pair for a fixed lattice size.
pub trait Transform3: Send + Sync {
    /// Points per axis.
    fn size(&self) -> usize;

    /// Forward transform of `n³` reals into `n·n·(n/2+1)` coefficients.
    fn forward(&self, input: &[f64], output: &mut [Complex64]);

    /// Inverse transform. `input` is used as scratch and left unspecified.
    fn inverse(&self, input: &mut [Complex64], output: &mut [f64]);
}

/// 1D complex FFT: iterative radix-2 for powers of two, Bluestein otherwise.
#[derive(Debug, Clone)]
pub struct Fft1d {
    n: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Radix2 {
        twiddles: Vec<Complex64>,
        bitrev: Vec<usize>,
    },
    Bluestein {
        chirp: Vec<Complex64>,
        // forward transform of the conjugated, wrapped chirp
        kernel: Vec<Complex64>,
        inner: alloc::boxed::Box<Fft1d>,
    },
}

impl Fft1d {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            let bitrev = (0..n)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect();
            let twiddles = (0..n / 2)
                .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
                .collect();
            return Self {
                n,
                kind: Kind::Radix2 { twiddles, bitrev },
            };
        }
        let m = (2 * n - 1).next_power_of_two();
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                // k² mod 2n keeps the angle argument small
                let kk = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                Complex64::from_polar(1.0, -PI * kk / n as f64)
            })
            .collect();
        let inner = Fft1d::new(m);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Self {
            n,
            kind: Kind::Bluestein {
                chirp,
                kernel,
                inner: alloc::boxed::Box::new(inner),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X_k = Σ x_j e^{-2πi jk/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.n);
        match &self.kind {
            Kind::Radix2 { twiddles, bitrev } => radix2(data, twiddles, bitrev),
            Kind::Bluestein { chirp, kernel, inner } => {
                let m = inner.len();
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for ((w, x), c) in work.iter_mut().zip(data.iter()).zip(chirp) {
                    *w = x * c;
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel) {
                    *w *= k;
                }
                inner.inverse(&mut work);
                let scale = 1.0 / m as f64;
                for ((x, w), c) in data.iter_mut().zip(&work).zip(chirp) {
                    *x = w * c * scale;
                }
            }
        }
    }

    /// In-place unnormalised inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for x in data.iter_mut() {
            *x = x.conj();
        }
        self.forward(data);
        for x in data.iter_mut() {
            *x = x.conj();
        }
    }
}

fn radix2(data: &mut [Complex64], twiddles: &[Complex64], bitrev: &[usize]) {
    let n = data.len();
    for i in 0..n {
        let j = bitrev[i];
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Dependency-free [`Transform3`] built on [`Fft1d`].
#[derive(Debug, Clone)]
pub struct PortableFft {
    n: usize,
    line: Fft1d,
}

impl PortableFft {
    pub fn new(n: usize) -> Self {
        Self { n, line: Fft1d::new(n) }
    }
}

impl Transform3 for PortableFft {
    fn size(&self) -> usize {
        self.n
    }

    fn forward(&self, input: &[f64], output: &mut [Complex64]) {
        let n = self.n;
        let h = n / 2 + 1;
        assert_eq!(input.len(), n * n * n);
        assert_eq!(output.len(), n * n * h);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for (src, dst) in input.chunks_exact(n).zip(output.chunks_exact_mut(h)) {
            for (l, &x) in line.iter_mut().zip(src) {
                *l = Complex64::new(x, 0.0);
            }
            self.line.forward(&mut line);
            dst.copy_from_slice(&line[..h]);
        }
        strided_passes(output, n, &mut line, |l| self.line.forward(l));
    }

    fn inverse(&self, input: &mut [Complex64], output: &mut [f64]) {
        let n = self.n;
        let h = n / 2 + 1;
        assert_eq!(input.len(), n * n * h);
        assert_eq!(output.len(), n * n * n);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        strided_passes(input, n, &mut line, |l| self.line.inverse(l));
        for (src, dst) in input.chunks_exact(h).zip(output.chunks_exact_mut(n)) {
            line[..h].copy_from_slice(src);
            line[0].im = 0.0;
            line[n / 2].im = 0.0;
            for k in h..n {
                line[k] = src[n - k].conj();
            }
            self.line.inverse(&mut line);
            for (d, l) in dst.iter_mut().zip(&line) {
                *d = l.re;
            }
        }
    }
}

/// Applies `f` along the `j` then the `i` axis of a half-spectrum array.
pub(crate) fn strided_passes(data: &mut [Complex64], n: usize, line: &mut [Complex64], f: impl Fn(&mut [Complex64])) {
    let h = n / 2 + 1;
    for i in 0..n {
        for kz in 0..h {
            for j in 0..n {
                line[j] = data[(i * n + j) * h + kz];
            }
            f(line);
            for j in 0..n {
                data[(i * n + j) * h + kz] = line[j];
            }
        }
    }
    for j in 0..n {
        for kz in 0..h {
            for i in 0..n {
                line[i] = data[(i * n + j) * h + kz];
            }
            f(line);
            for i in 0..n {
                data[(i * n + j) * h + kz] = line[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let ang = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, ang)
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let t = j as f64;
                Complex64::new((0.37 * t).sin() + 0.1 * t, (1.3 * t).cos())
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_radix2_and_bluestein() {
        for n in [1, 2, 8, 12, 16, 24, 30, 64] {
            let x = signal(n);
            let mut y = x.clone();
            Fft1d::new(n).forward(&mut y);
            let expected = naive_dft(&x);
            for (a, b) in y.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-10 * (n as f64), "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_undoes_forward_up_to_length() {
        for n in [8, 10, 32] {
            let x = signal(n);
            let mut y = x.clone();
            let fft = Fft1d::new(n);
            fft.forward(&mut y);
            fft.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn real_3d_roundtrip() {
        for n in [8, 10] {
            let fft = PortableFft::new(n);
            let input: Vec<f64> = (0..n * n * n).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
            let mut spec = vec![Complex64::new(0.0, 0.0); n * n * (n / 2 + 1)];
            fft.forward(&input, &mut spec);
            let mut back = vec![0.0; n * n * n];
            fft.inverse(&mut spec, &mut back);
            let scale = (n * n * n) as f64;
            for (a, b) in back.iter().zip(&input) {
                assert!((a / scale - b).abs() < 1e-13);
            }
        }
    }
}
