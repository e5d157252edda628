//! Hosted transform backend: `realfft` along the contiguous axis, `rustfft`
//! along the other two, lines processed in parallel with rayon.
//!
//! Every line is transformed independently with the same plan, so results do
//! not depend on the number of worker threads.

use std::sync::{Arc, Mutex};

use cns_decay_core::fft::Transform3;
use cns_decay_core::{Result, SpectralGrid};
use rayon::prelude::*;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub struct RealFft3 {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // transposition buffer for the i-axis pass, reused across calls
    spare: Mutex<Vec<Complex64>>,
}

impl std::fmt::Debug for RealFft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFft3").field("n", &self.n).finish()
    }
}

impl RealFft3 {
    pub fn new(n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            n,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            fwd: cplx.plan_fft_forward(n),
            inv: cplx.plan_fft_inverse(n),
            spare: Mutex::new(Vec::new()),
        }
    }

    /// Transforms the `j` and `i` axes of a half-spectrum array in place.
    fn columns(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let h = n / 2 + 1;
        let zero = Complex64::new(0.0, 0.0);
        // j axis: each i-plane is contiguous as [j][kz]
        data.par_chunks_mut(n * h).for_each_init(
            || vec![zero; n * h],
            |buf, plane| {
                for j in 0..n {
                    for kz in 0..h {
                        buf[kz * n + j] = plane[j * h + kz];
                    }
                }
                fft.process(buf);
                for j in 0..n {
                    for kz in 0..h {
                        plane[j * h + kz] = buf[kz * n + j];
                    }
                }
            },
        );
        // i axis: gather into [j][kz][i]
        let mut held = self.spare.try_lock().ok();
        let mut own = Vec::new();
        let t = held.as_deref_mut().unwrap_or(&mut own);
        t.resize(data.len(), zero);
        t.par_chunks_mut(h * n).enumerate().for_each(|(j, block)| {
            for kz in 0..h {
                for i in 0..n {
                    block[kz * n + i] = data[(i * n + j) * h + kz];
                }
            }
        });
        t.par_chunks_mut(n * h).for_each(|lines| fft.process(lines));
        data.par_chunks_mut(n * h).enumerate().for_each(|(i, plane)| {
            for j in 0..n {
                for kz in 0..h {
                    plane[j * h + kz] = t[(j * h + kz) * n + i];
                }
            }
        });
    }
}

impl Transform3 for RealFft3 {
    fn size(&self) -> usize {
        self.n
    }

    fn forward(&self, input: &[f64], output: &mut [Complex64]) {
        let n = self.n;
        let h = n / 2 + 1;
        assert_eq!(input.len(), n * n * n);
        assert_eq!(output.len(), n * n * h);
        input.par_chunks(n).zip(output.par_chunks_mut(h)).for_each_init(
            || (vec![0.0; n], self.r2c.make_scratch_vec()),
            |(line, scratch), (src, dst)| {
                line.copy_from_slice(src);
                self.r2c
                    .process_with_scratch(line, dst, scratch)
                    .expect("buffer lengths match the plan");
            },
        );
        self.columns(output, &self.fwd);
    }

    fn inverse(&self, input: &mut [Complex64], output: &mut [f64]) {
        let n = self.n;
        let h = n / 2 + 1;
        assert_eq!(input.len(), n * n * h);
        assert_eq!(output.len(), n * n * n);
        self.columns(input, &self.inv);
        input.par_chunks_mut(h).zip(output.par_chunks_mut(n)).for_each_init(
            || self.c2r.make_scratch_vec(),
            |scratch, (src, dst)| {
                src[0].im = 0.0;
                src[h - 1].im = 0.0;
                self.c2r
                    .process_with_scratch(src, dst, scratch)
                    .expect("buffer lengths match the plan");
            },
        );
    }
}

/// A grid backed by [`RealFft3`].
pub fn grid(length: f64, n: usize) -> Result<SpectralGrid> {
    SpectralGrid::with_backend(length, Arc::new(RealFft3::new(n.max(2))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cns_decay_core::fft::PortableFft;

    #[test]
    fn agrees_with_portable_backend() {
        for n in [8, 12, 16] {
            let input: Vec<f64> = (0..n * n * n).map(|i| (((i * 7919) % 113) as f64 / 113.0 - 0.5).sin()).collect();
            let h = n / 2 + 1;
            let mut a = vec![Complex64::new(0.0, 0.0); n * n * h];
            let mut b = a.clone();
            RealFft3::new(n).forward(&input, &mut a);
            PortableFft::new(n).forward(&input, &mut b);
            let scale = (n * n * n) as f64;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12 * scale);
            }
            let mut back = vec![0.0; n * n * n];
            RealFft3::new(n).inverse(&mut a, &mut back);
            for (x, y) in back.iter().zip(&input) {
                assert!((x / scale - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let n = 16;
        let input: Vec<f64> = (0..n * n * n).map(|i| ((i as f64) * 0.37).cos()).collect();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut out = vec![Complex64::new(0.0, 0.0); n * n * (n / 2 + 1)];
                RealFft3::new(n).forward(&input, &mut out);
                out
            })
        };
        assert_eq!(run(1), run(4));
    }
}
