//! Power-law exponents `v(t) ≈ C (1+t)^α` by log-log least squares.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Minimum number of samples inside a fit window.
pub const MIN_SAMPLES: usize = 10;

/// Tolerance for fits of quadrature-based continuum norms.
pub const CONTINUUM_TOLERANCE: f64 = 0.05;

/// Tolerance for fits of grid-based nonlinear runs.
pub const GRID_TOLERANCE: f64 = 0.10;

/// `β(p) = 3/4 (2/p - 1)`, the `L²` decay rate for `L^p` data.
pub fn beta(p: f64) -> f64 {
    0.75 * (2.0 / p - 1.0)
}

/// Exponent target for `‖v‖_{L²}` with `L^p` data: `-β(p)`.
pub fn target_l2(p: f64) -> f64 {
    -beta(p)
}

/// Exponent target for first derivatives and time derivatives: `-β(p) - 1/2`.
pub fn target_gradient(p: f64) -> f64 {
    -beta(p) - 0.5
}

/// Linear lower-bound rate `-3/4`.
pub const TARGET_LOWER: f64 = -0.75;

/// Rate of the nonlinear-minus-linear difference, `-5/4`.
pub const TARGET_DIFFERENCE: f64 = -1.25;

/// Upper bound rate for data vanishing to order `η` at the origin.
pub fn target_eta(eta: f64) -> f64 {
    -(0.75 + 0.5 * eta)
}

/// How a fitted exponent is compared against its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// `|α - target| <= tol`.
    TwoSided,
    /// `α <= target + tol`: an upper bound on the decay.
    AtMost,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::TwoSided => "two-sided",
            Comparison::AtMost => "at-most",
        }
    }
}

/// Result of one power-law fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFitResult {
    pub quantity: String,
    pub exponent: f64,
    /// `ln C` in `v ≈ C (1+t)^α`.
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS residual in `ln v`.
    pub rms_residual: f64,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub samples: usize,
    pub pass: bool,
    /// Set when every value in the window is zero; no exponent exists.
    pub degenerate: bool,
}

impl DecayFitResult {
    /// A placeholder for identically vanishing input.
    pub fn degenerate(quantity: &str, window: (f64, f64), target: f64, tolerance: f64, comparison: Comparison, samples: usize) -> Self {
        Self {
            quantity: quantity.into(),
            exponent: f64::NAN,
            intercept: f64::NAN,
            window,
            rms_residual: f64::NAN,
            target,
            tolerance,
            comparison,
            samples,
            pass: false,
            degenerate: true,
        }
    }

    /// Re-evaluates `pass` for a different comparison or tolerance.
    pub fn judged(mut self, target: f64, tolerance: f64, comparison: Comparison) -> Self {
        self.target = target;
        self.tolerance = tolerance;
        self.comparison = comparison;
        self.pass = judge(self.exponent, target, tolerance, comparison);
        self
    }
}

fn judge(exponent: f64, target: f64, tolerance: f64, comparison: Comparison) -> bool {
    match comparison {
        Comparison::TwoSided => (exponent - target).abs() <= tolerance,
        Comparison::AtMost => exponent <= target + tolerance,
    }
}

/// Least squares of `ln v` against `ln(1+t)` over samples with
/// `t ∈ [window.0, window.1]`.
///
/// Values are normalised by the first in-window sample before taking logs, so
/// rescaling the series by a power of two leaves the exponent bit-identical.
pub fn fit_power_law(
    quantity: &str,
    series: &[(f64, f64)],
    window: (f64, f64),
    target: f64,
    tolerance: f64,
    comparison: Comparison,
) -> Result<DecayFitResult> {
    let inside: Vec<(usize, f64, f64)> = series
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| *t >= window.0 && *t <= window.1)
        .map(|(i, &(t, v))| (i, t, v))
        .collect();
    if inside.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            found: inside.len(),
        });
    }
    if let Some(&(index, time, value)) = inside.iter().find(|(_, _, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveSample { index, time, value });
    }
    let reference = inside[0].2;
    let pts: Vec<(f64, f64)> = inside.iter().map(|&(_, t, v)| ((1.0 + t).ln(), (v / reference).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("fit window has no spread in time"));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Ok(DecayFitResult {
        quantity: quantity.into(),
        exponent: slope,
        intercept: icpt + reference.ln(),
        window,
        rms_residual: (rss / n).sqrt(),
        target,
        tolerance,
        comparison,
        samples: pts.len(),
        pass: judge(slope, target, tolerance, comparison),
        degenerate: false,
    })
}

/// `count` logarithmically spaced times covering `[a, b]`, endpoints included.
pub fn log_spaced(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|j| {
            if j == 0 {
                a
            } else if j + 1 == count {
                b
            } else {
                (la + (lb - la) * j as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        log_spaced(1.0, 1e3, 40).into_iter().map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exact_power_laws() {
        let s = series(|t| (1.0 + t).powf(-0.75));
        let f = fit_power_law("v", &s, (1.0, 1e3), -0.75, 0.05, Comparison::TwoSided).unwrap();
        assert!((f.exponent + 0.75).abs() < 1e-10);
        assert!(f.pass);
        let s = series(|t| 7.0 * (1.0 + t).powf(-1.25));
        let f = fit_power_law("v", &s, (1.0, 1e3), -1.25, 0.05, Comparison::TwoSided).unwrap();
        assert!((f.exponent + 1.25).abs() < 1e-10);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn noisy_series_over_two_decades() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Vec<(f64, f64)> = log_spaced(10.0, 1e3, 60)
            .into_iter()
            .map(|t| (t, (1.0 + t).powf(-0.75) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0))))
            .collect();
        let f = fit_power_law("v", &s, (10.0, 1e3), -0.75, 0.02, Comparison::TwoSided).unwrap();
        assert!(f.pass, "{}", f.exponent);
    }

    #[test]
    fn input_errors() {
        let s = series(|t| (1.0 + t).powf(-1.0));
        assert!(matches!(
            fit_power_law("v", &s[..5], (0.0, 1e9), -1.0, 0.1, Comparison::TwoSided),
            Err(Error::TooFewSamples { found: 5, .. })
        ));
        let mut bad = s.clone();
        bad[3].1 = 0.0;
        assert!(matches!(
            fit_power_law("v", &bad, (0.0, 1e9), -1.0, 0.1, Comparison::TwoSided),
            Err(Error::NonPositiveSample { index: 3, .. })
        ));
    }

    #[test]
    fn at_most_comparison_is_one_sided() {
        let s = series(|t| (1.0 + t).powf(-2.0));
        let f = fit_power_law("v", &s, (1.0, 1e3), -1.25, 0.05, Comparison::AtMost).unwrap();
        assert!(f.pass);
        assert!(!f.clone().judged(-1.25, 0.05, Comparison::TwoSided).pass);
    }

    #[test]
    fn targets() {
        assert_eq!(beta(1.0), 0.75);
        assert_eq!(target_gradient(1.0), -1.25);
        assert_eq!(target_eta(1.0), -1.25);
        assert_eq!(target_l2(2.0), 0.0);
    }

    proptest! {
        #[test]
        fn scale_invariance(e in -3.0..0.0f64, k in -20i32..20) {
            let s = series(|t| (1.0 + t).powf(e) * (1.0 + 0.1 * (t.ln()).sin()));
            let scaled: Vec<(f64, f64)> = s.iter().map(|&(t, v)| (t, v * 2f64.powi(k))).collect();
            let a = fit_power_law("v", &s, (1.0, 1e3), e, 0.1, Comparison::TwoSided).unwrap();
            let b = fit_power_law("v", &scaled, (1.0, 1e3), e, 0.1, Comparison::TwoSided).unwrap();
            prop_assert_eq!(a.exponent.to_bits(), b.exponent.to_bits());
        }
    }
}
