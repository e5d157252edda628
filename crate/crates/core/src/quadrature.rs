//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature on an interval.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

// Kronrod abscissae on [-1, 1], descending; odd entries are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_682_500_026_575,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
pub fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    // largest error first, ties broken by position for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Outcome of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    /// Absolute floor below which the error is accepted regardless.
    pub abs_tol: f64,
    pub initial_pieces: usize,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            initial_pieces: 1,
            max_intervals: 200_000,
        }
    }
}

/// Globally adaptive bisection of `[a, b]` until the summed error estimate is
/// at most `max(rel_tol·|value|, abs_tol)`.
///
/// The final value is summed in interval order so that the result does not
/// depend on the refinement history beyond the set of leaves.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: QuadratureOptions) -> Result<Quadrature> {
    let pieces = opts.initial_pieces.max(1);
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    let width = (b - a) / pieces as f64;
    for j in 0..pieces {
        let lo = a + width * j as f64;
        let hi = if j + 1 == pieces { b } else { a + width * (j + 1) as f64 };
        let (value, error) = gk21(&f, lo, hi);
        heap.push(Piece {
            a: lo,
            b: hi,
            value,
            error,
        });
    }
    let totals = |heap: &BinaryHeap<Piece>| heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    let (mut value, mut error) = totals(&heap);
    let mut since_resum = 0usize;
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonFinite("quadrature integrand"));
        }
        let target = (opts.rel_tol * value.abs()).max(opts.abs_tol);
        if error <= target {
            // running sums drift; confirm against an exact resummation
            let (v, e) = totals(&heap);
            if e <= (opts.rel_tol * v.abs()).max(opts.abs_tol) {
                return Ok(finish(heap.into_vec(), e));
            }
            (value, error) = (v, e);
            continue;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                achieved: if value == 0.0 { f64::INFINITY } else { error / value.abs() },
                requested: opts.rel_tol,
            });
        }
        let worst = heap.pop().expect("at least one interval");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Quadrature {
                achieved: error / value.abs(),
                requested: opts.rel_tol,
            });
        }
        value -= worst.value;
        error -= worst.error;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gk21(&f, lo, hi);
            value += v;
            error += e;
            heap.push(Piece {
                a: lo,
                b: hi,
                value: v,
                error: e,
            });
        }
        since_resum += 1;
        if since_resum == 1024 {
            since_resum = 0;
            (value, error) = totals(&heap);
        }
    }
}

fn finish(mut pieces: Vec<Piece>, error: f64) -> Quadrature {
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    Quadrature {
        value: pieces.iter().map(|p| p.value).sum(),
        error,
        intervals: pieces.len(),
    }
}
