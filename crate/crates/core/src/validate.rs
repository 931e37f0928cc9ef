//! Independent numerical oracles used to check the closed forms: adaptive
//! Gauss-Kronrod quadrature, Monte Carlo CCDF estimators and brute-force mode
//! frequencies.

use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::channel::{LinkStats, Scheme, SnrTriplet};
use crate::error::{Error, Result};
use crate::lattice::{classify_mode, thresholds, Mode, ModeMap, RateSet, Rational};
use crate::sim::feasible_indices;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol` with the
/// default subdivision cap.
pub fn quadrature<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<QuadratureResult> {
    let cfg = QuadratureConfig {
        abs_tol: tol,
        ..QuadratureConfig::default()
    };
    quadrature_with(f, lo, hi, &cfg)
}

/// Globally adaptive bisection: the segment with the largest error estimate
/// is split until the summed estimate meets the tolerance.
pub fn quadrature_with<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs finite lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if cfg.abs_tol.is_nan() || cfg.abs_tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "quadrature tolerance must be positive, got {}",
            cfg.abs_tol
        )));
    }
    if lo == hi {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            subdivisions: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = gauss_kronrod(&f, lo, hi);
    let mut total_err = first.error;
    heap.push(first);
    let mut subdivisions = 0;
    while total_err > cfg.abs_tol {
        if subdivisions >= cfg.max_subdivisions {
            let value = heap.iter().map(|s| s.value).sum();
            return Err(Error::NumericFailure {
                achieved: total_err,
                requested: cfg.abs_tol,
                partial: value,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval no longer splittable in floating point
            heap.push(worst);
            let value = heap.iter().map(|s| s.value).sum();
            return Err(Error::NumericFailure {
                achieved: total_err,
                requested: cfg.abs_tol,
                partial: value,
            });
        }
        let left = gauss_kronrod(&f, worst.lo, mid);
        let right = gauss_kronrod(&f, mid, worst.hi);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // the running sum drifts; recompute when it claims convergence
        if total_err <= cfg.abs_tol {
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(QuadratureResult {
        value: segs.iter().map(|s| s.value).sum(),
        abs_error_estimate: total_err,
        subdivisions,
    })
}

/// Integrates `f` over `[0, inf)` by truncating at `cutoff` and adding an
/// analytic bound on the discarded tail to the error estimate.
pub fn quadrature_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    cutoff: f64,
    tail_bound: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    let mut r = quadrature(f, 0.0, cutoff, tol)?;
    r.abs_error_estimate += tail_bound;
    Ok(r)
}

/// `int_0^inf pdf_gamma2`, truncated at 50 times the largest finite scale of
/// `gamma_2` with the tail `ccdf_gamma2(cutoff)` counted as error.
pub fn gamma2_pdf_mass(stats: &LinkStats, tol: f64) -> Result<QuadratureResult> {
    let scale = [stats.lambda[1], stats.mu[1]]
        .into_iter()
        .filter(|s| s.is_finite())
        .fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(Error::InvalidState("gamma_2 has no finite scale".into()));
    }
    let cutoff = 50.0 * scale;
    let tail = stats.ccdf_gamma2(cutoff)?;
    quadrature_semi_infinite(|y| stats.pdf_gamma2(y).unwrap_or(0.0), cutoff, tail, tol)
}

/// Frequency estimate and binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        McEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// Whether `value` lies within `k` standard errors. A zero standard
    /// error is widened to the resolution of one sample.
    pub fn within_sigma(&self, value: f64, k: f64) -> bool {
        let se = self.std_error.max(1.0 / self.n as f64);
        (self.estimate - value).abs() <= k * se
    }
}

pub const MIN_MC_DRAWS: u64 = 10_000;
pub const MIN_MODE_DRAWS: u64 = 100_000;

/// Draws `n` SNR triplets on a single ChaCha8 stream seeded by `seed`.
fn sample_triplets(stats: &LinkStats, n: u64, seed: u64, mut visit: impl FnMut(SnrTriplet)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        visit(stats.sample_snr_triplet(&mut rng));
    }
}

fn combined(scheme: Scheme, t: &SnrTriplet) -> f64 {
    match scheme {
        Scheme::RelayOnly => t.g2,
        Scheme::Alamouti => t.g2 + t.g3,
    }
}

/// Monte Carlo estimate of `Pr{gamma_1 >= y1, X >= y2, gamma_3 >= y3}` where
/// `X` is the link-2 decoding statistic of `scheme`.
pub fn mc_joint_ccdf(
    stats: &LinkStats,
    y: [f64; 3],
    scheme: Scheme,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n < MIN_MC_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MC_DRAWS} draws, got {n}"
        )));
    }
    let mut hits = 0u64;
    sample_triplets(stats, n, seed, |t| {
        if t.g1 >= y[0] && combined(scheme, &t) >= y[1] && t.g3 >= y[2] {
            hits += 1;
        }
    });
    Ok(McEstimate::from_counts(hits, n))
}

/// Estimates every point of a grid of CCDF arguments from one shared sample.
/// Each estimate is individually binomial; they are correlated with each other.
pub fn mc_joint_ccdf_grid(
    stats: &LinkStats,
    points: &[[f64; 3]],
    scheme: Scheme,
    n: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if n < MIN_MC_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MC_DRAWS} draws, got {n}"
        )));
    }
    let mut hits = vec![0u64; points.len()];
    sample_triplets(stats, n, seed, |t| {
        let x = combined(scheme, &t);
        for (h, y) in hits.iter_mut().zip(points) {
            if t.g1 >= y[0] && x >= y[1] && t.g3 >= y[2] {
                *h += 1;
            }
        }
    });
    Ok(hits.into_iter().map(|h| McEstimate::from_counts(h, n)).collect())
}

/// Samples SNRs through the inverse transmit SNR `G_i = max(1/gamma_max,
/// |g_i|^2/gamma_p)` and `gamma_i = |h_i|^2 / G_i`; an independent route to
/// the same distribution as [`LinkStats::sample_snr_triplet`].
pub fn sample_inverse_snr<R: Rng + ?Sized>(stats: &LinkStats, rng: &mut R) -> SnrTriplet {
    let mut exp = || rng.sample::<f64, _>(Exp1);
    let h = [
        exp() * stats.omega_h[0],
        exp() * stats.omega_h[1],
        exp() * stats.omega_h[2],
    ];
    let g = [exp() * stats.omega_g[0], exp() * stats.omega_g[1]];
    let inv = |gi: f64| (1.0 / stats.gamma_max).max(gi / stats.gamma_p);
    let (inv1, inv2) = (inv(g[0]), inv(g[1]));
    SnrTriplet {
        g1: h[0] / inv1,
        g2: h[1] / inv2,
        g3: h[2] / inv1,
    }
}

/// Mode frequencies from sampled SNRs classified directly at `alpha`,
/// bypassing the inclusion-exclusion of the analytic module.
pub fn brute_force_mode_probs(
    stats: &LinkStats,
    rates: &RateSet,
    alpha: &Rational,
    scheme: Scheme,
    n: u64,
    seed: u64,
) -> Result<ModeMap<McEstimate>> {
    if n < MIN_MODE_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MODE_DRAWS} draws, got {n}"
        )));
    }
    let th = thresholds(rates);
    // classification only depends on the index triplet; memoize per triplet
    let dims = [rates.len(0), rates.len(1), rates.len(2)];
    let mut memo: Vec<Option<Mode>> = vec![None; dims[0] * dims[1] * dims[2]];
    let mut counts = ModeMap::<u64>::default();
    sample_triplets(stats, n, seed, |t| {
        let k = feasible_indices(&t, &th, scheme);
        let slot = &mut memo[(k.k1 * dims[1] + k.k2) * dims[2] + k.k3];
        let mode = *slot.get_or_insert_with(|| classify_mode(alpha, &k, rates));
        counts[mode] += 1;
    });
    Ok(counts.map(|&c| McEstimate::from_counts(c, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{derive_stats, PowerConstraints, SystemGeometry};

    fn stats(gamma_max_db: Option<f64>) -> LinkStats {
        derive_stats(
            &SystemGeometry {
                d1: 1.0,
                d2: 1.0,
                d3: 2.0,
                d1p: 3.0,
                d2p: 1.5,
                alpha_pl: 3.0,
            },
            &PowerConstraints::from_db(gamma_max_db, -5.0),
        )
        .unwrap()
    }

    #[test]
    fn constant_integrand() {
        let r = quadrature(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_exactly_zero() {
        let r = quadrature(|x| x.exp(), 2.5, 2.5, 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn smooth_integrals() {
        let r = quadrature(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let r = quadrature(|x| 1.0 / (1.0 + x * x), 0.0, 50.0, 1e-12).unwrap();
        assert!((r.value - 50f64.atan()).abs() < 1e-12);
        assert!(r.abs_error_estimate <= 1e-12);
    }

    #[test]
    fn cap_reports_partial_result() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            max_subdivisions: 3,
        };
        match quadrature_with(|x: f64| x.sqrt().sin() / (x + 1e-3), 0.0, 100.0, &cfg) {
            Err(Error::NumericFailure { achieved, requested, .. }) => {
                assert!(achieved > requested);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn bad_bounds_rejected() {
        assert!(quadrature(|x| x, 1.0, 0.0, 1e-9).is_err());
        assert!(quadrature(|x| x, 0.0, f64::INFINITY, 1e-9).is_err());
        assert!(quadrature(|x| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pdf_normalizes() {
        let r = gamma2_pdf_mass(&stats(Some(8.0)), 1e-11).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{r:?}");
        assert!(r.abs_error_estimate < 1e-8);
        // interference-only: heavy 1/y^2 tail, truncation error bounded by the CCDF
        let r = gamma2_pdf_mass(&stats(None), 1e-11).unwrap();
        assert!((r.value + r.abs_error_estimate - 1.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn mc_origin_is_certain() {
        let e = mc_joint_ccdf(&stats(None), [0.0; 3], Scheme::Alamouti, 20_000, 3).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.std_error, 0.0);
        assert!(mc_joint_ccdf(&stats(None), [0.0; 3], Scheme::Alamouti, 10, 3).is_err());
    }

    #[test]
    fn all_zero_rates_always_silent() {
        let rates = RateSet::from_strs(&["0", "1"], &["0", "1"]).unwrap();
        // every SNR is zero so no positive rate is ever feasible
        let silent = derive_stats(
            &SystemGeometry {
                d1: 1.0,
                d2: 1.0,
                d3: 1.0,
                d1p: 1.0,
                d2p: 1.0,
                alpha_pl: 3.0,
            },
            &PowerConstraints {
                gamma_max: 0.0,
                gamma_p: 1.0,
            },
        )
        .unwrap();
        let half = Rational::new(1.into(), 2.into());
        let m = brute_force_mode_probs(&silent, &rates, &half, Scheme::RelayOnly, 100_000, 1).unwrap();
        assert_eq!(m[Mode::Silent].estimate, 1.0);
    }
}
