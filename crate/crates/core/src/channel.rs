//! Fading and interference channel model for the three-node secondary network.
//!
//! Links are indexed `0..3` in arrays: `0` is source to relay, `1` is relay to
//! destination, `2` is the direct source to destination path. The source
//! and the direct path share the interference channel towards the primary
//! receiver, so every "interference" quantity of link 3 is that of link 1.
//!
//! Instantaneous SNRs follow `gamma_i = min(gamma_max, gamma_p / |g_i|^2) * |h_i|^2`
//! with Rayleigh fading on every channel. Setting `gamma_max = +inf` selects
//! the peak-interference-only regime, where every formula is evaluated at its
//! analytic limit rather than with a large finite number.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::validate::{self, QuadratureConfig};

/// Absolute tolerance of the integral term in the combined-signalling CCDF.
pub const SCHEME2_QUAD_TOL: f64 = 1e-9;

/// Signalling used on the relay to destination hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// The relay transmits alone; the destination decodes on `gamma_2`.
    RelayOnly,
    /// Source and relay send a distributed Alamouti codeword; the destination
    /// decodes on `gamma_2 + gamma_3`.
    Alamouti,
}

impl Scheme {
    pub const BOTH: [Scheme; 2] = [Scheme::RelayOnly, Scheme::Alamouti];

    pub fn number(self) -> u8 {
        match self {
            Scheme::RelayOnly => 1,
            Scheme::Alamouti => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Scheme::RelayOnly),
            2 => Some(Scheme::Alamouti),
            _ => None,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Normalized node distances and path-loss exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemGeometry {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// Source to primary receiver. Also used for the direct link.
    pub d1p: f64,
    /// Relay to primary receiver.
    pub d2p: f64,
    pub alpha_pl: f64,
}

impl SystemGeometry {
    pub const DEFAULT_PATH_LOSS: f64 = 3.0;

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("d1p", self.d1p),
            ("d2p", self.d2p),
            ("alpha_pl", self.alpha_pl),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Peak transmit SNR and interference limit, both on a linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConstraints {
    /// `P_max / N_0`; `f64::INFINITY` selects the interference-only regime.
    pub gamma_max: f64,
    /// `I_p / N_0`.
    pub gamma_p: f64,
}

impl PowerConstraints {
    pub fn peak_interference_only(gamma_p: f64) -> Self {
        PowerConstraints {
            gamma_max: f64::INFINITY,
            gamma_p,
        }
    }

    /// Builds constraints from decibel values; `None` for `gamma_max_db` means
    /// no transmit power cap.
    pub fn from_db(gamma_max_db: Option<f64>, gamma_p_db: f64) -> Self {
        PowerConstraints {
            gamma_max: gamma_max_db.map_or(f64::INFINITY, db_to_linear),
            gamma_p: db_to_linear(gamma_p_db),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_max.is_nan() || self.gamma_max < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma_max must be nonnegative, got {}",
                self.gamma_max
            )));
        }
        if !(self.gamma_p.is_finite() && self.gamma_p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma_p must be finite and positive, got {}",
                self.gamma_p
            )));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    if db == f64::INFINITY {
        f64::INFINITY
    } else {
        10f64.powf(db / 10.0)
    }
}

/// Which power constraint can bind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `gamma_max = 0`: nothing is ever transmitted.
    Silent,
    /// Finite positive `gamma_max`: both constraints may bind.
    PeakTransmit,
    /// `gamma_max = +inf`: only the interference limit binds.
    PeakInterference,
}

/// Per-link channel variances and average SNR parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    pub gamma_max: f64,
    pub gamma_p: f64,
    pub omega_h: [f64; 3],
    pub omega_g: [f64; 3],
    /// Average SNR at full transmit power, `gamma_max * omega_h`.
    pub lambda: [f64; 3],
    /// Average SNR at the interference-limited power, `gamma_p * omega_h / omega_g`.
    pub mu: [f64; 3],
    /// Probability that full power would violate the interference limit.
    pub p: [f64; 3],
}

pub fn derive_stats(geom: &SystemGeometry, pow: &PowerConstraints) -> Result<LinkStats> {
    geom.validate()?;
    pow.validate()?;
    let a = geom.alpha_pl;
    let omega_h = [geom.d1.powf(-a), geom.d2.powf(-a), geom.d3.powf(-a)];
    let g1 = geom.d1p.powf(-a);
    let omega_g = [g1, geom.d2p.powf(-a), g1];
    let mut lambda = [0.0; 3];
    let mut mu = [0.0; 3];
    let mut p = [0.0; 3];
    for i in 0..3 {
        lambda[i] = pow.gamma_max * omega_h[i];
        mu[i] = pow.gamma_p * omega_h[i] / omega_g[i];
        p[i] = if pow.gamma_max.is_infinite() {
            1.0
        } else if pow.gamma_max == 0.0 {
            0.0
        } else {
            (-mu[i] / lambda[i]).exp()
        };
    }
    Ok(LinkStats {
        gamma_max: pow.gamma_max,
        gamma_p: pow.gamma_p,
        omega_h,
        omega_g,
        lambda,
        mu,
        p,
    })
}

/// Instantaneous link SNRs on a linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrTriplet {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl SnrTriplet {
    pub fn as_array(&self) -> [f64; 3] {
        [self.g1, self.g2, self.g3]
    }
}

/// One slot's channel power gains: `|h_i|^2` for the three links and
/// `|g_1|^2`, `|g_2|^2` for the interference channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fades {
    pub h: [f64; 3],
    pub g: [f64; 2],
}

impl Fades {
    fn interference(&self, link: usize) -> f64 {
        // link 3 reuses the source's interference channel
        let g = if link == 1 { self.g[1] } else { self.g[0] };
        g.max(f64::MIN_POSITIVE)
    }

    /// Whether transmitting at full power on `link` would exceed the interference limit.
    pub fn peak_violates(&self, stats: &LinkStats, link: usize) -> bool {
        stats.gamma_max > stats.gamma_p / self.interference(link)
    }

    pub fn snr(&self, stats: &LinkStats) -> SnrTriplet {
        let tx = |i: usize| stats.gamma_max.min(stats.gamma_p / self.interference(i));
        SnrTriplet {
            g1: tx(0) * self.h[0],
            g2: tx(1) * self.h[1],
            g3: tx(2) * self.h[2],
        }
    }
}

fn check_level(name: &str, y: f64) -> Result<()> {
    if y.is_nan() || y < 0.0 {
        Err(Error::InvalidArgument(format!("{name} must be nonnegative, got {y}")))
    } else {
        Ok(())
    }
}

/// `exp(-y / lambda)` with the `lambda = inf` and `lambda = 0` limits taken exactly.
fn decay(y: f64, lambda: f64) -> f64 {
    if y == 0.0 || lambda.is_infinite() {
        1.0
    } else if lambda == 0.0 {
        0.0
    } else {
        (-y / lambda).exp()
    }
}

impl LinkStats {
    pub fn regime(&self) -> Regime {
        if self.gamma_max.is_infinite() {
            Regime::PeakInterference
        } else if self.gamma_max == 0.0 {
            Regime::Silent
        } else {
            Regime::PeakTransmit
        }
    }

    pub fn is_pip(&self) -> bool {
        self.regime() == Regime::PeakInterference
    }

    pub fn sample_fades<R: Rng + ?Sized>(&self, rng: &mut R) -> Fades {
        let mut draw = |scale: f64| -> f64 { scale * rng.sample::<f64, _>(Exp1) };
        let h = [
            draw(self.omega_h[0]),
            draw(self.omega_h[1]),
            draw(self.omega_h[2]),
        ];
        let g = [draw(self.omega_g[0]), draw(self.omega_g[1])];
        Fades { h, g }
    }

    pub fn sample_snr_triplet<R: Rng + ?Sized>(&self, rng: &mut R) -> SnrTriplet {
        self.sample_fades(rng).snr(self)
    }

    /// `Pr{gamma_2 >= y}`.
    pub fn ccdf_gamma2(&self, y: f64) -> Result<f64> {
        check_level("y", y)?;
        Ok(self.ccdf2(y))
    }

    fn ccdf2(&self, y: f64) -> f64 {
        if y.is_infinite() {
            return 0.0;
        }
        match self.regime() {
            Regime::Silent => indicator(y == 0.0),
            Regime::PeakInterference => 1.0 / (1.0 + y / self.mu[1]),
            Regime::PeakTransmit => {
                let p = self.p[1];
                decay(y, self.lambda[1]) * (1.0 - p + p / (1.0 + y / self.mu[1]))
            }
        }
    }

    /// Density of `gamma_2`. Undefined in the silent regime, where `gamma_2`
    /// is a point mass at zero.
    pub fn pdf_gamma2(&self, y: f64) -> Result<f64> {
        check_level("y", y)?;
        if self.regime() == Regime::Silent {
            return Err(Error::InvalidState(
                "gamma_2 has no density when gamma_max = 0".into(),
            ));
        }
        Ok(self.pdf2(y))
    }

    fn pdf2(&self, y: f64) -> f64 {
        if y.is_infinite() {
            return 0.0;
        }
        let mu = self.mu[1];
        let r = 1.0 + y / mu;
        match self.regime() {
            Regime::Silent => 0.0,
            Regime::PeakInterference => (1.0 / mu) / (r * r),
            Regime::PeakTransmit => {
                let (lambda, p) = (self.lambda[1], self.p[1]);
                decay(y, lambda) / lambda * (1.0 - p + p / r + (p * lambda / mu) / (r * r))
            }
        }
    }

    /// `Pr{gamma_1 >= y1, gamma_3 >= y3}`; the pair is dependent through the
    /// shared interference channel.
    pub fn joint_ccdf_13(&self, y1: f64, y3: f64) -> Result<f64> {
        check_level("y1", y1)?;
        check_level("y3", y3)?;
        Ok(self.ccdf13(y1, y3))
    }

    fn ccdf13(&self, y1: f64, y3: f64) -> f64 {
        if y1.is_infinite() || y3.is_infinite() {
            return 0.0;
        }
        let denom = 1.0 + y1 / self.mu[0] + y3 / self.mu[2];
        match self.regime() {
            Regime::Silent => indicator(y1 == 0.0 && y3 == 0.0),
            Regime::PeakInterference => 1.0 / denom,
            Regime::PeakTransmit => {
                let p = self.p[0];
                decay(y1, self.lambda[0]) * decay(y3, self.lambda[2]) * (1.0 - p + p / denom)
            }
        }
    }

    /// `Pr{gamma_1 >= y1, gamma_2 >= y2, gamma_3 >= y3}`.
    pub fn joint_ccdf_scheme1(&self, y1: f64, y2: f64, y3: f64) -> Result<f64> {
        check_levels(y1, y2, y3)?;
        Ok(self.ccdf13(y1, y3) * self.ccdf2(y2))
    }

    /// `Pr{gamma_1 >= y1, gamma_2 + gamma_3 >= y2, gamma_3 >= y3}`.
    ///
    /// Conditioning on `gamma_2 = x` with `y4 = max(y2 - y3, 0)`: for `x >= y4`
    /// the constraint on the sum is implied by `gamma_3 >= y3`; below `y4` it
    /// becomes `gamma_3 >= y2 - x`. The second part is integrated numerically.
    pub fn joint_ccdf_scheme2(&self, y1: f64, y2: f64, y3: f64) -> Result<f64> {
        check_levels(y1, y2, y3)?;
        if y1.is_infinite() || y2.is_infinite() || y3.is_infinite() {
            return Ok(0.0);
        }
        if self.regime() == Regime::Silent {
            return Ok(indicator(y1 == 0.0 && y2 == 0.0 && y3 == 0.0));
        }
        let y4 = (y2 - y3).max(0.0);
        let above = self.ccdf2(y4) * self.ccdf13(y1, y3);
        if y4 == 0.0 {
            return Ok(above);
        }
        let below = self.combined_tail_integral(y1, y2, y4)?;
        Ok(above + below)
    }

    fn combined_tail_integral(&self, y1: f64, y2: f64, y4: f64) -> Result<f64> {
        let integrand = |x: f64| self.ccdf13(y1, (y2 - x).max(0.0)) * self.pdf2(x);
        let cfg = QuadratureConfig {
            abs_tol: SCHEME2_QUAD_TOL,
            ..QuadratureConfig::default()
        };
        Ok(validate::quadrature_with(integrand, 0.0, y4, &cfg)?.value)
    }

    /// The three-term expression as printed for the combined scheme, including
    /// the subtracted `F_{gamma_2}(y2) * F^c_{13}(y1, y2)` term. Kept only so
    /// that its disagreement with the definition can be measured.
    pub fn joint_ccdf_scheme2_printed(&self, y1: f64, y2: f64, y3: f64) -> Result<f64> {
        check_levels(y1, y2, y3)?;
        if y1.is_infinite() || y2.is_infinite() || y3.is_infinite() {
            return Ok(0.0);
        }
        if self.regime() == Regime::Silent {
            return Ok(indicator(y1 == 0.0 && y2 == 0.0 && y3 == 0.0));
        }
        let y4 = (y2 - y3).max(0.0);
        let first = self.ccdf13(y1, y3) * self.ccdf2(y4);
        let second = (1.0 - self.ccdf2(y2)) * self.ccdf13(y1, y2);
        let third = if y4 > 0.0 {
            self.combined_tail_integral(y1, y2, y4)?
        } else {
            0.0
        };
        Ok(first - second + third)
    }

    /// Closed-form interference-only expression for the combined scheme,
    /// transcribed term by term from its printed form. It does not agree with
    /// [`LinkStats::joint_ccdf_scheme2`]; see the conformance checks in
    /// `validate` before relying on it.
    pub fn joint_ccdf_scheme2_pip(&self, y1: f64, y2: f64, y3: f64) -> Result<f64> {
        check_levels(y1, y2, y3)?;
        if !self.is_pip() {
            return Err(Error::InvalidState(
                "closed form applies only when gamma_max = +inf".into(),
            ));
        }
        let [m1, m2, m3] = self.mu;
        let y4 = (y2 - y3).max(0.0);
        let base = 1.0 + y1 / m1;
        let shifted = base + (y2 + m2) / m3;
        let r4 = 1.0 + y4 / m2;

        let first = 1.0 / (base + y3 / m3) / r4;
        let second = 1.0 / (base + y2.max(y3) / m3)
            * (1.0 - 1.0 / (1.0 + y2 / m2))
            * (y4 / m2)
            / (r4 * shifted);
        let log_arg = (1.0 + (y4 / m2) / ((m3 / m2) * (base + y3 / m3))) * r4;
        let third = (m2 / m3) / (shifted * shifted) * log_arg.ln();
        Ok(first - second + third)
    }

    /// Joint CCDF of the three decoding statistics under `scheme`.
    pub fn joint_ccdf(&self, scheme: Scheme, y1: f64, y2: f64, y3: f64) -> Result<f64> {
        match scheme {
            Scheme::RelayOnly => self.joint_ccdf_scheme1(y1, y2, y3),
            Scheme::Alamouti => self.joint_ccdf_scheme2(y1, y2, y3),
        }
    }
}

fn check_levels(y1: f64, y2: f64, y3: f64) -> Result<()> {
    check_level("y1", y1)?;
    check_level("y2", y2)?;
    check_level("y3", y3)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table3_geometry(d2p: f64) -> SystemGeometry {
        SystemGeometry {
            d1: 1.0,
            d2: 1.0,
            d3: 2.0,
            d1p: 3.0,
            d2p,
            alpha_pl: 3.0,
        }
    }

    fn table3_stats() -> LinkStats {
        derive_stats(&table3_geometry(1.5), &PowerConstraints::from_db(None, -5.0)).unwrap()
    }

    fn ptp_stats() -> LinkStats {
        derive_stats(
            &SystemGeometry {
                d1: 1.0,
                d2: 1.2,
                d3: 2.0,
                d1p: 2.0,
                d2p: 2.5,
                alpha_pl: 3.0,
            },
            &PowerConstraints::from_db(Some(10.0), 5.0),
        )
        .unwrap()
    }

    #[test]
    fn pip_limit_sets_p_to_one() {
        let s = table3_stats();
        assert_eq!(s.p, [1.0, 1.0, 1.0]);
        assert!(s.lambda.iter().all(|l| l.is_infinite()));
    }

    #[test]
    fn huge_interference_limit_drives_p_to_zero() {
        let s = derive_stats(&table3_geometry(1.5), &PowerConstraints::from_db(Some(10.0), 120.0))
            .unwrap();
        assert!(s.p.iter().all(|&p| p < 1e-12), "{:?}", s.p);
    }

    #[test]
    fn mu2_hand_value() {
        let s = table3_stats();
        assert!((s.mu[1] - 0.316228 * 3.375).abs() < 1e-5);
        assert!((s.mu[1] - 1.06727).abs() < 1e-5);
        assert!((s.mu[0] - 8.5381).abs() < 1e-3);
    }

    #[test]
    fn direct_link_shares_source_interference() {
        let s = ptp_stats();
        assert_eq!(s.p[2], s.p[0]);
        assert_eq!(s.omega_g[2], s.omega_g[0]);
        let expect_mu3 = s.gamma_p * s.omega_h[2] / s.omega_g[0];
        assert!((s.mu[2] - expect_mu3).abs() < 1e-15);
        assert_eq!(s.lambda[2], s.gamma_max * s.omega_h[2]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut g = table3_geometry(1.5);
        g.d2 = 0.0;
        assert!(matches!(
            derive_stats(&g, &PowerConstraints::from_db(None, -5.0)),
            Err(Error::InvalidParameter(_))
        ));
        let bad_power = PowerConstraints {
            gamma_max: 1.0,
            gamma_p: -1.0,
        };
        assert!(derive_stats(&table3_geometry(1.5), &bad_power).is_err());
    }

    #[test]
    fn silent_regime_samples_zero() {
        let s = derive_stats(
            &table3_geometry(1.5),
            &PowerConstraints {
                gamma_max: 0.0,
                gamma_p: 1.0,
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let t = s.sample_snr_triplet(&mut rng);
            assert_eq!(t.as_array(), [0.0, 0.0, 0.0]);
        }
        assert_eq!(s.ccdf_gamma2(0.0).unwrap(), 1.0);
        assert_eq!(s.ccdf_gamma2(0.1).unwrap(), 0.0);
    }

    #[test]
    fn ccdf_gamma2_values() {
        let s = table3_stats();
        assert_eq!(s.ccdf_gamma2(0.0).unwrap(), 1.0);
        assert!((s.ccdf_gamma2(3.0).unwrap() - 0.262_405).abs() < 1e-6);
        assert!(matches!(s.ccdf_gamma2(-1.0), Err(Error::InvalidArgument(_))));
        let p = ptp_stats();
        let mut prev = 1.0;
        for i in 0..200 {
            let v = p.ccdf_gamma2(i as f64 * 0.25).unwrap();
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
    }

    #[test]
    fn pdf_matches_negative_derivative() {
        for s in [table3_stats(), ptp_stats()] {
            for y in [0.1, 1.0, 5.0] {
                let h = 1e-5 * f64::max(1.0, y);
                let fd = -(s.ccdf_gamma2(y + h).unwrap() - s.ccdf_gamma2(y - h).unwrap()) / (2.0 * h);
                let pdf = s.pdf_gamma2(y).unwrap();
                assert!((fd - pdf).abs() < 1e-6, "y={y} fd={fd} pdf={pdf}");
            }
        }
    }

    #[test]
    fn pdf_pip_unit_mu_at_origin() {
        let mut s = table3_stats();
        s.mu[1] = 1.0;
        assert_eq!(s.pdf_gamma2(0.0).unwrap(), 1.0);
        assert!(s.pdf_gamma2(-0.5).is_err());
    }

    #[test]
    fn joint_ccdf_13_values() {
        let s = table3_stats();
        assert_eq!(s.joint_ccdf_13(0.0, 0.0).unwrap(), 1.0);
        assert!((s.joint_ccdf_13(0.0, 3.0).unwrap() - 0.262_405).abs() < 1e-6);
        let p = ptp_stats();
        for &(a, b) in &[(0.3, 1.2), (2.0, 0.0), (4.0, 7.0)] {
            let both = p.joint_ccdf_13(a, b).unwrap();
            let m = p.joint_ccdf_13(a, 0.0).unwrap().min(p.joint_ccdf_13(0.0, b).unwrap());
            assert!(both <= m);
        }
        assert!(s.joint_ccdf_13(1.0, -1e-3).is_err());
    }

    #[test]
    fn scheme1_factorizes() {
        let s = ptp_stats();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let y: [f64; 3] = [rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0];
            let joint = s.joint_ccdf_scheme1(y[0], y[1], y[2]).unwrap();
            let prod = s.joint_ccdf_13(y[0], y[2]).unwrap() * s.ccdf_gamma2(y[1]).unwrap();
            assert_eq!(joint, prod);
        }
        assert_eq!(s.joint_ccdf_scheme1(0.0, 0.0, 0.0).unwrap(), 1.0);
        let t = table3_stats();
        assert!((t.joint_ccdf_scheme1(0.0, 3.0, 3.0).unwrap() - 0.0689).abs() < 1e-4);
    }

    #[test]
    fn scheme2_collapses_when_direct_threshold_dominates() {
        for s in [table3_stats(), ptp_stats()] {
            for &(y1, y2, y3) in &[(0.0, 1.0, 1.0), (0.5, 0.2, 3.0), (2.0, 0.0, 0.7)] {
                assert_eq!(
                    s.joint_ccdf_scheme2(y1, y2, y3).unwrap(),
                    s.joint_ccdf_13(y1, y3).unwrap()
                );
            }
        }
    }

    #[test]
    fn scheme2_dominates_scheme1() {
        let s = ptp_stats();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let y: [f64; 3] = [rng.random::<f64>() * 6.0, rng.random::<f64>() * 12.0, rng.random::<f64>() * 6.0];
            let a = s.joint_ccdf_scheme2(y[0], y[1], y[2]).unwrap();
            let b = s.joint_ccdf_scheme1(y[0], y[1], y[2]).unwrap();
            assert!(a >= b - 1e-12, "{y:?}: {a} < {b}");
        }
    }

    #[test]
    fn pip_closed_form_trivial_points() {
        let s = table3_stats();
        assert!((s.joint_ccdf_scheme2_pip(0.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let v = s.joint_ccdf_scheme2_pip(1.0, 2.0, 3.0).unwrap();
        let expect = 1.0 / (1.0 + 1.0 / s.mu[0] + 3.0 / s.mu[2]);
        assert!((v - expect).abs() < 1e-15);
        assert!(matches!(
            ptp_stats().joint_ccdf_scheme2_pip(0.0, 1.0, 0.0),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn infinite_levels_give_zero() {
        let s = ptp_stats();
        let inf = f64::INFINITY;
        assert_eq!(s.joint_ccdf_scheme1(inf, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(s.joint_ccdf_scheme2(0.0, inf, 0.0).unwrap(), 0.0);
        assert_eq!(s.joint_ccdf_scheme2(0.0, 0.0, inf).unwrap(), 0.0);
        assert_eq!(s.ccdf_gamma2(inf).unwrap(), 0.0);
    }
}
