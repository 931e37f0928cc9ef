//! Exact-rational rate sets, SNR thresholds, decision metrics, the lattice of
//! candidate weights and classification of rate-index triplets into modes.
//!
//! Links are indexed `0..3` as in [`crate::channel`]. Link 3 always uses the
//! rate set of link 1.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::channel::Scheme;
use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `"3"`, `"-1.75"`, `"2.5e-1"` or `"7/4"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = [int_part, frac_part].concat();
    let mut num = BigInt::from_str(&all).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Formats a rational as `n` or `n/d`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Discrete transmission rates in bits per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateSet {
    r1: Vec<Rational>,
    r2: Vec<Rational>,
}

impl RateSet {
    pub fn new(r1: Vec<Rational>, r2: Vec<Rational>) -> Result<Self> {
        for (name, r) in [("r1", &r1), ("r2", &r2)] {
            match r.first() {
                Some(z) if z.is_zero() => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must start with rate 0"
                    )))
                }
            }
            if r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly ascending"
                )));
            }
        }
        if r1.len() == 1 && r2.len() == 1 {
            return Err(Error::InvalidParameter(
                "rate set has no nonzero rate".into(),
            ));
        }
        Ok(RateSet { r1, r2 })
    }

    pub fn from_strs(r1: &[&str], r2: &[&str]) -> Result<Self> {
        let parse = |v: &[&str]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        RateSet::new(parse(r1)?, parse(r2)?)
    }

    /// `{0, S, 2S, ..., K*S}` on both links.
    pub fn uniform(levels: usize, scale: Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::InvalidParameter("rate scale must be positive".into()));
        }
        let r: Vec<Rational> = (0..=levels)
            .map(|k| Rational::from_integer(BigInt::from(k)) * &scale)
            .collect();
        RateSet::new(r.clone(), r)
    }

    /// Rates of link `i` (0-based); link 3 shares link 1's set.
    pub fn rates(&self, link: usize) -> &[Rational] {
        match link {
            0 | 2 => &self.r1,
            1 => &self.r2,
            _ => panic!("link index {link} out of range"),
        }
    }

    /// Number of rate levels `K_i + 1` of link `i`.
    pub fn len(&self, link: usize) -> usize {
        self.rates(link).len()
    }

    pub fn rate(&self, link: usize, k: usize) -> &Rational {
        &self.rates(link)[k]
    }

    pub fn rate_f64(&self, link: usize, k: usize) -> f64 {
        rational_to_f64(self.rate(link, k))
    }

    pub fn identical_links(&self) -> bool {
        self.r1 == self.r2
    }

    pub fn scaled(&self, factor: &Rational) -> Result<Self> {
        if !factor.is_positive() {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        RateSet::new(
            self.r1.iter().map(|r| r * factor).collect(),
            self.r2.iter().map(|r| r * factor).collect(),
        )
    }

    /// All admissible triplets in lexicographic order. The combined scheme
    /// drops `k2 < k3`, which no SNR realization can produce.
    pub fn triplets(&self, scheme: Scheme) -> impl Iterator<Item = RateTripletIndex> + '_ {
        let (n1, n2) = (self.r1.len(), self.r2.len());
        (0..n1).flat_map(move |k1| {
            (0..n2).flat_map(move |k2| {
                (0..n1).filter_map(move |k3| {
                    let t = RateTripletIndex { k1, k2, k3 };
                    t.admissible(scheme).then_some(t)
                })
            })
        })
    }

    /// Number of triplets in the full cube.
    pub fn cube_size(&self) -> usize {
        self.r1.len() * self.r2.len() * self.r1.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RateTripletIndex {
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,
}

impl RateTripletIndex {
    pub fn new(k1: usize, k2: usize, k3: usize) -> Self {
        RateTripletIndex { k1, k2, k3 }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.k1, self.k2, self.k3]
    }

    pub fn admissible(&self, scheme: Scheme) -> bool {
        scheme == Scheme::RelayOnly || self.k2 >= self.k3
    }
}

impl fmt::Display for RateTripletIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.k1, self.k2, self.k3)
    }
}

/// Decoding thresholds `2^R - 1` per link, each terminated by `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrThresholds {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
}

impl SnrThresholds {
    pub fn link(&self, i: usize) -> &[f64] {
        match i {
            0 => &self.g1,
            1 => &self.g2,
            2 => &self.g3,
            _ => panic!("link index {i} out of range"),
        }
    }
}

pub fn thresholds(rates: &RateSet) -> SnrThresholds {
    let conv = |r: &[Rational]| -> Vec<f64> {
        r.iter()
            .map(|x| (rational_to_f64(x) * std::f64::consts::LN_2).exp_m1())
            .chain(std::iter::once(f64::INFINITY))
            .collect()
    };
    let g1 = conv(rates.rates(0));
    SnrThresholds {
        g3: g1.clone(),
        g1,
        g2: conv(rates.rates(1)),
    }
}

/// Which links carry a positive maximal decision metric in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Only1,
    Only2,
    Only3,
    /// Links 2 and 3 tie above link 1.
    Except1,
    /// Links 1 and 3 tie above link 2.
    Except2,
    /// Links 1 and 2 tie above link 3.
    Except3,
    /// Positive three-way tie.
    All,
    Silent,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Only1,
        Mode::Only2,
        Mode::Only3,
        Mode::Except1,
        Mode::Except2,
        Mode::Except3,
        Mode::All,
        Mode::Silent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Only1 => "1",
            Mode::Only2 => "2",
            Mode::Only3 => "3",
            Mode::Except1 => "~1",
            Mode::Except2 => "~2",
            Mode::Except3 => "~3",
            Mode::All => "~N",
            Mode::Silent => "N",
        }
    }

    /// Links (0-based) whose metric attains the maximum.
    pub fn links(self) -> &'static [usize] {
        match self {
            Mode::Only1 => &[0],
            Mode::Only2 => &[1],
            Mode::Only3 => &[2],
            Mode::Except1 => &[1, 2],
            Mode::Except2 => &[0, 2],
            Mode::Except3 => &[0, 1],
            Mode::All => &[0, 1, 2],
            Mode::Silent => &[],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode {s:?}")))
    }
}

/// Fixed-size map keyed by [`Mode`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeMap<T>(pub [T; 8]);

impl<T> ModeMap<T> {
    pub fn from_fn(mut f: impl FnMut(Mode) -> T) -> Self {
        ModeMap(std::array::from_fn(|i| f(Mode::ALL[i])))
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> ModeMap<U> {
        ModeMap(std::array::from_fn(|i| f(&self.0[i])))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, &T)> {
        Mode::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<Mode> for ModeMap<T> {
    type Output = T;
    fn index(&self, m: Mode) -> &T {
        &self.0[m.index()]
    }
}

impl<T> IndexMut<Mode> for ModeMap<T> {
    fn index_mut(&mut self, m: Mode) -> &mut T {
        &mut self.0[m.index()]
    }
}

/// Sorted distinct weights `0 = alpha_0 < ... < alpha_W = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaLattice {
    values: Vec<Rational>,
}

impl AlphaLattice {
    /// Builds a lattice from arbitrary values; the endpoints are added,
    /// out-of-range values rejected.
    pub fn from_values(mut values: Vec<Rational>) -> Result<Self> {
        if values.iter().any(|v| v.is_negative() || *v > Rational::one()) {
            return Err(Error::InvalidParameter("lattice values must lie in [0,1]".into()));
        }
        values.push(Rational::zero());
        values.push(Rational::one());
        values.sort();
        values.dedup();
        Ok(AlphaLattice { values })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get(&self, w: usize) -> &Rational {
        &self.values[w]
    }

    pub fn get_f64(&self, w: usize) -> f64 {
        rational_to_f64(&self.values[w])
    }

    /// Number of points, `W + 1`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest index `W`.
    pub fn w_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn position(&self, alpha: &Rational) -> Option<usize> {
        self.values.binary_search(alpha).ok()
    }
}

/// Collects the weights at which two decision metrics can coincide.
pub fn build_alpha_lattice(rates: &RateSet) -> AlphaLattice {
    let (r1, r2) = (rates.rates(0), rates.rates(1));
    let r3 = rates.rates(2);
    let one = Rational::one();
    let mut cands = Vec::new();
    for a in r1 {
        for b in r2 {
            if !(a.is_zero() && b.is_zero()) {
                // alpha * R1 = (1 - alpha) * R2
                cands.push(b / (a + b));
            }
            for c in r3 {
                if c > a.max(b) {
                    continue;
                }
                if !b.is_zero() {
                    // (1 - alpha) * R2 = R3
                    cands.push(&one - c / b);
                }
                if !a.is_zero() {
                    // alpha * R1 = R3
                    cands.push(c / a);
                }
            }
        }
    }
    cands.retain(|v| !v.is_negative() && *v <= one);
    AlphaLattice::from_values(cands).expect("candidates filtered to [0,1]")
}

/// `(alpha * R1, (1 - alpha) * R2, R3)` at the triplet's rates.
pub fn decision_metrics(
    alpha: &Rational,
    triplet: &RateTripletIndex,
    rates: &RateSet,
) -> [Rational; 3] {
    [
        alpha * rates.rate(0, triplet.k1),
        (Rational::one() - alpha) * rates.rate(1, triplet.k2),
        rates.rate(2, triplet.k3).clone(),
    ]
}

pub fn classify_metrics(m: &[Rational; 3]) -> Mode {
    let max = m.iter().max().expect("three metrics");
    if max.is_zero() {
        return Mode::Silent;
    }
    let at_max = [&m[0] == max, &m[1] == max, &m[2] == max];
    match at_max {
        [true, false, false] => Mode::Only1,
        [false, true, false] => Mode::Only2,
        [false, false, true] => Mode::Only3,
        [false, true, true] => Mode::Except1,
        [true, false, true] => Mode::Except2,
        [true, true, false] => Mode::Except3,
        [true, true, true] => Mode::All,
        [false, false, false] => unreachable!("maximum is attained"),
    }
}

pub fn classify_mode(alpha: &Rational, triplet: &RateTripletIndex, rates: &RateSet) -> Mode {
    classify_metrics(&decision_metrics(alpha, triplet, rates))
}

pub type DomainSets = ModeMap<Vec<RateTripletIndex>>;

/// Partitions the admissible constellation of `scheme` into the eight modes at `alpha`.
pub fn enumerate_domain_sets(alpha: &Rational, rates: &RateSet, scheme: Scheme) -> DomainSets {
    let mut sets = DomainSets::default();
    for t in rates.triplets(scheme) {
        sets[classify_mode(alpha, &t, rates)].push(t);
    }
    sets
}

/// Union of the domain sets of `modes`, sorted.
pub fn union_of(sets: &DomainSets, modes: &[Mode]) -> Vec<RateTripletIndex> {
    let mut out: Vec<RateTripletIndex> = modes.iter().flat_map(|&m| sets[m].iter().copied()).collect();
    out.sort();
    out
}
