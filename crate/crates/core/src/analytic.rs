//! Closed-form performance: joint rate-triplet probabilities, per-mode link
//! rates over the weight lattice, buffer-stability classification, coin-toss
//! probabilities and the optimal system throughput.

use rayon::prelude::*;

use crate::channel::{LinkStats, Scheme};
use crate::error::{Error, Result};
use crate::lattice::{
    build_alpha_lattice, enumerate_domain_sets, thresholds, AlphaLattice, Mode,
    ModeMap, RateSet, RateTripletIndex, Rational,
};

use Mode::{All, Except1, Except2, Except3, Only1, Only2, Only3, Silent};

/// Tolerance for identities that hold exactly in exact arithmetic.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn check_scheme_rates(rates: &RateSet, scheme: Scheme) -> Result<()> {
    if scheme == Scheme::Alamouti && !rates.identical_links() {
        return Err(Error::InvalidParameter(
            "the combined scheme compares gamma_2 + gamma_3 against link-2 thresholds \
             and needs identical rate sets on all links"
                .into(),
        ));
    }
    Ok(())
}

/// Indices `j2` of the link-2 corner terms, as offsets from `k2`. For the
/// combined scheme the lower corner collapses to threshold 0 when `k2 = k3`
/// because `gamma_3 >= th[k3]` already implies the sum constraint.
fn link2_offsets(k2: usize, k3: usize, scheme: Scheme) -> &'static [isize] {
    match scheme {
        Scheme::RelayOnly => &[0, 1],
        Scheme::Alamouti if k2 < k3 => &[],
        Scheme::Alamouti if k2 == k3 => &[isize::MIN, 1],
        Scheme::Alamouti => &[0, 1],
    }
}

/// Inclusion-exclusion over the corner CCDF values; `ccdf(i1, i2, i3)` takes
/// threshold indices, where `K + 1` denotes the infinite sentinel.
fn inclusion_exclusion(
    t: &RateTripletIndex,
    scheme: Scheme,
    mut ccdf: impl FnMut(usize, usize, usize) -> Result<f64>,
) -> Result<f64> {
    let mut terms = Vec::with_capacity(8);
    for &j2 in link2_offsets(t.k2, t.k3, scheme) {
        let (i2, s2) = if j2 == isize::MIN { (0, 0) } else { (t.k2 + j2 as usize, j2 as u32) };
        for j1 in 0..2u32 {
            for j3 in 0..2u32 {
                let v = ccdf(t.k1 + j1 as usize, i2, t.k3 + j3 as usize)?;
                let sign = if (j1 + s2 + j3) % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(sign * v);
            }
        }
    }
    Ok(compensated_sum(terms))
}

/// Probability that the maximal feasible rate indices equal `triplet`.
pub fn joint_prob(
    stats: &LinkStats,
    rates: &RateSet,
    triplet: &RateTripletIndex,
    scheme: Scheme,
) -> Result<f64> {
    check_scheme_rates(rates, scheme)?;
    let th = thresholds(rates);
    if triplet.k1 >= rates.len(0) || triplet.k2 >= rates.len(1) || triplet.k3 >= rates.len(2) {
        return Err(Error::InvalidArgument(format!("triplet {triplet} out of range")));
    }
    inclusion_exclusion(triplet, scheme, |i1, i2, i3| {
        stats.joint_ccdf(scheme, th.g1[i1], th.g2[i2], th.g3[i3])
    })
}

/// Probability mass over the full index cube (zero outside the admissible
/// constellation), built from one cached grid of corner CCDF values.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletPmf {
    pub scheme: Scheme,
    dims: [usize; 3],
    probs: Vec<f64>,
}

impl TripletPmf {
    pub fn get(&self, t: &RateTripletIndex) -> f64 {
        self.probs[(t.k1 * self.dims[1] + t.k2) * self.dims[2] + t.k3]
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }
}

pub fn joint_pmf(stats: &LinkStats, rates: &RateSet, scheme: Scheme) -> Result<TripletPmf> {
    check_scheme_rates(rates, scheme)?;
    let th = thresholds(rates);
    let dims = [rates.len(0), rates.len(1), rates.len(2)];
    let g = [dims[0] + 1, dims[1] + 1, dims[2] + 1];
    let grid: Vec<f64> = (0..g[0] * g[1] * g[2])
        .into_par_iter()
        .map(|idx| {
            let (i1, rest) = (idx / (g[1] * g[2]), idx % (g[1] * g[2]));
            let (i2, i3) = (rest / g[2], rest % g[2]);
            stats.joint_ccdf(scheme, th.g1[i1], th.g2[i2], th.g3[i3])
        })
        .collect::<Result<_>>()?;
    let corner = |i1: usize, i2: usize, i3: usize| Ok(grid[(i1 * g[1] + i2) * g[2] + i3]);
    let mut probs = vec![0.0; dims[0] * dims[1] * dims[2]];
    for t in rates.triplets(scheme) {
        probs[(t.k1 * dims[1] + t.k2) * dims[2] + t.k3] = inclusion_exclusion(&t, scheme, corner)?;
    }
    Ok(TripletPmf { scheme, dims, probs })
}

/// Mode probabilities and per-mode average link rates at every lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRateTable {
    pub scheme: Scheme,
    pub lattice: AlphaLattice,
    probs: Vec<ModeMap<f64>>,
    rates: Vec<ModeMap<[f64; 3]>>,
}

impl ModeRateTable {
    pub fn w_max(&self) -> usize {
        self.lattice.w_max()
    }

    pub fn alpha(&self, w: usize) -> f64 {
        self.lattice.get_f64(w)
    }

    pub fn mode_prob(&self, w: usize, mode: Mode) -> f64 {
        self.probs[w][mode]
    }

    pub fn mode_probs(&self, w: usize) -> &ModeMap<f64> {
        &self.probs[w]
    }

    /// Average rate of link `link` (0-based) accumulated over the union of `modes`.
    pub fn rate(&self, w: usize, link: usize, modes: &[Mode]) -> f64 {
        compensated_sum(modes.iter().map(|&m| self.rates[w][m][link]))
    }
}

pub fn mode_table(
    stats: &LinkStats,
    rates: &RateSet,
    lattice: &AlphaLattice,
    scheme: Scheme,
) -> Result<ModeRateTable> {
    let pmf = joint_pmf(stats, rates, scheme)?;
    Ok(mode_table_from_pmf(&pmf, rates, lattice))
}

pub fn mode_table_from_pmf(pmf: &TripletPmf, rates: &RateSet, lattice: &AlphaLattice) -> ModeRateTable {
    let rate_f: [Vec<f64>; 3] =
        std::array::from_fn(|i| (0..rates.len(i)).map(|k| rates.rate_f64(i, k)).collect());
    let rows: Vec<(ModeMap<f64>, ModeMap<[f64; 3]>)> = lattice
        .values()
        .par_iter()
        .map(|alpha| {
            let sets = enumerate_domain_sets(alpha, rates, pmf.scheme);
            let probs = sets.map(|ts| compensated_sum(ts.iter().map(|t| pmf.get(t))));
            let link_rates = sets.map(|ts| {
                std::array::from_fn(|i| {
                    compensated_sum(ts.iter().map(|t| pmf.get(t) * rate_f[i][t.as_array()[i]]))
                })
            });
            (probs, link_rates)
        })
        .collect();
    let (probs, rates) = rows.into_iter().unzip();
    ModeRateTable {
        scheme: pmf.scheme,
        lattice: lattice.clone(),
        probs,
        rates,
    }
}

const FWD1: &[Mode] = &[Only1, Except2, Except3, All];
const BWD2: &[Mode] = &[Only2, Except1, Except3, All];

/// Throughput of the min-max rule at every lattice point and its minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputCurve {
    pub values: Vec<f64>,
    pub argmin: usize,
    pub tau_t: f64,
    pub alpha_star: Rational,
}

fn forward_form(t: &ModeRateTable, w: usize) -> f64 {
    let a = t.alpha(w);
    a * t.rate(w, 0, FWD1) + (1.0 - a) * t.rate(w, 1, &[Only2]) + t.rate(w, 2, &[Only3, Except1])
}

fn backward_form(t: &ModeRateTable, w: usize) -> f64 {
    let a = t.alpha(w);
    a * t.rate(w, 0, &[Only1]) + (1.0 - a) * t.rate(w, 1, BWD2) + t.rate(w, 2, &[Only3, Except2])
}

/// Evaluates both throughput forms over the lattice, checks that they agree
/// wherever both apply and returns the minimum.
pub fn system_throughput(table: &ModeRateTable) -> Result<ThroughputCurve> {
    let w_max = table.w_max();
    let mut values = Vec::with_capacity(w_max + 1);
    for w in 0..=w_max {
        let v = if w == w_max {
            backward_form(table, w)
        } else {
            let f = forward_form(table, w);
            if w > 0 {
                let b = backward_form(table, w);
                if (f - b).abs() > IDENTITY_TOL {
                    return Err(Error::Inconsistency(format!(
                        "throughput forms disagree at w={w}: {f} vs {b}"
                    )));
                }
            }
            f
        };
        values.push(v);
    }
    let argmin = (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("lattice has two points");
    Ok(ThroughputCurve {
        tau_t: values[argmin],
        alpha_star: table.lattice.get(argmin).clone(),
        argmin,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityCase {
    Case1,
    Case2,
    Case3a,
    Case3b,
    Case3c,
}

impl StabilityCase {
    pub fn label(self) -> &'static str {
        match self {
            StabilityCase::Case1 => "1",
            StabilityCase::Case2 => "2",
            StabilityCase::Case3a => "3a",
            StabilityCase::Case3b => "3b",
            StabilityCase::Case3c => "3c",
        }
    }
}

impl std::fmt::Display for StabilityCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "case{}", self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stability {
    pub case: StabilityCase,
    pub w_star: usize,
}

fn r11(t: &ModeRateTable, w: usize) -> f64 {
    t.rate(w, 0, &[Only1])
}

fn r22(t: &ModeRateTable, w: usize) -> f64 {
    t.rate(w, 1, &[Only2])
}

fn case3_holds(t: &ModeRateTable, z: usize) -> bool {
    r22(t, z - 1) >= r11(t, z) && r11(t, z + 1) >= r22(t, z)
}

/// Locates the lattice point at which the relay buffer can be balanced.
///
/// The boundary tests use `<=` so that an exact balance at `alpha_0` or
/// `alpha_W` resolves to the boundary case with a unit coin-toss ratio.
pub fn classify_stability(table: &ModeRateTable) -> Result<Stability> {
    let w_max = table.w_max();
    if r22(table, 0) <= r11(table, 1) {
        return Ok(Stability {
            case: StabilityCase::Case1,
            w_star: 0,
        });
    }
    if r11(table, w_max) <= r22(table, w_max - 1) {
        return Ok(Stability {
            case: StabilityCase::Case2,
            w_star: w_max - 1,
        });
    }
    let candidates: Vec<usize> = (1..w_max).filter(|&z| case3_holds(table, z)).collect();
    let z = match candidates.as_slice() {
        [] => {
            return Err(Error::Inconsistency(
                "no lattice point balances the buffer".into(),
            ))
        }
        [z] => *z,
        [z, rest @ ..] => {
            // several z only when adjacent rates tie exactly; the throughput must tie too
            let curve = system_throughput(table)?;
            let v = curve.values[*z];
            if rest.iter().any(|&o| (curve.values[o] - v).abs() > IDENTITY_TOL) {
                return Err(Error::Inconsistency(format!(
                    "ambiguous balancing points {candidates:?}"
                )));
            }
            *z
        }
    };
    let r1 = r11(table, z);
    let r2 = r22(table, z);
    let case = if r1 >= table.rate(z, 1, &[Only2, Except3]) {
        StabilityCase::Case3a
    } else if r2 >= table.rate(z, 0, &[Only1, Except3]) {
        StabilityCase::Case3c
    } else {
        StabilityCase::Case3b
    };
    Ok(Stability { case, w_star: z })
}

/// Link-selection probabilities for throttled and tied modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinToss {
    /// Link 1 transmits in mode 1 (otherwise silence).
    pub link1_in_only1: f64,
    /// Link 2 transmits in mode 2 (otherwise silence).
    pub link2_in_only2: f64,
    /// Link 2 in mode ~1 (otherwise link 3); also link 2's share of ~N.
    pub link2_in_except1: f64,
    /// Link 1 in mode ~2 (otherwise link 3); also link 1's share of ~N.
    pub link1_in_except2: f64,
    /// Link 1 in mode ~3 (otherwise link 2).
    pub link1_in_except3: f64,
}

impl CoinToss {
    /// No throttling; ties between links 1 and 2 split evenly, all others go to link 3.
    pub fn unthrottled() -> Self {
        CoinToss {
            link1_in_only1: 1.0,
            link2_in_only2: 1.0,
            link2_in_except1: 0.0,
            link1_in_except2: 0.0,
            link1_in_except3: 0.5,
        }
    }

    pub fn link2_in_except3(&self) -> f64 {
        1.0 - self.link1_in_except3
    }

    /// Probability of each link (0-based) transmitting in `mode`; the remainder is silence.
    pub fn link_distribution(&self, mode: Mode) -> [f64; 3] {
        match mode {
            Only1 => [self.link1_in_only1, 0.0, 0.0],
            Only2 => [0.0, self.link2_in_only2, 0.0],
            Only3 => [0.0, 0.0, 1.0],
            Except1 => [0.0, self.link2_in_except1, 1.0 - self.link2_in_except1],
            Except2 => [self.link1_in_except2, 0.0, 1.0 - self.link1_in_except2],
            Except3 => [self.link1_in_except3, self.link2_in_except3(), 0.0],
            All => [
                self.link1_in_except2,
                self.link2_in_except1,
                1.0 - self.link1_in_except2 - self.link2_in_except1,
            ],
            Silent => [0.0, 0.0, 0.0],
        }
    }

    fn all(&self) -> [f64; 5] {
        [
            self.link1_in_only1,
            self.link2_in_only2,
            self.link2_in_except1,
            self.link1_in_except2,
            self.link1_in_except3,
        ]
    }
}

/// The weight and coin tosses a scheduler runs with.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub alpha: Rational,
    pub coins: CoinToss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub case: StabilityCase,
    pub w_star: usize,
    pub alpha_star: Rational,
    /// Lattice index the policy runs at; differs from `w_star` only in the
    /// boundary cases (1 for case 1, `W - 1` for case 2).
    pub policy_w: usize,
    pub policy_alpha: Rational,
    pub coins: CoinToss,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau_t: f64,
}

impl OperatingPoint {
    pub fn policy(&self) -> Policy {
        Policy {
            alpha: self.policy_alpha.clone(),
            coins: self.coins,
        }
    }
}

/// `num / den`, with `fallback` for `0 / 0`.
fn ratio(num: f64, den: f64, fallback: f64, what: &str) -> Result<f64> {
    if den > 0.0 {
        Ok(num / den)
    } else if num.abs() <= IDENTITY_TOL {
        Ok(fallback)
    } else {
        Err(Error::Inconsistency(format!("{what}: {num} / {den}")))
    }
}

fn clamp_unit(p: f64, what: &str) -> Result<f64> {
    if !(-IDENTITY_TOL..=1.0 + IDENTITY_TOL).contains(&p) {
        return Err(Error::Inconsistency(format!(
            "{what} = {p} lies outside [0,1]; stability case misclassified"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn link_rates(t: &ModeRateTable, w: usize, c: &CoinToss) -> [f64; 3] {
    let r = |link, modes: &[Mode]| t.rate(w, link, modes);
    let tau1 = compensated_sum([
        c.link1_in_only1 * r(0, &[Only1]),
        c.link1_in_except2 * r(0, &[Except2, All]),
        c.link1_in_except3 * r(0, &[Except3]),
    ]);
    let tau2 = compensated_sum([
        c.link2_in_only2 * r(1, &[Only2]),
        c.link2_in_except1 * r(1, &[Except1, All]),
        c.link2_in_except3() * r(1, &[Except3]),
    ]);
    let tau3 = compensated_sum([
        r(2, &[Only3]),
        (1.0 - c.link1_in_except2) * r(2, &[Except2]),
        (1.0 - c.link2_in_except1) * r(2, &[Except1]),
        (1.0 - c.link2_in_except1 - c.link1_in_except2) * r(2, &[All]),
    ]);
    [tau1, tau2, tau3]
}

fn check_close(a: f64, b: f64, what: &str) -> Result<()> {
    if (a - b).abs() > IDENTITY_TOL {
        Err(Error::Inconsistency(format!("{what}: {a} vs {b}")))
    } else {
        Ok(())
    }
}

/// Solves the coin tosses that equalize buffer inflow and outflow.
pub fn solve_operating_point(table: &ModeRateTable, stab: Stability) -> Result<OperatingPoint> {
    let w_max = table.w_max();
    let z = stab.w_star;
    let (policy_w, coins, expected_tau3) = match stab.case {
        StabilityCase::Case1 => {
            let p = ratio(r22(table, 0), r11(table, 1), 1.0, "case 1 throttle")?;
            let coins = CoinToss {
                link1_in_only1: clamp_unit(p, "P1^1")?,
                link2_in_only2: 1.0,
                link2_in_except1: 1.0,
                link1_in_except2: 0.0,
                link1_in_except3: 0.0,
            };
            (1, coins, None)
        }
        StabilityCase::Case2 => {
            let p = ratio(r11(table, w_max), r22(table, w_max - 1), 1.0, "case 2 throttle")?;
            let coins = CoinToss {
                link1_in_only1: 1.0,
                link2_in_only2: clamp_unit(p, "P2^2")?,
                link2_in_except1: 0.0,
                link1_in_except2: 1.0,
                link1_in_except3: 1.0,
            };
            (w_max - 1, coins, None)
        }
        StabilityCase::Case3a => {
            let gap = r11(table, z) - table.rate(z, 1, &[Only2, Except3]);
            let p = ratio(gap, table.rate(z, 1, &[Except1, All]), 0.0, "case 3a toss")?;
            let coins = CoinToss {
                link1_in_only1: 1.0,
                link2_in_only2: 1.0,
                link2_in_except1: clamp_unit(p, "P2^~1")?,
                link1_in_except2: 0.0,
                link1_in_except3: 0.0,
            };
            let tau3 = table.rate(z, 2, &[Only3, Except1, Except2, All]) - (1.0 - table.alpha(z)) * gap;
            (z, coins, Some(tau3))
        }
        StabilityCase::Case3c => {
            let gap = r22(table, z) - table.rate(z, 0, &[Only1, Except3]);
            let p = ratio(gap, table.rate(z, 0, &[Except2, All]), 0.0, "case 3c toss")?;
            let coins = CoinToss {
                link1_in_only1: 1.0,
                link2_in_only2: 1.0,
                link2_in_except1: 0.0,
                link1_in_except2: clamp_unit(p, "P1^~2")?,
                link1_in_except3: 1.0,
            };
            let tau3 = table.rate(z, 2, &[Only3, Except1, Except2, All]) - table.alpha(z) * gap;
            (z, coins, Some(tau3))
        }
        StabilityCase::Case3b => {
            let den = table.rate(z, 0, &[Except3]) + table.rate(z, 1, &[Except3]);
            let num1 = table.rate(z, 1, &[Only2, Except3]) - r11(table, z);
            let num2 = table.rate(z, 0, &[Only1, Except3]) - r22(table, z);
            let p1 = clamp_unit(ratio(num1, den, 0.5, "case 3b toss")?, "P1^~3")?;
            let p2 = clamp_unit(ratio(num2, den, 0.5, "case 3b toss")?, "P2^~3")?;
            check_close(p1 + p2, 1.0, "case 3b tosses must sum to one")?;
            let a = table.alpha(z);
            let via1 = r11(table, z) + (1.0 - a) * num1;
            let via2 = r22(table, z) + a * num2;
            check_close(via1, via2, "case 3b throughput expressions")?;
            let coins = CoinToss {
                link1_in_only1: 1.0,
                link2_in_only2: 1.0,
                link2_in_except1: 0.0,
                link1_in_except2: 0.0,
                link1_in_except3: p1,
            };
            let tau3 = table.rate(z, 2, &[Only3, Except1, Except2, All]);
            (z, coins, Some(tau3))
        }
    };
    if coins.all().iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Inconsistency(format!("coin tosses out of range: {coins:?}")));
    }
    let [tau1, tau2, tau3] = link_rates(table, policy_w, &coins);
    check_close(tau1, tau2, "buffer inflow and outflow")?;
    if let Some(t3) = expected_tau3 {
        check_close(tau3, t3, "direct-link throughput")?;
    }
    Ok(OperatingPoint {
        case: stab.case,
        w_star: z,
        alpha_star: table.lattice.get(z).clone(),
        policy_w,
        policy_alpha: table.lattice.get(policy_w).clone(),
        coins,
        tau1,
        tau2,
        tau3,
        tau_t: tau2 + tau3,
    })
}

/// Everything the closed-form engine produces for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub table: ModeRateTable,
    pub curve: ThroughputCurve,
    pub stability: Stability,
    pub operating_point: OperatingPoint,
}

impl Analysis {
    /// Lattice index of the throughput minimum predicted by the stability
    /// case: `w*` for cases 1 and 3, `W` for case 2 (the policy then runs at
    /// `W - 1` with link 2 throttled, which attains the value at `W`).
    pub fn expected_argmin(&self) -> usize {
        expected_argmin(&self.table, self.stability)
    }
}

fn expected_argmin(table: &ModeRateTable, stab: Stability) -> usize {
    match stab.case {
        StabilityCase::Case2 => table.w_max(),
        _ => stab.w_star,
    }
}

pub fn analyze(stats: &LinkStats, rates: &RateSet, scheme: Scheme) -> Result<Analysis> {
    let lattice = build_alpha_lattice(rates);
    let table = mode_table(stats, rates, &lattice, scheme)?;
    analyze_table(table)
}

pub fn analyze_table(table: ModeRateTable) -> Result<Analysis> {
    let curve = system_throughput(&table)?;
    let stability = classify_stability(&table)?;
    let operating_point = solve_operating_point(&table, stability)?;
    let expected = expected_argmin(&table, stability);
    check_close(
        operating_point.tau_t,
        curve.values[expected],
        "operating-point throughput against the lattice curve",
    )?;
    Ok(Analysis {
        table,
        curve,
        stability,
        operating_point,
    })
}
