//! Slot-level simulation of the link-selection policy with a real relay buffer.
//!
//! Each replication owns two ChaCha8 streams derived from the master seed:
//! stream `2r` draws the fading, stream `2r + 1` the coin tosses. Fading
//! trajectories therefore do not depend on the policy, which lets different
//! policies or schemes be compared on identical channels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{OperatingPoint, Policy};
use crate::channel::{LinkStats, Scheme, SnrTriplet};
use crate::error::{Error, Result};
use crate::lattice::{
    classify_mode, thresholds, Mode, ModeMap, RateSet, RateTripletIndex, Rational, SnrThresholds,
};

/// Largest index whose threshold does not exceed `snr`.
fn level(snr: f64, th: &[f64]) -> usize {
    th.partition_point(|&t| t <= snr).saturating_sub(1)
}

/// Maximal rate indices decodable at `snr`. Under the combined scheme link 2
/// is decoded on `gamma_2 + gamma_3`.
pub fn feasible_indices(snr: &SnrTriplet, th: &SnrThresholds, scheme: Scheme) -> RateTripletIndex {
    let x2 = match scheme {
        Scheme::RelayOnly => snr.g2,
        Scheme::Alamouti => snr.g2 + snr.g3,
    };
    RateTripletIndex {
        k1: level(snr.g1, &th.g1),
        k2: level(x2, &th.g2),
        k3: level(snr.g3, &th.g3),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    pub mode: Mode,
    /// Transmitting link (0-based), `None` for silence.
    pub selected_link: Option<usize>,
    pub rate: Rational,
    pub coin_toss_used: bool,
}

/// Samples a link from a sub-probability vector; `None` takes the remainder.
fn pick(dist: &[f64; 3], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if p > 0.0 && u < acc {
            return Some(i);
        }
    }
    None
}

fn is_random(dist: &[f64; 3]) -> bool {
    let s: f64 = dist.iter().sum();
    let certain = dist.iter().filter(|&&p| p == 1.0).count() == 1 || s == 0.0;
    !certain
}

/// Applies the policy to the maximal feasible indices of one slot.
pub fn select_link<R: Rng + ?Sized>(
    indices: &RateTripletIndex,
    policy: &Policy,
    rates: &RateSet,
    rng: &mut R,
) -> SlotDecision {
    let mode = classify_mode(&policy.alpha, indices, rates);
    let dist = policy.coins.link_distribution(mode);
    let coin_toss_used = is_random(&dist);
    let u = if coin_toss_used { rng.random::<f64>() } else { 0.0 };
    let selected_link = pick(&dist, u);
    let rate = match selected_link {
        Some(i) => rates.rate(i, indices.as_array()[i]).clone(),
        None => Rational::zero(),
    };
    SlotDecision {
        mode,
        selected_link,
        rate,
        coin_toss_used,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Total slots, including warmup.
    pub slots: u64,
    pub seed: u64,
    /// Leading slots excluded from the averages; `None` means 1% of `slots`.
    pub warmup: Option<u64>,
    pub replication: u64,
}

impl SimConfig {
    pub fn new(slots: u64, seed: u64) -> Self {
        SimConfig {
            slots,
            seed,
            warmup: None,
            replication: 0,
        }
    }

    pub fn warmup_slots(&self) -> u64 {
        self.warmup.unwrap_or(self.slots / 100)
    }

    /// Fading and coin-toss streams of this replication.
    pub fn streams(&self) -> (ChaCha8Rng, ChaCha8Rng) {
        let mut fading = ChaCha8Rng::seed_from_u64(self.seed);
        fading.set_stream(2 * self.replication);
        let mut coins = ChaCha8Rng::seed_from_u64(self.seed);
        coins.set_stream(2 * self.replication + 1);
        (fading, coins)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub seed: u64,
    pub replication: u64,
    /// Slots that entered the averages.
    pub slots: u64,
    pub warmup: u64,
    pub tau1_hat: f64,
    /// Bits actually removed from the buffer per slot.
    pub tau2_hat: f64,
    /// Link-2 rate as scheduled, ignoring buffer underflow.
    pub tau2_ideal_hat: f64,
    pub tau3_hat: f64,
    /// `tau2_hat + tau3_hat`.
    pub tau_t_hat: f64,
    pub mode_counts: ModeMap<u64>,
    pub mode_freq: ModeMap<f64>,
    pub mean_occupancy: f64,
    pub final_occupancy: f64,
    /// Least-squares slope of the occupancy over the final half, bits per slot.
    pub occupancy_drift: f64,
    /// Link-2 slots in which the buffer held less than the scheduled rate.
    pub shortfall_slots: u64,
}

/// Streaming least-squares slope.
#[derive(Debug, Default, Clone, Copy)]
struct SlopeFit {
    n: f64,
    mean_t: f64,
    mean_y: f64,
    c_ty: f64,
    m_tt: f64,
}

impl SlopeFit {
    fn push(&mut self, t: f64, y: f64) {
        self.n += 1.0;
        let dt = t - self.mean_t;
        self.mean_t += dt / self.n;
        let dy = y - self.mean_y;
        self.mean_y += dy / self.n;
        self.c_ty += dt * (y - self.mean_y);
        self.m_tt += dt * (t - self.mean_t);
    }

    fn slope(&self) -> f64 {
        if self.m_tt > 0.0 {
            self.c_ty / self.m_tt
        } else {
            0.0
        }
    }
}

/// Rates expressed as integer multiples of `1 / denominator` bits.
struct RateUnits {
    denominator: f64,
    units: [Vec<u64>; 3],
}

fn rate_units(rates: &RateSet) -> Result<RateUnits> {
    let mut lcd = BigInt::one();
    for i in 0..3 {
        for r in rates.rates(i) {
            lcd = lcd.lcm(r.denom());
        }
    }
    let too_fine = || Error::InvalidParameter("rate denominators too large for simulation".into());
    let scale = Rational::from_integer(lcd.clone());
    let units: [Vec<u64>; 3] = [0, 1, 2].map(|i| {
        rates
            .rates(i)
            .iter()
            .map(|r| (r * &scale).to_integer().to_u64())
            .collect::<Option<Vec<u64>>>()
            .unwrap_or_default()
    });
    if units.iter().zip(0..3).any(|(u, i)| u.len() != rates.len(i)) {
        return Err(too_fine());
    }
    Ok(RateUnits {
        denominator: lcd.to_f64().ok_or_else(too_fine)?,
        units,
    })
}

/// Mode and link distribution for every triplet of the cube, precomputed at the policy weight.
struct PolicyTable {
    dims: [usize; 3],
    entries: Vec<(Mode, [f64; 3], bool)>,
}

impl PolicyTable {
    fn new(policy: &Policy, rates: &RateSet) -> Self {
        let dims = [rates.len(0), rates.len(1), rates.len(2)];
        let entries = rates
            .triplets(Scheme::RelayOnly)
            .map(|t| {
                let mode = classify_mode(&policy.alpha, &t, rates);
                let dist = policy.coins.link_distribution(mode);
                (mode, dist, is_random(&dist))
            })
            .collect();
        PolicyTable { dims, entries }
    }

    fn get(&self, t: &RateTripletIndex) -> &(Mode, [f64; 3], bool) {
        &self.entries[(t.k1 * self.dims[1] + t.k2) * self.dims[2] + t.k3]
    }
}

/// Runs the operating point's policy.
pub fn run_simulation(
    cfg: &SimConfig,
    stats: &LinkStats,
    rates: &RateSet,
    op: &OperatingPoint,
    scheme: Scheme,
) -> Result<SimReport> {
    run_policy(cfg, stats, rates, &op.policy(), scheme)
}

/// Runs an arbitrary policy, e.g. a deliberately unbalanced one.
pub fn run_policy(
    cfg: &SimConfig,
    stats: &LinkStats,
    rates: &RateSet,
    policy: &Policy,
    scheme: Scheme,
) -> Result<SimReport> {
    if cfg.slots == 0 {
        return Err(Error::InvalidArgument("slots must be at least 1".into()));
    }
    let warmup = cfg.warmup_slots();
    if warmup >= cfg.slots {
        return Err(Error::InvalidArgument(format!(
            "warmup {warmup} leaves no measured slots out of {}",
            cfg.slots
        )));
    }
    let units = rate_units(rates)?;
    let table = PolicyTable::new(policy, rates);
    let th = thresholds(rates);
    let (mut fading, mut coins) = cfg.streams();

    let measured = cfg.slots - warmup;
    let half_start = warmup + measured / 2;
    let mut buffer: u128 = 0;
    let mut sums = [0u128; 3];
    let mut ideal2: u128 = 0;
    let mut shortfall = 0u64;
    let mut mode_counts = ModeMap::<u64>::default();
    let mut occupancy_sum = 0f64;
    let mut fit = SlopeFit::default();

    for slot in 0..cfg.slots {
        let snr = stats.sample_snr_triplet(&mut fading);
        let k = feasible_indices(&snr, &th, scheme);
        let (mode, dist, random) = table.get(&k);
        let u = if *random { coins.random::<f64>() } else { 0.0 };
        let link = pick(dist, u);
        let counting = slot >= warmup;
        if let Some(i) = link {
            let r = units.units[i][k.as_array()[i]] as u128;
            match i {
                0 => {
                    buffer += r;
                    if counting {
                        sums[0] += r;
                    }
                }
                1 => {
                    let sent = r.min(buffer);
                    buffer -= sent;
                    if counting {
                        sums[1] += sent;
                        ideal2 += r;
                        if sent < r {
                            shortfall += 1;
                        }
                    }
                }
                _ => {
                    if counting {
                        sums[2] += r;
                    }
                }
            }
        }
        if counting {
            mode_counts[*mode] += 1;
            let occ = buffer as f64 / units.denominator;
            occupancy_sum += occ;
            if slot >= half_start {
                fit.push((slot - half_start) as f64, occ);
            }
        }
    }

    let n = measured as f64;
    let per_slot = |u: u128| u as f64 / units.denominator / n;
    let tau2 = per_slot(sums[1]);
    let tau3 = per_slot(sums[2]);
    Ok(SimReport {
        seed: cfg.seed,
        replication: cfg.replication,
        slots: measured,
        warmup,
        tau1_hat: per_slot(sums[0]),
        tau2_hat: tau2,
        tau2_ideal_hat: per_slot(ideal2),
        tau3_hat: tau3,
        tau_t_hat: tau2 + tau3,
        mode_freq: mode_counts.map(|&c| c as f64 / n),
        mode_counts,
        mean_occupancy: occupancy_sum / n,
        final_occupancy: buffer as f64 / units.denominator,
        occupancy_drift: fit.slope(),
        shortfall_slots: shortfall,
    })
}

/// Runs `count` replications `0..count` of `cfg` in parallel, in replication order.
pub fn run_replications(
    cfg: &SimConfig,
    count: u64,
    stats: &LinkStats,
    rates: &RateSet,
    policy: &Policy,
    scheme: Scheme,
) -> Result<Vec<SimReport>> {
    (0..count)
        .into_par_iter()
        .map(|r| {
            let c = SimConfig {
                replication: r,
                ..*cfg
            };
            run_policy(&c, stats, rates, policy, scheme)
        })
        .collect()
}

/// Slot-weighted pooling of replications. Drift and occupancy figures are
/// averaged across replications.
pub fn pool(reports: &[SimReport]) -> Option<SimReport> {
    let first = reports.first()?;
    let total: u64 = reports.iter().map(|r| r.slots).sum();
    let w = |f: fn(&SimReport) -> f64| {
        reports.iter().map(|r| f(r) * r.slots as f64).sum::<f64>() / total as f64
    };
    let avg = |f: fn(&SimReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
    let mut mode_counts = ModeMap::<u64>::default();
    for r in reports {
        for m in Mode::ALL {
            mode_counts[m] += r.mode_counts[m];
        }
    }
    let tau2 = w(|r| r.tau2_hat);
    let tau3 = w(|r| r.tau3_hat);
    Some(SimReport {
        seed: first.seed,
        replication: first.replication,
        slots: total,
        warmup: first.warmup,
        tau1_hat: w(|r| r.tau1_hat),
        tau2_hat: tau2,
        tau2_ideal_hat: w(|r| r.tau2_ideal_hat),
        tau3_hat: tau3,
        tau_t_hat: tau2 + tau3,
        mode_freq: mode_counts.map(|&c| c as f64 / total as f64),
        mode_counts,
        mean_occupancy: avg(|r| r.mean_occupancy),
        final_occupancy: avg(|r| r.final_occupancy),
        occupancy_drift: avg(|r| r.occupancy_drift),
        shortfall_slots: reports.iter().map(|r| r.shortfall_slots).sum(),
    })
}
