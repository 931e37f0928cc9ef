#![allow(dead_code)]

use crn_relay::{
    derive_stats, parse_rational, LinkStats, Mode, PowerConstraints, RateSet, Scheme, SystemGeometry,
};
use rand::Rng;

pub fn table3_geometry(d2p: f64) -> SystemGeometry {
    SystemGeometry {
        d1: 1.0,
        d2: 1.0,
        d3: 2.0,
        d1p: 3.0,
        d2p,
        alpha_pl: 3.0,
    }
}

pub fn table3_stats(d2p: f64) -> LinkStats {
    derive_stats(&table3_geometry(d2p), &PowerConstraints::from_db(None, -5.0)).unwrap()
}

pub fn table3_rates() -> RateSet {
    RateSet::from_strs(&["0", "2"], &["0", "2"]).unwrap()
}

/// One printed row: mode probabilities in `Mode::ALL` order, then tau_t / 2.
pub struct Row {
    pub d2p: f64,
    pub scheme: Scheme,
    pub w: usize,
    pub probs: [f64; 8],
    pub half_tau: f64,
}

const fn row(d2p: f64, scheme: Scheme, w: usize, probs: [f64; 8], half_tau: f64) -> Row {
    Row {
        d2p,
        scheme,
        w,
        probs,
        half_tau,
    }
}

// Columns: 1, 2, 3, ~1, ~2, ~3, ~N, N.
pub const TABLE3: [Row; 12] = [
    row(1.5, Scheme::RelayOnly, 0, [0.0, 0.1935, 0.1935, 0.0689, 0.0, 0.0, 0.0, 0.5440], 0.4559),
    row(1.5, Scheme::RelayOnly, 1, [0.3686, 0.0624, 0.2624, 0.0, 0.0, 0.1311, 0.0, 0.1754], 0.5435),
    row(1.5, Scheme::RelayOnly, 2, [0.4997, 0.0, 0.0221, 0.0, 0.2403, 0.0, 0.0, 0.2379], 0.7621),
    row(1.5, Scheme::Alamouti, 0, [0.0, 0.2689, 0.0, 0.2624, 0.0, 0.0, 0.0, 0.4687], 0.5313),
    row(1.5, Scheme::Alamouti, 1, [0.3105, 0.0797, 0.2624, 0.0, 0.0, 0.1892, 0.0, 0.1582], 0.5521),
    row(1.5, Scheme::Alamouti, 2, [0.4997, 0.0, 0.0221, 0.0, 0.2403, 0.0, 0.0, 0.2379], 0.7621),
    row(3.0, Scheme::RelayOnly, 0, [0.0, 0.5458, 0.0682, 0.1942, 0.0, 0.0, 0.0, 0.1918], 0.8082),
    row(3.0, Scheme::RelayOnly, 1, [0.1299, 0.1760, 0.2624, 0.0, 0.0, 0.3698, 0.0, 0.0618], 0.6003),
    row(3.0, Scheme::RelayOnly, 2, [0.4997, 0.0, 0.0221, 0.0, 0.2403, 0.0, 0.0, 0.2379], 0.7621),
    row(3.0, Scheme::Alamouti, 0, [0.0, 0.5936, 0.0, 0.2624, 0.0, 0.0, 0.0, 0.1440], 0.8560),
    row(3.0, Scheme::Alamouti, 1, [0.0939, 0.1878, 0.2624, 0.0, 0.0, 0.4058, 0.0, 0.0501], 0.6062),
    row(3.0, Scheme::Alamouti, 2, [0.4997, 0.0, 0.0221, 0.0, 0.2403, 0.0, 0.0, 0.2379], 0.7621),
];

pub fn mode_name(i: usize) -> &'static str {
    Mode::ALL[i].label()
}

const SCALES: [&str; 6] = ["1", "1.75", "0.5", "2.25", "3/4", "1.2"];
const STEPS: [&str; 6] = ["1/4", "1/2", "0.75", "1", "1.25", "5/3"];

fn random_ladder<R: Rng>(rng: &mut R, levels: usize) -> Vec<crn_relay::Rational> {
    let mut acc = parse_rational("0").unwrap();
    let mut out = vec![acc.clone()];
    for _ in 0..levels {
        acc += parse_rational(STEPS[rng.random_range(0..STEPS.len())]).unwrap();
        out.push(acc.clone());
    }
    out
}

/// A rate set with `K <= 4`: uniform ladders with decimal scales or random
/// ladders; link 2 differs from link 1 only when `identical` is false.
pub fn random_rates<R: Rng>(rng: &mut R, identical: bool) -> RateSet {
    let k1 = rng.random_range(1..=4);
    if rng.random_bool(0.5) {
        let s = parse_rational(SCALES[rng.random_range(0..SCALES.len())]).unwrap();
        let r = RateSet::uniform(k1, s.clone()).unwrap();
        if identical {
            return r;
        }
        let k2 = rng.random_range(1..=4);
        let r1 = r.rates(0).to_vec();
        let r2 = RateSet::uniform(k2, s).unwrap().rates(1).to_vec();
        return RateSet::new(r1, r2).unwrap();
    }
    let r1 = random_ladder(rng, k1);
    let r2 = if identical {
        r1.clone()
    } else {
        let k2 = rng.random_range(1..=4);
        random_ladder(rng, k2)
    };
    RateSet::new(r1, r2).unwrap()
}

pub fn random_geometry<R: Rng>(rng: &mut R) -> SystemGeometry {
    let mut d = || rng.random_range(0.5..3.0);
    SystemGeometry {
        d1: d(),
        d2: d(),
        d3: d(),
        d1p: d(),
        d2p: d(),
        alpha_pl: 3.0,
    }
}

pub fn random_stats<R: Rng>(rng: &mut R) -> LinkStats {
    let geom = random_geometry(rng);
    let gamma_p_db = rng.random_range(-10.0..10.0);
    let gamma_max_db = if rng.random_bool(0.5) {
        None
    } else {
        Some(rng.random_range(0.0..20.0))
    };
    derive_stats(&geom, &PowerConstraints::from_db(gamma_max_db, gamma_p_db)).unwrap()
}

/// Statistics, a rate set valid for `scheme`, and the scheme.
pub fn random_config<R: Rng>(rng: &mut R) -> (LinkStats, RateSet, Scheme) {
    let scheme = if rng.random_bool(0.5) { Scheme::RelayOnly } else { Scheme::Alamouti };
    let identical = scheme == Scheme::Alamouti || rng.random_bool(0.5);
    let stats = random_stats(rng);
    (stats, random_rates(rng, identical), scheme)
}
