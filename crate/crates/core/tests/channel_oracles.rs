mod common;

use common::{random_geometry, table3_stats};
use crn_relay::validate::{
    gamma2_pdf_mass, mc_joint_ccdf, mc_joint_ccdf_grid, sample_inverse_snr, McEstimate,
};
use crn_relay::{derive_stats, LinkStats, PowerConstraints, Scheme, SystemGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: u64 = 1_000_000;

fn ptp_stats() -> LinkStats {
    derive_stats(
        &SystemGeometry {
            d1: 1.0,
            d2: 1.3,
            d3: 1.8,
            d1p: 1.5,
            d2p: 2.0,
            alpha_pl: 3.0,
        },
        &PowerConstraints::from_db(Some(6.0), 3.0),
    )
    .unwrap()
}

#[test]
fn peak_violation_frequency_matches_p() {
    let s = ptp_stats();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut hits = [0u64; 3];
    for _ in 0..N {
        let f = s.sample_fades(&mut rng);
        for (i, h) in hits.iter_mut().enumerate() {
            if f.peak_violates(&s, i) {
                *h += 1;
            }
        }
    }
    for (i, &h) in hits.iter().enumerate() {
        let e = McEstimate::from_counts(h, N);
        assert!(e.within_sigma(s.p[i], 3.0), "link {i}: {} vs {}", e.estimate, s.p[i]);
    }
    // link 3 reuses the source's interference channel
    assert_eq!(hits[0], hits[2]);
}

#[test]
fn gamma2_ccdf_matches_sampling() {
    for s in [table3_stats(1.5), ptp_stats()] {
        let pts: Vec<[f64; 3]> = [0.5, 3.0, 10.0].iter().map(|&y| [0.0, y, 0.0]).collect();
        let est = mc_joint_ccdf_grid(&s, &pts, Scheme::RelayOnly, N, 22).unwrap();
        for (p, e) in pts.iter().zip(est) {
            let c = s.ccdf_gamma2(p[1]).unwrap();
            assert!(e.within_sigma(c, 3.0), "y={}: {} vs {c}", p[1], e.estimate);
        }
    }
}

#[test]
fn inverse_snr_route_agrees() {
    let s = ptp_stats();
    let levels = [0.3, 1.0, 4.0];
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut counts = [[0u64; 3]; 3];
    for _ in 0..N {
        let t = sample_inverse_snr(&s, &mut rng).as_array();
        for (i, c) in counts.iter_mut().enumerate() {
            for (j, &y) in levels.iter().enumerate() {
                if t[i] >= y {
                    c[j] += 1;
                }
            }
        }
    }
    for (j, &y) in levels.iter().enumerate() {
        let direct = [
            s.joint_ccdf_13(y, 0.0).unwrap(),
            s.ccdf_gamma2(y).unwrap(),
            s.joint_ccdf_13(0.0, y).unwrap(),
        ];
        for i in 0..3 {
            let e = McEstimate::from_counts(counts[i][j], N);
            assert!(e.within_sigma(direct[i], 3.0), "link {i} y={y}: {} vs {}", e.estimate, direct[i]);
        }
    }
}

#[test]
fn scheme1_matches_sampling_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let s = ptp_stats();
    let pts: Vec<[f64; 3]> = (0..20)
        .map(|_| [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)])
        .collect();
    let est = mc_joint_ccdf_grid(&s, &pts, Scheme::RelayOnly, N, 25).unwrap();
    for (y, e) in pts.iter().zip(est) {
        let c = s.joint_ccdf_scheme1(y[0], y[1], y[2]).unwrap();
        assert!(e.within_sigma(c, 3.0), "{y:?}: {} vs {c}", e.estimate);
    }
}

fn scheme2_random_sets(draws: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for i in 0..50 {
        let geom = random_geometry(&mut rng);
        let gamma_p_db = rng.random_range(-10.0..10.0);
        let s = derive_stats(&geom, &PowerConstraints::from_db(None, gamma_p_db)).unwrap();
        let y = [rng.random_range(0.0..5.0), rng.random_range(0.0..10.0), rng.random_range(0.0..5.0)];
        let e = mc_joint_ccdf(&s, y, Scheme::Alamouti, draws, 1000 + i).unwrap();
        let q = s.joint_ccdf_scheme2(y[0], y[1], y[2]).unwrap();
        assert!(e.within_sigma(q, 3.0), "set {i} {y:?}: MC {} vs {q}", e.estimate);
    }
}

#[test]
fn scheme2_matches_sampling_on_random_pip_sets() {
    scheme2_random_sets(N);
}

/// Full-size variant (10^7 draws per set); run with `--ignored`.
#[test]
#[ignore]
fn scheme2_matches_sampling_on_random_pip_sets_full() {
    scheme2_random_sets(10_000_000);
}

#[test]
fn scheme2_ptp_regime_matches_sampling() {
    let s = ptp_stats();
    let levels = [0.0, 0.7, 2.5, 6.0];
    let mut pts = Vec::new();
    for &a in &levels {
        for &b in &levels {
            for &c in &levels {
                pts.push([a, b, c]);
            }
        }
    }
    let est = mc_joint_ccdf_grid(&s, &pts, Scheme::Alamouti, N, 27).unwrap();
    for (y, e) in pts.iter().zip(est) {
        let q = s.joint_ccdf_scheme2(y[0], y[1], y[2]).unwrap();
        assert!(e.within_sigma(q, 3.0), "{y:?}: MC {} vs {q}", e.estimate);
    }
}

#[test]
fn pdf_normalizes_in_both_regimes() {
    let r = gamma2_pdf_mass(&ptp_stats(), 1e-11).unwrap();
    assert!((r.value - 1.0).abs() < 1e-8, "{r:?}");
    // heavy-tailed interference-only density: truncated mass plus tail bound is one
    let s = table3_stats(1.5);
    let r = gamma2_pdf_mass(&s, 1e-11).unwrap();
    assert!((r.value + s.ccdf_gamma2(50.0 * s.mu[1]).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn pip_closed_form_collapses_when_y2_at_most_y3() {
    let s = table3_stats(1.5);
    for &(y1, y2, y3) in &[(0.0, 0.0, 0.0), (1.0, 0.5, 3.0), (2.0, 3.0, 3.0), (0.4, 0.0, 10.0)] {
        let v = s.joint_ccdf_scheme2_pip(y1, y2, y3).unwrap();
        let expect = 1.0 / (1.0 + y1 / s.mu[0] + y3 / s.mu[2]);
        assert!((v - expect).abs() < 1e-14, "({y1},{y2},{y3})");
    }
}

#[test]
fn pip_closed_form_conformance_verdict() {
    // The printed closed form is kept for comparison only; it disagrees with
    // the definition wherever the integral term is active.
    let s = table3_stats(1.5);
    let q = s.joint_ccdf_scheme2(0.0, 0.5, 0.0).unwrap();
    let closed = s.joint_ccdf_scheme2_pip(0.0, 0.5, 0.0).unwrap();
    assert!((closed - q).abs() > 0.1, "closed {closed} vs quadrature {q}");
    // the definition at y1 = y3 = 0 is the CCDF of gamma_2 + gamma_3
    let e = mc_joint_ccdf(&s, [0.0, 0.5, 0.0], Scheme::Alamouti, N, 28).unwrap();
    assert!(e.within_sigma(q, 3.0));
    assert!(!e.within_sigma(closed, 3.0));
}
