use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use lattice_core::family::FamilyPoint2D;
use lattice_core::sweep::{minimize_over_family_2d, Phase, SweepOptions};
use lattice_core::threshold::{threshold, threshold_scaling, Mode, ThresholdQuery};
use lattice_core::{canonical, epstein_zeta, Canonical, Lattice};

fn zeta(l: &Lattice, s: f64) -> f64 {
    epstein_zeta(l, s, 1e-13).unwrap().value
}

/// g(t) = ((a Δζ(2p)) / (b Δζ(2q)))^{1/(2(p−q))}, differences taken against
/// the reference, every sum evaluated afresh.
fn g_2d(t: f64, reference: &Lattice, p: f64, q: f64, a: f64, b: f64) -> f64 {
    let l = FamilyPoint2D::new(t).unwrap().lattice();
    let dp = zeta(&l, 2.0 * p) - zeta(reference, 2.0 * p);
    let dq = zeta(&l, 2.0 * q) - zeta(reference, 2.0 * q);
    (a * dp / (b * dq)).powf(1.0 / (2.0 * (p - q)))
}

#[test]
fn square_threshold_matches_a_plain_scan() {
    let q = ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 1.0, 2.0).unwrap();
    let r = threshold(&q, 1e-8).unwrap();
    assert_eq!(r.mode, Mode::Lambda0Inf);
    let z2 = canonical(Canonical::Sc(2), 1.0).unwrap();
    // g is monotone in t near the square end, so the infimum is approached
    // towards π/2; a scan that stops short of it bounds λ₀ from above
    let scan = (0..400)
        .map(|i| FRAC_PI_3 + (FRAC_PI_2 - FRAC_PI_3) * (i as f64 + 0.5) / 400.0)
        .filter(|&t| FRAC_PI_2 - t > 1e-3)
        .map(|t| g_2d(t, &z2, 6.0, 3.0, 1.0, 2.0))
        .fold(f64::INFINITY, f64::min);
    assert!(r.lambda_star <= scan + 1e-9, "{} vs scan {}", r.lambda_star, scan);
    assert!(scan - r.lambda_star < 1e-3, "{} vs scan {}", r.lambda_star, scan);
    assert!(r.bracket.0 <= r.lambda_star && r.lambda_star <= r.bracket.1);
}

#[test]
fn square_threshold_separates_the_phases() {
    let q = ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 1.0, 2.0).unwrap();
    let lam = threshold(&q, 1e-8).unwrap().lambda_star;
    let f = lattice_core::PotentialSpec::lennard_jones(6.0, 3.0, 1.0, 2.0);
    let opts = SweepOptions::default();
    let below = minimize_over_family_2d(lam * (1.0 - 1e-3), &f, &opts).unwrap();
    let above = minimize_over_family_2d(lam * (1.0 + 1e-3), &f, &opts).unwrap();
    assert_eq!(below.label, Phase::Square);
    assert_ne!(above.label, Phase::Square);
}

#[test]
fn triangular_threshold_sign_structure() {
    let q = ThresholdQuery::new(Canonical::A2, 6.0, 3.0, 1.0, 2.0).unwrap();
    let r = threshold(&q, 1e-8).unwrap();
    assert_eq!(r.mode, Mode::Lambda1Sup);
    let a2 = canonical(Canonical::A2, 1.0).unwrap();
    for i in 1..40 {
        let t = FRAC_PI_3 + (FRAC_PI_2 - FRAC_PI_3) * i as f64 / 40.0;
        assert!(g_2d(t, &a2, 6.0, 3.0, 1.0, 2.0) <= r.lambda_star + 1e-9);
    }
    let f = lattice_core::PotentialSpec::lennard_jones(6.0, 3.0, 1.0, 2.0);
    let opts = SweepOptions::default();
    let above = minimize_over_family_2d(r.lambda_star * (1.0 + 1e-3), &f, &opts).unwrap();
    assert_eq!(above.label, Phase::Triangular);
}

#[test]
fn thresholds_scale_with_the_coefficients() {
    let base = threshold(&ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 1.0, 2.0).unwrap(), 1e-9).unwrap();
    let moved = threshold(&ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 3.0, 1.0).unwrap(), 1e-9).unwrap();
    let k = threshold_scaling(6.0, 3.0, (1.0, 2.0), (3.0, 1.0)).unwrap();
    assert!((k - 6f64.powf(1.0 / 6.0)).abs() < 1e-14);
    assert!((moved.lambda_star - k * base.lambda_star).abs() < 1e-7 * moved.lambda_star);
}

#[test]
fn reference_limit_is_the_limit_of_g() {
    let q = ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 1.0, 2.0).unwrap();
    let r = threshold(&q, 1e-8).unwrap();
    let z2 = canonical(Canonical::Sc(2), 1.0).unwrap();
    // g is smooth in t² near the reference, so g(π/2 − h) = L + O(h²)
    let near = g_2d(FRAC_PI_2 - 1e-2, &z2, 6.0, 3.0, 1.0, 2.0);
    let nearer = g_2d(FRAC_PI_2 - 5e-3, &z2, 6.0, 3.0, 1.0, 2.0);
    let extrapolated = (4.0 * nearer - near) / 3.0;
    assert!((extrapolated - r.reference_limit).abs() < 1e-6, "{extrapolated} vs {}", r.reference_limit);
}
