use std::f64::consts::FRAC_PI_2;

use lattice_core::family::{Domain3D, FamilyPoint};
use lattice_core::sweep::{classify, minimize_over_family_2d, minimize_over_family_3d, sweep, Dimension, Phase, SweepOptions};
use lattice_core::threshold::{threshold, ThresholdQuery};
use lattice_core::{minimal_vectors, Canonical, PotentialSpec};

fn lj() -> PotentialSpec {
    PotentialSpec::lennard_jones(6.0, 3.0, 1.0, 2.0)
}

fn t_of(p: &FamilyPoint) -> f64 {
    match p {
        FamilyPoint::D2(x) => x.t,
        FamilyPoint::D3(x) => x.t,
    }
}

#[test]
fn two_d_sweep_is_ordered_and_continuous() {
    let grid: Vec<f64> = (0..=40).map(|i| 0.70 + 0.01 * i as f64).collect();
    let pts: Vec<_> = sweep(&grid, &lj(), Dimension::Two, &SweepOptions::default())
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let rank = |p: Phase| match p {
        Phase::Square => 0,
        Phase::Rhombic2D => 1,
        Phase::Triangular => 2,
        other => panic!("3D label {other} in a 2D sweep"),
    };
    let lam0 = threshold(&ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 1.0, 2.0).unwrap(), 1e-8).unwrap().lambda_star;
    let lam1 = threshold(&ThresholdQuery::new(Canonical::A2, 6.0, 3.0, 1.0, 2.0).unwrap(), 1e-8).unwrap().lambda_star;
    for w in pts.windows(2) {
        assert!(rank(w[0].label) <= rank(w[1].label), "{} then {}", w[0].label, w[1].label);
        assert!(t_of(&w[1].params) <= t_of(&w[0].params) + 1e-9);
    }
    // λ ↦ min E is continuous across both transitions
    for lam in [lam0, lam1] {
        let a = minimize_over_family_2d(lam * (1.0 - 1e-7), &lj(), &SweepOptions::default()).unwrap();
        let b = minimize_over_family_2d(lam * (1.0 + 1e-7), &lj(), &SweepOptions::default()).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-5 * a.energy.abs().max(1.0), "{} vs {}", a.energy, b.energy);
    }
    for p in &pts {
        if p.lambda < lam0 * (1.0 - 1e-3) {
            assert_eq!(p.label, Phase::Square, "λ = {}", p.lambda);
            assert!((t_of(&p.params) - FRAC_PI_2).abs() < 1e-6);
        }
        if p.lambda > lam1 * (1.0 + 1e-3) {
            assert_eq!(p.label, Phase::Triangular, "λ = {}", p.lambda);
        }
    }
}

#[test]
fn three_d_minimisers_are_admissible_unit_lattices() {
    let opts = SweepOptions { random_seeds_3d: 24, ..SweepOptions::default() };
    let domain = Domain3D::full();
    for lam in [0.72, 0.85, 1.0] {
        let p = minimize_over_family_3d(lam, &lj(), &opts, None).unwrap();
        let FamilyPoint::D3(x) = p.params else { panic!("2D point from a 3D search") };
        assert!(domain.contains(&x.gram_coords()));
        let (l1, _) = minimal_vectors(&x.lattice().unwrap()).unwrap();
        assert!((l1 - 1.0).abs() < 1e-9, "λ₁ = {l1}");
        assert_eq!(classify(&p.params).unwrap(), p.label);
    }
}
