use lattice_core::shells::{minimal_vectors_of_gram, shells_with_budget, vectors_within, DEFAULT_BUDGET};
use lattice_core::{minimal_vectors, shells, Lattice};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Diagonally dominant Gram matrix with off-diagonal entries in [−1, 1].
fn gram(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    let n_off = d * (d - 1) / 2;
    (prop::collection::vec(-1.0f64..1.0, n_off), prop::collection::vec(0.1f64..1.5, d)).prop_map(move |(off, extra)| {
        let mut g = DMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            for j in i + 1..d {
                g[(i, j)] = off[k];
                g[(j, i)] = off[k];
                k += 1;
            }
        }
        for i in 0..d {
            let row: f64 = (0..d).filter(|&j| j != i).map(|j| g[(i, j)].abs()).sum();
            g[(i, i)] = row + extra[i];
        }
        g
    })
}

fn any_gram() -> impl Strategy<Value = DMatrix<f64>> {
    prop_oneof![gram(2), gram(3)]
}

/// Every integer vector with Q(m) ≤ r2, by scanning the box |m_i| ≤ K with
/// K from the smallest eigenvalue.
fn brute_force(g: &DMatrix<f64>, r2: f64) -> Vec<(Vec<i64>, f64)> {
    let d = g.nrows();
    let mu = g.clone().symmetric_eigen().eigenvalues.min();
    let k = (r2 / mu).sqrt().floor() as i64;
    let mut out = Vec::new();
    let mut m = vec![-k; d];
    loop {
        if m.iter().any(|&x| x != 0) {
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += g[(i, j)] * (m[i] * m[j]) as f64;
                }
            }
            if q <= r2 {
                out.push((m.clone(), q));
            }
        }
        let mut i = 0;
        loop {
            if i == d {
                out.sort_by(|a, b| a.0.cmp(&b.0));
                return out;
            }
            m[i] += 1;
            if m[i] <= k {
                break;
            }
            m[i] = -k;
            i += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_box_scan(g in any_gram(), r2 in 0.5f64..6.0) {
        let mut found = vectors_within(&g, r2, DEFAULT_BUDGET).unwrap();
        found.sort_by(|a, b| a.0.cmp(&b.0));
        let brute = brute_force(&g, r2);
        // vectors sitting on the sphere within rounding may go either way
        let strict = |v: &[(Vec<i64>, f64)]| -> Vec<Vec<i64>> {
            v.iter().filter(|(_, q)| (q - r2).abs() > 1e-9 * r2).map(|(m, _)| m.clone()).collect()
        };
        prop_assert_eq!(strict(&found), strict(&brute));
    }

    #[test]
    fn shells_are_even_and_start_with_minimal_vectors(g in any_gram(), r2 in 0.5f64..6.0) {
        let l1sq = minimal_vectors_of_gram(&g).unwrap().0.powi(2);
        let dec = shells_with_budget(&g, r2.max(l1sq * 1.01), DEFAULT_BUDGET).unwrap();
        for s in &dec.shells {
            prop_assert_eq!(s.count() % 2, 0);
        }
        let l = Lattice::from_gram(g.clone()).unwrap();
        let (_, m) = minimal_vectors(&l).unwrap();
        prop_assert_eq!(dec.shells[0].count(), m.len());
        prop_assert!((dec.shells[0].r2 - l1sq).abs() <= 1e-9 * l1sq.max(1.0));
    }

    #[test]
    fn kissing_number_cap(g in any_gram()) {
        let (_, m) = minimal_vectors_of_gram(&g).unwrap();
        let cap = if g.nrows() == 2 { 6 } else { 12 };
        prop_assert!(m.len() <= cap, "{} minimal vectors", m.len());
    }

    #[test]
    fn scaling_keeps_integer_vectors(g in any_gram(), r2 in 0.5f64..5.0, lambda in 0.3f64..3.0) {
        let l = Lattice::from_gram(g).unwrap();
        let a = shells(&l, r2).unwrap();
        let b = shells(&l.scaled(lambda), r2 * lambda * lambda).unwrap();
        prop_assert_eq!(a.shells.len(), b.shells.len());
        for (x, y) in a.shells.iter().zip(&b.shells) {
            prop_assert_eq!(&x.vectors, &y.vectors);
            prop_assert!((x.r2 * lambda * lambda - y.r2).abs() <= 1e-12 * y.r2.max(1.0));
        }
    }
}
