//! Exact enumeration of lattice vectors by squared length.
//!
//! Integer coordinates are bounded level by level from the Cholesky factor
//! of the Gram matrix (Fincke–Pohst), so every vector with `Q(m) ≤ R²` is
//! visited exactly once and in a deterministic order.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::lattice::{quadratic_form, Lattice};
use crate::special::unit_ball_volume;

/// Default cap on the number of enumerated vectors.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Relative tolerance that merges squared lengths into one shell.
pub const GROUPING_TOL: f64 = 1e-9;

/// One layer of the lattice: all integer vectors of (nearly) equal squared length.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub r2: f64,
    pub vectors: Vec<Vec<i64>>,
}

impl Shell {
    pub fn count(&self) -> usize {
        self.vectors.len()
    }
}

/// The shells of a lattice up to a squared-radius cutoff, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellDecomposition {
    pub cutoff: f64,
    pub shells: Vec<Shell>,
}

impl ShellDecomposition {
    pub fn total_vectors(&self) -> usize {
        self.shells.iter().map(Shell::count).sum()
    }

    /// (r², count) pairs.
    pub fn signature(&self) -> Vec<(f64, usize)> {
        self.shells.iter().map(|s| (s.r2, s.count())).collect()
    }
}

/// Covering-radius bound ½·√tr(A): every point of ℝ^d lies within this
/// distance of the lattice.
pub fn covering_radius_bound(gram: &DMatrix<f64>) -> f64 {
    0.5 * gram.trace().max(0.0).sqrt()
}

/// Upper estimate of the number of nonzero vectors with `Q ≤ r2`.
pub fn estimated_count(gram: &DMatrix<f64>, r2: f64) -> f64 {
    let d = gram.nrows();
    let covol = gram.determinant().max(0.0).sqrt();
    let r = r2.max(0.0).sqrt() + covering_radius_bound(gram);
    unit_ball_volume(d) * r.powi(d as i32) / covol
}

struct Enumerator {
    d: usize,
    /// r_ii² on the diagonal; strictly upper part holds r_ij / r_ii.
    diag: Vec<f64>,
    mu: Vec<Vec<f64>>,
}

impl Enumerator {
    fn new(gram: &DMatrix<f64>) -> Result<Self> {
        let d = gram.nrows();
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::InvalidParameter("Gram matrix is not positive definite".into()))?;
        let r = chol.l().transpose();
        let mut diag = vec![0.0; d];
        let mut mu = vec![vec![0.0; d]; d];
        for i in 0..d {
            diag[i] = r[(i, i)] * r[(i, i)];
            for j in (i + 1)..d {
                mu[i][j] = r[(i, j)] / r[(i, i)];
            }
        }
        Ok(Self { d, diag, mu })
    }

    fn run<F: FnMut(&[i64])>(&self, bound: f64, visit: &mut F) {
        let mut m = vec![0i64; self.d];
        self.level(self.d - 1, 0.0, bound, &mut m, visit);
    }

    fn level<F: FnMut(&[i64])>(&self, i: usize, used: f64, bound: f64, m: &mut [i64], visit: &mut F) {
        let center: f64 = -((i + 1)..self.d).map(|j| self.mu[i][j] * m[j] as f64).sum::<f64>();
        let room = (bound - used).max(0.0);
        let half = (room / self.diag[i]).sqrt();
        let lo = (center - half).ceil() as i64;
        let hi = (center + half).floor() as i64;
        for k in lo..=hi {
            m[i] = k;
            let t = k as f64 - center;
            let here = used + self.diag[i] * t * t;
            if here > bound {
                continue;
            }
            if i == 0 {
                if m.iter().any(|&x| x != 0) {
                    visit(m);
                }
            } else {
                self.level(i - 1, here, bound, m, visit);
            }
        }
        m[i] = 0;
    }
}

/// Visits every nonzero integer vector with `Q(m) ≤ r2` (Q computed
/// directly from the Gram matrix). Returns the number visited.
pub fn for_each_vector<F: FnMut(&[i64], f64)>(
    gram: &DMatrix<f64>,
    r2: f64,
    budget: usize,
    mut visit: F,
) -> Result<usize> {
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::InvalidParameter(format!("cutoff must be positive, got {r2}")));
    }
    let estimated = estimated_count(gram, r2);
    if estimated > budget as f64 {
        return Err(Error::CutoffTooLarge { estimated, budget });
    }
    let e = Enumerator::new(gram)?;
    let slack = r2 * (1.0 + 1e-10) + 1e-300;
    let mut n = 0usize;
    e.run(slack, &mut |m: &[i64]| {
        let q = quadratic_form(gram, m);
        if q <= r2 {
            n += 1;
            visit(m, q);
        }
    });
    Ok(n)
}

/// All nonzero vectors with `Q(m) ≤ r2`, with their squared lengths.
pub fn vectors_within(gram: &DMatrix<f64>, r2: f64, budget: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    let mut out = Vec::new();
    for_each_vector(gram, r2, budget, |m, q| out.push((m.to_vec(), q)))?;
    Ok(out)
}

fn group(mut found: Vec<(Vec<i64>, f64)>, rel_tol: f64) -> Vec<Shell> {
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut shells: Vec<Shell> = Vec::new();
    let mut start = f64::NAN;
    let mut sum = 0.0;
    for (m, q) in found {
        let same = shells
            .last()
            .is_some_and(|_| q - start < rel_tol * start.max(1.0));
        if same {
            let s = shells.last_mut().unwrap();
            s.vectors.push(m);
            sum += q;
            s.r2 = sum / s.vectors.len() as f64;
        } else {
            start = q;
            sum = q;
            shells.push(Shell { r2: q, vectors: vec![m] });
        }
    }
    for s in &mut shells {
        s.vectors.sort();
    }
    shells
}

/// Shell decomposition of `lattice` up to squared radius `r2`.
pub fn shells(lattice: &Lattice, r2: f64) -> Result<ShellDecomposition> {
    shells_with_budget(lattice.gram(), r2, DEFAULT_BUDGET)
}

pub fn shells_with_budget(gram: &DMatrix<f64>, r2: f64, budget: usize) -> Result<ShellDecomposition> {
    let found = vectors_within(gram, r2, budget)?;
    Ok(ShellDecomposition { cutoff: r2, shells: group(found, GROUPING_TOL) })
}

/// First `n` complete shells, grouped with relative tolerance `rel_tol`.
pub fn first_shells(gram: &DMatrix<f64>, n: usize, rel_tol: f64) -> Result<Vec<Shell>> {
    let min_diag = (0..gram.nrows()).map(|i| gram[(i, i)]).fold(f64::INFINITY, f64::min);
    let mut r2 = min_diag * (n as f64 + 1.0);
    loop {
        let found = vectors_within(gram, r2, DEFAULT_BUDGET)?;
        let shells = group(found, rel_tol);
        if shells.len() > n || (shells.len() == n && shells[n - 1].r2 * (1.0 + 2.0 * rel_tol) < r2) {
            return Ok(shells.into_iter().take(n).collect());
        }
        r2 *= 1.5;
    }
}

/// λ₁ and the set of minimal vectors (relative tolerance 1e-9 on Q),
/// sorted lexicographically.
pub fn minimal_vectors(lattice: &Lattice) -> Result<(f64, Vec<Vec<i64>>)> {
    minimal_vectors_of_gram(lattice.gram())
}

pub fn minimal_vectors_of_gram(gram: &DMatrix<f64>) -> Result<(f64, Vec<Vec<i64>>)> {
    let min_diag = (0..gram.nrows()).map(|i| gram[(i, i)]).fold(f64::INFINITY, f64::min);
    let found = vectors_within(gram, min_diag * (1.0 + 4.0 * GROUPING_TOL), DEFAULT_BUDGET)?;
    let l2 = found.iter().map(|(_, q)| *q).fold(f64::INFINITY, f64::min);
    let mut m: Vec<Vec<i64>> = found
        .into_iter()
        .filter(|(_, q)| *q <= l2 * (1.0 + GROUPING_TOL))
        .map(|(v, _)| v)
        .collect();
    m.sort();
    Ok((l2.sqrt(), m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{canonical, Canonical};
    use approx::assert_relative_eq;

    fn counts(sd: &ShellDecomposition) -> Vec<(f64, usize)> {
        sd.signature()
    }

    #[test]
    fn square_lattice_shells() {
        let z2 = canonical(Canonical::Sc(2), 1.0).unwrap();
        let sd = shells(&z2, 4.1).unwrap();
        let sig = counts(&sd);
        assert_eq!(sig.len(), 3);
        assert_eq!(sig.iter().map(|s| s.1).collect::<Vec<_>>(), vec![4, 4, 4]);
        for (got, want) in sig.iter().zip([1.0, 2.0, 4.0]) {
            assert_relative_eq!(got.0, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_shells_of_a2_and_d3() {
        let a2 = canonical(Canonical::A2, 1.0).unwrap();
        assert_eq!(counts(&shells(&a2, 1.1).unwrap()).iter().map(|s| s.1).collect::<Vec<_>>(), vec![6]);
        let d3 = canonical(Canonical::D3, 1.0).unwrap();
        assert_eq!(counts(&shells(&d3, 1.1).unwrap()).iter().map(|s| s.1).collect::<Vec<_>>(), vec![12]);
    }

    #[test]
    fn minimal_vector_examples() {
        let z3 = canonical(Canonical::Sc(3), 1.0).unwrap();
        let (l1, m) = minimal_vectors(&z3).unwrap();
        assert_relative_eq!(l1, 1.0, epsilon = 1e-14);
        assert_eq!(m.len(), 6);
        assert_eq!(m, Canonical::Sc(3).minimal_set());
        let bcc = canonical(Canonical::D3Star, 1.0).unwrap();
        let (l1, m) = minimal_vectors(&bcc).unwrap();
        assert_relative_eq!(l1, 1.0, epsilon = 1e-12);
        assert_eq!(m.len(), 8);
        let bcc2 = canonical(Canonical::D3Star, 2.0).unwrap();
        assert_relative_eq!(minimal_vectors(&bcc2).unwrap().0, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lexicographic_order_within_shell() {
        let z2 = canonical(Canonical::Sc(2), 1.0).unwrap();
        let sd = shells(&z2, 1.5).unwrap();
        assert_eq!(sd.shells[0].vectors, vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn budget_guard_trips() {
        let z3 = canonical(Canonical::Sc(3), 1.0).unwrap();
        let err = shells_with_budget(z3.gram(), 1e6, 1000).unwrap_err();
        assert!(matches!(err, Error::CutoffTooLarge { .. }));
        assert!(shells(&z3, -1.0).is_err());
    }

    #[test]
    fn first_shells_of_fcc() {
        let d3 = canonical(Canonical::D3, 1.0).unwrap();
        let s = first_shells(d3.gram(), 3, 1e-6).unwrap();
        let sig: Vec<usize> = s.iter().map(Shell::count).collect();
        assert_eq!(sig, vec![12, 6, 24]);
    }
}
