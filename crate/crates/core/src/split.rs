//! Epstein zeta values and their Gram-matrix gradients by the theta
//! splitting: the Mellin integral of θ_L is cut at `η = det(A)^{-1/d}`, the
//! part above η is summed in direct space and the part below η over the
//! dual lattice after Poisson summation. Both sums decay like e^{-x}, so a
//! few hundred vectors give full double precision for any s > d.
//!
//! With φ_a(x) = x^{-a} Γ(a, x), D = det A and Q* the dual form kᵀA⁻¹k:
//!
//! ```text
//! Γ(s/2) π^{-s/2} ζ(s) = η^{s/2} Σ' φ_{s/2}(πηQ(m))
//!                      + D^{-1/2} η^{(s-d)/2} Σ' φ_{(d-s)/2}(πQ*(k)/η)
//!                      + D^{-1/2} η^{(s-d)/2} 2/(s-d) − η^{s/2} 2/s
//! ```

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{symmetrize, Lattice};
use crate::potential::{mellin_prefactor, Accumulator, CountBound, EnergyResult, Radial, SumMethod};
use crate::shells::{for_each_vector, DEFAULT_BUDGET};
use crate::special::scaled_upper_gamma;
use std::f64::consts::PI;

const X_START: f64 = 30.0;
const X_STEP: f64 = 10.0;
const X_MAX: f64 = 300.0;

#[derive(Debug, Clone)]
struct Term {
    x: f64,
    /// upper triangle of v vᵀ, row-major
    outer: Vec<f64>,
}

/// Direct and dual vectors of one Gram matrix up to exponent argument `x_max`,
/// reusable for any number of exponents.
#[derive(Debug, Clone)]
pub struct SplitSums {
    d: usize,
    eta: f64,
    det: f64,
    inv: DMatrix<f64>,
    x_max: f64,
    direct: Vec<Term>,
    dual: Vec<Term>,
    /// Bounds on Σ e^{-x} over the omitted direct / dual vectors.
    direct_tail: f64,
    dual_tail: f64,
}

fn first_nonzero_positive(m: &[i64]) -> bool {
    m.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

fn outer_upper(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            out.push(v[i] * v[j]);
        }
    }
    out
}

fn from_upper(d: usize, u: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            m[(i, j)] = u[k];
            m[(j, i)] = u[k];
            k += 1;
        }
    }
    m
}

/// Bound κ with Γ(a, x) ≤ κ x^{a-1} e^{-x} for all x ≥ X.
fn gamma_tail_factor(a: f64, x: f64) -> f64 {
    if a <= 1.0 {
        1.0
    } else if x > a - 1.0 {
        1.0 / (1.0 - (a - 1.0) / x)
    } else {
        f64::INFINITY
    }
}

impl SplitSums {
    /// Collects all vectors with πηQ ≤ x_max and πQ*/η ≤ x_max.
    pub fn new(gram: &DMatrix<f64>, x_max: f64) -> Result<Self> {
        let d = gram.nrows();
        let det = gram.determinant();
        if !(det > 0.0) {
            return Err(Error::InvalidParameter("Gram matrix is not positive definite".into()));
        }
        let inv = symmetrize(
            gram.clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidParameter("Gram matrix is singular".into()))?,
        );
        let eta = det.powf(-1.0 / d as f64);

        let mut direct = Vec::new();
        let r2 = x_max / (PI * eta);
        let n_direct = for_each_vector(gram, r2, DEFAULT_BUDGET, |m, q| {
            if first_nonzero_positive(m) {
                let v: Vec<f64> = m.iter().map(|&x| x as f64).collect();
                direct.push(Term { x: PI * eta * q, outer: outer_upper(&v) });
            }
        })?;

        let mut dual = Vec::new();
        let r2_dual = x_max * eta / PI;
        let n_dual = for_each_vector(&inv, r2_dual, DEFAULT_BUDGET, |k, q| {
            if first_nonzero_positive(k) {
                let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| inv[(i, j)] * k[j] as f64).sum()).collect();
                dual.push(Term { x: PI * q / eta, outer: outer_upper(&w) });
            }
        })?;

        let direct_tail = CountBound::of_gram(gram).tail(Radial::Gaussian { beta: PI * eta }, r2.sqrt(), n_direct);
        let dual_tail = CountBound::of_gram(&inv).tail(Radial::Gaussian { beta: PI / eta }, r2_dual.sqrt(), n_dual);
        Ok(Self { d, eta, det, inv, x_max, direct, dual, direct_tail, dual_tail })
    }

    /// Smallest cut (in steps of 10 from 30) meeting `tol` for every exponent.
    pub fn for_tolerance(gram: &DMatrix<f64>, exponents: &[f64], tol: f64) -> Result<Self> {
        let d = gram.nrows() as f64;
        for &s in exponents {
            if !(s > d) {
                return Err(Error::NotSummable(format!("s = {s} must exceed the dimension {d}")));
            }
        }
        let mut x = X_START;
        loop {
            let sums = Self::new(gram, x)?;
            if exponents.iter().all(|&s| sums.tail_bound(s) <= tol) {
                return Ok(sums);
            }
            x += X_STEP;
            if x > X_MAX {
                return Err(Error::BudgetExceeded { tol });
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Direct-space squared-radius cutoff.
    pub fn cutoff(&self) -> f64 {
        self.x_max / (PI * self.eta)
    }

    fn weights(&self, s: f64) -> (f64, f64) {
        let d = self.d as f64;
        (self.eta.powf(s / 2.0), self.det.powf(-0.5) * self.eta.powf((s - d) / 2.0))
    }

    /// Rigorous bound on the error of [`Self::zeta`] from the omitted vectors.
    pub fn tail_bound(&self, s: f64) -> f64 {
        let d = self.d as f64;
        let (w1, w2) = self.weights(s);
        let x = self.x_max;
        let direct = w1 * gamma_tail_factor(s / 2.0, x) / x * self.direct_tail;
        let dual = w2 * gamma_tail_factor((d - s) / 2.0, x) / x * self.dual_tail;
        mellin_prefactor(s) * (direct + dual)
    }

    /// ζ(s).
    pub fn zeta(&self, s: f64) -> f64 {
        let d = self.d as f64;
        let (w1, w2) = self.weights(s);
        let mut a1 = Accumulator::default();
        for t in &self.direct {
            a1.add(scaled_upper_gamma(s / 2.0, t.x));
        }
        let mut a2 = Accumulator::default();
        for t in &self.dual {
            a2.add(scaled_upper_gamma((d - s) / 2.0, t.x));
        }
        let body = w1 * 2.0 * a1.total() + w2 * 2.0 * a2.total() + w2 * 2.0 / (s - d) - w1 * 2.0 / s;
        mellin_prefactor(s) * body
    }

    /// ζ(s) and ∂ζ/∂A_ij (entries treated as independent).
    pub fn zeta_with_gradient(&self, s: f64) -> (f64, DMatrix<f64>) {
        let d = self.d as f64;
        let n = self.d * (self.d + 1) / 2;
        let (w1, w2) = self.weights(s);
        let (a, b) = (s / 2.0, (d - s) / 2.0);

        let mut v1 = Accumulator::default();
        let mut g1 = vec![0.0; n];
        for t in &self.direct {
            v1.add(scaled_upper_gamma(a, t.x));
            let h = scaled_upper_gamma(a + 1.0, t.x);
            for (g, o) in g1.iter_mut().zip(&t.outer) {
                *g += h * o;
            }
        }
        let mut v2 = Accumulator::default();
        let mut g2 = vec![0.0; n];
        for t in &self.dual {
            v2.add(scaled_upper_gamma(b, t.x));
            let h = scaled_upper_gamma(b + 1.0, t.x);
            for (g, o) in g2.iter_mut().zip(&t.outer) {
                *g += h * o;
            }
        }
        let t1 = w1 * 2.0 * v1.total();
        let t2 = w2 * 2.0 * v2.total();
        let t3 = w2 * 2.0 / (s - d);
        let t4 = -w1 * 2.0 / s;
        let pre = mellin_prefactor(s);
        let value = pre * (t1 + t2 + t3 + t4);

        let dt1 = from_upper(self.d, &g1) * (-w1 * PI * self.eta * 2.0);
        let dt2 = from_upper(self.d, &g2) * (w2 * PI / self.eta * 2.0);
        let grad = (dt1 + dt2 - &self.inv * (0.5 * (t2 + t3))) * pre;
        (value, grad)
    }
}

/// ζ_L(s) by the theta splitting; `cutoff_used` is the direct-space cut.
pub fn epstein_zeta_split(lattice: &Lattice, s: f64, tol: f64) -> Result<EnergyResult> {
    let sums = SplitSums::for_tolerance(lattice.gram(), &[s], tol)?;
    Ok(EnergyResult {
        value: sums.zeta(s),
        tail_bound: sums.tail_bound(s),
        cutoff_used: sums.cutoff(),
        method: SumMethod::Split,
    })
}

/// ∂ζ_L(s)/∂A_ij by the theta splitting.
pub fn zeta_gram_gradient(gram: &DMatrix<f64>, s: f64, tol: f64) -> Result<(f64, DMatrix<f64>)> {
    Ok(SplitSums::for_tolerance(gram, &[s], tol)?.zeta_with_gradient(s))
}
