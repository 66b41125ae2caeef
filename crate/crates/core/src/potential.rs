//! Interaction potentials and direct lattice summation with rigorous
//! truncation bounds.
//!
//! Potentials are written as functions of the squared distance `r = |p|²`,
//! so `E_f[L] = Σ_{p≠0} f(|p|²)`.
//!
//! Tails are bounded by summation by parts against the point count
//! `N(r) ≤ ω_d (r + μ)^d / covol`, where `μ = ½√tr(A)` bounds the covering
//! radius, using the exact count inside the cutoff.

use nalgebra::DMatrix;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::shells::{covering_radius_bound, estimated_count, for_each_vector, DEFAULT_BUDGET};
use crate::special::{gamma_fn, unit_ball_volume, upper_gamma};
use crate::split;

/// Above this many direct-space vectors `epstein_zeta` switches to the
/// theta splitting.
pub const DIRECT_ZETA_LIMIT: f64 = 1e6;

/// A pair potential as a function of squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    /// `e^{-παr}`
    Gaussian { alpha: f64 },
    /// `r^{-s/2}`, i.e. `|p|^{-s}`
    InversePower { s: f64 },
    /// `a r^{-p} - b r^{-q}`
    LennardJones { p: f64, q: f64, a: f64, b: f64 },
}

impl PotentialSpec {
    pub fn lennard_jones(p: f64, q: f64, a: f64, b: f64) -> Self {
        PotentialSpec::LennardJones { p, q, a, b }
    }

    /// Checks parameters and summability in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match *self {
            PotentialSpec::Gaussian { alpha } => {
                finite(alpha, "alpha")?;
                if alpha <= 0.0 {
                    return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
                }
            }
            PotentialSpec::InversePower { s } => {
                finite(s, "s")?;
                if s <= d as f64 {
                    return Err(Error::NotSummable(format!("s = {s} must exceed the dimension {d}")));
                }
            }
            PotentialSpec::LennardJones { p, q, a, b } => {
                for (x, n) in [(p, "p"), (q, "q"), (a, "a"), (b, "b")] {
                    finite(x, n)?;
                }
                if a <= 0.0 || b <= 0.0 {
                    return Err(Error::InvalidParameter(format!("a and b must be positive, got a = {a}, b = {b}")));
                }
                if p <= q {
                    return Err(Error::InvalidParameter(format!("need p > q, got p = {p}, q = {q}")));
                }
                if q <= d as f64 / 2.0 {
                    return Err(Error::NotSummable(format!("q = {q} must exceed d/2 = {}", d as f64 / 2.0)));
                }
            }
        }
        Ok(())
    }

    /// f(r).
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Gaussian { alpha } => (-std::f64::consts::PI * alpha * r).exp(),
            PotentialSpec::InversePower { s } => r.powf(-s / 2.0),
            PotentialSpec::LennardJones { p, q, a, b } => a * r.powf(-p) - b * r.powf(-q),
        }
    }

    /// f′(r).
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Gaussian { alpha } => {
                let k = std::f64::consts::PI * alpha;
                -k * (-k * r).exp()
            }
            PotentialSpec::InversePower { s } => -(s / 2.0) * r.powf(-s / 2.0 - 1.0),
            PotentialSpec::LennardJones { p, q, a, b } => -p * a * r.powf(-p - 1.0) + q * b * r.powf(-q - 1.0),
        }
    }

    /// Terms of the form `coef·λ^{-s}·ζ_L(s)` making up the energy of λL,
    /// or `None` for the Gaussian.
    pub fn power_terms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            PotentialSpec::Gaussian { .. } => None,
            PotentialSpec::InversePower { s } => Some(vec![(1.0, s)]),
            PotentialSpec::LennardJones { p, q, a, b } => Some(vec![(a, 2.0 * p), (-b, 2.0 * q)]),
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Gaussian { alpha } => write!(f, "gauss:{alpha}"),
            PotentialSpec::InversePower { s } => write!(f, "power:{s}"),
            PotentialSpec::LennardJones { p, q, a, b } => write!(f, "lj:{p},{q},{a},{b}"),
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    /// `lj:p,q,a,b`, `gauss:alpha` or `power:s`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "cannot parse potential {s:?} (expected lj:p,q,a,b, gauss:alpha or power:s)"
            ))
        };
        let (tag, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (tag.trim().to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("lj", &[p, q, a, b]) => Ok(PotentialSpec::LennardJones { p, q, a, b }),
            ("gauss" | "gaussian", &[alpha]) => Ok(PotentialSpec::Gaussian { alpha }),
            ("power" | "inverse-power", &[s]) => Ok(PotentialSpec::InversePower { s }),
            _ => Err(bad()),
        }
    }
}

/// How a lattice sum was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    Direct,
    Split,
}

/// A truncated lattice sum with a rigorous bound on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyResult {
    pub value: f64,
    pub tail_bound: f64,
    /// Squared radius of the last enumerated shell bound (direct space).
    pub cutoff_used: f64,
    pub method: SumMethod,
}

/// Radial profile g(ρ) of a summand as a function of the distance ρ.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Radial {
    /// e^{-βρ²}
    Gaussian { beta: f64 },
    /// ρ^{-s}
    Power { s: f64 },
}

impl Radial {
    fn at(&self, rho: f64) -> f64 {
        match *self {
            Radial::Gaussian { beta } => (-beta * rho * rho).exp(),
            Radial::Power { s } => rho.powf(-s),
        }
    }
}

/// Geometry needed by the tail bounds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CountBound {
    d: usize,
    mu: f64,
    covol: f64,
}

impl CountBound {
    pub(crate) fn of_gram(gram: &DMatrix<f64>) -> Self {
        Self {
            d: gram.nrows(),
            mu: covering_radius_bound(gram),
            covol: gram.determinant().max(0.0).sqrt(),
        }
    }

    /// Lower bound on the number of lattice points (origin included) with |p| ≤ r.
    fn lower(&self, r: f64) -> f64 {
        unit_ball_volume(self.d) * (r - self.mu).max(0.0).powi(self.d as i32) / self.covol
    }

    /// ∫_R^∞ N_up(r)·(−g′(r)) dr with N_up(r) = ω_d (r+μ)^d / covol.
    fn tail_integral(&self, g: Radial, r: f64) -> f64 {
        let d = self.d;
        let w = unit_ball_volume(d) / self.covol;
        let mut total = 0.0;
        for k in 0..=d {
            let c = binomial(d, k) * self.mu.powi((d - k) as i32);
            let part = match g {
                Radial::Power { s } => s * r.powf(k as f64 - s) / (s - k as f64),
                Radial::Gaussian { beta } => {
                    let a = (k as f64 + 2.0) / 2.0;
                    let x = beta * r * r;
                    if x > 700.0 {
                        0.0
                    } else {
                        beta * beta.powf(-a) * upper_gamma(a, x)
                    }
                }
            };
            total += c * part;
        }
        w * total
    }

    /// Rigorous bound on Σ_{|p|>R} g(|p|) given the exact number of
    /// nonzero points with |p| ≤ R.
    pub(crate) fn tail(&self, g: Radial, r: f64, inside_nonzero: usize) -> f64 {
        let integral = self.tail_integral(g, r);
        let boundary = g.at(r) * (inside_nonzero as f64 + 1.0);
        (integral - boundary).max(0.0) + 1e-14 * (integral + boundary)
    }

    /// Same bound with the count replaced by its geometric lower estimate.
    fn predicted_tail(&self, g: Radial, r: f64) -> f64 {
        let integral = self.tail_integral(g, r);
        let boundary = g.at(r) * self.lower(r).max(1.0);
        (integral - boundary).max(0.0) + 1e-14 * (integral + boundary)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Smallest radius (up to bisection accuracy) whose predicted tail is ≤ `target`.
fn choose_radius(gram: &DMatrix<f64>, g: Radial, target: f64, budget: usize, tol: f64) -> Result<f64> {
    let cb = CountBound::of_gram(gram);
    let min_diag = (0..gram.nrows()).map(|i| gram[(i, i)]).fold(f64::INFINITY, f64::min);
    let mut hi = min_diag.sqrt();
    while cb.predicted_tail(g, hi) > target {
        hi *= 2.0;
        if estimated_count(gram, hi * hi) > 4.0 * budget as f64 {
            return Err(Error::BudgetExceeded { tol });
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if cb.predicted_tail(g, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if estimated_count(gram, hi * hi) > budget as f64 {
        return Err(Error::BudgetExceeded { tol });
    }
    Ok(hi)
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Σ_{p≠0} g(|p|) by direct enumeration to tail bound ≤ tol.
pub(crate) fn direct_sum(gram: &DMatrix<f64>, g: Radial, tol: f64, budget: usize) -> Result<EnergyResult> {
    let r = choose_radius(gram, g, 0.5 * tol, budget, tol)?;
    let r2 = r * r;
    let mut acc = Accumulator::default();
    let n = for_each_vector(gram, r2, budget, |_, q| acc.add(g.at(q.sqrt())))
        .map_err(|e| match e {
            Error::CutoffTooLarge { .. } => Error::BudgetExceeded { tol },
            other => other,
        })?;
    let tail_bound = CountBound::of_gram(gram).tail(g, r, n);
    if tail_bound > tol {
        return Err(Error::BudgetExceeded { tol });
    }
    Ok(EnergyResult { value: acc.total(), tail_bound, cutoff_used: r2, method: SumMethod::Direct })
}

/// Squared radius beyond which the Gaussian sum Σ e^{-πα|p|²} has tail ≤ tol.
pub(crate) fn gaussian_cutoff(gram: &DMatrix<f64>, alpha: f64, tol: f64) -> Result<f64> {
    let g = Radial::Gaussian { beta: std::f64::consts::PI * alpha };
    choose_radius(gram, g, tol, DEFAULT_BUDGET, tol).map(|r| r * r)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")))
    }
}

/// θ_L(α) = Σ_{p∈L} e^{-πα|p|²}, origin term included.
pub fn theta(lattice: &Lattice, alpha: f64, tol: f64) -> Result<EnergyResult> {
    PotentialSpec::Gaussian { alpha }.validate(lattice.dim())?;
    check_tol(tol)?;
    let beta = std::f64::consts::PI * alpha;
    let mut r = direct_sum(lattice.gram(), Radial::Gaussian { beta }, tol, DEFAULT_BUDGET)?;
    r.value += 1.0;
    Ok(r)
}

/// ζ_L(s) by direct summation with the integral-comparison tail bound.
pub fn epstein_zeta_direct(lattice: &Lattice, s: f64, tol: f64) -> Result<EnergyResult> {
    PotentialSpec::InversePower { s }.validate(lattice.dim())?;
    check_tol(tol)?;
    direct_sum(lattice.gram(), Radial::Power { s }, tol, DEFAULT_BUDGET)
}

/// ζ_L(s) = Σ_{p≠0} |p|^{-s}. Direct summation when the required cutoff is
/// small, otherwise the theta splitting.
pub fn epstein_zeta(lattice: &Lattice, s: f64, tol: f64) -> Result<EnergyResult> {
    PotentialSpec::InversePower { s }.validate(lattice.dim())?;
    check_tol(tol)?;
    let g = Radial::Power { s };
    let gram = lattice.gram();
    match choose_radius(gram, g, 0.5 * tol, DIRECT_ZETA_LIMIT as usize, tol) {
        Ok(_) => direct_sum(gram, g, tol, DEFAULT_BUDGET),
        Err(Error::BudgetExceeded { .. }) => split::epstein_zeta_split(lattice, s, tol),
        Err(e) => Err(e),
    }
}

/// E_f[L] = Σ_{p≠0} f(|p|²), with `|value − E_f| ≤ tail_bound ≤ tol`.
pub fn energy(lattice: &Lattice, f: &PotentialSpec, tol: f64) -> Result<EnergyResult> {
    f.validate(lattice.dim())?;
    check_tol(tol)?;
    match *f {
        PotentialSpec::Gaussian { alpha } => {
            let mut r = theta(lattice, alpha, tol)?;
            r.value -= 1.0;
            Ok(r)
        }
        PotentialSpec::InversePower { s } => epstein_zeta(lattice, s, tol),
        PotentialSpec::LennardJones { p, q, a, b } => {
            let zp = epstein_zeta(lattice, 2.0 * p, 0.5 * tol / a)?;
            let zq = epstein_zeta(lattice, 2.0 * q, 0.5 * tol / b)?;
            let method = if zp.method == SumMethod::Split || zq.method == SumMethod::Split {
                SumMethod::Split
            } else {
                SumMethod::Direct
            };
            Ok(EnergyResult {
                value: a * zp.value - b * zq.value,
                tail_bound: a * zp.tail_bound + b * zq.tail_bound,
                cutoff_used: zp.cutoff_used.max(zq.cutoff_used),
                method,
            })
        }
    }
}

/// E_f[λL] for a power-law potential from ζ values of L:
/// `Σ coef·λ^{-s}·ζ_L(s)`.
pub fn scaled_power_energy(terms: &[(f64, f64)], zetas: &[f64], lambda: f64) -> f64 {
    terms.iter().zip(zetas).map(|(&(c, s), z)| c * lambda.powf(-s) * z).sum()
}

/// ∂E_f[L]/∂A_ij = Σ_{m≠0} f′(Q(m)) m_i m_j by direct summation, with the
/// cutoff chosen so that the energy sum itself meets `tol`. Entries are
/// derivatives with respect to independent A_ij (so an off-diagonal Gram
/// parameter a = A_ij = A_ji has derivative 2·G_ij).
pub fn gram_gradient_direct(lattice: &Lattice, f: &PotentialSpec, tol: f64) -> Result<DMatrix<f64>> {
    f.validate(lattice.dim())?;
    check_tol(tol)?;
    let gram = lattice.gram();
    let d = lattice.dim();
    let g = match *f {
        PotentialSpec::Gaussian { alpha } => Radial::Gaussian { beta: std::f64::consts::PI * alpha },
        PotentialSpec::InversePower { s } => Radial::Power { s },
        PotentialSpec::LennardJones { q, .. } => Radial::Power { s: 2.0 * q },
    };
    // the gradient summand carries an extra factor ~ Q/μ_min, so aim lower
    let mu_min = gram.symmetric_eigenvalues().min();
    let r = choose_radius(gram, g, 0.5 * tol * mu_min.min(1.0), DEFAULT_BUDGET, tol)?;
    let mut out = vec![Accumulator::default(); d * d];
    for_each_vector(gram, r * r, DEFAULT_BUDGET, |m, q| {
        let fp = f.derivative(q);
        for i in 0..d {
            for j in i..d {
                out[i * d + j].add(fp * (m[i] * m[j]) as f64);
            }
        }
    })?;
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        out[a * d + b].total()
    }))
}

/// Γ(s/2) π^{-s/2}: the normaliser relating ζ to the Mellin transform of θ.
pub(crate) fn mellin_prefactor(s: f64) -> f64 {
    std::f64::consts::PI.powf(s / 2.0) / gamma_fn(s / 2.0)
}
