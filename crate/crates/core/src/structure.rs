//! Strong eutaxy, criticality of θ_L(α) under bond constraints, and the
//! constrained theta Hessian.
//!
//! Gram-space derivatives are taken with respect to the entries a_ij, so the
//! bond constraints `Q(m) = λ²` are linear: `⟨m mᵀ, A⟩ = λ²`. Symmetric
//! matrices are handled in the orthonormal coordinates `E_ii`,
//! `(E_ij + E_ji)/√2`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::lattice::{in_constraint_class, BondConstraint, Lattice};
use crate::potential::{gaussian_cutoff, gram_gradient_direct, PotentialSpec};
use crate::shells::{first_shells, vectors_within, DEFAULT_BUDGET, GROUPING_TOL};

/// Default proportionality tolerance for eutaxy checks.
pub const EUTAXY_TOL: f64 = 1e-8;

/// Second moments of one shell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellMoment {
    /// 1-based shell index n.
    pub index: usize,
    pub r2: f64,
    pub count: usize,
    /// V_n = Σ p pᵀ over the real shell vectors.
    pub real: DMatrix<f64>,
    /// W_n = Σ m mᵀ over the integer coordinates; V_n = Bᵀ W_n B.
    pub integer: DMatrix<f64>,
    /// Least-squares ρ_n with ρ_n W_n ≈ A⁻¹.
    pub rho_fit: f64,
    /// ‖ρ_n W_n − A⁻¹‖_∞ / ‖A⁻¹‖_∞ (max-abs entry norm).
    pub deviation: f64,
    /// ρ_n when W_n is proportional to A⁻¹ within [`EUTAXY_TOL`].
    pub rho: Option<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Moments of the first `n_shells` shells.
pub fn shell_moments(lattice: &Lattice, n_shells: usize) -> Result<Vec<ShellMoment>> {
    moments_with_tol(lattice, n_shells, EUTAXY_TOL)
}

fn moments_with_tol(lattice: &Lattice, n_shells: usize, tol: f64) -> Result<Vec<ShellMoment>> {
    if n_shells == 0 {
        return Err(Error::InvalidParameter("need at least one shell".into()));
    }
    let d = lattice.dim();
    let inv = lattice.gram_inverse();
    let inv_norm = max_abs(&inv);
    let shells = first_shells(lattice.gram(), n_shells, GROUPING_TOL)?;
    let mut out = Vec::with_capacity(shells.len());
    for (i, shell) in shells.iter().enumerate() {
        let mut w = DMatrix::zeros(d, d);
        let mut v = DMatrix::zeros(d, d);
        for m in &shell.vectors {
            let mv = DVector::from_iterator(d, m.iter().map(|&x| x as f64));
            w += &mv * mv.transpose();
            let p = lattice.point(m);
            v += &p * p.transpose();
        }
        let rho_fit = inv.dot(&w) / w.dot(&w);
        let deviation = max_abs(&(&w * rho_fit - &inv)) / inv_norm;
        out.push(ShellMoment {
            index: i + 1,
            r2: shell.r2,
            count: shell.count(),
            real: v,
            integer: w,
            rho_fit,
            deviation,
            rho: (deviation < tol).then_some(rho_fit),
        });
    }
    Ok(out)
}

/// Outcome of a strong-eutaxy check over the first shells.
#[derive(Debug, Clone, PartialEq)]
pub struct EutaxyReport {
    pub is_strongly_eutactic: bool,
    pub shells_checked: usize,
    pub max_deviation: f64,
    /// 1-based index of the first shell whose moment is not proportional to A⁻¹.
    pub first_failing_shell: Option<usize>,
}

/// True iff every one of the first `n_shells` shell moments is proportional
/// to A⁻¹ within `tol` (relative, entrywise).
pub fn check_strong_eutaxy(lattice: &Lattice, n_shells: usize, tol: f64) -> Result<EutaxyReport> {
    if n_shells < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 shells, got {n_shells}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let moments = moments_with_tol(lattice, n_shells, tol)?;
    let max_deviation = moments.iter().map(|m| m.deviation).fold(0.0, f64::max);
    let first_failing_shell = moments.iter().find(|m| m.deviation >= tol).map(|m| m.index);
    Ok(EutaxyReport {
        is_strongly_eutactic: first_failing_shell.is_none(),
        shells_checked: moments.len(),
        max_deviation,
        first_failing_shell,
    })
}

/// Index pairs of the orthonormal coordinates on symmetric d×d matrices.
fn sym_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..d {
        for j in i..d {
            v.push((i, j));
        }
    }
    v
}

fn sym_coords(m: &DMatrix<f64>) -> DVector<f64> {
    let pairs = sym_pairs(m.nrows());
    DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(i, j)| if i == j { m[(i, i)] } else { SQRT_2 * m[(i, j)] }),
    )
}

fn sym_matrix(d: usize, h: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for (k, &(i, j)) in sym_pairs(d).iter().enumerate() {
        if i == j {
            m[(i, i)] = h[k];
        } else {
            m[(i, j)] = h[k] / SQRT_2;
            m[(j, i)] = h[k] / SQRT_2;
        }
    }
    m
}

/// Coordinates of m mᵀ, so that ⟨φ(m), h⟩ = mᵀ H m.
fn outer_coords(m: &[i64]) -> DVector<f64> {
    let pairs = sym_pairs(m.len());
    DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(i, j)| {
            let p = (m[i] * m[j]) as f64;
            if i == j {
                p
            } else {
                SQRT_2 * p
            }
        }),
    )
}

/// Orthonormal basis of span{m mᵀ : m ∈ M} (columns) and of its complement.
fn constraint_spaces(c: &BondConstraint) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = c.dim() * (c.dim() + 1) / 2;
    let mut ctc = DMatrix::zeros(n, n);
    for m in c.vectors() {
        let phi = outer_coords(m);
        ctc += &phi * phi.transpose();
    }
    let eig = ctc.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x));
    let (mut span, mut null) = (Vec::new(), Vec::new());
    for k in 0..n {
        let col = eig.eigenvectors.column(k).into_owned();
        if eig.eigenvalues[k] > 1e-10 * top {
            span.push(col);
        } else {
            null.push(col);
        }
    }
    let to_matrix = |cols: Vec<DVector<f64>>| {
        if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    (to_matrix(span), to_matrix(null))
}

fn require_class(lattice: &Lattice, c: &BondConstraint) -> Result<()> {
    if !in_constraint_class(lattice, c, false)? {
        return Err(Error::Inadmissible(format!(
            "lattice is not in the closure of the bond class with λ = {}",
            c.lambda()
        )));
    }
    Ok(())
}

/// Result of the Lagrange criticality test.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalReport {
    pub is_critical: bool,
    /// ‖G − P G‖ / ‖G‖ with P the projection onto span{m mᵀ}.
    pub residual: f64,
    /// Gram-entry gradient of θ_L(α).
    pub gradient: DMatrix<f64>,
}

/// Tests whether ∇_A θ_L(α) lies in span{m mᵀ : m ∈ M}, i.e. whether the
/// Lagrange system of θ under the bond constraints is solvable at L.
pub fn check_critical_point(lattice: &Lattice, c: &BondConstraint, alpha: f64, tol: f64) -> Result<CriticalReport> {
    if lattice.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: lattice.dim() });
    }
    require_class(lattice, c)?;
    let g = gram_gradient_direct(lattice, &PotentialSpec::Gaussian { alpha }, 1e-15)?;
    let gv = sym_coords(&g);
    let (span, _) = constraint_spaces(c);
    let projected = &span * (span.transpose() * &gv);
    let norm = gv.norm();
    let residual = if norm > 0.0 { (&gv - projected).norm() / norm } else { 0.0 };
    Ok(CriticalReport { is_critical: residual < tol, residual, gradient: g })
}

/// Result of the constrained Hessian test.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    /// All probe values strictly positive.
    pub positive_definite: bool,
    pub min_probe_value: f64,
    /// Smallest eigenvalue of the Hessian restricted to the tangent space.
    pub min_eigenvalue: f64,
    pub tangent_dim: usize,
}

/// Hessian of A ↦ θ(α) on the tangent space {H : mᵀ H m = 0, m ∈ M},
/// checked by `n_probe` random unit directions (each summed directly) and
/// by the eigenvalues of the assembled restricted matrix.
pub fn constrained_theta_hessian_pd(
    lattice: &Lattice,
    c: &BondConstraint,
    alpha: f64,
    n_probe: usize,
    seed: u64,
) -> Result<HessianReport> {
    if lattice.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: lattice.dim() });
    }
    PotentialSpec::Gaussian { alpha }.validate(lattice.dim())?;
    require_class(lattice, c)?;
    let (_, null) = constraint_spaces(c);
    let k = null.ncols();
    if k == 0 {
        return Err(Error::DegenerateTangent);
    }
    let d = lattice.dim();
    let r2 = gaussian_cutoff(lattice.gram(), alpha, 1e-18)? * 1.5;
    let terms: Vec<(Vec<i64>, f64)> = vectors_within(lattice.gram(), r2, DEFAULT_BUDGET)?;
    let scale = (PI * alpha).powi(2);

    let n = d * (d + 1) / 2;
    let mut hess = DMatrix::zeros(n, n);
    for (m, q) in &terms {
        let phi = outer_coords(m);
        hess += (&phi * phi.transpose()) * (scale * (-PI * alpha * q).exp());
    }
    let restricted = null.transpose() * &hess * &null;
    let min_eigenvalue = restricted.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_probe_value = f64::INFINITY;
    for _ in 0..n_probe {
        let y = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let h = sym_matrix(d, &(&null * y.normalize()));
        let mut value = 0.0;
        for (m, q) in &terms {
            let mv = DVector::from_iterator(d, m.iter().map(|&x| x as f64));
            let mhm = (mv.transpose() * &h * &mv)[(0, 0)];
            value += scale * mhm * mhm * (-PI * alpha * q).exp();
        }
        min_probe_value = min_probe_value.min(value);
    }
    Ok(HessianReport {
        positive_definite: min_probe_value > 0.0 && min_eigenvalue > 0.0,
        min_probe_value,
        min_eigenvalue,
        tangent_dim: k,
    })
}
