//! The rhombic 2D family L_t and the three-angle 3D family L_{t,θ,φ} with
//! unit minimal distance, their Gram coordinates, the admissible region in
//! those coordinates, and energies with parameter gradients.
//!
//! A 3D family member has unit basis vectors, so its Gram matrix is fixed by
//! the three off-diagonal entries `x = (a, b, c) = (u·v, u·w, v·w)`. The
//! lattice keeps λ₁ = 1 exactly when no reduced combination is shorter:
//! `|a|, |b|, |c| ≤ ½` and `±a ± b ± c ≥ −1` for the four sign patterns of
//! `(m₁m₂, m₁m₃, m₂m₃)`. That set is a convex polytope, and each bond class
//! cuts out a face of it.

use nalgebra::{DMatrix, Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use crate::error::{Error, Result};
use crate::lattice::{BondConstraint, Canonical, Lattice};
use crate::potential::{gram_gradient_direct, energy, PotentialSpec};
use crate::split::SplitSums;

/// Slack on the domain edges of the family parameters.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// A point of the 2D family, `L_t = ℤ(1,0) ⊕ ℤ(cos t, sin t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint2D {
    pub t: f64,
}

impl FamilyPoint2D {
    pub const SQUARE: FamilyPoint2D = FamilyPoint2D { t: FRAC_PI_2 };
    pub const TRIANGULAR: FamilyPoint2D = FamilyPoint2D { t: FRAC_PI_3 };

    pub fn new(t: f64) -> Result<Self> {
        if !(FRAC_PI_3 - DOMAIN_SLACK..=FRAC_PI_2 + DOMAIN_SLACK).contains(&t) {
            return Err(Error::Inadmissible(format!("t = {t} outside [π/3, π/2]")));
        }
        Ok(Self { t: t.clamp(FRAC_PI_3, FRAC_PI_2) })
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let c = self.t.cos();
        DMatrix::from_row_slice(2, 2, &[1.0, c, c, 1.0])
    }

    pub fn lattice(&self) -> Lattice {
        let (s, c) = self.t.sin_cos();
        Lattice::from_rows(&[vec![1.0, 0.0], vec![c, s]]).expect("family basis is regular")
    }
}

/// A point of the 3D family, basis `u = (1,0,0)`, `v = (cos t, sin t, 0)`,
/// `w = (sin θ cos φ, sin θ sin φ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint3D {
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FamilyPoint3D {
    pub fn new(t: f64, theta: f64, phi: f64) -> Self {
        Self { t, theta, phi }
    }

    /// Off-diagonal Gram entries (u·v, u·w, v·w).
    pub fn gram_coords(&self) -> [f64; 3] {
        let st = self.theta.sin();
        [self.t.cos(), st * self.phi.cos(), st * (self.t - self.phi).cos()]
    }

    pub fn gram(&self) -> DMatrix<f64> {
        gram_from_coords(&self.gram_coords())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let (st, ct) = self.theta.sin_cos();
        Lattice::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![self.t.cos(), self.t.sin(), 0.0],
            vec![st * self.phi.cos(), st * self.phi.sin(), ct],
        ])
    }

    /// Angles reproducing the Gram coordinates `x`, with t ∈ (0, π),
    /// θ ∈ [0, π/2] and φ = 0 when sin θ < 1e-8.
    pub fn from_gram_coords(x: &[f64; 3]) -> Result<Self> {
        let [a, b, c] = *x;
        if !(a.abs() < 1.0) {
            return Err(Error::Inadmissible(format!("u·v = {a} gives a degenerate basis")));
        }
        let t = a.acos();
        let sphi = (c - a * b) / t.sin();
        let st = (b * b + sphi * sphi).sqrt();
        if st > 1.0 + 1e-12 {
            return Err(Error::Inadmissible(format!("Gram coordinates {x:?} are not positive definite")));
        }
        let theta = st.min(1.0).asin();
        let phi = if st < 1e-8 { 0.0 } else { sphi.atan2(b) };
        Ok(Self { t, theta, phi })
    }

    /// ∂(a, b, c)/∂(t, θ, φ), row i = gradient of coordinate i.
    pub fn coord_jacobian(&self) -> Matrix3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let (sd, cd) = (self.t - self.phi).sin_cos();
        Matrix3::new(
            -self.t.sin(), 0.0, 0.0,
            0.0, ct * cp, -st * sp,
            -st * sd, ct * cd, st * sd,
        )
    }
}

/// Unit-diagonal 3×3 Gram matrix from its off-diagonal entries (a, b, c).
pub fn gram_from_coords(x: &[f64; 3]) -> DMatrix<f64> {
    let [a, b, c] = *x;
    DMatrix::from_row_slice(3, 3, &[1.0, a, b, a, 1.0, c, b, c, 1.0])
}

/// Gram coordinates of the canonical unit-bond 3D lattices as family points:
/// SC at the origin, BCC at the centre of the face a+b+c = −1, FCC at the
/// vertex (½, ½, ½).
pub fn canonical_coords(name: Canonical) -> Option<[f64; 3]> {
    match name {
        Canonical::Sc(3) => Some([0.0, 0.0, 0.0]),
        Canonical::D3Star => Some([-1.0 / 3.0; 3]),
        Canonical::D3 => Some([0.5; 3]),
        _ => None,
    }
}

/// The admissible region {λ₁ = 1} in Gram coordinates, optionally
/// intersected with the affine subspace of a bond class.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain3D {
    /// rows n with n·x ≤ h
    normals: Vec<Vector3<f64>>,
    offsets: Vec<f64>,
    /// rows n with n·x = e
    eq_normals: Vec<Vector3<f64>>,
    eq_offsets: Vec<f64>,
}

const FEAS_TOL: f64 = 1e-12;

impl Domain3D {
    /// Closure of L₃(M_{ℤ³}, 1): every admissible point.
    pub fn full() -> Self {
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            normals.push(e);
            offsets.push(0.5);
            normals.push(-e);
            offsets.push(0.5);
        }
        // ±a±b±c ≥ −1 for the sign patterns of (m₁m₂, m₁m₃, m₂m₃)
        for s in [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]] {
            normals.push(-Vector3::from(s));
            offsets.push(1.0);
        }
        Self { normals, offsets, eq_normals: Vec::new(), eq_offsets: Vec::new() }
    }

    /// Closure of the class of a bond constraint, which must contain ±e_i
    /// (every family member has unit basis vectors). Each other m ∈ M
    /// imposes Q(m) = 1, a linear equation in (a, b, c).
    pub fn for_constraint(c: &BondConstraint) -> Result<Self> {
        if c.dim() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: c.dim() });
        }
        if (c.lambda() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("family classes are defined at unit bond length".into()));
        }
        for i in 0..3 {
            let mut e = vec![0i64; 3];
            e[i] = 1;
            if !c.vectors().contains(&e) {
                return Err(Error::InvalidParameter(format!(
                    "constraint set must contain the basis vectors, missing {e:?}"
                )));
            }
        }
        let mut dom = Self::full();
        for m in c.vectors() {
            if m.iter().filter(|&&x| x != 0).count() < 2 {
                continue;
            }
            let (m1, m2, m3) = (m[0] as f64, m[1] as f64, m[2] as f64);
            let n = Vector3::new(2.0 * m1 * m2, 2.0 * m1 * m3, 2.0 * m2 * m3);
            let e = 1.0 - (m1 * m1 + m2 * m2 + m3 * m3);
            if !dom.eq_normals.iter().zip(&dom.eq_offsets).any(|(k, &o)| {
                ((k - n).norm() < 1e-12 && (o - e).abs() < 1e-12) || ((k + n).norm() < 1e-12 && (o + e).abs() < 1e-12)
            }) {
                dom.eq_normals.push(n);
                dom.eq_offsets.push(e);
            }
        }
        if dom.project(&[0.0; 3]).is_none() {
            return Err(Error::Inadmissible("bond class has no admissible family point".into()));
        }
        Ok(dom)
    }

    /// Closure of the class of a canonical lattice's minimal vectors.
    pub fn for_canonical(name: Canonical) -> Result<Self> {
        Self::for_constraint(&BondConstraint::of_canonical(name, 1.0)?)
    }

    /// True when a bond class pins some coordinates.
    pub fn is_constrained(&self) -> bool {
        !self.eq_normals.is_empty()
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        let v = Vector3::from(*x);
        self.normals.iter().zip(&self.offsets).all(|(n, &h)| n.dot(&v) <= h + FEAS_TOL)
            && self.eq_normals.iter().zip(&self.eq_offsets).all(|(n, &e)| (n.dot(&v) - e).abs() <= FEAS_TOL * n.norm())
    }

    /// Orthonormal basis (columns) of the directions inside the equality constraints.
    pub fn tangent_basis(&self) -> Vec<Vector3<f64>> {
        let mut basis: Vec<Vector3<f64>> = Vec::new();
        let mut fixed: Vec<Vector3<f64>> = Vec::new();
        for n in &self.eq_normals {
            let mut v = *n;
            for f in &fixed {
                v -= f * f.dot(&v);
            }
            if v.norm() > 1e-10 {
                fixed.push(v.normalize());
            }
        }
        for i in 0..3 {
            let mut v = Vector3::zeros();
            v[i] = 1.0;
            for f in fixed.iter().chain(&basis) {
                v -= f * f.dot(&v);
            }
            if v.norm() > 1e-10 {
                basis.push(v.normalize());
            }
        }
        basis
    }

    /// Euclidean projection onto the domain, or `None` if it is empty.
    ///
    /// The projection lies on the affine hull of its active constraints, so
    /// it is the closest feasible point among the projections onto the
    /// affine hulls of all small active sets.
    pub fn project(&self, y: &[f64; 3]) -> Option<[f64; 3]> {
        let yv = Vector3::from(*y);
        let base = self.affine_projection(&yv, &[])?;
        if self.contains(&base.into()) {
            return Some(base.into());
        }
        let k = self.normals.len();
        let mut best: Option<(f64, Vector3<f64>)> = None;
        let mut consider = |active: &[usize]| {
            if let Some(p) = self.affine_projection(&yv, active) {
                let arr: [f64; 3] = p.into();
                if self.contains(&arr) {
                    let d = (p - yv).norm_squared();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, p));
                    }
                }
            }
        };
        for i in 0..k {
            consider(&[i]);
            for j in (i + 1)..k {
                consider(&[i, j]);
                for l in (j + 1)..k {
                    consider(&[i, j, l]);
                }
            }
        }
        best.map(|(_, p)| p.into())
    }

    /// Projection onto {equalities} ∩ {n_i·x = h_i, i ∈ active}; `None` when
    /// the rows are dependent.
    fn affine_projection(&self, y: &Vector3<f64>, active: &[usize]) -> Option<Vector3<f64>> {
        let mut rows: Vec<(Vector3<f64>, f64)> = self.eq_normals.iter().copied().zip(self.eq_offsets.iter().copied()).collect();
        rows.extend(active.iter().map(|&i| (self.normals[i], self.offsets[i])));
        if rows.is_empty() {
            return Some(*y);
        }
        if rows.len() > 3 {
            return None;
        }
        let r = rows.len();
        let gram = DMatrix::from_fn(r, r, |i, j| rows[i].0.dot(&rows[j].0));
        let resid = DMatrix::from_fn(r, 1, |i, _| rows[i].0.dot(y) - rows[i].1);
        let lu = gram.clone().lu();
        if gram.determinant().abs() < 1e-12 {
            return None;
        }
        let mult = lu.solve(&resid)?;
        let mut p = *y;
        for i in 0..r {
            p -= rows[i].0 * mult[(i, 0)];
        }
        Some(p)
    }

    /// Vertices of the region (a polytope of dimension 3 − #equalities).
    pub fn vertices(&self) -> Vec<[f64; 3]> {
        let free = self.tangent_basis().len();
        let k = self.normals.len();
        let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..free {
            subsets = subsets
                .into_iter()
                .flat_map(|s| {
                    let start = s.last().map_or(0, |&l| l + 1);
                    (start..k).map(move |i| {
                        let mut t = s.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        let mut out: Vec<[f64; 3]> = Vec::new();
        for active in subsets {
            if let Some(p) = self.affine_projection(&Vector3::zeros(), &active) {
                let arr: [f64; 3] = p.into();
                let is_vertex = self.eq_normals.len() + active.len() == 3 || free == 0;
                if is_vertex && self.contains(&arr) && !out.iter().any(|v| (Vector3::from(*v) - p).norm() < 1e-9) {
                    out.push(arr);
                }
            }
        }
        out
    }
}

/// Lattice energy of λ·L(A) and its gradient with respect to the entries of
/// the unscaled Gram matrix A (entries treated as independent).
pub fn energy_and_gram_gradient(
    gram: &DMatrix<f64>,
    lambda: f64,
    f: &PotentialSpec,
    tol: f64,
) -> Result<(f64, DMatrix<f64>)> {
    f.validate(gram.nrows())?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("bond length must be positive, got {lambda}")));
    }
    match f.power_terms() {
        Some(terms) => {
            let exps: Vec<f64> = terms.iter().map(|t| t.1).collect();
            let sums = SplitSums::for_tolerance(gram, &exps, tol_per_term(&terms, lambda, tol))?;
            let mut e = 0.0;
            let mut g = DMatrix::zeros(gram.nrows(), gram.nrows());
            for &(c, s) in &terms {
                let (z, dz) = sums.zeta_with_gradient(s);
                let w = c * lambda.powf(-s);
                e += w * z;
                g += dz * w;
            }
            Ok((e, g))
        }
        None => {
            let scaled = Lattice::from_gram(gram * (lambda * lambda))?;
            let e = energy(&scaled, f, tol)?.value;
            let g = gram_gradient_direct(&scaled, f, tol)? * (lambda * lambda);
            Ok((e, g))
        }
    }
}

/// Lattice energy of λ·L(A) alone.
pub fn family_energy(gram: &DMatrix<f64>, lambda: f64, f: &PotentialSpec, tol: f64) -> Result<f64> {
    f.validate(gram.nrows())?;
    match f.power_terms() {
        Some(terms) => {
            let exps: Vec<f64> = terms.iter().map(|t| t.1).collect();
            let sums = SplitSums::for_tolerance(gram, &exps, tol_per_term(&terms, lambda, tol))?;
            Ok(terms.iter().map(|&(c, s)| c * lambda.powf(-s) * sums.zeta(s)).sum())
        }
        None => energy(&Lattice::from_gram(gram * (lambda * lambda))?, f, tol).map(|r| r.value),
    }
}

/// Per-ζ tolerance so that Σ |c| λ^{-s} tol_s ≤ tol.
fn tol_per_term(terms: &[(f64, f64)], lambda: f64, tol: f64) -> f64 {
    let weight: f64 = terms.iter().map(|&(c, s)| c.abs() * lambda.powf(-s)).sum();
    (tol / weight.max(1e-300)).min(1e-6)
}

/// A point of either family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyPoint {
    D2(FamilyPoint2D),
    D3(FamilyPoint3D),
}

impl FamilyPoint {
    pub fn gram(&self) -> DMatrix<f64> {
        match self {
            FamilyPoint::D2(p) => p.gram(),
            FamilyPoint::D3(p) => p.gram(),
        }
    }
}

/// ∂E_f[λ L_params]/∂params: d/dt in 2D, (d/dt, d/dθ, d/dφ) in 3D.
pub fn family_energy_gradient(point: &FamilyPoint, lambda: f64, f: &PotentialSpec, tol: f64) -> Result<Vec<f64>> {
    let (_, g) = energy_and_gram_gradient(&point.gram(), lambda, f, tol)?;
    Ok(match point {
        FamilyPoint::D2(p) => vec![2.0 * g[(0, 1)] * -p.t.sin()],
        FamilyPoint::D3(p) => {
            let dx = Vector3::new(2.0 * g[(0, 1)], 2.0 * g[(0, 2)], 2.0 * g[(1, 2)]);
            let grad = p.coord_jacobian().transpose() * dx;
            vec![grad[0], grad[1], grad[2]]
        }
    })
}

/// Energy and gradient with respect to the Gram coordinates (a, b, c).
pub fn coords_energy_gradient(x: &[f64; 3], lambda: f64, f: &PotentialSpec, tol: f64) -> Result<(f64, [f64; 3])> {
    let (e, g) = energy_and_gram_gradient(&gram_from_coords(x), lambda, f, tol)?;
    Ok((e, [2.0 * g[(0, 1)], 2.0 * g[(0, 2)], 2.0 * g[(1, 2)]]))
}

/// Energy and d/dt on the 2D family.
pub fn t_energy_gradient(t: f64, lambda: f64, f: &PotentialSpec, tol: f64) -> Result<(f64, f64)> {
    let p = FamilyPoint2D { t };
    let (e, g) = energy_and_gram_gradient(&p.gram(), lambda, f, tol)?;
    Ok((e, 2.0 * g[(0, 1)] * -t.sin()))
}

/// Admissible t range of the 2D family.
pub const T_RANGE: (f64, f64) = (FRAC_PI_3, FRAC_PI_2);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shells::minimal_vectors_of_gram;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn fcc_and_bcc_angles() {
        let fcc = FamilyPoint3D::new(FRAC_PI_3, (1.0 / 3f64.sqrt()).asin(), PI / 6.0);
        for (x, want) in fcc.gram_coords().iter().zip([0.5; 3]) {
            assert_relative_eq!(*x, want, epsilon = 1e-15);
        }
        let back = FamilyPoint3D::from_gram_coords(&[-1.0 / 3.0; 3]).unwrap();
        for (x, want) in back.gram_coords().iter().zip([-1.0 / 3.0; 3]) {
            assert_relative_eq!(*x, want, epsilon = 1e-14);
        }
        assert_relative_eq!(back.t, (-1.0f64 / 3.0).acos(), epsilon = 1e-15);
    }

    #[test]
    fn lattice_matches_gram() {
        let p = FamilyPoint3D::new(1.3, 0.7, 0.4);
        let l = p.lattice().unwrap();
        assert!((l.gram() - p.gram()).abs().max() < 1e-15);
        let q = FamilyPoint2D::new(1.2).unwrap();
        assert!((q.lattice().gram() - q.gram()).abs().max() < 1e-15);
        assert!(FamilyPoint2D::new(0.5).is_err());
    }

    #[test]
    fn sc_seed_freezes_phi() {
        let p = FamilyPoint3D::from_gram_coords(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.phi, 0.0);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn jacobian_matches_differences() {
        let p = FamilyPoint3D::new(1.2, 0.5, 0.3);
        let j = p.coord_jacobian();
        let h = 1e-7;
        for k in 0..3 {
            let mut a = [p.t, p.theta, p.phi];
            let mut b = a;
            a[k] += h;
            b[k] -= h;
            let xa = FamilyPoint3D::new(a[0], a[1], a[2]).gram_coords();
            let xb = FamilyPoint3D::new(b[0], b[1], b[2]).gram_coords();
            for i in 0..3 {
                assert_relative_eq!(j[(i, k)], (xa[i] - xb[i]) / (2.0 * h), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn class_faces() {
        let full = Domain3D::full();
        assert!(full.contains(&[0.0; 3]));
        assert!(full.contains(&[0.5; 3]));
        assert!(full.contains(&[-1.0 / 3.0; 3]));
        assert!(!full.contains(&[-0.4, -0.4, -0.4]));
        assert_eq!(full.tangent_basis().len(), 3);

        let bcc = Domain3D::for_canonical(Canonical::D3Star).unwrap();
        assert_eq!(bcc.tangent_basis().len(), 2);
        assert!(bcc.contains(&[-1.0 / 3.0; 3]));
        assert!(bcc.contains(&[-0.5, -0.5, 0.0]));
        assert!(!bcc.contains(&[0.0; 3]));

        assert_eq!(bcc.vertices().len(), 3);
        assert_eq!(full.vertices().len(), 16);

        let fcc = Domain3D::for_canonical(Canonical::D3).unwrap();
        assert!(fcc.tangent_basis().is_empty());
        let p = fcc.project(&[0.1, -0.2, 0.3]).unwrap();
        for v in p {
            assert_relative_eq!(v, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn projection_is_nearest_feasible_point() {
        let dom = Domain3D::full();
        // brute-force comparison on a grid of feasible points
        let y = [0.9, -0.8, 0.3];
        let p = dom.project(&y).unwrap();
        assert!(dom.contains(&p));
        let dp: f64 = p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        let n = 40;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let x = [-0.5 + i as f64 / n as f64, -0.5 + j as f64 / n as f64, -0.5 + k as f64 / n as f64];
                    if dom.contains(&x) {
                        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
                        assert!(d >= dp - 1e-12);
                    }
                }
            }
        }
        // vertex (-½,-½,0) of the BCC face
        let q = dom.project(&[-1.0, -1.0, 0.0]).unwrap();
        assert_relative_eq!(q[0], -0.5, epsilon = 1e-14);
        assert_relative_eq!(q[1], -0.5, epsilon = 1e-14);
        assert_relative_eq!(q[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn admissible_points_have_unit_minimum() {
        let dom = Domain3D::full();
        for x in [[0.5, 0.5, 0.5], [-0.5, -0.5, 0.0], [-1.0 / 3.0; 3], [0.2, -0.5, 0.1], [0.5, 0.5, -0.0]] {
            assert!(dom.contains(&x));
            let (l1, _) = minimal_vectors_of_gram(&gram_from_coords(&x)).unwrap();
            assert_relative_eq!(l1, 1.0, epsilon = 1e-12);
        }
        let (l1, _) = minimal_vectors_of_gram(&gram_from_coords(&[-0.4, -0.4, -0.4])).unwrap();
        assert!(l1 < 1.0);
    }

    #[test]
    fn gradient_2d_matches_finite_difference() {
        let f = PotentialSpec::lennard_jones(6.0, 3.0, 1.0, 2.0);
        let (t, lambda) = (1.2, 0.9);
        let g = family_energy_gradient(&FamilyPoint::D2(FamilyPoint2D { t }), lambda, &f, 1e-12).unwrap()[0];
        let h = 1e-5;
        let ep = family_energy(&FamilyPoint2D { t: t + h }.gram(), lambda, &f, 1e-13).unwrap();
        let em = family_energy(&FamilyPoint2D { t: t - h }.gram(), lambda, &f, 1e-13).unwrap();
        assert_relative_eq!(g, (ep - em) / (2.0 * h), max_relative = 1e-6);
    }

    #[test]
    fn gradient_3d_matches_finite_difference() {
        let f = PotentialSpec::Gaussian { alpha: 0.8 };
        let p = FamilyPoint3D::new(1.25, 0.45, 0.35);
        let g = family_energy_gradient(&FamilyPoint::D3(p), 1.1, &f, 1e-12).unwrap();
        let h = 1e-5;
        let base = [p.t, p.theta, p.phi];
        for k in 0..3 {
            let mut a = base;
            let mut b = base;
            a[k] += h;
            b[k] -= h;
            let ea = family_energy(&FamilyPoint3D::new(a[0], a[1], a[2]).gram(), 1.1, &f, 1e-13).unwrap();
            let eb = family_energy(&FamilyPoint3D::new(b[0], b[1], b[2]).gram(), 1.1, &f, 1e-13).unwrap();
            assert_relative_eq!(g[k], (ea - eb) / (2.0 * h), max_relative = 1e-5, epsilon = 1e-9);
        }
    }

    #[test]
    fn square_is_critical_in_t() {
        let f = PotentialSpec::Gaussian { alpha: 1.0 };
        let g = family_energy_gradient(&FamilyPoint::D2(FamilyPoint2D::SQUARE), 1.0, &f, 1e-12).unwrap();
        assert!(g[0].abs() < 1e-12);
    }
}
