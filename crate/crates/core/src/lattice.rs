//! Bravais lattices given by a basis (rows are the generating vectors) and
//! their Gram matrices, the canonical lattices SC/A₂/D₃/D₃*, and bond
//! constraint classes.

use nalgebra::{Cholesky, DMatrix, DVector};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::shells;

/// Smallest |det| accepted for a basis.
pub const SINGULAR_DET: f64 = 1e-12;

/// Relative tolerance used when testing `Q(m) = λ²` for class membership.
pub const CLASS_TOL: f64 = 1e-9;

/// A full-rank lattice in ℝ^d. Immutable; the Gram matrix is computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl Lattice {
    /// Builds a lattice from a square basis matrix whose rows are the generators.
    pub fn from_basis(basis: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = basis.shape();
        if rows == 0 || rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("basis has non-finite entries".into()));
        }
        let det = basis.determinant();
        if det.abs() <= SINGULAR_DET {
            return Err(Error::SingularBasis { det });
        }
        let gram = &basis * basis.transpose();
        let gram = symmetrize(gram);
        Ok(Self { basis, gram })
    }

    /// Builds a lattice from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for r in rows {
            if r.len() != d {
                return Err(Error::NotSquare { rows: d, cols: r.len() });
            }
        }
        Self::from_basis(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Builds a lattice isometric to any lattice with the given Gram matrix,
    /// using the lower Cholesky factor as basis.
    pub fn from_gram(gram: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = gram.shape();
        if rows == 0 || rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let gram = symmetrize(gram);
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::InvalidParameter("Gram matrix is not positive definite".into()))?;
        let basis = chol.l();
        if basis.determinant().abs() <= SINGULAR_DET {
            return Err(Error::SingularBasis { det: basis.determinant() });
        }
        Ok(Self { basis, gram })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Gram matrix A_L with entries u_i·u_j.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Covolume |det B|.
    pub fn covolume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    pub fn gram_inverse(&self) -> DMatrix<f64> {
        symmetrize(
            self.gram
                .clone()
                .try_inverse()
                .expect("Gram matrix of a full-rank basis is invertible"),
        )
    }

    /// Q_L(m) = mᵀ A_L m.
    pub fn quadratic_form(&self, m: &[i64]) -> f64 {
        quadratic_form(&self.gram, m)
    }

    /// Real coordinates Σ m_i u_i.
    pub fn point(&self, m: &[i64]) -> DVector<f64> {
        let d = self.dim();
        DVector::from_fn(d, |j, _| (0..d).map(|i| m[i] as f64 * self.basis[(i, j)]).sum())
    }

    /// The lattice λL.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            basis: &self.basis * lambda,
            gram: &self.gram * (lambda * lambda),
        }
    }
}

/// mᵀ A m for an integer vector.
pub fn quadratic_form(gram: &DMatrix<f64>, m: &[i64]) -> f64 {
    let d = gram.nrows();
    let mut q = 0.0;
    for i in 0..d {
        if m[i] == 0 {
            continue;
        }
        let mi = m[i] as f64;
        q += gram[(i, i)] * mi * mi;
        for j in (i + 1)..d {
            q += 2.0 * gram[(i, j)] * mi * m[j] as f64;
        }
    }
    q
}

pub(crate) fn symmetrize(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let d = a.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Convenience wrapper around [`Lattice::from_basis`].
pub fn build_lattice(basis: DMatrix<f64>) -> Result<Lattice> {
    Lattice::from_basis(basis)
}

/// The named lattices: simple cubic ℤ^d, triangular A₂, FCC D₃ and BCC D₃*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Canonical {
    Sc(usize),
    A2,
    D3,
    D3Star,
}

impl Canonical {
    pub fn dim(&self) -> usize {
        match self {
            Canonical::Sc(d) => *d,
            Canonical::A2 => 2,
            Canonical::D3 | Canonical::D3Star => 3,
        }
    }

    /// Unit-bond basis from the usual definitions.
    fn unit_basis(&self) -> Result<DMatrix<f64>> {
        Ok(match self {
            Canonical::Sc(0) => {
                return Err(Error::InvalidParameter("SC dimension must be positive".into()))
            }
            Canonical::Sc(d) => DMatrix::identity(*d, *d),
            Canonical::A2 => {
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 3f64.sqrt() / 2.0])
            }
            Canonical::D3 => {
                DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0])
                    / 2f64.sqrt()
            }
            Canonical::D3Star => {
                DMatrix::from_row_slice(3, 3, &[1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0])
                    / 3f64.sqrt()
            }
        })
    }

    /// Minimal vectors of the unit-bond basis, in integer coordinates.
    pub fn minimal_set(&self) -> Vec<Vec<i64>> {
        let d = self.dim();
        let e = |i: usize| -> Vec<i64> { (0..d).map(|k| i64::from(k == i)).collect() };
        let mut reps: Vec<Vec<i64>> = (0..d).map(e).collect();
        match self {
            Canonical::Sc(_) => {}
            Canonical::A2 => reps.push(vec![-1, 1]),
            Canonical::D3 => {
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let mut v = vec![0; 3];
                        v[j] = 1;
                        v[i] = -1;
                        reps.push(v);
                    }
                }
            }
            Canonical::D3Star => reps.push(vec![1, 1, 1]),
        }
        close_under_negation(reps)
    }

    pub fn name(&self) -> String {
        match self {
            Canonical::Sc(2) => "Z2".into(),
            Canonical::Sc(3) => "Z3".into(),
            Canonical::Sc(d) => format!("SC:{d}"),
            Canonical::A2 => "A2".into(),
            Canonical::D3 => "D3".into(),
            Canonical::D3Star => "D3star".into(),
        }
    }
}

impl fmt::Display for Canonical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Canonical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "z2" | "square" => return Ok(Canonical::Sc(2)),
            "z3" | "sc" => return Ok(Canonical::Sc(3)),
            "a2" | "triangular" => return Ok(Canonical::A2),
            "d3" | "fcc" => return Ok(Canonical::D3),
            "d3star" | "d3*" | "bcc" => return Ok(Canonical::D3Star),
            _ => {}
        }
        let digits = lower
            .strip_prefix("sc:")
            .or_else(|| lower.strip_prefix("sc"))
            .or_else(|| lower.strip_prefix('z'));
        if let Some(d) = digits.and_then(|x| x.parse::<usize>().ok()) {
            if d > 0 {
                return Ok(Canonical::Sc(d));
            }
        }
        Err(Error::InvalidParameter(format!(
            "unknown lattice name {s:?} (expected Z2, Z3, SC:<d>, A2, D3, D3star)"
        )))
    }
}

/// The canonical lattice scaled to bond length `lambda`.
pub fn canonical(name: Canonical, lambda: f64) -> Result<Lattice> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("bond length must be positive, got {lambda}")));
    }
    Lattice::from_basis(name.unit_basis()? * lambda)
}

pub(crate) fn close_under_negation(vectors: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = Vec::with_capacity(2 * vectors.len());
    for v in vectors {
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        for w in [v, neg] {
            if !out.contains(&w) {
                out.push(w);
            }
        }
    }
    out.sort();
    out
}

/// A prescribed set M of minimal vectors (integer coordinates) together with
/// the bond length λ; defines the class L_d(M, λ) and its closure.
#[derive(Debug, Clone, PartialEq)]
pub struct BondConstraint {
    vectors: Vec<Vec<i64>>,
    lambda: f64,
}

impl BondConstraint {
    pub fn new(vectors: Vec<Vec<i64>>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("bond length must be positive, got {lambda}")));
        }
        let Some(d) = vectors.first().map(Vec::len) else {
            return Err(Error::InvalidParameter("constraint set is empty".into()));
        };
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
            if v.iter().all(|&x| x == 0) {
                return Err(Error::InvalidParameter("constraint set contains the zero vector".into()));
            }
            let neg: Vec<i64> = v.iter().map(|x| -x).collect();
            if !vectors.contains(&neg) {
                return Err(Error::InvalidParameter(format!("constraint set is not closed under negation: {v:?}")));
            }
        }
        let mut vectors = vectors;
        vectors.sort();
        vectors.dedup();
        Ok(Self { vectors, lambda })
    }

    /// Adds ±v for every representative.
    pub fn from_representatives(reps: Vec<Vec<i64>>, lambda: f64) -> Result<Self> {
        Self::new(close_under_negation(reps), lambda)
    }

    /// The minimal-vector set of a canonical lattice.
    pub fn of_canonical(name: Canonical, lambda: f64) -> Result<Self> {
        Self::new(name.minimal_set(), lambda)
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// Coordination number r = |M|.
    pub fn coordination(&self) -> usize {
        self.vectors.len()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.vectors.clone(), lambda)
    }
}

/// Membership in L_d(M, λ) (`strict`) or in its closure.
pub fn in_constraint_class(lattice: &Lattice, c: &BondConstraint, strict: bool) -> Result<bool> {
    if lattice.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: lattice.dim() });
    }
    let l2 = c.lambda() * c.lambda();
    for m in c.vectors() {
        if (lattice.quadratic_form(m) - l2).abs() > CLASS_TOL * l2 {
            return Ok(false);
        }
    }
    let short = shells::vectors_within(lattice.gram(), l2 * (1.0 + CLASS_TOL), shells::DEFAULT_BUDGET)?;
    for (m, q) in short {
        if c.vectors().contains(&m) {
            continue;
        }
        if strict || q < l2 * (1.0 - CLASS_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}
