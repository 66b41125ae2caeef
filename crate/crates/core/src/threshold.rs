//! Bond-length thresholds of Lennard-Jones potentials `a r^{-p} − b r^{-q}`.
//!
//! For a reference lattice L_ref that minimises (resp. maximises) every
//! completely monotone energy in its class, λL_ref minimises E_f exactly
//! when λ ≤ λ₀ (resp. for λ ≥ λ₁), with
//!
//! ```text
//! λ₀ = inf_x g(x),  λ₁ = sup_x g(x),
//! g(x) = (a/b)^{1/(2(p−q))} · (Δζ(2p) / Δζ(2q))^{1/(2(p−q))},
//! Δζ(s) = ζ_{L_x}(s) − ζ_{L_ref}(s),
//! ```
//!
//! over the closure of the class. g has a removable 0/0 at the reference,
//! resolved by Richardson extrapolation along rays.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use crate::descent::golden_section;
use crate::error::{Error, Result};
use crate::family::{gram_from_coords, Domain3D, FamilyPoint2D, FamilyPoint3D};
use crate::lattice::Canonical;
use crate::split::SplitSums;

/// Which optimum of g is sought.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// λ₀ = inf g, reference is a universal minimiser (ℤ², ℤ³, D₃*).
    Lambda0Inf,
    /// λ₁ = sup g, reference is a universal maximiser (A₂, D₃).
    Lambda1Sup,
}

/// A threshold problem: reference lattice and Lennard-Jones parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery {
    pub reference: Canonical,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
}

impl ThresholdQuery {
    pub fn new(reference: Canonical, p: f64, q: f64, a: f64, b: f64) -> Result<Self> {
        let q_ = Self { reference, p, q, a, b };
        q_.mode()?;
        crate::potential::PotentialSpec::lennard_jones(p, q, a, b).validate(reference.dim())?;
        Ok(q_)
    }

    pub fn mode(&self) -> Result<Mode> {
        match self.reference {
            Canonical::Sc(2) | Canonical::Sc(3) | Canonical::D3Star => Ok(Mode::Lambda0Inf),
            Canonical::A2 | Canonical::D3 => Ok(Mode::Lambda1Sup),
            other => Err(Error::InvalidParameter(format!("no threshold problem for reference {other}"))),
        }
    }

    /// Exponent 1/(2(p−q)).
    fn root(&self) -> f64 {
        1.0 / (2.0 * (self.p - self.q))
    }

    fn prefactor(&self) -> f64 {
        (self.a / self.b).powf(self.root())
    }
}

/// Tunables of the search; defaults follow the documented method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Grid points over t in 2D.
    pub grid_2d: usize,
    /// Grid points per axis in 3D.
    pub grid_3d: usize,
    /// Radius around the reference excluded from the grid.
    pub puncture: f64,
    /// Base distance h of the Richardson extrapolation (uses h, 2h, 4h).
    pub richardson_h: f64,
    /// Ray directions for the reference limit in 3D.
    pub directions_3d: usize,
    /// Absolute tolerance of every ζ evaluation.
    pub zeta_tol: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { grid_2d: 2048, grid_3d: 64, puncture: 1e-4, richardson_h: 1e-3, directions_3d: 256, zeta_tol: 1e-14 }
    }
}

/// Family parameters of an optimiser of g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdArg {
    T(f64),
    /// Gram coordinates (u·v, u·w, v·w) and the matching angles.
    Coords([f64; 3], FamilyPoint3D),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub mode: Mode,
    pub lambda_star: f64,
    /// Where the inf/sup is attained (the reference itself when it is the
    /// limit of g at the reference).
    pub argmin_parameter: ThresholdArg,
    pub at_reference: bool,
    /// Interval containing lambda_star up to the estimated discretisation
    /// and evaluation error.
    pub bracket: (f64, f64),
    /// Best value over the grid (refined) away from the reference.
    pub interior_optimum: Option<f64>,
    /// Limit of g at the reference (best over rays in 3D).
    pub reference_limit: f64,
    pub evaluations: usize,
}

/// Ratio of thresholds after changing (a, b) to (a′, b′) at fixed (p, q).
pub fn threshold_scaling(p: f64, q: f64, from: (f64, f64), to: (f64, f64)) -> Result<f64> {
    if !(p > q) {
        return Err(Error::InvalidParameter(format!("need p > q, got p = {p}, q = {q}")));
    }
    for x in [from.0, from.1, to.0, to.1] {
        if !(x > 0.0) {
            return Err(Error::InvalidParameter("a and b must be positive".into()));
        }
    }
    Ok((to.0 * from.1 / (from.0 * to.1)).powf(1.0 / (2.0 * (p - q))))
}

/// g evaluated from ζ sums, with the sign rules of the mode.
struct Ratio {
    query: ThresholdQuery,
    mode: Mode,
    z_ref: (f64, f64),
    tol: f64,
}

enum RatioValue {
    Value(f64),
    /// Δζ indistinguishable from zero: the point is (equivalent to) the reference.
    Degenerate,
}

impl Ratio {
    fn new(query: ThresholdQuery, reference_gram: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let mode = query.mode()?;
        let z_ref = Self::zetas(&query, reference_gram, tol)?;
        Ok(Self { query, mode, z_ref, tol })
    }

    fn zetas(q: &ThresholdQuery, gram: &DMatrix<f64>, tol: f64) -> Result<(f64, f64)> {
        let (sp, sq) = (2.0 * q.p, 2.0 * q.q);
        let sums = SplitSums::for_tolerance(gram, &[sp, sq], tol)?;
        Ok((sums.zeta(sp), sums.zeta(sq)))
    }

    fn at(&self, gram: &DMatrix<f64>, location: impl Fn() -> String) -> Result<RatioValue> {
        let (zp, zq) = Self::zetas(&self.query, gram, self.tol)?;
        let (dp, dq) = (zp - self.z_ref.0, zq - self.z_ref.1);
        if dq.abs() <= 1e-12 * self.z_ref.1 || dp.abs() <= 1e-12 * self.z_ref.0 {
            return Ok(RatioValue::Degenerate);
        }
        let (num, den) = match self.mode {
            Mode::Lambda0Inf => (dp, dq),
            Mode::Lambda1Sup => (-dp, -dq),
        };
        if num <= 0.0 || den <= 0.0 {
            return Err(Error::SignError { location: location(), numerator: dp, denominator: dq });
        }
        Ok(RatioValue::Value(self.query.prefactor() * (num / den).powf(self.query.root())))
    }

    /// Value to minimise: g for inf, −g for sup.
    fn objective(&self, g: f64) -> f64 {
        match self.mode {
            Mode::Lambda0Inf => g,
            Mode::Lambda1Sup => -g,
        }
    }

    /// Rough absolute error of g at a point where |Δζ(2q)| = dq.
    fn noise(&self, g: f64, dq_rel: f64) -> f64 {
        g * self.query.root() * 4.0 * self.tol / (dq_rel * self.z_ref.1).max(1e-300)
    }
}

/// Richardson limit from g at distances h, 2h, 4h; returns (limit, error estimate).
fn richardson(g1: f64, g2: f64, g4: f64) -> (f64, f64) {
    let second = (8.0 * g1 - 6.0 * g2 + g4) / 3.0;
    let first = 2.0 * g1 - g2;
    (second, (second - first).abs())
}

/// Computes λ₀ or λ₁ for the query; `tol` is the target bracket width.
pub fn threshold(query: &ThresholdQuery, tol: f64) -> Result<ThresholdResult> {
    threshold_with(query, tol, &ThresholdOptions::default())
}

pub fn threshold_with(query: &ThresholdQuery, tol: f64, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    crate::potential::PotentialSpec::lennard_jones(query.p, query.q, query.a, query.b).validate(query.reference.dim())?;
    match query.reference {
        Canonical::Sc(2) | Canonical::A2 => threshold_2d(query, tol, opts),
        Canonical::Sc(3) | Canonical::D3Star | Canonical::D3 => threshold_3d(query, tol, opts),
        other => Err(Error::InvalidParameter(format!("no threshold problem for reference {other}"))),
    }
}

fn threshold_2d(query: &ThresholdQuery, tol: f64, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    let (t_ref, toward) = match query.reference {
        Canonical::Sc(2) => (FRAC_PI_2, -1.0),
        _ => (FRAC_PI_3, 1.0),
    };
    let ratio = Ratio::new(*query, &FamilyPoint2D { t: t_ref }.gram(), opts.zeta_tol)?;
    let eval = |t: f64| -> Result<Option<f64>> {
        match ratio.at(&FamilyPoint2D { t }.gram(), || format!("t = {t}"))? {
            RatioValue::Value(g) => Ok(Some(g)),
            RatioValue::Degenerate => Ok(None),
        }
    };

    let n = opts.grid_2d.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| FRAC_PI_3 + (FRAC_PI_2 - FRAC_PI_3) * i as f64 / (n - 1) as f64)
        .filter(|t| (t - t_ref).abs() >= opts.puncture)
        .collect();
    let values: Vec<Option<f64>> = grid.par_iter().map(|&t| eval(t)).collect::<Result<_>>()?;
    let mut evaluations = grid.len();

    // reference limit
    let h = opts.richardson_h;
    let gs: Vec<f64> = [h, 2.0 * h, 4.0 * h]
        .iter()
        .map(|&d| eval(t_ref + toward * d)?.ok_or_else(|| Error::NotConverged("ratio degenerate near the reference".into())))
        .collect::<Result<_>>()?;
    evaluations += 3;
    let (limit, rich_err) = richardson(gs[0], gs[1], gs[2]);
    let dq_near = {
        let (_, zq) = Ratio::zetas(query, &FamilyPoint2D { t: t_ref + toward * h }.gram(), opts.zeta_tol)?;
        ((zq - ratio.z_ref.1) / ratio.z_ref.1).abs()
    };
    let limit_err = rich_err + ratio.noise(limit, dq_near);

    // best grid point, refined
    let best = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|g| (i, g)))
        .min_by(|a, b| ratio.objective(a.1).total_cmp(&ratio.objective(b.1)));
    let mut interior = None;
    if let Some((i, _)) = best {
        let lo = if i > 0 { grid[i - 1] } else { grid[i] };
        let hi = if i + 1 < grid.len() { grid[i + 1] } else { grid[i] };
        let mut count = 0;
        let ((a, b), t_best, obj) = golden_section(lo, hi, 1e-10, |t| {
            count += 1;
            Ok(match eval(t)? {
                Some(g) => ratio.objective(g),
                None => f64::INFINITY,
            })
        })?;
        evaluations += count;
        let g_best = ratio.objective(obj);
        let ends: Vec<f64> = [a, b].iter().filter_map(|&t| eval(t).ok().flatten()).collect();
        let spread = ends.iter().map(|g| (g - g_best).abs()).fold(0.0, f64::max);
        interior = Some((t_best, g_best, spread + 1e-15 * g_best));
    }

    let (lambda_star, arg, at_reference, err) = match interior {
        Some((t, g, e)) if ratio.objective(g) < ratio.objective(limit) => (g, ThresholdArg::T(t), false, e),
        _ => (limit, ThresholdArg::T(t_ref), true, limit_err),
    };
    if 2.0 * err > tol && !at_reference {
        return Err(Error::NotConverged(format!("bracket width {} exceeds tolerance {tol}", 2.0 * err)));
    }
    Ok(ThresholdResult {
        mode: ratio.mode,
        lambda_star,
        argmin_parameter: arg,
        at_reference,
        bracket: (lambda_star - err, lambda_star + err),
        interior_optimum: interior.map(|x| x.1),
        reference_limit: limit,
        evaluations,
    })
}

/// Reference Gram coordinates and domain of the 3D threshold problems.
fn setup_3d(reference: Canonical) -> Result<([f64; 3], Domain3D)> {
    Ok(match reference {
        Canonical::Sc(3) => ([0.0; 3], Domain3D::full()),
        Canonical::D3Star => ([-1.0 / 3.0; 3], Domain3D::for_canonical(Canonical::D3Star)?),
        // an FCC vertex of the BCC face
        Canonical::D3 => ([-0.5, -0.5, 0.0], Domain3D::for_canonical(Canonical::D3Star)?),
        other => return Err(Error::InvalidParameter(format!("no 3D threshold problem for {other}"))),
    })
}

/// Unit directions spanning the tangent space (Fibonacci sphere / circle).
fn ray_directions(basis: &[Vector3<f64>], n: usize) -> Vec<Vector3<f64>> {
    match basis.len() {
        1 => vec![basis[0], -basis[0]],
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                basis[0] * a.cos() + basis[1] * a.sin()
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    basis[0] * (r * a.cos()) + basis[1] * (r * a.sin()) + basis[2] * z
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

fn threshold_3d(query: &ThresholdQuery, tol: f64, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    let (x_ref, domain) = setup_3d(query.reference)?;
    let ratio = Ratio::new(*query, &gram_from_coords(&x_ref), opts.zeta_tol)?;
    let basis = domain.tangent_basis();
    let k = basis.len();
    let xr = Vector3::from(x_ref);
    let to_x = |y: &[f64]| -> [f64; 3] {
        let mut v = xr;
        for (b, yi) in basis.iter().zip(y) {
            v += b * *yi;
        }
        v.into()
    };
    let eval = |x: &[f64; 3]| -> Result<Option<f64>> {
        if !domain.contains(x) {
            return Ok(None);
        }
        match ratio.at(&gram_from_coords(x), || format!("Gram coordinates {x:?}"))? {
            RatioValue::Value(g) => Ok(Some(g)),
            RatioValue::Degenerate => Ok(None),
        }
    };

    // grid over the bounding box of the domain in tangent coordinates
    let n = opts.grid_3d.max(2);
    let vertices = domain.vertices();
    let ranges: Vec<(f64, f64)> = basis
        .iter()
        .map(|b| {
            vertices.iter().map(|v| b.dot(&(Vector3::from(*v) - xr))).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y), hi.max(y))
            })
        })
        .collect();
    let spacing = ranges.iter().map(|(lo, hi)| (hi - lo) / (n - 1) as f64).fold(0.0, f64::max);
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in &ranges {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(lo + (hi - lo) * i as f64 / (n - 1) as f64);
                    q
                })
            })
            .collect();
    }
    let points: Vec<Vec<f64>> = points
        .into_iter()
        .filter(|y| {
            let x = to_x(y);
            domain.contains(&x) && y.iter().map(|v| v * v).sum::<f64>().sqrt() >= opts.puncture
        })
        .collect();
    let values: Vec<Option<f64>> = points.par_iter().map(|y| eval(&to_x(y))).collect::<Result<_>>()?;
    let mut evaluations = points.len();

    // reference limit over feasible rays
    let h = opts.richardson_h;
    let rays: Vec<Vector3<f64>> = ray_directions(&basis, opts.directions_3d)
        .into_iter()
        .filter(|d| domain.contains(&(xr + d * (4.0 * h)).into()) && domain.contains(&(xr + d * h).into()))
        .collect();
    let limits: Vec<Option<(f64, f64)>> = rays
        .par_iter()
        .map(|d| -> Result<Option<(f64, f64)>> {
            let mut g = [0.0; 3];
            for (slot, m) in g.iter_mut().zip([1.0, 2.0, 4.0]) {
                match eval(&(xr + d * (m * h)).into())? {
                    Some(v) => *slot = v,
                    None => return Ok(None),
                }
            }
            Ok(Some(richardson(g[0], g[1], g[2])))
        })
        .collect::<Result<_>>()?;
    evaluations += 3 * rays.len();
    let (limit, limit_err) = limits
        .iter()
        .flatten()
        .copied()
        .min_by(|a, b| ratio.objective(a.0).total_cmp(&ratio.objective(b.0)))
        .ok_or_else(|| Error::NotConverged("no feasible ray at the reference".into()))?;

    // refine the best grid point coordinate-wise
    let best = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|g| (i, g)))
        .min_by(|a, b| ratio.objective(a.1).total_cmp(&ratio.objective(b.1)));
    let mut interior = None;
    if let Some((i, g0)) = best {
        let mut y = points[i].clone();
        let mut obj = ratio.objective(g0);
        let mut width = spacing;
        let mut change = f64::INFINITY;
        for _cycle in 0..200 {
            let before = obj;
            let mut max_move: f64 = 0.0;
            for c in 0..k {
                let centre = y[c];
                let mut count = 0;
                let (_, yc, oc) = golden_section(centre - width, centre + width, 1e-12, |v| {
                    count += 1;
                    let mut z = y.clone();
                    z[c] = v;
                    Ok(match eval(&to_x(&z))? {
                        Some(g) => ratio.objective(g),
                        None => f64::INFINITY,
                    })
                })?;
                evaluations += count;
                if oc < obj {
                    obj = oc;
                    max_move = max_move.max((yc - centre).abs());
                    y[c] = yc;
                }
            }
            change = (before - obj).abs();
            width = (4.0 * max_move).clamp(1e-7, spacing);
            if change <= 0.01 * tol && max_move < 1e-7 {
                break;
            }
        }
        let x = to_x(&y);
        interior = Some((x, ratio.objective(obj), change + 1e-15 * obj.abs()));
    }

    // an optimum that sits on a copy of the reference is the reference limit
    let on_reference = |x: &[f64; 3]| -> Result<bool> {
        let (_, zq) = Ratio::zetas(query, &gram_from_coords(x), opts.zeta_tol)?;
        Ok(((zq - ratio.z_ref.1) / ratio.z_ref.1).abs() < 1e-9)
    };
    if let Some((x, _, _)) = interior {
        if on_reference(&x)? {
            interior = None;
        }
    }
    let (lambda_star, x_best, at_reference, err) = match interior {
        Some((x, g, e)) if ratio.objective(g) < ratio.objective(limit) => (g, x, false, e),
        _ => (limit, x_ref, true, limit_err),
    };
    let angles = FamilyPoint3D::from_gram_coords(&x_best)?;
    Ok(ThresholdResult {
        mode: ratio.mode,
        lambda_star,
        argmin_parameter: ThresholdArg::Coords(x_best, angles),
        at_reference,
        bracket: (lambda_star - err, lambda_star + err),
        interior_optimum: interior.map(|x| x.1),
        reference_limit: limit,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scaling_examples() {
        assert_relative_eq!(threshold_scaling(6.0, 3.0, (1.0, 2.0), (1.0, 1.0)).unwrap(), 2f64.powf(1.0 / 6.0));
        assert_relative_eq!(threshold_scaling(5.0, 3.0, (1.0, 1.0), (4.0, 1.0)).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(threshold_scaling(3.0, 6.0, (1.0, 1.0), (1.0, 1.0)).is_err());
    }

    #[test]
    fn richardson_removes_two_orders() {
        let g = |h: f64| 0.7 + 0.3 * h - 2.0 * h * h + 5.0 * h * h * h;
        let (c, e) = richardson(g(1e-3), g(2e-3), g(4e-3));
        assert!((c - 0.7).abs() < 1e-7);
        assert!(e > 0.0 && e < 1e-4);
    }

    #[test]
    fn square_threshold() {
        let q = ThresholdQuery::new(Canonical::Sc(2), 6.0, 3.0, 1.0, 2.0).unwrap();
        let r = threshold(&q, 1e-6).unwrap();
        assert!(r.at_reference);
        assert!((r.lambda_star - 0.7628683).abs() < 1e-5, "{}", r.lambda_star);
        assert!(r.bracket.0 <= r.lambda_star && r.lambda_star <= r.bracket.1);
    }

    #[test]
    fn wrong_reference_gives_sign_error() {
        // ℤ² treated as a maximiser: Δζ has the wrong sign everywhere
        let q = ThresholdQuery { reference: Canonical::Sc(2), p: 6.0, q: 3.0, a: 1.0, b: 2.0 };
        let ratio = Ratio { query: q, mode: Mode::Lambda1Sup, z_ref: Ratio::zetas(&q, &FamilyPoint2D::SQUARE.gram(), 1e-14).unwrap(), tol: 1e-14 };
        let err = ratio.at(&FamilyPoint2D { t: 1.2 }.gram(), || "t = 1.2".into());
        assert!(matches!(err, Err(Error::SignError { .. })));
    }

    #[test]
    fn rejects_non_reference_lattices() {
        assert!(ThresholdQuery::new(Canonical::Sc(4), 6.0, 3.0, 1.0, 2.0).is_err());
        assert!(ThresholdQuery::new(Canonical::Sc(2), 3.0, 6.0, 1.0, 2.0).is_err());
    }
}
