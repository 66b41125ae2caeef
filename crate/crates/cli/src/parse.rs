//! Parsers for lattice, grid and range arguments.

use lattice_core::family::{FamilyPoint, FamilyPoint2D, FamilyPoint3D};
use lattice_core::sweep::lambda_grid;
use lattice_core::{canonical, Canonical, Lattice};
use nalgebra::DMatrix;

use crate::CliError;

/// A lattice named on the command line.
#[derive(Debug, Clone)]
pub struct LatticeArg {
    pub lattice: Lattice,
    pub canonical: Option<Canonical>,
    pub family: Option<FamilyPoint>,
}

pub const LATTICE_SYNTAX: &str = "Z2, Z3, SC:d, A2, D3, D3star, family2d:t, family3d:t,theta,phi, \
gram:g11,g12,...,gdd (row-major), basis:r11,r12;r21,r22 (rows separated by ';')";

fn numbers(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad number '{x}' in {what}")))
        })
        .collect()
}

pub fn lattice(spec: &str) -> Result<LatticeArg, CliError> {
    let s = spec.trim();
    let lower = s.to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix("family2d:") {
        let v = numbers(rest, "family2d")?;
        if v.len() != 1 {
            return Err(CliError::Usage("family2d takes one angle t".into()));
        }
        let p = FamilyPoint2D::new(v[0])?;
        return Ok(LatticeArg { lattice: p.lattice(), canonical: None, family: Some(FamilyPoint::D2(p)) });
    }
    if let Some(rest) = lower.strip_prefix("family3d:") {
        let v = numbers(rest, "family3d")?;
        if v.len() != 3 {
            return Err(CliError::Usage("family3d takes three angles t,theta,phi".into()));
        }
        let p = FamilyPoint3D::new(v[0], v[1], v[2]);
        return Ok(LatticeArg { lattice: p.lattice()?, canonical: None, family: Some(FamilyPoint::D3(p)) });
    }
    if let Some(rest) = lower.strip_prefix("gram:") {
        let v = numbers(rest, "gram")?;
        let d = (v.len() as f64).sqrt().round() as usize;
        if d == 0 || d * d != v.len() {
            return Err(CliError::Usage(format!("gram needs d² entries, got {}", v.len())));
        }
        let g = DMatrix::from_row_slice(d, d, &v);
        if (&g - g.transpose()).amax() > 1e-12 * g.amax().max(1.0) {
            return Err(CliError::Usage("gram matrix is not symmetric".into()));
        }
        return Ok(LatticeArg { lattice: Lattice::from_gram(g)?, canonical: None, family: None });
    }
    if let Some(rest) = lower.strip_prefix("basis:") {
        let rows = rest.split(';').map(|r| numbers(r, "basis")).collect::<Result<Vec<_>, _>>()?;
        return Ok(LatticeArg { lattice: Lattice::from_rows(&rows)?, canonical: None, family: None });
    }
    let c: Canonical = s.parse().map_err(|_| CliError::Usage(format!("unknown lattice '{s}'; expected one of {LATTICE_SYNTAX}")))?;
    Ok(LatticeArg { lattice: canonical(c, 1.0)?, canonical: Some(c), family: None })
}

/// `start:end:step`, both ends included (the end within half a step).
pub fn grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("bad λ grid '{spec}', expected start:end:step"));
    match v.as_slice() {
        [a, b, c] => {
            let p = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
            Ok(lambda_grid(p(a)?, p(b)?, p(c)?)?)
        }
        [a] => {
            let x = a.trim().parse::<f64>().map_err(|_| bad())?;
            Ok(lambda_grid(x, x, 1.0)?)
        }
        _ => Err(bad()),
    }
}

/// `lo:hi` with 0 < lo < hi.
pub fn range(spec: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("bad range '{spec}', expected lo:hi with 0 < lo < hi"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Comma-separated positive numbers.
pub fn positive_list(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let v = numbers(spec, what)?;
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(CliError::Usage(format!("{what} values must be positive")));
    }
    Ok(v)
}
