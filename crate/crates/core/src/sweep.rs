//! Family minimisation at fixed bond length, phase labels, λ sweeps,
//! transition search and the joint (λ, parameter) optimum.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descent::{golden_section, projected_descent, DescentOptions};
use crate::error::{Error, Result};
use crate::family::{
    canonical_coords, coords_energy_gradient, family_energy, gram_from_coords, t_energy_gradient, Domain3D,
    FamilyPoint, FamilyPoint2D, FamilyPoint3D, T_RANGE,
};
use crate::lattice::{canonical, BondConstraint, Canonical};
use crate::potential::PotentialSpec;
use crate::shells::first_shells;

/// Tolerance on t and on shell signatures used by [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-6;
/// Energies closer than this are ties, broken by [`Phase::priority`].
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Square,
    Triangular,
    Rhombic2D,
    SC,
    BCC,
    FCC,
    Rhombic3D,
}

impl Phase {
    /// Lower is preferred when energies tie.
    pub fn priority(self) -> u8 {
        match self {
            Phase::Square | Phase::SC => 0,
            Phase::BCC => 1,
            Phase::FCC | Phase::Triangular => 2,
            Phase::Rhombic2D | Phase::Rhombic3D => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Square => "Square",
            Phase::Triangular => "Triangular",
            Phase::Rhombic2D => "Rhombic2D",
            Phase::SC => "SC",
            Phase::BCC => "BCC",
            Phase::FCC => "FCC",
            Phase::Rhombic3D => "Rhombic3D",
        }
    }

    pub fn is_rhombic(self) -> bool {
        matches!(self, Phase::Rhombic2D | Phase::Rhombic3D)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Phase::Square,
            Phase::Triangular,
            Phase::Rhombic2D,
            Phase::SC,
            Phase::BCC,
            Phase::FCC,
            Phase::Rhombic3D,
        ];
        all.into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown phase label '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn get(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            _ => Err(Error::InvalidParameter(format!("family sweeps exist in dimension 2 and 3, not {d}"))),
        }
    }
}

/// A family minimiser at one bond length.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub lambda: f64,
    pub params: FamilyPoint,
    pub label: Phase,
    pub energy: f64,
}

impl PhasePoint {
    /// Gram coordinates: `[cos t]` in 2D, (u·v, u·w, v·w) in 3D.
    pub fn coords(&self) -> Vec<f64> {
        match &self.params {
            FamilyPoint::D2(p) => vec![p.t.cos()],
            FamilyPoint::D3(p) => p.gram_coords().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Energy accuracy for each evaluation.
    pub tol: f64,
    pub grid_2d: usize,
    pub multistart_2d: usize,
    pub random_seeds_3d: usize,
    /// Base seed of the random 3D starts.
    pub seed: u64,
    pub descent: DescentOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            grid_2d: 512,
            multistart_2d: 5,
            random_seeds_3d: 200,
            seed: 0,
            descent: DescentOptions::default(),
        }
    }
}

pub fn classify_2d(t: f64) -> Phase {
    if (t - FRAC_PI_2).abs() < CLASSIFY_TOL {
        Phase::Square
    } else if (t - FRAC_PI_3).abs() < CLASSIFY_TOL {
        Phase::Triangular
    } else {
        Phase::Rhombic2D
    }
}

type Signature = Vec<(f64, usize)>;

fn signature(gram: &DMatrix<f64>) -> Result<Signature> {
    Ok(first_shells(gram, 3, CLASSIFY_TOL)?.iter().map(|s| (s.r2, s.count())).collect())
}

fn reference_signatures() -> &'static [(Phase, Signature)] {
    static REFS: OnceLock<Vec<(Phase, Signature)>> = OnceLock::new();
    REFS.get_or_init(|| {
        [(Phase::SC, Canonical::Sc(3)), (Phase::BCC, Canonical::D3Star), (Phase::FCC, Canonical::D3)]
            .into_iter()
            .map(|(p, c)| {
                let l = canonical(c, 1.0).expect("canonical lattice");
                (p, signature(l.gram()).expect("canonical shells"))
            })
            .collect()
    })
}

fn same_signature(a: &Signature, b: &Signature) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| x.1 == y.1 && (x.0 - y.0).abs() <= CLASSIFY_TOL * y.0.abs())
}

/// SC/BCC/FCC if the first three shells match the canonical ones, else
/// Rhombic3D. The Gram matrix is taken as is (not rescaled).
pub fn classify_gram_3d(gram: &DMatrix<f64>) -> Result<Phase> {
    let sig = signature(gram)?;
    Ok(reference_signatures()
        .iter()
        .find(|(_, r)| same_signature(&sig, r))
        .map(|(p, _)| *p)
        .unwrap_or(Phase::Rhombic3D))
}

pub fn classify(params: &FamilyPoint) -> Result<Phase> {
    match params {
        FamilyPoint::D2(p) => Ok(classify_2d(p.t)),
        FamilyPoint::D3(p) => classify_gram_3d(&p.gram()),
    }
}

struct Candidate {
    params: FamilyPoint,
    label: Phase,
    energy: f64,
}

fn pick_best(cands: Vec<Candidate>) -> Candidate {
    let emin = cands.iter().map(|c| c.energy).fold(f64::INFINITY, f64::min);
    let band = TIE_TOL * emin.abs().max(1.0);
    cands
        .into_iter()
        .filter(|c| c.energy <= emin + band)
        .min_by(|x, y| x.label.priority().cmp(&y.label.priority()).then(x.energy.total_cmp(&y.energy)))
        .expect("at least one candidate")
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bond length must be positive, got {lambda}")))
    }
}

/// Global minimiser of t ↦ E_f[λ L_t] on [π/3, π/2].
pub fn minimize_over_family_2d(lambda: f64, f: &PotentialSpec, opts: &SweepOptions) -> Result<PhasePoint> {
    check_lambda(lambda)?;
    f.validate(2)?;
    let (lo, hi) = T_RANGE;
    let n = opts.grid_2d.max(2);
    let ts: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let es = ts
        .iter()
        .map(|&t| family_energy(&FamilyPoint2D { t }.gram(), lambda, f, opts.tol))
        .collect::<Result<Vec<f64>>>()?;

    // local minima of the grid, best first
    let mut starts: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || es[i] <= es[i - 1]) && (i + 1 == n || es[i] <= es[i + 1]))
        .collect();
    starts.sort_by(|&i, &j| es[i].total_cmp(&es[j]));
    starts.truncate(opts.multistart_2d.max(1));

    let mut cands = vec![
        Candidate { params: FamilyPoint::D2(FamilyPoint2D::TRIANGULAR), label: Phase::Triangular, energy: es[0] },
        Candidate { params: FamilyPoint::D2(FamilyPoint2D::SQUARE), label: Phase::Square, energy: es[n - 1] },
    ];
    let project = |y: &[f64]| vec![y[0].clamp(lo, hi)];
    for i in starts {
        let r = projected_descent(
            &[ts[i]],
            |x: &[f64]| t_energy_gradient(x[0], lambda, f, opts.tol).map(|(e, g)| (e, vec![g])),
            project,
            &opts.descent,
        )?;
        let t = r.x[0];
        cands.push(Candidate { params: FamilyPoint::D2(FamilyPoint2D { t }), label: classify_2d(t), energy: r.value });
    }
    let best = pick_best(cands);
    Ok(PhasePoint { lambda, params: best.params, label: best.label, energy: best.energy })
}

/// Starting points of the 3D multistart: SC, BCC and FCC followed by
/// `n_random` random points, all mapped into `domain`. The random part
/// depends only on `seed`.
pub fn seeds_3d(domain: &Domain3D, n_random: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(n_random + 3);
    for c in [Canonical::Sc(3), Canonical::D3Star, Canonical::D3] {
        let x = canonical_coords(c).expect("3D canonical");
        if let Some(p) = domain.project(&x) {
            out.push(p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < n_random && attempts < 100 * n_random.max(1) {
        attempts += 1;
        let y = [rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5)];
        let x = if !domain.is_constrained() {
            if !domain.contains(&y) {
                continue;
            }
            y
        } else {
            match domain.project(&y) {
                Some(p) => p,
                None => continue,
            }
        };
        out.push(x);
        drawn += 1;
    }
    out
}

/// Minimiser of E_f[λ L] over the admissible 3D family, optionally
/// restricted to the closure of a bond class.
pub fn minimize_over_family_3d(
    lambda: f64,
    f: &PotentialSpec,
    opts: &SweepOptions,
    constraint: Option<&BondConstraint>,
) -> Result<PhasePoint> {
    check_lambda(lambda)?;
    f.validate(3)?;
    let domain = match constraint {
        Some(c) => Domain3D::for_constraint(c)?,
        None => Domain3D::full(),
    };
    let seeds = seeds_3d(&domain, opts.random_seeds_3d, opts.seed);
    if seeds.is_empty() {
        return Err(Error::NoAdmissibleSeed);
    }
    let project = |y: &[f64]| -> Vec<f64> {
        let p = domain.project(&[y[0], y[1], y[2]]).expect("admissible region is non-empty");
        p.to_vec()
    };
    let mut cands = Vec::with_capacity(seeds.len());
    for s in &seeds {
        let r = projected_descent(
            s,
            |x: &[f64]| coords_energy_gradient(&[x[0], x[1], x[2]], lambda, f, opts.tol).map(|(e, g)| (e, g.to_vec())),
            project,
            &opts.descent,
        )?;
        let x = [r.x[0], r.x[1], r.x[2]];
        let label = classify_gram_3d(&gram_from_coords(&x))?;
        cands.push((x, label, r.value));
    }
    let cands = cands
        .into_iter()
        .map(|(x, label, energy)| {
            Ok(Candidate { params: FamilyPoint::D3(FamilyPoint3D::from_gram_coords(&x)?), label, energy })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = pick_best(cands);
    Ok(PhasePoint { lambda, params: best.params, label: best.label, energy: best.energy })
}

pub fn minimize_over_family(lambda: f64, f: &PotentialSpec, dim: Dimension, opts: &SweepOptions) -> Result<PhasePoint> {
    match dim {
        Dimension::Two => minimize_over_family_2d(lambda, f, opts),
        Dimension::Three => minimize_over_family_3d(lambda, f, opts, None),
    }
}

/// One result per grid point, in grid order; a failing point does not stop
/// the others.
pub fn sweep(grid: &[f64], f: &PotentialSpec, dim: Dimension, opts: &SweepOptions) -> Result<Vec<Result<PhasePoint>>> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("λ grid must be strictly increasing".into()));
    }
    f.validate(dim.get())?;
    Ok(grid.par_iter().map(|&l| minimize_over_family(l, f, dim, opts)).collect())
}

/// [`sweep`] in 3D restricted to the closure of a bond class.
pub fn sweep_3d(
    grid: &[f64],
    f: &PotentialSpec,
    opts: &SweepOptions,
    constraint: Option<&BondConstraint>,
) -> Result<Vec<Result<PhasePoint>>> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("λ grid must be strictly increasing".into()));
    }
    f.validate(3)?;
    if let Some(c) = constraint {
        Domain3D::for_constraint(c)?;
    }
    Ok(grid.par_iter().map(|&l| minimize_over_family_3d(l, f, opts, constraint)).collect())
}

/// `start, start+step, …`; the last point is the one within half a step
/// of `end`.
pub fn lambda_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(end >= start) || !(step > 0.0) || !end.is_finite() {
        return Err(Error::InvalidParameter(format!("bad λ grid {start}:{end}:{step}")));
    }
    let n = ((end - start) / step + 0.5).floor() as usize;
    if n > 10_000_000 {
        return Err(Error::InvalidParameter(format!("λ grid {start}:{end}:{step} has too many points")));
    }
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOptions {
    pub range: (f64, f64),
    /// Spacing of the coarse grid on which label changes are detected.
    pub step: f64,
    pub bracket_tol: f64,
}

impl TransitionOptions {
    pub fn default_for(dim: Dimension) -> Self {
        match dim {
            Dimension::Two => Self { range: (0.6, 1.2), step: 0.005, bracket_tol: 1e-4 },
            Dimension::Three => Self { range: (0.70, 1.05), step: 0.005, bracket_tol: 1e-3 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: Phase,
    pub to: Phase,
    /// Midpoint of the final bracket.
    pub lambda: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub transitions: Vec<Transition>,
    /// Labels that reappear after having been left, other than the
    /// rhombic phase in 3D.
    pub non_monotone: Vec<Phase>,
    pub coarse: Vec<PhasePoint>,
}

/// Labels that come back after the sequence moved on.
pub fn non_monotone_labels(labels: &[Phase], dim: Dimension) -> Vec<Phase> {
    let mut seen: Vec<Phase> = Vec::new();
    let mut out = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if i > 0 && labels[i - 1] != l && seen.contains(&l) {
            let allowed = dim == Dimension::Three && l == Phase::Rhombic3D;
            if !allowed && !out.contains(&l) {
                out.push(l);
            }
        }
        if !seen.contains(&l) {
            seen.push(l);
        }
    }
    out
}

/// Label changes on a coarse λ grid, each refined by bisection until the
/// bracket is at most `bracket_tol` wide.
pub fn find_transitions(
    f: &PotentialSpec,
    dim: Dimension,
    topts: &TransitionOptions,
    opts: &SweepOptions,
) -> Result<TransitionReport> {
    if !(topts.bracket_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bracket tolerance must be positive, got {}", topts.bracket_tol)));
    }
    let grid = lambda_grid(topts.range.0, topts.range.1, topts.step)?;
    let coarse = sweep(&grid, f, dim, opts)?.into_iter().collect::<Result<Vec<_>>>()?;
    let labels: Vec<Phase> = coarse.iter().map(|p| p.label).collect();
    let changes: Vec<usize> = (1..coarse.len()).filter(|&i| labels[i] != labels[i - 1]).collect();
    let transitions = changes
        .par_iter()
        .map(|&i| {
            let from = labels[i - 1];
            let (mut a, mut b) = (coarse[i - 1].lambda, coarse[i].lambda);
            let mut to = labels[i];
            while b - a > topts.bracket_tol {
                let m = 0.5 * (a + b);
                let l = minimize_over_family(m, f, dim, opts)?.label;
                if l == from {
                    a = m;
                } else {
                    b = m;
                    to = l;
                }
            }
            Ok(Transition { from, to, lambda: 0.5 * (a + b), bracket: (a, b) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionReport { transitions, non_monotone: non_monotone_labels(&labels, dim), coarse })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOptimum {
    pub lambda: f64,
    pub point: PhasePoint,
    /// The optimum sits at an end of the searched λ range.
    pub at_boundary: bool,
}

/// Joint minimum over (λ, family parameters): coarse λ scan of the family
/// minimum, then golden-section search around the best scan point.
pub fn global_optimum(
    f: &PotentialSpec,
    dim: Dimension,
    range: (f64, f64),
    lambda_tol: f64,
    opts: &SweepOptions,
) -> Result<GlobalOptimum> {
    let (lo, hi) = range;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("bad λ range [{lo}, {hi}]")));
    }
    const SCAN: usize = 24;
    let grid: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let scan = sweep(&grid, f, dim, opts)?.into_iter().collect::<Result<Vec<_>>>()?;
    let k = (0..scan.len()).min_by(|&i, &j| scan[i].energy.total_cmp(&scan[j].energy)).expect("non-empty scan");
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(SCAN)];
    let (_, lambda, _) = golden_section(a, b, lambda_tol, |l| Ok(minimize_over_family(l, f, dim, opts)?.energy))?;
    let mut point = minimize_over_family(lambda, f, dim, opts)?;
    let mut lambda = lambda;
    // the golden search never evaluates its end points
    for (end, p) in [(0, &scan[0]), (SCAN, &scan[SCAN])] {
        if (k == end) && p.energy < point.energy {
            lambda = grid[end];
            point = p.clone();
        }
    }
    let at_boundary = (lambda - lo).abs() <= lambda_tol || (hi - lambda).abs() <= lambda_tol;
    Ok(GlobalOptimum { lambda, point, at_boundary })
}
