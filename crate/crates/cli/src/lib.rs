//! Command-line front end: argument handling, dispatch to `lattice-core`
//! and CSV / JSON / SVG output.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod parse;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lattice_core::family::FamilyPoint;
use lattice_core::structure::{check_critical_point, check_strong_eutaxy, constrained_theta_hessian_pd, shell_moments};
use lattice_core::sweep::{
    classify, classify_gram_3d, find_transitions, global_optimum, sweep, sweep_3d, Dimension, Phase, PhasePoint,
    SweepOptions, TransitionOptions,
};
use lattice_core::threshold::{threshold, Mode, ThresholdArg, ThresholdQuery};
use lattice_core::{
    energy, epstein_zeta, minimal_vectors, shells, theta, BondConstraint, Canonical, Lattice, PotentialSpec,
};

use crate::parse::LatticeArg;
use crate::svg::{Chart, Series};
use crate::table::{human, Cell, Format, Meta, Table};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "LATTICE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] lattice_core::Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lattice-energy", version, about = "Lattice energies, thresholds and phase diagrams of Bravais lattices")]
pub struct Cli {
    /// Worker threads [default: available parallelism]; the LATTICE_THREADS
    /// environment variable takes precedence
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the result table to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of --out: csv or json (empty means csv)
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Lattice: Z2, Z3, SC:d, A2, D3, D3star, family2d:t, family3d:t,theta,phi,
    /// gram:g11,g12,... (row-major) or basis:r11,r12;r21,r22
    #[arg(long)]
    pub lattice: String,
    /// Multiply the lattice by this factor
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Potential: lj:p,q,a,b (a r^-p - b r^-q in the squared distance r),
    /// gauss:alpha or power:s
    #[arg(long)]
    pub potential: String,
    /// Absolute accuracy of every energy evaluation
    #[arg(long, default_value = "1e-8")]
    pub tol: f64,
    /// Random starts of the 3D multistart descent (after the SC, BCC and FCC seeds)
    #[arg(long, default_value_t = 200)]
    pub random_seeds: usize,
    /// Seed of the random starts
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points over t of the 2D search
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Descents started from the best 2D grid points
    #[arg(long, default_value_t = 5)]
    pub multistart: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy E_f of a lattice with its truncation bound
    Energy {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Potential: lj:p,q,a,b, gauss:alpha or power:s
        #[arg(long)]
        potential: String,
        /// Absolute accuracy
        #[arg(long, default_value = "1e-10")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Theta function θ_L(α), origin term included
    Theta {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Comma-separated values of α
        #[arg(long)]
        alpha: String,
        /// Absolute accuracy
        #[arg(long, default_value = "1e-10")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Epstein zeta function ζ_L(s) = Σ |p|^-s over nonzero points
    Zeta {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Comma-separated exponents s (each larger than the dimension)
        #[arg(long)]
        s: String,
        /// Absolute accuracy
        #[arg(long, default_value = "1e-10")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Shells (squared length, count) of nonzero vectors with |p|² ≤ r2
    Shells {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Squared radius
        #[arg(long)]
        r2: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Strong eutaxy of the first shells
    Eutaxy {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Number of shells checked
        #[arg(long, default_value_t = 4)]
        shells: usize,
        /// Relative deviation allowed from a multiple of the inverse Gram matrix
        #[arg(long, default_value = "1e-8")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Criticality of the theta function within the lattice's own bond class
    Critical {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Comma-separated values of α
        #[arg(long, default_value = "0.25,1,4")]
        alpha: String,
        /// Relative residual accepted as zero
        #[arg(long, default_value = "1e-8")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Positivity of the theta Hessian on the tangent space of the bond class
    Hessian {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Comma-separated values of α
        #[arg(long, default_value = "1")]
        alpha: String,
        /// Random tangent directions probed
        #[arg(long, default_value_t = 50)]
        probes: usize,
        /// Seed of the probe directions
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bond-length threshold λ₀ (Z2, Z3, D3star) or λ₁ (A2, D3) of a
    /// Lennard-Jones potential a r^-p - b r^-q
    Threshold {
        /// Reference lattice: Z2, Z3, D3star, A2 or D3
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Target width of the bracket around the threshold
        #[arg(long, default_value = "1e-6")]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimiser over the 2D family L_t for each bond length of a grid
    Sweep2d {
        #[command(flatten)]
        search: SearchArgs,
        /// Bond lengths start:end:step (end included within half a step) or a single value
        #[arg(long)]
        lambda: String,
        /// Write a label-versus-λ chart
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write energy-versus-t curves for the first, middle and last λ
        #[arg(long)]
        profile_svg: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimiser over the 3D family L_{t,θ,φ} for each bond length of a grid
    Sweep3d {
        #[command(flatten)]
        search: SearchArgs,
        /// Bond lengths start:end:step (end included within half a step) or a single value
        #[arg(long)]
        lambda: String,
        /// Restrict to the closure of the bond class of Z3, D3star or D3 [default: no restriction]
        #[arg(long)]
        class: Option<String>,
        /// Write a label-versus-λ chart
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bond lengths where the minimising phase changes
    Transitions {
        #[command(flatten)]
        search: SearchArgs,
        /// Family dimension, 2 or 3
        #[arg(long)]
        dim: usize,
        /// Searched bond lengths lo:hi [default: 0.6:1.2 in 2D, 0.7:1.05 in 3D]
        #[arg(long)]
        range: Option<String>,
        /// Spacing of the coarse grid
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        /// Final bracket width [default: 1e-4 in 2D, 1e-3 in 3D]
        #[arg(long)]
        bracket_tol: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Joint minimum over bond length and family parameters
    GlobalOpt {
        #[command(flatten)]
        search: SearchArgs,
        /// Family dimension, 2 or 3
        #[arg(long)]
        dim: usize,
        /// Searched bond lengths lo:hi
        #[arg(long, default_value = "0.8:1.3")]
        range: String,
        /// Width of the final λ bracket
        #[arg(long, default_value = "1e-6")]
        lambda_tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Phase label of a family member
    Classify {
        /// family2d:t, family3d:t,theta,phi, or any 3D lattice (rescaled to unit minimum)
        #[arg(long)]
        lattice: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Everything a command produces.
struct Outcome {
    table: Table,
    /// Extra lines for the terminal.
    notes: Vec<String>,
    svgs: Vec<(PathBuf, String)>,
    /// Set when part of the work failed but the table is still written.
    partial_failure: Option<CliError>,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self { table, notes: Vec::new(), svgs: Vec::new(), partial_failure: None }
    }
}

fn meta(command: &str, seed: Option<u64>, tolerances: &[(&str, f64)]) -> Meta {
    Meta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn positive(x: f64, what: &str) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("--{what} must be a positive number, got {x}")))
    }
}

fn potential(s: &str) -> Result<PotentialSpec, CliError> {
    s.parse().map_err(|e: lattice_core::Error| CliError::Usage(e.to_string()))
}

fn lattice_arg(a: &LatticeArgs) -> Result<(LatticeArg, Lattice), CliError> {
    positive(a.scale, "scale")?;
    let l = parse::lattice(&a.lattice)?;
    let scaled = l.lattice.scaled(a.scale);
    Ok((l, scaled))
}

fn sweep_options(s: &SearchArgs) -> Result<SweepOptions, CliError> {
    positive(s.tol, "tol")?;
    if s.grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    if s.multistart == 0 {
        return Err(CliError::Usage("--multistart must be at least 1".into()));
    }
    Ok(SweepOptions {
        tol: s.tol,
        grid_2d: s.grid,
        multistart_2d: s.multistart,
        random_seeds_3d: s.random_seeds,
        seed: s.seed,
        ..Default::default()
    })
}

fn search_meta(command: &str, s: &SearchArgs, extra: &[(&str, f64)]) -> Meta {
    let mut tols = vec![("tol", s.tol)];
    tols.extend_from_slice(extra);
    meta(command, Some(s.seed), &tols)
}

const COLS_2D: [&str; 4] = ["lambda", "t", "label", "energy"];
const COLS_3D: [&str; 9] = ["lambda", "t", "theta", "phi", "a", "b", "c", "label", "energy"];

fn phase_row(p: &PhasePoint) -> Vec<Cell> {
    match &p.params {
        FamilyPoint::D2(q) => vec![p.lambda.into(), q.t.into(), Cell::text(p.label.name()), p.energy.into()],
        FamilyPoint::D3(q) => {
            let [a, b, c] = q.gram_coords();
            vec![
                p.lambda.into(),
                q.t.into(),
                q.theta.into(),
                q.phi.into(),
                a.into(),
                b.into(),
                c.into(),
                Cell::text(p.label.name()),
                p.energy.into(),
            ]
        }
    }
}

fn failed_row(lambda: f64, width: usize) -> Vec<Cell> {
    let mut r: Vec<Cell> = vec![Cell::Num(f64::NAN); width];
    r[0] = lambda.into();
    r[width - 2] = Cell::text("Error");
    r
}

fn phase_index(p: Phase) -> f64 {
    match p {
        Phase::Square | Phase::SC => 0.0,
        Phase::Rhombic2D => 1.0,
        Phase::Triangular => 2.0,
        Phase::Rhombic3D => 1.0,
        Phase::BCC => 2.0,
        Phase::FCC => 3.0,
    }
}

fn label_chart(points: &[PhasePoint], dim: Dimension, title: &str) -> String {
    let names: &[Phase] = match dim {
        Dimension::Two => &[Phase::Square, Phase::Rhombic2D, Phase::Triangular],
        Dimension::Three => &[Phase::SC, Phase::Rhombic3D, Phase::BCC, Phase::FCC],
    };
    Chart {
        title: title.to_string(),
        x_label: "bond length λ".into(),
        y_label: "phase".into(),
        series: vec![Series { name: "phase".into(), points: points.iter().map(|p| (p.lambda, phase_index(p.label))).collect() }],
        y_ticks: Some(names.iter().map(|p| (phase_index(*p), p.name().to_string())).collect()),
        steps: true,
    }
    .render()
}

fn collect_sweep(
    grid: &[f64],
    results: Vec<lattice_core::Result<PhasePoint>>,
    out: &mut Outcome,
    width: usize,
) -> Vec<PhasePoint> {
    let mut ok = Vec::new();
    for (l, r) in grid.iter().zip(results) {
        match r {
            Ok(p) => {
                out.table.push(phase_row(&p));
                ok.push(p);
            }
            Err(e) => {
                out.notes.push(format!("λ = {l}: {e}"));
                out.table.push(failed_row(*l, width));
                let e = CliError::Core(e);
                if out.partial_failure.as_ref().is_none_or(|f| f.exit_code() < e.exit_code()) {
                    out.partial_failure = Some(e);
                }
            }
        }
    }
    ok
}

fn dimension(d: usize) -> Result<Dimension, CliError> {
    Dimension::from_usize(d).map_err(|e| CliError::Usage(e.to_string()))
}

fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Energy { lattice, potential: pot, tol, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let f = potential(pot)?;
            let r = energy(&l, &f, positive(*tol, "tol")?)?;
            let mut t = Table::new(
                meta("energy", None, &[("tol", *tol)]),
                &["lattice", "scale", "potential", "energy", "tail_bound", "cutoff_r2", "method"],
            );
            t.push(vec![
                Cell::text(&lattice.lattice),
                lattice.scale.into(),
                Cell::text(f.to_string()),
                r.value.into(),
                r.tail_bound.into(),
                r.cutoff_used.into(),
                Cell::text(format!("{:?}", r.method).to_lowercase()),
            ]);
            Ok(Outcome::new(t))
        }
        Command::Theta { lattice, alpha, tol, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let alphas = parse::positive_list(alpha, "alpha")?;
            let tol = positive(*tol, "tol")?;
            let mut t = Table::new(meta("theta", None, &[("tol", tol)]), &["alpha", "theta", "tail_bound"]);
            for a in alphas {
                let r = theta(&l, a, tol)?;
                t.push(vec![a.into(), r.value.into(), r.tail_bound.into()]);
            }
            Ok(Outcome::new(t))
        }
        Command::Zeta { lattice, s, tol, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let ss = parse::positive_list(s, "s")?;
            let tol = positive(*tol, "tol")?;
            let mut t = Table::new(meta("zeta", None, &[("tol", tol)]), &["s", "zeta", "tail_bound", "method"]);
            for s in ss {
                let r = epstein_zeta(&l, s, tol)?;
                t.push(vec![
                    s.into(),
                    r.value.into(),
                    r.tail_bound.into(),
                    Cell::text(format!("{:?}", r.method).to_lowercase()),
                ]);
            }
            Ok(Outcome::new(t))
        }
        Command::Shells { lattice, r2, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let d = shells(&l, positive(*r2, "r2")?)?;
            let mut t = Table::new(meta("shells", None, &[]), &["shell", "r2", "count"]);
            for (i, s) in d.shells.iter().enumerate() {
                t.push(vec![(i + 1).into(), s.r2.into(), s.count().into()]);
            }
            let mut o = Outcome::new(t);
            o.notes.push(format!("{} shells, {} vectors with |p|² ≤ {}", d.shells.len(), d.total_vectors(), r2));
            Ok(o)
        }
        Command::Eutaxy { lattice, shells: n, tol, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let tol = positive(*tol, "tol")?;
            let report = check_strong_eutaxy(&l, *n, tol)?;
            let moments = shell_moments(&l, *n)?;
            let mut t = Table::new(
                meta("eutaxy", None, &[("tol", tol)]),
                &["shell", "r2", "count", "rho", "deviation", "eutactic"],
            );
            for m in &moments {
                t.push(vec![
                    m.index.into(),
                    m.r2.into(),
                    m.count.into(),
                    m.rho_fit.into(),
                    m.deviation.into(),
                    Cell::flag(m.deviation <= tol),
                ]);
            }
            let mut o = Outcome::new(t);
            o.notes.push(format!(
                "strongly eutactic on {} shells: {} (max deviation {})",
                report.shells_checked,
                report.is_strongly_eutactic,
                table::fmt_num(report.max_deviation)
            ));
            Ok(o)
        }
        Command::Critical { lattice, alpha, tol, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let alphas = parse::positive_list(alpha, "alpha")?;
            let tol = positive(*tol, "tol")?;
            let c = own_class(&l)?;
            let mut t = Table::new(meta("critical", None, &[("tol", tol)]), &["alpha", "critical", "residual"]);
            for a in alphas {
                let r = check_critical_point(&l, &c, a, tol)?;
                t.push(vec![a.into(), Cell::flag(r.is_critical), r.residual.into()]);
            }
            Ok(Outcome::new(t))
        }
        Command::Hessian { lattice, alpha, probes, seed, .. } => {
            let (_, l) = lattice_arg(lattice)?;
            let alphas = parse::positive_list(alpha, "alpha")?;
            if *probes == 0 {
                return Err(CliError::Usage("--probes must be at least 1".into()));
            }
            let c = own_class(&l)?;
            let mut t = Table::new(
                meta("hessian", Some(*seed), &[]),
                &["alpha", "positive_definite", "min_probe_value", "min_eigenvalue", "tangent_dim"],
            );
            for a in alphas {
                let r = constrained_theta_hessian_pd(&l, &c, a, *probes, *seed)?;
                t.push(vec![
                    a.into(),
                    Cell::flag(r.positive_definite),
                    r.min_probe_value.into(),
                    r.min_eigenvalue.into(),
                    r.tangent_dim.into(),
                ]);
            }
            Ok(Outcome::new(t))
        }
        Command::Threshold { lattice, p, q, a, b, tol, .. } => {
            let reference: Canonical =
                lattice.parse().map_err(|e: lattice_core::Error| CliError::Usage(e.to_string()))?;
            let query = ThresholdQuery::new(reference, *p, *q, *a, *b)?;
            let r = threshold(&query, positive(*tol, "tol")?)?;
            let mode = match r.mode {
                Mode::Lambda0Inf => "inf",
                Mode::Lambda1Sup => "sup",
            };
            let mut cols = vec!["lattice", "mode", "lambda_star", "at_reference", "bracket_lo", "bracket_hi", "reference_limit"];
            let mut row = vec![
                Cell::text(reference.name()),
                Cell::text(mode),
                r.lambda_star.into(),
                Cell::flag(r.at_reference),
                r.bracket.0.into(),
                r.bracket.1.into(),
                r.reference_limit.into(),
            ];
            match r.argmin_parameter {
                ThresholdArg::T(t) => {
                    cols.push("t");
                    row.push(t.into());
                }
                ThresholdArg::Coords(x, _) => {
                    cols.extend(["a", "b", "c"]);
                    row.extend(x.iter().map(|v| Cell::Num(*v)));
                }
            }
            let mut t = Table::new(meta("threshold", None, &[("tol", *tol)]), &cols);
            t.push(row);
            let mut o = Outcome::new(t);
            let sym = if r.mode == Mode::Lambda0Inf { "lambda0" } else { "lambda1" };
            o.notes.push(format!(
                "{sym}({}) = {}{}",
                reference.name(),
                table::fmt_num(r.lambda_star),
                if r.at_reference { " (limit at the reference lattice)" } else { "" }
            ));
            Ok(o)
        }
        Command::Sweep2d { search, lambda, svg, profile_svg, .. } => {
            let f = potential(&search.potential)?;
            let opts = sweep_options(search)?;
            let grid = parse::grid(lambda)?;
            let results = sweep(&grid, &f, Dimension::Two, &opts)?;
            let mut o = Outcome::new(Table::new(search_meta("sweep2d", search, &[]), &COLS_2D));
            let ok = collect_sweep(&grid, results, &mut o, COLS_2D.len());
            if let Some(path) = svg {
                o.svgs.push((path.clone(), label_chart(&ok, Dimension::Two, &format!("2D minimiser, {f}"))));
            }
            if let Some(path) = profile_svg {
                o.svgs.push((path.clone(), profile_chart(&grid, &f, &opts)?));
            }
            Ok(o)
        }
        Command::Sweep3d { search, lambda, class, svg, .. } => {
            let f = potential(&search.potential)?;
            let opts = sweep_options(search)?;
            let grid = parse::grid(lambda)?;
            let constraint = match class {
                Some(c) => {
                    let name: Canonical = c.parse().map_err(|e: lattice_core::Error| CliError::Usage(e.to_string()))?;
                    if name.dim() != 3 {
                        return Err(CliError::Usage(format!("--class must be a 3D lattice, got {c}")));
                    }
                    Some(BondConstraint::of_canonical(name, 1.0)?)
                }
                None => None,
            };
            let results = sweep_3d(&grid, &f, &opts, constraint.as_ref())?;
            let mut o = Outcome::new(Table::new(search_meta("sweep3d", search, &[]), &COLS_3D));
            let ok = collect_sweep(&grid, results, &mut o, COLS_3D.len());
            if let Some(path) = svg {
                o.svgs.push((path.clone(), label_chart(&ok, Dimension::Three, &format!("3D minimiser, {f}"))));
            }
            Ok(o)
        }
        Command::Transitions { search, dim, range, step, bracket_tol, .. } => {
            let f = potential(&search.potential)?;
            let opts = sweep_options(search)?;
            let dim = dimension(*dim)?;
            let mut topts = TransitionOptions::default_for(dim);
            if let Some(r) = range {
                topts.range = parse::range(r)?;
            }
            topts.step = positive(*step, "step")?;
            if let Some(b) = bracket_tol {
                topts.bracket_tol = positive(*b, "bracket-tol")?;
            }
            let r = find_transitions(&f, dim, &topts, &opts)?;
            let mut t = Table::new(
                search_meta("transitions", search, &[("bracket_tol", topts.bracket_tol)]),
                &["from", "to", "lambda", "bracket_lo", "bracket_hi"],
            );
            for x in &r.transitions {
                t.push(vec![
                    Cell::text(x.from.name()),
                    Cell::text(x.to.name()),
                    x.lambda.into(),
                    x.bracket.0.into(),
                    x.bracket.1.into(),
                ]);
            }
            let mut o = Outcome::new(t);
            let mut seq: Vec<&str> = Vec::new();
            for p in &r.coarse {
                if seq.last() != Some(&p.label.name()) {
                    seq.push(p.label.name());
                }
            }
            o.notes.push(format!("phase sequence: {}", seq.join(" -> ")));
            if !r.non_monotone.is_empty() {
                let names: Vec<&str> = r.non_monotone.iter().map(|p| p.name()).collect();
                o.notes.push(format!("warning: non-monotone phases, label(s) {} reappear", names.join(", ")));
            }
            Ok(o)
        }
        Command::GlobalOpt { search, dim, range, lambda_tol, .. } => {
            let f = potential(&search.potential)?;
            let opts = sweep_options(search)?;
            let dim = dimension(*dim)?;
            let range = parse::range(range)?;
            let lt = positive(*lambda_tol, "lambda-tol")?;
            let g = global_optimum(&f, dim, range, lt, &opts)?;
            let base: &[&str] = match dim {
                Dimension::Two => &COLS_2D,
                Dimension::Three => &COLS_3D,
            };
            let mut cols = base.to_vec();
            cols.push("at_boundary");
            let mut t = Table::new(search_meta("global-opt", search, &[("lambda_tol", lt)]), &cols);
            let mut row = phase_row(&g.point);
            row.push(Cell::flag(g.at_boundary));
            t.push(row);
            let mut o = Outcome::new(t);
            o.notes.push(format!(
                "optimum at λ = {} ({}){}",
                table::fmt_num(g.lambda),
                g.point.label,
                if g.at_boundary { ", on the boundary of the searched range" } else { "" }
            ));
            Ok(o)
        }
        Command::Classify { lattice, .. } => {
            let l = parse::lattice(lattice)?;
            let label = match &l.family {
                Some(p) => classify(p)?,
                None if l.lattice.dim() == 3 => {
                    let (l1, _) = minimal_vectors(&l.lattice)?;
                    classify_gram_3d(&(l.lattice.gram() / (l1 * l1)))?
                }
                None => {
                    return Err(CliError::Usage(
                        "classify needs family2d:t, family3d:t,theta,phi or a 3D lattice".into(),
                    ))
                }
            };
            let mut t = Table::new(meta("classify", None, &[]), &["lattice", "label"]);
            t.push(vec![Cell::text(lattice), Cell::text(label.name())]);
            Ok(Outcome::new(t))
        }
    }
}

/// Bond class given by the lattice's own minimal vectors.
fn own_class(l: &Lattice) -> Result<BondConstraint, CliError> {
    let (l1, m) = minimal_vectors(l)?;
    Ok(BondConstraint::new(m, l1)?)
}

fn profile_chart(grid: &[f64], f: &PotentialSpec, opts: &SweepOptions) -> Result<String, CliError> {
    use lattice_core::family::{family_energy, FamilyPoint2D, T_RANGE};
    let mut picks = vec![grid[0], grid[grid.len() / 2], grid[grid.len() - 1]];
    picks.dedup();
    let mut series = Vec::new();
    for l in picks {
        let pts = (0..=100)
            .map(|i| {
                let t = T_RANGE.0 + (T_RANGE.1 - T_RANGE.0) * i as f64 / 100.0;
                Ok((t, family_energy(&FamilyPoint2D { t }.gram(), l, f, opts.tol)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        series.push(Series { name: format!("λ = {}", table::fmt_num(l)), points: pts });
    }
    Ok(Chart {
        title: format!("Energy over the 2D family, {f}"),
        x_label: "t (rad)".into(),
        y_label: "energy".into(),
        series,
        y_ticks: None,
        steps: false,
    }
    .render())
}

fn output_args(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Energy { output, .. }
        | Command::Theta { output, .. }
        | Command::Zeta { output, .. }
        | Command::Shells { output, .. }
        | Command::Eutaxy { output, .. }
        | Command::Critical { output, .. }
        | Command::Hessian { output, .. }
        | Command::Threshold { output, .. }
        | Command::Sweep2d { output, .. }
        | Command::Sweep3d { output, .. }
        | Command::Transitions { output, .. }
        | Command::GlobalOpt { output, .. }
        | Command::Classify { output, .. } => output,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        _ => flag,
    };
    match n {
        Some(0) => Err(CliError::Usage("thread count must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(0),
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<Option<CliError>, CliError> {
    let oa = output_args(&cli.command);
    let format = Format::parse(&oa.format)?;
    let threads = thread_count(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let outcome = pool.install(|| execute(&cli.command))?;

    let mut text = human(&outcome.table);
    for n in &outcome.notes {
        text.push_str(n);
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = &oa.out {
        write_file(path, &outcome.table.encode(format)?)?;
    }
    for (path, svg) in &outcome.svgs {
        write_file(path, svg)?;
    }
    Ok(outcome.partial_failure)
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code; output goes to the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(shown.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(shown.as_bytes());
                    1
                }
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(None) => 0,
        Ok(Some(e)) => {
            let _ = writeln!(err, "error: some grid points failed: {e}");
            e.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
