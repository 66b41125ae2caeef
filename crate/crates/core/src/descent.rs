//! Projected gradient descent with Barzilai–Borwein steps and Armijo
//! backtracking, and golden-section search.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    /// Stop when ‖x − P(x − ∇f)‖ falls below this.
    pub gtol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor of the backtracking.
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Largest move ‖x_new − x‖ per iteration.
    pub max_move: f64,
    /// Stop after this many consecutive steps whose decrease is below
    /// evaluation noise (≈1e-15 relative).
    pub stall_steps: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { gtol: 1e-10, max_iter: 10_000, armijo: 1e-4, shrink: 0.5, max_backtracks: 60, max_move: 0.25, stall_steps: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Projected-gradient norm at the returned point.
    pub pg_norm: f64,
    /// Why the iteration stopped.
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    /// No step passed the Armijo test: the decrease is below evaluation noise.
    LineSearch,
    /// Many consecutive steps decreased f by less than rounding.
    Stalled,
    MaxIter,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises `f` over a convex set given by its Euclidean projection.
/// `f` returns the value and the gradient.
pub fn projected_descent<F, P>(x0: &[f64], mut f: F, project: P, opts: &DescentOptions) -> Result<DescentResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let step_to = |x: &[f64], g: &[f64], a: f64| -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - a * gi).collect();
        project(&y)
    };
    let mut x = project(x0);
    let (mut fx, mut g) = f(&x)?;
    let mut alpha = {
        let gn = norm(&g);
        if gn > 0.0 {
            0.05 / gn
        } else {
            1.0
        }
    };
    let mut iterations = 0;
    let mut stalled = 0;
    loop {
        let pg = norm(&diff(&x, &step_to(&x, &g, 1.0)));
        if pg < opts.gtol {
            return Ok(DescentResult { x, value: fx, iterations, pg_norm: pg, stop: StopReason::Gradient });
        }
        if iterations >= opts.max_iter {
            return Ok(DescentResult { x, value: fx, iterations, pg_norm: pg, stop: StopReason::MaxIter });
        }
        iterations += 1;

        let gn = norm(&g);
        alpha = alpha.min(opts.max_move / gn.max(1e-300));
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let xn = step_to(&x, &g, alpha);
            let s = diff(&xn, &x);
            if norm(&s) == 0.0 {
                break;
            }
            let (fn_, gn_) = f(&xn)?;
            if fn_ <= fx + opts.armijo * dot(&g, &s) {
                accepted = Some((xn, fn_, gn_, s));
                break;
            }
            alpha *= opts.shrink;
        }
        let Some((xn, fn_, gn_, s)) = accepted else {
            return Ok(DescentResult { x, value: fx, iterations, pg_norm: pg, stop: StopReason::LineSearch });
        };
        if fx - fn_ <= 1e-15 * fx.abs().max(1e-300) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        let y = diff(&gn_, &g);
        let sy = dot(&s, &y);
        alpha = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * alpha };
        x = xn;
        fx = fn_;
        g = gn_;
        if stalled >= opts.stall_steps {
            let pg = norm(&diff(&x, &step_to(&x, &g, 1.0)));
            return Ok(DescentResult { x, value: fx, iterations, pg_norm: pg, stop: StopReason::Stalled });
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of a unimodal function on [lo, hi] until the
/// bracket is narrower than `tol`. Returns (bracket, best x, f(best x)).
pub fn golden_section<F>(lo: f64, hi: f64, tol: f64, mut f: F) -> Result<((f64, f64), f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo <= hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bad golden-section interval [{lo}, {hi}] / tol {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut steps = 0;
    while b - a > tol {
        steps += 1;
        if steps > 500 {
            return Err(Error::NotConverged(format!("golden section stalled at width {}", b - a)));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(((a, b), x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_in_a_box() {
        // minimum of (x-2)² + 3(y+1)² over [-1,1]² is at (1, -1)
        let f = |x: &[f64]| Ok(((x[0] - 2.0).powi(2) + 3.0 * (x[1] + 1.0).powi(2), vec![2.0 * (x[0] - 2.0), 6.0 * (x[1] + 1.0)]));
        let p = |y: &[f64]| y.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let r = projected_descent(&[0.0, 0.5], f, p, &DescentOptions::default()).unwrap();
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.x[1], -1.0, epsilon = 1e-9);
    }

    #[test]
    fn rosenbrock_unconstrained() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            Ok((
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)],
            ))
        };
        let r = projected_descent(&[-1.2, 1.0], f, |y: &[f64]| y.to_vec(), &DescentOptions::default()).unwrap();
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn golden_finds_minimum() {
        let ((a, b), x, _) = golden_section(0.0, 3.0, 1e-10, |x| Ok((x - 1.234).powi(2))).unwrap();
        assert!(b - a <= 1e-10);
        assert_relative_eq!(x, 1.234, epsilon = 1e-9);
        assert!(golden_section(1.0, 0.0, 1e-3, Ok).is_err());
    }
}
