//! Special functions needed by the lattice sums: the upper incomplete gamma
//! function for arbitrary real order (negative orders appear in the dual
//! half of the theta splitting) and the volume of the unit ball.

use libm::{erfc, tgamma as gamma};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere in `d` dimensions.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Complete gamma function for positive arguments.
pub fn gamma_fn(a: f64) -> f64 {
    gamma(a)
}

/// Upper incomplete gamma function Γ(a, x) for real `a` and `x > 0`.
///
/// Orders with `2a` integral go through erfc/exp/E₁ ladders, which is
/// the hot path for Lennard-Jones exponents; everything else uses the
/// series or the Legendre continued fraction.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    assert!(x > 0.0, "upper_gamma requires x > 0, got {x}");
    let twice = 2.0 * a;
    if (twice - twice.round()).abs() < 1e-12 && a.abs() <= 60.0 {
        return ladder(twice.round() as i64, x);
    }
    general(a, x)
}

/// Γ(a, x) / x^a, the kernel of the theta splitting. Computed without
/// forming x^a separately so large negative orders do not overflow.
pub fn scaled_upper_gamma(a: f64, x: f64) -> f64 {
    upper_gamma(a, x) * (-a * x.ln()).exp()
}

fn power_exp(a: f64, x: f64) -> f64 {
    // x^a e^{-x}
    (a * x.ln() - x).exp()
}

/// Γ(k/2, x) by recurrence from Γ(1/2, x) = √π erfc(√x) or from
/// Γ(1, x) = e^{-x} / Γ(0, x) = E₁(x).
fn ladder(twice_a: i64, x: f64) -> f64 {
    let half = twice_a.rem_euclid(2) == 1;
    let a = twice_a as f64 / 2.0;
    if half {
        let mut order = 0.5;
        let mut value = PI.sqrt() * erfc(x.sqrt());
        while order < a - 0.25 {
            value = order * value + power_exp(order, x);
            order += 1.0;
        }
        while order > a + 0.25 {
            order -= 1.0;
            value = (value - power_exp(order, x)) / order;
        }
        value
    } else if twice_a >= 2 {
        let mut order = 1.0;
        let mut value = (-x).exp();
        while order < a - 0.5 {
            value = order * value + power_exp(order, x);
            order += 1.0;
        }
        value
    } else {
        let mut order = 0.0;
        let mut value = exp_integral_e1(x);
        while order > a + 0.5 {
            order -= 1.0;
            value = (value - power_exp(order, x)) / order;
        }
        value
    }
}

fn general(a: f64, x: f64) -> f64 {
    if a > 0.0 {
        if x < a + 1.0 {
            gamma(a) - lower_series(a, x)
        } else {
            continued_fraction(a, x)
        }
    } else if x >= 1.0 {
        continued_fraction(a, x)
    } else {
        // shift into (0, 1] and walk down
        let steps = (-a).floor() as i64 + 1;
        let mut order = a + steps as f64;
        let mut value = general(order, x);
        for _ in 0..steps {
            order -= 1.0;
            value = (value - power_exp(order, x)) / order;
        }
        value
    }
}

/// Lower incomplete gamma γ(a, x) by its power series, a > 0.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * power_exp(a, x)
}

/// Legendre continued fraction for Γ(a, x), modified Lentz evaluation.
fn continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    power_exp(a, x) * h
}

/// Exponential integral E₁(x) = Γ(0, x).
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < EPS * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        continued_fraction(0.0, x)
    }
}
