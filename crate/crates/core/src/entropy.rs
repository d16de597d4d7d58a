//! The entropy objective `f(x) = 2x / H(x)^2` and its minimization.
//!
//! `H` is the binary entropy in nats. The minimizer `x0` of `f` on `(0, 1/2]`
//! is the root of `x ln x - (1+x) ln(1-x)` inside `(0, 1/2)`; `C* = f(x0)`.
//! Every function has a double-precision form and an [`Interval`] form for
//! arbitrary working precision.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{digits_to_bits, Interval};
use crate::roots;

/// Initial bracket for the critical-equation root.
pub const SOLVER_BRACKET: (f64, f64) = (0.1, 0.4);

/// `objective` refuses arguments below this; it diverges at 0.
pub const MIN_OBJECTIVE_ARG: f64 = 1e-12;

/// Step of the global-minimality grid scan over `(0, 1/2]`.
pub const GRID_STEP: f64 = 1e-4;

/// Tightest tolerance the double-precision solver accepts.
pub const MIN_TOLERANCE: f64 = 1e-15;

/// Largest accepted tolerance.
pub const MAX_TOLERANCE: f64 = 1e-3;

/// Binary precision for the solver's certification steps.
const CERT_BITS: usize = 256;

fn check_open_unit(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { function, value: x, domain: "(0, 1)" })
    }
}

fn check_objective_domain(function: &'static str, x: f64) -> Result<()> {
    if (MIN_OBJECTIVE_ARG..=0.5).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { function, value: x, domain: "[1e-12, 1/2]" })
    }
}

/// `H(x) = -x ln x - (1-x) ln(1-x)`, in nats.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_open_unit("binary_entropy", x)?;
    Ok(-x * x.ln() - (1.0 - x) * (-x).ln_1p())
}

/// `H'(x) = ln((1-x)/x)`.
pub fn entropy_derivative(x: f64) -> Result<f64> {
    check_open_unit("entropy_derivative", x)?;
    Ok((-x).ln_1p() - x.ln())
}

pub fn objective(x: f64) -> Result<f64> {
    check_objective_domain("objective", x)?;
    let h = binary_entropy(x)?;
    Ok(2.0 * x / (h * h))
}

/// `f'(x) = 2/H^2 - 4x H'/H^3`.
pub fn objective_derivative(x: f64) -> Result<f64> {
    check_objective_domain("objective_derivative", x)?;
    let h = binary_entropy(x)?;
    let dh = entropy_derivative(x)?;
    Ok(2.0 / (h * h) - 4.0 * x * dh / (h * h * h))
}

/// `x ln x - (1+x) ln(1-x)`; vanishes exactly at interior critical points of `f`.
pub fn critical_residual(x: f64) -> Result<f64> {
    check_open_unit("critical_residual", x)?;
    Ok(x * x.ln() - (1.0 + x) * (-x).ln_1p())
}

/// `H(x) - 2x H'(x)`, the unsimplified form of the critical equation.
///
/// Algebraically equal to [`critical_residual`]; evaluated through `H` and
/// `H'` as an independent route to the same roots.
pub fn stationarity_residual(x: f64) -> Result<f64> {
    check_open_unit("stationarity_residual", x)?;
    Ok(binary_entropy(x)? - 2.0 * x * entropy_derivative(x)?)
}

fn check_open_unit_interval(function: &'static str, x: &Interval) -> Result<()> {
    let one = Interval::from_u64(1, x.precision());
    if x.certainly_positive() && (&one - x).certainly_positive() {
        Ok(())
    } else {
        Err(Error::Domain { function, value: x.mid_f64(), domain: "(0, 1)" })
    }
}

pub fn binary_entropy_interval(x: &Interval) -> Result<Interval> {
    check_open_unit_interval("binary_entropy", x)?;
    let one = Interval::from_u64(1, x.precision());
    let y = &one - x;
    Ok(-(x * x.ln()?) - &y * y.ln()?)
}

pub fn objective_interval(x: &Interval) -> Result<Interval> {
    let h = binary_entropy_interval(x)?;
    let two = Interval::from_u64(2, x.precision());
    Ok(two * x / h.square())
}

pub fn critical_residual_interval(x: &Interval) -> Result<Interval> {
    check_open_unit_interval("critical_residual", x)?;
    let one = Interval::from_u64(1, x.precision());
    Ok(x * x.ln()? - (&one + x) * (&one - x).ln()?)
}

/// `1/(ln 2)^2`, the value of `f` at `1/2`.
pub fn symmetric_constant(bits: usize) -> Interval {
    let ln2 = Interval::from_u64(2, bits).ln().expect("2 > 0");
    ln2.square().recip()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySolution {
    /// Minimizer of `f` on `(0, 1/2]`.
    pub x0: f64,
    pub c_star: f64,
    pub f_half: f64,
    /// `critical_residual` at `x0`.
    pub residual: f64,
    /// Requested absolute tolerance on `x0` and `c_star`.
    pub precision: f64,
}

/// Locates `x0` and `C*` to within `tolerance`.
///
/// Brent's method runs on the critical residual over [`SOLVER_BRACKET`]. The
/// result is then certified at 256 bits: the residual must take opposite
/// signs at `x0 - tolerance` and `x0 + tolerance`, and `f` must be larger at
/// both points than at `x0`. A grid scan with step [`GRID_STEP`] rules out a
/// lower value elsewhere in `(0, 1/2]`.
pub fn solve_entropy_minimum(tolerance: f64) -> Result<EntropySolution> {
    if !(MIN_TOLERANCE..=MAX_TOLERANCE).contains(&tolerance) {
        return Err(Error::Domain {
            function: "solve_entropy_minimum",
            value: tolerance,
            domain: "[1e-15, 1e-3]",
        });
    }
    let (lo, hi) = SOLVER_BRACKET;
    let root = roots::brent(|x| critical_residual(x).unwrap_or(f64::NAN), lo, hi, tolerance / 4.0, 200)?;
    let x0 = root.x;

    let bits = CERT_BITS;
    let at = |v: f64| Interval::from_f64(v, bits);
    let left = critical_residual_interval(&(at(x0) - at(tolerance)))?;
    let right = critical_residual_interval(&(at(x0) + at(tolerance)))?;
    let straddles = matches!(
        (left.sign(), right.sign()),
        (Some(Ordering::Less), Some(Ordering::Greater)) | (Some(Ordering::Greater), Some(Ordering::Less))
    );
    if !straddles {
        return Err(Error::Optimality(format!(
            "critical residual does not change sign across x0 = {x0} +/- {tolerance}"
        )));
    }

    let f0 = objective_interval(&at(x0))?;
    let f_left = objective_interval(&(at(x0) - at(tolerance)))?;
    let f_right = objective_interval(&(at(x0) + at(tolerance)))?;
    if !(f0.certainly_lt(&f_left) && f0.certainly_lt(&f_right)) {
        return Err(Error::Optimality(format!(
            "f(x0 +/- {tolerance}) does not exceed f(x0) at x0 = {x0}"
        )));
    }

    let c_star = f0.mid_f64();
    grid_scan(c_star)?;

    Ok(EntropySolution {
        x0,
        c_star,
        f_half: symmetric_constant(bits).mid_f64(),
        residual: critical_residual_interval(&at(x0))?.mid_f64(),
        precision: tolerance,
    })
}

/// Errors if any grid point of `(0, 1/2]` has a lower objective than `c_star`.
fn grid_scan(c_star: f64) -> Result<()> {
    let per_unit = (1.0 / GRID_STEP).round();
    let steps = (0.5 * per_unit) as u32;
    for i in 1..=steps {
        let x = f64::from(i) / per_unit;
        let fx = objective(x)?;
        if fx < c_star - 1e-12 {
            return Err(Error::Optimality(format!(
                "grid point x = {x} has f = {fx} below the interior critical value {c_star}"
            )));
        }
    }
    Ok(())
}

/// Rigorous enclosures of `x0` and `C*` at `digits` significant digits.
#[derive(Clone, Debug)]
pub struct MinimizerEnclosure {
    pub x0: Interval,
    pub c_star: Interval,
    pub digits: u32,
}

/// Interval bisection on the critical residual down to a bracket of width
/// about `10^-digits`, then `C*` as the interval image of that bracket.
pub fn enclose_minimizer(digits: u32) -> Result<MinimizerEnclosure> {
    let bits = digits_to_bits(digits) + 16;
    let seed = solve_entropy_minimum(1e-12)?;
    let pad = 1e-10;
    let mut lo = Interval::from_f64(seed.x0 - pad, bits);
    let mut hi = Interval::from_f64(seed.x0 + pad, bits);
    let sign_lo = critical_residual_interval(&lo)?.sign();
    let sign_hi = critical_residual_interval(&hi)?.sign();
    if sign_lo.is_none() || sign_hi.is_none() || sign_lo == sign_hi {
        return Err(Error::Optimality("seed bracket for bisection lost its sign change".into()));
    }
    let half = Interval::from_f64(0.5, bits);
    let target = 10f64.powi(-(digits.min(300) as i32));
    while (&hi - &lo).hi_f64() > target {
        let mid = (&lo + &hi) * &half;
        match critical_residual_interval(&mid)?.sign() {
            Some(s) if s == sign_lo.unwrap() => lo = mid,
            Some(Ordering::Equal) => {
                lo = mid.clone();
                hi = mid;
                break;
            }
            Some(_) => hi = mid,
            None => break,
        }
    }
    let x0 = Interval::hull(&lo, &hi);
    let c_star = objective_interval(&x0)?;
    Ok(MinimizerEnclosure { x0, c_star, digits })
}
