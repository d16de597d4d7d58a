//! Turns `(g, alpha, epsilon)` into concrete construction parameters
//! `(x, eta, delta, q, k, p)`, checks the finite-`g` side conditions with
//! directed rounding, and produces a certified upper bound on
//! `Cr(g, floor(g^(1+alpha)))`.
//!
//! Side conditions come in two roles. `Bound` rows are what the certified
//! bound rests on: the surface embeds, `k` is admissible, `m` is certified
//! and the family has more than `m` curves. `Chain` rows are the extra
//! inequalities used to relax the bound towards its asymptotic form; at desk
//! scale they typically fail and are reported rather than enforced.

use std::fmt;
use std::str::FromStr;

use dashu_int::ops::BitTest;
use dashu_int::UBig;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial_exact;
use crate::entropy::{binary_entropy_interval, objective_interval, solve_entropy_minimum, symmetric_constant, EntropySolution};
use crate::error::{Error, Result};
use crate::family::embedding_check;
use crate::precision::{digits_to_bits, power_floor, CertifiedFloor, Interval, Rational, DEFAULT_DIGITS, MAX_ESCALATIONS};
use crate::report::{opt_sig15, sig15, ubig_string};

/// Geometric steps per halving on the `eta` grid.
const ETA_STEPS_PER_HALVING: i32 = 8;
const ETA_GRID_STEPS: i32 = 64;
/// Halvings tried for `eta` past the geometric grid, and for `delta`.
const MAX_HALVINGS: i32 = 1000;
const DELTA_START: f64 = 0.25;

pub const BJP_UPPER: f64 = 2.25;
pub const BJP_LOWER: f64 = 1.0 / 257.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Optimized,
    Symmetric,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Optimized => "optimized",
            Mode::Symmetric => "symmetric",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimized" => Ok(Mode::Optimized),
            "symmetric" => Ok(Mode::Symmetric),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}; expected optimized or symmetric"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionPlan {
    pub g: u64,
    pub alpha: Rational,
    pub epsilon: Rational,
    pub mode: Mode,
    /// `x`, `eta` and `delta` are the exact binary values used in every check.
    pub x: f64,
    pub eta: f64,
    pub delta: f64,
    pub q: u64,
    /// `ceil((1/H(x) + eta) alpha ln g)`.
    pub q_formula: u64,
    /// False when the ceiling could not be separated from an integer.
    pub q_formula_certified: bool,
    /// True when `q` was enlarged past `q_formula` by the search.
    pub q_searched: bool,
    pub k: u64,
    /// Two odd integers were equally close to `x q`; the smaller was taken.
    pub k_tie: bool,
    /// `k` is the odd integer nearest to `x q` rather than another
    /// admissible value chosen by the search.
    pub k_nearest: bool,
    pub p: u64,
    pub m: CertifiedFloor,
    #[serde(rename = "M", with = "ubig_string")]
    pub family_size: UBig,
    pub digits: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionRole {
    Bound,
    Chain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    pub name: String,
    pub role: ConditionRole,
    pub inequality: String,
    #[serde(with = "sig15")]
    pub lhs: f64,
    #[serde(with = "sig15")]
    pub rhs: f64,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideConditionReport {
    pub conditions: Vec<SideCondition>,
    /// All `Bound` rows hold: the certified bound is valid.
    pub overall_feasible: bool,
    /// Every row holds, including the `Chain` rows.
    pub chain_complete: bool,
    pub digits: u32,
}

impl SideConditionReport {
    fn new(conditions: Vec<SideCondition>, digits: u32) -> Self {
        let overall_feasible = conditions
            .iter()
            .filter(|c| c.role == ConditionRole::Bound)
            .all(|c| c.verdict);
        let chain_complete = conditions.iter().all(|c| c.verdict);
        SideConditionReport { conditions, overall_feasible, chain_complete, digits }
    }

    pub fn get(&self, name: &str) -> Option<&SideCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub q_start: u64,
    pub q_end: u64,
    /// Largest `q` allowed, `floor(delta g)` (or `q_start` if that is larger).
    pub q_limit: u64,
    pub found: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub plan: ConstructionPlan,
    pub report: SideConditionReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub search: Option<SearchSummary>,
}

impl PlanOutcome {
    pub fn feasible(&self) -> bool {
        self.report.overall_feasible
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationCheck {
    /// `m delta >= 1`, the hypothesis of the relaxation step.
    pub applicable: bool,
    /// `crossing_bound <= (1+delta) 4k m^2 / (p-1)`.
    pub holds: bool,
    #[serde(with = "sig15")]
    pub relaxed_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBound {
    /// `ceil(4k m (m-1) M / ((p-1)(M-1)))`.
    #[serde(with = "ubig_string")]
    pub crossing_bound: UBig,
    /// Upper end of `crossing_bound / (alpha^2 g^(1+2alpha) (ln g)^2)`.
    #[serde(with = "sig15")]
    pub leading_constant: f64,
    #[serde(with = "sig15")]
    pub leading_constant_lower: f64,
    /// `C* + epsilon`.
    #[serde(with = "sig15")]
    pub target_constant: f64,
    /// `1/(ln 2)^2`.
    #[serde(with = "sig15")]
    pub baseline_symmetric: f64,
    #[serde(with = "sig15")]
    pub baseline_bjp: f64,
    #[serde(with = "sig15")]
    pub bjp_lower_constant: f64,
    pub below_target: bool,
    pub below_symmetric: bool,
    pub below_bjp: bool,
    pub above_bjp_lower: bool,
    pub relaxation: RelaxationCheck,
    /// `M >= m + 1`, so that `M/(M-1) <= 1 + 1/m`.
    pub subset_factor_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub g: u64,
    pub feasible: bool,
    pub q: Option<u64>,
    pub k: Option<u64>,
    pub p: Option<u64>,
    #[serde(with = "opt_sig15")]
    pub leading_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub feasible_rows: usize,
    /// Leading constants never increase along the feasible rows.
    pub weakly_decreasing: bool,
    #[serde(with = "opt_sig15")]
    pub final_leading_constant: Option<f64>,
    /// Maximum over the last third of the feasible rows.
    #[serde(with = "opt_sig15")]
    pub max_last_third: Option<f64>,
    #[serde(with = "sig15")]
    pub target_constant: f64,
    pub final_within_target: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub alpha: Rational,
    pub epsilon: Rational,
    pub mode: Mode,
    pub rows: Vec<ConvergenceRow>,
    pub trend: TrendSummary,
}

/// Largest `eta` on a decreasing grid with
/// `2x (1/H(x) + eta)^2 <= 2x/H(x)^2 + epsilon/4` under outward rounding.
///
/// The grid starts at the closed-form boundary
/// `sqrt((2x/H^2 + epsilon/4) / (2x)) - 1/H` rounded down and steps by
/// `2^(-1/8)` for 64 steps, then halves.
pub fn choose_eta(x: f64, epsilon: &Rational, digits: u32) -> Result<f64> {
    check_ratio(x)?;
    check_positive("epsilon", epsilon)?;
    let bits = digits_to_bits(digits);
    let (two_x, inv_h) = ratio_terms(x, bits)?;
    let rhs = eta_rhs(&two_x, &inv_h, epsilon, bits);
    let boundary = (&rhs / &two_x).sqrt()? - &inv_h;
    let mut eta0 = boundary.lo_f64();
    if eta0 <= 0.0 {
        eta0 = boundary.hi_f64() / 2.0;
    }
    for i in 0..=ETA_GRID_STEPS + MAX_HALVINGS {
        let eta = if i <= ETA_GRID_STEPS {
            eta0 * 2f64.powf(-f64::from(i) / f64::from(ETA_STEPS_PER_HALVING))
        } else {
            eta0 * 2f64.powi(-(ETA_GRID_STEPS / ETA_STEPS_PER_HALVING) - (i - ETA_GRID_STEPS))
        };
        if eta > 0.0 && eta_lhs(&two_x, &inv_h, eta, bits).certainly_le(&rhs) {
            return Ok(eta);
        }
    }
    Err(Error::Optimality(format!("no eta > 0 found for x = {x}, epsilon = {epsilon}")))
}

/// Largest `delta` in `{1/4, 1/8, ...}` with
/// `(1+d)(2+4d)(x+d)(1/H(x) + eta + d)^2 <= 2x (1/H(x) + eta)^2 + epsilon/4`.
pub fn choose_delta(x: f64, eta: f64, epsilon: &Rational, digits: u32) -> Result<f64> {
    check_ratio(x)?;
    check_positive("epsilon", epsilon)?;
    let bits = digits_to_bits(digits);
    let (two_x, inv_h) = ratio_terms(x, bits)?;
    let rhs = delta_rhs(&two_x, &inv_h, eta, epsilon, bits);
    let mut delta = DELTA_START;
    for _ in 0..MAX_HALVINGS {
        if delta_lhs(x, &inv_h, eta, delta, bits).certainly_le(&rhs) {
            return Ok(delta);
        }
        delta /= 2.0;
    }
    Err(Error::Optimality(format!("no delta > 0 found for x = {x}, eta = {eta}")))
}

fn check_ratio(x: f64) -> Result<()> {
    if x > 0.0 && x <= 0.5 {
        Ok(())
    } else {
        Err(Error::Domain { function: "planner", value: x, domain: "(0, 1/2]" })
    }
}

fn check_positive(name: &str, v: &Rational) -> Result<()> {
    if v.is_zero() {
        Err(Error::InvalidArgument(format!("{name} must be > 0")))
    } else {
        Ok(())
    }
}

fn ratio_terms(x: f64, bits: usize) -> Result<(Interval, Interval)> {
    let xi = Interval::from_f64(x, bits);
    let inv_h = binary_entropy_interval(&xi)?.recip();
    Ok((Interval::from_u64(2, bits) * xi, inv_h))
}

fn quarter(epsilon: &Rational, bits: usize) -> Interval {
    Interval::from_rational(epsilon, bits) / Interval::from_u64(4, bits)
}

fn eta_lhs(two_x: &Interval, inv_h: &Interval, eta: f64, bits: usize) -> Interval {
    two_x * (inv_h + Interval::from_f64(eta, bits)).square()
}

fn eta_rhs(two_x: &Interval, inv_h: &Interval, epsilon: &Rational, bits: usize) -> Interval {
    two_x * inv_h.square() + quarter(epsilon, bits)
}

fn delta_lhs(x: f64, inv_h: &Interval, eta: f64, delta: f64, bits: usize) -> Interval {
    let d = Interval::from_f64(delta, bits);
    let one = Interval::from_u64(1, bits);
    let a = &one + &d;
    let b = Interval::from_u64(2, bits) + Interval::from_u64(4, bits) * &d;
    let c = Interval::from_f64(x, bits) + &d;
    let s = (inv_h + Interval::from_f64(eta, bits) + &d).square();
    a * b * c * s
}

fn delta_rhs(two_x: &Interval, inv_h: &Interval, eta: f64, epsilon: &Rational, bits: usize) -> Interval {
    eta_lhs(two_x, inv_h, eta, bits) + quarter(epsilon, bits)
}

/// Enclosure of `(1/H(x) + eta) alpha ln g`.
fn q_formula_value(x: f64, eta: f64, alpha: &Rational, g: u64, bits: usize) -> Result<Interval> {
    let (_, inv_h) = ratio_terms(x, bits)?;
    let ln_g = Interval::from_u64(g, bits).ln()?;
    Ok((inv_h + Interval::from_f64(eta, bits)) * Interval::from_rational(alpha, bits) * ln_g)
}

/// Certified ceiling of the `q` formula, escalating precision while the
/// enclosure straddles an integer. Falls back to the upper ceiling, flagged.
fn q_formula(x: f64, eta: f64, alpha: &Rational, g: u64, digits: u32) -> Result<(u64, bool)> {
    let mut last = 0;
    for attempt in 0..=MAX_ESCALATIONS {
        let value = q_formula_value(x, eta, alpha, g, digits_to_bits(digits << attempt))?;
        let (lo, hi) = value.ceil_bounds();
        let hi = u64::try_from(hi).map_err(|_| Error::InvalidArgument("q formula out of range".into()))?;
        if lo == hi.into() {
            return Ok((hi, true));
        }
        last = hi;
    }
    Ok((last, false))
}

/// Odd integer nearest to `x q`; on a tie the smaller one.
pub fn choose_k(x: f64, q: u64) -> Result<(u64, bool)> {
    let bits = 192;
    let xq = Interval::from_f64(x, bits) * Interval::from_u64(q, bits);
    let (floor, _) = xq.floor_bounds();
    let floor = i128::try_from(floor).map_err(|_| Error::KRange { k: i64::MAX, q })?;
    let (below, above) = if floor % 2 != 0 { (floor, floor + 2) } else { (floor - 1, floor + 1) };
    let at = |v: i128| Interval::from_ibig(&v.into(), bits);
    let d_below = &xq - at(below);
    let d_above = at(above) - &xq;
    let (k, tie) = if d_below.certainly_lt(&d_above) {
        (below, false)
    } else if d_above.certainly_lt(&d_below) {
        (above, false)
    } else {
        (below, true)
    };
    if k < 1 || k > i128::from(q) {
        return Err(Error::KRange { k: k.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64, q });
    }
    Ok((k as u64, tie))
}

/// Every odd `k` in `[1, q]` with `|k - x q| <= 2`, nearest first and the
/// smaller of two equally near values first.
pub fn admissible_ks(x: f64, q: u64) -> Vec<u64> {
    let bits = 192;
    let xq = Interval::from_f64(x, bits) * Interval::from_u64(q, bits);
    let two = Interval::from_u64(2, bits);
    let mut ks: Vec<(u64, Interval)> = (1..=q)
        .step_by(2)
        .filter_map(|k| {
            let d = Interval::from_u64(k, bits) - &xq;
            let d = if d.certainly_negative() { -d } else { d };
            d.certainly_le(&two).then_some((k, d))
        })
        .collect();
    ks.sort_by(|(ka, da), (kb, db)| {
        if da.certainly_lt(db) {
            std::cmp::Ordering::Less
        } else if db.certainly_lt(da) {
            std::cmp::Ordering::Greater
        } else {
            ka.cmp(kb)
        }
    });
    ks.into_iter().map(|(k, _)| k).collect()
}

/// Re-evaluates every side condition of `plan` at `digits` significant digits.
pub fn evaluate_side_conditions(plan: &ConstructionPlan, digits: u32) -> Result<SideConditionReport> {
    let bits = digits_to_bits(digits);
    let (two_x, inv_h) = ratio_terms(plan.x, bits)?;
    let int = |v: u64| Interval::from_u64(v, bits);
    let big = |v: &UBig| Interval::from_ubig(v, bits);
    let delta = Interval::from_f64(plan.delta, bits);
    let ln_g = int(plan.g).ln()?;
    let m = &plan.m.value;
    let big_m = &plan.family_size;
    let mut rows = Vec::new();
    let mut push = |name: &str, role, inequality: &str, lhs: f64, rhs: f64, verdict: bool| {
        rows.push(SideCondition {
            name: name.to_string(),
            role,
            inequality: inequality.to_string(),
            lhs,
            rhs,
            verdict,
        });
    };
    use ConditionRole::{Bound, Chain};

    let embedding = embedding_check(plan.p, plan.q, plan.g);
    push(
        "embedding",
        Bound,
        "|chi(Sigma(p,q))| <= 2g - 2",
        embedding.abs_euler as f64,
        embedding.capacity as f64,
        embedding.embeds,
    );

    let xq = Interval::from_f64(plan.x, bits) * int(plan.q);
    let offset = int(plan.k) - &xq;
    let abs_offset = if offset.certainly_negative() { -offset } else { offset };
    push(
        "k_window",
        Bound,
        "k odd, 1 <= k <= q, |k - x q| <= 2",
        abs_offset.hi_f64(),
        2.0,
        plan.k % 2 == 1 && plan.k >= 1 && plan.k <= plan.q && abs_offset.certainly_le(&int(2)),
    );

    let recheck = power_floor(plan.g, &plan.alpha, digits.max(20))?;
    push(
        "m_certified",
        Bound,
        "m = floor(g^(1+alpha)), certified",
        big(m).mid_f64(),
        big(&recheck.value).mid_f64(),
        plan.m.is_certified() && recheck.is_certified() && recheck.value == *m,
    );

    push(
        "family_exceeds_m",
        Bound,
        "M > m",
        big(big_m).mid_f64(),
        big(m).mid_f64(),
        big_m > m,
    );

    let eta_l = eta_lhs(&two_x, &inv_h, plan.eta, bits);
    let eta_r = eta_rhs(&two_x, &inv_h, &plan.epsilon, bits);
    push(
        "eta_choice",
        Chain,
        "2x (1/H(x) + eta)^2 <= 2x/H(x)^2 + epsilon/4",
        eta_l.hi_f64(),
        eta_r.lo_f64(),
        eta_l.certainly_le(&eta_r),
    );

    let delta_l = delta_lhs(plan.x, &inv_h, plan.eta, plan.delta, bits);
    let delta_r = delta_rhs(&two_x, &inv_h, plan.eta, &plan.epsilon, bits);
    push(
        "delta_choice",
        Chain,
        "(1+d)(2+4d)(x+d)(1/H(x) + eta + d)^2 <= 2x (1/H(x) + eta)^2 + epsilon/4",
        delta_l.hi_f64(),
        delta_r.lo_f64(),
        delta_l.certainly_le(&delta_r),
    );

    let formula = q_formula_value(plan.x, plan.eta, &plan.alpha, plan.g, bits)?;
    push(
        "q_at_least_formula",
        Chain,
        "q >= (1/H(x) + eta) alpha ln g",
        plan.q as f64,
        formula.hi_f64(),
        formula.certainly_le(&int(plan.q)),
    );

    let dg = &delta * int(plan.g);
    push("q_le_delta_g", Chain, "q <= delta g", plan.q as f64, dg.lo_f64(), int(plan.q).certainly_le(&dg));

    push(
        "p_minus_one_ge_g_over_q",
        Chain,
        "p - 1 >= g / q",
        (plan.p - 1) as f64,
        plan.g as f64 / plan.q as f64,
        u128::from(plan.p - 1) * u128::from(plan.q) >= u128::from(plan.g),
    );

    let m_delta = big(m) * &delta;
    push(
        "m_ge_inverse_delta",
        Chain,
        "m >= 1/delta",
        big(m).mid_f64(),
        1.0 / plan.delta,
        int(1).certainly_le(&m_delta),
    );

    let q_delta = int(plan.q) * &delta;
    push(
        "q_ge_two_over_delta",
        Chain,
        "q >= 2/delta",
        plan.q as f64,
        2.0 / plan.delta,
        int(2).certainly_le(&q_delta),
    );

    let dal = &delta * Interval::from_rational(&plan.alpha, bits) * &ln_g;
    push(
        "delta_alpha_ln_g_ge_one",
        Chain,
        "1 <= delta alpha ln g",
        1.0,
        dal.lo_f64(),
        int(1).certainly_le(&dal),
    );

    Ok(SideConditionReport::new(rows, digits))
}

#[derive(Clone, Copy, Debug)]
struct Choices {
    x: f64,
    eta: f64,
    delta: f64,
    q_formula: u64,
    q_formula_certified: bool,
}

/// Caches the entropy minimizer and the working precision.
#[derive(Clone, Debug)]
pub struct Planner {
    solution: EntropySolution,
    digits: u32,
}

impl Planner {
    pub fn new(digits: u32) -> Result<Self> {
        Ok(Self::with_solution(solve_entropy_minimum(1e-12)?, digits))
    }

    pub fn with_solution(solution: EntropySolution, digits: u32) -> Self {
        Planner { solution, digits: digits.max(20) }
    }

    pub fn solution(&self) -> &EntropySolution {
        &self.solution
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// `x0` in optimized mode, `1/2` in symmetric mode. Since `f(x0)` is the
    /// minimum, `f(x0) <= C* + epsilon/4` for every `epsilon > 0`.
    pub fn choose_ratio(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Optimized => self.solution.x0,
            Mode::Symmetric => 0.5,
        }
    }

    /// Upper end of `C* + epsilon`.
    pub fn target_constant(&self, epsilon: &Rational) -> Result<f64> {
        let bits = digits_to_bits(self.digits);
        let c = objective_interval(&Interval::from_f64(self.solution.x0, bits))?;
        Ok((c + Interval::from_rational(epsilon, bits)).hi_f64())
    }

    fn choices(&self, g: u64, alpha: &Rational, epsilon: &Rational, mode: Mode) -> Result<Choices> {
        if g < 3 {
            return Err(Error::InvalidArgument(format!("g must be >= 3, got {g}")));
        }
        check_positive("alpha", alpha)?;
        check_positive("epsilon", epsilon)?;
        let x = self.choose_ratio(mode);
        let eta = choose_eta(x, epsilon, self.digits)?;
        let delta = choose_delta(x, eta, epsilon, self.digits)?;
        let (q_formula, q_formula_certified) = q_formula(x, eta, alpha, g, self.digits)?;
        Ok(Choices { x, eta, delta, q_formula, q_formula_certified })
    }

    #[allow(clippy::too_many_arguments)]
    fn plan_with_q(
        &self,
        g: u64,
        alpha: &Rational,
        epsilon: &Rational,
        mode: Mode,
        c: &Choices,
        q: u64,
        k_override: Option<u64>,
        m: &CertifiedFloor,
    ) -> Result<ConstructionPlan> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!(
                "q = {q} < 2 at g = {g}, alpha = {alpha}; the surface Sigma(p,q) needs q >= 2"
            )));
        }
        let (nearest, tie) = choose_k(c.x, q)?;
        let (k, k_tie) = match k_override {
            Some(k) => (k, tie && k == nearest),
            None => (nearest, tie),
        };
        let p = (2 * u128::from(g) - 2) / u128::from(q - 1) + 1;
        let p = u64::try_from(p).expect("p <= 2g - 1");
        let family_size = UBig::from(p - 1) * binomial_exact(q, k as i64);
        Ok(ConstructionPlan {
            g,
            alpha: *alpha,
            epsilon: *epsilon,
            mode,
            x: c.x,
            eta: c.eta,
            delta: c.delta,
            q,
            q_formula: c.q_formula,
            q_formula_certified: c.q_formula_certified,
            q_searched: q != c.q_formula,
            k,
            k_tie,
            k_nearest: k == nearest,
            p,
            m: m.clone(),
            family_size,
            digits: self.digits,
        })
    }

    fn outcome(&self, plan: ConstructionPlan) -> Result<PlanOutcome> {
        let report = evaluate_side_conditions(&plan, self.digits)?;
        Ok(PlanOutcome { plan, report, search: None })
    }

    /// The plan with `q` given by the formula.
    pub fn build_plan(&self, g: u64, alpha: &Rational, epsilon: &Rational, mode: Mode) -> Result<PlanOutcome> {
        let c = self.choices(g, alpha, epsilon, mode)?;
        let m = power_floor(g, alpha, self.digits)?;
        self.outcome(self.plan_with_q(g, alpha, epsilon, mode, &c, c.q_formula, None, &m)?)
    }

    /// Searches `q = q_formula, q_formula + 1, ...` up to `delta g`, and at
    /// each `q` every admissible odd `k` (nearest to `x q` first), for the
    /// first plan that is feasible. On failure the formula plan is returned
    /// with its report.
    pub fn feasibility_search(&self, g: u64, alpha: &Rational, epsilon: &Rational, mode: Mode) -> Result<PlanOutcome> {
        let c = self.choices(g, alpha, epsilon, mode)?;
        let m = power_floor(g, alpha, self.digits)?;
        let q_start = c.q_formula;
        let first = self.outcome(self.plan_with_q(g, alpha, epsilon, mode, &c, q_start, None, &m)?)?;
        let q_limit = delta_g_floor(c.delta, g).max(q_start);
        if first.feasible() {
            return Ok(PlanOutcome {
                search: Some(SearchSummary { q_start, q_end: q_start, q_limit, found: true }),
                ..first
            });
        }
        for q in q_start..=q_limit {
            for k in admissible_ks(c.x, q) {
                if q == q_start && k == first.plan.k {
                    continue;
                }
                let plan = self.plan_with_q(g, alpha, epsilon, mode, &c, q, Some(k), &m)?;
                if plan.family_size <= m.value {
                    continue;
                }
                let candidate = self.outcome(plan)?;
                if candidate.feasible() {
                    return Ok(PlanOutcome {
                        search: Some(SearchSummary { q_start, q_end: q, q_limit, found: true }),
                        ..candidate
                    });
                }
            }
        }
        Ok(PlanOutcome {
            search: Some(SearchSummary { q_start, q_end: q_limit, q_limit, found: false }),
            ..first
        })
    }

    pub fn plan(&self, g: u64, alpha: &Rational, epsilon: &Rational, mode: Mode, search: bool) -> Result<PlanOutcome> {
        if search {
            self.feasibility_search(g, alpha, epsilon, mode)
        } else {
            self.build_plan(g, alpha, epsilon, mode)
        }
    }

    pub fn certified_bound(&self, outcome: &PlanOutcome) -> Result<CertifiedBound> {
        if !outcome.feasible() {
            let failed: Vec<_> = outcome
                .report
                .conditions
                .iter()
                .filter(|c| c.role == ConditionRole::Bound && !c.verdict)
                .map(|c| c.name.as_str())
                .collect();
            return Err(Error::InfeasiblePlan(format!("failed: {}", failed.join(", "))));
        }
        let plan = &outcome.plan;
        let m = &plan.m.value;
        let big_m = &plan.family_size;
        let k4 = UBig::from(4 * plan.k);
        let p1 = UBig::from(plan.p - 1);
        let num = &k4 * m * (m - UBig::ONE) * big_m;
        let den = &p1 * (big_m - UBig::ONE);
        let crossing_bound = (&num + &den - UBig::ONE) / &den;

        let bits = digits_to_bits(self.digits).max(crossing_bound.bit_len() + 64);
        let int = |v: u64| Interval::from_u64(v, bits);
        let big = |v: &UBig| Interval::from_ubig(v, bits);
        let alpha = Interval::from_rational(&plan.alpha, bits);
        let ln_g = int(plan.g).ln()?;
        let exponent = int(1) + int(2) * &alpha;
        let scale = alpha.square() * (exponent * &ln_g).exp() * ln_g.square();
        let lc = big(&crossing_bound) / scale;

        let delta = Interval::from_f64(plan.delta, bits);
        let relaxed = (int(1) + &delta) * big(&k4) * big(m).square() / big(&p1);
        let applicable = int(1).certainly_le(&(big(m) * &delta));
        let relaxation = RelaxationCheck {
            applicable,
            holds: big(&crossing_bound).certainly_le(&relaxed),
            relaxed_bound: relaxed.hi_f64(),
        };

        let symmetric = symmetric_constant(bits);
        let target = self.target_constant(&plan.epsilon)?;
        Ok(CertifiedBound {
            leading_constant: lc.hi_f64(),
            leading_constant_lower: lc.lo_f64(),
            target_constant: target,
            baseline_symmetric: symmetric.mid_f64(),
            baseline_bjp: BJP_UPPER,
            bjp_lower_constant: BJP_LOWER,
            below_target: lc.hi_f64() <= target,
            below_symmetric: lc.certainly_lt(&symmetric),
            below_bjp: lc.certainly_lt(&Interval::from_rational(&Rational::new(9, 4)?, bits)),
            above_bjp_lower: Interval::from_rational(&Rational::new(1, 257)?, bits).certainly_lt(&lc),
            relaxation,
            subset_factor_ok: *big_m >= m + UBig::ONE,
            crossing_bound,
        })
    }

    /// One row per genus; infeasible rows are kept and flagged.
    pub fn convergence_study(
        &self,
        alpha: &Rational,
        epsilon: &Rational,
        g_list: &[u64],
        mode: Mode,
        search: bool,
    ) -> Result<ConvergenceStudy> {
        if g_list.is_empty() || g_list.windows(2).any(|w| w[0] >= w[1]) || g_list[0] < 3 {
            return Err(Error::InvalidArgument("g list must be nonempty, increasing and >= 3".into()));
        }
        let mut rows = Vec::with_capacity(g_list.len());
        for &g in g_list {
            rows.push(self.study_row(g, alpha, epsilon, mode, search)?);
        }
        let target = self.target_constant(epsilon)?;
        let feasible: Vec<f64> = rows.iter().filter_map(|r| r.leading_constant).collect();
        let last_third = feasible.len().div_ceil(3);
        let trend = TrendSummary {
            feasible_rows: feasible.len(),
            weakly_decreasing: feasible.windows(2).all(|w| w[1] <= w[0]),
            final_leading_constant: feasible.last().copied(),
            max_last_third: feasible[feasible.len() - last_third..].iter().copied().reduce(f64::max),
            target_constant: target,
            final_within_target: feasible.last().map(|&c| c <= target),
        };
        Ok(ConvergenceStudy { alpha: *alpha, epsilon: *epsilon, mode, rows, trend })
    }

    /// A single study row. Planning errors that only mean "no plan at this
    /// genus" (`q < 2`, `k` out of range) become flagged rows.
    pub fn study_row(&self, g: u64, alpha: &Rational, epsilon: &Rational, mode: Mode, search: bool) -> Result<ConvergenceRow> {
        let outcome = match self.plan(g, alpha, epsilon, mode, search) {
            Ok(o) => o,
            Err(e @ (Error::InvalidArgument(_) | Error::KRange { .. })) if g >= 3 => {
                return Ok(ConvergenceRow {
                    g,
                    feasible: false,
                    q: None,
                    k: None,
                    p: None,
                    leading_constant: None,
                    note: Some(e.to_string()),
                })
            }
            Err(e) => return Err(e),
        };
        let plan = &outcome.plan;
        let (leading_constant, note) = if outcome.feasible() {
            (Some(self.certified_bound(&outcome)?.leading_constant), None)
        } else {
            (None, Some("infeasible: M <= m".to_string()))
        };
        Ok(ConvergenceRow {
            g,
            feasible: outcome.feasible(),
            q: Some(plan.q),
            k: Some(plan.k),
            p: Some(plan.p),
            leading_constant,
            note,
        })
    }
}

impl Default for Planner {
    fn default() -> Self {
        Planner::new(DEFAULT_DIGITS).expect("entropy minimum solves at the default tolerance")
    }
}

/// `floor(delta g)`, exact for the binary `delta` values the planner uses.
fn delta_g_floor(delta: f64, g: u64) -> u64 {
    let bits = 192;
    let (lo, _) = (Interval::from_f64(delta, bits) * Interval::from_u64(g, bits)).floor_bounds();
    u64::try_from(lo).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn planner() -> Planner {
        Planner::new(DEFAULT_DIGITS).unwrap()
    }

    #[test]
    fn ratio_by_mode() {
        let pl = planner();
        assert!((pl.choose_ratio(Mode::Optimized) - 0.2414851418).abs() < 1e-9);
        assert_eq!(pl.choose_ratio(Mode::Symmetric), 0.5);
    }

    #[test]
    fn eta_at_half() {
        let eta = choose_eta(0.5, &r("1"), 40).unwrap();
        let boundary = (1.0 / std::f64::consts::LN_2.powi(2) + 0.25).sqrt() - 1.0 / std::f64::consts::LN_2;
        assert!((boundary - 0.0842).abs() < 1e-4);
        assert!((eta - boundary).abs() < 1e-12 * boundary, "{eta} vs {boundary}");
    }

    #[test]
    fn eta_shrinks_with_epsilon() {
        let mut last = f64::INFINITY;
        for eps in ["1", "0.1", "0.01", "0.001", "1e-6"] {
            let eta = choose_eta(0.3, &r(eps), 40).unwrap();
            assert!(eta > 0.0 && eta < last);
            last = eta;
        }
    }

    #[test]
    fn delta_is_admissible() {
        let eta = choose_eta(0.5, &r("1"), 40).unwrap();
        let delta = choose_delta(0.5, eta, &r("1"), 40).unwrap();
        assert!(delta > 0.0 && delta < 0.5);
        assert_eq!(delta.log2().fract(), 0.0);
        let bits = digits_to_bits(80);
        let (two_x, inv_h) = ratio_terms(0.5, bits).unwrap();
        let lhs = delta_lhs(0.5, &inv_h, eta, delta, bits);
        assert!(lhs.certainly_le(&delta_rhs(&two_x, &inv_h, eta, &r("1"), bits)));
        let doubled = delta_lhs(0.5, &inv_h, eta, 2.0 * delta, bits);
        assert!(!doubled.certainly_le(&delta_rhs(&two_x, &inv_h, eta, &r("1"), bits)) || delta == DELTA_START);
    }

    #[test]
    fn k_selection() {
        assert_eq!(choose_k(0.5, 10).unwrap(), (5, false));
        assert_eq!(choose_k(0.5, 8).unwrap(), (3, true));
        assert_eq!(choose_k(0.25, 9).unwrap(), (3, false));
        assert_eq!(choose_k(0.1, 3).unwrap(), (1, false));
        assert_eq!(choose_k(0.5, 2).unwrap(), (1, false));
    }

    #[test]
    fn admissible_k_order() {
        assert_eq!(admissible_ks(0.5, 8), vec![3, 5]);
        assert_eq!(admissible_ks(0.25, 8), vec![1, 3]);
        assert_eq!(admissible_ks(0.5, 10), vec![5, 3, 7]);
        for q in 2..40 {
            let ks = admissible_ks(0.2414851418, q);
            assert!(!ks.is_empty());
            assert_eq!(ks[0], choose_k(0.2414851418, q).unwrap().0);
        }
    }

    #[test]
    fn desk_scale_plan_is_feasible() {
        let pl = planner();
        let formula = pl.build_plan(10_000, &r("0.2"), &r("0.5"), Mode::Optimized).unwrap();
        assert_eq!((formula.plan.q, formula.plan.k), (4, 1));
        assert!(!formula.feasible());
        let out = pl.feasibility_search(10_000, &r("0.2"), &r("0.5"), Mode::Optimized).unwrap();
        let plan = &out.plan;
        assert_eq!((plan.q, plan.k, plan.p), (6, 3, 4000));
        assert!(!plan.k_nearest);
        assert_eq!(plan.m.value, UBig::from(63095u32));
        assert_eq!(plan.family_size, UBig::from(79980u32));
        assert!(out.feasible());
        assert!(!out.report.chain_complete);
        assert!(u128::from(plan.p - 1) * u128::from(plan.q - 1) <= 2 * 10_000 - 2);
        let bound = pl.certified_bound(&out).unwrap();
        assert!(bound.subset_factor_ok);
        assert!(bound.above_bjp_lower);
        assert!(bound.leading_constant_lower <= bound.leading_constant);
        assert_eq!(bound.baseline_bjp, 2.25);
    }

    #[test]
    fn large_alpha_at_small_genus_is_infeasible() {
        let pl = planner();
        let out = pl.build_plan(100, &r("2"), &r("0.1"), Mode::Optimized).unwrap();
        assert!(!out.feasible());
        assert!(!out.report.get("family_exceeds_m").unwrap().verdict);
        assert!(matches!(pl.certified_bound(&out), Err(Error::InfeasiblePlan(_))));
    }

    #[test]
    fn million_genus_verdicts() {
        let pl = planner();
        let quarter = pl.build_plan(1_000_000, &r("0.25"), &r("0.5"), Mode::Optimized).unwrap();
        assert_eq!((quarter.plan.q, quarter.plan.k), (7, 1));
        assert!(!quarter.feasible());
        let searched = pl.feasibility_search(1_000_000, &r("0.25"), &r("0.5"), Mode::Optimized).unwrap();
        assert!(searched.feasible());
        let one = pl.build_plan(1_000_000, &r("1"), &r("0.5"), Mode::Optimized).unwrap();
        assert_eq!(one.plan.m.value, UBig::from(10u8).pow(12));
        assert_eq!(one.feasible(), one.plan.family_size > one.plan.m.value);
    }

    #[test]
    fn search_is_idempotent_on_feasible_plans() {
        let pl = planner();
        let a = pl.build_plan(1_000, &r("0.1"), &r("0.5"), Mode::Optimized).unwrap();
        assert!(a.feasible());
        let b = pl.feasibility_search(1_000, &r("0.1"), &r("0.5"), Mode::Optimized).unwrap();
        assert_eq!(a.plan, b.plan);
        assert!(b.search.unwrap().found);
    }

    #[test]
    fn search_returns_minimal_feasible_q() {
        let pl = planner();
        for (g, a) in [(1_000_000, "1"), (10_000, "0.2"), (1_000_000, "0.2")] {
            let out = pl.feasibility_search(g, &r(a), &r("0.5"), Mode::Optimized).unwrap();
            assert!(out.feasible());
            let c = pl.choices(g, &r(a), &r("0.5"), Mode::Optimized).unwrap();
            let m = out.plan.m.clone();
            for q in c.q_formula..out.plan.q {
                for k in admissible_ks(c.x, q) {
                    let before = pl.plan_with_q(g, &r(a), &r("0.5"), Mode::Optimized, &c, q, Some(k), &m).unwrap();
                    assert!(before.family_size <= m.value, "g={g} q={q} k={k}");
                }
            }
        }
    }

    #[test]
    fn side_conditions_stable_under_doubled_precision() {
        let pl = planner();
        let out = pl.build_plan(10_000, &r("0.2"), &r("0.5"), Mode::Symmetric).unwrap();
        let again = evaluate_side_conditions(&out.plan, 2 * pl.digits()).unwrap();
        for (a, b) in out.report.conditions.iter().zip(&again.conditions) {
            assert_eq!((a.name.as_str(), a.verdict), (b.name.as_str(), b.verdict));
        }
    }

    #[test]
    fn invalid_inputs() {
        let pl = planner();
        assert!(pl.build_plan(2, &r("0.2"), &r("0.5"), Mode::Optimized).is_err());
        assert!(pl.build_plan(100, &r("0"), &r("0.5"), Mode::Optimized).is_err());
        assert!(pl.build_plan(100, &r("0.2"), &r("0"), Mode::Optimized).is_err());
        assert!("sideways".parse::<Mode>().is_err());
    }

    #[test]
    fn study_flags_rows() {
        let pl = planner();
        let study = pl
            .convergence_study(&r("0.2"), &r("0.5"), &[1_000, 10_000, 100_000], Mode::Symmetric, true)
            .unwrap();
        assert_eq!(study.rows.len(), 3);
        assert!(study.rows.iter().all(|row| row.feasible == row.leading_constant.is_some()));
        assert!(pl.convergence_study(&r("0.2"), &r("0.5"), &[100, 10], Mode::Symmetric, true).is_err());
    }
}
