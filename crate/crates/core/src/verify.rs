//! Invariant suites run by the `verify` command.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_exact, entropy_lower_bound};
use crate::entropy::{
    binary_entropy, critical_residual, objective, solve_entropy_minimum, stationarity_residual,
};
use crate::error::{Error, Result};
use crate::family::{closed_form_pair_bound_sum, exact_pair_bound_sum, lemma3_bound, FamilySpec};
use crate::planner::{evaluate_side_conditions, Mode, Planner, BJP_LOWER};
use crate::precision::Rational;

/// Failures listed per suite before truncation.
const MAX_LISTED_FAILURES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Quick => "quick",
            Level::Full => "full",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::InvalidArgument(format!("unknown level {s:?}; expected quick or full"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Flips the pair-bound comparison so the suite must fail. Used to exercise
    /// the failure path end to end.
    pub negate_pair_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub range: String,
    pub checks: u64,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: Level,
    pub suites: Vec<SuiteResult>,
    pub all_passed: bool,
}

struct Suite {
    name: &'static str,
    range: String,
    checks: u64,
    failures: Vec<String>,
    failed: usize,
}

impl Suite {
    fn new(name: &'static str, range: String) -> Self {
        Suite { name, range, checks: 0, failures: Vec::new(), failed: 0 }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_LISTED_FAILURES {
                self.failures.push(what());
            }
        }
    }

    fn result<T>(&mut self, r: Result<T>, what: impl FnOnce() -> String) -> Option<T> {
        match r {
            Ok(v) => {
                self.check(true, String::new);
                Some(v)
            }
            Err(e) => {
                self.check(false, || format!("{}: {e}", what()));
                None
            }
        }
    }

    fn finish(mut self) -> SuiteResult {
        if self.failed > self.failures.len() {
            self.failures.push(format!("... {} more", self.failed - self.failures.len()));
        }
        SuiteResult {
            name: self.name.to_string(),
            range: self.range,
            checks: self.checks,
            passed: self.failed == 0,
            failures: self.failures,
        }
    }
}

pub fn run_verify(level: Level) -> VerifyReport {
    run_verify_with(level, VerifyOptions::default())
}

pub fn run_verify_with(level: Level, options: VerifyOptions) -> VerifyReport {
    let (q_max, p_max) = match level {
        Level::Quick => (30, 4),
        Level::Full => (60, 6),
    };
    let suites = vec![
        entropy_identities(),
        stirling_sweep(q_max),
        pair_bound_sweep(p_max, 8, options.negate_pair_bound),
        planner_chain(level),
    ];
    let all_passed = suites.iter().all(|s| s.passed);
    VerifyReport { level, suites, all_passed }
}

fn entropy_identities() -> SuiteResult {
    let mut s = Suite::new("entropy_identities", "x in (0, 1/2] grid of 999 points".into());
    let Some(sol) = s.result(solve_entropy_minimum(1e-12), || "solver".into()) else {
        return s.finish();
    };
    s.check(sol.residual.abs() <= 1e-9, || format!("critical residual at x0 = {}", sol.residual));
    s.check(
        (sol.f_half - 1.0 / std::f64::consts::LN_2.powi(2)).abs() < 1e-12,
        || format!("f(1/2) = {}", sol.f_half),
    );
    s.check(sol.c_star < sol.f_half && sol.f_half < 2.25, || "C* < 1/(ln 2)^2 < 9/4".into());
    for i in 1..1000 {
        let x = f64::from(i) / 2000.0;
        let (Ok(h), Ok(h_mirror), Ok(r1), Ok(r2), Ok(f)) = (
            binary_entropy(x),
            binary_entropy(1.0 - x),
            critical_residual(x),
            stationarity_residual(x),
            objective(x),
        ) else {
            s.check(false, || format!("evaluation failed at x = {x}"));
            continue;
        };
        s.check((h - h_mirror).abs() <= 1e-14, || format!("H(x) != H(1-x) at {x}"));
        s.check((r1 - r2).abs() <= 1e-12 * (1.0 + r1.abs()), || format!("residual forms differ at {x}"));
        s.check(f >= sol.c_star - 1e-12, || format!("f({x}) = {f} below C*"));
    }
    s.finish()
}

fn stirling_sweep(q_max: u64) -> SuiteResult {
    let mut s = Suite::new("stirling_certificates", format!("2 <= q <= {q_max}, 1 <= k <= q-1"));
    for q in 2..=q_max {
        for k in 1..q {
            if let Some(cert) = s.result(entropy_lower_bound(q, k), || format!("({q}, {k})")) {
                s.check(cert.holds() && cert.exact_value == binomial_exact(q, k as i64), || {
                    format!("({q}, {k}) lower bound exceeds C(q,k)")
                });
            }
        }
    }
    s.finish()
}

fn pair_bound_sweep(p_max: u32, q_max: u32, negate: bool) -> SuiteResult {
    let mut s = Suite::new("pair_bound_sweep", format!("2 <= p <= {p_max}, 2 <= q <= {q_max}, odd k <= q"));
    for p in 2..=p_max {
        for q in 2..=q_max {
            for k in (1..=q).step_by(2) {
                let Some(spec) = s.result(FamilySpec::new(p, q, k), || format!("spec ({p},{q},{k})")) else {
                    continue;
                };
                let Some(exact) = s.result(exact_pair_bound_sum(&spec, 1 << 20), || format!("({p},{q},{k})")) else {
                    continue;
                };
                let bound = lemma3_bound(&spec);
                let within = if negate { exact > bound } else { exact <= bound };
                s.check(within, || format!("({p},{q},{k}): sum {exact} vs bound {bound}"));
                s.check(closed_form_pair_bound_sum(&spec) == exact, || format!("({p},{q},{k}): closed form"));
            }
        }
    }
    s.finish()
}

fn planner_chain(level: Level) -> SuiteResult {
    let gs: &[u64] = match level {
        Level::Quick => &[10_000, 100_000],
        Level::Full => &[10_000, 100_000, 1_000_000],
    };
    let alphas = ["0.2", "0.5"];
    let mut s = Suite::new("planner_chain", format!("g in {gs:?}, alpha in {alphas:?}, epsilon = 0.5, both modes"));
    let Some(planner) = s.result(Planner::new(40), || "planner".into()) else {
        return s.finish();
    };
    let epsilon: Rational = "0.5".parse().expect("literal");
    for mode in [Mode::Optimized, Mode::Symmetric] {
        for a in alphas {
            let alpha: Rational = a.parse().expect("literal");
            for &g in gs {
                let tag = format!("{mode} g={g} alpha={a}");
                let Some(out) = s.result(planner.feasibility_search(g, &alpha, &epsilon, mode), || tag.clone()) else {
                    continue;
                };
                let plan = &out.plan;
                s.check(
                    u128::from(plan.p - 1) * u128::from(plan.q - 1) <= 2 * u128::from(g) - 2,
                    || format!("{tag}: (p-1)(q-1) > 2g-2"),
                );
                s.check(plan.k % 2 == 1, || format!("{tag}: k even"));
                for name in ["eta_choice", "delta_choice", "embedding", "k_window", "m_certified"] {
                    s.check(out.report.get(name).is_some_and(|c| c.verdict), || format!("{tag}: {name}"));
                }
                if let Some(again) = s.result(evaluate_side_conditions(plan, 80), || format!("{tag}: recheck")) {
                    let same = again
                        .conditions
                        .iter()
                        .zip(&out.report.conditions)
                        .all(|(a, b)| a.name == b.name && a.verdict == b.verdict);
                    s.check(same, || format!("{tag}: verdicts change at doubled precision"));
                }
                if out.feasible() {
                    s.check(plan.family_size > plan.m.value, || format!("{tag}: M <= m"));
                    if let Some(b) = s.result(planner.certified_bound(&out), || format!("{tag}: bound")) {
                        s.check(b.subset_factor_ok, || format!("{tag}: M < m + 1"));
                        s.check(!b.relaxation.applicable || b.relaxation.holds, || format!("{tag}: relaxation"));
                        s.check(b.leading_constant_lower > BJP_LOWER, || format!("{tag}: below 1/257"));
                    }
                }
            }
        }
    }
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_passes() {
        let report = run_verify(Level::Quick);
        for suite in &report.suites {
            assert!(suite.passed, "{}: {:?}", suite.name, suite.failures);
            assert!(suite.checks > 0);
        }
        assert!(report.all_passed);
    }

    #[test]
    fn negated_check_fails() {
        let report = run_verify_with(Level::Quick, VerifyOptions { negate_pair_bound: true });
        assert!(!report.all_passed);
        let sweep = report.suites.iter().find(|s| s.name == "pair_bound_sweep").unwrap();
        assert!(!sweep.passed);
        assert!(sweep.failures.len() <= MAX_LISTED_FAILURES + 1);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("full".parse::<Level>().unwrap(), Level::Full);
        assert!("medium".parse::<Level>().is_err());
    }
}
