//! Report envelopes, command payloads and the CSV sweep format.
//!
//! Reals are written with 15 significant digits and big integers as decimal
//! strings. Every envelope carries the working precision it was produced at.

use std::collections::BTreeMap;
use std::io::Write;

use dashu_int::UBig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::entropy::{objective_interval, solve_entropy_minimum, symmetric_constant};
use crate::error::{Error, Result};
use crate::family::{
    closed_form_pair_bound_sum, distinctness_check, exact_pair_bound_sum, family_size, lemma3_bound,
    surface_topology, FamilySpec,
};
use crate::planner::{CertifiedBound, ConstructionPlan, Mode, Planner, SearchSummary, SideConditionReport, BJP_LOWER, BJP_UPPER};
use crate::precision::{digits_to_bits, Interval, Rational};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Frozen column order of the sweep CSV.
pub const CSV_HEADER: [&str; 10] = [
    "alpha",
    "g",
    "feasible",
    "q",
    "k",
    "p",
    "leading_constant",
    "symmetric_constant",
    "bjp_upper",
    "bjp_lower",
];

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INFEASIBLE: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const CERTIFICATE: i32 = 70;
}

/// Exit status for a failed command.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::Domain { .. }
        | Error::InvalidFamily(_)
        | Error::BudgetExceeded { .. }
        | Error::IdenticalCurves
        | Error::KRange { .. }
        | Error::InfeasibleK { .. } => exit::USAGE,
        Error::InfeasiblePlan(_) => exit::INFEASIBLE,
        Error::Bracket { .. }
        | Error::Convergence { .. }
        | Error::Optimality(_)
        | Error::CertificateViolation(_)
        | Error::Topology(_) => exit::CERTIFICATE,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub schema_version: u32,
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: Value,
    pub tool_version: String,
    pub precision_used: u32,
}

impl ReportEnvelope {
    pub fn new<T: Serialize>(
        command: &str,
        inputs: BTreeMap<String, Value>,
        outputs: &T,
        precision_used: u32,
    ) -> Result<Self> {
        Ok(ReportEnvelope {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            outputs: serde_json::to_value(outputs).map_err(|e| Error::InvalidArgument(e.to_string()))?,
            tool_version: TOOL_VERSION.to_string(),
            precision_used,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("bad envelope: {e}")))
    }
}

/// Builds an input map from `(name, value)` pairs.
pub fn inputs<I, K, V>(pairs: I) -> BTreeMap<String, Value>
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<Value>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub line: String,
    /// `C* < 1/(ln 2)^2 < 9/4`, decided on enclosures.
    pub strict_chain: bool,
    /// `1 - C*/(9/4)`.
    #[serde(with = "sig15")]
    pub reduction_vs_bjp: f64,
    /// `1 - C*/(1/(ln 2)^2)`.
    #[serde(with = "sig15")]
    pub reduction_vs_symmetric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsPayload {
    #[serde(with = "sig15")]
    pub x0: f64,
    #[serde(with = "sig15")]
    pub c_star: f64,
    #[serde(with = "sig15")]
    pub f_half: f64,
    #[serde(with = "sig15")]
    pub residual: f64,
    #[serde(with = "sig15")]
    pub tolerance: f64,
    #[serde(with = "sig15")]
    pub bjp_upper: f64,
    pub hierarchy: Hierarchy,
}

pub fn constants_payload(tolerance: f64, digits: u32) -> Result<ConstantsPayload> {
    let sol = solve_entropy_minimum(tolerance)?;
    let bits = digits_to_bits(digits);
    let c = objective_interval(&Interval::from_f64(sol.x0, bits))?;
    let sym = symmetric_constant(bits);
    let bjp = Interval::from_rational(&Rational::new(9, 4)?, bits);
    let strict_chain = c.certainly_lt(&sym) && sym.certainly_lt(&bjp);
    Ok(ConstantsPayload {
        x0: sol.x0,
        c_star: sol.c_star,
        f_half: sol.f_half,
        residual: sol.residual,
        tolerance,
        bjp_upper: BJP_UPPER,
        hierarchy: Hierarchy {
            line: "C* < 1/(ln 2)^2 < 9/4".to_string(),
            strict_chain,
            reduction_vs_bjp: 1.0 - sol.c_star / BJP_UPPER,
            reduction_vs_symmetric: 1.0 - sol.c_star / sol.f_half,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanPayload {
    pub feasible: bool,
    pub plan: ConstructionPlan,
    pub side_conditions: SideConditionReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub search: Option<SearchSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<CertifiedBound>,
    pub notes: Vec<String>,
}

pub fn plan_payload(
    planner: &Planner,
    g: u64,
    alpha: &Rational,
    epsilon: &Rational,
    mode: Mode,
    search: bool,
) -> Result<PlanPayload> {
    let outcome = planner.plan(g, alpha, epsilon, mode, search)?;
    let bound = if outcome.feasible() { Some(planner.certified_bound(&outcome)?) } else { None };
    let mut notes = Vec::new();
    if outcome.plan.k_tie {
        notes.push("k tie: two odd integers equally close to x q; the smaller was taken".to_string());
    }
    if !outcome.plan.q_formula_certified {
        notes.push("q formula ceiling not separated from an integer; upper ceiling used".to_string());
    }
    if outcome.plan.q_searched {
        notes.push(format!("q enlarged from {} to {} by feasibility search", outcome.plan.q_formula, outcome.plan.q));
    }
    if !outcome.report.chain_complete {
        notes.push("some chain side conditions fail at this g; the certified bound does not depend on them".to_string());
    }
    Ok(PlanPayload {
        feasible: outcome.feasible(),
        plan: outcome.plan,
        side_conditions: outcome.report,
        search: outcome.search,
        bound,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPayload {
    pub p: u32,
    pub q: u32,
    pub k: u32,
    #[serde(rename = "M", with = "ubig_string")]
    pub family_size: UBig,
    pub euler_characteristic: i64,
    pub genus: u64,
    pub boundary_components: u64,
    #[serde(with = "ubig_string")]
    pub exact_pair_bound_sum: UBig,
    #[serde(with = "ubig_string")]
    pub closed_form_pair_bound_sum: UBig,
    #[serde(with = "ubig_string")]
    pub lemma3_bound: UBig,
    /// `exact_pair_bound_sum / lemma3_bound`.
    #[serde(with = "sig15")]
    pub ratio: f64,
    pub distinct: bool,
}

pub fn family_payload(p: u32, q: u32, k: u32, cap: u64) -> Result<FamilyPayload> {
    let spec = FamilySpec::new(p, q, k)?;
    let size = family_size(&spec);
    let exact = exact_pair_bound_sum(&spec, cap)?;
    let bound = lemma3_bound(&spec);
    let topo = surface_topology(u64::from(p), u64::from(q))?;
    let bits = 128;
    let ratio = (Interval::from_ubig(&exact, bits) / Interval::from_ubig(&bound, bits)).mid_f64();
    Ok(FamilyPayload {
        p,
        q,
        k,
        family_size: size,
        euler_characteristic: topo.euler_characteristic,
        genus: topo.genus,
        boundary_components: topo.boundary_components,
        closed_form_pair_bound_sum: closed_form_pair_bound_sum(&spec),
        exact_pair_bound_sum: exact,
        lemma3_bound: bound,
        ratio,
        distinct: distinctness_check(&spec, cap)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `alpha` exactly as given on input.
    pub alpha: String,
    pub g: u64,
    pub feasible: bool,
    pub q: Option<u64>,
    pub k: Option<u64>,
    pub p: Option<u64>,
    #[serde(with = "opt_sig15")]
    pub leading_constant: Option<f64>,
    #[serde(with = "sig15")]
    pub symmetric_constant: f64,
    #[serde(with = "sig15")]
    pub bjp_upper: f64,
    #[serde(with = "sig15")]
    pub bjp_lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPayload {
    pub rows: Vec<SweepRow>,
}

/// One row per `(alpha, g)`, alpha-major in input order.
pub fn sweep_payload(
    planner: &Planner,
    alphas: &[String],
    g_list: &[u64],
    epsilon: &Rational,
    mode: Mode,
    search: bool,
) -> Result<SweepPayload> {
    if alphas.is_empty() || g_list.is_empty() {
        return Err(Error::InvalidArgument("sweep needs nonempty alpha and g lists".into()));
    }
    let symmetric = symmetric_constant(digits_to_bits(planner.digits())).mid_f64();
    let mut rows = Vec::with_capacity(alphas.len() * g_list.len());
    for text in alphas {
        let alpha: Rational = text.parse()?;
        for &g in g_list {
            let row = planner.study_row(g, &alpha, epsilon, mode, search)?;
            rows.push(SweepRow {
                alpha: text.clone(),
                g,
                feasible: row.feasible,
                q: row.q,
                k: row.k,
                p: row.p,
                leading_constant: row.leading_constant,
                symmetric_constant: symmetric,
                bjp_upper: BJP_UPPER,
                bjp_lower: BJP_LOWER,
            });
        }
    }
    Ok(SweepPayload { rows })
}

fn csv_real(v: f64) -> String {
    round_sig15(v).to_string()
}

fn csv_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.alpha.clone(),
            r.g.to_string(),
            r.feasible.to_string(),
            csv_opt(r.q),
            csv_opt(r.k),
            csv_opt(r.p),
            csv_opt(r.leading_constant.map(csv_real)),
            csv_real(r.symmetric_constant),
            csv_real(r.bjp_upper),
            csv_real(r.bjp_lower),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))?;
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub mod ubig_string {
    use dashu_int::UBig;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(v: &UBig, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<UBig, D::Error> {
        let s = String::deserialize(d)?;
        UBig::from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// Rounds to 15 significant digits, the precision reals are reported at.
pub fn round_sig15(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.14e}").parse().expect("formatted f64 parses")
}

pub mod sig15 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round_sig15(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d)
    }
}

pub mod opt_sig15 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&super::round_sig15(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}
