//! Combinatorial model of the curve family `Gamma(p,q;k)` on the fibre
//! surface `Sigma(p,q)`.
//!
//! Upper vertices `u_0..u_{p-1}` and lower vertices `l_0..l_{q-1}` span
//! `K_{p,q}`. A curve is the boundary of the ribbon subsurface over one
//! consecutive upper pair `(u_i, u_{i+1})` and a `k`-subset of lower
//! vertices; with `k` odd that subsurface is `Sigma(2,k)` and its boundary is
//! connected. Intersections are modeled by the per-pair bounds `0 / 2k / 4k`
//! according to how many upper vertices two curves share.

use std::collections::HashSet;

use dashu_int::UBig;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial_exact;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilySpec {
    p: u32,
    q: u32,
    k: u32,
}

impl FamilySpec {
    pub fn new(p: u32, q: u32, k: u32) -> Result<Self> {
        if p < 2 || q < 2 {
            return Err(Error::InvalidFamily(format!("need p >= 2 and q >= 2, got p = {p}, q = {q}")));
        }
        if k < 1 || k > q {
            return Err(Error::InvalidFamily(format!("need 1 <= k <= q, got k = {k}, q = {q}")));
        }
        if k.is_multiple_of(2) {
            return Err(Error::InvalidFamily(format!("k = {k} is even; the boundary would be disconnected")));
        }
        Ok(FamilySpec { p, q, k })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of consecutive upper pairs, `p - 1`.
    pub fn upper_pairs(&self) -> u32 {
        self.p - 1
    }

    pub fn subsets_per_pair(&self) -> UBig {
        binomial_exact(u64::from(self.q), i64::from(self.k))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveSpec {
    /// Index `i` of the upper pair `(u_i, u_{i+1})`.
    pub upper_pair: u32,
    /// Strictly increasing lower-vertex indices.
    pub lower_subset: Vec<u32>,
}

impl CurveSpec {
    pub fn validate(&self, spec: &FamilySpec) -> Result<()> {
        if self.upper_pair > spec.p - 2 {
            return Err(Error::InvalidFamily(format!("upper pair {} out of range", self.upper_pair)));
        }
        if self.lower_subset.len() != spec.k as usize
            || !self.lower_subset.windows(2).all(|w| w[0] < w[1])
            || self.lower_subset.last().is_some_and(|&v| v >= spec.q)
        {
            return Err(Error::InvalidFamily(format!("bad lower subset {:?}", self.lower_subset)));
        }
        Ok(())
    }

    pub fn upper_vertices(&self) -> [u32; 2] {
        [self.upper_pair, self.upper_pair + 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClass {
    pub shared_upper: u8,
    pub intersection_bound: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceTopology {
    pub euler_characteristic: i64,
    pub boundary_components: u64,
    pub genus: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub embeds: bool,
    /// `|chi(Sigma(p,q))|`.
    pub abs_euler: u128,
    /// `2g - 2`.
    pub capacity: u128,
    /// `2g - 2 - |chi|`, negative when the criterion fails.
    pub slack: i128,
}

/// `M(p,q;k) = (p-1) C(q,k)`.
pub fn family_size(spec: &FamilySpec) -> UBig {
    UBig::from(spec.upper_pairs()) * spec.subsets_per_pair()
}

fn check_budget(spec: &FamilySpec, cap: u64) -> Result<()> {
    let size = family_size(spec);
    if size > UBig::from(cap) {
        return Err(Error::BudgetExceeded { size: size.to_string(), cap });
    }
    Ok(())
}

/// Streams the family, upper pair major and lower subsets in colex order.
#[derive(Clone, Debug)]
pub struct FamilyIter {
    spec: FamilySpec,
    upper_pair: u32,
    subset: Vec<u32>,
    done: bool,
}

impl FamilyIter {
    fn new(spec: FamilySpec) -> Self {
        FamilyIter {
            spec,
            upper_pair: 0,
            subset: (0..spec.k).collect(),
            done: false,
        }
    }

    /// Colex successor of `subset` within `{0..q-1}`; false when exhausted.
    fn advance_subset(&mut self) -> bool {
        let k = self.subset.len();
        let q = self.spec.q;
        for j in 0..k {
            let limit = if j + 1 < k { self.subset[j + 1] } else { q };
            if self.subset[j] + 1 < limit {
                self.subset[j] += 1;
                for (i, v) in self.subset[..j].iter_mut().enumerate() {
                    *v = i as u32;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for FamilyIter {
    type Item = CurveSpec;

    fn next(&mut self) -> Option<CurveSpec> {
        if self.done {
            return None;
        }
        let item = CurveSpec {
            upper_pair: self.upper_pair,
            lower_subset: self.subset.clone(),
        };
        if !self.advance_subset() {
            self.upper_pair += 1;
            self.subset = (0..self.spec.k).collect();
            if self.upper_pair > self.spec.p - 2 {
                self.done = true;
            }
        }
        Some(item)
    }
}

/// All curves of the family; fails when `family_size > cap`.
pub fn enumerate_family(spec: &FamilySpec, cap: u64) -> Result<FamilyIter> {
    check_budget(spec, cap)?;
    Ok(FamilyIter::new(*spec))
}

/// Number of upper vertices two consecutive pairs `i`, `j` have in common.
pub fn shared_upper_vertices(i: u32, j: u32) -> u8 {
    match i.abs_diff(j) {
        0 => 2,
        1 => 1,
        _ => 0,
    }
}

pub fn classify_pair(a: &CurveSpec, b: &CurveSpec, spec: &FamilySpec) -> Result<PairClass> {
    a.validate(spec)?;
    b.validate(spec)?;
    if a == b {
        return Err(Error::IdenticalCurves);
    }
    let shared_upper = shared_upper_vertices(a.upper_pair, b.upper_pair);
    let k = u64::from(spec.k);
    let intersection_bound = match shared_upper {
        0 => 0,
        1 => 2 * k,
        _ => 4 * k,
    };
    Ok(PairClass { shared_upper, intersection_bound })
}

/// Sum of the per-pair intersection bounds over all unordered pairs, by
/// enumerating and classifying every pair.
pub fn exact_pair_bound_sum(spec: &FamilySpec, cap: u64) -> Result<UBig> {
    let curves: Vec<CurveSpec> = enumerate_family(spec, cap)?.collect();
    let mut total: u128 = 0;
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            total += u128::from(classify_pair(a, b, spec)?.intersection_bound);
        }
    }
    Ok(UBig::from(total))
}

/// Closed form of [`exact_pair_bound_sum`]:
/// `(p-1) C(C(q,k), 2) 4k + (p-2) C(q,k)^2 2k`.
pub fn closed_form_pair_bound_sum(spec: &FamilySpec) -> UBig {
    let c = spec.subsets_per_pair();
    let k = UBig::from(spec.k);
    let same_pair = if c >= UBig::from(2u8) {
        &c * (&c - UBig::ONE) / UBig::from(2u8)
    } else {
        UBig::ZERO
    };
    let adjacent = UBig::from(spec.p - 2) * &c * &c;
    UBig::from(spec.upper_pairs()) * same_pair * UBig::from(4u8) * &k + adjacent * UBig::from(2u8) * &k
}

/// `4k M^2 / (p-1)`, an integer because `M = (p-1) C(q,k)`.
pub fn lemma3_bound(spec: &FamilySpec) -> UBig {
    let c = spec.subsets_per_pair();
    UBig::from(4 * spec.k) * UBig::from(spec.upper_pairs()) * &c * &c
}

/// `8k C(q,k)`: the bound on the intersections of one curve with all others.
pub fn per_curve_bound(spec: &FamilySpec) -> UBig {
    UBig::from(8 * spec.k) * spec.subsets_per_pair()
}

/// Euler characteristic, boundary count and genus of `Sigma(p,q)`.
///
/// The boundary is the torus link `T(p,q)`, with `gcd(p,q)` components.
pub fn surface_topology(p: u64, q: u64) -> Result<SurfaceTopology> {
    if p < 2 || q < 2 {
        return Err(Error::InvalidArgument(format!("surface_topology needs p, q >= 2, got ({p}, {q})")));
    }
    let chi = p as i128 + q as i128 - p as i128 * q as i128;
    let b = gcd(p, q) as i128;
    let twice_genus = 2 - chi - b;
    if twice_genus < 0 || twice_genus % 2 != 0 {
        return Err(Error::Topology(format!(
            "2 - chi - b = {twice_genus} is not a nonnegative even number for ({p}, {q})"
        )));
    }
    let euler_characteristic = i64::try_from(chi)
        .map_err(|_| Error::Topology(format!("chi out of range for ({p}, {q})")))?;
    Ok(SurfaceTopology {
        euler_characteristic,
        boundary_components: b as u64,
        genus: (twice_genus / 2) as u64,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Embedding criterion: a bounded surface with `|chi| <= 2g - 2` embeds in
/// the closed genus-`g` surface.
pub fn embedding_check(p: u64, q: u64, g: u64) -> EmbeddingReport {
    let chi = p as i128 + q as i128 - p as i128 * q as i128;
    let abs_euler = chi.unsigned_abs();
    let capacity = (2 * g as u128).saturating_sub(2);
    EmbeddingReport {
        embeds: abs_euler <= capacity,
        abs_euler,
        capacity,
        slack: capacity as i128 - abs_euler as i128,
    }
}

/// Every pair of distinct curves is told apart by some vertex used by one
/// and not the other.
pub fn distinctness_check(spec: &FamilySpec, cap: u64) -> Result<bool> {
    let vertex_sets: Vec<HashSet<(bool, u32)>> = enumerate_family(spec, cap)?
        .map(|c| {
            c.upper_vertices()
                .into_iter()
                .map(|u| (true, u))
                .chain(c.lower_subset.iter().map(|&l| (false, l)))
                .collect()
        })
        .collect();
    for (i, a) in vertex_sets.iter().enumerate() {
        for b in &vertex_sets[i + 1..] {
            if a.symmetric_difference(b).next().is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
