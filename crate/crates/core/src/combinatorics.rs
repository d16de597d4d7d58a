//! Exact binomial coefficients and the explicit Stirling lower bound
//! `C(q,k) >= (2 pi)^(-1/2) sqrt(q/(k(q-k))) exp(q H(k/q)) exp(-1/(12k) - 1/(12(q-k)))`.

use dashu_int::ops::Gcd;
use dashu_int::UBig;

use crate::error::{Error, Result};
use crate::precision::{digits_to_bits, Interval};

/// Working precision for certificates, in significant digits.
pub const CERTIFICATE_DIGITS: u32 = 40;

/// `C(q, k)`, zero outside `0 <= k <= q`.
///
/// Multiplicative formula; each step divides out the common factor of the
/// running product and the next denominator before multiplying, so every
/// intermediate is itself an integer.
pub fn binomial_exact(q: u64, k: i64) -> UBig {
    if k < 0 || k as u64 > q {
        return UBig::ZERO;
    }
    let k = (k as u64).min(q - k as u64);
    let mut acc = UBig::ONE;
    for i in 1..=k {
        let num = UBig::from(q - k + i);
        let den = UBig::from(i);
        let g = (&acc).gcd(&den);
        let den_reduced = &den / &g;
        // den_reduced is coprime to acc / g, so it divides num
        acc = (&acc / &g) * (&num / &den_reduced);
    }
    acc
}

#[derive(Clone, Debug)]
pub struct FactorialBounds {
    pub n: u64,
    /// `sqrt(2 pi) n^(n+1/2) e^(-n)`.
    pub lower: Interval,
    /// `lower * e^(1/(12n))`.
    pub upper: Interval,
}

impl FactorialBounds {
    /// Whether `lower <= value <= upper` holds for the enclosures.
    pub fn brackets(&self, value: &UBig) -> bool {
        let exact = Interval::from_ubig(value, self.lower.precision());
        self.lower.certainly_le(&exact) && exact.certainly_le(&self.upper)
    }
}

pub fn factorial_bounds(n: u64) -> Result<FactorialBounds> {
    factorial_bounds_with_precision(n, CERTIFICATE_DIGITS)
}

/// Stirling bounds on `n!`, evaluated in log space and exponentiated once.
pub fn factorial_bounds_with_precision(n: u64, digits: u32) -> Result<FactorialBounds> {
    if n == 0 {
        return Err(Error::InvalidArgument("factorial_bounds needs n >= 1".into()));
    }
    let bits = digits_to_bits(digits);
    let nn = Interval::from_u64(n, bits);
    let half = Interval::from_f64(0.5, bits);
    let two_pi = Interval::from_u64(2, bits) * Interval::pi(bits);
    let log_lower = &half * two_pi.ln()? + (&nn + &half) * nn.ln()? - &nn;
    let correction = (Interval::from_u64(12, bits) * &nn).recip();
    Ok(FactorialBounds {
        n,
        lower: log_lower.exp(),
        upper: (log_lower + correction).exp(),
    })
}

/// An exact binomial together with an explicit lower bound and its factors.
#[derive(Clone, Debug)]
pub struct StirlingCertificate {
    pub q: u64,
    pub k: u64,
    pub exact_value: UBig,
    pub lower_bound: Interval,
    /// `H(k/q)` in nats.
    pub entropy_at_ratio: Interval,
    /// `exp(-1/(12k) - 1/(12(q-k)))`.
    pub correction_factor: Interval,
    /// `(2 pi)^(-1/2) sqrt(q/(k(q-k)))`.
    pub prefactor: Interval,
}

impl StirlingCertificate {
    /// `lower_bound / exact_value`, in `(0, 1]` for a valid certificate.
    pub fn tightness(&self) -> f64 {
        let exact = Interval::from_ubig(&self.exact_value, self.lower_bound.precision());
        (&self.lower_bound / &exact).mid_f64()
    }

    /// Re-checks `lower_bound <= exact_value` on the stored enclosures.
    pub fn holds(&self) -> bool {
        let exact = Interval::from_ubig(&self.exact_value, self.lower_bound.precision());
        self.lower_bound.certainly_le(&exact)
    }
}

pub fn entropy_lower_bound(q: u64, k: u64) -> Result<StirlingCertificate> {
    entropy_lower_bound_with_precision(q, k, CERTIFICATE_DIGITS)
}

/// Builds and checks the Stirling certificate for `C(q, k)`, `1 <= k <= q-1`.
///
/// The exponent is `q ln q - k ln k - (q-k) ln(q-k) = q H(k/q)`, so the bound
/// uses the entropy at the actual ratio `k/q`.
pub fn entropy_lower_bound_with_precision(q: u64, k: u64, digits: u32) -> Result<StirlingCertificate> {
    if k == 0 || k >= q {
        return Err(Error::InvalidArgument(format!(
            "Stirling certificate needs 1 <= k <= q-1, got q = {q}, k = {k}"
        )));
    }
    let bits = digits_to_bits(digits);
    let int = |v: u64| Interval::from_u64(v, bits);
    let half = Interval::from_f64(0.5, bits);
    let (ln_q, ln_k, ln_r) = (int(q).ln()?, int(k).ln()?, int(q - k).ln()?);

    let exponent = int(q) * &ln_q - int(k) * &ln_k - int(q - k) * &ln_r;
    let ln_two_pi = (int(2) * Interval::pi(bits)).ln()?;
    let log_prefactor = &half * (&ln_q - &ln_k - &ln_r - ln_two_pi);
    let log_correction = -((int(12) * int(k)).recip() + (int(12) * int(q - k)).recip());

    let lower_bound = (&log_prefactor + &exponent + &log_correction).exp();
    let cert = StirlingCertificate {
        q,
        k,
        exact_value: binomial_exact(q, k as i64),
        lower_bound,
        entropy_at_ratio: exponent / int(q),
        correction_factor: log_correction.exp(),
        prefactor: log_prefactor.exp(),
    };
    if !cert.holds() {
        return Err(Error::CertificateViolation(format!(
            "Stirling lower bound {} exceeds C({q}, {k}) = {}",
            cert.lower_bound, cert.exact_value
        )));
    }
    Ok(cert)
}

/// Integer `k` in `[1, q-1]` nearest to `x q` (ties toward the smaller),
/// required to satisfy `|k - x q| <= 2`.
pub fn nearest_k(x: f64, q: u64) -> Result<u64> {
    if !(x > 0.0 && x < 1.0) || q < 2 {
        return Err(Error::InfeasibleK { x, q });
    }
    let bits = 128;
    let xq = Interval::from_f64(x, bits) * Interval::from_u64(q, bits);
    let (floor, _) = xq.floor_bounds();
    let floor = u64::try_from(floor).expect("x q >= 0");
    let frac = &xq - Interval::from_u64(floor, bits);
    let half = Interval::from_f64(0.5, bits);
    let nearest = if half.certainly_lt(&frac) { floor + 1 } else { floor };
    let k = nearest.clamp(1, q - 1);
    let offset = Interval::from_u64(k, bits) - &xq;
    let two = Interval::from_u64(2, bits);
    if offset.certainly_le(&two) && (-&two).certainly_le(&offset) {
        Ok(k)
    } else {
        Err(Error::InfeasibleK { x, q })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticRow {
    pub q: u64,
    pub k: u64,
    /// `C(q,k) sqrt(q) / exp(q H(x))`.
    pub ratio: f64,
}

/// Empirical `c_x`: the normalized binomials along a fixed-ratio sequence.
pub fn asymptotic_constant_check(x: f64, q_list: &[u64]) -> Result<Vec<AsymptoticRow>> {
    let bits = digits_to_bits(CERTIFICATE_DIGITS);
    let hx = crate::entropy::binary_entropy_interval(&Interval::from_f64(x, bits))?;
    q_list
        .iter()
        .map(|&q| {
            let k = nearest_k(x, q)?;
            let binom = Interval::from_ubig(&binomial_exact(q, k as i64), bits);
            let qq = Interval::from_u64(q, bits);
            let log_ratio = binom.ln()? + Interval::from_f64(0.5, bits) * qq.ln()? - &qq * &hx;
            Ok(AsymptoticRow { q, k, ratio: log_ratio.exp().mid_f64() })
        })
        .collect()
}
