//! The shared-property probability kernel.
//!
//! Two strings are modeled as urns of "potential properties". String `i` has
//! `p_i` balls in its urn, of which `s` carry the same labels as balls in the
//! other urn; extracting `n_i` assertions is a uniform draw of `n_i` balls
//! without replacement. Synonymous strings share as many potential properties
//! as possible (`s = min(p1, p2)`); non-synonymous strings share strictly
//! fewer. The posterior that two strings co-refer, given that `k` of their
//! extracted properties coincide, is the probability of observing `k` under
//! `s = min(p1, p2)` divided by the sum of that probability over every
//! admissible `s` (the prior over `s` is uniform and cancels).
//!
//! Everything is computed in log space. Factorials are exact (cached) up to
//! 100, Stirling beyond, and gamma-based for non-integer arguments, which is
//! what the continuous (weighted-count) variant relies on.

use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

use crate::StringKind;

/// Errors from the probability kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EspError {
    #[error("factorial argument must be non-negative and finite, got {0}")]
    BadFactorialArgument(f64),
    #[error("draw count n={n} exceeds urn size p={p}")]
    DrawsExceedUrn { n: u64, p: u64 },
    #[error("shared pool s={s} exceeds the smaller urn p_min={p_min}")]
    SharedPoolTooLarge { s: u64, p_min: u64 },
    #[error("shared count k={k} exceeds the smaller draw count {max}")]
    SharedExceedsDraws { k: f64, max: u64 },
    #[error("shared count must be finite and non-negative, got {0}")]
    BadSharedCount(f64),
    #[error("both strings have zero extractions; co-reference evidence undefined")]
    InsufficientEvidence,
    #[error("property multiple must be >= 1 so that p >= n, got {0}")]
    BadMultiple(f64),
}

/// Ratio of potential to extracted properties, per string kind.
///
/// The urn sizes are hidden parameters; they are tied to the observed
/// extraction counts as `p = ceil(multiple * n)`. The ceiling keeps the
/// count integral while preserving `n <= p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyMultiple {
    pub object: f64,
    pub relation: f64,
}

impl Default for PropertyMultiple {
    fn default() -> Self {
        PropertyMultiple {
            object: 30.0,
            relation: 500.0,
        }
    }
}

impl PropertyMultiple {
    pub fn new(object: f64, relation: f64) -> Result<Self, EspError> {
        if object.is_nan() || object < 1.0 {
            return Err(EspError::BadMultiple(object));
        }
        if relation.is_nan() || relation < 1.0 {
            return Err(EspError::BadMultiple(relation));
        }
        Ok(PropertyMultiple { object, relation })
    }

    /// Urn size for a string of the given kind with `n` extractions.
    pub fn potentials(&self, kind: StringKind, n: u64) -> u64 {
        let m = match kind {
            StringKind::Object => self.object,
            StringKind::Relation => self.relation,
        };
        (m * n as f64).ceil() as u64
    }
}

const EXACT_LIMIT: u64 = 100;

fn exact_table() -> &'static [f64; EXACT_LIMIT as usize + 1] {
    static TABLE: OnceLock<[f64; EXACT_LIMIT as usize + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; EXACT_LIMIT as usize + 1];
        for n in 2..=EXACT_LIMIT as usize {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

// ln n! by Stirling's approximation, accurate past the exact-table limit.
fn stirling(n: f64) -> f64 {
    (PI * (2.0 * n + 1.0 / 3.0)).sqrt().ln() + n * n.ln() - n
}

fn lnfact_int(n: u64) -> f64 {
    if n <= EXACT_LIMIT {
        exact_table()[n as usize]
    } else {
        stirling(n as f64)
    }
}

fn lnfact_real(x: f64) -> f64 {
    if x > EXACT_LIMIT as f64 {
        stirling(x)
    } else if x.fract() == 0.0 {
        exact_table()[x as usize]
    } else {
        statrs::function::gamma::ln_gamma(x + 1.0)
    }
}

/// Log-factorial: exact for integers up to 100, Stirling beyond, and
/// `ln Γ(x+1)` for non-integer arguments.
pub fn log_factorial(x: f64) -> Result<f64, EspError> {
    if !x.is_finite() || x < 0.0 {
        return Err(EspError::BadFactorialArgument(x));
    }
    Ok(lnfact_real(x))
}

// ln C(n, k); -inf outside the valid range, matching a zero count.
fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    lnfact_int(n) - lnfact_int(k) - lnfact_int(n - k)
}

fn ln_choose_real(n: f64, k: f64) -> f64 {
    if k < 0.0 || k > n {
        return f64::NEG_INFINITY;
    }
    lnfact_real(n) - lnfact_real(k) - lnfact_real(n - k)
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn check_urns(n1: u64, n2: u64, p1: u64, p2: u64) -> Result<(), EspError> {
    if n1 > p1 {
        return Err(EspError::DrawsExceedUrn { n: n1, p: p1 });
    }
    if n2 > p2 {
        return Err(EspError::DrawsExceedUrn { n: n2, p: p2 });
    }
    Ok(())
}

/// Log of the number of ways to draw `n1`- and `n2`-subsets from urns of
/// sizes `p1` and `p2` that share `s` potential properties, such that exactly
/// `k` drawn properties coincide. Returns negative infinity for a zero count.
///
/// The count factors an outer choice of the `k` coincident properties against
/// a double sum over how many further draws each side takes from the shared
/// pool without coinciding.
pub fn esp_count_log(k: u64, n1: u64, n2: u64, s: u64, p1: u64, p2: u64) -> Result<f64, EspError> {
    Ok(esp_count_log_counting(k, n1, n2, s, p1, p2)?.0)
}

fn esp_count_log_counting(
    k: u64,
    n1: u64,
    n2: u64,
    s: u64,
    p1: u64,
    p2: u64,
) -> Result<(f64, u64), EspError> {
    check_urns(n1, n2, p1, p2)?;
    let p_min = p1.min(p2);
    if s > p_min {
        return Err(EspError::SharedPoolTooLarge { s, p_min });
    }
    if k > s || k > n1 || k > n2 {
        return Ok((f64::NEG_INFINITY, 0));
    }

    let a = n1 - k; // draws from urn 1 besides the coincident ones
    let b = n2 - k;
    let free = s - k; // shared-pool balls that may be drawn by one side only
    let r_lo = a.saturating_sub(p1 - s);
    let mut acc = f64::NEG_INFINITY;
    let mut terms = 0u64;
    let mut r = r_lo;
    while r <= a && r <= free {
        let t_lo = b.saturating_sub(p2 - s);
        let t_hi = b.min(free - r);
        let mut t = t_lo;
        while t <= t_hi {
            let term = ln_choose(free, r + t)
                + ln_choose(r + t, r)
                + ln_choose(p1 - s, a - r)
                + ln_choose(p2 - s, b - t);
            acc = ln_add_exp(acc, term);
            terms += 1;
            t += 1;
        }
        r += 1;
    }
    Ok((ln_choose(s, k) + acc, terms))
}

/// Probability of sharing exactly `k` extracted properties, conditioned on
/// the urns sharing exactly `s` potential properties.
pub fn esp_pk(k: u64, n1: u64, n2: u64, s: u64, p1: u64, p2: u64) -> Result<f64, EspError> {
    let num = esp_count_log(k, n1, n2, s, p1, p2)?;
    let den = ln_choose(p1, n1) + ln_choose(p2, n2);
    Ok((num - den).exp().min(1.0))
}

fn check_posterior_args(k: u64, n1: u64, n2: u64, p1: u64, p2: u64) -> Result<(), EspError> {
    check_urns(n1, n2, p1, p2)?;
    if n1 == 0 && n2 == 0 {
        return Err(EspError::InsufficientEvidence);
    }
    let max = n1.min(n2);
    if k > max {
        return Err(EspError::SharedExceedsDraws { k: k as f64, max });
    }
    Ok(())
}

/// Co-reference posterior from explicit urn sizes, via the single-sum paths.
///
/// Orienting the urns so `p2 <= p1`, the numerator (the `s = p_min` case)
/// loses one sum because the smaller urn has no unshared balls, and the
/// denominator sum over all `s` collapses to a closed single-sum form. Cost
/// is linear in the smaller side.
pub fn esp_posterior_from_potentials(
    k: u64,
    n1: u64,
    n2: u64,
    p1: u64,
    p2: u64,
) -> Result<f64, EspError> {
    Ok(esp_posterior_from_potentials_counting(k, n1, n2, p1, p2)?.0)
}

/// Fast-path posterior along with the number of summation terms evaluated.
pub fn esp_posterior_from_potentials_counting(
    k: u64,
    n1: u64,
    n2: u64,
    p1: u64,
    p2: u64,
) -> Result<(f64, u64), EspError> {
    check_posterior_args(k, n1, n2, p1, p2)?;
    let (n1, n2, p1, p2) = if p2 <= p1 {
        (n1, n2, p1, p2)
    } else {
        (n2, n1, p2, p1)
    };
    let mut terms = 0u64;

    // Numerator: s = p2, so the second side draws all its non-coincident
    // balls from the shared pool (t is pinned at n2 - k).
    let a = n1 - k;
    let t0 = n2 - k;
    let r_lo = a.saturating_sub(p1 - p2);
    let r_hi = a.min(p2 - n2);
    let mut num = f64::NEG_INFINITY;
    let mut r = r_lo;
    while r <= r_hi {
        let term = ln_choose(p2 - k, r + t0) + ln_choose(r + t0, r) + ln_choose(p1 - p2, a - r);
        num = ln_add_exp(num, term);
        terms += 1;
        r += 1;
    }
    num += ln_choose(p2, k);

    // Denominator: closed form of the sum over s from k to p2.
    let r_hi = n2.min(p1 + k - n1);
    let mut den = f64::NEG_INFINITY;
    let mut r = k;
    while r <= r_hi {
        let term = ln_choose(r, k) + ln_choose(p1 - r, n1 - k);
        den = ln_add_exp(den, term);
        terms += 1;
        r += 1;
    }
    den += ln_choose(p2 + 1, n2 + 1);

    Ok(((num - den).exp().min(1.0), terms))
}

/// Reference posterior that sums the per-`s` probabilities directly.
///
/// Kept as the independent slow route; the closed-form path must agree with
/// it to floating-point tolerance.
pub fn esp_posterior_from_potentials_direct(
    k: u64,
    n1: u64,
    n2: u64,
    p1: u64,
    p2: u64,
) -> Result<f64, EspError> {
    Ok(esp_posterior_from_potentials_direct_counting(k, n1, n2, p1, p2)?.0)
}

/// Direct-path posterior along with the number of summation terms evaluated.
pub fn esp_posterior_from_potentials_direct_counting(
    k: u64,
    n1: u64,
    n2: u64,
    p1: u64,
    p2: u64,
) -> Result<(f64, u64), EspError> {
    check_posterior_args(k, n1, n2, p1, p2)?;
    let p_min = p1.min(p2);
    let mut terms = 0u64;
    let (num, t) = esp_count_log_counting(k, n1, n2, p_min, p1, p2)?;
    terms += t;
    let mut den = f64::NEG_INFINITY;
    for s in k..=p_min {
        let (c, t) = esp_count_log_counting(k, n1, n2, s, p1, p2)?;
        den = ln_add_exp(den, c);
        terms += t;
    }
    Ok(((num - den).exp().min(1.0), terms))
}

/// Co-reference posterior with urn sizes tied to the extraction counts.
pub fn esp_posterior(
    k: u64,
    n1: u64,
    n2: u64,
    multiple: &PropertyMultiple,
    kind: StringKind,
) -> Result<f64, EspError> {
    let p1 = multiple.potentials(kind, n1);
    let p2 = multiple.potentials(kind, n2);
    esp_posterior_from_potentials(k, n1, n2, p1, p2)
}

/// Continuous posterior from explicit urn sizes: the single-sum paths with
/// every factorial of `k` read through the gamma function. Agrees with the
/// integer path exactly at integer `k`.
pub fn esp_posterior_continuous_from_potentials(
    k: f64,
    n1: u64,
    n2: u64,
    p1: u64,
    p2: u64,
) -> Result<f64, EspError> {
    if !k.is_finite() || k < 0.0 {
        return Err(EspError::BadSharedCount(k));
    }
    check_urns(n1, n2, p1, p2)?;
    if n1 == 0 && n2 == 0 {
        return Err(EspError::InsufficientEvidence);
    }
    let max = n1.min(n2);
    if k > max as f64 {
        return Err(EspError::SharedExceedsDraws { k, max });
    }
    let (n1, n2, p1, p2) = if p2 <= p1 {
        (n1, n2, p1, p2)
    } else {
        (n2, n1, p2, p1)
    };

    // Numerator, indexed by j = draws from the unshared part of urn 1, so
    // that the binomial over that pool keeps integer arguments; the shared
    // pool absorbs the fractional part of k.
    let a = n1 as f64 - k;
    let t0 = n2 as f64 - k;
    let j_lo = (n1 as f64 + n2 as f64 - k - p2 as f64).ceil().max(0.0) as u64;
    let j_hi_f = a.floor().min((p1 - p2) as f64);
    let mut num = f64::NEG_INFINITY;
    if j_hi_f >= j_lo as f64 {
        for j in j_lo..=(j_hi_f as u64) {
            let r = a - j as f64;
            let term = ln_choose_real(p2 as f64 - k, r + t0)
                + ln_choose_real(r + t0, r)
                + ln_choose(p1 - p2, j);
            num = ln_add_exp(num, term);
        }
    }
    num += ln_choose_real(p2 as f64, k);

    let r_lo = k.ceil() as u64;
    let r_hi = n2.min((p1 as f64 - n1 as f64 + k).floor() as u64);
    let mut den = f64::NEG_INFINITY;
    let mut r = r_lo;
    while r <= r_hi {
        let term = ln_choose_real(r as f64, k) + ln_choose_real((p1 - r) as f64, n1 as f64 - k);
        den = ln_add_exp(den, term);
        r += 1;
    }
    den += ln_choose(p2 + 1, n2 + 1);

    Ok((num - den).exp().min(1.0))
}

/// Continuous posterior with urn sizes tied to the extraction counts. Used
/// by the weighted-count model, where `k` is a sum of reciprocal property
/// degrees rather than an integer.
pub fn esp_posterior_continuous(
    k: f64,
    n1: u64,
    n2: u64,
    multiple: &PropertyMultiple,
    kind: StringKind,
) -> Result<f64, EspError> {
    let p1 = multiple.potentials(kind, n1);
    let p2 = multiple.potentials(kind, n2);
    esp_posterior_continuous_from_potentials(k, n1, n2, p1, p2)
}
