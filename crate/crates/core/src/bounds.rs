//! Closed-form error and counting bounds.
//!
//! Quantities that overflow `f64` (codeword counts, list-error sums) are
//! returned as base-2 logarithms. Wherever a formula writes `log` without a
//! base, the natural logarithm is used.

use serde::{Deserialize, Serialize};

use crate::channel::BmsChannel;
use crate::error::{param, Result};
use crate::rm::RmCode;
use crate::scalar::Real;

/// A named bound evaluation, ready for CSV or JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: Vec<(String, f64)>,
    pub value: f64,
    /// `value` is log₂ of the bound rather than the bound itself.
    pub log2: bool,
}

impl BoundReport {
    pub fn new(name: &str, inputs: &[(&str, f64)], value: f64, log2: bool) -> Self {
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            log2,
        }
    }

    /// The bound in the linear domain, or `None` if it does not fit in an `f64`.
    pub fn linear(&self) -> Option<f64> {
        let v = if self.log2 { self.value.exp2() } else { self.value };
        v.is_finite().then_some(v)
    }
}

/// (2^{c′/2} − 1)/2: how far below 1/2 the exit error of a code with capacity gap c′ must sit.
pub fn base_case_margin<T: Real>(rate_gap: T) -> Result<T> {
    if !(rate_gap > T::zero() && rate_gap <= T::one()) {
        return param(format!("rate gap {rate_gap} outside (0,1]"));
    }
    Ok(((rate_gap / T::lit(2.0)).exp2() - T::one()) / T::lit(2.0))
}

fn check_channel_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps <= T::lit(0.5)) {
        return param(format!("crossover {eps} outside (0,1/2]"));
    }
    Ok(())
}

/// 18·P^{5/4} + 9P·(4 ln(64/(ε(1−ε))) / ln(1/P))^k, bounding P[Q ≥ 1/3]; zero at P = 0.
pub fn conditional_tail_bound<T: Real>(p_e: T, k: u32, eps: T) -> Result<T> {
    if !(p_e >= T::zero() && p_e < T::one()) {
        return param(format!("error rate {p_e} outside [0,1)"));
    }
    check_channel_eps(eps)?;
    if p_e == T::zero() {
        return Ok(T::zero());
    }
    let ratio = T::lit(4.0) * (T::lit(64.0) / (eps * (T::one() - eps))).ln() / (T::one() / p_e).ln();
    Ok(T::lit(18.0) * p_e.powf(T::lit(1.25)) + T::lit(9.0) * p_e * ratio.powi(k as i32))
}

/// [`conditional_tail_bound`] plus the majority-failure term (8/9)^{2^gap}.
pub fn boost_step_bound<T: Real>(p_e: T, k: u32, gap: u32, eps: T) -> Result<T> {
    if !(p_e > T::zero() && p_e < T::one()) {
        return param(format!("error rate {p_e} outside (0,1)"));
    }
    let majority = (T::lit(2.0).powi(gap as i32) * (T::lit(8.0) / T::lit(9.0)).ln()).exp();
    Ok(conditional_tail_bound(p_e, k, eps)? + majority)
}

fn ln_binom(n: u32, k: u32) -> f64 {
    // Exact products are fine here: n stays below a few hundred.
    (0..k).fold(0.0, |acc, i| acc + ((n - i) as f64).ln() - ((i + 1) as f64).ln())
}

/// Σ_{i ≤ b} C(a, i) as an `f64`.
fn binom_le_f64(a: u32, b: u32) -> f64 {
    (0..=b.min(a)).map(|i| ln_binom(a, i).exp()).sum()
}

/// log₂ of the bound on the number of RM(m,r) codewords within 2^{m−ℓ} of a fixed word:
/// Σ_{j=ℓ}^{r} 17m(j−1)(j+2) + 17(j+2)·C(m−j+1, ≤ r−j+1).
pub fn weight_enum_log_bound(m: u32, r: u32, l: u32) -> Result<f64> {
    if r > m {
        return param(format!("degree {r} exceeds m = {m}"));
    }
    if l == 0 || l > r + 1 {
        return param(format!("level {l} outside 1..={}", r + 1));
    }
    Ok((l..=r)
        .map(|j| {
            let (mf, jf) = (m as f64, j as f64);
            17.0 * mf * (jf - 1.0) * (jf + 2.0) + 17.0 * (jf + 2.0) * binom_le_f64(m - j + 1, r - j + 1)
        })
        .sum())
}

/// (4ε(1−ε))^{d/2}: pairwise confusion bound for two words differing in d places.
pub fn bhattacharyya<T: Real>(eps: T, disagreements: u64) -> T {
    let z = T::lit(4.0) * eps * (T::one() - eps);
    z.powf(T::count(disagreements) / T::lit(2.0))
}

/// log₂ Σ_{ℓ=l_min}^{r} (4ε(1−ε))^{2^{m−ℓ−2}} · 2^{weight_enum_log_bound(m,r,ℓ)}.
pub fn list_error_log_bound(m: u32, r: u32, eps: f64, l_min: u32) -> Result<f64> {
    check_channel_eps(eps)?;
    if l_min == 0 || l_min > r {
        return param(format!("l_min = {l_min} outside 1..={r}"));
    }
    let log_z = (4.0 * eps * (1.0 - eps)).log2();
    let terms: Vec<f64> = (l_min..=r)
        .map(|l| {
            let w = weight_enum_log_bound(m, r, l)?;
            Ok(2f64.powi(m as i32 - l as i32 - 2) * log_z + w)
        })
        .collect::<Result<_>>()?;
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(top);
    }
    Ok(top + terms.iter().map(|t| (t - top).exp2()).sum::<f64>().log2())
}

/// Rate dim/n.
pub fn rate(code: &RmCode) -> f64 {
    code.rate()
}

/// capacity(ch) − rate(code); positive below capacity.
pub fn capacity_gap<T: Real>(code: &RmCode, ch: &BmsChannel<T>) -> T {
    ch.capacity() - T::lit(code.rate())
}
