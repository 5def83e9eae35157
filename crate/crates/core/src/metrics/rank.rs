use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPool {
    /// Question ids, best first.
    pub candidates: Vec<String>,
    pub relevant: String,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Σ 1/rᵢ as a reduced fraction, or `None` on overflow.
fn exact_reciprocal_sum(ranks: &[usize]) -> Option<(u128, u128)> {
    let (mut num, mut den) = (0u128, 1u128);
    for &r in ranks {
        let r = r as u128;
        let g = gcd(den, r);
        let lcm = den.checked_mul(r / g)?;
        num = num.checked_mul(lcm / den)?.checked_add(lcm / r)?;
        den = lcm;
        let g = gcd(num, den);
        (num, den) = (num / g, den / g);
    }
    Some((num, den))
}

/// Mean over pools of 1/rank of the relevant question, ranks starting at 1.
/// Summed as an exact fraction when it fits, so simple cases like ranks
/// [2, 3] give exactly 5/12.
pub fn mrr(pools: &[RankedPool]) -> Result<f64, MetricsError> {
    if pools.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut ranks = Vec::with_capacity(pools.len());
    for (i, pool) in pools.iter().enumerate() {
        let rank = pool
            .candidates
            .iter()
            .position(|c| *c == pool.relevant)
            .ok_or(MetricsError::RelevantMissing(i))?;
        ranks.push(rank + 1);
    }
    let n = pools.len() as u128;
    match exact_reciprocal_sum(&ranks) {
        Some((num, den)) if num < 1 << 53 && den.checked_mul(n).is_some_and(|d| d < 1 << 53) => {
            Ok(num as f64 / (den * n) as f64)
        }
        _ => Ok(ranks.iter().map(|r| 1.0 / *r as f64).sum::<f64>() / pools.len() as f64),
    }
}
