//! Exhaustive reference solvers for tiny instances.

use num_traits::Zero;

use super::{to_result, ConsensusResult};
use crate::distance::total_ranking_distance;
use crate::error::{Error, Result};
use crate::model::{EvaluationSet, Ranking};
use crate::numeric::Rational;
use crate::penalty::PairPenaltyMap;

/// Largest number of grid points [`brute_force_oracle`] will enumerate.
pub const ORACLE_LIMIT: u128 = 10_000_000;

/// Largest ground set [`exact_npks_consensus_tiny`] will enumerate.
pub const MAX_EXACT_OBJECTS: usize = 6;

/// Enumerates the whole grid. Ties go to the lexicographically smallest point.
pub fn brute_force_oracle(map: &PairPenaltyMap) -> Result<ConsensusResult> {
    let n = map.objects();
    let levels = map.scale().steps() + 1;
    let size = (levels as u128).checked_pow(n as u32).filter(|&s| s <= ORACLE_LIMIT);
    if size.is_none() {
        return Err(Error::TooLarge(format!("{levels}^{n} grid points exceeds {ORACLE_LIMIT}")));
    }
    let mut x = vec![0i64; n];
    let mut best: Option<(Rational, Vec<i64>)> = None;
    loop {
        let value = map.evaluate(&x);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x.clone()));
        }
        // odometer, last coordinate fastest
        let mut k = n;
        loop {
            if k == 0 {
                let (value, grid) = best.expect("at least one grid point");
                return to_result(map, grid, value);
            }
            k -= 1;
            if x[k] + 1 < levels {
                x[k] += 1;
                break;
            }
            x[k] = 0;
        }
    }
}

/// Every weak order on `n` objects in competition-ranking form, in
/// lexicographic order of the rank vectors.
pub fn weak_orders(n: usize) -> Vec<Ranking> {
    let mut out = Vec::new();
    let mut ranks = vec![1u32; n];
    loop {
        let candidate = Ranking::new(ranks.clone());
        if candidate.normalized() == candidate {
            out.push(candidate);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if (ranks[k] as usize) < n {
                ranks[k] += 1;
                break;
            }
            ranks[k] = 1;
        }
    }
}

/// Complete ranking (ties allowed) with the least total NPKS distance to the
/// judges' rankings, by enumeration of all weak orders.
pub fn exact_npks_consensus_tiny(set: &EvaluationSet) -> Result<Ranking> {
    let n = set.len();
    if n > MAX_EXACT_OBJECTS {
        return Err(Error::TooLarge(format!(
            "{n} objects; exact ranking search is limited to {MAX_EXACT_OBJECTS}"
        )));
    }
    let mut best: Option<(Rational, Ranking)> = None;
    for ranking in weak_orders(n) {
        let total = total_ranking_distance(set, &ranking);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, ranking));
        }
    }
    Ok(best.map(|(_, r)| r).unwrap_or_else(|| Ranking::new(vec![])))
}

/// Total NPKS distance of the exact optimum; convenience for reporting.
pub fn exact_npks_distance(set: &EvaluationSet) -> Result<Rational> {
    let ranking = exact_npks_consensus_tiny(set)?;
    Ok(if ranking.is_empty() { Rational::zero() } else { total_ranking_distance(set, &ranking) })
}
