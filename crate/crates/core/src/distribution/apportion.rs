//! Largest-remainder rounding of `n·p` to integer class counts.

use std::cmp::Ordering;

use super::{Class, EmpiricalCounts, JointDistribution};
use crate::error::{validation, Error, Result};

/// Class that absorbs mass missing from a sub-stochastic distribution.
const ISOLATED: Class = (0, 0, 1);

/// Rounds `n·p` to counts summing to `n`, then repairs any stub imbalance.
///
/// Floors are topped up in order of decreasing fractional remainder, ties
/// resolved by class order. When classes with `i != j` leave the stub totals
/// unequal, single nodes are moved between supported classes, each move
/// chosen to shrink the imbalance the most and taken from the most populated
/// class.
pub fn empirical_counts(p: &JointDistribution, n: u64) -> Result<EmpiricalCounts> {
    if n == 0 {
        return Err(validation("n must be at least 1"));
    }
    let mut classes: Vec<(Class, f64)> = p.entries().iter().map(|(&k, &v)| (k, v)).collect();
    let deficit = 1.0 - p.total_mass();
    if deficit > 1e-12 {
        classes.push((ISOLATED, deficit));
        classes.sort_by_key(|a| a.0);
    }

    let nf = n as f64;
    let mut counts: Vec<u64> = Vec::with_capacity(classes.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(classes.len());
    for (idx, &(_, mass)) in classes.iter().enumerate() {
        let quota = nf * mass;
        let floor = quota.floor();
        counts.push(floor as u64);
        remainders.push((idx, quota - floor));
    }
    let assigned: u64 = counts.iter().sum();
    // Largest remainders first; class order breaks ties.
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    if assigned <= n {
        for &(idx, _) in remainders.iter().cycle().take((n - assigned) as usize) {
            counts[idx] += 1;
        }
    } else {
        // Only reachable through rounding when the masses sum to 1 + O(1e-9).
        let mut excess = assigned - n;
        for &(idx, _) in remainders.iter().rev() {
            if excess == 0 {
                break;
            }
            if counts[idx] > 0 {
                counts[idx] -= 1;
                excess -= 1;
            }
        }
    }

    balance_stubs(&classes, &mut counts, n)?;

    EmpiricalCounts::from_counts(classes.iter().map(|&(k, _)| k).zip(counts))
}

fn imbalance(classes: &[(Class, f64)], counts: &[u64]) -> i64 {
    classes
        .iter()
        .zip(counts)
        .map(|(&((i, j, _), _), &k)| (i as i64 - j as i64) * k as i64)
        .sum()
}

fn balance_stubs(classes: &[(Class, f64)], counts: &mut [u64], n: u64) -> Result<()> {
    let mut delta = imbalance(classes, counts);
    let shift = |idx: usize| classes[idx].0 .0 as i64 - classes[idx].0 .1 as i64;
    let mut moves = 0u64;
    while delta != 0 {
        // (resulting |delta|, -count of source, source, destination)
        let mut best: Option<(i64, i64, usize, usize)> = None;
        for from in 0..classes.len() {
            if counts[from] == 0 {
                continue;
            }
            for to in 0..classes.len() {
                let next = delta - shift(from) + shift(to);
                if next.abs() >= delta.abs() {
                    continue;
                }
                let key = (next.abs(), -(counts[from] as i64), from, to);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let Some((_, _, from, to)) = best else {
            return Err(Error::Construction(format!(
                "cannot balance stubs: {} more in-stubs than out-stubs after rounding to n = {n}",
                delta
            )));
        };
        counts[from] -= 1;
        counts[to] += 1;
        delta = imbalance(classes, counts);
        moves += 1;
        if moves > n {
            return Err(Error::Construction(format!("stub repair did not converge (deficit {delta})")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rounding() {
        let p = JointDistribution::from_entries([((2, 2, 0), 0.2), ((2, 2, 2), 0.8)]).unwrap();
        let e = empirical_counts(&p, 10).unwrap();
        assert_eq!(e.get((2, 2, 0)), 2);
        assert_eq!(e.get((2, 2, 2)), 8);
        assert_eq!((e.n, e.m), (10, 20));
    }

    #[test]
    fn largest_remainder() {
        let p = JointDistribution::from_entries([((1, 1, 0), 0.33), ((1, 1, 1), 0.33), ((1, 1, 2), 0.34)]).unwrap();
        let e = empirical_counts(&p, 10).unwrap();
        assert_eq!(e.counts.values().copied().collect::<Vec<_>>(), vec![3, 3, 4]);
    }

    #[test]
    fn ties_go_to_class_order() {
        let p = JointDistribution::from_entries([((1, 1, 0), 0.5), ((1, 1, 1), 0.5)]).unwrap();
        let e = empirical_counts(&p, 3).unwrap();
        assert_eq!((e.get((1, 1, 0)), e.get((1, 1, 1))), (2, 1));
    }

    #[test]
    fn deficit_mass_becomes_isolated_nodes() {
        let p = JointDistribution::from_entries([((1, 1, 0), 0.5)]).unwrap();
        let e = empirical_counts(&p, 10).unwrap();
        assert_eq!(e.get((1, 1, 0)), 5);
        assert_eq!(e.get(ISOLATED), 5);
        assert_eq!(e.m, 5);
    }

    #[test]
    fn unequal_degrees_are_rebalanced() {
        // λ = 2·0.3 + 1·0.4 + 1·0.3 = 1.3 on both sides.
        let p = JointDistribution::from_entries([((2, 1, 1), 0.3), ((1, 2, 1), 0.3), ((1, 1, 0), 0.4)]).unwrap();
        for n in 1..60 {
            let e = empirical_counts(&p, n).unwrap();
            assert_eq!(e.n, n);
            let m_out: u64 = e.counts.iter().map(|(&(_, j, _), &k)| j as u64 * k).sum();
            assert_eq!(e.m, m_out);
        }
    }

    #[test]
    fn infeasible_balance_is_reported() {
        // Every node moves the balance by ±2; an odd n cannot balance.
        let p = JointDistribution::from_entries([((3, 1, 1), 0.5), ((1, 3, 1), 0.5)]).unwrap();
        let err = empirical_counts(&p, 3).unwrap_err();
        assert!(matches!(err, Error::Construction(_)), "{err}");
        assert!(empirical_counts(&p, 4).is_ok());
    }

    #[test]
    fn zero_n_rejected() {
        let p = JointDistribution::from_entries([((1, 1, 0), 1.0)]).unwrap();
        assert!(empirical_counts(&p, 0).is_err());
    }
}
