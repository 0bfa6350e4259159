//! Zeta and Moebius transforms on the subset lattice restricted to a budget.
//!
//! All three transforms are linear maps indexed by budget position. On a full
//! powerset they use the O(n 2^n) sum-over-subsets recurrences; on any other
//! budget they walk the induced subset order directly, which keeps each
//! transform the exact inverse (or transpose-inverse) of the others.

use crate::frame::{Budget, FocalSet};

/// `out[A] = sum of values[B]` over budget sets `B ⊆ A`.
pub fn subset_sum(budget: &Budget, values: &[f64]) -> Vec<f64> {
    debug_assert_eq!(budget.len(), values.len());
    if budget.is_full_powerset() {
        let mut dense = scatter(budget, values);
        for bit in 0..budget.n() {
            let b = 1usize << bit;
            for s in 0..dense.len() {
                if s & b != 0 {
                    dense[s] += dense[s ^ b];
                }
            }
        }
        return gather(budget, &dense);
    }
    let sets = budget.sets();
    sets.iter()
        .map(|&a| {
            sets.iter()
                .zip(values)
                .filter(|(b, _)| b.is_subset_of(a))
                .map(|(_, v)| v)
                .sum()
        })
        .collect()
}

/// Inverse of [`subset_sum`]: recovers masses from belief values.
///
/// On the full powerset this is `m(A) = Σ_{B⊆A} (-1)^{|A∖B|} Bel(B)`. On a
/// restricted budget each set receives its belief minus the masses of the
/// budget sets strictly below it.
pub fn subset_moebius(budget: &Budget, values: &[f64]) -> Vec<f64> {
    debug_assert_eq!(budget.len(), values.len());
    if budget.is_full_powerset() {
        let mut dense = scatter(budget, values);
        for bit in 0..budget.n() {
            let b = 1usize << bit;
            for s in 0..dense.len() {
                if s & b != 0 {
                    dense[s] -= dense[s ^ b];
                }
            }
        }
        return gather(budget, &dense);
    }
    let sets = budget.sets();
    let order = ascending(sets);
    let mut out = vec![0.0; sets.len()];
    for (k, &ai) in order.iter().enumerate() {
        let a = sets[ai];
        let below: f64 = order[..k]
            .iter()
            .filter(|&&bi| sets[bi] != a && sets[bi].is_subset_of(a))
            .map(|&bi| out[bi])
            .sum();
        out[ai] = values[ai] - below;
    }
    out
}

/// Transpose of [`subset_moebius`]; pulls a gradient on masses back onto beliefs.
pub fn subset_moebius_transpose(budget: &Budget, grad: &[f64]) -> Vec<f64> {
    debug_assert_eq!(budget.len(), grad.len());
    if budget.is_full_powerset() {
        let mut dense = scatter(budget, grad);
        for bit in 0..budget.n() {
            let b = 1usize << bit;
            for s in 0..dense.len() {
                if s & b == 0 {
                    dense[s] -= dense[s | b];
                }
            }
        }
        return gather(budget, &dense);
    }
    let sets = budget.sets();
    let order = ascending(sets);
    let mut out = vec![0.0; sets.len()];
    for (k, &bi) in order.iter().enumerate().rev() {
        let b = sets[bi];
        let above: f64 = order[k + 1..]
            .iter()
            .filter(|&&ai| b.is_subset_of(sets[ai]))
            .map(|&ai| out[ai])
            .sum();
        out[bi] = grad[bi] - above;
    }
    out
}

fn ascending(sets: &[FocalSet]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_key(|&i| sets[i].order_key());
    order
}

fn scatter(budget: &Budget, values: &[f64]) -> Vec<f64> {
    let mut dense = vec![0.0; 1usize << budget.n()];
    for (s, v) in budget.sets().iter().zip(values) {
        dense[s.bits() as usize] = *v;
    }
    dense
}

fn gather(budget: &Budget, dense: &[f64]) -> Vec<f64> {
    budget
        .sets()
        .iter()
        .map(|s| dense[s.bits() as usize])
        .collect()
}
