use super::{sign_of, IndexTable, ParityConfig};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Signed counts by enumerating every blow-up configuration.
///
/// At level `p` a configuration blows up at a set `S` of `|S| <= p` points.
/// When `|S| = p` the weak limit is zero and the Morse index is
/// `(p - 1) + sum(iota)`; otherwise the weak limit is a solution at level
/// `p - |S|`, which enters only through its signed count, and the index is
/// `|S| + m(omega) + sum(iota)`. `mu_p` then follows from the first Morse
/// equality, level by level.
///
/// Cost is `O(N * 2^m)`.
pub fn mu_direct(cfg: &ParityConfig) -> IndexTable {
    let m = cfg.m();
    let big_n = cfg.max_level();
    let odd_mask = cfg.odd_mask();
    let mut table = IndexTable::zeros(m, big_n);

    for p in 1..=big_n {
        // sums[k - 1] accumulates subsets with min(S) >= k, at[k - 1] those with min(S) == k.
        let mut sums = vec![BigInt::zero(); m + 1];
        let mut at = vec![BigInt::zero(); m];
        for mask in 1u64..(1u64 << m) {
            let size = mask.count_ones() as usize;
            if size > p {
                continue;
            }
            let sigma = (mask & odd_mask).count_ones() as usize;
            let contribution = if size == p {
                sign_of(p - 1 + sigma)
            } else {
                sign_of(size + sigma) * table.mu(p - size)
            };
            if contribution.is_zero() {
                continue;
            }
            let lowest = mask.trailing_zeros() as usize + 1;
            at[lowest - 1] += &contribution;
            for s in sums.iter_mut().take(lowest) {
                *s += &contribution;
            }
        }
        for (k, v) in sums.into_iter().enumerate() {
            table.set_geq(k + 1, p, v);
        }
        for (k, v) in at.into_iter().enumerate() {
            table.set_geq_at(k + 1, p, v);
        }
        let delta = if p == 1 { BigInt::one() } else { BigInt::zero() };
        let mu = delta - table.geq(1, p);
        table.set_mu(p, mu);
    }
    table
}
