use super::{IndexTable, ParityConfig};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Signed counts from the positional recurrence.
///
/// Level 1: `mu_{>=k}^1 = sum_{j>=k} (-1)^{iota_j}` and `mu_1 = 1 - mu_{>=1}^1`.
/// Level `p >= 2`, for `k = m` down to 1:
/// `mu_{>=k;k}^p = (-1)^{1+iota_k} (mu_{p-1} + mu_{>=k+1}^{p-1})`,
/// `mu_{>=k}^p = mu_{>=k+1}^p + mu_{>=k;k}^p`, then `mu_p = -mu_{>=1}^p`.
pub fn mu_recurrence(cfg: &ParityConfig) -> IndexTable {
    let m = cfg.m();
    let big_n = cfg.max_level();
    let mut table = IndexTable::zeros(m, big_n);

    for k in (1..=m).rev() {
        let own = BigInt::from(cfg.parity(k).sign());
        let acc = table.geq(k + 1, 1) + &own;
        table.set_geq_at(k, 1, own);
        table.set_geq(k, 1, acc);
    }
    let mu1 = BigInt::one() - table.geq(1, 1);
    table.set_mu(1, mu1);

    for p in 2..=big_n {
        table.set_geq(m + 1, p, BigInt::zero());
        for k in (1..=m).rev() {
            let inner = table.mu(p - 1) + table.geq(k + 1, p - 1);
            let at = if cfg.parity(k).is_odd() { inner } else { -inner };
            let acc = table.geq(k + 1, p) + &at;
            table.set_geq_at(k, p, at);
            table.set_geq(k, p, acc);
        }
        let mu = -table.geq(1, p).clone();
        table.set_mu(p, mu);
    }
    table
}
