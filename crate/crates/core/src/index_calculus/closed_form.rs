use super::{binomial, sign_of, ParityConfig};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormFamily {
    /// Every point after the global maximum has even co-index.
    EvenTail,
    /// Every point after the global maximum has odd co-index.
    OddTail,
    /// `m = 2l + 1` with `l` odd and `l` even points after the maximum (`Index_K = 1`).
    Balanced { ell: usize },
}

/// Binomial formulas for `mu_p`; only `mu` is produced, the intermediate
/// counts have no closed form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosedForm {
    pub family: ClosedFormFamily,
    #[serde(serialize_with = "super::count_serde::vec")]
    pub mu: Vec<BigInt>,
}

/// `mu_p` in closed form when the parity multiset belongs to a known family.
///
/// - even tail: `mu_p = -C(p+m-2, m-2)`
/// - odd tail: `mu_1 = m-1`, `mu_p = (-1)^{p+1} C(p+m-2, m-2)`
/// - balanced, `m = 2l+1`: `mu_{2p-1} = 0`, `mu_{2p} = -C(p+l-1, p)`
///
/// Families are recognised from the multiset of parities since `mu` does
/// not depend on their order. Returns `None` for `m < 2` and for every
/// other pattern.
pub fn mu_closed_form(cfg: &ParityConfig) -> Option<ClosedForm> {
    let m = cfg.m();
    if m < 2 {
        return None;
    }
    let (even, odd) = cfg.tail_counts();
    let levels = 1..=cfg.max_level();
    if odd == 0 {
        let mu = levels.map(|p| -binomial(p + m - 2, m - 2)).collect();
        return Some(ClosedForm { family: ClosedFormFamily::EvenTail, mu });
    }
    if even == 0 {
        let mu = levels
            .map(|p| {
                if p == 1 {
                    BigInt::from(m - 1)
                } else {
                    sign_of(p + 1) * binomial(p + m - 2, m - 2)
                }
            })
            .collect();
        return Some(ClosedForm { family: ClosedFormFamily::OddTail, mu });
    }
    if even == odd {
        let ell = odd;
        let mu = levels
            .map(|p| {
                if p % 2 == 1 {
                    BigInt::zero()
                } else {
                    let q = p / 2;
                    -binomial(q + ell - 1, q)
                }
            })
            .collect();
        return Some(ClosedForm { family: ClosedFormFamily::Balanced { ell }, mu });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(bits: &[u8], big_n: usize) -> Option<(ClosedFormFamily, Vec<i64>)> {
        let cfg = ParityConfig::from_bits(7, bits, big_n).unwrap();
        mu_closed_form(&cfg).map(|c| (c.family, c.mu.iter().map(|v| i64::try_from(v).unwrap()).collect()))
    }

    #[test]
    fn even_tail_m4() {
        assert_eq!(closed(&[0, 0, 0, 0], 2), Some((ClosedFormFamily::EvenTail, vec![-3, -6])));
    }

    #[test]
    fn odd_tail_m4() {
        assert_eq!(closed(&[0, 1, 1, 1], 3), Some((ClosedFormFamily::OddTail, vec![3, -6, 10])));
    }

    #[test]
    fn balanced_ell_2() {
        assert_eq!(
            closed(&[0, 1, 0, 1, 0], 4),
            Some((ClosedFormFamily::Balanced { ell: 2 }, vec![0, -2, 0, -3]))
        );
    }

    #[test]
    fn absent_for_mixed_and_single() {
        assert_eq!(closed(&[0, 1, 0, 0], 3), None);
        assert_eq!(closed(&[0], 3), None);
    }
}
